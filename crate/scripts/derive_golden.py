#!/usr/bin/env python3
"""Independent exact derivation of the demo-model reference values.

Reads the recipe JSON files directly and enumerates every hidden-variable
value with `fractions.Fraction`. Shares no code with the Rust crates. Writes
`crates/core/tests/golden.json`; the Rust integration tests compare against
that file.

    python3 scripts/derive_golden.py
"""

import itertools
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
RECIPES = ROOT / "crates" / "core" / "recipes"
OUT = ROOT / "crates" / "core" / "tests" / "golden.json"

CONTEXTS = [("x", "y"), ("x", "yp"), ("xp", "y"), ("xp", "yp")]
ODD = [s for s in itertools.product([1, -1], repeat=4) if s.count(-1) % 2 == 1]
CANON = (1, 1, 1, -1)


def frac(v):
    return Fraction(v)


def load(name):
    return json.loads((RECIPES / f"{name}.json").read_text())["recipe"]


def pair_dist_product(p, ctx):
    """Context distribution of a contextual_product recipe."""
    sa, sb = ctx
    src = [[frac(w) for w in row] for row in p["source"]]
    wa = [frac(w) for w in p["instruments"][sa]]
    wb = [frac(w) for w in p["instruments"][sb]]
    dist = {}
    for l1, row in enumerate(src):
        for l2, w in enumerate(row):
            if w == 0:
                continue
            for ia, pa in enumerate(wa):
                for ib, pb in enumerate(wb):
                    key = (p["a"][sa][l1][ia], p["b"][sb][l2][ib])
                    dist[key] = dist.get(key, 0) + w * pa * pb
    return dist


def joint_product(p):
    """Joint law of (A_x, A_x', B_y, B_y') on the product of all spaces."""
    src = [[frac(w) for w in row] for row in p["source"]]
    ins = {k: [frac(w) for w in v] for k, v in p["instruments"].items()}
    joint = {}
    for l1, row in enumerate(src):
        for l2, w in enumerate(row):
            if w == 0:
                continue
            for ix, ixp, iy, iyp in itertools.product(*(range(len(ins[k])) for k in ["x", "xp", "y", "yp"])):
                m = w * ins["x"][ix] * ins["xp"][ixp] * ins["y"][iy] * ins["yp"][iyp]
                key = (p["a"]["x"][l1][ix], p["a"]["xp"][l1][ixp], p["b"]["y"][l2][iy], p["b"]["yp"][l2][iyp])
                joint[key] = joint.get(key, 0) + m
    return joint


def pair_dist_correlated(p, ctx):
    sa, sb = ctx
    src = [[frac(w) for w in row] for row in p["source"]]
    table = [[frac(w) for w in row] for row in p["instruments"][sa + sb]]
    dist = {}
    for l1, row in enumerate(src):
        for l2, w in enumerate(row):
            if w == 0:
                continue
            for ia, trow in enumerate(table):
                for ib, q in enumerate(trow):
                    key = (p["a"][sa][l1][ia], p["b"][sb][l2][ib])
                    dist[key] = dist.get(key, 0) + w * q
    return dist


def pair_dist_timetag(p, ctx, window):
    """Windowed context distribution; integer ticks as in the simulator."""
    sa, sb = ctx
    base = p["base"]["parameters"]
    src = [[frac(w) for w in row] for row in base["source"]]
    w_ticks = round(window * 10**9)
    dist = {}
    for l1, row in enumerate(src):
        for l2, w in enumerate(row):
            if w == 0:
                continue
            a, b = base["a"][sa][l1], base["b"][sb][l2]
            ta = round(p["delays"]["a"][sa][l1] * 10**9)
            tb = round(p["delays"]["b"][sb][l2] * 10**9)
            if 2 * abs(ta - tb) <= w_ticks:
                key = (a, b)
            elif ta < tb:
                key = (a, 0)
            else:
                key = (0, b)
            dist[key] = dist.get(key, 0) + w
    return dist


def all_coincidence_mass(p, window):
    base = p["base"]["parameters"]
    src = [[frac(w) for w in row] for row in base["source"]]
    w_ticks = round(window * 10**9)
    mass = Fraction(0)
    for l1, row in enumerate(src):
        for l2, w in enumerate(row):
            ok = all(
                2 * abs(round(p["delays"]["a"][sa][l1] * 10**9) - round(p["delays"]["b"][sb][l2] * 10**9)) <= w_ticks
                for sa, sb in CONTEXTS
            )
            if ok:
                mass += w
    return mass


def moments(dist):
    e = sum(w * a * b for (a, b), w in dist.items())
    ma = sum(w * a for (a, b), w in dist.items())
    mb = sum(w * b for (a, b), w in dist.items())
    coinc = sum(w for (a, b), w in dist.items() if a != 0 and b != 0)
    return e, ma, mb, coinc


def post(dist):
    c = sum(w for (a, b), w in dist.items() if a != 0 and b != 0)
    return {k: w / c for k, w in dist.items() if k[0] != 0 and k[1] != 0}


def chsh(e):
    grouped = abs(e[0] - e[1]) + abs(e[2] + e[3])
    canonical = sum(s * v for s, v in zip(CANON, e))
    smax = max(sum(s * v for s, v in zip(pat, e)) for pat in ODD)
    return grouped, canonical, smax


def eberhard(dists):
    def p(i, fa, fb):
        return sum(w for (a, b), w in dists[i].items() if fa(a) and fb(b))

    plus = lambda v: v == 1
    notp = lambda v: v != 1
    return p(0, plus, plus) - p(1, plus, notp) - p(2, notp, plus) - p(3, plus, plus)


def deltas(ms):
    """A(x), A(x'), B(y), B(y') from per-context (ma, mb)."""
    return [ms[0][0] - ms[1][0], ms[2][0] - ms[3][0], ms[0][1] - ms[2][1], ms[1][1] - ms[3][1]]


def s(x):
    return str(x)


def summarize(dists):
    raw = [moments(d) for d in dists]
    posts = [post(d) for d in dists]
    pm = [moments(d) for d in posts]
    e_raw = [m[0] for m in raw]
    e_post = [m[0] for m in pm]
    g, c, mx = chsh(e_post)
    gr, cr, mr = chsh(e_raw)
    d_post = deltas([(m[1], m[2]) for m in pm])
    d_raw = deltas([(m[1], m[2]) for m in raw])
    delta_c = sum(abs(d) for d in d_post)
    return {
        "raw_correlations": [s(v) for v in e_raw],
        "post_correlations": [s(v) for v in e_post],
        "coincidence": [s(m[3]) for m in raw],
        "post_marginals_a": [s(m[1]) for m in pm],
        "post_marginals_b": [s(m[2]) for m in pm],
        "raw_marginals_a": [s(m[1]) for m in raw],
        "raw_marginals_b": [s(m[2]) for m in raw],
        "s_grouped": s(g),
        "s_canonical": s(c),
        "s_max": s(mx),
        "s_raw_canonical": s(cr),
        "s_raw_max": s(mr),
        "signaling_post": [s(v) for v in d_post],
        "signaling_raw": [s(v) for v in d_raw],
        "delta_c": s(delta_c),
        "cbd_contextual": mx > 2 + delta_c,
        "eberhard_j": s(eberhard(dists)),
    }


def main():
    golden = {}

    r = load("demo_eq3")["parameters"]
    dists = [pair_dist_product(r, c) for c in CONTEXTS]
    g = summarize(dists)
    joint = joint_product(r)
    g["all_click_mass"] = s(sum(w for k, w in joint.items() if all(v != 0 for v in k)))
    g["joint_means"] = [s(sum(w * k[i] for k, w in joint.items())) for i in range(4)]
    golden["demo_eq3"] = g

    r = load("demo_eq5")["parameters"]
    golden["demo_eq5"] = summarize([pair_dist_correlated(r, c) for c in CONTEXTS])

    r = load("demo_eq5_malus")["parameters"]
    ang = r["angle_hook"]["angles"]
    e = [-math.cos(2 * (ang[b] - ang[a])) for a, b in CONTEXTS]
    golden["demo_eq5_malus"] = {"post_correlations_f64": e, "s_max_f64": max(sum(p * v for p, v in zip(pat, e)) for pat in ODD)}

    r = load("demo_timetag")["parameters"]
    windows = [0.1, 0.25, 0.45, 0.65, 0.85, 1.0]
    rows = []
    for w in windows:
        dists = [pair_dist_timetag(r, c, w) for c in CONTEXTS]
        row = summarize(dists)
        row["window"] = w
        row["all_coincidence_mass"] = s(all_coincidence_mass(r, w))
        rows.append(row)
    golden["demo_timetag"] = rows

    r = load("saturating_mixture")["parameters"]
    src = [[frac(w) for w in row] for row in r["source"]]
    dists = []
    for sa, sb in CONTEXTS:
        d = {}
        for l1, row in enumerate(src):
            for l2, w in enumerate(row):
                if w:
                    k = (r["a"][sa][l1], r["b"][sb][l2])
                    d[k] = d.get(k, 0) + w
        dists.append(d)
    g = summarize(dists)
    n = 1000
    tie = Fraction(math.comb(2 * n, n), 4**n)
    g["n"] = n
    g["p_s_ge_2"] = float((1 + tie) / 2)
    g["p_s_gt_2"] = float((1 - tie) / 2)
    golden["saturating_mixture"] = g

    OUT.write_text(json.dumps(golden, indent=2) + "\n")
    print(f"wrote {OUT.relative_to(ROOT)}", file=sys.stderr)


if __name__ == "__main__":
    main()
