//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion. Exits nonzero
//! if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bellsim_core::jp::{
    fine_inequalities, jp_feasible, random_local_system, JpVerdict, PairwiseSystem,
};
use bellsim_core::model::Outcome;
use bellsim_core::models::generators::{
    random_contextual_product, random_deterministic_local, random_stochastic_local, GenSizes,
};
use bellsim_core::models::{
    build_gl_coupling, chsh_optimal_angles, demo_model, quantum_correlations,
};
use bellsim_core::models::{ModelRecipe, RecipeParams};
use bellsim_core::prob::{int, parse_rational, to_f64, Prob};
use bellsim_core::stats::{
    cbd_analysis, chsh_exact, chsh_s, larsson_gill_audit, signaling_report, ContextEstimate,
    ODD_SIGN_PATTERNS,
};
use bellsim_core::{
    coupling_equalities, estimate_correlations, exact_correlations, per_row_chsh, post_select,
    run_context_protocol, run_spreadsheet_protocol, run_timeseries_protocol, violation_frequency,
    window_scan, Angles, Context, CorrelationTable, Model, ReplicationProtocol, Schedule,
    TableSource,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

// Pinned tolerances and sizes.
const LOCAL_BOUND_TOL: f64 = 1e-12;
const MC_SIGMAS: f64 = 4.0;
const SIGNALING_Z: f64 = 5.0;
const WITNESS_TOL: f64 = 1e-9;
const FINE_TOL: f64 = 1e-7;
const CBD_DELTA_TOL: f64 = 1e-12;
const SCAN_SIGMAS: f64 = 3.0;
const VIOLATION_BAND: (f64, f64) = (0.46, 0.54);
const VIOLATION_SIGMAS: f64 = 3.0;
const N_SPREADSHEET_MODELS: u64 = 1_000;
const MAX_SPREADSHEET_ROWS: u64 = 10_000;
const N_LOCAL_RECIPES: u64 = 1_000;
const N_PAIRWISE_SYSTEMS: u64 = 10_000;
const N_MC: u64 = 100_000;
const REPLICATION_SEED: u64 = 20_240_611;

type Verdict = Result<String, String>;

fn golden() -> Value {
    serde_json::from_str(include_str!("../../core/tests/golden.json")).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(
        t < limit,
        format!(
            "runtime {:.1}s exceeds {}s",
            t.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

/// Replaces no-click outcomes with `+1`, leaving a ±1 product model.
fn plus_minus_product(seed: u64) -> Model {
    let mut recipe: ModelRecipe = random_contextual_product(seed, GenSizes::default());
    if let RecipeParams::ContextualProduct(p) = &mut recipe.params {
        let fix = |t: &mut Vec<Vec<Outcome>>| {
            t.iter_mut()
                .flatten()
                .filter(|o| **o == Outcome::Zero)
                .for_each(|o| *o = Outcome::Plus)
        };
        fix(&mut p.a.x);
        fix(&mut p.a.xp);
        fix(&mut p.b.y);
        fix(&mut p.b.yp);
    }
    recipe.build().unwrap()
}

fn ac1_spreadsheet_never_violates() -> Verdict {
    let start = Instant::now();
    // Identity on all 16 rows: every odd sign pattern gives ±2.
    for v in 0..16u8 {
        let row: [Outcome; 4] = std::array::from_fn(|k| {
            if v >> (3 - k) & 1 == 1 {
                Outcome::Minus
            } else {
                Outcome::Plus
            }
        });
        let [ax, axp, by, byp] = row.map(|o| o.value() as i32);
        let products = [ax * by, ax * byp, axp * by, axp * byp];
        for signs in ODD_SIGN_PATTERNS {
            let s: i32 = products.iter().zip(signs).map(|(p, s)| p * s as i32).sum();
            ensure(
                s.abs() == 2,
                format!("row {row:?} pattern {signs:?} gives {s}"),
            )?;
        }
        ensure(
            matches!(per_row_chsh(&row), Ok(2 | -2)),
            format!("per_row_chsh on {row:?}"),
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut total_rows = 0u64;
    let mut extreme = 0i64;
    for seed in 0..N_SPREADSHEET_MODELS {
        let model = match seed % 3 {
            0 => random_deterministic_local(
                seed,
                GenSizes {
                    source: 4,
                    instrument: 1,
                },
            )
            .build()
            .unwrap(),
            1 => random_stochastic_local(
                seed,
                GenSizes {
                    source: 4,
                    instrument: 1,
                },
            )
            .build()
            .unwrap(),
            _ => build_gl_coupling(&plus_minus_product(seed)).unwrap(),
        };
        let n = rng.random_range(1..=MAX_SPREADSHEET_ROWS);
        let ds = run_spreadsheet_protocol(&model, n, seed).map_err(|e| e.to_string())?;
        let rows = ds.rows().unwrap();
        total_rows += rows.len() as u64;
        // n·S for every pattern, in integers.
        let mut sums = [0i64; 8];
        for r in rows {
            ensure(
                matches!(per_row_chsh(&r.values), Ok(2 | -2)),
                format!("model {seed} row {}", r.row),
            )?;
            let [ax, axp, by, byp] = r.values.map(|o| o.value() as i64);
            let products = [ax * by, ax * byp, axp * by, axp * byp];
            for (k, signs) in ODD_SIGN_PATTERNS.iter().enumerate() {
                sums[k] += products
                    .iter()
                    .zip(signs)
                    .map(|(p, &s)| p * s as i64)
                    .sum::<i64>();
            }
        }
        for s in sums {
            ensure(
                s.abs() <= 2 * n as i64,
                format!("model {seed}: n·S = {s} with n = {n}"),
            )?;
            extreme = extreme.max(s.abs() * 1_000_000 / n as i64);
        }
    }
    within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "{N_SPREADSHEET_MODELS} models, {total_rows} rows, max |S| = {:.6}, {:.1}s",
        extreme as f64 / 1e6,
        start.elapsed().as_secs_f64()
    ))
}

fn ac2_local_bound_exact() -> Verdict {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..N_LOCAL_RECIPES {
        let sizes = GenSizes {
            source: 5,
            instrument: 3,
        };
        let recipe = if seed % 2 == 0 {
            random_deterministic_local(seed, sizes)
        } else {
            random_stochastic_local(seed, sizes)
        };
        let ex = exact_correlations(&recipe.build().unwrap()).unwrap();
        let s = chsh_exact(&ex.raw_correlations()).max;
        let sf = to_f64(&s);
        worst = worst.max(sf);
        ensure(
            sf <= 2.0 + LOCAL_BOUND_TOL,
            format!("{} has S_max = {s}", recipe.name),
        )?;
    }
    within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "{N_LOCAL_RECIPES} recipes, largest S_max = {worst}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn ac3_half_violation() -> Verdict {
    let start = Instant::now();
    let model = demo_model("saturating_mixture").unwrap();
    let vf = violation_frequency(
        &model,
        ReplicationProtocol::Contexts,
        1_000,
        10_000,
        REPLICATION_SEED,
    )
    .map_err(|e| e.to_string())?;
    let f = vf.fraction_ge;
    let detail = format!(
        "fraction S>=2 = {f} (SE {:.4}, bound {:.4}), fraction S>2 = {}, exact P(S>=2) = {:.4}, {:.1}s",
        vf.ci_ge.se,
        0.5 + VIOLATION_SIGMAS * vf.ci_ge.se,
        vf.fraction_gt,
        golden()["saturating_mixture"]["p_s_ge_2"].as_f64().unwrap(),
        start.elapsed().as_secs_f64()
    );
    ensure(
        (VIOLATION_BAND.0..=VIOLATION_BAND.1).contains(&f),
        format!("outside band: {detail}"),
    )?;
    ensure(
        f <= 0.5 + VIOLATION_SIGMAS * vf.ci_ge.se,
        format!("above 1/2 + 3 SE: {detail}"),
    )?;
    within_time(start, Duration::from_secs(120))?;
    Ok(detail)
}

fn q(v: &Value) -> Prob {
    parse_rational(v.as_str().unwrap()).unwrap()
}

fn ac4_post_selection_violation() -> Verdict {
    let g = &golden()["demo_eq3"];
    let model = demo_model("demo_eq3").unwrap();
    let ex = exact_correlations(&model).unwrap();
    let post = ex.post_correlations().unwrap();
    let s = chsh_exact(&post).max;
    let s_raw = chsh_exact(&ex.raw_correlations()).max;
    ensure(
        s == q(&g["s_max"]),
        format!("S_max {s} differs from golden {}", g["s_max"]),
    )?;
    ensure(to_f64(&s) >= 2.2, format!("S_max {s} below 2.2"))?;
    ensure(s_raw <= int(2), format!("raw S_max {s_raw} above 2"))?;
    let ds = run_context_protocol(&model, [N_MC; 4], 4).unwrap();
    let table = estimate_correlations(&post_select(&ds).unwrap()).unwrap();
    for ctx in Context::ALL {
        let e = table.get(ctx).unwrap();
        let want = to_f64(&post[ctx.index()]);
        ensure(
            (e.correlation - want).abs() <= MC_SIGMAS * e.se_correlation + 1e-12,
            format!(
                "{ctx}: sampled {} vs exact {want}, se {}",
                e.correlation, e.se_correlation
            ),
        )?;
    }
    let mc = chsh_s(&table).unwrap();
    let dev = (mc.max - to_f64(&s)).abs();
    ensure(
        dev <= MC_SIGMAS * mc.se,
        format!("sampled S {} vs {s}, se {}", mc.max, mc.se),
    )?;
    Ok(format!(
        "exact S_max = {s}, raw S_max = {s_raw}, sampled S = {:.4} ± {:.4}",
        mc.max, mc.se
    ))
}

fn ac5_apparent_signaling() -> Verdict {
    let model = demo_model("demo_eq3").unwrap();
    let ex = exact_correlations(&model).unwrap();
    let fin = ex.signaling_deltas(true).unwrap();
    let raw = ex.signaling_deltas(false).unwrap();
    ensure(
        raw.iter().all(|d| *d == int(0)),
        format!("raw deltas not zero: {raw:?}"),
    )?;
    ensure(
        fin.iter().any(|d| *d != int(0)),
        "all post-selected deltas vanish",
    )?;
    let ds = run_context_protocol(&model, [N_MC; 4], 5).unwrap();
    let rep =
        signaling_report(&estimate_correlations(&post_select(&ds).unwrap()).unwrap()).unwrap();
    let (name, z) = rep
        .deltas
        .iter()
        .filter_map(|d| d.z.map(|z| (d.name, z)))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    ensure(z.abs() > SIGNALING_Z, format!("largest |z| = {z}"))?;
    let shown: Vec<String> = fin.iter().map(|d| d.to_string()).collect();
    Ok(format!(
        "exact post deltas [{}], raw deltas 0, sampled {name} z = {z:.1}",
        shown.join(", ")
    ))
}

fn ac6_no_post_selection_violation() -> Verdict {
    let model = demo_model("demo_eq5").unwrap();
    let ex = exact_correlations(&model).unwrap();
    for c in &ex.contexts {
        ensure(
            c.coincidence == int(1),
            format!("{} emits zeros", c.context),
        )?;
    }
    let s = chsh_exact(&ex.raw_correlations()).max;
    ensure(s > int(2), format!("S_max = {s}"))?;
    let ds = run_context_protocol(&model, [10_000; 4], 6).unwrap();
    let zeros = ds
        .pairs()
        .unwrap()
        .iter()
        .filter(|r| r.a == Outcome::Zero || r.b == Outcome::Zero)
        .count();
    ensure(zeros == 0, format!("{zeros} sampled zeros"))?;
    Ok(format!("S_max = {s}, every outcome ±1"))
}

fn ac7_coupling_equalities() -> Verdict {
    let model = demo_model("demo_eq3").unwrap();
    let r = coupling_equalities(&model, &build_gl_coupling(&model).unwrap())
        .map_err(|e| e.to_string())?;
    ensure(r.all_zero(), format!("residuals {}", r.to_json()))?;
    Ok(format!("{} residuals exactly 0", r.residuals.len()))
}

fn ac8_fine_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut feasible, mut infeasible, mut worst_residual) = (0u64, 0u64, 0f64);
    for i in 0..N_PAIRWISE_SYSTEMS {
        let sys = match i % 3 {
            0 => random_local_system(rng.random()),
            1 => {
                // Local system mixed with a PR box of a random odd pattern.
                let signs = ODD_SIGN_PATTERNS[rng.random_range(0..8)];
                let pr = PairwiseSystem::from_correlations(signs.map(f64::from));
                let local = random_local_system(rng.random());
                let t: f64 = rng.random();
                PairwiseSystem {
                    cells: std::array::from_fn(|c| {
                        std::array::from_fn(|k| t * pr.cells[c][k] + (1.0 - t) * local.cells[c][k])
                    }),
                }
            }
            _ => {
                let mut angle = || rng.random::<f64>() * std::f64::consts::PI;
                let angles = Angles {
                    x: angle(),
                    xp: angle(),
                    y: angle(),
                    yp: angle(),
                };
                PairwiseSystem::from_correlations(quantum_correlations(&angles))
            }
        };
        let r = jp_feasible(&sys).map_err(|e| e.to_string())?;
        let fine_ok = fine_inequalities(&sys.correlations())
            .iter()
            .all(|&f| f <= FINE_TOL);
        ensure(
            fine_ok == (r.verdict != JpVerdict::Infeasible),
            format!("disagreement on system {i}: {sys:?}"),
        )?;
        if r.verdict == JpVerdict::Infeasible {
            infeasible += 1;
            ensure(
                r.certificate.as_ref().is_some_and(|c| c.verify(&sys)),
                format!("bad certificate on {i}"),
            )?;
        } else {
            feasible += 1;
            let res = r.witness.unwrap().residual(&sys);
            worst_residual = worst_residual.max(res);
            ensure(res <= WITNESS_TOL, format!("witness residual {res} on {i}"))?;
        }
    }
    let pr = PairwiseSystem::from_correlations([1.0, 1.0, 1.0, -1.0]);
    ensure(
        jp_feasible(&pr).unwrap().verdict == JpVerdict::Infeasible,
        "PR box feasible",
    )?;
    let qt = PairwiseSystem::from_correlations(quantum_correlations(&chsh_optimal_angles()));
    let qs = chsh_s(&table_of(quantum_correlations(&chsh_optimal_angles())))
        .unwrap()
        .max;
    ensure(
        (qs - 2.0 * 2f64.sqrt()).abs() < 1e-12,
        format!("quantum table S = {qs}"),
    )?;
    ensure(
        jp_feasible(&qt).unwrap().verdict == JpVerdict::Infeasible,
        "2√2 table feasible",
    )?;
    within_time(start, Duration::from_secs(120))?;
    Ok(format!(
        "{N_PAIRWISE_SYSTEMS} systems ({feasible} feasible, {infeasible} infeasible) agree; \
         max witness residual {worst_residual:.1e}; PR box and 2√2 table infeasible; {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn table_of(e: [f64; 4]) -> CorrelationTable {
    CorrelationTable {
        source: TableSource::ExactFinal,
        entries: e.map(|e| Some(ContextEstimate::exact(e, 0.0, 0.0, 1.0))),
    }
}

fn ac9_window_scan() -> Verdict {
    let model = demo_model("demo_timetag").unwrap();
    let windows = [0.1, 0.25, 0.45, 0.65, 0.85, 1.0];
    let streams = run_timeseries_protocol(&model, 400_000, Schedule::Random, 2.0, 9).unwrap();
    let rows = window_scan(&streams, &windows).unwrap();
    let first = rows
        .first()
        .unwrap()
        .chsh
        .ok_or("smallest window undefined")?;
    let last = rows
        .last()
        .unwrap()
        .chsh
        .ok_or("largest window undefined")?;
    ensure(
        first.max > 2.0,
        format!("S = {} at W = {}", first.max, windows[0]),
    )?;
    ensure(
        last.max <= 2.0 + SCAN_SIGMAS * last.se,
        format!("S = {} ± {} at the largest window", last.max, last.se),
    )?;
    for p in rows.windows(2) {
        ensure(
            p[0].retained_fraction <= p[1].retained_fraction,
            format!(
                "retained {} at W={} > {} at W={}",
                p[0].retained_fraction, p[0].window, p[1].retained_fraction, p[1].window
            ),
        )?;
    }
    let fractions: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.3}", r.retained_fraction))
        .collect();
    Ok(format!(
        "S = {:.4} ± {:.4} at W = 0.1, {:.4} ± {:.4} at W = 1; retained [{}]",
        first.max,
        first.se,
        last.max,
        last.se,
        fractions.join(", ")
    ))
}

fn ac10_delta_audit() -> Verdict {
    let mut locals: Vec<Model> = (0..200u64)
        .map(|s| {
            let sizes = GenSizes::default();
            let r = if s % 2 == 0 {
                random_deterministic_local(s, sizes)
            } else {
                random_stochastic_local(s, sizes)
            };
            r.build().unwrap()
        })
        .collect();
    locals.push(demo_model("saturating_mixture").unwrap());
    for m in &locals {
        let a = larsson_gill_audit(m, None).map_err(|e| e.to_string())?;
        ensure(
            a.exact.0 == int(1) && a.exact.2 == int(2),
            format!("{}: δ = {}, bound = {}", a.model, a.delta, a.bound),
        )?;
        ensure(
            a.holds,
            format!("{}: S = {} above bound", a.model, a.s_exact),
        )?;
    }
    let eq3 =
        larsson_gill_audit(&demo_model("demo_eq3").unwrap(), None).map_err(|e| e.to_string())?;
    ensure(
        eq3.exact.0 == int(0) && eq3.exact.2 == int(4),
        format!("demo_eq3: δ = {}, bound = {}", eq3.delta, eq3.bound),
    )?;
    ensure(eq3.holds, format!("demo_eq3: S = {}", eq3.s_exact))?;
    let mut worst = int(0);
    for seed in 0..500u64 {
        let ex = exact_correlations(
            &random_contextual_product(seed, GenSizes::default())
                .build()
                .unwrap(),
        )
        .unwrap();
        for e in std::iter::once(ex.raw_correlations()).chain(ex.post_correlations()) {
            let s = chsh_exact(&e).max;
            ensure(s <= int(4), format!("product {seed}: S = {s}"))?;
            worst = worst.max(s);
        }
    }
    Ok(format!(
        "{} local models: δ = 1, bound 2, audit holds; demo_eq3: δ = {}, bound {}, S = {}; \
         500 products: max S = {worst} ≤ 4",
        locals.len(),
        eq3.delta,
        eq3.bound,
        eq3.s_exact
    ))
}

fn ac11_cbd() -> Verdict {
    let q = cbd_analysis(&table_of(quantum_correlations(&chsh_optimal_angles()))).unwrap();
    ensure(
        (q.s_odd - 2.0 * 2f64.sqrt()).abs() < 1e-12,
        format!("s_odd = {}", q.s_odd),
    )?;
    ensure(
        q.delta_c.abs() <= CBD_DELTA_TOL,
        format!("delta_c = {}", q.delta_c),
    )?;
    ensure(q.contextual, "quantum table not contextual")?;
    let z = cbd_analysis(&table_of([0.0; 4])).unwrap();
    ensure(!z.contextual, "zero table contextual")?;
    Ok(format!(
        "quantum: s_odd = {}, delta_c = {}, contextual; zero table: s_odd = {}, non-contextual",
        q.s_odd, q.delta_c, z.s_odd
    ))
}

fn bellsim(args: &[&str], threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bellsim"))
        .args(args)
        .env("BELL_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("bellsim {args:?}: {}", String::from_utf8_lossy(&out.stderr)),
    )
}

fn run_pipeline(root: &Path, configs: &Path, threads: &str) -> Result<(), String> {
    let p = |s: &str| root.join(s).to_string_lossy().into_owned();
    let c = |s: &str| configs.join(s).to_string_lossy().into_owned();
    bellsim(
        &[
            "simulate",
            "--config",
            &c("demo_eq3.json"),
            "--out",
            &p("eq3"),
        ],
        threads,
    )?;
    bellsim(
        &[
            "analyze",
            "--dataset",
            &p("eq3/raw.csv"),
            "--out",
            &p("eq3/analysis"),
            "--post-select",
            "--chsh",
            "--eberhard",
            "--nosignaling",
            "--cbd",
        ],
        threads,
    )?;
    bellsim(
        &[
            "simulate",
            "--config",
            &c("demo_eq5.json"),
            "--out",
            &p("eq5"),
        ],
        threads,
    )?;
    bellsim(
        &[
            "analyze",
            "--dataset",
            &p("eq5/raw.csv"),
            "--out",
            &p("eq5/analysis"),
            "--chsh",
            "--cbd",
        ],
        threads,
    )?;
    bellsim(
        &[
            "simulate",
            "--config",
            &c("spreadsheet_local.json"),
            "--out",
            &p("sheet"),
        ],
        threads,
    )?;
    bellsim(
        &[
            "analyze",
            "--dataset",
            &p("sheet/spreadsheet.csv"),
            "--out",
            &p("sheet/analysis"),
            "--chsh",
        ],
        threads,
    )?;
    bellsim(
        &[
            "replicate",
            "--config",
            &c("saturating_replicate.json"),
            "--out",
            &p("replicate"),
        ],
        threads,
    )?;
    bellsim(
        &[
            "window-scan",
            "--config",
            &c("timetag_scan.json"),
            "--out",
            &p("scan"),
        ],
        threads,
    )?;
    bellsim(
        &[
            "analyze",
            "--dataset",
            &p("scan/streams.csv"),
            "--window",
            "0.1",
            "--out",
            &p("scan/w01"),
            "--post-select",
            "--chsh",
            "--eberhard",
        ],
        threads,
    )?;
    bellsim(
        &["check-jp", "--table", &c("pr_box.csv"), "--out", &p("jp")],
        threads,
    )?;
    bellsim(&["report", "--out", root.to_str().unwrap()], threads)
}

fn files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn ac12_determinism() -> Verdict {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [("a", "1"), ("b", "4"), ("c", "4")];
    for (name, threads) in runs {
        run_pipeline(&dir.path().join(name), &configs, threads)?;
    }
    let reference = files(&dir.path().join("a"));
    ensure(!reference.is_empty(), "no outputs")?;
    for (name, _) in &runs[1..] {
        let other = files(&dir.path().join(name));
        ensure(
            other == reference,
            format!("run {name} wrote a different file set"),
        )?;
        for f in &reference {
            let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
            let y = std::fs::read(dir.path().join(name).join(f)).unwrap();
            ensure(x == y, format!("{} differs between runs", f.display()))?;
        }
    }
    Ok(format!(
        "{} files byte-identical across 3 runs (1 and 4 workers)",
        reference.len()
    ))
}

/// Id, description and check for one criterion.
type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 12] = [
        (
            "AC1",
            "spreadsheet data never violate CHSH",
            ac1_spreadsheet_never_violates,
        ),
        (
            "AC2",
            "local models: exact S_max <= 2",
            ac2_local_bound_exact,
        ),
        (
            "AC3",
            "saturating mixture: S >= 2 about half the time",
            ac3_half_violation,
        ),
        (
            "AC4",
            "post-selection yields S > 2 (demo_eq3)",
            ac4_post_selection_violation,
        ),
        (
            "AC5",
            "apparent signaling in final data only",
            ac5_apparent_signaling,
        ),
        (
            "AC6",
            "contextual violation without zeros (demo_eq5)",
            ac6_no_post_selection_violation,
        ),
        (
            "AC7",
            "coupling equalities hold exactly",
            ac7_coupling_equalities,
        ),
        (
            "AC8",
            "LP feasibility agrees with CHSH inequalities",
            ac8_fine_equivalence,
        ),
        ("AC9", "coincidence-window scan", ac9_window_scan),
        ("AC10", "delta-bound audit", ac10_delta_audit),
        ("AC11", "CbD sanity", ac11_cbd),
        (
            "AC12",
            "determinism across runs and worker counts",
            ac12_determinism,
        ),
    ];
    let mut failed = 0;
    for (id, title, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {id:<4} {title}: {detail} [{secs:.1}s]"),
            Err(reason) => {
                failed += 1;
                println!("[FAIL] {id:<4} {title}: {reason} [{secs:.1}s]");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
