//! Seeded random recipes with small exact rational weights, for property
//! tests and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::recipe::*;
use crate::model::Outcome;
use crate::prob::{format_rational, rat, WeightValue};

/// Size limits for generated models.
#[derive(Clone, Copy, Debug)]
pub struct GenSizes {
    pub source: usize,
    pub instrument: usize,
}

impl Default for GenSizes {
    fn default() -> Self {
        GenSizes {
            source: 3,
            instrument: 3,
        }
    }
}

/// `n` weights `k_i / Σk` with `k_i ∈ 0..=4`, at least one positive.
fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<WeightValue> {
    let mut ks: Vec<i64> = (0..n).map(|_| rng.random_range(0..=4)).collect();
    if ks.iter().all(|&k| k == 0) {
        let i = rng.random_range(0..n);
        ks[i] = 1;
    }
    let total: i64 = ks.iter().sum();
    ks.into_iter()
        .map(|k| WeightValue::Exact(format_rational(&rat(k, total))))
        .collect()
}

fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let flat = weights(rng, rows * cols);
    flat.chunks(cols).map(<[WeightValue]>::to_vec).collect()
}

fn sign(rng: &mut ChaCha8Rng) -> Outcome {
    if rng.random::<bool>() {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

fn ternary(rng: &mut ChaCha8Rng) -> Outcome {
    Outcome::ALL[rng.random_range(0..3)]
}

fn size(rng: &mut ChaCha8Rng, max: usize) -> usize {
    rng.random_range(1..=max.max(1))
}

pub fn random_deterministic_local(seed: u64, sizes: GenSizes) -> ModelRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2) = (size(&mut rng, sizes.source), size(&mut rng, sizes.source));
    let source = matrix(&mut rng, n1, n2);
    let mut col = |n: usize| (0..n).map(|_| sign(&mut rng)).collect::<Vec<_>>();
    let a = AlicePair {
        x: col(n1),
        xp: col(n1),
    };
    let b = BobPair {
        y: col(n2),
        yp: col(n2),
    };
    ModelRecipe {
        name: format!("random_deterministic_{seed}"),
        params: RecipeParams::DeterministicLocal(DeterministicLocalParams { source, a, b }),
    }
}

pub fn random_stochastic_local(seed: u64, sizes: GenSizes) -> ModelRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2) = (size(&mut rng, sizes.source), size(&mut rng, sizes.source));
    let source = matrix(&mut rng, n1, n2);
    let mut col = |n: usize| {
        (0..n)
            .map(|_| {
                let k = rng.random_range(0..=4);
                [
                    WeightValue::Exact(format_rational(&rat(k, 4))),
                    WeightValue::Exact(format_rational(&rat(4 - k, 4))),
                ]
            })
            .collect::<Vec<_>>()
    };
    let a = AlicePair {
        x: col(n1),
        xp: col(n1),
    };
    let b = BobPair {
        y: col(n2),
        yp: col(n2),
    };
    ModelRecipe {
        name: format!("random_stochastic_{seed}"),
        params: RecipeParams::StochasticLocal(StochasticLocalParams { source, a, b }),
    }
}

pub fn random_contextual_product(seed: u64, sizes: GenSizes) -> ModelRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2) = (size(&mut rng, sizes.source), size(&mut rng, sizes.source));
    let source = matrix(&mut rng, n1, n2);
    let k: [usize; 4] = std::array::from_fn(|_| size(&mut rng, sizes.instrument));
    let instruments = InstrumentWeights {
        x: weights(&mut rng, k[0]),
        xp: weights(&mut rng, k[1]),
        y: weights(&mut rng, k[2]),
        yp: weights(&mut rng, k[3]),
    };
    let mut table = |n: usize, m: usize| -> Vec<Vec<Outcome>> {
        (0..n)
            .map(|_| (0..m).map(|_| ternary(&mut rng)).collect())
            .collect()
    };
    let a = AlicePair {
        x: table(n1, k[0]),
        xp: table(n1, k[1]),
    };
    let b = BobPair {
        y: table(n2, k[2]),
        yp: table(n2, k[3]),
    };
    ModelRecipe {
        name: format!("random_product_{seed}"),
        params: RecipeParams::ContextualProduct(ContextualProductParams {
            source,
            instruments,
            a,
            b,
        }),
    }
}

pub fn random_contextual_correlated(seed: u64, sizes: GenSizes) -> ModelRecipe {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2) = (size(&mut rng, sizes.source), size(&mut rng, sizes.source));
    let source = matrix(&mut rng, n1, n2);
    let k: [usize; 4] = std::array::from_fn(|_| size(&mut rng, sizes.instrument));
    let instruments = ContextQuad {
        xy: matrix(&mut rng, k[0], k[2]),
        xyp: matrix(&mut rng, k[0], k[3]),
        xpy: matrix(&mut rng, k[1], k[2]),
        xpyp: matrix(&mut rng, k[1], k[3]),
    };
    let mut table = |n: usize, m: usize| -> Vec<Vec<Outcome>> {
        (0..n)
            .map(|_| (0..m).map(|_| sign(&mut rng)).collect())
            .collect()
    };
    let a = AlicePair {
        x: table(n1, k[0]),
        xp: table(n1, k[1]),
    };
    let b = BobPair {
        y: table(n2, k[2]),
        yp: table(n2, k[3]),
    };
    ModelRecipe {
        name: format!("random_correlated_{seed}"),
        params: RecipeParams::ContextualCorrelated(ContextualCorrelatedParams {
            source,
            instruments: Some(instruments),
            angle_hook: None,
            a,
            b,
        }),
    }
}

/// Deterministic local base with delays drawn from `{0, 0.05, …, 0.45}`.
pub fn random_timetag(seed: u64, sizes: GenSizes) -> ModelRecipe {
    let base = random_deterministic_local(seed, sizes);
    let (n1, n2) = match &base.params {
        RecipeParams::DeterministicLocal(p) => (p.a.x.len(), p.b.y.len()),
        _ => unreachable!(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6d65);
    let mut col = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(0..10) as f64 * 0.05)
            .collect::<Vec<_>>()
    };
    let delays = TimeTagDelays {
        a: AlicePair {
            x: col(n1),
            xp: col(n1),
        },
        b: BobPair {
            y: col(n2),
            yp: col(n2),
        },
    };
    ModelRecipe {
        name: format!("random_timetag_{seed}"),
        params: RecipeParams::TimeTag(TimeTagParams {
            base: Box::new(base),
            delays,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_recipes_build() {
        for seed in 0..40 {
            let s = GenSizes::default();
            for r in [
                random_deterministic_local(seed, s),
                random_stochastic_local(seed, s),
                random_contextual_product(seed, s),
                random_contextual_correlated(seed, s),
                random_timetag(seed, s),
            ] {
                r.build().unwrap_or_else(|e| panic!("{}: {e}", r.name));
            }
        }
    }
}
