//! Referee simulation for the KV and asymmetric KV games.
//!
//! Samples are drawn in fixed chunks of [`MC_CHUNK`], chunk `c` from its own
//! stream, and only integer win counts are reduced, so a report depends on
//! `(seed, samples)` alone.

use rand::Rng;
use rayon::prelude::*;

use super::{domain, EstimateReport};
use crate::error::{Error, Result};
use crate::kvfactory::{AsymKvGame, KvGame};
use crate::rng::{substream, StreamRng};
use crate::scenario::{
    joint_from_quantum, BobResponse, DeterministicLocalStrategy, JointDistribution, QuantumStrategy,
};

pub const MC_CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy)]
pub enum MonteCarloGame<'a> {
    /// Estimates the winning probability.
    Kv(&'a KvGame),
    /// Estimates the bias `P_win - P_lose`.
    AsymKv(&'a AsymKvGame),
}

#[derive(Debug, Clone, Copy)]
pub enum Players<'a> {
    /// Outcomes are drawn from the strategy's joint distribution; Bob
    /// observables are read as two-outcome POVMs.
    Quantum(&'a QuantumStrategy),
    Deterministic(&'a DeterministicLocalStrategy),
}

enum Sampler {
    Joint {
        cumulative: Vec<f64>,
        bob_inputs: usize,
        block: usize,
        bob_outputs: usize,
    },
    Fixed {
        alice: Vec<usize>,
        bob: Vec<usize>,
    },
}

impl Sampler {
    fn from_joint(p: &JointDistribution) -> Self {
        let block = p.alice_outputs() * p.bob_outputs();
        let mut cumulative = Vec::with_capacity(p.probs().len());
        for q in p.probs().chunks(block) {
            let mut acc = 0.0;
            for v in q {
                acc += v;
                cumulative.push(acc);
            }
        }
        Sampler::Joint {
            cumulative,
            bob_inputs: p.bob_inputs(),
            block,
            bob_outputs: p.bob_outputs(),
        }
    }

    #[inline]
    fn draw(&self, rng: &mut StreamRng, x: usize, y: usize) -> (usize, usize) {
        match self {
            Sampler::Fixed { alice, bob } => (alice[x], bob[y]),
            Sampler::Joint {
                cumulative,
                bob_inputs,
                block,
                bob_outputs,
            } => {
                let start = (x * bob_inputs + y) * block;
                let cum = &cumulative[start..start + *block];
                let u: f64 = rng.random::<f64>() * cum[*block - 1];
                let idx = cum.iter().position(|&c| u < c).unwrap_or_else(|| {
                    // Rounding at the top end: take the last outcome with mass.
                    (0..*block)
                        .rev()
                        .find(|&i| i == 0 || cum[i] > cum[i - 1])
                        .unwrap()
                });
                (idx / bob_outputs, idx % bob_outputs)
            }
        }
    }
}

fn sampler(game: MonteCarloGame<'_>, players: Players<'_>) -> Result<Sampler> {
    let (inputs_a, inputs_b, outputs_a, outputs_b) = match game {
        MonteCarloGame::Kv(g) => {
            let c = g.table().coset_count() as usize;
            (c, c, g.n(), g.n())
        }
        MonteCarloGame::AsymKv(g) => {
            let c = g.table().coset_count() as usize;
            (c, c * g.n(), g.n(), 2)
        }
    };
    let shape_err = |got: String| {
        Error::dim(format!("strategy is {got}, game needs {inputs_a}x{inputs_b} inputs, {outputs_a}/{outputs_b} outputs"))
    };
    match players {
        Players::Quantum(s) => {
            let s = if s.bob_observables().is_some() {
                s.binary_povm_bob()?
            } else {
                s.clone()
            };
            let p = joint_from_quantum(&s)?;
            if (
                p.alice_inputs(),
                p.bob_inputs(),
                p.alice_outputs(),
                p.bob_outputs(),
            ) != (inputs_a, inputs_b, outputs_a, outputs_b)
            {
                return Err(shape_err(format!(
                    "{}x{} inputs, {}/{} outputs",
                    p.alice_inputs(),
                    p.bob_inputs(),
                    p.alice_outputs(),
                    p.bob_outputs()
                )));
            }
            Ok(Sampler::from_joint(&p))
        }
        Players::Deterministic(d) => {
            let bob: Vec<usize> = match (&d.bob, game) {
                (BobResponse::Labels(l), MonteCarloGame::Kv(_)) => l.clone(),
                (BobResponse::Signs(s), MonteCarloGame::AsymKv(_)) => {
                    s.iter().map(|&v| usize::from(v < 0)).collect()
                }
                _ => return Err(Error::Mode("Bob's responses do not match the game".into())),
            };
            if d.alice.len() != inputs_a || bob.len() != inputs_b || d.alice_outputs != outputs_a {
                return Err(shape_err(format!("{}x{} inputs", d.alice.len(), bob.len())));
            }
            Ok(Sampler::Fixed {
                alice: d.alice.clone(),
                bob,
            })
        }
    }
}

fn noise_word(rng: &mut StreamRng, n: usize, eta: f64) -> u64 {
    let mut z = 0u64;
    for i in 0..n {
        if rng.random_bool(eta) {
            z |= 1 << i;
        }
    }
    z
}

fn run_chunk(game: MonteCarloGame<'_>, s: &Sampler, seed: u64, chunk: u64, len: u64) -> u64 {
    let mut rng = substream(seed, domain::MONTE_CARLO, chunk);
    let mut wins = 0u64;
    match game {
        MonteCarloGame::Kv(g) => {
            let t = g.table();
            for _ in 0..len {
                let x = rng.random_range(0..t.coset_count());
                let z = noise_word(&mut rng, g.n(), g.eta());
                let y = t.coset_of(t.representative(x) ^ z);
                let (a, b) = s.draw(&mut rng, x as usize, y as usize);
                wins += u64::from(t.element(x, a) ^ t.element(y, b) == z);
            }
        }
        MonteCarloGame::AsymKv(g) => {
            let t = g.table();
            let n = g.n();
            for _ in 0..len {
                let x = rng.random_range(0..t.coset_count());
                let z = noise_word(&mut rng, n, g.eta());
                let y = t.coset_of(t.representative(x) ^ z);
                let k = rng.random_range(0..n);
                let (a, b) = s.draw(&mut rng, x as usize, y as usize * n + k);
                let bob_sign = if b == 0 { 1.0 } else { -1.0 };
                wins += u64::from(bob_sign == g.winning_sign(x, a, z, k));
            }
        }
    }
    wins
}

/// Unbiased estimate of the winning probability (KV) or bias (asymmetric
/// KV), with `std_error = sample std / sqrt(samples)`.
pub fn monte_carlo_estimate(
    game: MonteCarloGame<'_>,
    players: Players<'_>,
    samples: u64,
    seed: u64,
) -> Result<EstimateReport> {
    if samples == 0 {
        return Err(Error::invalid("samples", "at least one sample is required"));
    }
    let s = sampler(game, players)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let wins: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(game, &s, seed, c, MC_CHUNK.min(samples - c * MC_CHUNK)))
        .sum();
    let nf = samples as f64;
    let (sum, sum_sq) = match game {
        MonteCarloGame::Kv(_) => (wins as f64, wins as f64),
        MonteCarloGame::AsymKv(_) => ((2 * wins) as f64 - nf, nf),
    };
    let estimate = sum / nf;
    let variance = if samples > 1 {
        ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EstimateReport {
        estimate,
        std_error: (variance / nf).sqrt(),
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kvfactory::{
        build_asym_kv, build_kv_game, fourier_bob_transform, kv_explicit_strategy,
    };
    use crate::scenario::BobSide;

    #[test]
    fn always_winning_deterministic_strategy() {
        let g = build_asym_kv(2, 0.0).unwrap();
        let d = DeterministicLocalStrategy::new(vec![0; 4], 4, BobResponse::Signs(vec![1; 16]))
            .unwrap();
        let r = monte_carlo_estimate(
            MonteCarloGame::AsymKv(&g),
            Players::Deterministic(&d),
            5000,
            1,
        )
        .unwrap();
        assert_eq!((r.estimate, r.std_error), (1.0, 0.0));
        let kv = build_kv_game(2, 0.0).unwrap();
        let d = DeterministicLocalStrategy::new(vec![0; 4], 4, BobResponse::Labels(vec![0; 4]))
            .unwrap();
        let r = monte_carlo_estimate(MonteCarloGame::Kv(&kv), Players::Deterministic(&d), 5000, 1)
            .unwrap();
        assert_eq!((r.estimate, r.std_error), (1.0, 0.0));
    }

    #[test]
    fn explicit_strategy_estimate_and_reproducibility() {
        let g = build_kv_game(2, 0.25).unwrap();
        let s = kv_explicit_strategy(2).unwrap();
        let r = monte_carlo_estimate(MonteCarloGame::Kv(&g), Players::Quantum(&s), 200_000, 42)
            .unwrap();
        assert!((r.estimate - 7.0 / 16.0).abs() <= 4.0 * r.std_error);
        let again = monte_carlo_estimate(MonteCarloGame::Kv(&g), Players::Quantum(&s), 200_000, 42)
            .unwrap();
        assert_eq!(r, again);
        let one = crate::solve::with_workers(Some(1), || {
            monte_carlo_estimate(MonteCarloGame::Kv(&g), Players::Quantum(&s), 200_000, 42).unwrap()
        })
        .unwrap();
        assert_eq!(r, one);
    }

    #[test]
    fn transformed_strategy_on_asym_game() {
        let g = build_asym_kv(2, 0.25).unwrap();
        let s = kv_explicit_strategy(2).unwrap();
        let obs = fourier_bob_transform(s.bob_povms().unwrap(), g.table()).unwrap();
        let t = s.with_bob(BobSide::Observables(obs)).unwrap();
        let r = monte_carlo_estimate(MonteCarloGame::AsymKv(&g), Players::Quantum(&t), 200_000, 3)
            .unwrap();
        assert!(
            (r.estimate - 7.0 / 16.0).abs() <= 4.0 * r.std_error,
            "{r:?}"
        );
    }

    #[test]
    fn coverage_over_seeded_runs() {
        let g = build_kv_game(2, 0.25).unwrap();
        let s = kv_explicit_strategy(2).unwrap();
        let hits = (0..100)
            .filter(|&seed| {
                let r = monte_carlo_estimate(
                    MonteCarloGame::Kv(&g),
                    Players::Quantum(&s),
                    10_000,
                    seed,
                )
                .unwrap();
                (r.estimate - 7.0 / 16.0).abs() <= 5.0 * r.std_error
            })
            .count();
        assert!(hits >= 99, "{hits} of 100 runs within 5 standard errors");
    }

    #[test]
    fn zero_samples_rejected() {
        let g = build_kv_game(2, 0.25).unwrap();
        let s = kv_explicit_strategy(2).unwrap();
        assert!(monte_carlo_estimate(MonteCarloGame::Kv(&g), Players::Quantum(&s), 0, 1).is_err());
    }
}
