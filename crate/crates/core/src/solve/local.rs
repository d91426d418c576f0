//! Alternating best-response ascent over deterministic strategies.

use rand::Rng;
use rayon::prelude::*;

use super::{domain, improves, ClassicalOutcome, SearchConfig};
use crate::error::{Error, Result};
use crate::gf2kit::walsh_hadamard;
use crate::kvfactory::AsymKvGame;
use crate::numeric::NeumaierSum;
use crate::rng::substream;
use crate::scenario::{
    AsymmetricBellFunctional, BobResponse, DeterministicLocalStrategy, NonlocalGame,
};

/// Largest `l` for the transform-based asymmetric KV objective (`2^n`
/// buffers).
pub const FAST_ASYM_MAX_L: u32 = 4;

/// An objective linear in Bob's deterministic choices, with exact best
/// responses on both sides.
pub trait LocalObjective: Sync {
    fn alice_inputs(&self) -> usize;
    fn alice_outputs(&self) -> usize;
    /// Bob's best response to an Alice map, with the resulting value.
    fn bob_best(&self, alice: &[usize]) -> (BobResponse, f64);
    /// Alice's best map against a fixed Bob response.
    fn alice_best(&self, bob: &BobResponse) -> Vec<usize>;
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, v) in values.enumerate() {
        if v > best.0 {
            best = (v, i);
        }
    }
    best.1
}

fn signs_of(bob: &BobResponse) -> &[i8] {
    match bob {
        BobResponse::Signs(s) => s,
        BobResponse::Labels(_) => panic!("bias objectives use sign responses"),
    }
}

fn labels_of(bob: &BobResponse) -> &[usize] {
    match bob {
        BobResponse::Labels(l) => l,
        BobResponse::Signs(_) => panic!("game objectives use label responses"),
    }
}

fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// `|<M, E>|` with dichotomic Bob, for any functional.
pub struct FunctionalObjective<'a>(pub &'a AsymmetricBellFunctional);

impl LocalObjective for FunctionalObjective<'_> {
    fn alice_inputs(&self) -> usize {
        self.0.alice_inputs()
    }

    fn alice_outputs(&self) -> usize {
        self.0.outputs()
    }

    fn bob_best(&self, alice: &[usize]) -> (BobResponse, f64) {
        let m = self.0;
        let sums: Vec<f64> = (0..m.bob_inputs())
            .into_par_iter()
            .map(|y| {
                alice
                    .iter()
                    .enumerate()
                    .map(|(x, &a)| m.coeff(x, y, a))
                    .collect::<NeumaierSum>()
                    .value()
            })
            .collect();
        let value = sums
            .iter()
            .map(|s| s.abs())
            .collect::<NeumaierSum>()
            .value();
        (
            BobResponse::Signs(sums.iter().map(|&s| sign(s)).collect()),
            value,
        )
    }

    fn alice_best(&self, bob: &BobResponse) -> Vec<usize> {
        let m = self.0;
        let signs = signs_of(bob);
        (0..m.alice_inputs())
            .into_par_iter()
            .map(|x| {
                argmax_first((0..m.outputs()).map(|a| {
                    signs
                        .iter()
                        .enumerate()
                        .map(|(y, &s)| f64::from(s) * m.coeff(x, y, a))
                        .collect::<NeumaierSum>()
                        .value()
                }))
            })
            .collect()
    }
}

/// Winning probability of a game.
pub struct GameObjective<'a>(pub &'a NonlocalGame);

impl LocalObjective for GameObjective<'_> {
    fn alice_inputs(&self) -> usize {
        self.0.alice_inputs()
    }

    fn alice_outputs(&self) -> usize {
        self.0.alice_outputs()
    }

    fn bob_best(&self, alice: &[usize]) -> (BobResponse, f64) {
        let g = self.0;
        let per_y: Vec<(usize, f64)> = (0..g.bob_inputs())
            .into_par_iter()
            .map(|y| {
                let scores: Vec<f64> = (0..g.bob_outputs())
                    .map(|b| {
                        alice
                            .iter()
                            .enumerate()
                            .map(|(x, &a)| g.weight(x, y, a, b))
                            .collect::<NeumaierSum>()
                            .value()
                    })
                    .collect();
                let b = argmax_first(scores.iter().copied());
                (b, scores[b])
            })
            .collect();
        let value = per_y.iter().map(|p| p.1).collect::<NeumaierSum>().value();
        (
            BobResponse::Labels(per_y.into_iter().map(|p| p.0).collect()),
            value,
        )
    }

    fn alice_best(&self, bob: &BobResponse) -> Vec<usize> {
        let g = self.0;
        let labels = labels_of(bob);
        (0..g.alice_inputs())
            .into_par_iter()
            .map(|x| {
                argmax_first((0..g.alice_outputs()).map(|a| {
                    labels
                        .iter()
                        .enumerate()
                        .map(|(y, &b)| g.weight(x, y, a, b))
                        .collect::<NeumaierSum>()
                        .value()
                }))
            })
            .collect()
    }
}

/// Asymmetric KV bias through transforms over `{0,1}^n`.
///
/// Bob's coefficient at `([y], k)` is the transform over labels of
/// `W = P * 1_S` restricted to `[y]`, where `S` holds Alice's answers; Alice's
/// scores are `P * G` with `G` the per-coset transform of Bob's signs. Both
/// convolutions use `hat P(s) = (1 - 2 eta)^|s|`.
pub struct AsymKvObjective<'a> {
    game: &'a AsymKvGame,
    noise_hat: Vec<f64>,
}

impl<'a> AsymKvObjective<'a> {
    pub fn new(game: &'a AsymKvGame) -> Result<Self> {
        if game.l() > FAST_ASYM_MAX_L {
            return Err(Error::Resource(format!(
                "transform-based evaluation needs 2^n buffers; limited to l <= {FAST_ASYM_MAX_L}"
            )));
        }
        let mu = 1.0 - 2.0 * game.eta();
        let noise_hat = (0..1u64 << game.n())
            .map(|s| mu.powi(s.count_ones() as i32))
            .collect();
        Ok(Self { game, noise_hat })
    }

    /// `P * f`, in place.
    fn convolve_noise(&self, f: &mut [f64]) {
        walsh_hadamard(f);
        for (v, h) in f.iter_mut().zip(&self.noise_hat) {
            *v *= h;
        }
        walsh_hadamard(f);
        let scale = 0.5f64.powi(self.game.n() as i32);
        for v in f.iter_mut() {
            *v *= scale;
        }
    }

    /// Bob's coefficients `c(y, k)` against an Alice map, indexed `y * n + k`.
    pub fn bob_coefficients(&self, alice: &[usize]) -> Vec<f64> {
        let t = self.game.table();
        let n = t.n();
        let mut w = vec![0.0; 1usize << n];
        for (x, &a) in alice.iter().enumerate() {
            w[t.element(x as u64, a) as usize] += 1.0;
        }
        self.convolve_noise(&mut w);
        let scale = 0.5f64.powi(n as i32);
        let mut out = vec![0.0; t.coset_count() as usize * n];
        for (y, row) in out.chunks_mut(n).enumerate() {
            for (j, r) in row.iter_mut().enumerate() {
                *r = w[t.element(y as u64, j) as usize];
            }
            walsh_hadamard(row);
            for r in row.iter_mut() {
                *r *= scale;
            }
        }
        out
    }
}

impl LocalObjective for AsymKvObjective<'_> {
    fn alice_inputs(&self) -> usize {
        self.game.table().coset_count() as usize
    }

    fn alice_outputs(&self) -> usize {
        self.game.n()
    }

    fn bob_best(&self, alice: &[usize]) -> (BobResponse, f64) {
        let c = self.bob_coefficients(alice);
        let value = c.iter().map(|v| v.abs()).collect::<NeumaierSum>().value();
        (
            BobResponse::Signs(c.iter().map(|&v| sign(v)).collect()),
            value,
        )
    }

    fn alice_best(&self, bob: &BobResponse) -> Vec<usize> {
        let signs = signs_of(bob);
        let t = self.game.table();
        let n = t.n();
        let mut g = vec![0.0; 1usize << n];
        let mut row = vec![0.0; n];
        for y in 0..t.coset_count() {
            for (k, r) in row.iter_mut().enumerate() {
                *r = f64::from(signs[y as usize * n + k]);
            }
            walsh_hadamard(&mut row);
            for (j, r) in row.iter().enumerate() {
                g[t.element(y, j) as usize] = *r;
            }
        }
        self.convolve_noise(&mut g);
        (0..t.coset_count())
            .map(|x| argmax_first((0..n).map(|a| g[t.element(x, a) as usize])))
            .collect()
    }
}

/// Bias of an Alice map against Bob's best response in the asymmetric KV
/// game, for `l <= 4`.
pub fn asym_kv_bias_of_map(game: &AsymKvGame, alice: &[usize]) -> Result<f64> {
    let obj = AsymKvObjective::new(game)?;
    if alice.len() != obj.alice_inputs() {
        return Err(Error::dim(format!(
            "{} answers for {} Alice inputs",
            alice.len(),
            obj.alice_inputs()
        )));
    }
    Ok(obj.bob_best(alice).1)
}

struct Ascent {
    alice: Vec<usize>,
    bob: BobResponse,
    value: f64,
    trace: Vec<f64>,
}

fn ascend(obj: &dyn LocalObjective, start: Vec<usize>, iterations: usize) -> Ascent {
    let (bob, value) = obj.bob_best(&start);
    let mut cur = Ascent {
        alice: start,
        bob,
        value,
        trace: vec![value],
    };
    for _ in 1..iterations {
        let alice = obj.alice_best(&cur.bob);
        let (bob, value) = obj.bob_best(&alice);
        if !improves(value, cur.value) {
            break;
        }
        cur.alice = alice;
        cur.bob = bob;
        cur.value = value;
        cur.trace.push(value);
    }
    cur
}

/// Best of `config.restarts` random starts.
pub fn classical_local_search(
    obj: &dyn LocalObjective,
    config: &SearchConfig,
) -> Result<ClassicalOutcome> {
    classical_local_search_from(obj, config, &[])
}

/// Like [`classical_local_search`], with extra starting maps tried before
/// the random ones.
pub fn classical_local_search_from(
    obj: &dyn LocalObjective,
    config: &SearchConfig,
    starts: &[Vec<usize>],
) -> Result<ClassicalOutcome> {
    config.validate()?;
    let (n, k) = (obj.alice_inputs(), obj.alice_outputs());
    if let Some(s) = starts
        .iter()
        .find(|s| s.len() != n || s.iter().any(|&a| a >= k))
    {
        return Err(Error::dim(format!(
            "starting map of length {} does not fit {n} inputs / {k} outputs",
            s.len()
        )));
    }
    let mut all: Vec<Vec<usize>> = starts.to_vec();
    for r in 0..config.restarts {
        let mut rng = substream(config.seed, domain::LOCAL, r as u64);
        all.push((0..n).map(|_| rng.random_range(0..k)).collect());
    }
    let runs: Vec<Ascent> = config.install(|| {
        all.into_par_iter()
            .map(|s| ascend(obj, s, config.iterations))
            .collect()
    })?;
    let evaluated = runs.iter().map(|r| r.trace.len() as u64).sum();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate().skip(1) {
        if improves(r.value, runs[best].value) {
            best = i;
        }
    }
    let Ascent {
        alice,
        bob,
        value,
        trace,
    } = runs.into_iter().nth(best).unwrap();
    Ok(ClassicalOutcome {
        value,
        signed_value: value,
        strategy: DeterministicLocalStrategy::new(alice, k, bob)?,
        exact: false,
        evaluated,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kvfactory::{build_asym_kv, build_kv_game};
    use crate::rng::stream;
    use crate::scenario::{correlation_from_deterministic, evaluate_functional};
    use crate::solve::{classical_bias_exact, classical_value_exact};

    #[test]
    fn zero_functional() {
        let m = AsymmetricBellFunctional::dense(3, 2, 2, vec![0.0; 12]).unwrap();
        let r =
            classical_local_search(&FunctionalObjective(&m), &SearchConfig::new(3, 10, 1)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(!r.exact);
    }

    #[test]
    fn asym_kv_l2_search_reaches_exact_value() {
        let g = build_asym_kv(2, 0.25).unwrap();
        let exact = classical_bias_exact(g.functional()).unwrap().value;
        let cfg = SearchConfig::new(100, 50, 7);
        let generic = classical_local_search(&FunctionalObjective(g.functional()), &cfg).unwrap();
        let fast = classical_local_search(&AsymKvObjective::new(&g).unwrap(), &cfg).unwrap();
        assert!((generic.value - exact).abs() < 1e-12);
        assert!((fast.value - exact).abs() < 1e-12);
    }

    #[test]
    fn kv_game_search_reaches_exact_value() {
        let g = build_kv_game(2, 0.25).unwrap().to_game().unwrap();
        let exact = classical_value_exact(&g).unwrap().value;
        let r = classical_local_search(&GameObjective(&g), &SearchConfig::new(50, 50, 3)).unwrap();
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn trace_is_non_decreasing_and_reproducible() {
        let g = build_asym_kv(3, 0.2).unwrap();
        let obj = AsymKvObjective::new(&g).unwrap();
        let cfg = SearchConfig::new(8, 100, 99);
        let a = classical_local_search(&obj, &cfg).unwrap();
        assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
        let b = classical_local_search(
            &obj,
            &SearchConfig {
                workers: Some(1),
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn search_never_exceeds_exact() {
        let mut rng = stream(31, 0);
        for _ in 0..20 {
            let coeffs = (0..4 * 5 * 3)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let m = AsymmetricBellFunctional::dense(4, 5, 3, coeffs).unwrap();
            let exact = classical_bias_exact(&m).unwrap().value;
            let r = classical_local_search(&FunctionalObjective(&m), &SearchConfig::new(5, 20, 1))
                .unwrap();
            assert!(r.value <= exact + 1e-12);
        }
    }

    #[test]
    fn fast_objective_agrees_with_generic() {
        let mut rng = stream(17, 0);
        for l in 2..=3 {
            let g = build_asym_kv(l, 0.15).unwrap();
            let fast = AsymKvObjective::new(&g).unwrap();
            let slow = FunctionalObjective(g.functional());
            for _ in 0..5 {
                let alice: Vec<usize> = (0..fast.alice_inputs())
                    .map(|_| rng.random_range(0..g.n()))
                    .collect();
                let (bf, vf) = fast.bob_best(&alice);
                let (bs, vs) = slow.bob_best(&alice);
                assert!((vf - vs).abs() < 1e-12);
                let c = fast.bob_coefficients(&alice);
                let coeff_gap = c.iter().enumerate().all(|(yk, &v)| {
                    let s: f64 = alice
                        .iter()
                        .enumerate()
                        .map(|(x, &a)| g.functional().coeff(x, yk, a))
                        .sum();
                    (v - s).abs() < 1e-12
                });
                assert!(coeff_gap);
                // Signs can differ only where the coefficient is numerically zero.
                let (sf, ss) = (signs_of(&bf), signs_of(&bs));
                assert!(sf
                    .iter()
                    .zip(ss)
                    .zip(&c)
                    .all(|((a, b), v)| a == b || v.abs() < 1e-12));
                let random_signs: Vec<i8> = (0..c.len())
                    .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                    .collect();
                let bob = BobResponse::Signs(random_signs);
                let (af, as_) = (fast.alice_best(&bob), slow.alice_best(&bob));
                let score = |al: &[usize]| {
                    let s =
                        DeterministicLocalStrategy::new(al.to_vec(), g.n(), bob.clone()).unwrap();
                    evaluate_functional(
                        g.functional(),
                        &correlation_from_deterministic(&s.into()).unwrap(),
                    )
                    .unwrap()
                };
                assert!((score(&af) - score(&as_)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn structured_strategy_bias_is_one_minus_eta_to_the_l() {
        for l in 2..=4 {
            for eta in [0.1, 0.25, 0.4] {
                let g = build_asym_kv(l, eta).unwrap();
                let alice = vec![0; g.table().coset_count() as usize];
                let obj = AsymKvObjective::new(&g).unwrap();
                let c = obj.bob_coefficients(&alice);
                // Bob answering +1 everywhere.
                let all_plus: f64 = c.iter().sum();
                assert!(
                    (all_plus - (1.0 - eta).powi(l as i32)).abs() < 1e-12,
                    "l={l} eta={eta}"
                );
                assert!(asym_kv_bias_of_map(&g, &alice).unwrap() >= all_plus - 1e-12);
            }
        }
    }

    #[test]
    fn fast_path_limit() {
        let g = build_asym_kv(5, 0.25).unwrap();
        assert!(matches!(AsymKvObjective::new(&g), Err(Error::Resource(_))));
    }
}
