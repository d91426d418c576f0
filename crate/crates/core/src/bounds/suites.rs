//! Seeded randomized suites behind the `check` subcommands. Case `i` draws
//! from its own stream, so results do not depend on the worker count.

use rand::Rng;
use rayon::prelude::*;

use super::{
    appendix_b_classical_estimate_check, appendix_b_identity_check, dimension_probe_with,
    factor_two_check, parseval_claim_check, CheckOutcome, GrothendieckConstants, SEE_SAW_TOL,
};
use crate::error::{Error, Result};
use crate::gf2kit::build_coset_table;
use crate::kvfactory::{build_asym_kv, fourier_bob_transform, kv_explicit_strategy};
use crate::numeric::{random_observable, random_povm, random_unit_vector};
use crate::rng::{substream, StreamRng};
use crate::scenario::{
    AsymmetricBellFunctional, BobSide, NonlocalGame, QuantumStrategy, SharedState,
};
use crate::solve::{classical_bias_exact, domain, see_saw_lower_bound, SearchConfig, SeeSawTarget};

/// Each suite owns a block of stream indices.
const BLOCK: u64 = 1 << 32;

fn case_rng(seed: u64, suite: u64, case: usize) -> StreamRng {
    substream(seed, domain::BOUNDS, suite * BLOCK + case as u64)
}

fn see_saw_config(seed: u64, case: usize) -> SearchConfig {
    SearchConfig::new(
        4,
        100,
        seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(case as u64),
    )
}

/// Pure complex state, random Alice POVMs and Bob observables with
/// spectrum in `[-1, 1]`. `shape` is `(N, N', K)`.
pub fn random_strategy<R: Rng + ?Sized>(
    rng: &mut R,
    shape: (usize, usize, usize),
    dims: (usize, usize),
) -> Result<QuantumStrategy> {
    let (n, np, k) = shape;
    let (da, db) = dims;
    let psi = random_unit_vector(rng, da * db);
    let alice = (0..n).map(|_| random_povm(rng, da, k)).collect();
    let bob = (0..np).map(|_| random_observable(rng, db)).collect();
    QuantumStrategy::new(
        da,
        db,
        SharedState::Pure(psi),
        alice,
        BobSide::Observables(bob),
    )
}

fn random_functional(
    rng: &mut StreamRng,
    n: usize,
    np: usize,
    k: usize,
    nonnegative: bool,
) -> Result<AsymmetricBellFunctional> {
    let lo = if nonnegative { 0.0 } else { -1.0 };
    let c = (0..n * np * k).map(|_| rng.random_range(lo..1.0)).collect();
    AsymmetricBellFunctional::dense(n, np, k, c)
}

fn require_cases(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::invalid(
            "suite size",
            "at least one case is required",
        ));
    }
    Ok(())
}

/// Random nonnegative functionals (`N, N' <= 4`, `K <= 3`): the see-saw
/// value at local dimensions up to 3 never exceeds the exact classical
/// bias by more than [`SEE_SAW_TOL`].
pub fn lemma1_suite(count: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    require_cases(count)?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 0, i);
            let (n, np, k) = (
                rng.random_range(1..=4),
                rng.random_range(1..=4),
                rng.random_range(1..=3),
            );
            let dims = (rng.random_range(1..=3), rng.random_range(1..=3));
            let m = random_functional(&mut rng, n, np, k, true)?;
            let classical = classical_bias_exact(&m)?.value;
            let q = see_saw_lower_bound(
                SeeSawTarget::Functional(&m),
                dims,
                &see_saw_config(seed, i),
                None,
            )?;
            Ok(CheckOutcome::at_most(
                q.value,
                classical,
                SEE_SAW_TOL,
                format!(
                    "case {i}: nonnegative {n}x{np}x{k}, see-saw {}x{} vs exact classical",
                    dims.0, dims.1
                ),
            ))
        })
        .collect()
}

fn random_binary_game(rng: &mut StreamRng) -> Result<NonlocalGame> {
    let (n, np, ka) = (
        rng.random_range(1..=3),
        rng.random_range(1..=3),
        rng.random_range(1..=3),
    );
    let raw: Vec<f64> = (0..n * np).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let question: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let mut weights = Vec::with_capacity(n * np * ka * 2);
    for pi in &question {
        for _ in 0..ka * 2 {
            weights.push(if rng.random_bool(0.5) { *pi } else { 0.0 });
        }
    }
    NonlocalGame::dense((n, np, ka, 2), question, weights)
}

/// Random binary-Bob predicate games (`N, N' <= 3`, `K <= 3`) with see-saw at
/// dimensions up to 3, then the asymmetric KV game at `l = 2` from the
/// transformed explicit strategy at dimensions `(4, 4)`.
pub fn corollary1_suite(count: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    require_cases(count)?;
    let mut out: Vec<CheckOutcome> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 1, i);
            let game = random_binary_game(&mut rng)?;
            let dims = (rng.random_range(1..=3), rng.random_range(1..=3));
            let mut o = factor_two_check(&game, dims, &see_saw_config(seed, i), None)?;
            o.context = format!("case {i}: {}", o.context);
            Ok(o)
        })
        .collect::<Result<_>>()?;

    let asym = build_asym_kv(2, 0.25)?;
    let game = asym.to_game()?;
    let explicit = kv_explicit_strategy(2)?;
    let obs = fourier_bob_transform(
        explicit
            .bob_povms()
            .expect("explicit strategy has POVM Bob"),
        asym.table(),
    )?;
    let start = explicit
        .with_bob(BobSide::Observables(obs))?
        .binary_povm_bob()?;
    let mut o = factor_two_check(&game, (4, 4), &see_saw_config(seed, count), Some(&start))?;
    o.context = format!("asymmetric KV l=2 eta=0.25: {}", o.context);
    out.push(o);
    Ok(out)
}

/// `pairs` random `(M, strategy)` pairs (`N, N' <= 3`, `K` cycling through
/// 2..=4, dimensions up to 3) for the `M'` identity, then the sampled
/// classical estimate on a random 3x3x3 functional and a 3x3x2 one.
pub fn appendix_b_suite(pairs: usize, samples: u64, seed: u64) -> Result<Vec<CheckOutcome>> {
    require_cases(pairs)?;
    let mut out: Vec<CheckOutcome> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 2, i);
            let k = 2 + i % 3;
            let (n, np) = (rng.random_range(1..=3), rng.random_range(1..=3));
            let dims = (rng.random_range(1..=3), rng.random_range(1..=3));
            let m = random_functional(&mut rng, n, np, k, false)?;
            let s = random_strategy(&mut rng, (n, np, k), dims)?;
            let mut o = appendix_b_identity_check(&m, &s)?;
            o.context = format!("case {i}: {}", o.context);
            Ok(o)
        })
        .collect::<Result<_>>()?;
    for (j, k) in [3usize, 2].into_iter().enumerate() {
        let mut rng = case_rng(seed, 3, j);
        let m = random_functional(&mut rng, 3, 3, k, false)?;
        out.extend(
            appendix_b_classical_estimate_check(&m, samples, seed.wrapping_add(j as u64))?
                .outcomes(),
        );
    }
    Ok(out)
}

/// `per_level` uniform random maps `E([y],k)` in `[-1, 1]` for every `l` in
/// `levels`; one claim and one identity record per level, each for the
/// worst map.
pub fn parseval_suite(levels: &[u32], per_level: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    require_cases(per_level)?;
    let mut out = Vec::new();
    for &l in levels {
        let table = build_coset_table(l)?;
        let len = table.coset_count() as usize * table.n();
        let checks = (0..per_level)
            .into_par_iter()
            .map(|i| {
                let mut rng = case_rng(seed, 4 + u64::from(l), i);
                let e: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
                parseval_claim_check(&e, &table)
            })
            .collect::<Result<Vec<_>>>()?;
        let claim = checks
            .iter()
            .map(|c| &c.claim)
            .min_by(|a, b| a.slack.total_cmp(&b.slack))
            .cloned()
            .expect("at least one case");
        let identity = checks
            .iter()
            .map(|c| &c.identity)
            .max_by(|a, b| a.slack.abs().total_cmp(&b.slack.abs()))
            .cloned()
            .expect("at least one case");
        let failed = checks.iter().filter(|c| !c.passed()).count();
        for mut o in [claim, identity] {
            o.context = format!("{}, worst of {per_level} maps, {failed} failing", o.context);
            out.push(o);
        }
    }
    Ok(out)
}

/// Random functionals (`N, N' <= 3`, `K <= 3`) against a random strategy and
/// a see-saw optimized one at dimensions up to 4, then the transformed
/// explicit strategy on the asymmetric KV functional at `l = 2`.
pub fn dimension_suite(count: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    require_cases(count)?;
    let constants = GrothendieckConstants::KNOWN;
    let nested: Vec<Vec<CheckOutcome>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, 20, i);
            let (n, np, k) = (
                rng.random_range(1..=3),
                rng.random_range(1..=3),
                rng.random_range(1..=3),
            );
            let dims = (rng.random_range(1..=4), rng.random_range(1..=4));
            let m = random_functional(&mut rng, n, np, k, false)?;
            let bc = classical_bias_exact(&m)?.value;
            let s = random_strategy(&mut rng, (n, np, k), dims)?;
            let q = see_saw_lower_bound(
                SeeSawTarget::Functional(&m),
                dims,
                &see_saw_config(seed, i),
                None,
            )?;
            let mut a = dimension_probe_with(&m, &s, &constants, bc)?;
            a.context = format!("case {i} random: {}", a.context);
            let mut b = dimension_probe_with(&m, &q.strategy, &constants, bc)?;
            b.context = format!("case {i} see-saw: {}", b.context);
            Ok(vec![a, b])
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<CheckOutcome> = nested.into_iter().flatten().collect();

    let asym = build_asym_kv(2, 0.25)?;
    let explicit = kv_explicit_strategy(2)?;
    let obs = fourier_bob_transform(
        explicit
            .bob_povms()
            .expect("explicit strategy has POVM Bob"),
        asym.table(),
    )?;
    let t = explicit.with_bob(BobSide::Observables(obs))?;
    let m = asym.dense_functional()?;
    let bc = classical_bias_exact(&m)?.value;
    let mut o = dimension_probe_with(&m, &t, &constants, bc)?;
    o.context = format!("asymmetric KV l=2 eta=0.25 explicit: {}", o.context);
    out.push(o);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass_and_repeat() {
        let a = lemma1_suite(6, 1).unwrap();
        assert!(a.iter().all(|o| o.passed), "{a:?}");
        assert_eq!(a, lemma1_suite(6, 1).unwrap());
        let c = corollary1_suite(4, 2).unwrap();
        assert_eq!(c.len(), 5);
        assert!(c.iter().all(|o| o.passed), "{c:?}");
        let b = appendix_b_suite(6, 200, 3).unwrap();
        assert_eq!(b.len(), 12);
        assert!(b.iter().all(|o| o.passed), "{b:?}");
        let p = parseval_suite(&[2, 3], 20, 4).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|o| o.passed), "{p:?}");
        let d = dimension_suite(4, 5).unwrap();
        assert_eq!(d.len(), 9);
        assert!(d.iter().all(|o| o.passed), "{d:?}");
    }

    #[test]
    fn zero_cases_rejected() {
        assert!(lemma1_suite(0, 1).is_err());
        assert!(parseval_suite(&[2], 0, 1).is_err());
    }
}
