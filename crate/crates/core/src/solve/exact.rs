//! Exhaustive enumeration of Alice's deterministic maps with Bob eliminated
//! by per-question best response.
//!
//! Maps are numbered in mixed radix with Alice's input 0 as the fastest
//! digit. The index range is cut into fixed chunks; each chunk restarts its
//! running sums from scratch, so the result does not depend on how chunks
//! are spread over threads.

use rayon::prelude::*;

use super::{improves, ClassicalOutcome};
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::scenario::{
    AsymmetricBellFunctional, BobResponse, DeterministicLocalStrategy, NonlocalGame,
};

/// Largest number of Alice maps enumerated.
pub const ENUMERATION_BUDGET: u64 = 100_000_000;
const CHUNK: u64 = 1 << 14;

fn map_count(outputs: usize, inputs: usize) -> Result<u64> {
    let count = (outputs as u64)
        .checked_pow(inputs as u32)
        .filter(|&c| c <= ENUMERATION_BUDGET);
    count.ok_or_else(|| {
        Error::Resource(format!(
            "exact enumeration needs K^N = {outputs}^{inputs} Alice maps, budget is K^N <= {ENUMERATION_BUDGET}"
        ))
    })
}

fn decode(mut index: u64, outputs: usize, digits: &mut [usize]) {
    for d in digits.iter_mut() {
        *d = (index % outputs as u64) as usize;
        index /= outputs as u64;
    }
}

/// Shared odometer driver over `rows` running sums. `column(x, a, sums, s)`
/// adds `s` times the contribution of Alice answering `a` on input `x`, and
/// `score` turns the sums into the value of the current map.
fn enumerate<C, S>(
    inputs: usize,
    outputs: usize,
    rows: usize,
    column: C,
    score: S,
) -> Result<(Vec<usize>, u64)>
where
    C: Fn(usize, usize, &mut [f64], f64) + Sync,
    S: Fn(&[f64]) -> f64 + Sync,
{
    let total = map_count(outputs, inputs)?;
    let chunks = total.div_ceil(CHUNK);
    let best: Vec<(f64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut digits = vec![0usize; inputs];
            decode(start, outputs, &mut digits);
            let mut sums = vec![0.0; rows];
            for (x, &a) in digits.iter().enumerate() {
                column(x, a, &mut sums, 1.0);
            }
            let mut best = (score(&sums), start);
            for index in start + 1..end {
                // Advance the odometer, updating sums for every changed digit.
                for (x, d) in digits.iter_mut().enumerate() {
                    column(x, *d, &mut sums, -1.0);
                    *d += 1;
                    if *d < outputs {
                        column(x, *d, &mut sums, 1.0);
                        break;
                    }
                    *d = 0;
                    column(x, 0, &mut sums, 1.0);
                }
                let v = score(&sums);
                if improves(v, best.0) {
                    best = (v, index);
                }
            }
            best
        })
        .collect();
    let mut winner = best[0];
    for &cand in &best[1..] {
        if improves(cand.0, winner.0) {
            winner = cand;
        }
    }
    let mut digits = vec![0usize; inputs];
    decode(winner.1, outputs, &mut digits);
    Ok((digits, total))
}

/// `omega_c(G)`: exact maximum over Alice maps with Bob answering each
/// question optimally.
pub fn classical_value_exact(game: &NonlocalGame) -> Result<ClassicalOutcome> {
    let (n, np, ka, kb) = game.shape();
    map_count(ka, n)?;
    let dense = game.materialize()?;
    let w = dense.dense_weights().unwrap();
    let column = |x: usize, a: usize, sums: &mut [f64], sign: f64| {
        for y in 0..np {
            let base = ((x * np + y) * ka + a) * kb;
            for b in 0..kb {
                sums[y * kb + b] += sign * w[base + b];
            }
        }
    };
    let score = |sums: &[f64]| {
        sums.chunks(kb)
            .map(|s| s.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum()
    };
    let (alice, total) = enumerate(n, ka, np * kb, column, score)?;

    // Canonical recomputation of the certificate.
    let mut bob = Vec::with_capacity(np);
    for y in 0..np {
        let mut best = (f64::NEG_INFINITY, 0);
        for b in 0..kb {
            let v: f64 = (0..n)
                .map(|x| dense.weight(x, y, alice[x], b))
                .collect::<NeumaierSum>()
                .value();
            if v > best.0 {
                best = (v, b);
            }
        }
        bob.push(best.1);
    }
    let mut acc = NeumaierSum::new();
    for (x, &a) in alice.iter().enumerate() {
        for (y, &b) in bob.iter().enumerate() {
            acc.add(dense.weight(x, y, a, b));
        }
    }
    let value = acc.value();
    Ok(ClassicalOutcome {
        value,
        signed_value: value,
        strategy: DeterministicLocalStrategy::new(alice, ka, BobResponse::Labels(bob))?,
        exact: true,
        evaluated: total,
        trace: Vec::new(),
    })
}

/// `B_C(M)` for dichotomic Bob: `max_a sum_y |sum_x M^{a(x)}_{x,y}|`.
pub fn classical_bias_exact(m: &AsymmetricBellFunctional) -> Result<ClassicalOutcome> {
    let (n, np, k) = (m.alice_inputs(), m.bob_inputs(), m.outputs());
    map_count(k, n)?;
    let dense = m.materialize()?;
    let c = dense.dense_coeffs().unwrap();
    let column = |x: usize, a: usize, sums: &mut [f64], sign: f64| {
        for (y, s) in sums.iter_mut().enumerate() {
            *s += sign * c[(x * np + y) * k + a];
        }
    };
    let score = |sums: &[f64]| sums.iter().map(|s| s.abs()).sum();
    let (alice, total) = enumerate(n, k, np, column, score)?;
    let (signs, signed_value) = bias_certificate(&dense, &alice);
    Ok(ClassicalOutcome {
        value: signed_value.abs(),
        signed_value,
        strategy: DeterministicLocalStrategy::new(alice, k, BobResponse::Signs(signs))?,
        exact: true,
        evaluated: total,
        trace: Vec::new(),
    })
}

/// Bob's best signs against an Alice map and the resulting value, summed
/// in the same order as `evaluate_functional`.
pub(crate) fn bias_certificate(m: &AsymmetricBellFunctional, alice: &[usize]) -> (Vec<i8>, f64) {
    let np = m.bob_inputs();
    let signs: Vec<i8> = (0..np)
        .map(|y| {
            let s = alice
                .iter()
                .enumerate()
                .map(|(x, &a)| m.coeff(x, y, a))
                .collect::<NeumaierSum>()
                .value();
            if s >= 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let mut acc = NeumaierSum::new();
    for (x, &a) in alice.iter().enumerate() {
        for (y, &s) in signs.iter().enumerate() {
            acc.add(m.coeff(x, y, a) * f64::from(s));
        }
    }
    (signs, acc.value())
}
