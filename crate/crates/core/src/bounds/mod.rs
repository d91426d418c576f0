//! Numerical checks of the bound theorems: the collapse `B_Q = B_C` for
//! nonnegative functionals, `omega_q <= 2 omega_c` for binary-answer games,
//! the complex matrix `M'` with both of its estimates, the per-coset
//! Parseval claim and the `sqrt(d)` dimension probe.

mod suites;

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use suites::{
    appendix_b_suite, corollary1_suite, dimension_suite, lemma1_suite, parseval_suite,
    random_strategy,
};

use crate::error::{Error, Result};
use crate::gf2kit::{walsh_hadamard, CosetTable};
use crate::numeric::{
    expectation, identity, random_unit_modulus, state_matrix, CMat, C64, VALIDATION_TOL, ZERO,
};
use crate::rng::substream;
use crate::scenario::{
    correlation_from_quantum, evaluate_functional, validate_povm, AsymmetricBellFunctional,
    DeterministicLocalStrategy, NonlocalGame, QuantumStrategy,
};
use crate::solve::{
    classical_bias_exact, classical_local_search, classical_value_exact, domain,
    see_saw_lower_bound, FunctionalObjective, GameObjective, SearchConfig, SeeSawTarget,
};

/// Relative slack for inequality checks: `lhs <= rhs + CHECK_TOL * max(1, rhs)`.
pub const CHECK_TOL: f64 = 1e-8;
/// Absolute tolerance for the Parseval claim and the properties of `P`.
pub const FINE_TOL: f64 = 1e-9;
/// Absolute slack allowed when a see-saw value is compared to a classical bound.
pub const SEE_SAW_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrothendieckConstants {
    pub real_lower: f64,
    pub real_upper: f64,
    pub complex_lower: f64,
    pub complex_upper: f64,
}

impl GrothendieckConstants {
    pub const KNOWN: Self = Self {
        real_lower: 1.676,
        real_upper: 1.783,
        complex_lower: 1.338,
        complex_upper: 1.405,
    };
}

impl Default for GrothendieckConstants {
    fn default() -> Self {
        Self::KNOWN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// Passes when `slack >= -tolerance`.
    AtMost,
    /// Passes when `|slack| <= tolerance`.
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub passed: bool,
    pub context: String,
}

impl CheckOutcome {
    pub fn at_most(lhs: f64, rhs: f64, tolerance: f64, context: impl Into<String>) -> Self {
        let slack = rhs - lhs;
        Self {
            lhs,
            rhs,
            slack,
            tolerance,
            relation: Relation::AtMost,
            passed: slack >= -tolerance,
            context: context.into(),
        }
    }

    pub fn equal(lhs: f64, rhs: f64, tolerance: f64, context: impl Into<String>) -> Self {
        let slack = rhs - lhs;
        Self {
            lhs,
            rhs,
            slack,
            tolerance,
            relation: Relation::Equal,
            passed: slack.abs() <= tolerance,
            context: context.into(),
        }
    }

    /// `lhs <= rhs` with the standard relative slack.
    pub fn bounded(lhs: f64, rhs: f64, context: impl Into<String>) -> Self {
        Self::at_most(lhs, rhs, CHECK_TOL * rhs.abs().max(1.0), context)
    }
}

/// How a bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    ClosedForm,
    LocalSearch,
    /// A fixed structured strategy, no search.
    Structured,
    SeeSaw,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::ClosedForm => "closed-form",
            Method::LocalSearch => "local-search",
            Method::Structured => "structured",
            Method::SeeSaw => "see-saw",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub method: Method,
}

impl Bound {
    pub fn new(value: f64, method: Method) -> Self {
        Self { value, method }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub classical: Bound,
    pub quantum: Bound,
    pub ratio: f64,
    /// The ratio is a proven lower bound on the violation: the classical
    /// side is exact and the quantum side is attained by a strategy.
    pub certified: bool,
}

/// `LV = quantum / classical` with method tags carried along.
pub fn violation_report(classical: Bound, quantum: Bound) -> Result<BoundReport> {
    if classical.value.is_nan() || classical.value <= 0.0 {
        return Err(Error::UndefinedRatio(format!(
            "classical bound is {}",
            classical.value
        )));
    }
    let certified = classical.method == Method::Exact && quantum.method != Method::MonteCarlo;
    Ok(BoundReport {
        classical,
        quantum,
        ratio: quantum.value / classical.value,
        certified,
    })
}

#[derive(Debug, Clone)]
pub struct CollapseBound {
    pub bound: Bound,
    pub strategy: DeterministicLocalStrategy,
    /// The quantum bound equals the classical one; set whenever the
    /// precondition holds.
    pub quantum_equals_classical: bool,
}

/// `B_C(M)` for a functional with nonnegative coefficients, where it is
/// also `B_Q(M)`. Falls back to local search when enumeration is too large.
pub fn nonnegative_collapse_bound(
    m: &AsymmetricBellFunctional,
    fallback: &SearchConfig,
) -> Result<CollapseBound> {
    if let Some((x, y, a, v)) = m.first_negative() {
        return Err(Error::Precondition(format!(
            "coefficient at (x={x}, y={y}, a={a}) is negative: {v}"
        )));
    }
    let (outcome, method) = match classical_bias_exact(m) {
        Ok(o) => (o, Method::Exact),
        Err(Error::Resource(_)) => (
            classical_local_search(&FunctionalObjective(m), fallback)?,
            Method::LocalSearch,
        ),
        Err(e) => return Err(e),
    };
    Ok(CollapseBound {
        bound: Bound::new(outcome.value, method),
        strategy: outcome.strategy,
        quantum_equals_classical: true,
    })
}

fn require_binary_bob(game: &NonlocalGame) -> Result<()> {
    if game.bob_outputs() != 2 {
        return Err(Error::Precondition(format!(
            "Bob must have 2 outputs, the game has {}",
            game.bob_outputs()
        )));
    }
    Ok(())
}

/// `quantum <= 2 omega_c(G)` for a given quantum value.
pub fn factor_two_outcome(
    game: &NonlocalGame,
    quantum: f64,
    fallback: &SearchConfig,
) -> Result<CheckOutcome> {
    require_binary_bob(game)?;
    let (classical, method) = match classical_value_exact(game) {
        Ok(o) => (o.value, Method::Exact),
        Err(Error::Resource(_)) => (
            classical_local_search(&GameObjective(game), fallback)?.value,
            Method::LocalSearch,
        ),
        Err(e) => return Err(e),
    };
    let (n, np, ka, _) = game.shape();
    Ok(CheckOutcome::at_most(
        quantum,
        2.0 * classical,
        SEE_SAW_TOL,
        format!(
            "factor two, {n}x{np} inputs, {ka} outputs, classical {}",
            method.as_str()
        ),
    ))
}

/// Runs see-saw at `dims` and checks the value found against `2 omega_c`.
pub fn factor_two_check(
    game: &NonlocalGame,
    dims: (usize, usize),
    config: &SearchConfig,
    initial: Option<&QuantumStrategy>,
) -> Result<CheckOutcome> {
    require_binary_bob(game)?;
    let q = see_saw_lower_bound(SeeSawTarget::Game(game), dims, config, initial)?;
    let mut out = factor_two_outcome(game, q.value, config)?;
    out.context
        .push_str(&format!(", see-saw {}x{}", dims.0, dims.1));
    Ok(out)
}

/// Complex matrix with rows `(x, s)`, `s` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBilinearForm {
    pub rows: usize,
    pub cols: usize,
    pub entries: CMat,
}

impl ComplexBilinearForm {
    pub fn new(entries: CMat) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows == 0 || cols == 0 {
            return Err(Error::dim("bilinear form must be non-empty"));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("bilinear form", "entries must be finite"));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// `sum_{i,j} M_ij gamma_ij`, without conjugation.
    pub fn pair(&self, gamma: &CMat) -> Result<C64> {
        if gamma.shape() != (self.rows, self.cols) {
            return Err(Error::dim(format!(
                "pairing needs {}x{}, got {:?}",
                self.rows,
                self.cols,
                gamma.shape()
            )));
        }
        Ok(self
            .entries
            .iter()
            .zip(gamma.iter())
            .map(|(m, g)| m * g)
            .sum())
    }

    /// `sum_{i,j} r_i M_ij beta_j`.
    pub fn pair_product(&self, r: &[C64], beta: &[C64]) -> C64 {
        let mut total = ZERO;
        for (i, ri) in r.iter().enumerate() {
            let mut row = ZERO;
            for (j, bj) in beta.iter().enumerate() {
                row += self.entries[(i, j)] * bj;
            }
            total += ri * row;
        }
        total
    }
}

/// `omega^p` with `omega = exp(2 pi i / (K-1))`, reduced mod `K-1` first.
fn root(p: usize, km: usize) -> C64 {
    let p = p % km;
    if p == 0 {
        return C64::new(1.0, 0.0);
    }
    C64::from_polar(1.0, TAU * p as f64 / km as f64)
}

fn check_outputs(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::invalid(
            "outputs",
            format!("the construction needs K >= 2, got {k}"),
        ));
    }
    Ok(())
}

/// `M'_{(x,s),y} = sum_{a<K} omega^{as} (M^a - M^K)` and
/// `M'_{(N+1,s),y} = omega^s sum_x M^K`, with `a, s` counted from 1. The
/// smaller input set is padded with zero coefficients up to `max(N, N')`.
pub fn build_m_prime(m: &AsymmetricBellFunctional) -> Result<ComplexBilinearForm> {
    let k = m.outputs();
    check_outputs(k)?;
    let km = k - 1;
    let (na, nb) = (m.alice_inputs(), m.bob_inputs());
    let n = na.max(nb);
    let c = |x: usize, y: usize, a: usize| {
        if x < na && y < nb {
            m.coeff(x, y, a)
        } else {
            0.0
        }
    };
    let mut entries = CMat::zeros((n + 1) * km, n);
    for y in 0..n {
        let mut last_total = 0.0;
        for x in 0..n {
            let last = c(x, y, k - 1);
            last_total += last;
            for s in 1..=km {
                let mut v = ZERO;
                for a in 1..=km {
                    v += root(a * s, km) * (c(x, y, a - 1) - last);
                }
                entries[(x * km + s - 1, y)] = v;
            }
        }
        for s in 1..=km {
            entries[(n * km + s - 1, y)] = root(s, km) * last_total;
        }
    }
    ComplexBilinearForm::new(entries)
}

/// `A_{(x,s)} = sum_{a<K} omega^{-as} E^a_x` and `A_{(N+1,s)} = omega^{-s} 1`,
/// in the row order of [`build_m_prime`].
pub fn alice_operator_transform(povms: &[Vec<CMat>], k: usize, n: usize) -> Result<Vec<CMat>> {
    check_outputs(k)?;
    if povms.len() != n {
        return Err(Error::dim(format!(
            "expected {n} POVMs, got {}",
            povms.len()
        )));
    }
    let mut dim = None;
    for (x, povm) in povms.iter().enumerate() {
        if povm.len() != k {
            return Err(Error::dim(format!(
                "POVM {x} has {} outputs, expected {k}",
                povm.len()
            )));
        }
        validate_povm(povm, VALIDATION_TOL)?
            .into_result("Alice POVM")
            .map_err(|e| Error::invalid("Alice POVM", format!("input {x}: {e}")))?;
        let d = povm[0].nrows();
        if *dim.get_or_insert(d) != d {
            return Err(Error::dim(format!("POVM {x} acts on dimension {d}")));
        }
    }
    let d = dim.ok_or_else(|| Error::dim("at least one POVM is required"))?;
    let km = k - 1;
    let mut ops = Vec::with_capacity((n + 1) * km);
    for povm in povms {
        for s in 1..=km {
            let mut op = CMat::zeros(d, d);
            for a in 1..=km {
                op += &povm[a - 1] * root(km - (a * s) % km, km);
            }
            ops.push(op);
        }
    }
    let id = identity(d);
    for s in 1..=km {
        ops.push(&id * root(km - s % km, km));
    }
    Ok(ops)
}

/// `|<M', gamma>|` against `(K-1) |<M, E>|` with
/// `gamma_{(x,s),y} = <psi| A_{(x,s)} (x) B_y |psi>`. Missing inputs on the
/// shorter side are filled with the trivial POVM and the identity.
pub fn appendix_b_identity_check(
    m: &AsymmetricBellFunctional,
    s: &QuantumStrategy,
) -> Result<CheckOutcome> {
    let obs = s
        .bob_observables()
        .ok_or_else(|| Error::Mode("the identity check needs observable-mode Bob".into()))?;
    let (na, nb, k) = (m.alice_inputs(), m.bob_inputs(), m.outputs());
    if (s.alice_inputs(), obs.len(), s.alice_outputs()) != (na, nb, k) {
        return Err(Error::dim(format!(
            "strategy is {}x{} inputs with {} outputs, functional is {na}x{nb} with {k}",
            s.alice_inputs(),
            obs.len(),
            s.alice_outputs()
        )));
    }
    let mp = build_m_prime(m)?;
    let n = mp.cols;
    let (da, db) = (s.dim_a(), s.dim_b());
    let mut alice = s.alice().to_vec();
    let mut trivial = vec![CMat::zeros(da, da); k];
    trivial[0] = identity(da);
    alice.resize(n, trivial);
    let ops = alice_operator_transform(&alice, k, n)?;
    let id_b = identity(db);
    let bob: Vec<&CMat> = (0..n).map(|y| obs.get(y).unwrap_or(&id_b)).collect();

    let mut gamma = CMat::zeros(mp.rows, n);
    for (w, psi) in s.pure_components() {
        let pm = state_matrix(&psi, da, db);
        for (row, a) in ops.iter().enumerate() {
            for (y, b) in bob.iter().enumerate() {
                gamma[(row, y)] += expectation(&pm, a, b) * w;
            }
        }
    }
    let lhs = mp.pair(&gamma)?.norm();
    let rhs = (k - 1) as f64 * evaluate_functional(m, &correlation_from_quantum(s)?)?.abs();
    Ok(CheckOutcome::equal(
        lhs,
        rhs,
        CHECK_TOL * rhs.max(1.0),
        format!("M' identity, {na}x{nb} inputs, K={k}, dims {da}x{db}"),
    ))
}

/// The three sampled checks behind `B_C(M') <= 24 (K-1)^{3/2} B_C(M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEstimateCheck {
    /// Largest `|<M', R (x) beta>|` against `24 (K-1)^{3/2} B_C(M)`.
    pub estimate: CheckOutcome,
    /// Largest spread of `sum_a P(a|x)` over `x`.
    pub constancy: CheckOutcome,
    /// Largest `sum_a |P(a|x)|` against `3 (K-1)^{3/2}`.
    pub mass: CheckOutcome,
}

impl ClassicalEstimateCheck {
    pub fn passed(&self) -> bool {
        self.estimate.passed && self.constancy.passed && self.mass.passed
    }

    pub fn outcomes(self) -> Vec<CheckOutcome> {
        vec![self.estimate, self.constancy, self.mass]
    }
}

/// `P(a|x) = sum_s omega^{as} R(x,s)` for `a < K` and
/// `P(K|x) = sum_s omega^s R(N+1,s) - sum_{a<K} P(a|x)`, as `[x][a]`.
pub fn pseudo_strategy(r: &[C64], n: usize, k: usize) -> Result<Vec<Vec<C64>>> {
    check_outputs(k)?;
    let km = k - 1;
    if r.len() != (n + 1) * km {
        return Err(Error::dim(format!(
            "R needs {} entries, got {}",
            (n + 1) * km,
            r.len()
        )));
    }
    let tail: C64 = (1..=km).map(|s| root(s, km) * r[n * km + s - 1]).sum();
    Ok((0..n)
        .map(|x| {
            let mut p: Vec<C64> = (1..=km)
                .map(|a| (1..=km).map(|s| root(a * s, km) * r[x * km + s - 1]).sum())
                .collect();
            let head: C64 = p.iter().sum();
            p.push(tail - head);
            p
        })
        .collect())
}

/// Samples unit-modulus `R` and `beta` and checks every sample against
/// `24 (K-1)^{3/2} B_C(M)`, together with the two properties of the
/// pseudo-strategy `P` built from `R`.
pub fn appendix_b_classical_estimate_check(
    m: &AsymmetricBellFunctional,
    samples: u64,
    seed: u64,
) -> Result<ClassicalEstimateCheck> {
    if samples == 0 {
        return Err(Error::invalid("samples", "at least one sample is required"));
    }
    let k = m.outputs();
    let mp = build_m_prime(m)?;
    let bc = classical_bias_exact(m)?.value;
    let (n, km) = (mp.cols, k - 1);
    let scale = (km as f64).powf(1.5);

    let worst = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<[f64; 3]> {
            let mut rng = substream(seed, domain::BOUNDS, i);
            let r: Vec<C64> = (0..mp.rows)
                .map(|_| random_unit_modulus(&mut rng))
                .collect();
            let beta: Vec<C64> = (0..n).map(|_| random_unit_modulus(&mut rng)).collect();
            let value = mp.pair_product(&r, &beta).norm();
            let p = pseudo_strategy(&r, n, k)?;
            let first: C64 = p[0].iter().sum();
            let mut spread = 0f64;
            let mut mass = 0f64;
            for row in &p {
                spread = spread.max((row.iter().sum::<C64>() - first).norm());
                mass = mass.max(row.iter().map(|z| z.norm()).sum());
            }
            Ok([value, spread, mass])
        })
        .try_reduce(
            || [0.0; 3],
            |a, b| Ok([a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])]),
        )?;

    let shape = format!(
        "{}x{} inputs, K={k}, {samples} samples",
        m.alice_inputs(),
        m.bob_inputs()
    );
    Ok(ClassicalEstimateCheck {
        estimate: CheckOutcome::bounded(
            worst[0],
            24.0 * scale * bc,
            format!("B_C(M') estimate, {shape}"),
        ),
        constancy: CheckOutcome::at_most(
            worst[1],
            0.0,
            FINE_TOL,
            format!("sum_a P(a|x) constant in x, {shape}"),
        ),
        mass: CheckOutcome::at_most(
            worst[2],
            3.0 * scale,
            FINE_TOL,
            format!("sum_a |P(a|x)| bound, {shape}"),
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsevalCheck {
    /// Largest `sum_b |Q(b|[y])|` over cosets against `n^{3/2}`.
    pub claim: CheckOutcome,
    /// `sum_b |Q|^2` against `n sum_k E^2` on the coset where they differ most.
    pub identity: CheckOutcome,
}

impl ParsevalCheck {
    pub fn passed(&self) -> bool {
        self.claim.passed && self.identity.passed
    }
}

/// `Q(b|[y]) = sum_k (-1)^{<label(b), k>} E([y],k)` for every coset, with
/// `e` indexed `y * n + k`.
pub fn parseval_claim_check(e: &[f64], table: &CosetTable) -> Result<ParsevalCheck> {
    let n = table.n();
    let cosets = table.coset_count() as usize;
    if e.len() != cosets * n {
        return Err(Error::dim(format!(
            "E needs {} values, got {}",
            cosets * n,
            e.len()
        )));
    }
    if let Some(i) = e.iter().position(|v| v.is_nan() || v.abs() > 1.0) {
        return Err(Error::invalid(
            "E values",
            format!("E([{}],{}) = {} is outside [-1, 1]", i / n, i % n, e[i]),
        ));
    }
    let mut q = vec![0.0; n];
    let (mut max_l1, mut worst) = (0f64, (0f64, 0f64));
    for row in e.chunks(n) {
        q.copy_from_slice(row);
        walsh_hadamard(&mut q);
        let l1: f64 = q.iter().map(|v| v.abs()).sum();
        let l2: f64 = q.iter().map(|v| v * v).sum();
        let e2 = n as f64 * row.iter().map(|v| v * v).sum::<f64>();
        max_l1 = max_l1.max(l1);
        if (l2 - e2).abs() >= (worst.0 - worst.1).abs() {
            worst = (l2, e2);
        }
    }
    let l = table.l();
    Ok(ParsevalCheck {
        claim: CheckOutcome::at_most(
            max_l1,
            (n as f64).powf(1.5),
            FINE_TOL,
            format!("sum |Q| <= n^(3/2), l={l}"),
        ),
        identity: CheckOutcome::equal(
            worst.0,
            worst.1,
            FINE_TOL,
            format!("sum |Q|^2 = n sum E^2, l={l}"),
        ),
    })
}

/// `|<M, E(strategy)>|` against `6 sqrt(K_G^C) sqrt(d) B_C(M)` with `d` the
/// dimension of Bob's system.
pub fn dimension_bound_probe(
    m: &AsymmetricBellFunctional,
    s: &QuantumStrategy,
    constants: &GrothendieckConstants,
) -> Result<CheckOutcome> {
    let bc = classical_bias_exact(m)?.value;
    dimension_probe_with(m, s, constants, bc)
}

pub(crate) fn dimension_probe_with(
    m: &AsymmetricBellFunctional,
    s: &QuantumStrategy,
    constants: &GrothendieckConstants,
    bc: f64,
) -> Result<CheckOutcome> {
    let lhs = evaluate_functional(m, &correlation_from_quantum(s)?)?.abs();
    let d = s.dim_b();
    let rhs = 6.0 * constants.complex_upper.sqrt() * (d as f64).sqrt() * bc;
    Ok(CheckOutcome::bounded(
        lhs,
        rhs,
        format!(
            "dimension probe, {}x{} inputs, K={}, d={d}",
            m.alice_inputs(),
            m.bob_inputs(),
            m.outputs()
        ),
    ))
}
