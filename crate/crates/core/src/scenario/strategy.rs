use serde::{Deserialize, Serialize};

use super::correlation::{Correlation, JointDistribution};
use crate::error::{Error, Result};
use crate::numeric::{
    self, bob_reduced, entrywise_dot, hermitian_defect, hermitian_eigen, identity, max_abs,
    state_matrix, CMat, CVec, C64, EXACT_TOL, VALIDATION_TOL,
};

/// Entrywise Hermiticity tolerance for observables and POVM elements.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Largest imaginary residue tolerated in an expectation value.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-10;
/// Smallest negative probability that is clipped to zero instead of rejected.
pub const NEGATIVE_CLIP_TOL: f64 = 1e-10;

/// Bob's deterministic responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BobResponse {
    /// Game mode: an output label per input.
    Labels(Vec<usize>),
    /// Bias mode: a sign per input.
    Signs(Vec<i8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicLocalStrategy {
    pub alice: Vec<usize>,
    pub alice_outputs: usize,
    pub bob: BobResponse,
}

impl DeterministicLocalStrategy {
    pub fn new(alice: Vec<usize>, alice_outputs: usize, bob: BobResponse) -> Result<Self> {
        if let Some(&a) = alice.iter().find(|&&a| a >= alice_outputs) {
            return Err(Error::invalid(
                "deterministic strategy",
                format!("Alice output {a} >= K = {alice_outputs}"),
            ));
        }
        if let BobResponse::Signs(s) = &bob {
            if s.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::invalid(
                    "deterministic strategy",
                    "Bob signs must be +1 or -1",
                ));
            }
        }
        Ok(Self {
            alice,
            alice_outputs,
            bob,
        })
    }

    pub fn bob_inputs(&self) -> usize {
        match &self.bob {
            BobResponse::Labels(v) => v.len(),
            BobResponse::Signs(v) => v.len(),
        }
    }
}

/// Finite mixture of deterministic strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    weights: Vec<f64>,
    components: Vec<DeterministicLocalStrategy>,
}

impl LocalModel {
    pub fn new(weights: Vec<f64>, components: Vec<DeterministicLocalStrategy>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::dim("one weight per component required"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("local model", "weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::invalid(
                "local model",
                format!("weights sum to {total}"),
            ));
        }
        let first = &components[0];
        if components.iter().any(|c| {
            c.alice.len() != first.alice.len()
                || c.alice_outputs != first.alice_outputs
                || c.bob_inputs() != first.bob_inputs()
        }) {
            return Err(Error::dim("components have different input/output ranges"));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[DeterministicLocalStrategy] {
        &self.components
    }
}

impl From<DeterministicLocalStrategy> for LocalModel {
    fn from(s: DeterministicLocalStrategy) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![s],
        }
    }
}

/// `E(a|x,y) = sum_l w_l 1[alice_l(x) = a] sign_l(y)`.
pub fn correlation_from_deterministic(model: &LocalModel) -> Result<Correlation> {
    let first = &model.components[0];
    let (n, np, k) = (first.alice.len(), first.bob_inputs(), first.alice_outputs);
    let mut values = vec![0.0; n * np * k];
    for (w, comp) in model.weights.iter().zip(&model.components) {
        let BobResponse::Signs(signs) = &comp.bob else {
            return Err(Error::Mode(
                "correlations need bias-mode (sign) Bob responses".into(),
            ));
        };
        for (x, &a) in comp.alice.iter().enumerate() {
            for (y, &s) in signs.iter().enumerate() {
                values[(x * np + y) * k + a] += w * f64::from(s);
            }
        }
    }
    Correlation::new(n, np, k, values)
}

/// Point-mass joint distribution of a game-mode deterministic strategy.
pub fn joint_from_deterministic(
    s: &DeterministicLocalStrategy,
    bob_outputs: usize,
) -> Result<JointDistribution> {
    let BobResponse::Labels(labels) = &s.bob else {
        return Err(Error::Mode(
            "joint distributions need game-mode (label) Bob responses".into(),
        ));
    };
    if let Some(&b) = labels.iter().find(|&&b| b >= bob_outputs) {
        return Err(Error::invalid(
            "deterministic strategy",
            format!("Bob output {b} >= {bob_outputs}"),
        ));
    }
    let (n, np, k) = (s.alice.len(), labels.len(), s.alice_outputs);
    let mut probs = vec![0.0; n * np * k * bob_outputs];
    for (x, &a) in s.alice.iter().enumerate() {
        for (y, &b) in labels.iter().enumerate() {
            probs[((x * np + y) * k + a) * bob_outputs + b] = 1.0;
        }
    }
    JointDistribution::new(n, np, k, bob_outputs, probs)
}

/// One measured condition of a validation verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub condition: String,
    pub element: Option<usize>,
    pub value: f64,
    pub limit: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Verdict {
    pub checks: Vec<Measured>,
}

impl Verdict {
    fn record(
        &mut self,
        condition: &str,
        element: Option<usize>,
        value: f64,
        limit: f64,
        ok: bool,
    ) {
        self.checks.push(Measured {
            condition: condition.to_string(),
            element,
            value,
            limit,
            ok,
        });
    }

    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Measured> {
        self.checks.iter().filter(|c| !c.ok)
    }

    fn describe(&self) -> String {
        self.violations()
            .map(|m| match m.element {
                Some(e) => format!("{} (element {e}): {}", m.condition, m.value),
                None => format!("{}: {}", m.condition, m.value),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn into_result(self, what: &'static str) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::invalid(what, self.describe()))
        }
    }
}

fn check_square(m: &CMat, dim: Option<usize>) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::dim(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(d) = dim {
        if m.nrows() != d {
            return Err(Error::dim(format!(
                "matrix has dimension {}, expected {d}",
                m.nrows()
            )));
        }
    }
    Ok(m.nrows())
}

/// Positivity and completeness of a POVM. Violations carry the measured
/// magnitude (negative eigenvalue depth, completeness defect).
pub fn validate_povm(elements: &[CMat], tol: f64) -> Result<Verdict> {
    let Some(first) = elements.first() else {
        return Err(Error::dim("a POVM needs at least one element"));
    };
    let d = check_square(first, None)?;
    let mut verdict = Verdict::default();
    let mut total = CMat::zeros(d, d);
    for (i, e) in elements.iter().enumerate() {
        check_square(e, Some(d))?;
        let defect = hermitian_defect(e);
        verdict.record(
            "hermiticity defect",
            Some(i),
            defect,
            HERMITIAN_TOL,
            defect <= HERMITIAN_TOL,
        );
        let (lo, _) = numeric::min_max_eigenvalue(e);
        verdict.record(
            "negative eigenvalue",
            Some(i),
            (-lo).max(0.0),
            tol,
            lo >= -tol,
        );
        total += e;
    }
    let completeness = max_abs(&(total - identity(d)));
    verdict.record(
        "completeness violated",
        None,
        completeness,
        tol,
        completeness <= tol,
    );
    Ok(verdict)
}

/// Hermiticity defect and spectral range of a dichotomic observable.
pub fn validate_observable(b: &CMat, tol: f64) -> Result<Verdict> {
    check_square(b, None)?;
    let mut verdict = Verdict::default();
    let defect = hermitian_defect(b);
    verdict.record(
        "hermiticity defect",
        None,
        defect,
        HERMITIAN_TOL,
        defect <= HERMITIAN_TOL,
    );
    let (lo, hi) = numeric::min_max_eigenvalue(b);
    verdict.record(
        "smallest eigenvalue",
        None,
        lo,
        -1.0 - tol,
        lo >= -1.0 - tol,
    );
    verdict.record("largest eigenvalue", None, hi, 1.0 + tol, hi <= 1.0 + tol);
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SharedState {
    /// Unit vector indexed `i * dim_b + j`.
    Pure(CVec),
    Density(CMat),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BobSide {
    Povms(Vec<Vec<CMat>>),
    Observables(Vec<CMat>),
}

/// Shared state, Alice POVMs per input and Bob POVMs or observables per
/// input. Constructed only through [`QuantumStrategy::new`], which validates
/// every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    dim_a: usize,
    dim_b: usize,
    state: SharedState,
    alice: Vec<Vec<CMat>>,
    bob: BobSide,
}

impl QuantumStrategy {
    pub fn new(
        dim_a: usize,
        dim_b: usize,
        state: SharedState,
        alice: Vec<Vec<CMat>>,
        bob: BobSide,
    ) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::dim("local dimensions must be positive"));
        }
        let total = dim_a * dim_b;
        match &state {
            SharedState::Pure(v) => {
                if v.len() != total {
                    return Err(Error::dim(format!(
                        "state has length {}, expected {total}",
                        v.len()
                    )));
                }
                let norm = v.norm();
                if (norm - 1.0).abs() > EXACT_TOL {
                    return Err(Error::invalid("state", format!("norm is {norm}")));
                }
            }
            SharedState::Density(rho) => {
                check_square(rho, Some(total))?;
                if hermitian_defect(rho) > HERMITIAN_TOL {
                    return Err(Error::invalid("state", "density matrix is not Hermitian"));
                }
                let (lo, _) = numeric::min_max_eigenvalue(rho);
                if lo < -VALIDATION_TOL {
                    return Err(Error::invalid(
                        "state",
                        format!("density matrix has eigenvalue {lo}"),
                    ));
                }
                let tr = rho.trace().re;
                if (tr - 1.0).abs() > EXACT_TOL {
                    return Err(Error::invalid("state", format!("trace is {tr}")));
                }
            }
        }
        if alice.is_empty() {
            return Err(Error::dim("Alice needs at least one input"));
        }
        let k = alice[0].len();
        for (x, povm) in alice.iter().enumerate() {
            if povm.len() != k {
                return Err(Error::dim(format!(
                    "Alice input {x} has {} outputs, expected {k}",
                    povm.len()
                )));
            }
            for e in povm {
                check_square(e, Some(dim_a))?;
            }
            validate_povm(povm, VALIDATION_TOL)?
                .into_result("Alice POVM")
                .map_err(|e| Error::invalid("Alice POVM", format!("input {x}: {e}")))?;
        }
        match &bob {
            BobSide::Povms(povms) => {
                if povms.is_empty() {
                    return Err(Error::dim("Bob needs at least one input"));
                }
                let kb = povms[0].len();
                for (y, povm) in povms.iter().enumerate() {
                    if povm.len() != kb {
                        return Err(Error::dim(format!(
                            "Bob input {y} has {} outputs, expected {kb}",
                            povm.len()
                        )));
                    }
                    for f in povm {
                        check_square(f, Some(dim_b))?;
                    }
                    validate_povm(povm, VALIDATION_TOL)?
                        .into_result("Bob POVM")
                        .map_err(|e| Error::invalid("Bob POVM", format!("input {y}: {e}")))?;
                }
            }
            BobSide::Observables(obs) => {
                if obs.is_empty() {
                    return Err(Error::dim("Bob needs at least one input"));
                }
                for (y, b) in obs.iter().enumerate() {
                    check_square(b, Some(dim_b))?;
                    validate_observable(b, VALIDATION_TOL)?
                        .into_result("Bob observable")
                        .map_err(|e| Error::invalid("Bob observable", format!("input {y}: {e}")))?;
                }
            }
        }
        Ok(Self {
            dim_a,
            dim_b,
            state,
            alice,
            bob,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn state(&self) -> &SharedState {
        &self.state
    }

    pub fn alice(&self) -> &[Vec<CMat>] {
        &self.alice
    }

    pub fn bob(&self) -> &BobSide {
        &self.bob
    }

    pub fn alice_inputs(&self) -> usize {
        self.alice.len()
    }

    pub fn alice_outputs(&self) -> usize {
        self.alice[0].len()
    }

    pub fn bob_inputs(&self) -> usize {
        match &self.bob {
            BobSide::Povms(p) => p.len(),
            BobSide::Observables(o) => o.len(),
        }
    }

    pub fn bob_observables(&self) -> Option<&[CMat]> {
        match &self.bob {
            BobSide::Observables(o) => Some(o),
            BobSide::Povms(_) => None,
        }
    }

    pub fn bob_povms(&self) -> Option<&[Vec<CMat>]> {
        match &self.bob {
            BobSide::Povms(p) => Some(p),
            BobSide::Observables(_) => None,
        }
    }

    /// Same state and Alice side, with Bob's side replaced.
    pub fn with_bob(&self, bob: BobSide) -> Result<Self> {
        Self::new(
            self.dim_a,
            self.dim_b,
            self.state.clone(),
            self.alice.clone(),
            bob,
        )
    }

    /// Observable mode as a two-outcome POVM `{(1+B)/2, (1-B)/2}`; output 0
    /// reads `+1`, output 1 reads `-1`.
    pub fn binary_povm_bob(&self) -> Result<Self> {
        let obs = self
            .bob_observables()
            .ok_or_else(|| Error::Mode("Bob already measures POVMs".into()))?;
        let id = identity(self.dim_b);
        let povms = obs
            .iter()
            .map(|b| vec![(&id + b).scale(0.5), (&id - b).scale(0.5)])
            .collect();
        self.with_bob(BobSide::Povms(povms))
    }

    /// The state as a convex combination of pure states.
    pub fn pure_components(&self) -> Vec<(f64, CVec)> {
        match &self.state {
            SharedState::Pure(v) => vec![(1.0, v.clone())],
            SharedState::Density(rho) => {
                let (vals, vecs) = hermitian_eigen(rho);
                vals.iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 1e-15)
                    .map(|(i, &w)| (w, vecs.column(i).into_owned()))
                    .collect()
            }
        }
    }
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_RESIDUE_TOL {
        return Err(Error::Numerical(format!(
            "expectation value has imaginary part {}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `E(a|x,y) = tr((E^a_x (x) B_y) rho)` for an observable-mode strategy.
pub fn correlation_from_quantum(s: &QuantumStrategy) -> Result<Correlation> {
    let obs = s
        .bob_observables()
        .ok_or_else(|| Error::Mode("correlations need observable-mode Bob".into()))?;
    let (n, np, k) = (s.alice_inputs(), obs.len(), s.alice_outputs());
    let mut acc = vec![C64::new(0.0, 0.0); n * np * k];
    for (w, psi) in s.pure_components() {
        let pm = state_matrix(&psi, s.dim_a, s.dim_b);
        for x in 0..n {
            for a in 0..k {
                let g = bob_reduced(&pm, &s.alice[x][a]);
                for (y, b) in obs.iter().enumerate() {
                    acc[(x * np + y) * k + a] += entrywise_dot(&g, b) * w;
                }
            }
        }
    }
    let values = acc.into_iter().map(real_part).collect::<Result<Vec<_>>>()?;
    Correlation::new(n, np, k, values)
}

/// `P(a,b|x,y) = tr((E^a_x (x) F^b_y) rho)` for a POVM-mode strategy.
pub fn joint_from_quantum(s: &QuantumStrategy) -> Result<JointDistribution> {
    let povms = s
        .bob_povms()
        .ok_or_else(|| Error::Mode("joint distributions need POVM-mode Bob".into()))?;
    let (n, np, ka, kb) = (
        s.alice_inputs(),
        povms.len(),
        s.alice_outputs(),
        povms[0].len(),
    );
    let mut acc = vec![C64::new(0.0, 0.0); n * np * ka * kb];
    for (w, psi) in s.pure_components() {
        let pm = state_matrix(&psi, s.dim_a, s.dim_b);
        for x in 0..n {
            for a in 0..ka {
                let g = bob_reduced(&pm, &s.alice[x][a]);
                for (y, povm) in povms.iter().enumerate() {
                    for (b, f) in povm.iter().enumerate() {
                        acc[((x * np + y) * ka + a) * kb + b] += entrywise_dot(&g, f) * w;
                    }
                }
            }
        }
    }
    let mut probs = Vec::with_capacity(acc.len());
    for (i, z) in acc.into_iter().enumerate() {
        let p = real_part(z)?;
        if p < -NEGATIVE_CLIP_TOL {
            return Err(Error::Numerical(format!("probability entry {i} is {p}")));
        }
        probs.push(p.max(0.0));
    }
    JointDistribution::new(n, np, ka, kb, probs)
}
