use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense coefficient storage is allowed up to this many entries; larger
/// functionals must be given as an oracle.
pub const DENSE_LIMIT: usize = 10_000_000;

pub type CoefficientOracle = Arc<dyn Fn(usize, usize, usize) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Coefficients {
    /// Row-major `[x][y][a]`.
    Dense(Arc<Vec<f64>>),
    Oracle(CoefficientOracle),
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Dense(v) => write!(f, "Dense({} entries)", v.len()),
            Coefficients::Oracle(_) => f.write_str("Oracle"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    #[default]
    General,
    /// Coefficients of a game's bias `P_win - P_lose` with dichotomic Bob.
    GameBias,
}

/// Real coefficients `M^a_{x,y}` pairing with correlations `E(a|x,y)`.
#[derive(Debug, Clone)]
pub struct AsymmetricBellFunctional {
    alice_inputs: usize,
    bob_inputs: usize,
    outputs: usize,
    coeffs: Coefficients,
    kind: FunctionalKind,
    tag: Option<String>,
}

impl AsymmetricBellFunctional {
    pub fn dense(
        alice_inputs: usize,
        bob_inputs: usize,
        outputs: usize,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        check_shape(alice_inputs, bob_inputs, outputs)?;
        let expected = alice_inputs
            .checked_mul(bob_inputs)
            .and_then(|v| v.checked_mul(outputs))
            .ok_or_else(|| Error::Resource("coefficient count overflows".into()))?;
        if expected > DENSE_LIMIT {
            return Err(Error::Resource(format!(
                "dense functionals are limited to {DENSE_LIMIT} coefficients, need {expected}"
            )));
        }
        if coeffs.len() != expected {
            return Err(Error::dim(format!(
                "{} coefficients given for N={alice_inputs}, N'={bob_inputs}, K={outputs} (expected {expected})",
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "functional",
                format!("coefficient {i} is not finite"),
            ));
        }
        Ok(Self {
            alice_inputs,
            bob_inputs,
            outputs,
            coeffs: Coefficients::Dense(Arc::new(coeffs)),
            kind: FunctionalKind::General,
            tag: None,
        })
    }

    pub fn from_oracle(
        alice_inputs: usize,
        bob_inputs: usize,
        outputs: usize,
        oracle: impl Fn(usize, usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_shape(alice_inputs, bob_inputs, outputs)?;
        Ok(Self {
            alice_inputs,
            bob_inputs,
            outputs,
            coeffs: Coefficients::Oracle(Arc::new(oracle)),
            kind: FunctionalKind::General,
            tag: None,
        })
    }

    pub fn with_kind(mut self, kind: FunctionalKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn alice_inputs(&self) -> usize {
        self.alice_inputs
    }

    pub fn bob_inputs(&self) -> usize {
        self.bob_inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn len(&self) -> usize {
        self.alice_inputs * self.bob_inputs * self.outputs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize) -> usize {
        (x * self.bob_inputs + y) * self.outputs + a
    }

    #[inline]
    pub fn coeff(&self, x: usize, y: usize, a: usize) -> f64 {
        match &self.coeffs {
            Coefficients::Dense(v) => v[self.index(x, y, a)],
            Coefficients::Oracle(f) => f(x, y, a),
        }
    }

    pub fn dense_coeffs(&self) -> Option<&[f64]> {
        match &self.coeffs {
            Coefficients::Dense(v) => Some(v.as_slice()),
            Coefficients::Oracle(_) => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.coeffs, Coefficients::Dense(_))
    }

    /// Dense copy of an oracle functional (no-op for dense ones).
    pub fn materialize(&self) -> Result<Self> {
        if self.is_dense() {
            return Ok(self.clone());
        }
        if self.len() > DENSE_LIMIT {
            return Err(Error::Resource(format!(
                "materializing needs {} coefficients, limit is {DENSE_LIMIT}",
                self.len()
            )));
        }
        let mut coeffs = Vec::with_capacity(self.len());
        for x in 0..self.alice_inputs {
            for y in 0..self.bob_inputs {
                for a in 0..self.outputs {
                    coeffs.push(self.coeff(x, y, a));
                }
            }
        }
        let mut m = Self::dense(self.alice_inputs, self.bob_inputs, self.outputs, coeffs)?;
        m.kind = self.kind;
        m.tag = self.tag.clone();
        Ok(m)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let dense = self.materialize()?;
        let coeffs = dense
            .dense_coeffs()
            .unwrap()
            .iter()
            .map(|c| c * factor)
            .collect();
        let mut m = Self::dense(self.alice_inputs, self.bob_inputs, self.outputs, coeffs)?;
        m.kind = self.kind;
        m.tag = self.tag.clone();
        Ok(m)
    }

    /// First negative coefficient as `(x, y, a, value)`, if any.
    pub fn first_negative(&self) -> Option<(usize, usize, usize, f64)> {
        for x in 0..self.alice_inputs {
            for y in 0..self.bob_inputs {
                for a in 0..self.outputs {
                    let c = self.coeff(x, y, a);
                    if c < 0.0 {
                        return Some((x, y, a, c));
                    }
                }
            }
        }
        None
    }
}

fn check_shape(n: usize, np: usize, k: usize) -> Result<()> {
    if n == 0 || np == 0 || k == 0 {
        return Err(Error::dim(format!(
            "index ranges must be positive, got N={n}, N'={np}, K={k}"
        )));
    }
    Ok(())
}
