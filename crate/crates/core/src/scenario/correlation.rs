use serde::{Deserialize, Serialize};

use super::functional::{AsymmetricBellFunctional, FunctionalKind};
use crate::error::{Error, Result};
use crate::numeric::{NeumaierSum, VALIDATION_TOL};

/// `E(a|x,y) = P(a,+1|x,y) - P(a,-1|x,y)`, row-major `[x][y][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    alice_inputs: usize,
    bob_inputs: usize,
    outputs: usize,
    values: Vec<f64>,
}

impl Correlation {
    pub fn new(
        alice_inputs: usize,
        bob_inputs: usize,
        outputs: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != alice_inputs * bob_inputs * outputs {
            return Err(Error::dim(format!(
                "{} correlation entries for {alice_inputs}x{bob_inputs}x{outputs}",
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > 1.0 + VALIDATION_TOL)
        {
            return Err(Error::invalid(
                "correlation",
                format!("entry {i} = {v} lies outside [-1, 1]"),
            ));
        }
        Ok(Self {
            alice_inputs,
            bob_inputs,
            outputs,
            values,
        })
    }

    pub fn zeros(alice_inputs: usize, bob_inputs: usize, outputs: usize) -> Self {
        Self {
            alice_inputs,
            bob_inputs,
            outputs,
            values: vec![0.0; alice_inputs * bob_inputs * outputs],
        }
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize) -> f64 {
        self.values[(x * self.bob_inputs + y) * self.outputs + a]
    }

    /// `alpha * self + beta * other`; the result is not range-checked.
    pub fn combine(&self, alpha: f64, other: &Correlation, beta: f64) -> Result<Correlation> {
        if self.values.len() != other.values.len() {
            return Err(Error::dim("correlations of different shapes"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Correlation {
            values,
            ..self.clone()
        })
    }
}

/// `<M, E> = sum_x sum_y sum_a M^a_{x,y} E(a|x,y)`, summed in that order
/// with compensation.
pub fn evaluate_functional(m: &AsymmetricBellFunctional, e: &Correlation) -> Result<f64> {
    if m.alice_inputs() != e.alice_inputs
        || m.bob_inputs() != e.bob_inputs
        || m.outputs() != e.outputs
    {
        return Err(Error::dim(format!(
            "functional is {}x{}x{}, correlation is {}x{}x{}",
            m.alice_inputs(),
            m.bob_inputs(),
            m.outputs(),
            e.alice_inputs,
            e.bob_inputs,
            e.outputs
        )));
    }
    let mut acc = NeumaierSum::new();
    match m.dense_coeffs() {
        Some(c) => {
            for (ci, ei) in c.iter().zip(&e.values) {
                acc.add(ci * ei);
            }
        }
        None => {
            for x in 0..e.alice_inputs {
                for y in 0..e.bob_inputs {
                    for a in 0..e.outputs {
                        acc.add(m.coeff(x, y, a) * e.get(x, y, a));
                    }
                }
            }
        }
    }
    Ok(acc.value())
}

/// Bias `P_win - P_lose` of a correlation on a game-bias functional.
pub fn bias_of_correlation(m: &AsymmetricBellFunctional, e: &Correlation) -> Result<f64> {
    if m.kind() != FunctionalKind::GameBias {
        return Err(Error::Mode(
            "functional is not tagged as a game bias functional".into(),
        ));
    }
    evaluate_functional(m, e)
}

/// `P(a,b|x,y)`, row-major `[x][y][a][b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    alice_inputs: usize,
    bob_inputs: usize,
    alice_outputs: usize,
    bob_outputs: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(
        alice_inputs: usize,
        bob_inputs: usize,
        alice_outputs: usize,
        bob_outputs: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let block = alice_outputs * bob_outputs;
        if probs.len() != alice_inputs * bob_inputs * block || block == 0 {
            return Err(Error::dim(format!(
                "{} probabilities for {alice_inputs}x{bob_inputs}x{alice_outputs}x{bob_outputs}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::invalid(
                "joint distribution",
                format!("entry {i} = {p} is negative"),
            ));
        }
        for (q, chunk) in probs.chunks(block).enumerate() {
            let total: f64 = chunk.iter().sum();
            if (total - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::invalid(
                    "joint distribution",
                    format!("question {q} sums to {total}, expected 1"),
                ));
            }
        }
        Ok(Self {
            alice_inputs,
            bob_inputs,
            alice_outputs,
            bob_outputs,
            probs,
        })
    }

    pub fn alice_inputs(&self) -> usize {
        self.alice_inputs
    }

    pub fn bob_inputs(&self) -> usize {
        self.bob_inputs
    }

    pub fn alice_outputs(&self) -> usize {
        self.alice_outputs
    }

    pub fn bob_outputs(&self) -> usize {
        self.bob_outputs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.probs[((x * self.bob_inputs + y) * self.alice_outputs + a) * self.bob_outputs + b]
    }

    /// Block of `P(., .|x, y)`, row-major `[a][b]`.
    pub fn question_block(&self, x: usize, y: usize) -> &[f64] {
        let block = self.alice_outputs * self.bob_outputs;
        let start = (x * self.bob_inputs + y) * block;
        &self.probs[start..start + block]
    }

    /// Correlation obtained by reading Bob's outputs as the signs `signs[b]`.
    pub fn correlation_with_signs(&self, signs: &[f64]) -> Result<Correlation> {
        if signs.len() != self.bob_outputs {
            return Err(Error::dim("one sign per Bob output required"));
        }
        let mut values =
            Vec::with_capacity(self.alice_inputs * self.bob_inputs * self.alice_outputs);
        for x in 0..self.alice_inputs {
            for y in 0..self.bob_inputs {
                for a in 0..self.alice_outputs {
                    values.push(
                        (0..self.bob_outputs)
                            .map(|b| signs[b] * self.get(x, y, a, b))
                            .sum(),
                    );
                }
            }
        }
        Correlation::new(
            self.alice_inputs,
            self.bob_inputs,
            self.alice_outputs,
            values,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_correlation_evaluates_to_zero() {
        let m = AsymmetricBellFunctional::dense(2, 2, 2, vec![1.5; 8]).unwrap();
        assert_eq!(
            evaluate_functional(&m, &Correlation::zeros(2, 2, 2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn single_term_product() {
        let m = AsymmetricBellFunctional::dense(1, 1, 1, vec![2.0]).unwrap();
        let e = Correlation::new(1, 1, 1, vec![0.5]).unwrap();
        assert_eq!(evaluate_functional(&m, &e).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let m = AsymmetricBellFunctional::dense(1, 1, 2, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            evaluate_functional(&m, &Correlation::zeros(1, 2, 1)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn bias_requires_game_tag() {
        let m = AsymmetricBellFunctional::dense(1, 1, 1, vec![1.0]).unwrap();
        let e = Correlation::zeros(1, 1, 1);
        assert!(matches!(bias_of_correlation(&m, &e), Err(Error::Mode(_))));
        let g = m.with_kind(FunctionalKind::GameBias);
        assert_eq!(bias_of_correlation(&g, &e).unwrap(), 0.0);
    }

    #[test]
    fn correlation_range_is_checked() {
        assert!(Correlation::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Correlation::new(1, 1, 2, vec![0.5]).is_err());
    }

    #[test]
    fn joint_normalization_is_checked() {
        assert!(JointDistribution::new(1, 1, 2, 1, vec![0.5, 0.4]).is_err());
        assert!(JointDistribution::new(1, 1, 2, 1, vec![1.5, -0.5]).is_err());
        let p = JointDistribution::new(1, 1, 2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let e = p.correlation_with_signs(&[1.0, -1.0]).unwrap();
        assert_eq!(e.values(), &[0.5, -0.5]);
    }

    proptest! {
        #[test]
        fn evaluation_is_linear(
            coeffs in proptest::collection::vec(-3.0f64..3.0, 12),
            e1 in proptest::collection::vec(-1.0f64..1.0, 12),
            e2 in proptest::collection::vec(-1.0f64..1.0, 12),
            alpha in -1.0f64..1.0,
            beta in -1.0f64..1.0,
        ) {
            let m = AsymmetricBellFunctional::dense(2, 3, 2, coeffs).unwrap();
            let c1 = Correlation::new(2, 3, 2, e1).unwrap();
            let c2 = Correlation::new(2, 3, 2, e2).unwrap();
            let mix = c1.combine(alpha, &c2, beta).unwrap();
            let lhs = evaluate_functional(&m, &mix).unwrap();
            let rhs = alpha * evaluate_functional(&m, &c1).unwrap() + beta * evaluate_functional(&m, &c2).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }
    }
}
