use std::fmt;
use std::sync::Arc;

use super::correlation::JointDistribution;
use crate::error::{Error, Result};
use crate::numeric::{NeumaierSum, VALIDATION_TOL};

pub type WeightOracle = Arc<dyn Fn(usize, usize, usize, usize) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Weights {
    Dense(Arc<Vec<f64>>),
    Oracle(WeightOracle),
}

/// A nonlocal game `G(pi, V)` stored as its question distribution and the
/// winning weights `pi(x,y) V(a,b|x,y)`. `V` may be fractional, which covers
/// referees that draw hidden randomness (the KV noise word) after the
/// questions.
#[derive(Clone)]
pub struct NonlocalGame {
    alice_inputs: usize,
    bob_inputs: usize,
    alice_outputs: usize,
    bob_outputs: usize,
    question: Arc<Vec<f64>>,
    weights: Weights,
}

impl fmt::Debug for NonlocalGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlocalGame")
            .field("alice_inputs", &self.alice_inputs)
            .field("bob_inputs", &self.bob_inputs)
            .field("alice_outputs", &self.alice_outputs)
            .field("bob_outputs", &self.bob_outputs)
            .field("dense", &matches!(self.weights, Weights::Dense(_)))
            .finish()
    }
}

impl NonlocalGame {
    /// `weights` is row-major `[x][y][a][b]`.
    pub fn dense(
        shape: (usize, usize, usize, usize),
        question: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let (n, np, ka, kb) = shape;
        let game = Self::checked(shape, question, Weights::Dense(Arc::new(weights)))?;
        let Weights::Dense(w) = &game.weights else {
            unreachable!()
        };
        if w.len() != n * np * ka * kb {
            return Err(Error::dim(format!(
                "{} weights for shape {n}x{np}x{ka}x{kb}",
                w.len()
            )));
        }
        for x in 0..n {
            for y in 0..np {
                let pi = game.question[x * np + y];
                for a in 0..ka {
                    for b in 0..kb {
                        let v = w[((x * np + y) * ka + a) * kb + b];
                        if !v.is_finite() || v < 0.0 || v > pi + VALIDATION_TOL {
                            return Err(Error::invalid(
                                "game",
                                format!(
                                    "weight at ({x},{y},{a},{b}) = {v} is outside [0, pi = {pi}]"
                                ),
                            ));
                        }
                    }
                }
            }
        }
        Ok(game)
    }

    pub fn from_oracle(
        shape: (usize, usize, usize, usize),
        question: Vec<f64>,
        oracle: impl Fn(usize, usize, usize, usize) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::checked(shape, question, Weights::Oracle(Arc::new(oracle)))
    }

    fn checked(
        shape: (usize, usize, usize, usize),
        question: Vec<f64>,
        weights: Weights,
    ) -> Result<Self> {
        let (n, np, ka, kb) = shape;
        if n == 0 || np == 0 || ka == 0 || kb == 0 {
            return Err(Error::dim("game index ranges must be positive"));
        }
        if question.len() != n * np {
            return Err(Error::dim(format!(
                "{} question probabilities for {n}x{np} questions",
                question.len()
            )));
        }
        if question.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(
                "game",
                "question probabilities must be nonnegative",
            ));
        }
        let total = question.iter().copied().collect::<NeumaierSum>().value();
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::invalid(
                "game",
                format!("question distribution sums to {total}"),
            ));
        }
        Ok(Self {
            alice_inputs: n,
            bob_inputs: np,
            alice_outputs: ka,
            bob_outputs: kb,
            question: Arc::new(question),
            weights,
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

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (
            self.alice_inputs,
            self.bob_inputs,
            self.alice_outputs,
            self.bob_outputs,
        )
    }

    pub fn question_prob(&self, x: usize, y: usize) -> f64 {
        self.question[x * self.bob_inputs + y]
    }

    pub fn question_distribution(&self) -> &[f64] {
        &self.question
    }

    #[inline]
    pub fn weight(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        match &self.weights {
            Weights::Dense(w) => {
                w[((x * self.bob_inputs + y) * self.alice_outputs + a) * self.bob_outputs + b]
            }
            Weights::Oracle(f) => f(x, y, a, b),
        }
    }

    pub fn dense_weights(&self) -> Option<&[f64]> {
        match &self.weights {
            Weights::Dense(w) => Some(w),
            Weights::Oracle(_) => None,
        }
    }

    pub fn materialize(&self) -> Result<Self> {
        if self.dense_weights().is_some() {
            return Ok(self.clone());
        }
        let (n, np, ka, kb) = self.shape();
        let count = n * np * ka * kb;
        if count > super::functional::DENSE_LIMIT {
            return Err(Error::Resource(format!(
                "materializing needs {count} weights"
            )));
        }
        let mut w = Vec::with_capacity(count);
        for x in 0..n {
            for y in 0..np {
                for a in 0..ka {
                    for b in 0..kb {
                        w.push(self.weight(x, y, a, b));
                    }
                }
            }
        }
        Self::dense(self.shape(), self.question.to_vec(), w)
    }

    /// The game's bias functional when Bob answers with output 0 read as +1
    /// and output 1 read as -1.
    pub fn bias_functional(&self) -> Result<super::AsymmetricBellFunctional> {
        if self.bob_outputs != 2 {
            return Err(Error::Precondition(format!(
                "bias needs binary Bob outputs, game has {}",
                self.bob_outputs
            )));
        }
        let g = self.clone();
        let m = super::AsymmetricBellFunctional::from_oracle(
            self.alice_inputs,
            self.bob_inputs,
            self.alice_outputs,
            move |x, y, a| g.weight(x, y, a, 0) - g.weight(x, y, a, 1),
        )?;
        Ok(m.with_kind(super::FunctionalKind::GameBias))
    }
}

/// `sum pi(x,y) V(a,b|x,y) P(a,b|x,y)`.
pub fn game_value_of_distribution(game: &NonlocalGame, p: &JointDistribution) -> Result<f64> {
    let shape = (
        p.alice_inputs(),
        p.bob_inputs(),
        p.alice_outputs(),
        p.bob_outputs(),
    );
    if game.shape() != shape {
        return Err(Error::dim(format!(
            "game shape {:?} vs distribution shape {shape:?}",
            game.shape()
        )));
    }
    let (n, np, ka, kb) = shape;
    let mut acc = NeumaierSum::new();
    for x in 0..n {
        for y in 0..np {
            let block = p.question_block(x, y);
            for a in 0..ka {
                for b in 0..kb {
                    acc.add(game.weight(x, y, a, b) * block[a * kb + b]);
                }
            }
        }
    }
    Ok(acc.value())
}
