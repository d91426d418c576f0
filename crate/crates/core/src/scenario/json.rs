//! On-disk JSON forms of functionals, games and strategies.
//!
//! Coefficients are flattened x-major, then y, then a (then b for games).
//! Matrices are row-major lists of rows; complex entries are `[re, im]`.
//! Output is canonical: object keys sorted, numbers in shortest round-trip
//! form.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    AsymmetricBellFunctional, BobSide, FunctionalKind, NonlocalGame, QuantumStrategy, SharedState,
};
use crate::error::{Error, Result};
use crate::numeric::{CMat, CVec, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMetadata {
    pub game: String,
    pub l: u32,
    pub n: usize,
    pub eta: f64,
    pub coset_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalFile {
    #[serde(rename = "N")]
    pub alice_inputs: usize,
    #[serde(rename = "Nprime")]
    pub bob_inputs: usize,
    #[serde(rename = "K")]
    pub outputs: usize,
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<FunctionalKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<GameMetadata>,
}

impl FunctionalFile {
    pub fn from_functional(
        m: &AsymmetricBellFunctional,
        metadata: Option<GameMetadata>,
    ) -> Result<Self> {
        let dense = m.materialize()?;
        Ok(Self {
            alice_inputs: m.alice_inputs(),
            bob_inputs: m.bob_inputs(),
            outputs: m.outputs(),
            coeffs: dense.dense_coeffs().unwrap().to_vec(),
            kind: (m.kind() != FunctionalKind::General).then_some(m.kind()),
            metadata,
        })
    }

    pub fn to_functional(&self) -> Result<AsymmetricBellFunctional> {
        let m = AsymmetricBellFunctional::dense(
            self.alice_inputs,
            self.bob_inputs,
            self.outputs,
            self.coeffs.clone(),
        )?;
        Ok(m.with_kind(self.kind.unwrap_or_default()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    #[serde(rename = "N")]
    pub alice_inputs: usize,
    #[serde(rename = "Nprime")]
    pub bob_inputs: usize,
    #[serde(rename = "K")]
    pub alice_outputs: usize,
    #[serde(rename = "Kprime")]
    pub bob_outputs: usize,
    pub question: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<GameMetadata>,
}

impl GameFile {
    pub fn from_game(g: &NonlocalGame, metadata: Option<GameMetadata>) -> Result<Self> {
        let dense = g.materialize()?;
        let (n, np, ka, kb) = g.shape();
        Ok(Self {
            alice_inputs: n,
            bob_inputs: np,
            alice_outputs: ka,
            bob_outputs: kb,
            question: g.question_distribution().to_vec(),
            weights: dense.dense_weights().unwrap().to_vec(),
            metadata,
        })
    }

    pub fn to_game(&self) -> Result<NonlocalGame> {
        NonlocalGame::dense(
            (
                self.alice_inputs,
                self.bob_inputs,
                self.alice_outputs,
                self.bob_outputs,
            ),
            self.question.clone(),
            self.weights.clone(),
        )
    }
}

pub type MatrixFile = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFile {
    Pure(Vec<[f64; 2]>),
    Density(MatrixFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BobFile {
    Povms(Vec<Vec<MatrixFile>>),
    Observables(Vec<MatrixFile>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyFile {
    #[serde(rename = "dimA")]
    pub dim_a: usize,
    #[serde(rename = "dimB")]
    pub dim_b: usize,
    pub state: StateFile,
    pub alice: Vec<Vec<MatrixFile>>,
    pub bob: BobFile,
}

fn matrix_out(m: &CMat) -> MatrixFile {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| [m[(r, c)].re, m[(r, c)].im])
                .collect()
        })
        .collect()
}

fn matrix_in(m: &MatrixFile) -> Result<CMat> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::dim("ragged matrix rows"));
    }
    Ok(CMat::from_fn(rows, cols, |r, c| {
        C64::new(m[r][c][0], m[r][c][1])
    }))
}

impl StrategyFile {
    pub fn from_strategy(s: &QuantumStrategy) -> Self {
        let state = match s.state() {
            SharedState::Pure(v) => StateFile::Pure(v.iter().map(|z| [z.re, z.im]).collect()),
            SharedState::Density(rho) => StateFile::Density(matrix_out(rho)),
        };
        let alice = s
            .alice()
            .iter()
            .map(|p| p.iter().map(matrix_out).collect())
            .collect();
        let bob = match s.bob() {
            BobSide::Povms(p) => BobFile::Povms(
                p.iter()
                    .map(|v| v.iter().map(matrix_out).collect())
                    .collect(),
            ),
            BobSide::Observables(o) => BobFile::Observables(o.iter().map(matrix_out).collect()),
        };
        Self {
            dim_a: s.dim_a(),
            dim_b: s.dim_b(),
            state,
            alice,
            bob,
        }
    }

    pub fn to_strategy(&self) -> Result<QuantumStrategy> {
        let state = match &self.state {
            StateFile::Pure(v) => SharedState::Pure(CVec::from_iterator(
                v.len(),
                v.iter().map(|z| C64::new(z[0], z[1])),
            )),
            StateFile::Density(m) => SharedState::Density(matrix_in(m)?),
        };
        let alice = self
            .alice
            .iter()
            .map(|p| p.iter().map(matrix_in).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let bob = match &self.bob {
            BobFile::Povms(p) => BobSide::Povms(
                p.iter()
                    .map(|v| v.iter().map(matrix_in).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?,
            ),
            BobFile::Observables(o) => {
                BobSide::Observables(o.iter().map(matrix_in).collect::<Result<Vec<_>>>()?)
            }
        };
        QuantumStrategy::new(self.dim_a, self.dim_b, state, alice, bob)
    }
}

/// Serialize with sorted keys. `pretty` adds indentation only.
pub fn to_canonical_json<T: Serialize>(value: &T, pretty: bool) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(if pretty {
        serde_json::to_string_pretty(&v)?
    } else {
        serde_json::to_string(&v)?
    })
}

/// Parse JSON, reporting failures by byte offset into `text`.
pub fn from_json_text<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)) as u64
}
