//! Optimization engines: exact classical enumeration, local search, see-saw
//! quantum lower bounds, Monte Carlo referees and alternating ascent in the
//! complex vector model.

mod exact;
mod grothendieck;
mod local;
mod montecarlo;
mod seesaw;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::DeterministicLocalStrategy;

pub use exact::{classical_bias_exact, classical_value_exact, ENUMERATION_BUDGET};
pub use grothendieck::{grothendieck_ascent, GrothendieckOutcome};
pub use local::{
    asym_kv_bias_of_map, classical_local_search, classical_local_search_from, AsymKvObjective,
    FunctionalObjective, GameObjective, LocalObjective, FAST_ASYM_MAX_L,
};
pub use montecarlo::{monte_carlo_estimate, MonteCarloGame, Players, MC_CHUNK};
pub use seesaw::{see_saw_lower_bound, SeeSawOutcome, SeeSawTarget, MAX_SEE_SAW_DIM};

/// Stream domains; one per randomized engine so a shared seed never reuses
/// a stream across engines.
pub(crate) mod domain {
    pub const LOCAL: u32 = 1;
    pub const SEE_SAW: u32 = 2;
    pub const MONTE_CARLO: u32 = 3;
    pub const GROTHENDIECK: u32 = 4;
    pub const BOUNDS: u32 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Thread count hint; `None` uses the ambient pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 200,
            seed: 0,
            workers: None,
        }
    }
}

impl SearchConfig {
    pub fn new(restarts: usize, iterations: usize, seed: u64) -> Self {
        Self {
            restarts,
            iterations,
            seed,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.iterations == 0 {
            return Err(Error::invalid(
                "search config",
                "restarts and iterations must be positive",
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid(
                "search config",
                "worker count must be positive",
            ));
        }
        Ok(())
    }

    /// Run `f` on a pool of the requested size, or the ambient pool.
    pub(crate) fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        with_workers(self.workers, f)
    }
}

pub(crate) fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Resource(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Result of a classical search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalOutcome {
    /// `|value|` for bias functionals, the winning probability for games.
    pub value: f64,
    /// The certificate's value before taking absolute values.
    pub signed_value: f64,
    pub strategy: DeterministicLocalStrategy,
    /// `true` when the value is certified optimal.
    pub exact: bool,
    /// Number of Alice maps (exact) or ascent steps (search) evaluated.
    pub evaluated: u64,
    /// Objective after each ascent step of the best restart.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

/// Relative tie tolerance: a later candidate replaces the incumbent only if
/// it is larger by more than this.
pub(crate) const TIE_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_TOL * incumbent.abs().max(1.0)
}
