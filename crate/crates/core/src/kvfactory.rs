//! The Khot-Vishnoi game, its asymmetric variant, the explicit quantum
//! strategy for it and the Fourier transform of Bob's measurements that
//! links the two games.
//!
//! Questions are coset indices of a [`CosetTable`]; answers are labels
//! inside a coset. In the asymmetric game Bob's input `([y], k)` has index
//! `y * n + k`, and Bob's output 0 reads `+1`, output 1 reads `-1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2kit::{character, CosetTable};
use crate::numeric::{outer, CMat, CVec, C64};
use crate::scenario::{
    validate_povm, AsymmetricBellFunctional, BobSide, FunctionalKind, NonlocalGame,
    QuantumStrategy, SharedState,
};

/// Dense games and functionals are built up to this `l`.
pub const DENSE_MAX_L: u32 = 3;
/// Explicit strategies are materialized up to this `l` (`l = 4` needs
/// 2^20 matrices of size 16).
pub const EXPLICIT_MAX_L: u32 = 3;
/// Per-coset noise masses are cached up to this many cosets.
const COSET_MASS_CACHE: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "e")]
    E,
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(LogBase::Two),
            "e" => Ok(LogBase::E),
            other => Err(Error::Usage(format!(
                "log base must be 2 or e, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::Two => "2",
            LogBase::E => "e",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaDefault {
    pub value: f64,
    /// Set when the formula gives 0: the game is noiseless.
    pub degenerate: bool,
}

/// `1/2 - 1/log(n)`.
pub fn eta_default(n: u64, base: LogBase) -> Result<EtaDefault> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(
            "n",
            format!("expected a power of two >= 2, got {n}"),
        ));
    }
    let log = match base {
        LogBase::Two => n.trailing_zeros() as f64,
        LogBase::E => (n as f64).ln(),
    };
    let value = 0.5 - 1.0 / log;
    if value < 0.0 {
        return Err(Error::Precondition(format!(
            "default noise 1/2 - 1/log_{base}({n}) = {value} is negative; pass eta explicitly"
        )));
    }
    Ok(EtaDefault {
        value,
        degenerate: value <= 0.0,
    })
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&eta) {
        return Err(Error::invalid("eta", format!("{eta} is outside [0, 1/2]")));
    }
    Ok(())
}

/// Noise law on `{0,1}^n`: `P(z) = eta^|z| (1-eta)^(n-|z|)`, tabulated by
/// weight.
#[derive(Debug, Clone)]
pub struct NoiseLaw {
    eta: f64,
    by_weight: Vec<f64>,
}

impl NoiseLaw {
    pub fn new(n: usize, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        let by_weight = (0..=n)
            .map(|w| eta.powi(w as i32) * (1.0 - eta).powi((n - w) as i32))
            .collect();
        Ok(Self { eta, by_weight })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[inline]
    pub fn prob(&self, z: u64) -> f64 {
        self.by_weight[z.count_ones() as usize]
    }

    pub fn by_weight(&self) -> &[f64] {
        &self.by_weight
    }
}

/// Shared data of both games: coset table, noise law and cached coset
/// masses `S(c) = sum_{z in c} P(z)`.
#[derive(Debug, Clone)]
struct KvCore {
    table: Arc<CosetTable>,
    noise: NoiseLaw,
    coset_mass: Option<Arc<Vec<f64>>>,
}

impl KvCore {
    fn new(table: Arc<CosetTable>, eta: f64) -> Result<Self> {
        let noise = NoiseLaw::new(table.n(), eta)?;
        let mut core = Self {
            table,
            noise,
            coset_mass: None,
        };
        if core.table.coset_count() <= COSET_MASS_CACHE {
            let masses = (0..core.table.coset_count())
                .map(|c| core.mass_uncached(c))
                .collect();
            core.coset_mass = Some(Arc::new(masses));
        }
        Ok(core)
    }

    fn mass_uncached(&self, c: u64) -> f64 {
        let rep = self.table.representative(c);
        self.table
            .subgroup()
            .iter()
            .map(|&h| self.noise.prob(rep ^ h))
            .sum()
    }

    #[inline]
    fn mass(&self, c: u64) -> f64 {
        match &self.coset_mass {
            Some(m) => m[c as usize],
            None => self.mass_uncached(c),
        }
    }

    /// Coset of `[x] ⊕ [y]`.
    #[inline]
    fn sum_coset(&self, x: u64, y: u64) -> u64 {
        self.table
            .coset_of(self.table.representative(x) ^ self.table.representative(y))
    }

    /// `2^-n`.
    fn inv_space(&self) -> f64 {
        0.5f64.powi(self.table.n() as i32)
    }
}

/// The KV game: questions `([x], [y])` and answers `a in [x]`, `b in [y]`,
/// won with weight `(n/2^n) P(a ⊕ b)`.
#[derive(Debug, Clone)]
pub struct KvGame {
    core: KvCore,
}

pub fn build_kv_game(l: u32, eta: f64) -> Result<KvGame> {
    KvGame::with_table(Arc::new(CosetTable::new(l)?), eta)
}

impl KvGame {
    pub fn with_table(table: Arc<CosetTable>, eta: f64) -> Result<Self> {
        Ok(Self {
            core: KvCore::new(table, eta)?,
        })
    }

    pub fn l(&self) -> u32 {
        self.core.table.l()
    }

    pub fn n(&self) -> usize {
        self.core.table.n()
    }

    pub fn eta(&self) -> f64 {
        self.core.noise.eta()
    }

    pub fn table(&self) -> &Arc<CosetTable> {
        &self.core.table
    }

    pub fn noise(&self) -> &NoiseLaw {
        &self.core.noise
    }

    /// `pi([x],[y]) = (n/2^n) sum_{z in [x ⊕ y]} P(z)`.
    pub fn question_prob(&self, x: u64, y: u64) -> f64 {
        self.n() as f64 * self.core.inv_space() * self.core.mass(self.core.sum_coset(x, y))
    }

    /// `pi V` at labels `(a, b)`.
    pub fn weight(&self, x: u64, y: u64, a: usize, b: usize) -> f64 {
        let t = &self.core.table;
        let z = t.element(x, a) ^ t.element(y, b);
        self.n() as f64 * self.core.inv_space() * self.core.noise.prob(z)
    }

    /// Dense game object; available for `l <= 3`.
    pub fn to_game(&self) -> Result<NonlocalGame> {
        if self.l() > DENSE_MAX_L {
            return Err(Error::Resource(format!(
                "dense KV games are limited to l <= {DENSE_MAX_L}"
            )));
        }
        let c = self.core.table.coset_count();
        let n = self.n();
        let mut question = Vec::with_capacity((c * c) as usize);
        let mut weights = Vec::with_capacity((c * c) as usize * n * n);
        for x in 0..c {
            for y in 0..c {
                question.push(self.question_prob(x, y));
                for a in 0..n {
                    for b in 0..n {
                        weights.push(self.weight(x, y, a, b));
                    }
                }
            }
        }
        NonlocalGame::dense((c as usize, c as usize, n, n), question, weights)
    }
}

/// The asymmetric KV game: Alice gets `[x]`, Bob gets `([x ⊕ z], k)`; they
/// win iff Bob's sign equals `(-1)^<(a ⊕ z)~, k>`.
#[derive(Debug, Clone)]
pub struct AsymKvGame {
    core: KvCore,
    functional: AsymmetricBellFunctional,
}

pub fn build_asym_kv(l: u32, eta: f64) -> Result<AsymKvGame> {
    AsymKvGame::with_table(Arc::new(CosetTable::new(l)?), eta)
}

impl AsymKvGame {
    pub fn with_table(table: Arc<CosetTable>, eta: f64) -> Result<Self> {
        let core = KvCore::new(table, eta)?;
        let c = core.table.coset_count() as usize;
        let n = core.table.n();
        let oracle_core = core.clone();
        let functional = AsymmetricBellFunctional::from_oracle(c, c * n, n, move |x, yk, a| {
            asym_coeff(&oracle_core, x, yk, a)
        })?
        .with_kind(FunctionalKind::GameBias)
        .with_tag(format!("asym-kv l={} eta={}", core.table.l(), eta));
        let functional = if core.table.l() <= DENSE_MAX_L {
            functional.materialize()?
        } else {
            functional
        };
        Ok(Self { core, functional })
    }

    pub fn l(&self) -> u32 {
        self.core.table.l()
    }

    pub fn n(&self) -> usize {
        self.core.table.n()
    }

    pub fn eta(&self) -> f64 {
        self.core.noise.eta()
    }

    pub fn table(&self) -> &Arc<CosetTable> {
        &self.core.table
    }

    pub fn noise(&self) -> &NoiseLaw {
        &self.core.noise
    }

    /// Bias functional; dense for `l <= 3`, oracle-backed above.
    pub fn functional(&self) -> &AsymmetricBellFunctional {
        &self.functional
    }

    /// Dense coefficients; a resource error for `l >= 4`.
    pub fn dense_functional(&self) -> Result<AsymmetricBellFunctional> {
        if self.l() > DENSE_MAX_L {
            return Err(Error::Resource(format!(
                "dense asymmetric KV functionals are limited to l <= {DENSE_MAX_L}; l = {} needs {} coefficients",
                self.l(),
                (self.core.table.coset_count() as u128).pow(2) * (self.n() as u128).pow(2)
            )));
        }
        self.functional.materialize()
    }

    pub fn coeff(&self, x: u64, y: u64, k: usize, a: usize) -> f64 {
        asym_coeff(&self.core, x as usize, y as usize * self.n() + k, a)
    }

    /// `pi([x], ([y], k)) = 2^-n sum_{z in [x ⊕ y]} P(z)`.
    pub fn question_prob(&self, x: u64, y: u64) -> f64 {
        self.core.inv_space() * self.core.mass(self.core.sum_coset(x, y))
    }

    /// Winning sign `(-1)^<(a ⊕ z)~, k>` for Alice's label `a` in `[x]` and
    /// noise `z`.
    pub fn winning_sign(&self, x: u64, a: usize, z: u64, k: usize) -> f64 {
        let t = &self.core.table;
        let (_, label) = t.locate_packed(t.element(x, a) ^ z);
        character(label as u64, k as u64)
    }

    /// The game with Bob's answers as outputs 0 (`+1`) and 1 (`-1`); dense
    /// for `l <= 3`.
    pub fn to_game(&self) -> Result<NonlocalGame> {
        if self.l() > DENSE_MAX_L {
            return Err(Error::Resource(format!(
                "dense asymmetric KV games are limited to l <= {DENSE_MAX_L}"
            )));
        }
        let m = &self.functional;
        let (c, nb, n) = (m.alice_inputs(), m.bob_inputs(), self.n());
        let mut question = Vec::with_capacity(c * nb);
        let mut weights = Vec::with_capacity(c * nb * n * 2);
        for x in 0..c {
            for yk in 0..nb {
                let pi = self.question_prob(x as u64, (yk / n) as u64);
                question.push(pi);
                for a in 0..n {
                    let v = m.coeff(x, yk, a);
                    // Clamp rounding below zero when one sign carries all mass.
                    weights.push(((pi + v) / 2.0).clamp(0.0, pi));
                    weights.push(((pi - v) / 2.0).clamp(0.0, pi));
                }
            }
        }
        NonlocalGame::dense((c, nb, n, 2), question, weights)
    }
}

/// `M^a_{[x],([y],k)} = 2^-n sum_{z in [x ⊕ y]} P(z) (-1)^<(a ⊕ z)~, k>`.
fn asym_coeff(core: &KvCore, x: usize, yk: usize, a: usize) -> f64 {
    let t = &core.table;
    let n = t.n();
    let (y, k) = ((yk / n) as u64, (yk % n) as u64);
    let alice = t.element(x as u64, a);
    let rep = t.representative(core.sum_coset(x as u64, y));
    let mut acc = 0.0;
    for &h in t.subgroup() {
        let z = rep ^ h;
        let (_, label) = t.locate_packed(alice ^ z);
        acc += core.noise.prob(z) * character(label as u64, k);
    }
    acc * core.inv_space()
}

/// `u_c = n^{-1/2} sum_i (-1)^{c(i)} |i>`.
pub fn u_vector(n: usize, c: u64) -> CVec {
    let s = 1.0 / (n as f64).sqrt();
    CVec::from_fn(n, |i, _| {
        let bit = (c >> (n - 1 - i)) & 1;
        C64::new(if bit == 0 { s } else { -s }, 0.0)
    })
}

/// Rank-one projectors onto the u-vectors of a coset, in label order.
pub fn coset_povm(table: &CosetTable, coset: u64) -> Vec<CMat> {
    (0..table.n())
        .map(|a| outer(&u_vector(table.n(), table.element(coset, a))))
        .collect()
}

/// `n^{-1/2} sum_i |ii>`.
pub fn maximally_entangled(n: usize) -> CVec {
    let s = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    CVec::from_fn(n * n, |idx, _| {
        if idx / n == idx % n {
            s
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Maximally entangled state with the coset u-vector POVMs on both sides.
pub fn kv_explicit_strategy(l: u32) -> Result<QuantumStrategy> {
    kv_explicit_strategy_with_table(&CosetTable::new(l)?)
}

pub fn kv_explicit_strategy_with_table(table: &CosetTable) -> Result<QuantumStrategy> {
    if table.l() > EXPLICIT_MAX_L {
        return Err(Error::Resource(format!(
            "explicit strategies are materialized for l <= {EXPLICIT_MAX_L}; use coset_povm per coset above"
        )));
    }
    let n = table.n();
    let povms: Vec<Vec<CMat>> = (0..table.coset_count())
        .map(|c| coset_povm(table, c))
        .collect();
    QuantumStrategy::new(
        n,
        n,
        SharedState::Pure(maximally_entangled(n)),
        povms.clone(),
        BobSide::Povms(povms),
    )
}

/// `B_{[y],k} = sum_b (-1)^<b~, k> F^b_{[y]}`, indexed `y * n + k`.
pub fn fourier_bob_transform(bob_povms: &[Vec<CMat>], table: &CosetTable) -> Result<Vec<CMat>> {
    let n = table.n();
    if bob_povms.len() as u64 != table.coset_count() {
        return Err(Error::dim(format!(
            "{} POVMs for {} cosets",
            bob_povms.len(),
            table.coset_count()
        )));
    }
    let mut out = Vec::with_capacity(bob_povms.len() * n);
    for (y, povm) in bob_povms.iter().enumerate() {
        if povm.len() != n {
            return Err(Error::dim(format!(
                "POVM {y} has {} outputs, expected {n}",
                povm.len()
            )));
        }
        validate_povm(povm, crate::numeric::VALIDATION_TOL)?
            .into_result("Bob POVM")
            .map_err(|e| Error::invalid("Bob POVM", format!("coset {y}: {e}")))?;
        for k in 0..n as u64 {
            let mut b = CMat::zeros(povm[0].nrows(), povm[0].ncols());
            for (label, f) in povm.iter().enumerate() {
                b += f.scale(character(label as u64, k));
            }
            out.push(b);
        }
    }
    Ok(out)
}

/// Value of the explicit strategy on the KV game, `mu^2 (1 - 1/n) + 1/n`
/// with `mu = 1 - 2 eta`.
pub fn kv_explicit_value_closed_form(l: u32, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if l == 0 || l > 63 {
        return Err(Error::invalid("l", format!("{l} is out of range")));
    }
    let inv_n = 0.5f64.powi(l as i32);
    let mu = 1.0 - 2.0 * eta;
    Ok(mu * mu * (1.0 - inv_n) + inv_n)
}
