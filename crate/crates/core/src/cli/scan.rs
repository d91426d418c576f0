//! The scan over `l`: explicit quantum bias against classical bias in the
//! asymmetric KV game.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{violation_report, Bound, Method};
use crate::error::{Error, Result};
use crate::kvfactory::{
    build_asym_kv, eta_default, fourier_bob_transform, kv_explicit_strategy,
    kv_explicit_value_closed_form, LogBase, EXPLICIT_MAX_L,
};
use crate::scenario::{correlation_from_quantum, evaluate_functional, BobSide};
use crate::solve::{
    classical_bias_exact, classical_local_search_from, AsymKvObjective, SearchConfig,
    FAST_ASYM_MAX_L,
};

pub const SCAN_MAX_L: u32 = 5;
pub const SCAN_HEADER: [&str; 8] = [
    "l",
    "n",
    "eta",
    "beta_star_lb",
    "beta_classical",
    "classical_method",
    "ratio",
    "runtime_ms",
];
/// The transform-identity value must match the closed form this closely.
const IDENTITY_TOL: f64 = 1e-9;
const RECOMPUTE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaMode {
    /// `1/2 - 1/log n`; degenerate levels are left without values.
    Auto(LogBase),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub eta: EtaMode,
    /// Per-level rates taking precedence over `eta`.
    pub overrides: BTreeMap<u32, f64>,
    pub search: SearchConfig,
    pub timings: bool,
}

/// One CSV row; field order is the column order. A row whose `eta` is empty
/// had a degenerate automatic rate and carries no values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub l: u32,
    pub n: usize,
    pub eta: Option<f64>,
    pub beta_star_lb: Option<f64>,
    pub beta_classical: Option<f64>,
    pub classical_method: String,
    pub ratio: Option<f64>,
    pub runtime_ms: Option<u64>,
}

/// `A:B` inclusive, or a single `L`. `A > B` is an empty range.
pub fn parse_l_range(s: &str) -> Result<RangeInclusive<u32>> {
    let bad = || Error::Usage(format!("expected L or A:B, got '{s}'"));
    let num = |v: &str| v.trim().parse::<u32>().map_err(|_| bad());
    match s.split_once(':') {
        Some((a, b)) => Ok(num(a)?..=num(b)?),
        None => {
            let l = num(s)?;
            Ok(l..=l)
        }
    }
}

fn row_eta(l: u32, cfg: &ScanConfig) -> Result<Option<f64>> {
    if let Some(&v) = cfg.overrides.get(&l) {
        return Ok(Some(v));
    }
    match cfg.eta {
        EtaMode::Fixed(v) => Ok(Some(v)),
        EtaMode::Auto(base) => {
            let d = eta_default(1u64 << l, base)?;
            Ok((!d.degenerate).then_some(d.value))
        }
    }
}

/// Explicit-strategy bias. Up to `EXPLICIT_MAX_L` it is evaluated through the
/// Fourier-transformed strategy and must agree with the closed form, which
/// is what is reported.
fn beta_star(l: u32, eta: f64) -> Result<f64> {
    let closed = kv_explicit_value_closed_form(l, eta)?;
    if l <= EXPLICIT_MAX_L {
        let game = build_asym_kv(l, eta)?;
        let s = kv_explicit_strategy(l)?;
        let obs = fourier_bob_transform(
            s.bob_povms().expect("explicit strategy has POVM Bob"),
            game.table(),
        )?;
        let t = s.with_bob(BobSide::Observables(obs))?;
        let v = evaluate_functional(game.functional(), &correlation_from_quantum(&t)?)?;
        if (v - closed).abs() > IDENTITY_TOL {
            return Err(Error::Numerical(format!(
                "transformed strategy gives {v} at l={l}, closed form {closed}"
            )));
        }
    }
    Ok(closed)
}

/// Exact at `l = 2`, local search from the all-zero map up to
/// `FAST_ASYM_MAX_L`, and the structured map's bias `(1 - eta)^l` beyond.
fn beta_classical(l: u32, eta: f64, search: &SearchConfig) -> Result<Bound> {
    let game = build_asym_kv(l, eta)?;
    if l <= 2 {
        let v = classical_bias_exact(&game.dense_functional()?)?.value;
        return Ok(Bound::new(v, Method::Exact));
    }
    if l <= FAST_ASYM_MAX_L {
        let obj = AsymKvObjective::new(&game)?;
        let zero = vec![0; game.table().coset_count() as usize];
        let v = classical_local_search_from(&obj, search, &[zero])?.value;
        return Ok(Bound::new(v, Method::LocalSearch));
    }
    Ok(Bound::new((1.0 - eta).powi(l as i32), Method::Structured))
}

/// Rows in ascending `l`.
pub fn run_scan(levels: RangeInclusive<u32>, cfg: &ScanConfig) -> Result<Vec<ScanRow>> {
    cfg.search.validate()?;
    let mut rows = Vec::new();
    for l in levels {
        if !(2..=SCAN_MAX_L).contains(&l) {
            return Err(Error::invalid(
                "l",
                format!("scan covers 2 <= l <= {SCAN_MAX_L}, got {l}"),
            ));
        }
        let n = 1usize << l;
        let start = Instant::now();
        let Some(eta) = row_eta(l, cfg)? else {
            rows.push(ScanRow {
                l,
                n,
                eta: None,
                beta_star_lb: None,
                beta_classical: None,
                classical_method: "eta-required".into(),
                ratio: None,
                runtime_ms: None,
            });
            continue;
        };
        let quantum = beta_star(l, eta)?;
        let classical = beta_classical(l, eta, &cfg.search)?;
        let report = violation_report(classical, Bound::new(quantum, Method::ClosedForm))?;
        let back = report.ratio * classical.value;
        if (back - quantum).abs() > RECOMPUTE_TOL * quantum.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "ratio recomputation gives {back}, expected {quantum}"
            )));
        }
        rows.push(ScanRow {
            l,
            n,
            eta: Some(eta),
            beta_star_lb: Some(quantum),
            beta_classical: Some(classical.value),
            classical_method: classical.method.as_str().into(),
            ratio: Some(report.ratio),
            runtime_ms: cfg.timings.then(|| start.elapsed().as_millis() as u64),
        });
    }
    Ok(rows)
}

/// CSV with the fixed header, also when there are no rows.
pub fn scan_csv(rows: &[ScanRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(SCAN_HEADER).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(eta: EtaMode) -> ScanConfig {
        ScanConfig {
            eta,
            overrides: BTreeMap::new(),
            search: SearchConfig::new(2, 30, 0),
            timings: false,
        }
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_l_range("2:5").unwrap(), 2..=5);
        assert_eq!(parse_l_range("3").unwrap(), 3..=3);
        assert!(parse_l_range("5:2").unwrap().is_empty());
        assert!(parse_l_range("a:2").is_err());
    }

    #[test]
    fn l2_row_at_quarter_noise() {
        let rows = run_scan(2..=2, &config(EtaMode::Fixed(0.25))).unwrap();
        let r = &rows[0];
        assert_eq!(
            (r.beta_star_lb, r.beta_classical),
            (Some(7.0 / 16.0), Some(9.0 / 16.0))
        );
        assert_eq!(r.classical_method, "exact");
        assert!((r.ratio.unwrap() - 7.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn auto_rate_marks_degenerate_row() {
        let rows = run_scan(2..=3, &config(EtaMode::Auto(LogBase::Two))).unwrap();
        assert_eq!(rows[0].eta, None);
        assert_eq!(rows[0].classical_method, "eta-required");
        let r = &rows[1];
        assert!((r.eta.unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.beta_star_lb.unwrap() - 37.0 / 72.0).abs() < 1e-12);
        assert_eq!(r.classical_method, "local-search");
    }

    #[test]
    fn override_wins_over_auto() {
        let mut cfg = config(EtaMode::Auto(LogBase::Two));
        cfg.overrides.insert(2, 0.25);
        let rows = run_scan(2..=2, &cfg).unwrap();
        assert_eq!(rows[0].eta, Some(0.25));
    }

    #[test]
    fn empty_range_gives_header_only() {
        let rows = run_scan(parse_l_range("3:2").unwrap(), &config(EtaMode::Fixed(0.25))).unwrap();
        assert!(rows.is_empty());
        assert_eq!(scan_csv(&rows).unwrap(), SCAN_HEADER.join(",") + "\n");
    }

    #[test]
    fn csv_cells_round_trip() {
        let rows = run_scan(2..=2, &config(EtaMode::Fixed(0.1))).unwrap();
        let text = scan_csv(&rows).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<ScanRow> = rd
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn out_of_range_level_rejected() {
        assert!(run_scan(6..=6, &config(EtaMode::Fixed(0.25))).is_err());
    }
}
