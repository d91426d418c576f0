//! Alternating maximization of `|sum_{x,y} M_{xy} <u_x, v_y>|` over unit
//! vectors in `C^dim`.

use rayon::prelude::*;

use super::{domain, improves, SearchConfig};
use crate::error::{Error, Result};
use crate::numeric::{random_unit_vector, CMat, CVec, NeumaierSum};
use crate::rng::substream;

#[derive(Debug, Clone)]
pub struct GrothendieckOutcome {
    pub value: f64,
    pub u: Vec<CVec>,
    pub v: Vec<CVec>,
    /// Objective after each sweep of the best restart.
    pub trace: Vec<f64>,
}

fn normalized(w: CVec, fallback: &CVec) -> CVec {
    let norm = w.norm();
    if norm > 0.0 {
        w.unscale(norm)
    } else {
        fallback.clone()
    }
}

/// One restart from random `u`. Each half-step is an exact maximization:
/// `v_y = w_y / |w_y|` with `w_y = sum_x conj(M_xy) u_x`, then
/// `u_x = t_x / |t_x|` with `t_x = sum_y M_xy v_y`.
fn ascend(
    m: &CMat,
    mut u: Vec<CVec>,
    dim: usize,
    iterations: usize,
) -> (f64, Vec<CVec>, Vec<CVec>, Vec<f64>) {
    let (rows, cols) = m.shape();
    let zero = CVec::zeros(dim);
    let mut v: Vec<CVec> = vec![zero.clone(); cols];
    let mut value = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    for _ in 0..iterations {
        for (y, vy) in v.iter_mut().enumerate() {
            let mut w = zero.clone();
            for (x, ux) in u.iter().enumerate() {
                w += ux * m[(x, y)].conj();
            }
            *vy = normalized(w, vy);
        }
        let mut sum = NeumaierSum::new();
        for (x, ux) in u.iter_mut().enumerate() {
            let mut t = zero.clone();
            for (y, vy) in v.iter().enumerate() {
                t += vy * m[(x, y)];
            }
            sum.add(t.norm());
            *ux = normalized(t, ux);
        }
        let next = sum.value();
        let done = !improves(next, value);
        if next > value {
            value = next;
            trace.push(next);
        }
        if done {
            break;
        }
    }
    debug_assert!(rows == u.len());
    (value, u, v, trace)
}

/// Best lower bound over `config.restarts` random starts.
pub fn grothendieck_ascent(
    m: &CMat,
    dim: usize,
    config: &SearchConfig,
) -> Result<GrothendieckOutcome> {
    config.validate()?;
    if dim == 0 {
        return Err(Error::invalid("dimension", "dim must be at least 1"));
    }
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::dim("matrix must be non-empty"));
    }
    let runs: Vec<_> = config.install(|| {
        (0..config.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = substream(config.seed, domain::GROTHENDIECK, r as u64);
                let u = (0..m.nrows())
                    .map(|_| random_unit_vector(&mut rng, dim))
                    .collect();
                ascend(m, u, dim, config.iterations)
            })
            .collect()
    })?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate().skip(1) {
        if improves(r.0, runs[best].0) {
            best = i;
        }
    }
    let (value, u, v, trace) = runs.into_iter().nth(best).unwrap();
    Ok(GrothendieckOutcome { value, u, v, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{from_real, C64};
    use crate::rng::stream;
    use crate::scenario::AsymmetricBellFunctional;
    use crate::solve::classical_bias_exact;
    use rand::Rng;

    fn value_of(m: &CMat, u: &[CVec], v: &[CVec]) -> f64 {
        let mut s = C64::new(0.0, 0.0);
        for (x, ux) in u.iter().enumerate() {
            for (y, vy) in v.iter().enumerate() {
                s += m[(x, y)] * ux.dotc(vy);
            }
        }
        s.norm()
    }

    #[test]
    fn one_by_one() {
        let r =
            grothendieck_ascent(&from_real(1, 1, &[1.0]), 1, &SearchConfig::new(2, 10, 0)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hadamard_matrix_reaches_two_root_two() {
        let m = from_real(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let r = grothendieck_ascent(&m, 2, &SearchConfig::new(10, 500, 1)).unwrap();
        assert!((r.value - 2.0 * 2f64.sqrt()).abs() < 1e-6, "{}", r.value);
        assert!((value_of(&m, &r.u, &r.v) - r.value).abs() < 1e-9);
    }

    #[test]
    fn sweeps_are_monotone() {
        let mut rng = stream(2, 0);
        let m = CMat::from_fn(5, 7, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let r = grothendieck_ascent(&m, 3, &SearchConfig::new(4, 100, 9)).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn scalar_model_on_nonnegative_matrices_is_classical() {
        let mut rng = stream(3, 0);
        for _ in 0..10 {
            let data: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
            let m = from_real(3, 4, &data);
            let r = grothendieck_ascent(&m, 1, &SearchConfig::new(3, 100, 1)).unwrap();
            // Single-output functional with the same coefficients.
            let f = AsymmetricBellFunctional::dense(3, 4, 1, data).unwrap();
            assert!(r.value <= classical_bias_exact(&f).unwrap().value + 1e-9);
        }
    }
}
