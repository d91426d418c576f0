//! See-saw lower bounds on quantum values.
//!
//! One sweep updates Bob, then Alice, then the state, each against the
//! other two held fixed:
//! - Bob observables: the sign of the effective operator (exact).
//! - Bob POVMs and Alice POVMs: greedy. Candidate orthonormal bases are the
//!   eigenbases of the effective operators; every basis vector goes to the
//!   output scoring it highest, and the current measurement is kept when no
//!   candidate beats it. For two outputs the candidates include the exact
//!   optimum.
//! - State: top eigenvector of the Bell operator, when it is small enough.
//!
//! Every step is non-decreasing, so the result is at least the value of the
//! starting strategy.

use rayon::prelude::*;

use super::{domain, improves, SearchConfig};
use crate::error::{Error, Result};
use crate::numeric::{
    alice_reduced, bob_reduced, hermitian_eigen, hermitian_sign, hermitize, kron, outer,
    random_projective_povm, random_sign_observable, random_unit_vector, state_matrix, CMat, CVec,
};
use crate::rng::substream;
use crate::scenario::{
    correlation_from_quantum, evaluate_functional, game_value_of_distribution, joint_from_quantum,
    AsymmetricBellFunctional, BobSide, NonlocalGame, QuantumStrategy, SharedState,
};

pub const MAX_SEE_SAW_DIM: usize = 64;
/// The state is re-optimized only while the Bell operator has at most this
/// many rows.
const STATE_UPDATE_MAX: usize = 256;

#[derive(Debug, Clone, Copy)]
pub enum SeeSawTarget<'a> {
    /// `|<M, E>|` with Bob observables.
    Functional(&'a AsymmetricBellFunctional),
    /// Winning probability with POVMs on both sides.
    Game(&'a NonlocalGame),
}

#[derive(Debug, Clone)]
pub struct SeeSawOutcome {
    pub value: f64,
    pub signed_value: f64,
    pub strategy: QuantumStrategy,
    pub initial_value: Option<f64>,
    /// Objective after each sweep of the best run.
    pub trace: Vec<f64>,
}

#[derive(Clone)]
enum Bob {
    Observables(Vec<CMat>),
    Povms(Vec<Vec<CMat>>),
}

#[derive(Clone)]
struct Point {
    psi: CVec,
    alice: Vec<Vec<CMat>>,
    bob: Bob,
}

/// Dense view of the target. `coeff(x, y, a, b)` is the weight of
/// `E^a_x (x) F^b_y`, or of `E^a_x (x) B_y` with `b = 0` in functional mode.
struct Problem<'a> {
    n: usize,
    np: usize,
    ka: usize,
    kb: usize,
    data: &'a [f64],
    sign: f64,
    observables: bool,
    da: usize,
    db: usize,
}

impl Problem<'_> {
    #[inline]
    fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.sign * self.data[((x * self.np + y) * self.ka + a) * self.kb + b]
    }

    fn bob_outputs(&self) -> usize {
        if self.observables {
            1
        } else {
            self.kb
        }
    }

    /// Bob's effective operators: `sum_{x,a} c (Psi^dag E Psi)^T` per `(y, b)`.
    fn bob_effective(&self, psi_m: &CMat, alice: &[Vec<CMat>]) -> Vec<Vec<CMat>> {
        let g: Vec<CMat> = alice
            .iter()
            .flatten()
            .map(|e| bob_reduced(psi_m, e).transpose())
            .collect();
        (0..self.np)
            .into_par_iter()
            .map(|y| {
                (0..self.bob_outputs())
                    .map(|b| {
                        let mut h = CMat::zeros(self.db, self.db);
                        for x in 0..self.n {
                            for a in 0..self.ka {
                                let c = self.coeff(x, y, a, b);
                                if c != 0.0 {
                                    h += g[x * self.ka + a].scale(c);
                                }
                            }
                        }
                        h
                    })
                    .collect()
            })
            .collect()
    }

    fn bob_ops(bob: &Bob) -> Vec<Vec<CMat>> {
        match bob {
            Bob::Observables(o) => o.iter().map(|b| vec![b.clone()]).collect(),
            Bob::Povms(p) => p.clone(),
        }
    }

    /// Alice's effective operators per `(x, a)`.
    fn alice_effective(&self, psi_m: &CMat, bob: &Bob) -> Vec<Vec<CMat>> {
        let ops = Self::bob_ops(bob);
        let r: Vec<Vec<CMat>> = ops
            .iter()
            .map(|v| v.iter().map(|f| alice_reduced(psi_m, f)).collect())
            .collect();
        (0..self.n)
            .into_par_iter()
            .map(|x| {
                (0..self.ka)
                    .map(|a| {
                        let mut y_op = CMat::zeros(self.da, self.da);
                        for (y, ry) in r.iter().enumerate() {
                            for (b, rb) in ry.iter().enumerate() {
                                let c = self.coeff(x, y, a, b);
                                if c != 0.0 {
                                    y_op += rb.scale(c);
                                }
                            }
                        }
                        y_op
                    })
                    .collect()
            })
            .collect()
    }

    fn bell_operator(&self, p: &Point) -> CMat {
        let ops = Self::bob_ops(&p.bob);
        let d = self.da * self.db;
        let mut w = CMat::zeros(d, d);
        for x in 0..self.n {
            for a in 0..self.ka {
                let mut side = CMat::zeros(self.db, self.db);
                for (y, oy) in ops.iter().enumerate() {
                    for (b, f) in oy.iter().enumerate() {
                        let c = self.coeff(x, y, a, b);
                        if c != 0.0 {
                            side += f.scale(c);
                        }
                    }
                }
                w += kron(&p.alice[x][a], &side);
            }
        }
        hermitize(&w)
    }

    fn objective(&self, p: &Point) -> f64 {
        let psi_m = state_matrix(&p.psi, self.da, self.db);
        let ys = self.alice_effective(&psi_m, &p.bob);
        ys.iter()
            .zip(&p.alice)
            .map(|(yx, ex)| povm_score(ex, yx))
            .sum()
    }

    fn sweep(&self, p: &mut Point) -> f64 {
        let psi_m = state_matrix(&p.psi, self.da, self.db);
        let h = self.bob_effective(&psi_m, &p.alice);
        p.bob = match &p.bob {
            Bob::Observables(_) => {
                Bob::Observables(h.iter().map(|hy| hermitian_sign(&hy[0])).collect())
            }
            Bob::Povms(cur) => Bob::Povms(
                h.iter()
                    .zip(cur)
                    .map(|(hy, fy)| greedy_povm(hy, fy))
                    .collect(),
            ),
        };
        let ys = self.alice_effective(&psi_m, &p.bob);
        p.alice = ys
            .iter()
            .zip(&p.alice)
            .map(|(yx, ex)| greedy_povm(yx, ex))
            .collect();
        let value: f64 = ys
            .iter()
            .zip(&p.alice)
            .map(|(yx, ex)| povm_score(ex, yx))
            .sum();
        if self.da * self.db > STATE_UPDATE_MAX {
            return value;
        }
        let (vals, vecs) = hermitian_eigen(&self.bell_operator(p));
        let top = vals[vals.len() - 1];
        if improves(top, value) {
            let v = vecs.column(vecs.ncols() - 1).into_owned();
            let norm = v.norm();
            p.psi = v.unscale(norm);
            top
        } else {
            value
        }
    }

    fn run(&self, mut p: Point, iterations: usize) -> (Point, f64, Vec<f64>) {
        let mut value = self.objective(&p);
        let mut trace = vec![value];
        for _ in 0..iterations {
            let mut next = p.clone();
            let v = self.sweep(&mut next);
            if !improves(v, value) {
                break;
            }
            p = next;
            value = v;
            trace.push(v);
        }
        (p, value, trace)
    }
}

/// `sum_a Re tr(E^a Y^a)`.
fn povm_score(elements: &[CMat], ys: &[CMat]) -> f64 {
    elements
        .iter()
        .zip(ys)
        .map(|(e, y)| (e * y).trace().re)
        .sum()
}

fn greedy_povm(ys: &[CMat], current: &[CMat]) -> Vec<CMat> {
    let k = ys.len();
    let d = ys[0].nrows();
    let mean = ys
        .iter()
        .fold(CMat::zeros(d, d), |acc, y| acc + y)
        .unscale(k as f64);
    let mut candidates: Vec<CMat> = ys.to_vec();
    candidates.extend(ys.iter().map(|y| y - &mean));
    let mut best: (f64, Option<Vec<CMat>>) = (povm_score(current, ys), None);
    for c in &candidates {
        let (_, vecs) = hermitian_eigen(c);
        let mut elems = vec![CMat::zeros(d, d); k];
        let mut score = 0.0;
        for col in 0..d {
            let v = vecs.column(col).into_owned();
            let (a, s) = ys
                .iter()
                .map(|y| (v.adjoint() * y * &v)[(0, 0)].re)
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (a, s)| if s > acc.1 { (a, s) } else { acc },
                );
            elems[a] += outer(&v);
            score += s;
        }
        if improves(score, best.0) {
            best = (
                score,
                Some(elems.into_iter().map(|e| hermitize(&e)).collect()),
            );
        }
    }
    best.1.unwrap_or_else(|| current.to_vec())
}

fn random_point(rng: &mut crate::rng::StreamRng, pr: &Problem<'_>) -> Point {
    let psi = random_unit_vector(rng, pr.da * pr.db);
    let alice = (0..pr.n)
        .map(|_| random_projective_povm(rng, pr.da, pr.ka))
        .collect();
    let bob = if pr.observables {
        Bob::Observables(
            (0..pr.np)
                .map(|_| random_sign_observable(rng, pr.db))
                .collect(),
        )
    } else {
        Bob::Povms(
            (0..pr.np)
                .map(|_| random_projective_povm(rng, pr.db, pr.kb))
                .collect(),
        )
    };
    Point { psi, alice, bob }
}

fn point_of(
    s: &QuantumStrategy,
    evaluate: impl Fn(&QuantumStrategy) -> Result<f64>,
) -> Result<Point> {
    // A mixed state is replaced by its best pure component.
    let mut best: Option<(f64, CVec)> = None;
    for (_, psi) in s.pure_components() {
        let cand = QuantumStrategy::new(
            s.dim_a(),
            s.dim_b(),
            SharedState::Pure(psi.clone()),
            s.alice().to_vec(),
            s.bob().clone(),
        )?;
        let v = evaluate(&cand)?.abs();
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, psi));
        }
    }
    let psi = best
        .ok_or_else(|| Error::Numerical("state has no pure component".into()))?
        .1;
    let bob = match s.bob() {
        BobSide::Observables(o) => Bob::Observables(o.clone()),
        BobSide::Povms(p) => Bob::Povms(p.clone()),
    };
    Ok(Point {
        psi,
        alice: s.alice().to_vec(),
        bob,
    })
}

fn strategy_of(p: Point, da: usize, db: usize) -> Result<QuantumStrategy> {
    let bob = match p.bob {
        Bob::Observables(o) => BobSide::Observables(o),
        Bob::Povms(f) => BobSide::Povms(f),
    };
    let alice = p
        .alice
        .into_iter()
        .map(|v| v.iter().map(hermitize).collect())
        .collect();
    QuantumStrategy::new(da, db, SharedState::Pure(p.psi), alice, bob)
}

/// Heuristic lower bound on `B_Q(M)` or `omega_q(G)` for local dimensions
/// `dims`. The optional `initial` strategy is run alongside
/// `config.restarts` random starts.
pub fn see_saw_lower_bound(
    target: SeeSawTarget<'_>,
    dims: (usize, usize),
    config: &SearchConfig,
    initial: Option<&QuantumStrategy>,
) -> Result<SeeSawOutcome> {
    config.validate()?;
    let (da, db) = dims;
    if da == 0 || db == 0 || da > MAX_SEE_SAW_DIM || db > MAX_SEE_SAW_DIM {
        return Err(Error::invalid(
            "dimensions",
            format!("need 1 <= dims <= {MAX_SEE_SAW_DIM}, got {da}x{db}"),
        ));
    }
    let (owned_m, owned_g);
    let (shape, data, observables): ((usize, usize, usize, usize), &[f64], bool) = match target {
        SeeSawTarget::Functional(m) => {
            owned_m = m.materialize()?;
            (
                (m.alice_inputs(), m.bob_inputs(), m.outputs(), 1),
                owned_m.dense_coeffs().unwrap(),
                true,
            )
        }
        SeeSawTarget::Game(g) => {
            owned_g = g.materialize()?;
            (g.shape(), owned_g.dense_weights().unwrap(), false)
        }
    };
    let evaluate = |s: &QuantumStrategy| -> Result<f64> {
        match target {
            SeeSawTarget::Functional(m) => evaluate_functional(m, &correlation_from_quantum(s)?),
            SeeSawTarget::Game(g) => game_value_of_distribution(g, &joint_from_quantum(s)?),
        }
    };

    let mut starts: Vec<Point> = Vec::new();
    let mut initial_value = None;
    if let Some(s) = initial {
        if (s.dim_a(), s.dim_b()) != dims {
            return Err(Error::dim(format!(
                "initial strategy is {}x{}, requested {da}x{db}",
                s.dim_a(),
                s.dim_b()
            )));
        }
        let fits = s.alice_inputs() == shape.0
            && s.bob_inputs() == shape.1
            && s.alice_outputs() == shape.2
            && match s.bob() {
                BobSide::Observables(_) => observables,
                BobSide::Povms(p) => !observables && p[0].len() == shape.3,
            };
        if !fits {
            return Err(Error::invalid(
                "initial strategy",
                "does not match the target's inputs, outputs or Bob mode",
            ));
        }
        initial_value = Some(evaluate(s)?);
        starts.push(point_of(s, evaluate)?);
    }
    let problem = |sign: f64| Problem {
        n: shape.0,
        np: shape.1,
        ka: shape.2,
        kb: shape.3,
        data,
        sign,
        observables,
        da,
        db,
    };
    let proto = problem(1.0);
    for r in 0..config.restarts {
        let mut rng = substream(config.seed, domain::SEE_SAW, r as u64);
        starts.push(random_point(&mut rng, &proto));
    }
    let signs: &[f64] = if observables { &[1.0, -1.0] } else { &[1.0] };
    let jobs: Vec<(Point, f64)> = starts
        .into_iter()
        .flat_map(|p| signs.iter().map(move |&s| (p.clone(), s)))
        .collect();
    let runs: Vec<(Point, f64, Vec<f64>)> = config.install(|| {
        jobs.into_par_iter()
            .map(|(p, s)| {
                let (p, v, t) = problem(s).run(p, config.iterations);
                (p, v, t)
            })
            .collect()
    })?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate().skip(1) {
        if improves(r.1, runs[best].1) {
            best = i;
        }
    }
    let (point, _, trace) = runs.into_iter().nth(best).unwrap();
    let strategy = strategy_of(point, da, db)?;
    let signed_value = evaluate(&strategy)?;
    Ok(SeeSawOutcome {
        value: signed_value.abs(),
        signed_value,
        strategy,
        initial_value,
        trace,
    })
}
