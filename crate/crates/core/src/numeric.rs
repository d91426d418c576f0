//! Small dense complex linear algebra and summation helpers shared by the
//! strategy evaluators and the optimizers. Dimensions here never exceed a
//! few dozen, so everything is plain `nalgebra` dynamic matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Tolerance for validation and normalization checks.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Tolerance for exact algebraic identities in low dimension.
pub const EXACT_TOL: f64 = 1e-12;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, data.iter().map(|&v| C64::new(v, 0.0)))
}

pub fn diag(values: &[f64]) -> CMat {
    let d = values.len();
    let mut m = CMat::zeros(d, d);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = C64::new(v, 0.0);
    }
    m
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`; eigenvalues ascending,
/// eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

pub fn min_max_eigenvalue(m: &CMat) -> (f64, f64) {
    let (vals, _) = hermitian_eigen(m);
    (vals[0], vals[vals.len() - 1])
}

/// `sum_j f(lambda_j) |v_j><v_j|` for the Hermitian part of `m`.
pub fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let scaled = CMat::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * f(vals[c]));
    hermitize(&(scaled * vecs.adjoint()))
}

/// Optimal dichotomic observable against `m`: +1 on the nonnegative
/// eigenspace, -1 elsewhere.
pub fn hermitian_sign(m: &CMat) -> CMat {
    spectral_map(m, |v| if v >= 0.0 { 1.0 } else { -1.0 })
}

pub fn positive_projector(m: &CMat) -> CMat {
    spectral_map(m, |v| if v > 0.0 { 1.0 } else { 0.0 })
}

pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn outer(u: &CVec) -> CMat {
    u * u.adjoint()
}

/// Sum over matching entries of `a` and `b` (no conjugation).
pub fn entrywise_dot(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Reshape a bipartite vector `psi` (index `i * dim_b + j`) into the
/// `dim_a x dim_b` coefficient matrix.
pub fn state_matrix(psi: &CVec, dim_a: usize, dim_b: usize) -> CMat {
    CMat::from_fn(dim_a, dim_b, |i, j| psi[i * dim_b + j])
}

/// Bob-side reduced form of an Alice operator: `Psi^dag A Psi`. Pairing it
/// entrywise with `B` gives `<psi| A (x) B |psi>`.
pub fn bob_reduced(psi_mat: &CMat, alice_op: &CMat) -> CMat {
    psi_mat.adjoint() * alice_op * psi_mat
}

/// Alice-side reduced form of a Bob operator: `Psi B^T Psi^dag`, so that
/// `tr(A X) = <psi| A (x) B |psi>`.
pub fn alice_reduced(psi_mat: &CMat, bob_op: &CMat) -> CMat {
    psi_mat * bob_op.transpose() * psi_mat.adjoint()
}

pub fn expectation(psi_mat: &CMat, alice_op: &CMat, bob_op: &CMat) -> C64 {
    entrywise_dot(&bob_reduced(psi_mat, alice_op), bob_op)
}

pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    // tr(AB) = sum_ij A_ij B_ji
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVec {
    loop {
        let v = CVec::from_fn(dim, |_, _| random_complex(rng));
        let norm = v.norm();
        if norm > 1e-6 {
            return v.unscale(norm);
        }
    }
}

pub fn random_unit_modulus<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    C64::from_polar(1.0, theta)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let g = CMat::from_fn(dim, dim, |_, _| random_complex(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Random projective measurement with `outputs` elements: the columns of a
/// random unitary are dealt to random outputs.
pub fn random_projective_povm<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    outputs: usize,
) -> Vec<CMat> {
    let u = random_unitary(rng, dim);
    let mut elems = vec![CMat::zeros(dim, dim); outputs];
    for c in 0..dim {
        let a = rng.random_range(0..outputs);
        let col = u.column(c).into_owned();
        elems[a] += outer(&col);
    }
    elems
}

/// Random (generally non-projective) POVM: `S^{-1/2} G_a S^{-1/2}` with
/// `G_a` random positive and `S = sum G_a`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outputs: usize) -> Vec<CMat> {
    let gs: Vec<CMat> = (0..outputs)
        .map(|_| {
            let g = CMat::from_fn(dim, dim, |_, _| random_complex(rng));
            &g * g.adjoint()
        })
        .collect();
    let total = gs.iter().fold(CMat::zeros(dim, dim), |acc, g| acc + g);
    let inv_sqrt = spectral_map(&total, |v| 1.0 / v.max(1e-12).sqrt());
    gs.iter()
        .map(|g| hermitize(&(&inv_sqrt * g * &inv_sqrt)))
        .collect()
}

/// Random dichotomic observable with spectrum in [-1, 1].
pub fn random_observable<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let u = random_unitary(rng, dim);
    let spectrum: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    hermitize(&(&u * diag(&spectrum) * u.adjoint()))
}

pub fn random_sign_observable<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    let u = random_unitary(rng, dim);
    let spectrum: Vec<f64> = (0..dim)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    hermitize(&(&u * diag(&spectrum) * u.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s = compensated_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn reduced_forms_match_kronecker_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (da, db) = (3, 2);
        let psi = random_unit_vector(&mut rng, da * db);
        let a = random_povm(&mut rng, da, 2).remove(0);
        let b = random_observable(&mut rng, db);
        let direct = (psi.adjoint() * kron(&a, &b) * &psi)[(0, 0)];
        let pm = state_matrix(&psi, da, db);
        let via_bob = expectation(&pm, &a, &b);
        let via_alice = trace_product(&a, &alice_reduced(&pm, &b));
        assert!((direct - via_bob).norm() < EXACT_TOL);
        assert!((direct - via_alice).norm() < EXACT_TOL);
    }

    #[test]
    fn random_povm_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let elems = random_povm(&mut rng, 4, 3);
        let total = elems.iter().fold(CMat::zeros(4, 4), |acc, e| acc + e);
        assert!(max_abs(&(total - identity(4))) < VALIDATION_TOL);
        for e in &elems {
            assert!(min_max_eigenvalue(e).0 > -VALIDATION_TOL);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(&mut rng, 5);
        assert!(max_abs(&(u.adjoint() * &u - identity(5))) < EXACT_TOL);
    }
}
