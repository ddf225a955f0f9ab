//! Dense complex linear algebra helpers shared by every module.
//!
//! Thin layer over `nalgebra`: Hermitian eigendecompositions with sorted
//! output, SVD-based rank / null space / column space with relative cutoffs,
//! principal angles between column spans, and the deterministic random
//! streams used by the sampling oracles.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Complex scalar used throughout.
pub type C = Complex<f64>;
/// Dense complex matrix.
pub type CMat = DMatrix<C>;
/// Dense complex column vector.
pub type CVec = DVector<C>;

pub(crate) const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Largest singular value; zero for an empty matrix.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values[0]
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = idx.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMat::from_columns(&idx.iter().map(|&i| se.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (values, vectors)
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub(crate) fn hermitian_extremes(m: &CMat) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let se = nalgebra::SymmetricEigen::new(m.clone());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in se.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Singular values, descending.
pub(crate) fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Numerical rank: count of `σ > tol_rank * σ_max`.
pub(crate) fn numerical_rank(sigma: &[f64], tol_rank: f64) -> usize {
    match sigma.first() {
        None => 0,
        Some(&s0) if s0 == 0.0 => 0,
        Some(&s0) => sigma.iter().filter(|&&s| s > tol_rank * s0).count(),
    }
}

/// Orthonormal basis of the right null space `{x : Mx = 0}`.
///
/// Wide inputs are zero-padded to square so the full set of right singular
/// vectors is available.
pub(crate) fn null_space(m: &CMat, tol_rank: f64) -> CMat {
    null_space_floor(m, tol_rank, 0.0)
}

/// Null space with an absolute singular-value floor in addition to the
/// relative cutoff. Needed for matrix powers, whose "nonzero" singular
/// values can be pure roundoff relative to an external scale.
pub(crate) fn null_space_floor(m: &CMat, tol_rank: f64, abs_floor: f64) -> CMat {
    let (nr, nc) = m.shape();
    let work = if nr < nc {
        let mut padded = CMat::zeros(nc, nc);
        padded.view_mut((0, 0), (nr, nc)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("svd v_t requested");
    let rank = rank_with_floor(svd.singular_values.as_slice(), tol_rank, abs_floor);
    let cols: Vec<CVec> = (rank..nc).map(|i| v_t.row(i).adjoint()).collect();
    if cols.is_empty() {
        CMat::zeros(nc, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Count of `σ > max(tol_rank · σ_max, abs_floor)`.
pub(crate) fn rank_with_floor(sigma: &[f64], tol_rank: f64, abs_floor: f64) -> usize {
    match sigma.first() {
        None => 0,
        Some(&s0) => {
            let threshold = (tol_rank * s0).max(abs_floor);
            sigma.iter().filter(|&&s| s > threshold).count()
        }
    }
}

/// Orthonormal basis of the column space.
pub(crate) fn col_space(m: &CMat, tol_rank: f64) -> CMat {
    let nr = m.nrows();
    if m.is_empty() {
        return CMat::zeros(nr, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd u requested");
    let rank = numerical_rank(svd.singular_values.as_slice(), tol_rank);
    let cols: Vec<CVec> = (0..rank).map(|i| u.column(i).into_owned()).collect();
    if cols.is_empty() {
        CMat::zeros(nr, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormalize columns (assumed numerically full rank).
pub(crate) fn orthonormal_cols(m: &CMat) -> CMat {
    col_space(m, 1e-13)
}

/// Largest principal angle between the column spans of two frames of equal
/// column count.
pub fn max_principal_angle(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.ncols(), b.ncols(), "frames must have equal plane dimension");
    if a.ncols() == 0 {
        return 0.0;
    }
    let qa = orthonormal_cols(a);
    let qb = orthonormal_cols(b);
    if qa.ncols() != qb.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    let overlap = qa.adjoint() * qb;
    let sigma = singular_values(&overlap);
    let smallest = sigma.last().copied().unwrap_or(0.0);
    smallest.clamp(-1.0, 1.0).acos()
}

/// `min_φ ‖a − e^{iφ} b‖_F`, the Frobenius distance after optimal phase
/// alignment. The minimizing phase is `arg⟨b, a⟩`; the difference is formed
/// explicitly so near-identical inputs do not cancel in the norm formula.
pub fn phase_aligned_distance(a: &CMat, b: &CMat) -> f64 {
    let overlap: C = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / C::new(overlap.norm(), 0.0)
    } else {
        C::new(1.0, 0.0)
    };
    (a - b * phase).norm()
}

/// Least-squares solution of `A X = B` via SVD pseudo-inverse.
pub(crate) fn lstsq(a: &CMat, b: &CMat) -> CMat {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-13).expect("svd solve")
}

pub(crate) fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Normalize to unit Euclidean norm and rotate the phase so the first
/// coordinate of non-negligible modulus is real and positive. This is the
/// canonical representative used for projective output.
pub(crate) fn canonical_projective(v: &CVec) -> CVec {
    let norm = v.norm();
    assert!(norm > 0.0, "cannot normalize the zero vector");
    let unit = v / C::new(norm, 0.0);
    let maxabs = unit.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = unit
        .iter()
        .position(|z| z.norm() > 1e-8 * maxabs)
        .expect("nonzero vector has a pivot");
    let phase = unit[pivot] / C::new(unit[pivot].norm(), 0.0);
    unit * phase.conj()
}

/// Deterministic substream for sample index `i`.
pub(crate) fn substream(seed: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (i as u64))
}

pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex normal entry: real and imaginary parts N(0, 1/2).
pub(crate) fn complex_gaussian<R: Rng>(rng: &mut R) -> C {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C::new(re * SQRT_HALF, im * SQRT_HALF)
}

pub(crate) fn complex_gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_gaussian(rng))
}

pub(crate) fn complex_gaussian_mat<R: Rng>(rng: &mut R, nr: usize, nc: usize) -> CMat {
    CMat::from_fn(nr, nc, |_, _| complex_gaussian(rng))
}

pub(crate) fn real_gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| C::new(rng.sample(StandardNormal), 0.0))
}
