//! Subspaces of `C^{p,q}`: Gram matrices, sign signatures, orthogonal
//! complements.
//!
//! A subspace is held as a numerically full-rank basis together with the
//! Gram matrix of pairwise `H`-products and its eigenvalue sign counts
//! `(n_+, n_0, n_-)`. The zero band for the counts is relative to the basis
//! scale, so an isotropic subspace whose Gram is roundoff noise still counts
//! as all-null.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::form::IndefiniteForm;
use crate::linalg::{self, CMat, CVec, C};

/// Eigenvalue sign counts `(n_+, n_0, n_-)` of a Hermitian Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignatureTriple {
    pub pos: usize,
    pub nul: usize,
    pub neg: usize,
}

impl SignatureTriple {
    pub fn dim(&self) -> usize {
        self.pos + self.nul + self.neg
    }

    /// No positive eigenvalue.
    pub fn is_negative_semidefinite(&self) -> bool {
        self.pos == 0
    }

    /// All eigenvalues negative.
    pub fn is_negative_definite(&self) -> bool {
        self.pos == 0 && self.nul == 0
    }

    /// All eigenvalues positive.
    pub fn is_positive_definite(&self) -> bool {
        self.nul == 0 && self.neg == 0
    }

    /// All eigenvalues in the zero band: the form vanishes on the span.
    pub fn is_isotropic(&self) -> bool {
        self.pos == 0 && self.neg == 0
    }
}

impl std::fmt::Display for SignatureTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.pos, self.nul, self.neg)
    }
}

/// Sign counts of a Hermitian matrix's eigenvalues. `scale_floor` guards the
/// zero band against an all-noise Gram: an eigenvalue is null when
/// `|λ| <= tol_null * max(‖gram‖, scale_floor)`.
pub(crate) fn gram_signature(gram: &CMat, scale_floor: f64, tol_null: f64) -> SignatureTriple {
    let k = gram.nrows();
    if k == 0 {
        return SignatureTriple { pos: 0, nul: 0, neg: 0 };
    }
    let (lo, hi) = linalg::hermitian_extremes(gram);
    let gram_norm = lo.abs().max(hi.abs());
    let band = tol_null * gram_norm.max(scale_floor);
    let (values, _) = linalg::hermitian_eigen(gram);
    let mut triple = SignatureTriple { pos: 0, nul: 0, neg: 0 };
    for v in values {
        if v > band {
            triple.pos += 1;
        } else if v < -band {
            triple.neg += 1;
        } else {
            triple.nul += 1;
        }
    }
    triple
}

/// A subspace of `C^{p,q}` with its `H`-Gram data.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: CMat,
    gram: CMat,
    triple: SignatureTriple,
}

impl Subspace {
    /// Build from basis columns. Fails if the columns are not numerically
    /// independent (`σ_min <= tol.rank * σ_max`).
    pub fn from_basis(form: &IndefiniteForm, basis: CMat, tol: &Tolerances) -> Result<Self> {
        let n = form.signature().n();
        if basis.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: basis.nrows() });
        }
        let k = basis.ncols();
        if k == 0 {
            return Ok(Self {
                basis,
                gram: CMat::zeros(0, 0),
                triple: SignatureTriple { pos: 0, nul: 0, neg: 0 },
            });
        }
        let sigma = linalg::singular_values(&basis);
        let smax = sigma[0];
        let smin = *sigma.last().unwrap();
        if smax == 0.0 || smin <= tol.rank * smax {
            return Err(Error::RankDeficient { ratio: if smax == 0.0 { 0.0 } else { smin / smax } });
        }
        // gram[i][j] = basis_j^H H basis_i
        let h_basis = {
            let mut hb = basis.clone();
            for i in 0..n {
                let w = C::new(form.weight(i), 0.0);
                for j in 0..k {
                    hb[(i, j)] *= w;
                }
            }
            hb
        };
        let gram = (basis.adjoint() * &h_basis).transpose();
        let triple = gram_signature(&gram, smax * smax, tol.null);
        Ok(Self { basis, gram, triple })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Basis columns.
    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    /// `gram[i][j] = basis_j^H H basis_i`.
    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    pub fn signature(&self) -> SignatureTriple {
        self.triple
    }

    /// `{w : v^H H w = 0 for all v in the span}`.
    pub fn orthogonal_complement(&self, form: &IndefiniteForm, tol: &Tolerances) -> Result<Subspace> {
        let n = form.signature().n();
        if self.dim() == 0 {
            return Subspace::from_basis(form, CMat::identity(n, n), tol);
        }
        // v^H H w = 0 for all basis vectors v  <=>  (basis^H H) w = 0
        let constraints = self.basis.adjoint() * form.matrix();
        let complement = linalg::null_space(&constraints, tol.rank);
        Subspace::from_basis(form, complement, tol)
    }

    /// Euclidean membership test: residual of `v` after projection onto the
    /// span, relative to `‖v‖`.
    pub fn contains(&self, v: &CVec, rel_tol: f64) -> bool {
        if self.dim() == 0 {
            return false;
        }
        let q = linalg::orthonormal_cols(&self.basis);
        let residual = v - &q * (q.adjoint() * v);
        residual.norm() <= rel_tol * v.norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::Signature;

    fn rv(entries: &[f64]) -> CVec {
        CVec::from_iterator(entries.len(), entries.iter().map(|&re| C::new(re, 0.0)))
    }

    fn basis(cols: &[&[f64]]) -> CMat {
        CMat::from_columns(&cols.iter().map(|c| rv(c)).collect::<Vec<_>>())
    }

    fn form22() -> IndefiniteForm {
        IndefiniteForm::new(Signature::new(2, 2).unwrap())
    }

    #[test]
    fn gram_matches_direct_evaluation() {
        let tol = Tolerances::default();
        let form = form22();
        let s = Subspace::from_basis(&form, basis(&[&[1.0, 0.0, -1.0, 0.0], &[0.0, 0.0, 0.0, 1.0]]), &tol).unwrap();
        // Gram = diag(0, -1) by direct evaluation
        assert!((s.gram()[(0, 0)] - C::new(0.0, 0.0)).norm() < 1e-14);
        assert!((s.gram()[(1, 1)] - C::new(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(s.signature(), SignatureTriple { pos: 0, nul: 1, neg: 1 });
    }

    #[test]
    fn isotropic_plane_signature() {
        let tol = Tolerances::default();
        let form = form22();
        let s = Subspace::from_basis(&form, basis(&[&[1.0, 0.0, -1.0, 0.0], &[0.0, 1.0, 0.0, -1.0]]), &tol).unwrap();
        assert_eq!(s.signature(), SignatureTriple { pos: 0, nul: 2, neg: 0 });
        assert!(s.signature().is_isotropic());
    }

    #[test]
    fn coordinate_plane_signature() {
        let tol = Tolerances::default();
        for (p, q) in [(1usize, 1usize), (2, 2), (3, 2)] {
            let form = IndefiniteForm::new(Signature::new(p, q).unwrap());
            let eye = CMat::identity(p + q, p + q);
            let cols: Vec<CVec> = (0..p).map(|i| eye.column(i).into_owned()).collect();
            let s = Subspace::from_basis(&form, CMat::from_columns(&cols), &tol).unwrap();
            assert_eq!(s.signature(), SignatureTriple { pos: p, nul: 0, neg: 0 });
        }
    }

    #[test]
    fn rank_deficient_basis_rejected() {
        let tol = Tolerances::default();
        let form = form22();
        let b = basis(&[&[1.0, 0.0, 0.0, 0.0], &[2.0, 0.0, 0.0, 0.0]]);
        assert!(matches!(
            Subspace::from_basis(&form, b, &tol),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn complement_of_coordinate_line() {
        let tol = Tolerances::default();
        let f11 = IndefiniteForm::new(Signature::new(1, 1).unwrap());
        let s = Subspace::from_basis(&f11, basis(&[&[1.0, 0.0]]), &tol).unwrap();
        let c = s.orthogonal_complement(&f11, &tol).unwrap();
        assert_eq!(c.dim(), 1);
        assert!(c.contains(&rv(&[0.0, 1.0]), 1e-10));

        let form = form22();
        let e1 = Subspace::from_basis(&form, basis(&[&[1.0, 0.0, 0.0, 0.0]]), &tol).unwrap();
        let c1 = e1.orthogonal_complement(&form, &tol).unwrap();
        assert_eq!(c1.dim(), 3);
        for v in [rv(&[0.0, 1.0, 0.0, 0.0]), rv(&[0.0, 0.0, 1.0, 0.0]), rv(&[0.0, 0.0, 0.0, 1.0])] {
            assert!(c1.contains(&v, 1e-10));
        }
    }

    #[test]
    fn isotropic_plane_is_self_orthogonal() {
        // solved as a linear system: the complement of the isotropic plane
        // contains the plane itself
        let tol = Tolerances::default();
        let form = form22();
        let b = basis(&[&[1.0, 0.0, -1.0, 0.0], &[0.0, 1.0, 0.0, -1.0]]);
        let s = Subspace::from_basis(&form, b.clone(), &tol).unwrap();
        let c = s.orthogonal_complement(&form, &tol).unwrap();
        assert_eq!(c.dim(), 2);
        assert!(c.contains(&b.column(0).into_owned(), 1e-10));
        assert!(c.contains(&b.column(1).into_owned(), 1e-10));
    }

    #[test]
    fn double_complement_recovers_nondegenerate_subspace() {
        let tol = Tolerances::default();
        let form = form22();
        let b = basis(&[&[1.0, 0.2, 0.1, 0.0], &[0.0, 1.0, 0.0, 0.3]]);
        let s = Subspace::from_basis(&form, b.clone(), &tol).unwrap();
        let cc = s
            .orthogonal_complement(&form, &tol)
            .unwrap()
            .orthogonal_complement(&form, &tol)
            .unwrap();
        for j in 0..b.ncols() {
            assert!(cc.contains(&b.column(j).into_owned(), 1e-9));
        }
    }
}
