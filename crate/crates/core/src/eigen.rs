//! Dense complex eigensolver contract.
//!
//! Eigenvalues come from a complex Schur reduction. The diagonal of the
//! triangular factor is then merged into clusters (two values belong
//! together when they are closer than the cluster gap, which absorbs the
//! `O(√ε)` splitting a defective eigenvalue suffers under roundoff), and
//! each cluster's geometric eigenspace is recovered as the small-singular
//! subspace of `M − λI`. Every returned vector is re-checked against the
//! residual bound `‖Mv − λv‖ <= tol.eig · ‖M‖`; failure to meet it is
//! reported, never silent.
//!
//! Ordering is deterministic: clusters sorted by `|λ|` descending, then by
//! argument ascending; basis vectors carry a canonical phase.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C};

/// One eigenvalue copy with a unit-norm eigenvector and its residual.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C,
    pub vector: CVec,
    pub residual: f64,
}

/// A cluster of numerically coincident eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    /// Cluster representative (mean of the merged Schur diagonal values).
    pub value: C,
    /// Algebraic multiplicity: number of merged diagonal values.
    pub algebraic: usize,
    /// Orthonormal basis of the geometric eigenspace.
    pub basis: CMat,
    /// Largest residual over the basis columns.
    pub residual: f64,
}

impl EigenCluster {
    /// Geometric multiplicity.
    pub fn geometric(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_defective(&self) -> bool {
        self.geometric() < self.algebraic
    }
}

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 40_000;

/// Eigenvalue clusters of a square complex matrix, sorted by
/// (`|λ|` descending, argument ascending).
pub fn eigen_clusters(m: &CMat, tol: &Tolerances) -> Result<Vec<EigenCluster>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let scale = linalg::op_norm(m);

    let schur = m
        .clone()
        .try_schur(SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or(Error::EigenNonConvergence)?;
    let (_, t) = schur.unpack();
    let diag: Vec<C> = (0..n).map(|i| t[(i, i)]).collect();

    // union-find merge of diagonal values closer than the cluster gap
    let gap = tol.cluster_gap() * scale;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut walk = i;
        while parent[walk] != root {
            let next = parent[walk];
            parent[walk] = root;
            walk = next;
        }
        root
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (diag[i] - diag[j]).norm() <= gap {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    let mut clusters = Vec::with_capacity(groups.len());
    for members in groups.values() {
        let algebraic = members.len();
        let mean = members.iter().map(|&i| diag[i]).sum::<C>() / C::new(algebraic as f64, 0.0);
        let (basis, residual) = eigenspace_basis(m, mean, algebraic, scale, tol);
        if residual > tol.eig * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
            return Err(Error::EigenNonConvergence);
        }
        clusters.push(EigenCluster { value: mean, algebraic, basis, residual });
    }
    clusters.sort_by(|a, b| {
        (-a.value.norm())
            .total_cmp(&-b.value.norm())
            .then(a.value.arg().total_cmp(&b.value.arg()))
    });
    Ok(clusters)
}

/// Geometric eigenspace of `value`: right singular vectors of `M − λI` whose
/// singular value sits under the residual threshold. The threshold relaxes
/// geometrically if nothing qualifies, and the dimension is capped by the
/// algebraic multiplicity.
fn eigenspace_basis(m: &CMat, value: C, algebraic: usize, scale: f64, tol: &Tolerances) -> (CMat, f64) {
    let n = m.nrows();
    let shifted = m - CMat::identity(n, n) * value;
    let svd = shifted.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd v_t requested");
    let sigma = svd.singular_values;

    let mut threshold = tol.eig * scale.max(f64::MIN_POSITIVE);
    let mut count;
    loop {
        count = sigma.iter().filter(|&&s| s <= threshold).count();
        if count > 0 {
            break;
        }
        threshold *= 10.0;
    }
    count = count.min(algebraic);

    let mut cols = Vec::with_capacity(count);
    for i in 0..count {
        let row = n - 1 - i; // smallest singular values sit in the last rows
        let vec: CVec = v_t.row(row).adjoint();
        cols.push(linalg::canonical_projective(&vec));
    }
    cols.reverse();
    let basis = CMat::from_columns(&cols);
    let mut residual = 0.0f64;
    for j in 0..basis.ncols() {
        let v = basis.column(j);
        let r = (m * v - v * value).norm();
        residual = residual.max(r);
    }
    (basis, residual)
}

/// All `n` eigenvalues with unit-norm eigenvectors, sorted by
/// (`|λ|` descending, argument ascending).
///
/// A cluster of algebraic multiplicity `m` contributes `m` entries; when the
/// geometric multiplicity is smaller (defective eigenvalue), eigenspace
/// basis vectors repeat, so every returned pair is a genuine eigenpair
/// within the residual bound.
pub fn eigen_decompose(m: &CMat, tol: &Tolerances) -> Result<Vec<EigenPair>> {
    let clusters = eigen_clusters(m, tol)?;
    let mut pairs = Vec::with_capacity(m.nrows());
    for cluster in &clusters {
        let g = cluster.geometric();
        for copy in 0..cluster.algebraic {
            let vector = cluster.basis.column(copy % g).into_owned();
            let residual = (m * &vector - &vector * cluster.value).norm();
            pairs.push(EigenPair { value: cluster.value, vector, residual });
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(entries: &[C]) -> CMat {
        let n = entries.len();
        CMat::from_fn(n, n, |i, j| if i == j { entries[i] } else { C::new(0.0, 0.0) })
    }

    fn re(x: f64) -> C {
        C::new(x, 0.0)
    }

    #[test]
    fn four_distinct_unimodular_eigenvalues() {
        let tol = Tolerances::default();
        let m = diag(&[re(1.0), re(-1.0), C::new(0.0, 1.0), C::new(0.0, -1.0)]);
        let pairs = eigen_decompose(&m, &tol).unwrap();
        assert_eq!(pairs.len(), 4);
        // every basis vector appears as the eigenvector of its eigenvalue
        for (idx, lambda) in [(0usize, re(1.0)), (1, re(-1.0)), (2, C::new(0.0, 1.0)), (3, C::new(0.0, -1.0))] {
            let pair = pairs.iter().find(|p| (p.value - lambda).norm() < 1e-12).unwrap();
            assert!((pair.vector[idx].norm() - 1.0).abs() < 1e-12);
            assert!(pair.residual < 1e-12);
        }
    }

    #[test]
    fn doubled_eigenvalues_with_two_dim_eigenspaces() {
        let tol = Tolerances::default();
        let s2 = std::f64::consts::SQRT_2;
        // [[s2 I, I], [I, s2 I]]: eigenvalues s2 ± 1, each with algebraic and
        // geometric multiplicity two
        let mut m = CMat::zeros(4, 4);
        for i in 0..2 {
            m[(i, i)] = re(s2);
            m[(i + 2, i + 2)] = re(s2);
            m[(i, i + 2)] = re(1.0);
            m[(i + 2, i)] = re(1.0);
        }
        let clusters = eigen_clusters(&m, &tol).unwrap();
        assert_eq!(clusters.len(), 2);
        assert!((clusters[0].value - re(s2 + 1.0)).norm() < 1e-9);
        assert!((clusters[1].value - re(s2 - 1.0)).norm() < 1e-9);
        for c in &clusters {
            assert_eq!(c.algebraic, 2);
            assert_eq!(c.geometric(), 2);
            assert!(!c.is_defective());
            assert!(c.residual < 1e-10);
        }
        let pairs = eigen_decompose(&m, &tol).unwrap();
        let big: Vec<_> = pairs.iter().filter(|p| (p.value - re(s2 + 1.0)).norm() < 1e-9).collect();
        assert_eq!(big.len(), 2);
    }

    #[test]
    fn identity_has_full_eigenspace() {
        let tol = Tolerances::default();
        let m = CMat::identity(3, 3);
        let clusters = eigen_clusters(&m, &tol).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].algebraic, 3);
        assert_eq!(clusters[0].geometric(), 3);
        let pairs = eigen_decompose(&m, &tol).unwrap();
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn defective_block_repeats_genuine_eigenvectors() {
        let tol = Tolerances::default();
        let m = CMat::from_row_slice(2, 2, &[re(1.0), re(1.0), re(0.0), re(1.0)]);
        let clusters = eigen_clusters(&m, &tol).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].algebraic, 2);
        assert_eq!(clusters[0].geometric(), 1);
        assert!(clusters[0].is_defective());
        let pairs = eigen_decompose(&m, &tol).unwrap();
        assert_eq!(pairs.len(), 2);
        for p in &pairs {
            assert!(p.residual <= tol.eig * linalg::op_norm(&m));
        }
    }

    #[test]
    fn ordering_is_modulus_then_argument() {
        let tol = Tolerances::default();
        let m = diag(&[C::new(0.0, -2.0), re(3.0), C::new(0.0, 2.0), re(-3.0)]);
        let pairs = eigen_decompose(&m, &tol).unwrap();
        let values: Vec<C> = pairs.iter().map(|p| p.value).collect();
        // |3| = |-3| = 3 first (arg 0 before arg pi), then |±2i| = 2
        assert!((values[0] - re(3.0)).norm() < 1e-12);
        assert!((values[1] - re(-3.0)).norm() < 1e-12);
        assert!((values[2] - C::new(0.0, -2.0)).norm() < 1e-12);
        assert!((values[3] - C::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn non_finite_entries_rejected() {
        let tol = Tolerances::default();
        let m = diag(&[re(f64::NAN), re(1.0)]);
        assert!(eigen_clusters(&m, &tol).is_err());
    }
}
