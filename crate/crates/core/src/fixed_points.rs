//! Fixed points of linear self maps on `D_{p,q}`.
//!
//! Fixed points of the projective map correspond to one-dimensional
//! eigenspaces of nonzero eigenvalues of the matrix; eigenspaces of higher
//! dimension project to pointwise-fixed linear subspaces and are reported as
//! fixed lines. Jordan data of higher-rank generalized eigenvectors yields
//! invariant isotropic subspaces in the boundary, and the eigenvalue-pair
//! structure of `U(p,q)` matrices (any two eigenvectors are `H`-orthogonal
//! or their eigenvalues multiply to one after conjugation) is checked
//! directly. `theorem_audit` evaluates the fixed-point count statements on
//! the computed data and reports PASS / VACUOUS / FAIL per statement.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::eigen::{eigen_clusters, eigen_decompose};
use crate::error::{Error, Result};
use crate::form::VectorClass;
use crate::linalg::{self, CMat, CVec, C};
use crate::selfmap::{classify, MapCandidate, Verdict};
use crate::subspace::{SignatureTriple, Subspace};

/// Position of a fixed point relative to `D_{p,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

impl From<VectorClass> for Location {
    fn from(class: VectorClass) -> Self {
        match class {
            VectorClass::Positive => Location::Interior,
            VectorClass::Null => Location::Boundary,
            VectorClass::Negative => Location::Exterior,
        }
    }
}

/// A fixed point: a one-dimensional eigenspace of a nonzero eigenvalue.
#[derive(Debug, Clone)]
pub struct FixedPointRecord {
    /// Canonical projective representative: unit norm, first nonzero
    /// coordinate real positive.
    pub point: CVec,
    pub eigenvalue: C,
    pub location: Location,
    /// Normalized sign margin `v^H H v / v^H v` backing the location.
    pub margin: f64,
}

/// Disposition of a pointwise-fixed projective line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineDisposition {
    /// The spanning plane is isotropic: the whole line lies in the boundary.
    InBoundary,
    /// The spanning plane contains a positive vector: the line meets the
    /// ball.
    MeetsInterior,
    /// Neither: the line stays outside the open ball (it may still touch
    /// the boundary in at most one point).
    Exterior,
}

/// A projective line fixed pointwise, spanned by two eigenvectors of one
/// eigenvalue.
#[derive(Debug, Clone)]
pub struct FixedLine {
    /// Two orthonormal eigenvectors spanning the line.
    pub basis: CMat,
    pub eigenvalue: C,
    pub disposition: LineDisposition,
    /// Gram signature of the spanning plane.
    pub signature: SignatureTriple,
}

impl FixedLine {
    /// Number of fixed points this line contributes to the boundary:
    /// the projective null directions of its spanning plane.
    pub fn boundary_point_count(&self) -> PointCount {
        let t = self.signature;
        if t.is_isotropic() {
            PointCount::Infinite
        } else if t.pos == 1 && t.neg == 1 {
            PointCount::Finite(2)
        } else if t.nul == 1 {
            PointCount::Finite(1)
        } else {
            PointCount::Finite(0)
        }
    }

    /// Whether the line intersects the closed ball.
    pub fn touches_closure(&self) -> bool {
        self.signature.pos >= 1 || self.signature.nul >= 1
    }
}

/// A possibly infinite count of fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointCount {
    Finite(usize),
    Infinite,
}

impl PointCount {
    pub fn at_least(&self, k: usize) -> bool {
        match self {
            PointCount::Infinite => true,
            PointCount::Finite(c) => *c >= k,
        }
    }

    fn add(&self, other: PointCount) -> PointCount {
        match (self, other) {
            (PointCount::Infinite, _) | (_, PointCount::Infinite) => PointCount::Infinite,
            (PointCount::Finite(a), PointCount::Finite(b)) => PointCount::Finite(a + b),
        }
    }
}

impl std::fmt::Display for PointCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointCount::Finite(c) => write!(f, "{c}"),
            PointCount::Infinite => write!(f, "infinite"),
        }
    }
}

fn require_self_map(m: &MapCandidate, tol: &Tolerances) -> Result<crate::selfmap::SelfMapReport> {
    let report = classify(m, tol);
    if report.verdict == Verdict::NotSelfMap {
        return Err(Error::NotSelfMap);
    }
    Ok(report)
}

/// Fixed points of the self map: one record per one-dimensional eigenspace
/// with nonzero eigenvalue. Higher-dimensional eigenspaces are reported via
/// [`fixed_lines`] instead.
pub fn fixed_points(m: &MapCandidate, tol: &Tolerances) -> Result<Vec<FixedPointRecord>> {
    require_self_map(m, tol)?;
    let form = m.form();
    let scale = linalg::op_norm(m.matrix());
    let clusters = eigen_clusters(m.matrix(), tol)?;
    let mut records = Vec::new();
    for cluster in &clusters {
        if cluster.value.norm() <= tol.rank * scale || cluster.geometric() != 1 {
            continue;
        }
        let point = linalg::canonical_projective(&cluster.basis.column(0).into_owned());
        let margin = form.margin(&point)?;
        let location = Location::from(form.classify(&point, tol)?);
        records.push(FixedPointRecord { point, eigenvalue: cluster.value, location, margin });
    }
    Ok(records)
}

/// Pointwise-fixed projective lines: one line per pair of an orthonormalized
/// eigenbasis inside every eigenspace of dimension at least two (nonzero
/// eigenvalue).
pub fn fixed_lines(m: &MapCandidate, tol: &Tolerances) -> Result<Vec<FixedLine>> {
    require_self_map(m, tol)?;
    let form = m.form();
    let scale = linalg::op_norm(m.matrix());
    let clusters = eigen_clusters(m.matrix(), tol)?;
    let mut lines = Vec::new();
    for cluster in &clusters {
        let g = cluster.geometric();
        if cluster.value.norm() <= tol.rank * scale || g < 2 {
            continue;
        }
        for i in 0..g {
            for j in (i + 1)..g {
                let basis = CMat::from_columns(&[
                    cluster.basis.column(i).into_owned(),
                    cluster.basis.column(j).into_owned(),
                ]);
                let sub = Subspace::from_basis(&form, basis.clone(), tol)?;
                let triple = sub.signature();
                let disposition = if triple.is_isotropic() {
                    LineDisposition::InBoundary
                } else if triple.pos >= 1 {
                    LineDisposition::MeetsInterior
                } else {
                    LineDisposition::Exterior
                };
                lines.push(FixedLine { basis, eigenvalue: cluster.value, disposition, signature: triple });
            }
        }
    }
    Ok(lines)
}

/// Jordan data for one eigenvalue: block sizes and the generalized
/// eigenvector chains realizing them.
#[derive(Debug, Clone)]
pub struct JordanData {
    pub eigenvalue: C,
    /// One entry per Jordan block, descending.
    pub block_sizes: Vec<usize>,
    /// One matrix per block: columns `v_1, ..., v_r` with
    /// `(M - λI) v_k = v_{k-1}` and `(M - λI) v_1 = 0`.
    pub chains: Vec<CMat>,
}

const CHAIN_RESIDUAL: f64 = 1e-7;

/// Jordan structure from rank differences of `(M − λI)^k`, with chains
/// recovered from the nested null spaces. Refuses spectra whose distinct
/// eigenvalues are closer than the cluster gap instead of guessing.
pub fn jordan_structure(m: &MapCandidate, tol: &Tolerances) -> Result<Vec<JordanData>> {
    let matrix = m.matrix();
    let n = matrix.nrows();
    let scale = linalg::op_norm(matrix);
    let clusters = eigen_clusters(matrix, tol)?;

    let required = tol.cluster_gap() * scale;
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            let gap = (clusters[i].value - clusters[j].value).norm();
            if gap <= required {
                return Err(Error::ClusteredSpectrum { gap, required });
            }
        }
    }

    let mut out = Vec::with_capacity(clusters.len());
    for cluster in &clusters {
        let lambda = cluster.value;
        let b = matrix - CMat::identity(n, n) * lambda;

        // rank profile of successive powers
        let mut ranks = vec![n];
        let mut power = CMat::identity(n, n);
        let target = n - cluster.algebraic;
        while *ranks.last().unwrap() > target && ranks.len() <= n + 1 {
            power = &power * &b;
            ranks.push(linalg::numerical_rank(&linalg::singular_values(&power), tol.rank));
        }
        if *ranks.last().unwrap() != target {
            return Err(Error::InvariantViolation(format!(
                "rank profile of (M - λI)^k inconsistent with multiplicity {} at λ = {lambda} \
                 (spectrum too clustered or ill conditioned)",
                cluster.algebraic
            )));
        }
        // blocks_ge[k] = rank(B^{k-1}) - rank(B^k) counts blocks of size >= k
        let max_size = ranks.len() - 1;
        let blocks_ge: Vec<usize> = (1..=max_size).map(|k| ranks[k - 1] - ranks[k]).collect();
        let mut block_sizes = Vec::new();
        for k in 1..=max_size {
            let ge_k = blocks_ge[k - 1];
            let ge_k1 = if k < max_size { blocks_ge[k] } else { 0 };
            if ge_k < ge_k1 {
                return Err(Error::InvariantViolation(
                    "non-monotone Jordan rank profile (spectrum too clustered or ill conditioned)".into(),
                ));
            }
            for _ in 0..(ge_k - ge_k1) {
                block_sizes.push(k);
            }
        }
        block_sizes.sort_unstable_by(|a, b| b.cmp(a));
        if block_sizes.iter().sum::<usize>() != cluster.algebraic {
            return Err(Error::InvariantViolation(
                "Jordan block sizes do not sum to the algebraic multiplicity".into(),
            ));
        }

        // nested null spaces N_k = null(B^k)
        let mut nullspaces: Vec<CMat> = Vec::with_capacity(max_size);
        let mut power = CMat::identity(n, n);
        for _ in 1..=max_size {
            power = &power * &b;
            nullspaces.push(linalg::null_space(&power, tol.rank));
        }

        // chains, largest blocks first: tops of size-s blocks complete
        // N_{s-1} ∪ (height-s vectors of longer chains) to a basis of N_s
        let mut chains: Vec<CMat> = Vec::new();
        let mut distinct_sizes: Vec<usize> = block_sizes.clone();
        distinct_sizes.dedup();
        for &s in &distinct_sizes {
            let count = block_sizes.iter().filter(|&&x| x == s).count();
            let mut avoid: Vec<CVec> = Vec::new();
            if s >= 2 {
                let lower = &nullspaces[s - 2];
                for j in 0..lower.ncols() {
                    avoid.push(lower.column(j).into_owned());
                }
            }
            for chain in &chains {
                if chain.ncols() > s {
                    avoid.push(chain.column(s - 1).into_owned());
                }
            }
            let candidates = &nullspaces[s - 1];
            let projected = if avoid.is_empty() {
                candidates.clone()
            } else {
                let q = linalg::orthonormal_cols(&CMat::from_columns(&avoid));
                candidates - &q * (q.adjoint() * candidates)
            };
            let svd = projected.clone().svd(true, false);
            let u = svd.u.expect("svd u requested");
            for t_idx in 0..count {
                let top: CVec = u.column(t_idx).into_owned();
                let mut descending = vec![top];
                for _ in 1..s {
                    let next = &b * descending.last().unwrap();
                    descending.push(next);
                }
                descending.reverse(); // v_1 first
                let bottom_norm = descending[0].norm();
                if bottom_norm <= 1e-300 {
                    return Err(Error::InvariantViolation(
                        "Jordan chain collapsed during descent".into(),
                    ));
                }
                let chain = CMat::from_columns(&descending) / C::new(bottom_norm, 0.0);
                // verify M V = V J_s(λ) directly
                let mut jordan_block = CMat::identity(s, s) * lambda;
                for k in 1..s {
                    jordan_block[(k - 1, k)] = C::new(1.0, 0.0);
                }
                let residual = linalg::op_norm(&(matrix * &chain - &chain * jordan_block));
                let chain_scale = linalg::op_norm(&chain).max(1.0);
                if residual > CHAIN_RESIDUAL * scale.max(1.0) * chain_scale {
                    return Err(Error::InvariantViolation(format!(
                        "Jordan chain residual {residual:.3e} exceeds bound at λ = {lambda}"
                    )));
                }
                chains.push(chain);
            }
        }
        out.push(JordanData { eigenvalue: lambda, block_sizes, chains });
    }
    Ok(out)
}

/// An `M`-invariant isotropic subspace in the boundary, certified.
#[derive(Debug, Clone)]
pub struct InvariantSubspaceCertificate {
    pub subspace: Subspace,
    pub eigenvalue: C,
    /// `|λ| / √c`: modulus of the eigenvalue after `U(p,q)` normalization.
    pub normalized_modulus: f64,
    pub invariance_residual: f64,
}

/// The invariant boundary subspace attached to a Jordan chain of an
/// automorphism: the full chain span for `|λ| ≠ 1` (after scaling into
/// `U(p,q)`), the first `⌊r/2⌋` chain vectors for unimodular `λ` with
/// `r ≥ 2`. The result is certified isotropic and `M`-invariant.
pub fn boundary_invariant_subspace(
    m: &MapCandidate,
    data: &JordanData,
    chain_index: usize,
    tol: &Tolerances,
) -> Result<InvariantSubspaceCertificate> {
    let report = classify(m, tol);
    if report.verdict != Verdict::Automorphism {
        return Err(Error::NotAutomorphism);
    }
    let sqrt_c = report.isometry_constant.expect("automorphism carries its constant").sqrt();
    let chain = data
        .chains
        .get(chain_index)
        .ok_or_else(|| Error::InvalidInput(format!("chain index {chain_index} out of range")))?;
    let r = chain.ncols();
    let normalized_modulus = data.eigenvalue.norm() / sqrt_c;
    let unimodular = (normalized_modulus - 1.0).abs() <= tol.null;
    let keep = if unimodular {
        if r < 2 {
            return Err(Error::InvalidInput(
                "a size-1 chain with unimodular eigenvalue spans no isotropic subspace".into(),
            ));
        }
        r / 2
    } else {
        r
    };

    let basis: CMat = chain.columns(0, keep).into_owned();
    let subspace = Subspace::from_basis(&m.form(), basis.clone(), tol)?;
    if !subspace.signature().is_isotropic() {
        return Err(Error::InvariantViolation(format!(
            "chain span is not isotropic (signature {})",
            subspace.signature()
        )));
    }
    let image = m.matrix() * &basis;
    let coeffs = linalg::lstsq(&basis, &image);
    let invariance_residual = linalg::op_norm(&(&image - &basis * coeffs));
    if invariance_residual > CHAIN_RESIDUAL * linalg::op_norm(m.matrix()).max(1.0) {
        return Err(Error::InvariantViolation(format!(
            "subspace is not invariant (residual {invariance_residual:.3e})"
        )));
    }
    Ok(InvariantSubspaceCertificate {
        subspace,
        eigenvalue: data.eigenvalue,
        normalized_modulus,
        invariance_residual,
    })
}

/// Pair relation between two eigenpairs of a `U(p,q)` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairStatus {
    /// `|v_j^H H v_i| ≤ 1e-8`.
    Orthogonal,
    /// `|conj(λ_j) λ_i − 1| ≤ 1e-8` after `U(p,q)` normalization.
    ReciprocalPair,
}

#[derive(Debug, Clone, Copy)]
pub struct OrthogonalityCheck {
    pub i: usize,
    pub j: usize,
    pub status: PairStatus,
}

const PAIR_TOL: f64 = 1e-8;

/// Checks every eigenpair combination of an automorphism: the two
/// eigenvectors must be `H`-orthogonal or the eigenvalues must be a
/// reciprocal pair. A pair satisfying neither is an invariant violation
/// (non-`U(p,q)` input or numerical failure).
pub fn orthogonality_audit(m: &MapCandidate, tol: &Tolerances) -> Result<Vec<OrthogonalityCheck>> {
    let report = classify(m, tol);
    if report.verdict != Verdict::Automorphism {
        return Err(Error::NotAutomorphism);
    }
    let sqrt_c = report.isometry_constant.expect("automorphism carries its constant").sqrt();
    let form = m.form();
    let pairs = eigen_decompose(m.matrix(), tol)?;
    let mut checks = Vec::new();
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            let product = form.inner_product(&pairs[i].vector, &pairs[j].vector)?;
            if product.norm() <= PAIR_TOL {
                checks.push(OrthogonalityCheck { i, j, status: PairStatus::Orthogonal });
                continue;
            }
            let li = pairs[i].value / C::new(sqrt_c, 0.0);
            let lj = pairs[j].value / C::new(sqrt_c, 0.0);
            if (lj.conj() * li - C::new(1.0, 0.0)).norm() <= PAIR_TOL {
                checks.push(OrthogonalityCheck { i, j, status: PairStatus::ReciprocalPair });
            } else {
                return Err(Error::InvariantViolation(format!(
                    "eigenpairs {i} and {j} are neither orthogonal nor reciprocal \
                     (product {:.3e}, λ̄_j λ_i = {})",
                    product.norm(),
                    lj.conj() * li
                )));
            }
        }
    }
    Ok(checks)
}

/// Identifier of an audited fixed-point statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TheoremId {
    /// `p+1` interior fixed points force a pointwise-fixed line through the
    /// ball (automorphisms).
    InteriorCrowding,
    /// `2p+1` boundary fixed points force a pointwise-fixed line
    /// (automorphisms).
    BoundaryCrowding,
    /// Without any pointwise-fixed line: at most `p` interior, `q` exterior
    /// and `min(2p,2q)` boundary fixed points (automorphisms).
    SparseCountBounds,
    /// Without a pointwise-fixed line in the boundary, enough boundary fixed
    /// points force an interior fixed point.
    BoundaryForcesInterior,
    /// Ball / ball-exterior rule: three (resp. two) boundary fixed points
    /// force an interior fixed point when `p = 1` (resp. `q = 1`).
    BallBoundaryRule,
    /// Every self map fixes something in the closed ball.
    ClosureNonempty,
}

impl std::fmt::Display for TheoremId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            TheoremId::InteriorCrowding => "interior-crowding",
            TheoremId::BoundaryCrowding => "boundary-crowding",
            TheoremId::SparseCountBounds => "sparse-count-bounds",
            TheoremId::BoundaryForcesInterior => "boundary-forces-interior",
            TheoremId::BallBoundaryRule => "ball-boundary-rule",
            TheoremId::ClosureNonempty => "closure-nonempty",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditStatus {
    Pass,
    Vacuous,
    Fail,
}

#[derive(Debug, Clone, Copy)]
pub struct TheoremCheck {
    pub theorem: TheoremId,
    pub hypothesis: bool,
    pub conclusion: bool,
    pub status: AuditStatus,
}

/// Outcome of auditing all count statements on one map.
#[derive(Debug, Clone)]
pub struct TheoremAudit {
    pub checks: Vec<TheoremCheck>,
    pub interior_records: usize,
    pub boundary_records: usize,
    pub exterior_records: usize,
    pub line_count: usize,
    /// Fixed points in the ball, counting pointwise-fixed lines through it.
    pub interior_points: PointCount,
    /// Fixed points on the boundary, counting those lying on fixed lines.
    pub boundary_points: PointCount,
}

fn check(theorem: TheoremId, hypothesis: bool, conclusion: bool) -> TheoremCheck {
    let status = if !hypothesis {
        AuditStatus::Vacuous
    } else if conclusion {
        AuditStatus::Pass
    } else {
        AuditStatus::Fail
    };
    TheoremCheck { theorem, hypothesis, conclusion, status }
}

/// Evaluate the fixed-point count statements on the computed fixed-point
/// data. Hypothesis-false cases are reported VACUOUS rather than omitted, so
/// sharpness examples stay visible; FAIL indicates a bug or tolerance breach
/// and is never silent.
///
/// Counting convention: records are one-dimensional eigenspaces; a
/// pointwise-fixed line additionally contributes the projective null
/// directions of its span to the boundary count (infinitely many for a line
/// inside the boundary) and infinitely many interior points when it meets
/// the ball.
pub fn theorem_audit(m: &MapCandidate, tol: &Tolerances) -> Result<TheoremAudit> {
    let report = require_self_map(m, tol)?;
    let records = fixed_points(m, tol)?;
    let lines = fixed_lines(m, tol)?;
    let sig = m.signature();
    let (p, q) = (sig.p(), sig.q());
    let is_auto = report.verdict == Verdict::Automorphism;

    let interior_records = records.iter().filter(|r| r.location == Location::Interior).count();
    let boundary_records = records.iter().filter(|r| r.location == Location::Boundary).count();
    let exterior_records = records.iter().filter(|r| r.location == Location::Exterior).count();

    let any_line = !lines.is_empty();
    let any_boundary_line = lines.iter().any(|l| l.disposition == LineDisposition::InBoundary);
    let any_interior_line = lines.iter().any(|l| l.disposition == LineDisposition::MeetsInterior);

    let mut boundary_points = PointCount::Finite(boundary_records);
    for line in &lines {
        boundary_points = boundary_points.add(line.boundary_point_count());
    }
    let interior_points = if any_interior_line {
        PointCount::Infinite
    } else {
        PointCount::Finite(interior_records)
    };

    let checks = vec![
        check(
            TheoremId::InteriorCrowding,
            is_auto && interior_points.at_least(p + 1),
            any_interior_line,
        ),
        check(
            TheoremId::BoundaryCrowding,
            is_auto && boundary_points.at_least(2 * p + 1),
            any_line,
        ),
        check(
            TheoremId::SparseCountBounds,
            is_auto && !any_line,
            interior_records <= p
                && exterior_records <= q
                && boundary_records <= (2 * p).min(2 * q),
        ),
        check(
            TheoremId::BoundaryForcesInterior,
            !any_boundary_line
                && if p <= q {
                    boundary_points.at_least(2 * p + 1)
                } else {
                    boundary_points.at_least(2 * q)
                },
            interior_points.at_least(1) && (p > q || any_line),
        ),
        check(
            TheoremId::BallBoundaryRule,
            (p == 1 && boundary_points.at_least(3)) || (q == 1 && boundary_points.at_least(2)),
            interior_points.at_least(1),
        ),
        check(
            TheoremId::ClosureNonempty,
            true,
            interior_records + boundary_records >= 1 || lines.iter().any(|l| l.touches_closure()),
        ),
    ];

    Ok(TheoremAudit {
        checks,
        interior_records,
        boundary_records,
        exterior_records,
        line_count: lines.len(),
        interior_points,
        boundary_points,
    })
}
