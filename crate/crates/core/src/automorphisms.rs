//! Constructive group theory for `U(p,q)`.
//!
//! `Aut(D_{p,q})` is `PU(p,q)`; everything here works with matrix
//! representatives. The workhorse is a constructive Witt extension: any
//! isometric embedding of a subspace of `C^{p,q}` extends to a full isometry,
//! built by splitting off the radical, completing each radical vector to a
//! hyperbolic pair on both sides, and matching `H`-orthonormal bases of the
//! complements. Transitivity witnesses, the doubly-transitive boundary
//! criterion, non-isotropic dilations and the block-unitary/dilation
//! factorization all reduce to it or to direct matrix assembly. Every
//! construction is residual-checked before it is returned.

use rand::Rng;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::form::{IndefiniteForm, Signature, VectorClass};
use crate::linalg::{self, CMat, CVec, C};
use crate::selfmap::{classify, MapCandidate, Verdict};

/// An isometric embedding of a subspace: basis columns of the domain and
/// their prescribed images, with equal `H`-Gram matrices.
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    sig: Signature,
    domain: CMat,
    images: CMat,
}

/// Entrywise agreement required between domain and image Grams.
const GRAM_MATCH_TOL: f64 = 1e-10;
/// Residual bound enforced on every constructed isometry.
const ISOMETRY_RESIDUAL: f64 = 1e-9;
/// Projective residual bound for transitivity witnesses.
const PROJECTIVE_RESIDUAL: f64 = 1e-8;

impl PartialIsometry {
    /// Validates shapes and the isometric-embedding condition
    /// `Gram(domain) = Gram(images)` entrywise within `1e-10` (relative to
    /// the Gram scale).
    pub fn new(sig: Signature, domain: CMat, images: CMat) -> Result<Self> {
        let n = sig.n();
        if domain.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: domain.nrows() });
        }
        if images.nrows() != n || images.ncols() != domain.ncols() {
            return Err(Error::DimensionMismatch { expected: domain.ncols(), got: images.ncols() });
        }
        let form = IndefiniteForm::new(sig);
        let h = form.matrix();
        let g_dom = domain.adjoint() * &h * &domain;
        let g_img = images.adjoint() * &h * &images;
        let deviation = linalg::max_abs_entry(&(&g_dom - &g_img));
        let scale = linalg::max_abs_entry(&g_dom).max(1.0);
        if deviation > GRAM_MATCH_TOL * scale {
            return Err(Error::GramMismatch { deviation });
        }
        Ok(Self { sig, domain, images })
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn domain(&self) -> &CMat {
        &self.domain
    }

    pub fn images(&self) -> &CMat {
        &self.images
    }
}

/// Rotate a column so its first non-negligible entry is real positive,
/// keeping its length.
fn canonical_phase(v: &CVec) -> C {
    let maxabs = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if maxabs == 0.0 {
        return C::new(1.0, 0.0);
    }
    let pivot = v.iter().position(|z| z.norm() > 1e-8 * maxabs).unwrap();
    (v[pivot] / C::new(v[pivot].norm(), 0.0)).conj()
}

/// Find `s` with `r^H H s = 1`, `y^H H s = 0` for every constraint `y`, and
/// `s^H H s = 0`: the hyperbolic partner of the isotropic vector `r`.
fn hyperbolic_partner(form: &IndefiniteForm, r: &CVec, constraints: &[CVec]) -> Result<CVec> {
    let n = form.signature().n();
    let h = form.matrix();
    let rows = 1 + constraints.len();
    let mut a = CMat::zeros(rows, n);
    a.row_mut(0).copy_from(&(h.clone() * r).adjoint());
    for (i, y) in constraints.iter().enumerate() {
        a.row_mut(i + 1).copy_from(&(h.clone() * y).adjoint());
    }
    let mut rhs = CMat::zeros(rows, 1);
    rhs[(0, 0)] = C::new(1.0, 0.0);
    let s0 = linalg::lstsq(&a, &rhs);
    let feasibility = (&a * &s0 - &rhs).norm();
    if feasibility > 1e-8 {
        return Err(Error::InvariantViolation(format!(
            "hyperbolic completion infeasible (residual {feasibility:.3e})"
        )));
    }
    let s0: CVec = s0.column(0).into_owned();
    // s0 + t·r stays feasible for real t; t = -⟨s0,s0⟩/2 makes it isotropic
    let c0 = form.h_norm2(&s0)?;
    Ok(&s0 - r * C::new(0.5 * c0, 0.0))
}

/// Split matched bases into radical and `H`-orthonormalized non-degenerate
/// parts, applying the same (domain-derived) transformation to both sides.
struct GramSplit {
    dom_radical: Vec<CVec>,
    img_radical: Vec<CVec>,
    dom_core: Vec<CVec>,
    img_core: Vec<CVec>,
    /// +1 / -1 `H`-norms of the core columns, sorted positives first.
    core_signs: Vec<f64>,
}

fn split_by_gram(form: &IndefiniteForm, domain: &CMat, images: &CMat, tol: &Tolerances) -> GramSplit {
    let h = form.matrix();
    let gram = domain.adjoint() * &h * domain;
    let sigma_max = linalg::singular_values(domain).first().copied().unwrap_or(0.0);
    let (values, vectors) = linalg::hermitian_eigen(&gram);
    let gram_norm = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let band = tol.null * gram_norm.max(sigma_max * sigma_max);

    let mut order: Vec<usize> = (0..values.len()).collect();
    // positives descending, then negatives, radical last
    order.sort_by(|&a, &b| {
        let key = |v: f64| if v > band { 0 } else if v < -band { 1 } else { 2 };
        key(values[a]).cmp(&key(values[b])).then(values[b].abs().total_cmp(&values[a].abs()))
    });

    let mut split = GramSplit {
        dom_radical: Vec::new(),
        img_radical: Vec::new(),
        dom_core: Vec::new(),
        img_core: Vec::new(),
        core_signs: Vec::new(),
    };
    for &idx in &order {
        let coeff = vectors.column(idx).into_owned();
        let dom_col: CVec = domain * &coeff;
        let img_col: CVec = images * &coeff;
        if values[idx].abs() <= band {
            let phase = canonical_phase(&dom_col);
            split.dom_radical.push(&dom_col * phase);
            split.img_radical.push(&img_col * phase);
        } else {
            let scale = C::new(1.0 / values[idx].abs().sqrt(), 0.0);
            let dom_scaled: CVec = dom_col * scale;
            let phase = canonical_phase(&dom_scaled);
            split.dom_core.push(&dom_scaled * phase);
            split.img_core.push(&(img_col * scale) * phase);
            split.core_signs.push(values[idx].signum());
        }
    }
    split
}

/// `H`-orthonormal basis of the orthogonal complement of the span, positives
/// first. Returns the basis columns and their signs.
fn orthonormal_complement(form: &IndefiniteForm, span: &[CVec], tol: &Tolerances) -> Result<(Vec<CVec>, Vec<f64>)> {
    let n = form.signature().n();
    let h = form.matrix();
    if span.is_empty() {
        let cols: Vec<CVec> = (0..n).map(|i| CMat::identity(n, n).column(i).into_owned()).collect();
        let signs = (0..n).map(|i| form.weight(i)).collect();
        return Ok((cols, signs));
    }
    let span_mat = CMat::from_columns(span);
    let constraints = span_mat.adjoint() * &h;
    let complement = linalg::null_space(&constraints, tol.rank);
    if complement.ncols() == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let gram = complement.adjoint() * &h * &complement;
    let (values, vectors) = linalg::hermitian_eigen(&gram);
    let gram_norm = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut cols = Vec::new();
    let mut signs = Vec::new();
    for &idx in &order {
        if values[idx].abs() <= tol.null * gram_norm.max(1.0) {
            return Err(Error::InvariantViolation(
                "degenerate orthogonal complement of a non-degenerate subspace".into(),
            ));
        }
        let col: CVec = &complement * vectors.column(idx) * C::new(1.0 / values[idx].abs().sqrt(), 0.0);
        let phase = canonical_phase(&col);
        cols.push(col * phase);
        signs.push(values[idx].signum());
    }
    Ok((cols, signs))
}

/// Extend an isometric embedding `f : Y -> C^{p,q}` to a full isometry
/// `F ∈ U(p,q)` with `F y_i = f(y_i)`.
///
/// Split `Y = rad(Y) ⊕ Y_0` via the Gram eigendecomposition; complete each
/// radical vector to a hyperbolic pair orthogonal to everything already
/// matched (on both sides); extend the resulting non-degenerate matched
/// bases by `H`-orthonormal bases of the complements, pairing `+1`-norm
/// vectors with `+1` and `-1` with `-1`. The output is verified against both
/// the isometry residual and the interpolation residual.
pub fn witt_extend(pi: &PartialIsometry, tol: &Tolerances) -> Result<CMat> {
    let sig = pi.sig;
    let n = sig.n();
    let form = IndefiniteForm::new(sig);

    let k = pi.domain.ncols();
    if k > 0 {
        let sigma = linalg::singular_values(&pi.domain);
        if sigma[0] == 0.0 || *sigma.last().unwrap() <= tol.rank * sigma[0] {
            return Err(Error::RankDeficient {
                ratio: if sigma[0] == 0.0 { 0.0 } else { sigma.last().unwrap() / sigma[0] },
            });
        }
    }

    let split = split_by_gram(&form, &pi.domain, &pi.images, tol);

    // hyperbolic completion of the radical, mirrored on the image side
    let mut dom_matched: Vec<CVec> = split.dom_core.clone();
    let mut img_matched: Vec<CVec> = split.img_core.clone();
    let mut dom_partners: Vec<CVec> = Vec::new();
    let mut img_partners: Vec<CVec> = Vec::new();
    for i in 0..split.dom_radical.len() {
        let dom_constraints: Vec<CVec> = split
            .dom_core
            .iter()
            .chain(split.dom_radical.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v))
            .chain(dom_partners.iter())
            .cloned()
            .collect();
        let img_constraints: Vec<CVec> = split
            .img_core
            .iter()
            .chain(split.img_radical.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v))
            .chain(img_partners.iter())
            .cloned()
            .collect();
        dom_partners.push(hyperbolic_partner(&form, &split.dom_radical[i], &dom_constraints)?);
        img_partners.push(hyperbolic_partner(&form, &split.img_radical[i], &img_constraints)?);
    }
    for i in 0..split.dom_radical.len() {
        dom_matched.push(split.dom_radical[i].clone());
        img_matched.push(split.img_radical[i].clone());
        dom_matched.push(dom_partners[i].clone());
        img_matched.push(img_partners[i].clone());
    }

    // complements of the (now non-degenerate) matched spans
    let (dom_rest, dom_signs) = orthonormal_complement(&form, &dom_matched, tol)?;
    let (img_rest, img_signs) = orthonormal_complement(&form, &img_matched, tol)?;
    if dom_signs != img_signs {
        return Err(Error::InvariantViolation(
            "complement signatures of domain and image do not match".into(),
        ));
    }
    dom_matched.extend(dom_rest);
    img_matched.extend(img_rest);

    if dom_matched.len() != n {
        return Err(Error::InvariantViolation(format!(
            "assembled basis has {} vectors, expected {n}",
            dom_matched.len()
        )));
    }
    let dom_mat = CMat::from_columns(&dom_matched);
    let img_mat = CMat::from_columns(&img_matched);
    // F dom = img  =>  F = img · dom⁻¹, via dom^T F^T = img^T
    let lu = dom_mat.transpose().lu();
    let f_t = lu
        .solve(&img_mat.transpose())
        .ok_or_else(|| Error::InvariantViolation("assembled domain basis is singular".into()))?;
    let f = f_t.transpose();

    let h = form.matrix();
    let iso_residual = linalg::op_norm(&(f.adjoint() * &h * &f - &h));
    let interp_residual = linalg::op_norm(&(&f * &pi.domain - &pi.images));
    let scale = linalg::op_norm(&pi.images).max(1.0);
    if iso_residual > ISOMETRY_RESIDUAL.max(tol.psd) || interp_residual > ISOMETRY_RESIDUAL * scale {
        return Err(Error::InvariantViolation(format!(
            "witt extension failed residual check (isometry {iso_residual:.3e}, interpolation {interp_residual:.3e})"
        )));
    }
    Ok(f)
}

/// An element of `U(p,q)` sending `[src]` to `[dst]`. Both points must have
/// the same class; `Positive` and `Null` are the transitive cases, and
/// `Negative` pairs are supported by the same construction.
pub fn transitivity_witness(src: &CVec, dst: &CVec, sig: Signature, tol: &Tolerances) -> Result<CMat> {
    let form = IndefiniteForm::new(sig);
    let class_src = form.classify(src, tol)?;
    let class_dst = form.classify(dst, tol)?;
    if class_src != class_dst {
        return Err(Error::ClassMismatch(format!("src is {class_src:?}, dst is {class_dst:?}")));
    }
    let k = match class_src {
        VectorClass::Null => 1.0,
        _ => (form.h_norm2(src)? / form.h_norm2(dst)?).sqrt(),
    };
    let pi = PartialIsometry::new(
        sig,
        CMat::from_columns(&[src.clone()]),
        CMat::from_columns(&[dst * C::new(k, 0.0)]),
    )?;
    let f = witt_extend(&pi, tol)?;
    let image: CVec = &f * src;
    let residual = linalg::phase_aligned_distance(
        &CMat::from_columns(&[&image / C::new(image.norm(), 0.0)]),
        &CMat::from_columns(&[dst / C::new(dst.norm(), 0.0)]),
    );
    if residual > PROJECTIVE_RESIDUAL {
        return Err(Error::InvariantViolation(format!(
            "transitivity witness misses the target projectively ({residual:.3e})"
        )));
    }
    Ok(f)
}

/// Witness for the doubly-transitive boundary criterion: given boundary
/// points `[v1] ≠ [v2]` and `[w1] ≠ [w2]`, an isometry with `[F v_j] = [w_j]`
/// exists iff `v_1^H H v_2` and `w_1^H H w_2` are both zero or both nonzero
/// (then `w_1` is rescaled to match and the pair map extends by Witt).
/// Returns `None` when exactly one product vanishes.
pub fn double_transitivity_witness(
    v1: &CVec,
    v2: &CVec,
    w1: &CVec,
    w2: &CVec,
    sig: Signature,
    tol: &Tolerances,
) -> Result<Option<CMat>> {
    let form = IndefiniteForm::new(sig);
    for (name, v) in [("v1", v1), ("v2", v2), ("w1", w1), ("w2", w2)] {
        if form.classify(v, tol)? != VectorClass::Null {
            return Err(Error::ClassMismatch(format!("{name} is not a boundary (null) vector")));
        }
    }
    for (name, a, b) in [("v", v1, v2), ("w", w1, w2)] {
        let angle = linalg::max_principal_angle(&CMat::from_columns(&[a.clone()]), &CMat::from_columns(&[b.clone()]));
        if angle <= 1e-8 {
            return Err(Error::InvalidInput(format!("{name}1 and {name}2 are projectively equal")));
        }
    }
    // cross products v1^H H v2 and w1^H H w2
    let cv = form.inner_product(v2, v1)?;
    let cw = form.inner_product(w2, w1)?;
    let zero_v = cv.norm() <= 1e-10 * v1.norm() * v2.norm();
    let zero_w = cw.norm() <= 1e-10 * w1.norm() * w2.norm();
    if zero_v != zero_w {
        return Ok(None);
    }
    let w1_scaled = if zero_v {
        w1.clone()
    } else {
        // β̄ · w1^H H w2 = v1^H H v2
        w1 * (cv / cw).conj()
    };
    let pi = PartialIsometry::new(
        sig,
        CMat::from_columns(&[v1.clone(), v2.clone()]),
        CMat::from_columns(&[w1_scaled, w2.clone()]),
    )?;
    let f = witt_extend(&pi, tol)?;
    for (src, dst) in [(v1, w1), (v2, w2)] {
        let image: CVec = &f * src;
        let residual = linalg::phase_aligned_distance(
            &CMat::from_columns(&[&image / C::new(image.norm(), 0.0)]),
            &CMat::from_columns(&[dst / C::new(dst.norm(), 0.0)]),
        );
        if residual > PROJECTIVE_RESIDUAL {
            return Err(Error::InvariantViolation(format!(
                "double transitivity witness misses a target projectively ({residual:.3e})"
            )));
        }
    }
    Ok(Some(f))
}

/// Parameters of a non-isotropic dilation: `a ≥ 1`, `b ≥ 0`, `a² − b² = 1`,
/// acting on coordinate `slot` (1-based, `1 ≤ slot ≤ p`) and the last
/// coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationParams {
    a: f64,
    b: f64,
    slot: usize,
}

impl DilationParams {
    pub fn new(a: f64, b: f64, slot: usize) -> Result<Self> {
        if !(a >= 1.0) || !(b >= 0.0) || (a * a - b * b - 1.0).abs() > 1e-12 || slot == 0 {
            return Err(Error::InvalidInput(format!(
                "invalid dilation parameters a = {a}, b = {b}, slot = {slot}"
            )));
        }
        Ok(Self { a, b, slot })
    }

    /// Build from `b` alone, with `a = sqrt(1 + b²)` enforcing the unit
    /// pseudo-norm exactly.
    pub fn from_b(b: f64, slot: usize) -> Result<Self> {
        Self::new((1.0 + b * b).sqrt(), b.abs(), slot)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn slot(&self) -> usize {
        self.slot
    }
}

/// The non-isotropic dilation matrix: entry `(slot, slot) = a`,
/// `(slot, n) = -b`, `(n, slot) = b`, `(n, n) = -a`, identity elsewhere.
/// Self-inverse and in `U(p,q)`.
pub fn dilation(params: DilationParams, sig: Signature) -> Result<CMat> {
    if params.slot > sig.p() {
        return Err(Error::InvalidInput(format!(
            "dilation slot {} out of range 1..={}",
            params.slot,
            sig.p()
        )));
    }
    let n = sig.n();
    let mut m = CMat::identity(n, n);
    let s = params.slot - 1;
    m[(s, s)] = C::new(params.a, 0.0);
    m[(s, n - 1)] = C::new(-params.b, 0.0);
    m[(n - 1, s)] = C::new(params.b, 0.0);
    m[(n - 1, n - 1)] = C::new(-params.a, 0.0);
    Ok(m)
}

/// One factor of the normal-form word.
#[derive(Debug, Clone)]
pub enum Factor {
    /// Block-diagonal element of `U(p) × U(q)`.
    UnitaryBlock(CMat),
    /// Non-isotropic dilation with its parameters.
    Dilation { matrix: CMat, params: DilationParams },
}

impl Factor {
    pub fn matrix(&self) -> &CMat {
        match self {
            Factor::UnitaryBlock(m) => m,
            Factor::Dilation { matrix, .. } => matrix,
        }
    }
}

/// The word `U_{p+1} M_p U_p ... M_1 U_1` factoring a `U(p,q)` matrix into
/// block unitaries and dilations, stored left to right.
#[derive(Debug, Clone)]
pub struct FactorSequence {
    pub factors: Vec<Factor>,
    /// `√c` where the input satisfied `M^H H M = cH`: the factors multiply
    /// to `input / normalization`.
    pub normalization: f64,
}

impl FactorSequence {
    /// Product of the factors in stored order.
    pub fn reconstruct(&self) -> CMat {
        let n = self.factors[0].matrix().nrows();
        let mut acc = CMat::identity(n, n);
        for f in &self.factors {
            acc = acc * f.matrix();
        }
        acc
    }

    pub fn dilation_params(&self) -> Vec<DilationParams> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                Factor::Dilation { params, .. } => Some(*params),
                _ => None,
            })
            .collect()
    }
}

/// Unitary `U` (of the size of `x`) with `U x = ‖x‖ e_axis`.
fn unitary_sending_to_axis(x: &CVec, axis: usize) -> CMat {
    let d = x.len();
    let norm = x.norm();
    if norm == 0.0 {
        return CMat::identity(d, d);
    }
    let phase = if x[axis].norm() > 0.0 { x[axis] / C::new(x[axis].norm(), 0.0) } else { C::new(1.0, 0.0) };
    // reflect onto -phase·‖x‖·e_axis: the sign choice keeps w away from
    // cancellation even when x is already parallel to the axis
    let mut target = CVec::zeros(d);
    target[axis] = -phase * C::new(norm, 0.0);
    let w: CVec = x - &target;
    let ww = w.norm_squared();
    let outer = &w * w.adjoint() * C::new(2.0 / ww, 0.0);
    let mut u = CMat::identity(d, d) - outer;
    // absorb the phase so the image is real positive on the axis
    let mut row = u.row(axis).into_owned();
    row *= -phase.conj();
    u.row_mut(axis).copy_from(&row);
    u
}

/// Embed `u1 ∈ U(p - offset)` (acting on coordinates `offset..p`) and
/// `u2 ∈ U(q)` into the block-diagonal subgroup of `U(p,q)`.
fn embed_block_unitary(sig: Signature, offset: usize, u1: &CMat, u2: &CMat) -> CMat {
    let n = sig.n();
    let p = sig.p();
    let mut m = CMat::identity(n, n);
    m.view_mut((offset, offset), (p - offset, p - offset)).copy_from(u1);
    m.view_mut((p, p), (sig.q(), sig.q())).copy_from(u2);
    m
}

/// Factor an automorphism representative into the word
/// `U_{p+1} M_p U_p ... M_1 U_1`.
///
/// The input must classify as `Automorphism`; it is first scaled by
/// `1/√c` into `U(p,q)`. Step `j` solves `C v = e_j`, rotates the active
/// positive block of `v` onto coordinate `j` and the negative block onto the
/// last coordinate with block unitaries, cancels the remaining hyperbolic
/// mix with the slot-`j` dilation, and recurses on the stabilized subblock.
/// The factor product reproduces the scaled input to `1e-8 · ‖A‖`.
pub fn normal_form(a: &CMat, sig: Signature, tol: &Tolerances) -> Result<FactorSequence> {
    let candidate = MapCandidate::new(a.clone(), sig)?;
    let report = classify(&candidate, tol);
    if report.verdict != Verdict::Automorphism {
        return Err(Error::NotAutomorphism);
    }
    let c = report.isometry_constant.expect("automorphism carries its constant");
    let normalization = c.sqrt();
    let au = a / C::new(normalization, 0.0);

    let n = sig.n();
    let p = sig.p();
    let q = sig.q();
    let mut current = au.clone();
    let mut dilations: Vec<Factor> = Vec::with_capacity(p);
    let mut unitaries: Vec<Factor> = Vec::with_capacity(p);

    for j in 0..p {
        let mut e_j = CVec::zeros(n);
        e_j[j] = C::new(1.0, 0.0);
        let v = current
            .clone()
            .lu()
            .solve(&e_j)
            .ok_or_else(|| Error::InvariantViolation("normal form hit a singular intermediate".into()))?;
        let v_pos: CVec = v.rows(j, p - j).into_owned();
        let v_neg: CVec = v.rows(p, q).into_owned();
        let u1 = unitary_sending_to_axis(&v_pos, 0);
        let u2 = unitary_sending_to_axis(&v_neg, q - 1);
        let u = embed_block_unitary(sig, j, &u1, &u2);
        let params = DilationParams::from_b(v_neg.norm(), j + 1)?;
        let m = dilation(params, sig)?;
        current = current * u.adjoint() * &m;
        unitaries.push(Factor::UnitaryBlock(u));
        dilations.push(Factor::Dilation { matrix: m, params });
    }

    // current should now fix e_1..e_p: it is I_p ⊕ W for some W ∈ U(q)
    let mut tail = CMat::identity(n, n);
    tail.view_mut((p, p), (q, q)).copy_from(&current.view((p, p), (q, q)));
    let block_deviation = linalg::op_norm(&(&current - &tail));
    if block_deviation > 1e-8 * linalg::op_norm(&au).max(1.0) {
        return Err(Error::InvariantViolation(format!(
            "normal form recursion left a non-block residue ({block_deviation:.3e})"
        )));
    }

    let mut factors = Vec::with_capacity(2 * p + 1);
    factors.push(Factor::UnitaryBlock(tail));
    for j in (0..p).rev() {
        factors.push(dilations[j].clone());
        factors.push(unitaries[j].clone());
    }
    let seq = FactorSequence { factors, normalization };

    let residual = linalg::op_norm(&(seq.reconstruct() - &au));
    if residual > 1e-8 * linalg::op_norm(&au).max(1.0) {
        return Err(Error::InvariantViolation(format!(
            "normal form reconstruction residual {residual:.3e} too large"
        )));
    }
    Ok(seq)
}

/// Deterministic pseudo-random element of `U(p,q)`: alternating product of
/// Haar-ish `U(p) × U(q)` blocks (QR of complex Gaussians with phase-fixed
/// diagonal) and dilations with `a = cosh t`, `t` uniform on `[0, 2]`,
/// at uniformly random slots.
pub fn random_u_pq(sig: Signature, seed: u64) -> CMat {
    let mut rng = linalg::seeded(seed);
    let p = sig.p();
    let q = sig.q();

    fn haar_unitary<R: Rng>(rng: &mut R, d: usize) -> CMat {
        let g = linalg::complex_gaussian_mat(rng, d, d);
        let qr = g.qr();
        let (qmat, r) = (qr.q(), qr.r());
        let mut fixed = qmat;
        for i in 0..d {
            let rii = r[(i, i)];
            let phase = if rii.norm() > 0.0 { rii / C::new(rii.norm(), 0.0) } else { C::new(1.0, 0.0) };
            let mut col = fixed.column(i).into_owned();
            col *= phase;
            fixed.set_column(i, &col);
        }
        fixed
    }

    let u1 = haar_unitary(&mut rng, p);
    let u2 = haar_unitary(&mut rng, q);
    let mut m = embed_block_unitary(sig, 0, &u1, &u2);
    for _ in 0..p {
        let t: f64 = rng.random_range(0.0..2.0);
        let slot = rng.random_range(1..=p);
        let params = DilationParams::from_b(t.sinh(), slot).expect("sinh(t) parameters are valid");
        let d = dilation(params, sig).expect("slot within range");
        let u1 = haar_unitary(&mut rng, p);
        let u2 = haar_unitary(&mut rng, q);
        let u = embed_block_unitary(sig, 0, &u1, &u2);
        m = m * d * u;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    const S2: f64 = std::f64::consts::SQRT_2;

    fn sig(p: usize, q: usize) -> Signature {
        Signature::new(p, q).unwrap()
    }

    fn rv(entries: &[f64]) -> CVec {
        CVec::from_iterator(entries.len(), entries.iter().map(|&re| C::new(re, 0.0)))
    }

    fn u_residual(f: &CMat, s: Signature) -> f64 {
        let h = IndefiniteForm::new(s).matrix();
        linalg::op_norm(&(f.adjoint() * &h * f - &h))
    }

    #[test]
    fn witt_extends_positive_line() {
        let tol = Tolerances::default();
        let s = sig(1, 1);
        let pi = PartialIsometry::new(
            s,
            CMat::from_columns(&[rv(&[1.0, 0.0])]),
            CMat::from_columns(&[rv(&[S2, 1.0])]),
        )
        .unwrap();
        let f = witt_extend(&pi, &tol).unwrap();
        let expected = CMat::from_row_slice(2, 2, &[C::new(S2, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(S2, 0.0)]);
        assert!(linalg::op_norm(&(&f - &expected)) < 1e-9, "got {f}");
        assert!(u_residual(&f, s) < 1e-9);
    }

    #[test]
    fn witt_on_full_space_returns_the_isometry() {
        let tol = Tolerances::default();
        let s = sig(1, 2);
        let g = random_u_pq(s, 5);
        let pi = PartialIsometry::new(s, CMat::identity(3, 3), g.clone()).unwrap();
        let f = witt_extend(&pi, &tol).unwrap();
        assert!(linalg::op_norm(&(&f - &g)) < 1e-9);
    }

    #[test]
    fn witt_fixes_an_isotropic_vector() {
        let tol = Tolerances::default();
        let s = sig(2, 2);
        let r = rv(&[1.0, 0.0, -1.0, 0.0]);
        let pi = PartialIsometry::new(s, CMat::from_columns(&[r.clone()]), CMat::from_columns(&[r.clone()])).unwrap();
        let f = witt_extend(&pi, &tol).unwrap();
        assert!(u_residual(&f, s) < 1e-9);
        assert!((&f * &r - &r).norm() < 1e-9);
    }

    #[test]
    fn witt_rejects_non_isometric_data() {
        let s = sig(1, 1);
        let bad = PartialIsometry::new(
            s,
            CMat::from_columns(&[rv(&[1.0, 0.0])]),
            CMat::from_columns(&[rv(&[2.0, 1.0])]), // H-norm 3, not 1
        );
        assert!(matches!(bad, Err(Error::GramMismatch { .. })));
    }

    #[test]
    fn transitivity_examples() {
        let tol = Tolerances::default();
        let s = sig(1, 1);
        let f = transitivity_witness(&rv(&[1.0, 0.0]), &rv(&[S2, 1.0]), s, &tol).unwrap();
        let expected = CMat::from_row_slice(2, 2, &[C::new(S2, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(S2, 0.0)]);
        assert!(linalg::op_norm(&(&f - &expected)) < 1e-9);

        // src = dst: whatever comes back must fix the point
        let v = rv(&[1.0, 0.5]);
        let f = transitivity_witness(&v, &v, s, &tol).unwrap();
        assert!(u_residual(&f, s) < 1e-9);

        // boundary to boundary in (2,2)
        let s22 = sig(2, 2);
        let src = rv(&[1.0, 0.0, -1.0, 0.0]);
        let dst = rv(&[0.0, 1.0, 0.0, -1.0]);
        let f = transitivity_witness(&src, &dst, s22, &tol).unwrap();
        assert!(u_residual(&f, s22) < 1e-9);
    }

    #[test]
    fn transitivity_supports_negative_pairs_and_rejects_mismatch() {
        let tol = Tolerances::default();
        let s = sig(1, 1);
        let f = transitivity_witness(&rv(&[0.0, 1.0]), &rv(&[1.0, S2]), s, &tol).unwrap();
        assert!(u_residual(&f, s) < 1e-9);
        assert!(matches!(
            transitivity_witness(&rv(&[1.0, 0.0]), &rv(&[0.0, 1.0]), s, &tol),
            Err(Error::ClassMismatch(_))
        ));
    }

    #[test]
    fn double_transitivity_examples() {
        let tol = Tolerances::default();
        let s = sig(2, 2);
        // both cross products vanish: witness exists
        let f = double_transitivity_witness(
            &rv(&[1.0, 0.0, -1.0, 0.0]),
            &rv(&[0.0, 1.0, 0.0, -1.0]),
            &rv(&[1.0, 0.0, 1.0, 0.0]),
            &rv(&[0.0, 1.0, 0.0, 1.0]),
            s,
            &tol,
        )
        .unwrap()
        .expect("witness should exist");
        assert!(u_residual(&f, s) < 1e-9);

        // orthogonal v-pair vs non-orthogonal w-pair: no witness
        let none = double_transitivity_witness(
            &rv(&[1.0, 0.0, -1.0, 0.0]),
            &rv(&[0.0, 1.0, 0.0, -1.0]),
            &rv(&[1.0, 0.0, -1.0, 0.0]),
            &rv(&[1.0, 0.0, 1.0, 0.0]),
            s,
            &tol,
        )
        .unwrap();
        assert!(none.is_none());

        // identical pairs: identity qualifies, and the construction must fix both
        let f = double_transitivity_witness(
            &rv(&[1.0, 0.0, -1.0, 0.0]),
            &rv(&[1.0, 0.0, 1.0, 0.0]),
            &rv(&[1.0, 0.0, -1.0, 0.0]),
            &rv(&[1.0, 0.0, 1.0, 0.0]),
            s,
            &tol,
        )
        .unwrap()
        .expect("witness should exist");
        assert!(u_residual(&f, s) < 1e-9);
    }

    #[test]
    fn dilation_template() {
        let s = sig(1, 1);
        let params = DilationParams::new(S2, 1.0, 1).unwrap();
        let m = dilation(params, s).unwrap();
        let expected =
            CMat::from_row_slice(2, 2, &[C::new(S2, 0.0), C::new(-1.0, 0.0), C::new(1.0, 0.0), C::new(-S2, 0.0)]);
        assert!(linalg::op_norm(&(&m - &expected)) < 1e-15);
        assert!(u_residual(&m, s) < 1e-12);
        assert!(linalg::op_norm(&(&m * &m - CMat::identity(2, 2))) < 1e-12);

        // a = 1, b = 0 is the signed identity
        let s13 = sig(1, 3);
        let m = dilation(DilationParams::new(1.0, 0.0, 1).unwrap(), s13).unwrap();
        let mut signed = CMat::identity(4, 4);
        signed[(3, 3)] = C::new(-1.0, 0.0);
        assert!(linalg::op_norm(&(&m - &signed)) < 1e-15);

        // slot 2 in (2,2) with cosh/sinh parameters
        let s22 = sig(2, 2);
        let m = dilation(DilationParams::new(1.0f64.cosh(), 1.0f64.sinh(), 2).unwrap(), s22).unwrap();
        assert!(u_residual(&m, s22) < 1e-12);
        assert!(linalg::op_norm(&(&m * &m - CMat::identity(4, 4))) < 1e-12);

        assert!(dilation(DilationParams::new(1.0, 0.0, 3).unwrap(), s22).is_err());
        assert!(DilationParams::new(2.0, 1.0, 1).is_err());
    }

    #[test]
    fn normal_form_hand_example() {
        let tol = Tolerances::default();
        let s = sig(1, 1);
        let a = CMat::from_row_slice(2, 2, &[C::new(S2, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(S2, 0.0)]);
        let seq = normal_form(&a, s, &tol).unwrap();
        // word U_2 M_1 U_1 with U_2 = I, M_1 the (√2, 1) dilation, U_1 = diag(1, -1)
        assert_eq!(seq.factors.len(), 3);
        let u2 = seq.factors[0].matrix();
        let m1 = seq.factors[1].matrix();
        let u1 = seq.factors[2].matrix();
        assert!(linalg::op_norm(&(u2 - CMat::identity(2, 2))) < 1e-9);
        let m_expected =
            CMat::from_row_slice(2, 2, &[C::new(S2, 0.0), C::new(-1.0, 0.0), C::new(1.0, 0.0), C::new(-S2, 0.0)]);
        assert!(linalg::op_norm(&(m1 - &m_expected)) < 1e-9);
        let u1_expected = CMat::from_row_slice(2, 2, &[C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(-1.0, 0.0)]);
        assert!(linalg::op_norm(&(u1 - &u1_expected)) < 1e-9);
        assert!(linalg::op_norm(&(seq.reconstruct() - &a)) < 1e-9);
    }

    #[test]
    fn normal_form_identity_is_trivial() {
        let tol = Tolerances::default();
        let s = sig(2, 2);
        let seq = normal_form(&CMat::identity(4, 4), s, &tol).unwrap();
        for params in seq.dilation_params() {
            assert!((params.a() - 1.0).abs() < 1e-12);
            assert!(params.b().abs() < 1e-12);
        }
        assert!(linalg::op_norm(&(seq.reconstruct() - CMat::identity(4, 4))) < 1e-9);
    }

    #[test]
    fn normal_form_block_example() {
        let tol = Tolerances::default();
        let s = sig(2, 2);
        let mut a = CMat::zeros(4, 4);
        for i in 0..2 {
            a[(i, i)] = C::new(S2, 0.0);
            a[(i + 2, i + 2)] = C::new(S2, 0.0);
            a[(i, i + 2)] = C::new(1.0, 0.0);
            a[(i + 2, i)] = C::new(1.0, 0.0);
        }
        let seq = normal_form(&a, s, &tol).unwrap();
        assert_eq!(seq.dilation_params().len(), 2);
        let residual = linalg::op_norm(&(seq.reconstruct() - &a));
        assert!(residual <= 1e-8 * linalg::op_norm(&a));
    }

    #[test]
    fn normal_form_rejects_non_automorphisms() {
        let tol = Tolerances::default();
        let s = sig(1, 1);
        let a = CMat::from_row_slice(2, 2, &[C::new(2.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(1.0, 0.0)]);
        assert!(matches!(normal_form(&a, s, &tol), Err(Error::NotAutomorphism)));
    }

    #[test]
    fn random_u_pq_membership_and_determinism() {
        for (p, q) in [(1usize, 1usize), (1, 2), (2, 2), (2, 3)] {
            let s = sig(p, q);
            let a = random_u_pq(s, 1);
            let b = random_u_pq(s, 1);
            assert_eq!(a, b);
            assert!(u_residual(&a, s) < 1e-10, "residual {} for ({p},{q})", u_residual(&a, s));
            let other = random_u_pq(s, 2);
            assert!(linalg::op_norm(&(&a - &other)) > 1e-6);
        }
    }

    #[test]
    fn normal_form_round_trips_random_elements() {
        let tol = Tolerances::default();
        for (p, q) in [(1usize, 1usize), (1, 3), (2, 2), (3, 2)] {
            let s = sig(p, q);
            for seed in 0..10u64 {
                let a = random_u_pq(s, seed);
                let seq = normal_form(&a, s, &tol).unwrap();
                let d = linalg::phase_aligned_distance(&a, &seq.reconstruct());
                assert!(d <= 1e-8 * a.norm(), "({p},{q}) seed {seed}: distance {d:.3e}");
                for params in seq.dilation_params() {
                    assert!((params.a().powi(2) - params.b().powi(2) - 1.0).abs() < 1e-10);
                }
            }
        }
    }
}
