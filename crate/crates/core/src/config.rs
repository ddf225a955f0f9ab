//! Numerical tolerances.
//!
//! The underlying geometry is exact; the implementation classifies with
//! declared bands instead. Boundary membership, positive semi-definiteness,
//! eigenpair accuracy and numerical rank each get their own knob. The
//! defaults below are used everywhere unless a caller overrides them.

/// Tolerance bundle threaded through every classification routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative band around zero for sign classification of Hermitian
    /// quantities (vector norms, Gram eigenvalues). A vector counts as null
    /// when `|v^H H v| <= null * v^H v`.
    pub null: f64,
    /// Relative band for positive semi-definiteness: `G ⪰ 0` is accepted
    /// when `λ_min(G) >= -psd * ‖G‖`.
    pub psd: f64,
    /// Relative eigenpair residual: every returned pair satisfies
    /// `‖Mv − λv‖ <= eig * ‖M‖`.
    pub eig: f64,
    /// Relative singular-value cutoff for numerical rank: `σ > rank * σ_max`.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            null: 1e-8,
            psd: 1e-9,
            eig: 1e-9,
            rank: 1e-10,
        }
    }
}

impl Tolerances {
    /// Minimum relative gap between distinct eigenvalues required before
    /// Jordan-structure analysis will trust its clustering.
    pub fn cluster_gap(&self) -> f64 {
        100.0 * self.eig
    }
}
