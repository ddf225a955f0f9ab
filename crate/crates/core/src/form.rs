//! The indefinite Hermitian form `H_{p,q}` and vector classification.
//!
//! `C^{p+q}` carries the form `H_{p,q} = diag(I_p, -I_q)`. Vectors split
//! into positive, null and negative classes according to the sign of
//! `v^H H v`; the projectivized positive cone is the generalized ball
//! `D_{p,q}`, the null cone its boundary.

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C};

/// Signature `(p, q)` of the form, with an optional plane dimension `r`
/// (`1 <= r <= p`) selecting the domain `D^r_{p,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    p: usize,
    q: usize,
    r: Option<usize>,
}

impl Signature {
    /// Signature with no plane dimension attached (the `r = 1` ball case).
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidSignature { p, q, r: None });
        }
        Ok(Self { p, q, r: None })
    }

    /// Signature with plane dimension `r`, `1 <= r <= p`.
    pub fn with_plane(p: usize, q: usize, r: usize) -> Result<Self> {
        if p == 0 || q == 0 || r == 0 || r > p {
            return Err(Error::InvalidSignature { p, q, r: Some(r) });
        }
        Ok(Self { p, q, r: Some(r) })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> Option<usize> {
        self.r
    }

    /// Ambient dimension `p + q`.
    pub fn n(&self) -> usize {
        self.p + self.q
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.r {
            Some(r) => write!(f, "({},{};r={})", self.p, self.q, r),
            None => write!(f, "({},{})", self.p, self.q),
        }
    }
}

/// Sign class of a vector with respect to `H_{p,q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorClass {
    Positive,
    Null,
    Negative,
}

/// The form `H_{p,q} = diag(I_p, -I_q)` on `C^{p+q}`.
///
/// The two-argument product uses the convention `(u, v) -> v^H H u`: the
/// second argument is the conjugated one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndefiniteForm {
    sig: Signature,
}

impl IndefiniteForm {
    pub fn new(sig: Signature) -> Self {
        Self { sig }
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    /// Diagonal weight of coordinate `i`: `+1` for `i < p`, `-1` otherwise.
    pub fn weight(&self, i: usize) -> f64 {
        if i < self.sig.p {
            1.0
        } else {
            -1.0
        }
    }

    /// The matrix `diag(I_p, -I_q)`.
    pub fn matrix(&self) -> CMat {
        let n = self.sig.n();
        CMat::from_fn(n, n, |i, j| {
            if i == j {
                C::new(self.weight(i), 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        })
    }

    /// `H v`.
    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        self.check_dim(v)?;
        Ok(CVec::from_fn(v.len(), |i, _| v[i] * C::new(self.weight(i), 0.0)))
    }

    /// Sesquilinear product `v^H H u` (second argument conjugated).
    pub fn inner_product(&self, u: &CVec, v: &CVec) -> Result<C> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let mut acc = C::new(0.0, 0.0);
        for i in 0..u.len() {
            acc += v[i].conj() * u[i] * C::new(self.weight(i), 0.0);
        }
        Ok(acc)
    }

    /// The real quantity `v^H H v`.
    pub fn h_norm2(&self, v: &CVec) -> Result<f64> {
        self.check_dim(v)?;
        let mut acc = 0.0;
        for i in 0..v.len() {
            acc += self.weight(i) * v[i].norm_sqr();
        }
        Ok(acc)
    }

    /// Normalized sign margin `v^H H v / v^H v`, the quantity the class
    /// bands are applied to.
    pub fn margin(&self, v: &CVec) -> Result<f64> {
        let denom = v.norm_squared();
        if denom == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(self.h_norm2(v)? / denom)
    }

    /// Classify a nonzero vector with the `tol.null` band.
    pub fn classify(&self, v: &CVec, tol: &Tolerances) -> Result<VectorClass> {
        let margin = self.margin(v)?;
        Ok(if margin > tol.null {
            VectorClass::Positive
        } else if margin < -tol.null {
            VectorClass::Negative
        } else {
            VectorClass::Null
        })
    }

    fn check_dim(&self, v: &CVec) -> Result<()> {
        if v.len() != self.sig.n() {
            return Err(Error::DimensionMismatch {
                expected: self.sig.n(),
                got: v.len(),
            });
        }
        Ok(())
    }
}
