//! Entanglement tests: the Duan sum and positivity under partial transposition.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::state::{CovarianceMatrix, Mode, P1, P2, Q1, Q2};

/// Default half-width of the indeterminate band around `nu_min = 1`.
pub const DEFAULT_SEPARABILITY_TOL: f64 = 1e-9;

/// `Var(p-) + Var(q+)`; values below 2 witness entanglement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuanReport {
    pub value: f64,
    pub violated: bool,
}

/// Evaluates the Duan sum from the full matrix, so slightly asymmetric
/// (estimated) states are handled too.
pub fn duan_sum(v: &CovarianceMatrix) -> DuanReport {
    let p_minus = 0.5 * (v.get(P1, P1) + v.get(P2, P2) - 2.0 * v.get(P1, P2));
    let q_plus = 0.5 * (v.get(Q1, Q1) + v.get(Q2, Q2) + 2.0 * v.get(Q1, Q2));
    let value = p_minus + q_plus;
    DuanReport {
        value,
        violated: value < 2.0,
    }
}

/// Mirror-reflects the phase quadrature of `mode` (`q_k -> -q_k`). The
/// result is still positive definite but generally violates the uncertainty
/// principle for entangled inputs.
pub fn partial_transpose(v: &CovarianceMatrix, mode: Mode) -> CovarianceMatrix {
    let mut flip = Matrix4::identity();
    flip[(mode.q_index(), mode.q_index())] = -1.0;
    CovarianceMatrix::symmetrized(flip * v.matrix() * flip)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PptVerdict {
    Entangled,
    Boundary,
    Separable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    /// Smallest symplectic eigenvalue of the partially transposed matrix.
    pub nu_min: f64,
    pub entangled: bool,
    pub verdict: PptVerdict,
}

impl PptReport {
    pub fn from_nu_min(nu_min: f64, tol_sep: f64) -> Self {
        let verdict = if nu_min < 1.0 - tol_sep {
            PptVerdict::Entangled
        } else if nu_min <= 1.0 + tol_sep {
            PptVerdict::Boundary
        } else {
            PptVerdict::Separable
        };
        PptReport {
            nu_min,
            entangled: verdict == PptVerdict::Entangled,
            verdict,
        }
    }
}

/// Smallest symplectic eigenvalue after transposing mode 2.
pub fn ppt_nu_min(v: &CovarianceMatrix) -> Result<f64> {
    Ok(partial_transpose(v, Mode::Two).symplectic_eigenvalues()?.0)
}

/// PPT test with the default separability band.
pub fn ppt_min_eigenvalue(v: &CovarianceMatrix) -> Result<PptReport> {
    ppt_test(v, DEFAULT_SEPARABILITY_TOL)
}

pub fn ppt_test(v: &CovarianceMatrix, tol_sep: f64) -> Result<PptReport> {
    Ok(PptReport::from_nu_min(ppt_nu_min(v)?, tol_sep))
}
