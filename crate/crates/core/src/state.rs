//! Two-mode covariance matrices and the symmetric twin-beam parameterization.
//!
//! Quadratures are ordered `(p1, q1, p2, q2)` everywhere, with `p` the
//! amplitude and `q` the phase quadrature of each beam. Variances are in
//! units of the standard quantum limit, so the vacuum covariance matrix is
//! the identity. The EPR combinations carry a `1/sqrt(2)`:
//! `p- = (p1 - p2)/sqrt(2)`, `q+ = (q1 + q2)/sqrt(2)` and so on, which makes
//! every vacuum EPR variance equal to 1 and the Duan bound equal to 2.

use nalgebra::{Cholesky, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for the uncertainty-principle check on analytic states.
pub const DEFAULT_PHYSICALITY_TOL: f64 = 1e-9;

/// Default tolerance used by [`extract`] when deciding whether a matrix is a
/// symmetric, cross-correlation free twin-beam state.
pub const DEFAULT_TWIN_BEAM_TOL: f64 = 1e-9;

const SYMMETRY_RTOL: f64 = 1e-12;

pub const P1: usize = 0;
pub const Q1: usize = 1;
pub const P2: usize = 2;
pub const Q2: usize = 3;

/// One of the two beams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn p_index(self) -> usize {
        match self {
            Mode::One => P1,
            Mode::Two => P2,
        }
    }

    pub fn q_index(self) -> usize {
        self.p_index() + 1
    }

    pub fn other(self) -> Mode {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }
}

/// The symplectic form `Omega = [[0, 1], [-1, 0]] (+) [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SymplecticForm;

impl SymplecticForm {
    pub fn matrix() -> Matrix4<f64> {
        #[rustfmt::skip]
        let omega = Matrix4::new(
             0.0, 1.0,  0.0, 0.0,
            -1.0, 0.0,  0.0, 0.0,
             0.0, 0.0,  0.0, 1.0,
             0.0, 0.0, -1.0, 0.0,
        );
        omega
    }

    /// Whether `s` preserves the form, `S Omega S^T = Omega`, entrywise to `tol`.
    pub fn preserved_by(s: &Matrix4<f64>, tol: f64) -> bool {
        let omega = Self::matrix();
        let residual = s * omega * s.transpose() - omega;
        residual.amax() <= tol
    }
}

/// Real symmetric, positive definite 4x4 second-moment matrix of two modes.
///
/// Construction enforces exact symmetry and positive definiteness. It does
/// not enforce the uncertainty principle: partially transposed matrices are
/// legitimate values of this type. Use [`CovarianceMatrix::is_physical`] for
/// that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix4<f64>);

impl CovarianceMatrix {
    /// Validates and stores `m`. Entries may differ from their transpose by
    /// rounding noise only; the stored matrix is the symmetric part.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        for row in 0..4 {
            for col in 0..4 {
                if !m[(row, col)].is_finite() {
                    return Err(Error::NonFiniteEntry { row, col });
                }
            }
        }
        let asymmetry = (m - m.transpose()).amax();
        if asymmetry > SYMMETRY_RTOL * m.amax().max(1.0) {
            return Err(Error::NotSymmetric {
                max_asymmetry: asymmetry,
            });
        }
        let v = Self::symmetrized(m);
        if Cholesky::new(v.0).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(v)
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(Matrix4::from_fn(|i, j| rows[i][j]))
    }

    /// Caller guarantees positive definiteness; symmetry is imposed.
    pub(crate) fn symmetrized(m: Matrix4<f64>) -> Self {
        CovarianceMatrix((m + m.transpose()) * 0.5)
    }

    pub fn vacuum() -> Self {
        CovarianceMatrix(Matrix4::identity())
    }

    /// Pure two-mode squeezed vacuum with squeezing parameter `r`, squeezed
    /// in `p-` and `q+` (both equal to `exp(-2r)`).
    pub fn two_mode_squeezed(r: f64) -> Self {
        let c = (2.0 * r).cosh();
        let s = (2.0 * r).sinh();
        let mut m = Matrix4::from_diagonal_element(c);
        m[(P1, P2)] = s;
        m[(P2, P1)] = s;
        m[(Q1, Q2)] = -s;
        m[(Q2, Q1)] = -s;
        CovarianceMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut rows = [[0.0; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[(i, j)];
            }
        }
        rows
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Local 2x2 block of `mode`.
    pub fn local_block(&self, mode: Mode) -> Matrix2<f64> {
        let k = mode.p_index();
        self.0.fixed_view::<2, 2>(k, k).into_owned()
    }

    /// Inter-mode correlation block `C` in `V = [[A, C], [C^T, B]]`.
    pub fn correlation_block(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(P1, P2).into_owned()
    }

    /// `S V S^T` for a real 4x4 `s`.
    pub fn congruence(&self, s: &Matrix4<f64>) -> Result<Self> {
        Self::new(s * self.0 * s.transpose())
    }

    /// Symplectic eigenvalues `(nu_1, nu_2)`, `nu_1 <= nu_2`.
    ///
    /// With `V = L L^T`, the matrix `Omega V` is similar to the antisymmetric
    /// `L^T Omega L`, whose singular values are `nu_1, nu_1, nu_2, nu_2`. This
    /// stays accurate when the two eigenvalues coincide (pure states), where
    /// [`symplectic_eigenvalues_closed_form`](Self::symplectic_eigenvalues_closed_form)
    /// only keeps half the digits.
    pub fn symplectic_eigenvalues(&self) -> Result<(f64, f64)> {
        let chol = Cholesky::new(self.0).ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let k = l.transpose() * SymplecticForm::matrix() * l;
        let mut s: Vec<f64> = k.singular_values().iter().copied().collect();
        s.sort_by(f64::total_cmp);
        Ok((0.5 * (s[0] + s[1]), 0.5 * (s[2] + s[3])))
    }

    /// Symplectic eigenvalues from the two-mode invariants:
    /// `nu^2 = (D -+ sqrt(D^2 - 4 det V)) / 2` with
    /// `D = det A + det B + 2 det C`.
    pub fn symplectic_eigenvalues_closed_form(&self) -> Result<(f64, f64)> {
        if Cholesky::new(self.0).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        let a = self.local_block(Mode::One);
        let b = self.local_block(Mode::Two);
        let c = self.correlation_block();
        let delta = a.determinant() + b.determinant() + 2.0 * c.determinant();
        let det = self.determinant();
        let disc = delta * delta - 4.0 * det;
        if disc < -1e-12 * (delta * delta).max(1.0) {
            return Err(Error::NegativeDiscriminant(disc));
        }
        let root = disc.max(0.0).sqrt();
        let large = 0.5 * (delta + root);
        // det = nu_1^2 nu_2^2; avoids cancellation in delta - root
        let small = det / large;
        Ok((small.sqrt(), large.sqrt()))
    }

    /// Positive definite with smallest symplectic eigenvalue `>= 1 - tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        match self.symplectic_eigenvalues() {
            Ok((nu_min, _)) => nu_min >= 1.0 - tol,
            Err(_) => false,
        }
    }

    /// Errors with the offending eigenvalue unless the state is physical.
    pub fn ensure_physical(&self, tol: f64) -> Result<()> {
        let (nu_min, _) = self.symplectic_eigenvalues()?;
        if nu_min < 1.0 - tol {
            return Err(Error::Unphysical { nu_min });
        }
        Ok(())
    }

    /// Gaussian purity `1 / sqrt(det V)`.
    pub fn purity(&self) -> f64 {
        1.0 / self.determinant().sqrt()
    }
}

/// The four EPR-combination variances of a state that is symmetric under
/// beam exchange and has no amplitude-phase correlations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinBeamVariances {
    pub p_minus: f64,
    pub p_plus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
}

impl TwinBeamVariances {
    /// Checks positivity only; physicality is checked by [`embed`].
    pub fn new(p_minus: f64, p_plus: f64, q_plus: f64, q_minus: f64) -> Result<Self> {
        let v = TwinBeamVariances {
            p_minus,
            p_plus,
            q_plus,
            q_minus,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn vacuum() -> Self {
        TwinBeamVariances {
            p_minus: 1.0,
            p_plus: 1.0,
            q_plus: 1.0,
            q_minus: 1.0,
        }
    }

    pub fn two_mode_squeezed(r: f64) -> Self {
        let sq = (-2.0 * r).exp();
        let anti = (2.0 * r).exp();
        TwinBeamVariances {
            p_minus: sq,
            p_plus: anti,
            q_plus: sq,
            q_minus: anti,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("p_minus", self.p_minus),
            ("p_plus", self.p_plus),
            ("q_plus", self.q_plus),
            ("q_minus", self.q_minus),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidVariance { name, value });
            }
        }
        Ok(())
    }

    /// The squared symplectic eigenvalues `{p- q-, p+ q+}` of the embedded
    /// matrix, smallest first.
    pub fn symplectic_squares(&self) -> (f64, f64) {
        let a = self.p_minus * self.q_minus;
        let b = self.p_plus * self.q_plus;
        (a.min(b), a.max(b))
    }

    /// Embedding without the uncertainty-principle check. Strictly positive
    /// variances always give a positive definite matrix.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        self.validate()?;
        let alpha = 0.5 * (self.p_plus + self.p_minus);
        let gamma = 0.5 * (self.p_plus - self.p_minus);
        let beta = 0.5 * (self.q_plus + self.q_minus);
        let delta = 0.5 * (self.q_plus - self.q_minus);
        let mut m = Matrix4::zeros();
        m[(P1, P1)] = alpha;
        m[(P2, P2)] = alpha;
        m[(P1, P2)] = gamma;
        m[(P2, P1)] = gamma;
        m[(Q1, Q1)] = beta;
        m[(Q2, Q2)] = beta;
        m[(Q1, Q2)] = delta;
        m[(Q2, Q1)] = delta;
        Ok(CovarianceMatrix(m))
    }
}

/// Covariance matrix of a symmetric, cross-correlation free state, rejecting
/// states that violate the uncertainty principle by more than the default
/// tolerance.
pub fn embed(v: &TwinBeamVariances) -> Result<CovarianceMatrix> {
    embed_with_tol(v, DEFAULT_PHYSICALITY_TOL)
}

pub fn embed_with_tol(v: &TwinBeamVariances, tol: f64) -> Result<CovarianceMatrix> {
    let cov = v.covariance()?;
    cov.ensure_physical(tol)?;
    Ok(cov)
}

/// Inverse of [`embed`] on the symmetric, cross-correlation free subspace.
pub fn extract(v: &CovarianceMatrix) -> Result<TwinBeamVariances> {
    extract_with_tol(v, DEFAULT_TWIN_BEAM_TOL)
}

pub fn extract_with_tol(v: &CovarianceMatrix, tol: f64) -> Result<TwinBeamVariances> {
    let cross = [(P1, Q1), (P1, Q2), (P2, Q1), (P2, Q2)]
        .into_iter()
        .map(|(i, j)| v.get(i, j).abs())
        .fold(0.0, f64::max);
    if cross > tol {
        return Err(Error::NotTwinBeam(format!(
            "cross-correlation present (max |V_pq| = {cross:e})"
        )));
    }
    let asym = (v.get(P1, P1) - v.get(P2, P2))
        .abs()
        .max((v.get(Q1, Q1) - v.get(Q2, Q2)).abs());
    if asym > tol {
        return Err(Error::NotTwinBeam(format!(
            "beams are not exchange symmetric (max diagonal mismatch = {asym:e})"
        )));
    }
    let alpha = 0.5 * (v.get(P1, P1) + v.get(P2, P2));
    let beta = 0.5 * (v.get(Q1, Q1) + v.get(Q2, Q2));
    let gamma = v.get(P1, P2);
    let delta = v.get(Q1, Q2);
    TwinBeamVariances::new(alpha - gamma, alpha + gamma, beta + delta, beta - delta)
}
