#![allow(dead_code)]

use nalgebra::{Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twinbeam::{CovarianceMatrix, SymplecticForm, TwinBeamVariances};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generic eigensolve of `(Omega V)^2`, whose eigenvalues are `-nu_k^2`,
/// each twice. Returns `(nu_1, nu_2)`, ascending.
pub fn eigensolve_symplectic(v: &Matrix4<f64>) -> (f64, f64) {
    let ov = SymplecticForm::matrix() * v;
    let sq = ov * ov;
    let mut nus: Vec<f64> = sq
        .complex_eigenvalues()
        .iter()
        .map(|z| (-z.re).sqrt())
        .collect();
    nus.sort_by(f64::total_cmp);
    (0.5 * (nus[0] + nus[1]), 0.5 * (nus[2] + nus[3]))
}

/// Partial transposition of mode 2 written as an explicit conjugation.
pub fn transpose_mode_two(v: &Matrix4<f64>) -> Matrix4<f64> {
    let f = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
    f * v * f
}

/// Loss map written out entry by entry.
pub fn attenuate_by_hand(v: &Matrix4<f64>, t1: f64, t2: f64) -> Matrix4<f64> {
    let t = [t1, t1, t2, t2];
    Matrix4::from_fn(|i, j| {
        let scaled = t[i].sqrt() * t[j].sqrt() * v[(i, j)];
        if i == j {
            scaled + 1.0 - t[i]
        } else {
            scaled
        }
    })
}

fn block_diag(a: Matrix2<f64>, b: Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
    m
}

fn local_unimodular(rng: &mut ChaCha8Rng, max_squeeze: f64) -> Matrix2<f64> {
    let rot = |th: f64| Matrix2::new(th.cos(), th.sin(), -th.sin(), th.cos());
    let r = rng.random_range(-max_squeeze..max_squeeze);
    let sq = Matrix2::new((-r).exp(), 0.0, 0.0, r.exp());
    rot(rng.random_range(0.0..std::f64::consts::TAU)) * sq * rot(rng.random_range(0.0..std::f64::consts::TAU))
}

fn beamsplitter(theta: f64) -> Matrix4<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    #[rustfmt::skip]
    let m = Matrix4::new(
         c, 0.0,  s, 0.0,
        0.0,  c, 0.0,  s,
        -s, 0.0,  c, 0.0,
        0.0, -s, 0.0,  c,
    );
    m
}

fn two_mode_squeezer(r: f64) -> Matrix4<f64> {
    let (c, s) = (r.cosh(), r.sinh());
    #[rustfmt::skip]
    let m = Matrix4::new(
          c, 0.0,   s, 0.0,
        0.0,   c, 0.0,  -s,
          s, 0.0,   c, 0.0,
        0.0,  -s, 0.0,   c,
    );
    m
}

/// Random symplectic matrix built from local unimodular maps, a
/// beamsplitter and a two-mode squeezer.
pub fn random_symplectic(rng: &mut ChaCha8Rng, max_squeeze: f64) -> Matrix4<f64> {
    let l1 = block_diag(local_unimodular(rng, max_squeeze), local_unimodular(rng, max_squeeze));
    let l2 = block_diag(local_unimodular(rng, max_squeeze), local_unimodular(rng, max_squeeze));
    let bs = beamsplitter(rng.random_range(0.0..std::f64::consts::PI));
    let tms = two_mode_squeezer(rng.random_range(0.0..max_squeeze));
    let s = l1 * bs * tms * l2;
    debug_assert!(SymplecticForm::preserved_by(&s, 1e-9));
    s
}

/// Random physical two-mode covariance matrix with known symplectic
/// eigenvalues, returned ascending.
pub fn random_physical(rng: &mut ChaCha8Rng) -> (CovarianceMatrix, (f64, f64)) {
    let mut nu = [rng.random_range(1.0..3.0), rng.random_range(1.0..3.0)];
    if rng.random_bool(0.1) {
        nu[0] = 1.0;
    }
    nu.sort_by(f64::total_cmp);
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(nu[0], nu[0], nu[1], nu[1]));
    let s = random_symplectic(rng, 0.8);
    let v = CovarianceMatrix::new(s * d * s.transpose()).expect("congruence keeps V positive definite");
    (v, (nu[0], nu[1]))
}

/// Random physical, exchange-symmetric, cross-correlation free state.
/// About one in ten is pure.
pub fn random_twin_beam(rng: &mut ChaCha8Rng) -> TwinBeamVariances {
    let log_range = 1.2f64;
    let p_minus = rng.random_range(-log_range..log_range).exp();
    let q_plus = rng.random_range(-log_range..log_range).exp();
    let (f1, f2) = if rng.random_bool(0.1) {
        (1.0, 1.0)
    } else {
        (rng.random_range(1.0..4.0), rng.random_range(1.0..4.0))
    };
    TwinBeamVariances::new(p_minus, f1 / q_plus, q_plus, f2 / p_minus).unwrap()
}

/// Random physical twin-beam state squeezed (if at all) in `p-` and `q+`,
/// with the anti-squeezed combinations at or above the SQL.
pub fn random_epr_state(rng: &mut ChaCha8Rng) -> TwinBeamVariances {
    let log_range = 1.2f64;
    let p_minus = rng.random_range(-log_range..log_range).exp();
    let q_plus = rng.random_range(-log_range..log_range).exp();
    let (f1, f2) = if rng.random_bool(0.1) {
        (1.0, 1.0)
    } else {
        (rng.random_range(1.0..4.0), rng.random_range(1.0..4.0))
    };
    let p_plus = f1 * (1.0 / q_plus).max(1.0);
    let q_minus = f2 * (1.0 / p_minus).max(1.0);
    TwinBeamVariances::new(p_minus, p_plus, q_plus, q_minus).unwrap()
}

/// Critical transmission for loss on one beam of a twin-beam state, from
/// the exact reduction `det V~ - Delta~ + 1 = T (L + Q T)` of the PPT test.
/// `None` when the state never crosses.
pub fn critical_transmission_closed_form(v: &TwinBeamVariances) -> Option<f64> {
    let alpha = 0.5 * (v.p_plus + v.p_minus);
    let beta = 0.5 * (v.q_plus + v.q_minus);
    let gamma = 0.5 * (v.p_plus - v.p_minus);
    let delta = 0.5 * (v.q_plus - v.q_minus);
    let x = alpha * alpha - gamma * gamma - alpha;
    let y = beta * beta - delta * delta - beta;
    let l = alpha * y + beta * x - (alpha + beta - 2.0) + 2.0 * gamma * delta;
    let q = x * y - (alpha - 1.0) * (beta - 1.0);
    let root = -l / q;
    (l > 0.0 && root > 0.0 && root < 1.0).then_some(root)
}
