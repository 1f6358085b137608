//! Pure-loss channels: each beam is mixed with vacuum on a beamsplitter of
//! power transmission `t`, `V -> X V X^T + Y` with
//! `X = diag(sqrt t1, sqrt t1, sqrt t2, sqrt t2)` and
//! `Y = diag(1 - t1, 1 - t1, 1 - t2, 1 - t2)`.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{CovarianceMatrix, TwinBeamVariances};

/// Power transmissions of the two beams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub t1: f64,
    pub t2: f64,
}

impl ChannelSpec {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        let spec = ChannelSpec { t1, t2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn symmetric(t: f64) -> Result<Self> {
        Self::new(t, t)
    }

    pub fn identity() -> Self {
        ChannelSpec { t1: 1.0, t2: 1.0 }
    }

    /// Loss on the beams selected by `target`, identity on the rest.
    pub fn on(target: LossTarget, t: f64) -> Result<Self> {
        match target {
            LossTarget::One => Self::new(t, 1.0),
            LossTarget::Two => Self::new(1.0, t),
            LossTarget::Both => Self::new(t, t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for t in [self.t1, self.t2] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidTransmission(t));
            }
        }
        Ok(())
    }

    /// Channel equivalent to `self` followed by `next`.
    pub fn then(&self, next: &ChannelSpec) -> ChannelSpec {
        ChannelSpec {
            t1: self.t1 * next.t1,
            t2: self.t2 * next.t2,
        }
    }
}

/// Which beam(s) travel through the lossy channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTarget {
    One,
    Two,
    Both,
}

pub fn attenuate(v: &CovarianceMatrix, spec: &ChannelSpec) -> Result<CovarianceMatrix> {
    spec.validate()?;
    let (s1, s2) = (spec.t1.sqrt(), spec.t2.sqrt());
    let x = Matrix4::from_diagonal(&nalgebra::Vector4::new(s1, s1, s2, s2));
    let y = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        1.0 - spec.t1,
        1.0 - spec.t1,
        1.0 - spec.t2,
        1.0 - spec.t2,
    ));
    Ok(CovarianceMatrix::symmetrized(x * v.matrix() * x + y))
}

/// Same loss `t` on both beams.
pub fn attenuate_both(v: &CovarianceMatrix, t: f64) -> Result<CovarianceMatrix> {
    attenuate(v, &ChannelSpec::symmetric(t)?)
}

/// Closed-form Duan sum after identical loss on both beams:
/// `T (Var p- + Var q+) + 2 (1 - T)`.
pub fn duan_after_symmetric_loss(v: &TwinBeamVariances, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidTransmission(t));
    }
    Ok(t * (v.p_minus + v.q_plus) + 2.0 * (1.0 - t))
}

/// Extra loss on the better-transmitted beam so that a state which went
/// through `spec` ends up as if both beams saw `min(t1, t2)`.
pub fn rebalancing_channel(spec: &ChannelSpec) -> Result<ChannelSpec> {
    spec.validate()?;
    if spec.t1 == spec.t2 {
        return Err(Error::BalancedChannel(spec.t1));
    }
    let t = spec.t1.min(spec.t2);
    // t1 != t2 so the larger one is strictly positive
    if spec.t1 > spec.t2 {
        ChannelSpec::new(t / spec.t1, 1.0)
    } else {
        ChannelSpec::new(1.0, t / spec.t2)
    }
}

/// Applies [`rebalancing_channel`] to a state already attenuated by `spec`.
pub fn rebalance(v: &CovarianceMatrix, spec: &ChannelSpec) -> Result<CovarianceMatrix> {
    attenuate(v, &rebalancing_channel(spec)?)
}
