//! Two-mode Gaussian entangled beams in lossy channels.
//!
//! States are 4x4 covariance matrices in the `(p1, q1, p2, q2)` ordering,
//! normalized so the vacuum is the identity. The crate tests them for
//! entanglement (Duan sum, PPT), sends them through pure-loss channels and
//! sorts entangled states into those that survive any loss on one beam and
//! those that disentangle at a finite transmission.

pub mod channels;
pub mod cli;
pub mod criteria;
pub mod error;
pub mod esd;
pub mod ingest;
pub mod io;
pub mod state;

pub use channels::{attenuate, attenuate_both, ChannelSpec, LossTarget};
pub use criteria::{duan_sum, partial_transpose, ppt_min_eigenvalue, DuanReport, PptReport};
pub use error::{Error, Result};
pub use esd::{
    classify, classify_analytic, classify_oracle, critical_transmission, region_map,
    transmission_sweep, w_quantities, Classification, OracleOptions, Region, SweepCurve,
    WQuantities,
};
pub use ingest::{estimate_covariance, gaussianity_check, synthesize_record, QuadratureRecord};
pub use state::{embed, extract, CovarianceMatrix, Mode, SymplecticForm, TwinBeamVariances};
