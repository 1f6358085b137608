//! Entanglement sudden death under channel loss.
//!
//! Two classifiers are provided. [`classify_analytic`] evaluates the closed
//! condition `0 < W_prod W̄_sum + W̄_prod W_sum < 1` on the EPR variances;
//! [`classify_oracle`] attenuates the state over a grid of transmissions and
//! watches the smallest partially transposed symplectic eigenvalue cross 1.
//! The oracle is the arbiter whenever the analytic condition is silent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{attenuate, ChannelSpec, LossTarget};
use crate::criteria::{ppt_nu_min, DEFAULT_SEPARABILITY_TOL};
use crate::error::{Error, Result};
use crate::state::{CovarianceMatrix, TwinBeamVariances, DEFAULT_PHYSICALITY_TOL};

pub const DEFAULT_SWEEP_POINTS: usize = 512;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-9;
/// `(p_plus, q_minus)` held fixed across the default region map.
pub const DEFAULT_FIXED_PAIR: (f64, f64) = (2.1, 2.05);
pub const DEFAULT_MAP_RANGE: (f64, f64) = (0.25, 2.25);
pub const DEFAULT_MAP_GRID: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WQuantities {
    /// `Var p- + Var q+ - 2`
    pub w_sum: f64,
    /// `Var p+ + Var q- - 2`
    pub w_sum_bar: f64,
    /// `Var p- * Var q+ - 1`
    pub w_prod: f64,
    /// `Var p+ * Var q- - 1`
    pub w_prod_bar: f64,
    /// `w_prod * w_sum_bar + w_prod_bar * w_sum`
    pub esd_quantity: f64,
}

pub fn w_quantities(v: &TwinBeamVariances) -> WQuantities {
    let w_sum = v.p_minus + v.q_plus - 2.0;
    let w_sum_bar = v.p_plus + v.q_minus - 2.0;
    let w_prod = v.p_minus * v.q_plus - 1.0;
    let w_prod_bar = v.p_plus * v.q_minus - 1.0;
    WQuantities {
        w_sum,
        w_sum_bar,
        w_prod,
        w_prod_bar,
        esd_quantity: w_prod * w_sum_bar + w_prod_bar * w_sum,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Unphysical,
    Separable,
    RobustEntangled,
    FragileEntangled,
    /// Entangled, but the analytic condition does not decide (`esd_quantity >= 1`).
    AnalyticIndeterminate,
}

impl Region {
    /// Region code used in map files: 0 unphysical, 1 separable, 2 fragile,
    /// 3 robust. Indeterminate cells never reach a file.
    pub fn code(self) -> i8 {
        match self {
            Region::Unphysical => 0,
            Region::Separable => 1,
            Region::FragileEntangled => 2,
            Region::RobustEntangled => 3,
            Region::AnalyticIndeterminate => -1,
        }
    }

    pub fn is_entangled(self) -> bool {
        matches!(
            self,
            Region::RobustEntangled | Region::FragileEntangled | Region::AnalyticIndeterminate
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decider {
    Analytic,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub region: Region,
    pub decided_by: Decider,
    /// Partially transposed `nu_min` at unit transmission.
    pub nu_min: f64,
    pub witnesses: Option<WQuantities>,
    pub critical_transmission: Option<f64>,
}

/// Classification from the EPR variances alone.
///
/// The witnesses are written for states squeezed in `p-` and `q+`. A state
/// squeezed in `p+` and `q-` instead is the same state up to a rotation of
/// beam 2 by pi, which swaps barred and unbarred quantities; `esd_quantity`
/// is invariant under that swap, so only the entanglement test looks at both
/// products.
pub fn classify_analytic(v: &TwinBeamVariances) -> Result<Classification> {
    v.validate()?;
    let (nu_sq_min, _) = v.symplectic_squares();
    if nu_sq_min < 1.0 - DEFAULT_PHYSICALITY_TOL {
        return Err(Error::Unphysical {
            nu_min: nu_sq_min.sqrt(),
        });
    }
    let w = w_quantities(v);
    let nu_min = (v.p_minus * v.q_plus).min(v.p_plus * v.q_minus).sqrt();
    let region = if w.w_prod.min(w.w_prod_bar) >= 0.0 {
        Region::Separable
    } else if w.esd_quantity <= 0.0 {
        Region::RobustEntangled
    } else if w.esd_quantity < 1.0 {
        Region::FragileEntangled
    } else {
        Region::AnalyticIndeterminate
    };
    Ok(Classification {
        region,
        decided_by: Decider::Analytic,
        nu_min,
        witnesses: Some(w),
        critical_transmission: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    /// `T_k = (n - k) / n`
    Uniform,
    /// `T_k = ((n - k) / n)^2`, denser towards `T = 0`.
    Graded,
}

/// `n` transmissions, strictly decreasing from 1, all positive.
pub fn transmission_grid(n: usize, spacing: GridSpacing) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 transmission points, got {n}"
        )));
    }
    let nf = n as f64;
    Ok((0..n)
        .map(|k| {
            let u = (n - k) as f64 / nf;
            match spacing {
                GridSpacing::Uniform => u,
                GridSpacing::Graded => u * u,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub grid_points: usize,
    pub spacing: GridSpacing,
    pub target: LossTarget,
    /// Half-width of the band around 1 treated as not entangled at `T = 1`.
    pub tol_sep: f64,
    pub physicality_tol: f64,
    pub bisection_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            grid_points: DEFAULT_SWEEP_POINTS,
            spacing: GridSpacing::Graded,
            target: LossTarget::One,
            tol_sep: DEFAULT_SEPARABILITY_TOL,
            physicality_tol: DEFAULT_PHYSICALITY_TOL,
            bisection_tol: DEFAULT_BISECTION_TOL,
        }
    }
}

impl OracleOptions {
    pub fn with_target(self, target: LossTarget) -> Self {
        OracleOptions { target, ..self }
    }
}

/// Partially transposed `nu_min` after loss `t` on `target`.
pub fn nu_min_at(v: &CovarianceMatrix, target: LossTarget, t: f64) -> Result<f64> {
    ppt_nu_min(&attenuate(v, &ChannelSpec::on(target, t)?)?)
}

/// Ground-truth classification by brute-force attenuation.
pub fn classify_oracle(v: &CovarianceMatrix, opts: &OracleOptions) -> Result<Classification> {
    v.ensure_physical(opts.physicality_tol)?;
    let nu_min = nu_min_at(v, opts.target, 1.0)?;
    let witnesses = crate::state::extract(v).ok().map(|tb| w_quantities(&tb));
    let mut out = Classification {
        region: Region::Separable,
        decided_by: Decider::Oracle,
        nu_min,
        witnesses,
        critical_transmission: None,
    };
    if nu_min >= 1.0 - opts.tol_sep {
        return Ok(out);
    }
    let grid = transmission_grid(opts.grid_points, opts.spacing)?;
    let curve = grid
        .par_iter()
        .map(|&t| nu_min_at(v, opts.target, t))
        .collect::<Result<Vec<f64>>>()?;
    match first_crossing(&grid, &curve) {
        Some((above, below)) => {
            let root = bisect_crossing(v, opts.target, above, below, opts.bisection_tol)?;
            out.region = Region::FragileEntangled;
            out.critical_transmission = Some(root);
        }
        None => out.region = Region::RobustEntangled,
    }
    Ok(out)
}

/// First grid interval (walking down from `T = 1`) where `nu_min` reaches 1.
/// Returns `(t_separable, t_entangled)`.
fn first_crossing(grid: &[f64], curve: &[f64]) -> Option<(f64, f64)> {
    (1..grid.len())
        .find(|&k| curve[k] >= 1.0 && curve[k - 1] < 1.0)
        .map(|k| (grid[k], grid[k - 1]))
}

fn bisect_crossing(
    v: &CovarianceMatrix,
    target: LossTarget,
    mut separable: f64,
    mut entangled: f64,
    tol: f64,
) -> Result<f64> {
    while (entangled - separable).abs() > tol {
        let mid = 0.5 * (separable + entangled);
        if nu_min_at(v, target, mid)? >= 1.0 {
            separable = mid;
        } else {
            entangled = mid;
        }
    }
    Ok(0.5 * (separable + entangled))
}

/// Transmission at which an entangled state loses entanglement, or `None`
/// if it stays entangled for every sampled `T > 0`.
pub fn critical_transmission(v: &CovarianceMatrix, target: LossTarget) -> Result<Option<f64>> {
    critical_transmission_with(v, &OracleOptions::default().with_target(target))
}

pub fn critical_transmission_with(
    v: &CovarianceMatrix,
    opts: &OracleOptions,
) -> Result<Option<f64>> {
    let nu_min = nu_min_at(v, opts.target, 1.0)?;
    if nu_min >= 1.0 {
        return Err(Error::NotEntangled { nu_min });
    }
    Ok(classify_oracle(v, opts)?.critical_transmission)
}

/// Analytic classification with oracle arbitration of indeterminate states.
pub fn classify(v: &TwinBeamVariances, opts: &OracleOptions) -> Result<Classification> {
    let mut analytic = classify_analytic(v)?;
    if analytic.region == Region::FragileEntangled {
        analytic.critical_transmission = critical_transmission_with(&v.covariance()?, opts)?;
    }
    if analytic.region != Region::AnalyticIndeterminate {
        return Ok(analytic);
    }
    let mut decided = classify_oracle(&v.covariance()?, opts)?;
    decided.witnesses = analytic.witnesses;
    Ok(decided)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: f64,
    pub nu_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub target: LossTarget,
    pub spacing: GridSpacing,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    /// Number of grid intervals on which `nu_min - 1` changes sign.
    pub fn crossings(&self) -> usize {
        self.points
            .windows(2)
            .filter(|w| (w[0].nu_min < 1.0) != (w[1].nu_min < 1.0))
            .count()
    }
}

/// `nu_min` on a uniform grid from `T = 1` down to `T = 1/n`.
pub fn transmission_sweep(
    v: &CovarianceMatrix,
    target: LossTarget,
    n_points: usize,
) -> Result<SweepCurve> {
    sweep_with_spacing(v, target, n_points, GridSpacing::Uniform)
}

pub fn sweep_with_spacing(
    v: &CovarianceMatrix,
    target: LossTarget,
    n_points: usize,
    spacing: GridSpacing,
) -> Result<SweepCurve> {
    let grid = transmission_grid(n_points, spacing)?;
    let points = grid
        .par_iter()
        .map(|&t| Ok(SweepPoint { t, nu_min: nu_min_at(v, target, t)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        target,
        spacing,
        points,
    })
}

/// How the two variances not on the map axes are chosen per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPair {
    Constant { p_plus: f64, q_minus: f64 },
    /// `p_plus = 1 / q_plus`, `q_minus = 1 / p_minus`: every physical cell is pure.
    MinimumUncertainty,
}

impl Default for FixedPair {
    fn default() -> Self {
        FixedPair::Constant {
            p_plus: DEFAULT_FIXED_PAIR.0,
            q_minus: DEFAULT_FIXED_PAIR.1,
        }
    }
}

impl FixedPair {
    pub fn variances(&self, p_minus: f64, q_plus: f64) -> TwinBeamVariances {
        let (p_plus, q_minus) = match *self {
            FixedPair::Constant { p_plus, q_minus } => (p_plus, q_minus),
            FixedPair::MinimumUncertainty => (1.0 / q_plus, 1.0 / p_minus),
        };
        TwinBeamVariances {
            p_minus,
            p_plus,
            q_plus,
            q_minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Axis { lo, hi, n }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n - 1) as f64
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.n >= 1
            && self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo > 0.0
            && self.hi >= self.lo;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!(
                "{name} axis needs 0 < lo <= hi and n >= 1, got [{}, {}] x {}",
                self.lo, self.hi, self.n
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub p_minus: f64,
    pub q_plus: f64,
    pub region: Region,
    pub decided_by: Decider,
    /// Cell lies below the Duan line `p_minus + q_plus = 2`.
    pub duan_violated: bool,
    pub nu_min: Option<f64>,
    pub esd_quantity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub p_minus_axis: Axis,
    pub q_plus_axis: Axis,
    pub fixed: FixedPair,
    /// Row-major: `cells[i * q_plus_axis.n + j]` has `p_minus_axis.value(i)`
    /// and `q_plus_axis.value(j)`.
    pub cells: Vec<RegionCell>,
}

impl RegionMap {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i * self.q_plus_axis.n + j]
    }

    pub fn count(&self, region: Region) -> usize {
        self.cells.iter().filter(|c| c.region == region).count()
    }
}

/// Classifies the `(p_minus, q_plus)` plane.
pub fn region_map(
    p_minus_axis: Axis,
    q_plus_axis: Axis,
    fixed: FixedPair,
    opts: &OracleOptions,
) -> Result<RegionMap> {
    p_minus_axis.validate("p_minus")?;
    q_plus_axis.validate("q_plus")?;
    if let FixedPair::Constant { p_plus, q_minus } = fixed {
        TwinBeamVariances::new(1.0, p_plus, 1.0, q_minus)?;
    }
    let nq = q_plus_axis.n;
    let cells = (0..p_minus_axis.n * nq)
        .into_par_iter()
        .map(|idx| {
            let p_minus = p_minus_axis.value(idx / nq);
            let q_plus = q_plus_axis.value(idx % nq);
            classify_cell(p_minus, q_plus, fixed, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    if cells.iter().all(|c| c.region == Region::Unphysical) {
        return Err(Error::NoPhysicalCells);
    }
    Ok(RegionMap {
        p_minus_axis,
        q_plus_axis,
        fixed,
        cells,
    })
}

fn classify_cell(
    p_minus: f64,
    q_plus: f64,
    fixed: FixedPair,
    opts: &OracleOptions,
) -> Result<RegionCell> {
    let v = fixed.variances(p_minus, q_plus);
    let mut cell = RegionCell {
        p_minus,
        q_plus,
        region: Region::Unphysical,
        decided_by: Decider::Analytic,
        duan_violated: p_minus + q_plus < 2.0,
        nu_min: None,
        esd_quantity: None,
    };
    match classify(&v, opts) {
        Ok(c) => {
            cell.region = c.region;
            cell.decided_by = c.decided_by;
            cell.nu_min = Some(c.nu_min);
            cell.esd_quantity = c.witnesses.map(|w| w.esd_quantity);
        }
        Err(Error::Unphysical { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::embed;

    fn tb(a: f64, b: f64, c: f64, d: f64) -> TwinBeamVariances {
        TwinBeamVariances::new(a, b, c, d).unwrap()
    }

    #[test]
    fn w_quantities_examples() {
        let w = w_quantities(&TwinBeamVariances::vacuum());
        assert_eq!(
            (w.w_sum, w.w_sum_bar, w.w_prod, w.w_prod_bar, w.esd_quantity),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );

        let w = w_quantities(&tb(0.5, 2.1, 1.7, 2.05));
        assert!((w.w_sum - 0.2).abs() < 1e-14);
        assert!((w.w_sum_bar - 2.15).abs() < 1e-14);
        assert!((w.w_prod + 0.15).abs() < 1e-14);
        assert!((w.w_prod_bar - 3.305).abs() < 1e-14);
        assert!((w.esd_quantity - 0.3385).abs() < 1e-12);

        let w = w_quantities(&tb(0.5, 3.0, 0.5, 3.0));
        assert_eq!((w.w_sum, w.w_prod, w.w_sum_bar, w.w_prod_bar), (-1.0, -0.75, 4.0, 8.0));
        assert_eq!(w.esd_quantity, -11.0);
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(
            classify_analytic(&tb(1.2, 1.2, 1.0, 1.0)).unwrap().region,
            Region::Separable
        );
        assert_eq!(
            classify_analytic(&tb(0.5, 2.1, 1.7, 2.05)).unwrap().region,
            Region::FragileEntangled
        );
        assert_eq!(
            classify_analytic(&tb(0.5, 3.0, 0.5, 3.0)).unwrap().region,
            Region::RobustEntangled
        );
        assert!(matches!(
            classify_analytic(&tb(0.5, 1.0, 1.7, 1.0)),
            Err(Error::Unphysical { .. })
        ));
    }

    #[test]
    fn rotated_squeezing_is_still_entangled() {
        // squeezed in p+ and q- : the pi-rotated copy of the fragile example
        let swapped = tb(2.1, 0.5, 2.05, 1.7);
        let c = classify_analytic(&swapped).unwrap();
        assert_eq!(c.region, Region::FragileEntangled);
        let oracle = classify_oracle(&embed(&swapped).unwrap(), &OracleOptions::default()).unwrap();
        assert_eq!(oracle.region, Region::FragileEntangled);
    }

    #[test]
    fn indeterminate_cells_go_to_the_oracle() {
        // esd_quantity = 4.38 * 1.95 - 7.1075 > 1 while still entangled
        let v = tb(0.5, 2.1, 1.95, 2.05);
        assert_eq!(classify_analytic(&v).unwrap().region, Region::AnalyticIndeterminate);
        let c = classify(&v, &OracleOptions::default()).unwrap();
        assert_eq!(c.decided_by, Decider::Oracle);
        assert_eq!(c.region, Region::FragileEntangled);
        assert!(c.witnesses.is_some());
    }

    #[test]
    fn oracle_examples() {
        let opts = OracleOptions::default();
        let vac = classify_oracle(&CovarianceMatrix::vacuum(), &opts).unwrap();
        assert_eq!(vac.region, Region::Separable);

        let fragile = embed(&tb(0.5, 2.1, 1.7, 2.05)).unwrap();
        let c = classify_oracle(&fragile, &opts).unwrap();
        assert_eq!(c.region, Region::FragileEntangled);
        let t_star = c.critical_transmission.unwrap();
        assert!(t_star > 0.1 && t_star < 0.5);
        assert!(nu_min_at(&fragile, LossTarget::One, 0.5).unwrap() < 1.0);
        assert!(nu_min_at(&fragile, LossTarget::One, 0.1).unwrap() > 1.0);

        let tmsv = CovarianceMatrix::two_mode_squeezed(0.5);
        assert_eq!(classify_oracle(&tmsv, &opts).unwrap().region, Region::RobustEntangled);
    }

    #[test]
    fn critical_transmission_examples() {
        let tmsv = CovarianceMatrix::two_mode_squeezed(0.5);
        assert_eq!(critical_transmission(&tmsv, LossTarget::One).unwrap(), None);
        let duan = embed(&tb(0.5, 3.0, 0.5, 3.0)).unwrap();
        assert_eq!(critical_transmission(&duan, LossTarget::Both).unwrap(), None);
        assert!(matches!(
            critical_transmission(&CovarianceMatrix::vacuum(), LossTarget::One),
            Err(Error::NotEntangled { .. })
        ));
    }

    #[test]
    fn grids() {
        let g = transmission_grid(4, GridSpacing::Uniform).unwrap();
        assert_eq!(g, vec![1.0, 0.75, 0.5, 0.25]);
        let g = transmission_grid(4, GridSpacing::Graded).unwrap();
        assert_eq!(g, vec![1.0, 0.5625, 0.25, 0.0625]);
        assert!(transmission_grid(1, GridSpacing::Uniform).is_err());
    }

    #[test]
    fn sweep_of_vacuum_is_flat() {
        let curve = transmission_sweep(&CovarianceMatrix::vacuum(), LossTarget::One, 16).unwrap();
        assert_eq!(curve.points.len(), 16);
        assert!(curve.points.iter().all(|p| (p.nu_min - 1.0).abs() < 1e-14));
    }

    #[test]
    fn region_map_rejects_empty_and_bad_axes() {
        let opts = OracleOptions::default();
        let tiny = Axis::new(0.1, 0.2, 3);
        assert!(matches!(
            region_map(tiny, tiny, FixedPair::default(), &opts),
            Err(Error::NoPhysicalCells)
        ));
        assert!(matches!(
            region_map(Axis::new(-1.0, 1.0, 3), tiny, FixedPair::default(), &opts),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn single_cell_map() {
        let a = Axis::new(1.5, 1.5, 1);
        let map = region_map(a, a, FixedPair::default(), &OracleOptions::default()).unwrap();
        assert_eq!(map.cells.len(), 1);
        assert_eq!(map.cells[0].region, Region::Separable);
        assert!(!map.cells[0].duan_violated);
    }
}
