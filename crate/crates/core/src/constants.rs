//! Wall constants of the second-order problem.
//!
//! * α = (2/3^{3/4}) inf Φ over profiles on (0, 1) clamped to -1 and +1.
//! * β(t) = (4/3^{3/4}) inf Φ over profiles on (0, 1) with u(0) = -1,
//!   u'(0) = 0, u(1) = t and u'(1) free; equivalently inf Ψ over half-line
//!   profiles that sit at -1 far to the left and end at t.
//! * c = inf ∫ W(u) + |u''|² over whole-line transitions from -1 to +1.
//! * 8/3 = 2∫₋₁¹ √W, the first-order constant, as a sanity anchor.
//!
//! Half-line and whole-line problems are truncated to `[-L, 0]` and `[-L, L]`
//! with clamped outer ends.

use rayon::prelude::*;

use crate::energy::Functional;
use crate::error::{Error, Result};
use crate::optimize::{
    boundary_layer, middle_ramp, multistart, ramp_on, smoothstep, OptResult, OptimizerConfig,
};
use crate::profile::{BoundarySpec, Grid, HermiteProfile};

/// 4 / 3^{3/4}: the AM–GM constant linking Φ and Ψ.
pub fn amgm_factor() -> f64 {
    4.0 / 3f64.powf(0.75)
}

/// The rescale length L = (3C/P)^{1/4} minimizing L·P + L⁻³·C.
pub fn optimal_stretch(potential: f64, curvature: f64) -> f64 {
    (3.0 * curvature / potential).powf(0.25)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsConfig {
    /// Cells on the unit interval for Φ problems.
    pub unit_cells: usize,
    /// Cells per unit length on truncated half-line and whole-line domains.
    pub cells_per_unit: usize,
    pub l_max: f64,
    pub opt: OptimizerConfig,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig {
            unit_cells: 512,
            cells_per_unit: 64,
            l_max: 12.0,
            opt: OptimizerConfig::default(),
        }
    }
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unit_cells == 0 || self.cells_per_unit == 0 {
            return Err(Error::arg("cell counts must be positive"));
        }
        if !(self.l_max > 0.0 && self.l_max.is_finite()) {
            return Err(Error::arg(format!("L_max must be positive, got {}", self.l_max)));
        }
        self.opt.validate()
    }

    fn cells_for(&self, len: f64) -> usize {
        ((len * self.cells_per_unit as f64).round() as usize).max(1)
    }
}

/// A constant together with the optimization that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct WallConstant {
    pub value: f64,
    pub result: OptResult,
}

impl WallConstant {
    pub fn minimizer(&self) -> &HermiteProfile {
        &self.result.profile
    }
}

/// α from multistart minimization of Φ over the clamped family on (0, 1).
pub fn compute_alpha(cfg: &ConstantsConfig) -> Result<WallConstant> {
    cfg.validate()?;
    let grid = Grid::unit(cfg.unit_cells)?;
    let bc = BoundarySpec::clamped(-1.0, 1.0);
    let inits = vec![
        middle_ramp(grid, -1.0, 1.0),
        smoothstep(grid, -1.0, 1.0),
        ramp_on(grid, -1.0, 1.0, 0.4, 0.6),
    ];
    let r = multistart(Functional::Phi, &bc, &inits, &cfg.opt)?;
    Ok(WallConstant {
        value: 0.5 * amgm_factor() * r.energy,
        result: r,
    })
}

/// Which characterisation of β to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaRoute {
    Phi,
    Psi,
    Both,
}

impl BetaRoute {
    fn phi(self) -> bool {
        matches!(self, BetaRoute::Phi | BetaRoute::Both)
    }

    fn psi(self) -> bool {
        matches!(self, BetaRoute::Psi | BetaRoute::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaPoint {
    pub t: f64,
    pub beta_phi: Option<f64>,
    pub beta_psi: Option<f64>,
    pub l_max: f64,
    /// Every solve ended before its iteration budget.
    pub converged: bool,
    pub phi_profile: Option<HermiteProfile>,
    pub psi_profile: Option<HermiteProfile>,
}

impl BetaPoint {
    /// |β_Φ - β_Ψ| / max(β_Ψ, 1e-12), when both routes ran.
    pub fn route_gap(&self) -> Option<f64> {
        Some((self.beta_phi? - self.beta_psi?).abs() / self.beta_psi?.max(1e-12))
    }

    /// Preferred single value: the Ψ route when available.
    pub fn value(&self) -> Option<f64> {
        self.beta_psi.or(self.beta_phi)
    }

    pub const CSV_HEADER: &'static str = "t,beta_phi,beta_psi,L_max,converged";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
        format!(
            "{},{},{},{},{}",
            self.t,
            opt(self.beta_phi),
            opt(self.beta_psi),
            self.l_max,
            self.converged
        )
    }
}

/// β(t) by the requested route(s).
pub fn compute_beta(t: f64, route: BetaRoute, cfg: &ConstantsConfig) -> Result<BetaPoint> {
    compute_beta_from(t, route, cfg, None)
}

/// Half-line grid `[-L, 0]` at the configured density.
pub fn half_line_grid(l_max: f64, cfg: &ConstantsConfig) -> Result<Grid> {
    Grid::new(-l_max, 0.0, cfg.cells_for(l_max))
}

/// Like [`compute_beta`], adding the minimizers of `warm` (with their right
/// value moved to `t`) to the starting profiles.
pub fn compute_beta_from(
    t: f64,
    route: BetaRoute,
    cfg: &ConstantsConfig,
    warm: Option<&BetaPoint>,
) -> Result<BetaPoint> {
    cfg.validate()?;
    if !t.is_finite() {
        return Err(Error::arg("t must be finite"));
    }
    let bc = BoundarySpec::left_clamped(-1.0, t);
    if t == -1.0 {
        let zero = |g: Grid| HermiteProfile::constant(g, -1.0);
        return Ok(BetaPoint {
            t,
            beta_phi: route.phi().then_some(0.0),
            beta_psi: route.psi().then_some(0.0),
            l_max: cfg.l_max,
            converged: true,
            phi_profile: route.phi().then(|| zero(Grid::unit(cfg.unit_cells).unwrap())),
            psi_profile: route.psi().then(|| zero(half_line_grid(cfg.l_max, cfg).unwrap())),
        });
    }
    let warm_start = |p: Option<&HermiteProfile>, grid: Grid| {
        p.filter(|p| *p.grid() == grid).map(|p| {
            let mut p = p.clone();
            bc.apply(&mut p);
            p
        })
    };

    let phi_run = || -> Result<Option<OptResult>> {
        if !route.phi() {
            return Ok(None);
        }
        let grid = Grid::unit(cfg.unit_cells)?;
        let mut inits: Vec<HermiteProfile> =
            warm_start(warm.and_then(|w| w.phi_profile.as_ref()), grid).into_iter().collect();
        inits.extend([
            boundary_layer(grid, -1.0, t, 0.5),
            smoothstep(grid, -1.0, t),
            boundary_layer(grid, -1.0, t, 0.25),
        ]);
        multistart(Functional::Phi, &bc, &inits, &cfg.opt).map(Some)
    };
    let psi_run = || -> Result<Option<OptResult>> {
        if !route.psi() {
            return Ok(None);
        }
        let grid = half_line_grid(cfg.l_max, cfg)?;
        let frac = |w: f64| (w / cfg.l_max).min(1.0);
        let mut inits: Vec<HermiteProfile> =
            warm_start(warm.and_then(|w| w.psi_profile.as_ref()), grid).into_iter().collect();
        inits.extend([
            boundary_layer(grid, -1.0, t, frac(3.0)),
            boundary_layer(grid, -1.0, t, frac(6.0)),
            smoothstep(grid, -1.0, t),
        ]);
        multistart(Functional::Psi, &bc, &inits, &cfg.opt).map(Some)
    };
    let (phi, psi) = if cfg.opt.parallel {
        rayon::join(phi_run, psi_run)
    } else {
        (phi_run(), psi_run())
    };
    let (phi, psi) = (phi?, psi?);
    let converged = phi.iter().chain(&psi).all(|r| r.settled());
    let beta_phi = phi.as_ref().map(|r| amgm_factor() * r.energy);
    let beta_psi = psi.as_ref().map(|r| r.energy);
    let phi_profile = phi.map(|r| r.profile);
    let psi_profile = psi.map(|r| r.profile);
    Ok(BetaPoint {
        t,
        beta_phi,
        beta_psi,
        l_max: cfg.l_max,
        converged,
        phi_profile,
        psi_profile,
    })
}

/// One row of a β curve; failures are kept per row.
#[derive(Debug)]
pub struct BetaCurveRow {
    pub t: f64,
    pub point: Result<BetaPoint>,
}

impl BetaCurveRow {
    pub fn csv_row(&self, l_max: f64) -> String {
        match &self.point {
            Ok(p) => p.csv_row(),
            Err(_) => format!("{},nan,nan,{},false", self.t, l_max),
        }
    }
}

/// β on a uniform t-grid. With `warm_start` each solve also starts from the
/// previous minimizer, which makes the sweep sequential; without it the
/// points run in parallel.
pub fn beta_curve(
    t_min: f64,
    t_max: f64,
    steps: usize,
    route: BetaRoute,
    cfg: &ConstantsConfig,
    warm_start: bool,
) -> Result<Vec<BetaCurveRow>> {
    if steps < 2 {
        return Err(Error::arg("a beta curve needs at least 2 points"));
    }
    if !(t_min < t_max) {
        return Err(Error::arg(format!("need t_min < t_max, got {t_min} and {t_max}")));
    }
    cfg.validate()?;
    let ts: Vec<f64> = (0..steps)
        .map(|i| {
            if i == steps - 1 {
                t_max
            } else {
                t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64
            }
        })
        .map(snap_minus_one)
        .collect();
    if warm_start {
        let mut rows: Vec<BetaCurveRow> = Vec::with_capacity(steps);
        let mut last: Option<BetaPoint> = None;
        for &t in &ts {
            let point = compute_beta_from(t, route, cfg, last.as_ref());
            if let Ok(p) = &point {
                // the constant profile at t = -1 carries no shape worth reusing
                if t != -1.0 {
                    last = Some(p.clone());
                }
            }
            rows.push(BetaCurveRow { t, point });
        }
        Ok(rows)
    } else {
        Ok(ts
            .par_iter()
            .map(|&t| BetaCurveRow {
                t,
                point: compute_beta(t, route, cfg),
            })
            .collect())
    }
}

/// Grid points within roundoff of -1 are mapped to -1 exactly.
fn snap_minus_one(t: f64) -> f64 {
    if (t + 1.0).abs() < 1e-12 {
        -1.0
    } else {
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmConstant {
    /// Value on `[-L, L]`.
    pub value: f64,
    /// Value on `[-L/2, L/2]`, exposing truncation error.
    pub value_half: f64,
    pub result: OptResult,
}

/// c = min ∫ (u² - 1)² + |u''|² over `[-L, L]`, clamped to ∓1 at ∓L.
pub fn compute_fm_constant(cfg: &ConstantsConfig) -> Result<FmConstant> {
    cfg.validate()?;
    let full = whole_line_psi(cfg.l_max, cfg)?;
    let half = whole_line_psi(0.5 * cfg.l_max, cfg)?;
    Ok(FmConstant {
        value: full.energy,
        value_half: half.energy,
        result: full,
    })
}

fn whole_line_psi(l: f64, cfg: &ConstantsConfig) -> Result<OptResult> {
    let grid = Grid::new(-l, l, cfg.cells_for(2.0 * l))?;
    let bc = BoundarySpec::clamped(-1.0, 1.0);
    let frac = (3.0 / l).min(0.5);
    let inits = vec![
        ramp_on(grid, -1.0, 1.0, 0.5 - frac, 0.5 + frac),
        smoothstep(grid, -1.0, 1.0),
        middle_ramp(grid, -1.0, 1.0),
    ];
    multistart(Functional::Psi, &bc, &inits, &cfg.opt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderConstant {
    pub value: f64,
    pub result: OptResult,
}

impl FirstOrderConstant {
    /// max |u(x) - tanh(x)| over nodes in [-3, 3].
    pub fn tanh_sup_error(&self) -> f64 {
        let p = &self.result.profile;
        p.grid()
            .nodes()
            .zip(p.values())
            .filter(|(x, _)| x.abs() <= 3.0)
            .map(|(x, u)| (u - x.tanh()).abs())
            .fold(0.0, f64::max)
    }
}

/// min ∫ (u² - 1)² + |u'|² over `[-L, L]` with u(∓L) = ∓1, on `n_cells` cells.
pub fn first_order_constant(l_max: f64, n_cells: usize, opt: &OptimizerConfig) -> Result<FirstOrderConstant> {
    let grid = Grid::new(-l_max, l_max, n_cells)?;
    let bc = BoundarySpec::values(-1.0, 1.0);
    let inits = vec![smoothstep(grid, -1.0, 1.0), middle_ramp(grid, -1.0, 1.0)];
    let r = multistart(Functional::FirstOrder, &bc, &inits, opt)?;
    Ok(FirstOrderConstant {
        value: r.energy,
        result: r,
    })
}

/// Everything reported by `compute-alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub n_cells: usize,
    pub alpha: WallConstant,
    pub c_fm: FmConstant,
    pub first_order: FirstOrderConstant,
}

impl ConstantsReport {
    pub const CSV_HEADER: &'static str = "n_cells,alpha,c_fm,first_order";

    pub fn compute(cfg: &ConstantsConfig, first_order_cells: usize) -> Result<Self> {
        let alpha = compute_alpha(cfg)?;
        let c_fm = compute_fm_constant(cfg)?;
        let first_order = first_order_constant(cfg.l_max, first_order_cells, &cfg.opt)?;
        Ok(ConstantsReport {
            n_cells: cfg.unit_cells,
            alpha,
            c_fm,
            first_order,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.n_cells, self.alpha.value, self.c_fm.value, self.first_order.value
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> ConstantsConfig {
        ConstantsConfig {
            unit_cells: 96,
            cells_per_unit: 12,
            l_max: 10.0,
            ..Default::default()
        }
    }

    #[test]
    fn amgm_constants() {
        assert!((amgm_factor() - 4.0 / 3f64.powf(0.75)).abs() < 1e-15);
        // L P + L^-3 C at the optimal L equals the AM-GM product bound
        let (p, c) = (0.7, 2.3);
        let l = optimal_stretch(p, c);
        let lhs = l * p + c / l.powi(3);
        assert!((lhs - amgm_factor() * p.powf(0.75) * c.powf(0.25)).abs() < 1e-14);
    }

    #[test]
    fn beta_at_minus_one_is_zero_on_both_routes() {
        let b = compute_beta(-1.0, BetaRoute::Both, &coarse()).unwrap();
        assert_eq!(b.beta_phi, Some(0.0));
        assert_eq!(b.beta_psi, Some(0.0));
        assert!(b.converged);
    }

    #[test]
    fn single_route_leaves_other_empty() {
        let b = compute_beta(0.0, BetaRoute::Psi, &coarse()).unwrap();
        assert!(b.beta_phi.is_none() && b.beta_psi.unwrap() > 0.0);
        assert!(b.csv_row().contains("nan"));
    }

    #[test]
    fn curve_argument_errors() {
        assert!(beta_curve(0.0, 1.0, 1, BetaRoute::Psi, &coarse(), true).is_err());
        assert!(beta_curve(1.0, 0.0, 3, BetaRoute::Psi, &coarse(), true).is_err());
    }

    #[test]
    fn curve_grid_hits_minus_one_exactly() {
        let rows = beta_curve(-2.0, 0.0, 5, BetaRoute::Psi, &coarse(), false).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[2].t, -1.0);
        assert_eq!(rows[2].point.as_ref().unwrap().beta_psi, Some(0.0));
    }
}
