//! Gamma-convergence experiments.
//!
//! For each ε the study minimizes F_ε on (a, b) with pinned endpoint values,
//! reads off the ±1 step function the minimizer is close to, and compares the
//! minimum with the limit energy α·essVar u + β(-a₀ sgn u(a+)) + β(-b₀ sgn u(b-))
//! and with the energy of an explicit recovery profile for the same step
//! function.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::constants::{amgm_factor, compute_alpha, compute_beta, optimal_stretch, BetaRoute, ConstantsConfig};
use crate::energy::{f_eps, integrals, integrate_window, Functional};
use crate::error::{Error, Result};
use crate::optimize::{minimize, multistart, OptResult, OptimizerConfig};
use crate::profile::{BoundarySpec, Grid, HermiteProfile};

/// Offset from ±1 beyond which a point counts as off the wells.
pub const OFFWELL_THRESHOLD: f64 = 0.1;
/// Sub-samples per cell when measuring the off-well set.
const OFFWELL_SAMPLES: usize = 32;

/// A ±1-valued step function on (a, b).
#[derive(Debug, Clone, PartialEq)]
pub struct StepLimit {
    pub a: f64,
    pub b: f64,
    pub start_sign: f64,
    pub jumps: Vec<f64>,
}

impl StepLimit {
    pub fn new(a: f64, b: f64, start_sign: f64, jumps: Vec<f64>) -> Result<Self> {
        if !(a < b) {
            return Err(Error::arg(format!("empty domain ({a}, {b})")));
        }
        if start_sign != 1.0 && start_sign != -1.0 {
            return Err(Error::arg(format!("start sign must be ±1, got {start_sign}")));
        }
        let mut prev = a;
        for &x in &jumps {
            if !(x > prev && x < b) {
                return Err(Error::arg(format!("jumps must increase strictly inside ({a}, {b})")));
            }
            prev = x;
        }
        Ok(StepLimit { a, b, start_sign, jumps })
    }

    pub fn constant(a: f64, b: f64, sign: f64) -> Result<Self> {
        StepLimit::new(a, b, sign, Vec::new())
    }

    /// 2 per jump.
    pub fn ess_var(&self) -> f64 {
        2.0 * self.jumps.len() as f64
    }

    pub fn end_sign(&self) -> f64 {
        if self.jumps.len().is_multiple_of(2) {
            self.start_sign
        } else {
            -self.start_sign
        }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let crossed = self.jumps.iter().filter(|&&j| j <= x).count();
        if crossed % 2 == 0 {
            self.start_sign
        } else {
            -self.start_sign
        }
    }

    /// Same sign pattern with every jump within `tol` of its counterpart.
    pub fn matches(&self, other: &StepLimit, tol: f64) -> bool {
        self.start_sign == other.start_sign
            && self.jumps.len() == other.jumps.len()
            && self.jumps.iter().zip(&other.jumps).all(|(x, y)| (x - y).abs() <= tol)
    }
}

/// The limit energy under both β normalizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// One β per endpoint.
    pub value: f64,
    /// Two β per endpoint.
    pub alt: f64,
}

pub fn predicted_limit(
    u: &StepLimit,
    a0: f64,
    b0: f64,
    alpha: f64,
    mut beta: impl FnMut(f64) -> Result<f64>,
) -> Result<Prediction> {
    let bulk = alpha * u.ess_var();
    let ends = beta(-a0 * u.start_sign)? + beta(-b0 * u.end_sign())?;
    Ok(Prediction {
        value: bulk + ends,
        alt: bulk + 2.0 * ends,
    })
}

/// How the pinned endpoint value depends on ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryRule {
    Const(f64),
    /// v0 + rate·ε.
    Approach { v0: f64, rate: f64 },
}

impl BoundaryRule {
    pub fn at(&self, eps: f64) -> f64 {
        match *self {
            BoundaryRule::Const(v) => v,
            BoundaryRule::Approach { v0, rate } => v0 + rate * eps,
        }
    }

    pub fn limit(&self) -> f64 {
        match *self {
            BoundaryRule::Const(v) => v,
            BoundaryRule::Approach { v0, .. } => v0,
        }
    }
}

impl std::str::FromStr for BoundaryRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::arg(format!("bad boundary rule '{s}', expected const:<v> or approach:<v0>,<rate>"));
        let num = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite());
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "const" => num(rest).map(BoundaryRule::Const).ok_or_else(bad),
            "approach" => {
                let (v0, rate) = rest.split_once(',').ok_or_else(bad)?;
                Ok(BoundaryRule::Approach {
                    v0: num(v0).ok_or_else(bad)?,
                    rate: num(rate).ok_or_else(bad)?,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for BoundaryRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryRule::Const(v) => write!(f, "const:{v}"),
            BoundaryRule::Approach { v0, rate } => write!(f, "approach:{v0},{rate}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub a: f64,
    pub b: f64,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub a_rule: BoundaryRule,
    pub b_rule: BoundaryRule,
    pub a0: f64,
    pub b0: f64,
    /// Grid cells per unit of min(ε, ζ).
    pub cells_per_layer: usize,
    /// Exponent of the reported L^p distances.
    pub p_norm: f64,
    pub opt: OptimizerConfig,
    pub constants: ConstantsConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            a: 0.0,
            b: 0.6,
            epsilons: vec![0.2, 0.1, 0.05, 0.025],
            a_rule: BoundaryRule::Const(-1.0),
            b_rule: BoundaryRule::Const(1.0),
            a0: -1.0,
            b0: 1.0,
            cells_per_layer: 64,
            p_norm: 2.0,
            opt: OptimizerConfig::default(),
            constants: ConstantsConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::arg(format!("bad domain ({}, {})", self.a, self.b)));
        }
        if self.epsilons.is_empty() {
            return Err(Error::arg("no epsilons given"));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::arg("epsilons must be positive"));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::arg("epsilons must be strictly decreasing"));
        }
        for (rule, limit, side) in [(self.a_rule, self.a0, "a"), (self.b_rule, self.b0, "b")] {
            if (rule.limit() - limit).abs() > 1e-12 {
                return Err(Error::arg(format!(
                    "{side}_eps rule {rule} does not tend to {side}0 = {limit}"
                )));
            }
        }
        if self.cells_per_layer == 0 {
            return Err(Error::arg("cells_per_layer must be positive"));
        }
        if !(1.0..=4.0).contains(&self.p_norm) {
            return Err(Error::arg(format!("p must lie in [1, 4], got {}", self.p_norm)));
        }
        self.opt.validate()?;
        self.constants.validate()
    }

    /// The grid used at `eps`: `cells_per_layer` cells per min(ε, ζ).
    pub fn grid_for(&self, eps: f64, zeta: f64) -> Result<Grid> {
        let h = eps.min(zeta) / self.cells_per_layer as f64;
        let n = ((self.b - self.a) / h).ceil() as usize;
        Grid::new(self.a, self.b, n.max(1))
    }
}

/// α, its minimizer and lazily computed β values.
#[derive(Debug)]
pub struct LimitData {
    pub alpha: f64,
    /// Clamped Φ minimizer on (0, 1) going from -1 to +1.
    pub interior: HermiteProfile,
    cfg: ConstantsConfig,
    cache: Mutex<HashMap<(u64, u64), (f64, HermiteProfile)>>,
}

impl LimitData {
    pub fn compute(cfg: &ConstantsConfig) -> Result<Self> {
        let a = compute_alpha(cfg)?;
        Ok(LimitData {
            alpha: a.value,
            interior: a.result.profile,
            cfg: cfg.clone(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ConstantsConfig {
        &self.cfg
    }

    /// β(t) and its half-line minimizer on (-L, 0), through the Ψ route.
    pub fn beta_with_profile(&self, t: f64, l_max: f64) -> Result<(f64, HermiteProfile)> {
        let key = (t.to_bits(), l_max.to_bits());
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let cfg = ConstantsConfig { l_max, ..self.cfg.clone() };
        let point = compute_beta(t, BetaRoute::Psi, &cfg)?;
        let value = point.beta_psi.expect("psi route requested");
        let profile = point.psi_profile.expect("psi route requested");
        self.cache.lock().unwrap().insert(key, (value, profile.clone()));
        Ok((value, profile))
    }

    /// β(t) at the configured truncation.
    pub fn beta(&self, t: f64) -> Result<f64> {
        Ok(self.beta_with_profile(t, self.cfg.l_max)?.0)
    }

    /// Interior layer width ζ = ε (3C/P)^{1/4} of the rescaled minimizer.
    pub fn zeta(&self, eps: f64) -> f64 {
        zeta_for(eps, &self.interior)
    }

    pub fn predict(&self, u: &StepLimit, a0: f64, b0: f64) -> Result<Prediction> {
        predicted_limit(u, a0, b0, self.alpha, |t| self.beta(t))
    }
}

pub fn zeta_for(eps: f64, h: &HermiteProfile) -> f64 {
    let i = integrals(h);
    eps * optimal_stretch(i.potential, i.curvature)
}

/// (ζ/ε)·P(h) + (ε³/ζ³)·C(h): F_ε of h stretched to width ζ.
pub fn layer_energy(eps: f64, zeta: f64, h: &HermiteProfile) -> f64 {
    let i = integrals(h);
    (zeta / eps) * i.potential + (eps / zeta).powi(3) * i.curvature
}

/// Truncation length of boundary-layer profiles at `eps`.
pub fn boundary_l_max(eps: f64, cap: f64) -> f64 {
    cap.min(1.0 / eps.sqrt())
}

/// Unconstrained F_ε or, in diagnostic mode, F_ε clamped to -1 at a and +1 at b.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FMode {
    Free,
    Diagnostic,
}

/// Minimizes F_ε on (a, b) with `cells_per_layer` cells per ε.
#[allow(non_snake_case)]
pub fn minimize_F(
    eps: f64,
    a: f64,
    b: f64,
    mode: FMode,
    cells_per_layer: usize,
    cfg: &OptimizerConfig,
) -> Result<OptResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::arg(format!("epsilon must be positive, got {eps}")));
    }
    let n = ((b - a) * cells_per_layer as f64 / eps).ceil() as usize;
    let grid = Grid::new(a, b, n.max(1))?;
    let w = 2.0 * eps;
    let mid = 0.5 * (a + b);
    let third = (b - a) / 3.0;
    let (bc, steps) = match mode {
        FMode::Free => (
            BoundarySpec::free(),
            vec![
                StepLimit::constant(a, b, -1.0)?,
                StepLimit::constant(a, b, 1.0)?,
                StepLimit::new(a, b, -1.0, vec![mid])?,
                StepLimit::new(a, b, 1.0, vec![mid])?,
                StepLimit::new(a, b, -1.0, vec![a + third, b - third])?,
            ],
        ),
        FMode::Diagnostic => (
            BoundarySpec::clamped(-1.0, 1.0),
            vec![StepLimit::new(a, b, -1.0, vec![mid])?],
        ),
    };
    let inits: Vec<HermiteProfile> = steps
        .iter()
        .map(|s| {
            let (l, r) = match mode {
                FMode::Free => (s.start_sign, s.end_sign()),
                FMode::Diagnostic => (-1.0, 1.0),
            };
            step_start(grid, s, l, r, w)
        })
        .collect();
    multistart(Functional::FEps(eps), &bc, &inits, cfg)
}

/// Smoothed version of `step` on `grid`, pinned to `left` and `right` at the
/// ends, with transitions of width `width`.
pub fn step_start(grid: Grid, step: &StepLimit, left: f64, right: f64, width: f64) -> HermiteProfile {
    let (a, b) = (grid.x_lo(), grid.x_hi());
    let half = 0.5 * width;
    // (x0, x1, v0, v1): smoothstep ramps; the profile is constant between them
    let mut ramps = Vec::new();
    let w_end = width.min(0.25 * (b - a));
    ramps.push((a, a + w_end, left, step.start_sign));
    let mut sign = step.start_sign;
    for &j in &step.jumps {
        ramps.push((j - half, j + half, sign, -sign));
        sign = -sign;
    }
    ramps.push((b - w_end, b, sign, right));
    let eval = |x: f64| -> (f64, f64) {
        let mut value = left;
        for &(x0, x1, v0, v1) in &ramps {
            if x < x0 {
                break;
            }
            if x <= x1 {
                let r = (x - x0) / (x1 - x0);
                let jump = v1 - v0;
                return (v0 + jump * r * r * (3.0 - 2.0 * r), jump * 6.0 * r * (1.0 - r) / (x1 - x0));
            }
            value = v1;
        }
        (value, 0.0)
    };
    let mut p = HermiteProfile::from_fn(grid, |x| eval(x).0, |x| eval(x).1).expect("finite ramp data");
    let n = grid.n_cells();
    p.values_mut()[0] = left;
    p.values_mut()[n] = right;
    p
}

/// Minimizes F_ε on the spec's domain with endpoint values pinned to a_ε, b_ε
/// and free endpoint slopes. `extra` starts are tried after the built-in ones.
#[allow(non_snake_case)]
pub fn minimize_G(
    eps: f64,
    spec: &ExperimentSpec,
    grid: Grid,
    extra: &[HermiteProfile],
) -> Result<OptResult> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::arg(format!("epsilon must be positive, got {eps}")));
    }
    let (a, b) = (spec.a, spec.b);
    let (left, right) = (spec.a_rule.at(eps), spec.b_rule.at(eps));
    let bc = BoundarySpec::values(left, right);
    let mid = 0.5 * (a + b);
    let third = (b - a) / 3.0;
    let w = (3.0 * eps).min(0.25 * (b - a));
    let mut inits = Vec::new();
    for sign in [-1.0, 1.0] {
        for jumps in [vec![], vec![mid], vec![a + third, b - third]] {
            let s = StepLimit::new(a, b, sign, jumps)?;
            inits.push(step_start(grid, &s, left, right, w));
        }
    }
    for p in extra {
        if *p.grid() == grid && bc.is_satisfied_by(p) {
            inits.push(p.clone());
        }
    }
    let cfg = OptimizerConfig {
        multistart_count: inits.len(),
        ..spec.opt.clone()
    };
    multistart(Functional::FEps(eps), &bc, &inits, &cfg)
}

/// A boundary layer as placed by the recovery construction.
#[derive(Debug, Clone)]
struct EndLayer {
    /// Half-line minimizer on (-L, 0), already sign-adjusted.
    profile: HermiteProfile,
    l_max: f64,
}

fn end_layer(limits: &LimitData, datum: f64, interior_sign: f64, eps: f64) -> Result<Option<EndLayer>> {
    // connecting interior sign s to the datum costs β(-s·datum); the profile is -s·v
    let t = -interior_sign * datum;
    if t == -1.0 {
        return Ok(None);
    }
    let l_max = boundary_l_max(eps, limits.config().l_max);
    let (_, v) = limits.beta_with_profile(t, l_max)?;
    let profile = if interior_sign < 0.0 { v } else { v.negated() };
    Ok(Some(EndLayer { profile, l_max }))
}

/// Assembles the recovery profile for `u` at `eps` on `grid`.
///
/// Interior jumps get the α-minimizer stretched to width ζ; endpoints whose
/// datum differs from the adjacent phase get the half-line β minimizer scaled
/// by ε.
pub fn recovery_profile(
    u: &StepLimit,
    eps: f64,
    left: f64,
    right: f64,
    limits: &LimitData,
    grid: Grid,
) -> Result<HermiteProfile> {
    if !grid.same_domain(u.a, u.b) {
        return Err(Error::WrongDomain {
            lo: grid.x_lo(),
            hi: grid.x_hi(),
            want_lo: u.a,
            want_hi: u.b,
        });
    }
    let zeta = limits.zeta(eps);
    let left_layer = end_layer(limits, left, u.start_sign, eps)?;
    let right_layer = end_layer(limits, right, u.end_sign(), eps)?;
    let width = |l: &Option<EndLayer>| l.as_ref().map_or(0.0, |l| eps * l.l_max);
    let (wl, wr) = (width(&left_layer), width(&right_layer));

    // occupied intervals in order, checked pairwise
    let mut spans: Vec<(f64, f64, String)> = Vec::new();
    if wl > 0.0 {
        spans.push((u.a, u.a + wl, "left boundary layer".into()));
    }
    for &j in &u.jumps {
        spans.push((j - 0.5 * zeta, j + 0.5 * zeta, format!("jump at {j}")));
    }
    if wr > 0.0 {
        spans.push((u.b - wr, u.b, "right boundary layer".into()));
    }
    for s in &spans {
        if s.0 < u.a || s.1 > u.b {
            return Err(Error::LayersOverlap(format!("{} leaves the domain", s.2)));
        }
    }
    for pair in spans.windows(2) {
        if pair[0].1 >= pair[1].0 {
            return Err(Error::LayersOverlap(format!(
                "{} and {} (eps = {eps}, zeta = {zeta:.4e})",
                pair[0].2, pair[1].2
            )));
        }
    }

    let h = &limits.interior;
    let eval = |x: f64, order: usize| -> f64 {
        if let Some(l) = &left_layer {
            if x <= u.a + wl {
                // mirrored: s = (a - x)/ε runs over (-L, 0)
                let s = ((u.a - x) / eps).max(-l.l_max);
                let sign = if order == 1 { -1.0 / eps } else { 1.0 };
                return sign * l.profile.eval(s, order).unwrap();
            }
        }
        if let Some(l) = &right_layer {
            if x >= u.b - wr {
                let s = ((x - u.b) / eps).clamp(-l.l_max, 0.0);
                let scale = if order == 1 { 1.0 / eps } else { 1.0 };
                return scale * l.profile.eval(s, order).unwrap();
            }
        }
        let mut sign = u.start_sign;
        for &j in &u.jumps {
            if x < j - 0.5 * zeta {
                break;
            }
            if x <= j + 0.5 * zeta {
                // h goes from -1 to +1; an upward jump starts from -1
                let s = ((x - j) / zeta + 0.5).clamp(0.0, 1.0);
                let dir = -sign;
                let scale = if order == 1 { 1.0 / zeta } else { 1.0 };
                return dir * scale * h.eval(s, order).unwrap();
            }
            sign = -sign;
        }
        if order == 0 {
            sign
        } else {
            0.0
        }
    };
    let mut p = HermiteProfile::from_fn(grid, |x| eval(x, 0), |x| eval(x, 1))?;
    let n = grid.n_cells();
    p.values_mut()[0] = left;
    p.values_mut()[n] = right;
    Ok(p)
}

/// Step function read off the signs at cell midpoints.
///
/// Exact zeros take the sign of the left neighbor. Runs shorter than
/// `min_run` are absorbed by their neighbors, shortest first, while more than
/// one run remains.
pub fn infer_step_limit(p: &HermiteProfile, min_run: f64) -> StepLimit {
    let g = p.grid();
    let n = g.n_cells();
    let mut signs = Vec::with_capacity(n);
    let mut last = 0.0;
    for cell in 0..n {
        let v = p.eval_local(cell, 0.5, 0);
        let s = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            last
        };
        signs.push(s);
        if s != 0.0 {
            last = s;
        }
    }
    // leading zeros take the first nonzero sign; an all-zero profile reads as -1
    let first = signs.iter().copied().find(|&s| s != 0.0).unwrap_or(-1.0);
    for s in signs.iter_mut() {
        if *s != 0.0 {
            break;
        }
        *s = first;
    }
    // runs as (sign, start, end) in x
    let mut runs: Vec<(f64, f64, f64)> = Vec::new();
    for (cell, &s) in signs.iter().enumerate() {
        let (x0, x1) = (g.node(cell), g.node(cell + 1));
        match runs.last_mut() {
            Some(r) if r.0 == s => r.2 = x1,
            _ => runs.push((s, x0, x1)),
        }
    }
    while runs.len() > 1 {
        let (idx, len) = runs
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.2 - r.1))
            .fold((0, f64::INFINITY), |acc, (i, l)| if l < acc.1 { (i, l) } else { acc });
        if len >= min_run {
            break;
        }
        let (_, x0, x1) = runs.remove(idx);
        if idx == 0 {
            runs[0].1 = x0;
        } else if idx == runs.len() {
            runs[idx - 1].2 = x1;
        } else {
            // both neighbors share a sign; fuse them across the removed run
            let right = runs.remove(idx);
            runs[idx - 1].2 = right.2;
        }
    }
    let jumps = runs.iter().skip(1).map(|r| r.1).collect();
    StepLimit::new(g.x_lo(), g.x_hi(), runs[0].0, jumps).expect("runs partition the domain")
}

/// Measure of {x : ||u(x)| - 1| > 0.1}, by midpoint sampling inside each cell.
pub fn offwell_measure(p: &HermiteProfile) -> f64 {
    let g = p.grid();
    let dx = g.h() / OFFWELL_SAMPLES as f64;
    let mut count = 0usize;
    for cell in 0..g.n_cells() {
        for k in 0..OFFWELL_SAMPLES {
            let t = (k as f64 + 0.5) / OFFWELL_SAMPLES as f64;
            if (p.eval_local(cell, t, 0).abs() - 1.0).abs() > OFFWELL_THRESHOLD {
                count += 1;
            }
        }
    }
    count as f64 * dx
}

/// (∫|u - step|^p)^{1/p}.
pub fn lp_distance(p: &HermiteProfile, step: &StepLimit, exponent: f64) -> f64 {
    let mut cuts = vec![step.a];
    cuts.extend(&step.jumps);
    cuts.push(step.b);
    let mut total = 0.0;
    let mut sign = step.start_sign;
    for w in cuts.windows(2) {
        total += integrate_window(p, w[0], w[1], |u, _, _| (u - sign).abs().powf(exponent));
        sign = -sign;
    }
    total.powf(1.0 / exponent)
}

/// Which β normalization the direct minimum supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// One β per endpoint.
    Beta,
    /// Two β per endpoint.
    TwoBeta,
    /// Both hypotheses predict the same value.
    Undecided,
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Normalization::Beta => "beta",
            Normalization::TwoBeta => "2beta",
            Normalization::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub eps: f64,
    pub direct_min: f64,
    pub recovery_energy: f64,
    pub predicted: f64,
    pub predicted_alt: f64,
    pub rel_gap: f64,
    pub offwell_measure: f64,
    pub inferred: StepLimit,
    pub converged: bool,
    pub lp_recovery: f64,
    pub direct: HermiteProfile,
    pub recovery: HermiteProfile,
}

impl ConvergenceRecord {
    pub const CSV_HEADER: &'static str =
        "eps,direct_min,recovery_energy,predicted,predicted_alt,rel_gap,offwell_measure,inferred_jumps";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e},{:.6e},{}",
            self.eps,
            self.direct_min,
            self.recovery_energy,
            self.predicted,
            self.predicted_alt,
            self.rel_gap,
            self.offwell_measure,
            self.inferred.jumps.len()
        )
    }

    /// The hypothesis whose prediction is closer to the direct minimum.
    pub fn normalization(&self) -> Normalization {
        let d1 = (self.direct_min - self.predicted).abs();
        let d2 = (self.direct_min - self.predicted_alt).abs();
        if (self.predicted - self.predicted_alt).abs() <= 1e-12 * self.predicted.abs().max(1.0) {
            Normalization::Undecided
        } else if d1 < d2 {
            Normalization::Beta
        } else {
            Normalization::TwoBeta
        }
    }
}

/// One ε of a study; failures are kept instead of aborting the study.
#[derive(Debug)]
pub struct StudyRow {
    pub eps: f64,
    pub outcome: Result<ConvergenceRecord>,
}

impl StudyRow {
    pub fn csv_row(&self) -> String {
        match &self.outcome {
            Ok(r) => r.csv_row(),
            Err(_) => format!("{},nan,nan,nan,nan,nan,nan,nan", self.eps),
        }
    }
}

/// Runs the pincer for one ε.
pub fn study_point(eps: f64, spec: &ExperimentSpec, limits: &LimitData) -> Result<ConvergenceRecord> {
    let zeta = limits.zeta(eps);
    let grid = spec.grid_for(eps, zeta)?;
    let (left, right) = (spec.a_rule.at(eps), spec.b_rule.at(eps));
    let mut direct = minimize_G(eps, spec, grid, &[])?;
    let mut inferred = infer_step_limit(&direct.profile, 0.5 * zeta);
    let mut recovery = recovery_profile(&inferred, eps, left, right, limits, grid)?;
    let mut recovery_energy = f_eps(&recovery, eps)?;
    if recovery_energy < direct.energy {
        // the recovery profile is admissible, so it is a legitimate start
        let bc = BoundarySpec::values(left, right);
        let refined = minimize(Functional::FEps(eps), &bc, &recovery, &spec.opt)?;
        if refined.energy < direct.energy {
            direct = refined;
            let again = infer_step_limit(&direct.profile, 0.5 * zeta);
            if again != inferred {
                inferred = again;
                recovery = recovery_profile(&inferred, eps, left, right, limits, grid)?;
                recovery_energy = f_eps(&recovery, eps)?;
            }
        }
    }
    let prediction = limits.predict(&inferred, spec.a0, spec.b0)?;
    Ok(ConvergenceRecord {
        eps,
        direct_min: direct.energy,
        recovery_energy,
        predicted: prediction.value,
        predicted_alt: prediction.alt,
        rel_gap: (direct.energy - prediction.value).abs() / prediction.value.max(1e-12),
        offwell_measure: offwell_measure(&direct.profile),
        lp_recovery: lp_distance(&recovery, &inferred, spec.p_norm),
        inferred,
        converged: direct.settled(),
        direct: direct.profile,
        recovery,
    })
}

/// Runs every ε of the spec in parallel; rows keep the spec's ε order.
pub fn convergence_study(spec: &ExperimentSpec, limits: &LimitData) -> Result<Vec<StudyRow>> {
    spec.validate()?;
    Ok(spec
        .epsilons
        .par_iter()
        .map(|&eps| StudyRow {
            eps,
            outcome: study_point(eps, spec, limits),
        })
        .collect())
}

/// The AM–GM identity behind ζ: layer energy at the optimal ζ equals
/// (4/3^{3/4})Φ(h). Returns the relative mismatch.
pub fn zeta_identity_error(eps: f64, h: &HermiteProfile) -> f64 {
    let i = integrals(h);
    let phi = i.potential.powf(0.75) * i.curvature.powf(0.25);
    let lhs = layer_energy(eps, zeta_for(eps, h), h);
    let rhs = amgm_factor() * phi;
    (lhs - rhs).abs() / rhs
}
