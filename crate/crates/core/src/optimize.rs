//! Minimization over the free nodal degrees of freedom.
//!
//! The solver is limited-memory BFGS with Armijo backtracking. Frozen degrees
//! of freedom (those pinned by a [`BoundarySpec`]) are never touched, so every
//! iterate satisfies the boundary data bit-for-bit.
//!
//! The initial inverse-Hessian guess of the two-loop recursion is the inverse
//! of a fixed banded metric, a weighted sum of the mass, slope and curvature
//! Gram matrices of the Hermite basis. Without it the curvature term makes the
//! problem condition number grow like h^{-4} and plain L-BFGS stalls on fine
//! grids; with it iteration counts are essentially grid independent.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{integrals, weighted_gradient, Functional, QuadratureRule};
use crate::error::{Error, Result};
use crate::profile::{BoundarySpec, Grid, HermiteProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Infinity norm of the gradient over free degrees of freedom.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub history: usize,
    pub multistart_count: usize,
    pub rng_seed: u64,
    /// Stop once the relative energy decrease stays below this for
    /// `stall_window` consecutive steps (roundoff floor of the gradient).
    pub stall_rtol: f64,
    pub stall_window: usize,
    /// Run multistart candidates on the rayon pool.
    pub parallel: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 5000,
            grad_tol: 1e-8,
            initial_step: 1.0,
            backtrack: 0.5,
            armijo: 1e-4,
            history: 10,
            multistart_count: 5,
            rng_seed: 42,
            stall_rtol: 1e-14,
            stall_window: 20,
            parallel: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.grad_tol, self.initial_step, self.armijo];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::arg("optimizer tolerances must be positive"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::arg("backtracking factor must lie in (0, 1)"));
        }
        if !(self.stall_rtol >= 0.0) {
            return Err(Error::arg("stall tolerance must be nonnegative"));
        }
        if self.history == 0 || self.multistart_count == 0 || self.max_iters == 0 || self.stall_window == 0 {
            return Err(Error::arg("history, multistart_count and max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub profile: HermiteProfile,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub stop: StopReason,
    /// Energy after every accepted step, starting with the initial energy.
    pub trace: Vec<f64>,
}

impl OptResult {
    /// True unless the iteration budget ran out.
    pub fn settled(&self) -> bool {
        self.stop != StopReason::MaxIters
    }
}

/// Why the iteration ended.
///
/// Only `GradTol` sets `converged`. A stall or a failed steepest-descent line
/// search means the energy cannot be lowered at working precision, which
/// [`OptResult::settled`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradTol,
    Stalled,
    LineSearch,
    MaxIters,
}

/// Iterations spent on Ψ when Φ is singular at the starting point.
const PHI_ESCAPE_ITERS: usize = 50;
const MAX_BACKTRACKS: usize = 60;
/// Relative energy difference under which two multistart results tie.
const TIE_RTOL: f64 = 1e-10;

/// Minimizes `functional` over profiles satisfying `bc`, starting at `init`.
pub fn minimize(
    functional: Functional,
    bc: &BoundarySpec,
    init: &HermiteProfile,
    cfg: &OptimizerConfig,
) -> Result<OptResult> {
    functional.validate()?;
    cfg.validate()?;
    if !bc.is_satisfied_by(init) {
        return Err(Error::Precondition(
            "initial profile does not satisfy the boundary data".into(),
        ));
    }
    let problem = Problem::new(functional, bc, init)?;
    let x0 = problem.free_part(&init.dofs());
    let i0 = integrals(init);
    let e0 = functional.value_from(&i0);
    if !e0.is_finite() {
        return Err(Error::Numerical {
            message: format!("initial {} energy is not finite", functional.name()),
            last: Some(Box::new(init.clone())),
        });
    }
    // All functionals here are nonnegative; zero energy is a global minimum.
    if e0 == 0.0 {
        return Ok(OptResult {
            profile: init.clone(),
            energy: 0.0,
            iterations: 0,
            converged: true,
            grad_norm: 0.0,
            stop: StopReason::GradTol,
            trace: vec![0.0],
        });
    }

    match functional.gradient_weights(&i0) {
        Ok(_) => problem.run(x0, cfg, cfg.max_iters),
        Err(Error::Singular { .. }) => {
            let escape = Problem::new(Functional::Psi, bc, init)?;
            let mid = escape.run(x0, cfg, PHI_ESCAPE_ITERS.min(cfg.max_iters))?;
            let x1 = problem.free_part(&mid.profile.dofs());
            let left = cfg.max_iters.saturating_sub(mid.iterations).max(1);
            let mut out = problem.run(x1, cfg, left)?;
            out.iterations += mid.iterations;
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

/// Runs [`minimize`] from every init and from seeded random perturbations of
/// the first one, returning the lowest energy (earliest start on ties).
pub fn multistart(
    functional: Functional,
    bc: &BoundarySpec,
    inits: &[HermiteProfile],
    cfg: &OptimizerConfig,
) -> Result<OptResult> {
    if inits.is_empty() {
        return Err(Error::arg("multistart needs at least one initial profile"));
    }
    cfg.validate()?;
    let mut starts: Vec<HermiteProfile> = inits.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    for _ in inits.len()..cfg.multistart_count {
        starts.push(perturb(&inits[0], bc, 0.2, &mut rng));
    }
    let run = |p: &HermiteProfile| minimize(functional, bc, p, cfg);
    let results: Vec<Result<OptResult>> = if cfg.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };
    pick_best(results)
}

pub(crate) fn pick_best(results: Vec<Result<OptResult>>) -> Result<OptResult> {
    let mut best: Option<OptResult> = None;
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some(b) => r.energy < b.energy - TIE_RTOL * b.energy.abs().max(1e-300),
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => failures.push(format!("start {i}: {e}")),
        }
    }
    best.ok_or(Error::AllStartsFailed(failures))
}

/// Adds Σ_{j=1..4} a_j sin(jπs), a_j uniform in [-amp, amp], to the free
/// degrees of freedom of `p`.
pub fn perturb(p: &HermiteProfile, bc: &BoundarySpec, amp: f64, rng: &mut impl Rng) -> HermiteProfile {
    let coeffs: Vec<f64> = (1..=4).map(|_| rng.gen_range(-amp..=amp)).collect();
    let g = *p.grid();
    let len = g.len();
    let mask = bc.free_mask(g.n_nodes());
    let mut out = p.clone();
    for (i, x) in g.nodes().enumerate() {
        let s = (x - g.x_lo()) / len;
        let (mut v, mut d) = (0.0, 0.0);
        for (j, a) in coeffs.iter().enumerate() {
            let k = (j + 1) as f64 * std::f64::consts::PI;
            v += a * (k * s).sin();
            d += a * k / len * (k * s).cos();
        }
        if mask[2 * i] {
            out.values_mut()[i] += v;
        }
        if mask[2 * i + 1] {
            out.derivs_mut()[i] += d;
        }
    }
    out
}

/// Cubic smoothstep from `left` to `right` with zero end slopes.
pub fn smoothstep(grid: Grid, left: f64, right: f64) -> HermiteProfile {
    ramp_on(grid, left, right, 0.0, 1.0)
}

/// Smoothstep confined to the middle third, constant elsewhere.
pub fn middle_ramp(grid: Grid, left: f64, right: f64) -> HermiteProfile {
    ramp_on(grid, left, right, 1.0 / 3.0, 2.0 / 3.0)
}

/// Constant `left` with a smoothstep boundary layer over the last `fraction`
/// of the domain ending at `right`.
pub fn boundary_layer(grid: Grid, left: f64, right: f64, fraction: f64) -> HermiteProfile {
    ramp_on(grid, left, right, 1.0 - fraction, 1.0)
}

/// `left + (right - left)(1 + tanh((x - mid)/width))/2`, with the endpoint
/// values snapped to `left` and `right`.
pub fn tanh_ramp(grid: Grid, left: f64, right: f64, width: f64) -> HermiteProfile {
    let mid = 0.5 * (grid.x_lo() + grid.x_hi());
    let jump = right - left;
    let mut p = HermiteProfile::from_fn(
        grid,
        |x| left + 0.5 * jump * (1.0 + ((x - mid) / width).tanh()),
        |x| {
            let c = ((x - mid) / width).cosh();
            0.5 * jump / (width * c * c)
        },
    )
    .expect("tanh ramp data is finite");
    let n = grid.n_cells();
    p.values_mut()[0] = left;
    p.values_mut()[n] = right;
    p
}

/// Smoothstep on the fractional window [s0, s1] of the domain.
pub fn ramp_on(grid: Grid, left: f64, right: f64, s0: f64, s1: f64) -> HermiteProfile {
    let (lo, len) = (grid.x_lo(), grid.len());
    let width = (s1 - s0) * len;
    let jump = right - left;
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut derivs = Vec::with_capacity(grid.n_nodes());
    for x in grid.nodes() {
        let r = (((x - lo) / len - s0) / (s1 - s0)).clamp(0.0, 1.0);
        values.push(left + jump * r * r * (3.0 - 2.0 * r));
        derivs.push(jump * 6.0 * r * (1.0 - r) / width);
    }
    let mut p = HermiteProfile::new(grid, values, derivs).expect("ramp data is finite");
    let n = grid.n_cells();
    p.values_mut()[0] = left;
    p.values_mut()[n] = right;
    p
}

/// Symmetric banded matrix factored as L Lᵀ, half bandwidth `BAND`.
const BAND: usize = 3;

struct BandedCholesky {
    l: Vec<[f64; BAND + 1]>,
}

impl BandedCholesky {
    /// `a[i][k]` holds A(i, i - k).
    fn factor(mut a: Vec<[f64; BAND + 1]>) -> Option<Self> {
        let n = a.len();
        for i in 0..n {
            for k in (0..=BAND.min(i)).rev() {
                let j = i - k;
                let mut s = a[i][k];
                for m in 1..=BAND {
                    if k + m > BAND || m > j {
                        break;
                    }
                    // L(i, j-m) * L(j, j-m)
                    s -= a[i][k + m] * a[j][m];
                }
                if k == 0 {
                    if !(s > 0.0) {
                        return None;
                    }
                    a[i][0] = s.sqrt();
                } else {
                    a[i][k] = s / a[j][0];
                }
            }
        }
        Some(BandedCholesky { l: a })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = self.l.len();
        for i in 0..n {
            let mut s = rhs[i];
            for k in 1..=BAND.min(i) {
                s -= self.l[i][k] * rhs[i - k];
            }
            rhs[i] = s / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in 1..=BAND {
                if i + k >= n {
                    break;
                }
                s -= self.l[i + k][k] * rhs[i + k];
            }
            rhs[i] = s / self.l[i][0];
        }
    }
}

struct Problem {
    functional: Functional,
    grid: Grid,
    template: Vec<f64>,
    free: Vec<usize>,
    metric: Option<BandedCholesky>,
}

impl Problem {
    fn new(functional: Functional, bc: &BoundarySpec, init: &HermiteProfile) -> Result<Self> {
        let grid = *init.grid();
        let mask = bc.free_mask(grid.n_nodes());
        let free: Vec<usize> = (0..mask.len()).filter(|&k| mask[k]).collect();
        let i0 = integrals(init);
        let (wp, wc, wd) = functional.gradient_weights(&i0).unwrap_or((1.0, 1.0, 0.0));
        // Hessian of W at the wells is 8; nonconvex regions are left to BFGS.
        let metric = assemble_metric(&grid, &mask, 8.0 * wp, 2.0 * wc, 2.0 * wd);
        Ok(Problem {
            functional,
            grid,
            template: init.dofs(),
            free,
            metric,
        })
    }

    fn free_part(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&k| full[k]).collect()
    }

    fn profile(&self, x: &[f64]) -> HermiteProfile {
        let mut full = self.template.clone();
        for (&k, &v) in self.free.iter().zip(x) {
            full[k] = v;
        }
        HermiteProfile::from_dofs(self.grid, &full).unwrap_or_else(|_| {
            // non-finite entries: keep the layout but let the energy report NaN
            let mut p = HermiteProfile::constant(self.grid, f64::NAN);
            p.values_mut().iter_mut().zip(full.iter().step_by(2)).for_each(|(a, b)| *a = *b);
            p.derivs_mut().iter_mut().zip(full.iter().skip(1).step_by(2)).for_each(|(a, b)| *a = *b);
            p
        })
    }

    /// Energy and free gradient; `None` when either is unusable.
    fn evaluate(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let p = self.profile(x);
        let i = integrals(&p);
        let f = self.functional.value_from(&i);
        let (wp, wc, wd) = self.functional.gradient_weights(&i).ok()?;
        let full = weighted_gradient(&p, wp, wc, wd);
        let g: Vec<f64> = self.free.iter().map(|&k| full[k]).collect();
        (f.is_finite() && g.iter().all(|v| v.is_finite())).then_some((f, g))
    }

    fn apply_metric_inverse(&self, v: &mut [f64]) {
        if let Some(m) = &self.metric {
            m.solve(v);
        }
    }

    fn run(&self, mut x: Vec<f64>, cfg: &OptimizerConfig, max_iters: usize) -> Result<OptResult> {
        let Some((mut f, mut g)) = self.evaluate(&x) else {
            return Err(Error::Numerical {
                message: format!("{} energy or gradient not finite at the start", self.functional.name()),
                last: Some(Box::new(self.profile(&x))),
            });
        };
        let mut trace = vec![f];
        let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.history);
        let mut iterations = 0;
        let mut gnorm = inf_norm(&g);
        let mut stalled = 0;
        let mut stop = StopReason::MaxIters;
        loop {
            if gnorm <= cfg.grad_tol {
                stop = StopReason::GradTol;
                break;
            }
            if stalled >= cfg.stall_window {
                stop = StopReason::Stalled;
                break;
            }
            if iterations >= max_iters {
                break;
            }
            let mut dir = self.direction(&g, &mem);
            let mut slope = dot(&g, &dir);
            if !(slope < 0.0) {
                mem.clear();
                dir = self.direction(&g, &mem);
                slope = dot(&g, &dir);
                if !(slope < 0.0) {
                    stop = StopReason::LineSearch;
                    break;
                }
            }
            let step = match self.line_search(&x, f, slope, &dir, cfg) {
                Some(s) => s,
                None if !mem.is_empty() => {
                    mem.clear();
                    continue;
                }
                None => {
                    stop = StopReason::LineSearch;
                    break;
                }
            };
            let (alpha, fnew, gnew) = step;
            let s: Vec<f64> = dir.iter().map(|d| alpha * d).collect();
            let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
            for (xi, si) in x.iter_mut().zip(&s) {
                *xi += si;
            }
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                if mem.len() == cfg.history {
                    mem.pop_front();
                }
                mem.push_back((s, y, 1.0 / sy));
            }
            if f - fnew <= cfg.stall_rtol * f.abs() {
                stalled += 1;
            } else {
                stalled = 0;
            }
            f = fnew;
            g = gnew;
            gnorm = inf_norm(&g);
            trace.push(f);
            iterations += 1;
        }
        Ok(OptResult {
            profile: self.profile(&x),
            energy: f,
            iterations,
            converged: stop == StopReason::GradTol,
            grad_norm: gnorm,
            stop,
            trace,
        })
    }

    /// Two-loop recursion with the metric inverse as initial Hessian guess.
    fn direction(&self, g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(-a, y, &mut q);
            alphas.push(a);
        }
        self.apply_metric_inverse(&mut q);
        if let Some((s, y, _)) = mem.back() {
            let mut my = y.clone();
            self.apply_metric_inverse(&mut my);
            let yhy = dot(y, &my);
            if yhy > 0.0 {
                let gamma = dot(s, y) / yhy;
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(a - b, s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }

    fn line_search(
        &self,
        x: &[f64],
        f: f64,
        slope: f64,
        dir: &[f64],
        cfg: &OptimizerConfig,
    ) -> Option<(f64, f64, Vec<f64>)> {
        let mut alpha = cfg.initial_step;
        let mut trial = vec![0.0; x.len()];
        for _ in 0..MAX_BACKTRACKS {
            for ((t, xi), d) in trial.iter_mut().zip(x).zip(dir) {
                *t = xi + alpha * d;
            }
            if let Some((ft, gt)) = self.evaluate(&trial) {
                if ft <= f + cfg.armijo * alpha * slope && ft <= f {
                    return Some((alpha, ft, gt));
                }
            }
            alpha *= cfg.backtrack;
        }
        None
    }
}

/// Banded metric `wm·Mass + wc·K₂ + wd·K₁` restricted to the free dofs.
fn assemble_metric(grid: &Grid, mask: &[bool], wm: f64, wc: f64, wd: f64) -> Option<BandedCholesky> {
    let q = QuadratureRule::standard();
    let h = grid.h();
    let scale = [1.0, h, 1.0, h];
    let mut elem = [[0.0; 4]; 4];
    for (w, b) in q.weights.iter().zip(q.abscissae.iter().map(|&t| crate::profile::hermite_basis(t))) {
        for k in 0..4 {
            for l in 0..4 {
                let m = b[0][k] * b[0][l];
                let k1 = b[1][k] * b[1][l] / (h * h);
                let k2 = b[2][k] * b[2][l] / (h * h * h * h);
                elem[k][l] += w * h * scale[k] * scale[l] * (wm * m + wd * k1 + wc * k2);
            }
        }
    }
    let n_full = mask.len();
    let mut index = vec![usize::MAX; n_full];
    let mut n = 0;
    for k in 0..n_full {
        if mask[k] {
            index[k] = n;
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    let mut band = vec![[0.0; BAND + 1]; n];
    for cell in 0..grid.n_cells() {
        for k in 0..4 {
            for l in 0..=k {
                let (ik, il) = (index[2 * cell + k], index[2 * cell + l]);
                if ik == usize::MAX || il == usize::MAX {
                    continue;
                }
                band[ik][ik - il] += elem[k][l];
            }
        }
    }
    // keep the metric definite when the weights leave a null space (e.g. affine
    // functions under pure curvature)
    let max_diag = band.iter().map(|r| r[0]).fold(0.0, f64::max);
    for r in band.iter_mut() {
        r[0] += 1e-10 * max_diag;
    }
    BandedCholesky::factor(band)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
