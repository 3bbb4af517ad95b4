//! Interpolation inequalities measured on random and computed profiles.
//!
//! Each check reduces to a ratio lhs / rhs whose supremum over an ensemble is
//! an empirical version of the inequality's constant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::energy::{f_eps, integrals, integrate_window};
use crate::error::{Error, Result};
use crate::profile::{Grid, HermiteProfile};

const ENSEMBLE_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    pub name: String,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl RatioSample {
    pub const CSV_HEADER: &'static str = "name,seed,lhs,rhs,ratio";

    fn new(name: impl Into<String>, seed: u64, lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
        RatioSample { name: name.into(), seed, lhs, rhs, ratio }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.12e},{:.12e},{:.12e}",
            self.name, self.seed, self.lhs, self.rhs, self.ratio
        )
    }
}

/// Whether u' vanishes somewhere on the closed domain.
///
/// On each cell u' is a quadratic, so its range is spanned by the two end
/// values and the interior vertex if there is one.
pub fn derivative_has_zero(p: &HermiteProfile) -> bool {
    (0..p.grid().n_cells()).any(|cell| {
        let d0 = p.eval_local(cell, 0.0, 1);
        let d1 = p.eval_local(cell, 1.0, 1);
        let (mut lo, mut hi) = (d0.min(d1), d0.max(d1));
        let c0 = p.eval_local(cell, 0.0, 2);
        let c1 = p.eval_local(cell, 1.0, 2);
        if c0 != c1 {
            let t = c0 / (c0 - c1);
            if t > 0.0 && t < 1.0 {
                let dv = p.eval_local(cell, t, 1);
                lo = lo.min(dv);
                hi = hi.max(dv);
            }
        }
        lo <= 0.0 && hi >= 0.0
    })
}

fn inter1_parts(p: &HermiteProfile) -> Result<(f64, f64)> {
    if !derivative_has_zero(p) {
        return Err(Error::Precondition("u' has no zero on the domain".into()));
    }
    let i = integrals(p);
    if !(i.l2 > 0.0 && i.curvature > 0.0) {
        return Err(Error::Precondition(format!(
            "degenerate denominator: ∫u² = {:e}, ∫|u''|² = {:e}",
            i.l2, i.curvature
        )));
    }
    Ok((i.dirichlet, (i.l2 * i.curvature).sqrt()))
}

/// ∫|u'|² / ((∫u²)^{1/2} (∫|u''|²)^{1/2}) for profiles whose slope vanishes somewhere.
pub fn inter1_ratio(p: &HermiteProfile) -> Result<f64> {
    let (lhs, rhs) = inter1_parts(p)?;
    Ok(lhs / rhs)
}

fn inter2_parts(p: &HermiteProfile, l: f64) -> Result<(f64, f64)> {
    let len = p.grid().len();
    if !(l > 0.0 && l < len) {
        return Err(Error::arg(format!("l must lie in (0, {len}), got {l}")));
    }
    let i = integrals(p);
    let rhs = i.l2.sqrt() / l + l * i.curvature.sqrt();
    if rhs <= 0.0 {
        return Err(Error::arg("inter2 denominator vanishes (u ≡ 0)"));
    }
    Ok((i.dirichlet.sqrt(), rhs))
}

/// (∫|u'|²)^{1/2} / (l⁻¹(∫u²)^{1/2} + l(∫|u''|²)^{1/2}) for 0 < l < domain length.
pub fn inter2_ratio(p: &HermiteProfile, l: f64) -> Result<f64> {
    let (lhs, rhs) = inter2_parts(p, l)?;
    Ok(lhs / rhs)
}

/// Inner weighted Dirichlet energy over the full F_ε energy, per profile.
///
/// The inner region drops `inner_margin` from both ends.
pub fn inter3_check(seq: &[(HermiteProfile, f64)], inner_margin: f64) -> Result<Vec<RatioSample>> {
    seq.iter()
        .enumerate()
        .map(|(k, (p, eps))| {
            let g = p.grid();
            if !(inner_margin > 0.0 && inner_margin < 0.5 * g.len()) {
                return Err(Error::arg(format!(
                    "inner margin {inner_margin} must lie in (0, {})",
                    0.5 * g.len()
                )));
            }
            let energy = f_eps(p, *eps)?;
            if !energy.is_finite() {
                return Err(Error::arg("F_eps energy is not finite"));
            }
            let lhs = eps
                * integrate_window(p, g.x_lo() + inner_margin, g.x_hi() - inner_margin, |_, du, _| {
                    du * du
                });
            Ok(RatioSample::new(format!("inter3_eps{eps}"), k as u64, lhs, energy))
        })
        .collect()
}

/// u(x) = Σ_{j≤8} a_j cos(jπ(x - lo)/len) with a_j uniform on [-1, 1] scaled by 1/j².
///
/// Every member has u'(lo) = 0.
pub fn random_cosine_profile(grid: Grid, seed: u64) -> HermiteProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (1..=ENSEMBLE_MODES)
        .map(|j| rng.gen_range(-1.0..=1.0) / (j * j) as f64)
        .collect();
    cosine_series(grid, &coeffs)
}

/// Σ_j c_j cos(jπ(x - lo)/len), j starting at 1.
pub fn cosine_series(grid: Grid, coeffs: &[f64]) -> HermiteProfile {
    let (lo, len) = (grid.x_lo(), grid.len());
    let k = std::f64::consts::PI / len;
    let f = |x: f64| {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * ((i + 1) as f64 * k * (x - lo)).cos())
            .sum()
    };
    let df = |x: f64| {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let w = (i + 1) as f64 * k;
                -c * w * (w * (x - lo)).sin()
            })
            .sum()
    };
    HermiteProfile::from_fn(grid, f, df).expect("cosine series is finite")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub profiles: usize,
    pub n_cells: usize,
    pub seed: u64,
    /// Values of l as fractions of the domain length.
    pub l_fractions: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            profiles: 200,
            n_cells: 256,
            seed: 42,
            l_fractions: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

/// The closed-form cos(πx) case on (0, 1), whose inter1 ratio is exactly 1.
pub fn cosine_reference(n_cells: usize) -> Result<RatioSample> {
    let grid = Grid::unit(n_cells)?;
    let p = cosine_series(grid, &[1.0]);
    let (lhs, rhs) = inter1_parts(&p)?;
    Ok(RatioSample::new("inter1_cos", 0, lhs, rhs))
}

/// inter1 ratios over the random ensemble on (0, 1); seeds are `seed + i`.
pub fn inter1_sweep(cfg: &SweepConfig) -> Result<Vec<RatioSample>> {
    let grid = Grid::unit(cfg.n_cells)?;
    (0..cfg.profiles as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed + i;
            let p = random_cosine_profile(grid, seed);
            let (lhs, rhs) = inter1_parts(&p)?;
            Ok(RatioSample::new("inter1", seed, lhs, rhs))
        })
        .collect()
}

/// inter2 ratios over the random ensemble and the configured l fractions.
pub fn inter2_sweep(cfg: &SweepConfig) -> Result<Vec<RatioSample>> {
    let grid = Grid::unit(cfg.n_cells)?;
    let rows: Vec<Vec<RatioSample>> = (0..cfg.profiles as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed + i;
            let p = random_cosine_profile(grid, seed);
            cfg.l_fractions
                .iter()
                .map(|&frac| {
                    let (lhs, rhs) = inter2_parts(&p, frac * grid.len())?;
                    Ok(RatioSample::new(format!("inter2_l{frac}"), seed, lhs, rhs))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Largest ratio among samples, ignoring none.
pub fn sup_ratio(samples: &[RatioSample]) -> f64 {
    samples.iter().map(|s| s.ratio).fold(f64::NEG_INFINITY, f64::max)
}

/// Largest relative change of any sample's ratio when the cell count doubles.
pub fn refinement_change(cfg: &SweepConfig) -> Result<f64> {
    let fine = SweepConfig { n_cells: 2 * cfg.n_cells, ..cfg.clone() };
    let mut worst = 0.0f64;
    for (a, b) in inter1_sweep(cfg)?.iter().zip(&inter1_sweep(&fine)?) {
        worst = worst.max((a.ratio / b.ratio - 1.0).abs());
    }
    for (a, b) in inter2_sweep(cfg)?.iter().zip(&inter2_sweep(&fine)?) {
        worst = worst.max((a.ratio / b.ratio - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cosine_ratio_is_one() {
        let s = cosine_reference(512).unwrap();
        assert_relative_eq!(s.ratio, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn constant_profile_is_degenerate() {
        let p = HermiteProfile::constant(Grid::unit(16).unwrap(), 2.0);
        assert!(matches!(inter1_ratio(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn monotone_profile_fails_zero_hypothesis() {
        let g = Grid::unit(32).unwrap();
        let p = HermiteProfile::from_fn(g, |x| x + x * x, |x| 1.0 + 2.0 * x).unwrap();
        assert!(matches!(inter1_ratio(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn interior_vertex_zero_is_detected() {
        // u' = (x - 0.5)^2 - 0.001 dips below zero strictly inside a cell
        let g = Grid::unit(1).unwrap();
        let f = |x: f64| (x - 0.5).powi(3) / 3.0 - 0.001 * x;
        let p = HermiteProfile::from_fn(g, f, |x| (x - 0.5).powi(2) - 0.001).unwrap();
        assert!(derivative_has_zero(&p));
    }

    #[test]
    fn affine_inter2_closed_form() {
        let g = Grid::new(0.0, 2.0, 32).unwrap();
        let p = HermiteProfile::from_fn(g, |x| x, |_| 1.0).unwrap();
        let want = 2f64.sqrt() / (8.0f64 / 3.0).sqrt();
        assert_relative_eq!(inter2_ratio(&p, 1.0).unwrap(), want, max_relative = 1e-12);
        assert!(inter2_ratio(&p, 2.0).unwrap_err().is_argument_error());
        let zero = HermiteProfile::constant(g, 0.0);
        assert!(inter2_ratio(&zero, 1.0).unwrap_err().is_argument_error());
    }

    #[test]
    fn inter3_on_well_is_zero() {
        let p = HermiteProfile::constant(Grid::unit(16).unwrap(), 1.0);
        let r = inter3_check(&[(p.clone(), 0.1)], 0.1).unwrap();
        assert_eq!(r[0].ratio, 0.0);
        assert!(inter3_check(&[(p, 0.1)], 0.6).is_err());
    }

    #[test]
    fn random_ensemble_satisfies_zero_hypothesis() {
        let g = Grid::unit(64).unwrap();
        for seed in 0..20 {
            let p = random_cosine_profile(g, seed);
            assert!(p.derivs()[0].abs() < 1e-15);
            assert!(inter1_ratio(&p).unwrap().is_finite());
        }
    }

    #[test]
    fn sweeps_are_bounded_and_stable() {
        let cfg = SweepConfig { profiles: 30, n_cells: 64, ..SweepConfig::default() };
        let s1 = inter1_sweep(&cfg).unwrap();
        assert_eq!(s1.len(), 30);
        assert!(sup_ratio(&s1) < 10.0);
        assert_eq!(inter2_sweep(&cfg).unwrap().len(), 270);
        assert!(refinement_change(&cfg).unwrap() < 0.01);
    }
}
