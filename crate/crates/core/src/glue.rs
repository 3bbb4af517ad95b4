//! Smooth connector from a prescribed value and slope to zero.
//!
//! The connector is the truncated affine function g(y) = m·y + A on
//! (-T/2, T/2), mollified at radius T/4 with the standard bump and restricted
//! to [0, T]. Near 0 the mollifier only sees the affine part, so f(0) = A and
//! f'(0) = m; from 3T/4 on it only sees zero.

use std::sync::OnceLock;

use crate::energy::integrals;
use crate::error::{Error, Result};
use crate::profile::{Grid, HermiteProfile};
use crate::quadrature::GaussRule;

const CONVOLUTION_POINTS: usize = 64;
pub const DEFAULT_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueSpec {
    /// Value matched at 0.
    pub value: f64,
    /// Slope matched at 0.
    pub slope: f64,
    /// Connector length T.
    pub length: f64,
    /// Number of Hermite nodes used to sample the connector.
    pub samples: usize,
}

impl GlueSpec {
    pub fn new(value: f64, slope: f64, length: f64) -> Self {
        GlueSpec { value, slope, length, samples: DEFAULT_SAMPLES }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::arg(format!("glue length must be positive, got {}", self.length)));
        }
        if !self.value.is_finite() || !self.slope.is_finite() {
            return Err(Error::arg("glue value and slope must be finite"));
        }
        if self.samples < 64 {
            return Err(Error::arg(format!("glue needs at least 64 samples, got {}", self.samples)));
        }
        Ok(())
    }
}

fn bump(z: f64) -> f64 {
    if z.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - z * z)).exp()
    }
}

fn rule() -> &'static (GaussRule, f64) {
    static RULE: OnceLock<(GaussRule, f64)> = OnceLock::new();
    RULE.get_or_init(|| {
        let rule = GaussRule::new(CONVOLUTION_POINTS);
        // normalize with the same rule so that full windows integrate to 1 exactly
        let mass = rule.integrate(-1.0, 1.0, bump);
        (rule, 1.0 / mass)
    })
}

/// The mollified connector evaluated pointwise.
#[derive(Debug, Clone, Copy)]
struct Connector {
    a: f64,
    m: f64,
    half: f64,
    radius: f64,
}

impl Connector {
    fn new(spec: &GlueSpec) -> Self {
        Connector {
            a: spec.value,
            m: spec.slope,
            half: 0.5 * spec.length,
            radius: 0.25 * spec.length,
        }
    }

    /// Range of z in (-1, 1) for which x - r z lies inside (-T/2, T/2).
    fn window(&self, x: f64) -> Option<(f64, f64)> {
        let lo = ((x - self.half) / self.radius).max(-1.0);
        let hi = ((x + self.half) / self.radius).min(1.0);
        (hi > lo).then_some((lo, hi))
    }

    fn value(&self, x: f64) -> f64 {
        let (rule, z) = rule();
        match self.window(x) {
            None => 0.0,
            Some((lo, hi)) => {
                z * rule.integrate(lo, hi, |s| (self.m * (x - self.radius * s) + self.a) * bump(s))
            }
        }
    }

    /// f' = m ∫φ_r over the window plus the boundary terms from the truncation of g.
    fn slope(&self, x: f64) -> f64 {
        let (rule, z) = rule();
        let Some((lo, hi)) = self.window(x) else {
            return 0.0;
        };
        let mass = z * rule.integrate(lo, hi, bump);
        let kernel = |d: f64| z * bump(d / self.radius) / self.radius;
        let g_right = self.m * self.half + self.a;
        let g_left = -self.m * self.half + self.a;
        self.m * mass - g_right * kernel(x - self.half) + g_left * kernel(x + self.half)
    }
}

/// Builds the connector on (0, T) and samples it into a Hermite profile.
pub fn build_glue(spec: &GlueSpec) -> Result<HermiteProfile> {
    spec.validate()?;
    let grid = Grid::new(0.0, spec.length, spec.samples - 1)?;
    let c = Connector::new(spec);
    HermiteProfile::from_fn(grid, |x| c.value(x), |x| c.slope(x))
}

/// ∫|f^{(k)}|² / ((A² + m²T²) T^{1-2k}), the empirical constant C_k.
pub fn glue_bound_ratio(spec: &GlueSpec, k: usize) -> Result<f64> {
    if k > 2 {
        return Err(Error::arg(format!("derivative order must be 0, 1 or 2, got {k}")));
    }
    if spec.value == 0.0 && spec.slope == 0.0 {
        return Err(Error::arg("glue ratio is undefined for A = m = 0"));
    }
    let f = build_glue(spec)?;
    Ok(ratio_of(&f, spec, k))
}

fn ratio_of(f: &HermiteProfile, spec: &GlueSpec, k: usize) -> f64 {
    let i = integrals(f);
    let numerator = [i.l2, i.dirichlet, i.curvature][k];
    let t = spec.length;
    let scale = spec.value.powi(2) + spec.slope.powi(2) * t * t;
    numerator / (scale * t.powi(1 - 2 * k as i32))
}

/// One row of a glue sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GlueReport {
    pub spec: GlueSpec,
    pub f0: f64,
    pub df0: f64,
    pub f_end: f64,
    pub df_end: f64,
    pub sup_f: f64,
    pub ratio_k0: f64,
    pub ratio_k2: f64,
}

impl GlueReport {
    pub const CSV_HEADER: &'static str = "A,m,T,f0,df0,fT,dfT,sup_f,ratio_k0,ratio_k2";

    /// `sup_f` is taken over 200 equispaced points including both ends.
    pub fn of(spec: &GlueSpec) -> Result<Self> {
        let f = build_glue(spec)?;
        let t = spec.length;
        let mut sup_f = 0.0f64;
        for i in 0..200 {
            let x = (t * i as f64 / 199.0).min(t);
            sup_f = sup_f.max(f.eval(x, 0)?.abs());
        }
        let degenerate = spec.value == 0.0 && spec.slope == 0.0;
        let ratio = |k| if degenerate { f64::NAN } else { ratio_of(&f, spec, k) };
        Ok(GlueReport {
            spec: *spec,
            f0: f.eval(0.0, 0)?,
            df0: f.eval(0.0, 1)?,
            f_end: f.eval(t, 0)?,
            df_end: f.eval(t, 1)?,
            sup_f,
            ratio_k0: ratio(0),
            ratio_k2: ratio(2),
        })
    }

    /// |A| + |m|T/2, the sup bound.
    pub fn sup_bound(&self) -> f64 {
        self.spec.value.abs() + 0.5 * self.spec.slope.abs() * self.spec.length
    }

    pub fn endpoint_error(&self) -> f64 {
        [
            self.f0 - self.spec.value,
            self.df0 - self.spec.slope,
            self.f_end,
            self.df_end,
        ]
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.abs()))
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            self.spec.value,
            self.spec.slope,
            self.spec.length,
            self.f0,
            self.df0,
            self.f_end,
            self.df_end,
            self.sup_f,
            self.ratio_k0,
            self.ratio_k2
        )
    }
}

/// Random specs with A, m uniform on [-2, 2] and T log-uniform on [0.1, 10].
pub fn random_specs(count: usize, seed: u64) -> Vec<GlueSpec> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(-2.0..=2.0);
            let m = rng.gen_range(-2.0..=2.0);
            let t = 10f64.powf(rng.gen_range(-1.0..=1.0));
            GlueSpec::new(a, m, t)
        })
        .collect()
}

/// Largest jump of the sampled f'' across interior nodes.
pub fn curvature_jump(f: &HermiteProfile) -> f64 {
    let n = f.grid().n_cells();
    (1..n)
        .map(|i| (f.eval_local(i - 1, 1.0, 2) - f.eval_local(i, 0.0, 2)).abs())
        .fold(0.0, f64::max)
}

/// Extreme values of the empirical C_k over all (A, m) at fixed k.
///
/// The ratio is a Rayleigh quotient of a 2×2 Gram form in (A, mT) that does
/// not depend on T, so its range over any sweep lies in the returned
/// eigenvalue interval.
pub fn ratio_range(k: usize, samples: usize) -> Result<(f64, f64)> {
    let r = |a: f64, m: f64| glue_bound_ratio(&GlueSpec { samples, ..GlueSpec::new(a, m, 1.0) }, k);
    let g11 = r(1.0, 0.0)?;
    let g22 = r(0.0, 1.0)?;
    let g12 = r(1.0, 1.0)? - 0.5 * (g11 + g22);
    let mean = 0.5 * (g11 + g22);
    let disc = (0.25 * (g11 - g22).powi(2) + g12 * g12).sqrt();
    Ok((mean - disc, mean + disc))
}
