//! Integral functionals of Hermite profiles and their exact gradients.
//!
//! With W(u) = (u² - 1)², the building blocks are
//!
//! * potential  P = ∫ W(u) dx
//! * curvature  C = ∫ |u''|² dx
//! * Dirichlet  D = ∫ |u'|² dx (first-order problem and interpolation checks)
//!
//! and the functionals assembled from them:
//!
//! * Φ   = P^{3/4} C^{1/4} (scale-free wall functional on the unit interval)
//! * Ψ   = P + C
//! * F_ε = P / ε + ε³ C
//!
//! Integrals use an 8-point Gauss–Legendre rule per cell. For a cubic u the
//! integrand of P has degree 12 ≤ 15, so every integral here is exact up to
//! roundoff for the discrete representation.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::profile::{hermite_basis, HermiteProfile};
use crate::quadrature::GaussRule;

pub const POINTS_PER_CELL: usize = 8;

/// Per-cell Gauss–Legendre rule with the Hermite basis tabulated at its points.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points_per_cell: usize,
    pub abscissae: Vec<f64>,
    pub weights: Vec<f64>,
    basis: Vec<[[f64; 4]; 3]>,
}

impl QuadratureRule {
    pub fn new(points_per_cell: usize) -> Result<Self> {
        if points_per_cell < POINTS_PER_CELL {
            return Err(Error::arg(format!(
                "need at least {POINTS_PER_CELL} points per cell, got {points_per_cell}"
            )));
        }
        let rule = GaussRule::new(points_per_cell);
        let basis = rule.points.iter().map(|&t| hermite_basis(t)).collect();
        Ok(QuadratureRule {
            points_per_cell,
            abscissae: rule.points,
            weights: rule.weights,
            basis,
        })
    }

    /// The shared default 8-point rule.
    pub fn standard() -> &'static QuadratureRule {
        static RULE: OnceLock<QuadratureRule> = OnceLock::new();
        RULE.get_or_init(|| QuadratureRule::new(POINTS_PER_CELL).unwrap())
    }
}

/// Raw integrals of one profile, accumulated in a single pass over the cells.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Integrals {
    pub potential: f64,
    pub curvature: f64,
    pub dirichlet: f64,
    /// ∫ u² dx
    pub l2: f64,
}

pub fn integrals(p: &HermiteProfile) -> Integrals {
    let q = QuadratureRule::standard();
    let h = p.grid().h();
    let (inv_h, inv_h2) = (1.0 / h, 1.0 / (h * h));
    let mut out = Integrals::default();
    for cell in 0..p.grid().n_cells() {
        let c = p.cell_coeffs(cell);
        let mut acc = Integrals::default();
        for (w, b) in q.weights.iter().zip(&q.basis) {
            let [u, du, ddu] = combine(&c, b);
            let du = du * inv_h;
            let ddu = ddu * inv_h2;
            let wu = u * u - 1.0;
            acc.potential += w * wu * wu;
            acc.curvature += w * ddu * ddu;
            acc.dirichlet += w * du * du;
            acc.l2 += w * u * u;
        }
        out.potential += h * acc.potential;
        out.curvature += h * acc.curvature;
        out.dirichlet += h * acc.dirichlet;
        out.l2 += h * acc.l2;
    }
    out
}

#[inline]
fn combine(c: &[f64; 4], b: &[[f64; 4]; 3]) -> [f64; 3] {
    let dot = |r: &[f64; 4]| c[0] * r[0] + c[1] * r[1] + c[2] * r[2] + c[3] * r[3];
    [dot(&b[0]), dot(&b[1]), dot(&b[2])]
}

/// Gradient of `wp·P + wc·C + wd·D` with respect to every degree of freedom.
pub(crate) fn weighted_gradient(p: &HermiteProfile, wp: f64, wc: f64, wd: f64) -> Vec<f64> {
    let q = QuadratureRule::standard();
    let h = p.grid().h();
    let (inv_h, inv_h2) = (1.0 / h, 1.0 / (h * h));
    let mut grad = vec![0.0; p.n_dofs()];
    for cell in 0..p.grid().n_cells() {
        let c = p.cell_coeffs(cell);
        let mut local = [0.0; 4];
        for (w, b) in q.weights.iter().zip(&q.basis) {
            let [u, du, ddu] = combine(&c, b);
            // integrand derivatives with respect to u, u', u'' (physical)
            let gu = wp * 4.0 * u * (u * u - 1.0);
            let gdu = wd * 2.0 * du * inv_h * inv_h;
            let gddu = wc * 2.0 * ddu * inv_h2 * inv_h2;
            for k in 0..4 {
                local[k] += w * (gu * b[0][k] + gdu * b[1][k] + gddu * b[2][k]);
            }
        }
        // local coefficient k maps to dof 2*cell + k; slope dofs carry a factor h
        grad[2 * cell] += h * local[0];
        grad[2 * cell + 1] += h * h * local[1];
        grad[2 * cell + 2] += h * local[2];
        grad[2 * cell + 3] += h * h * local[3];
    }
    grad
}

/// Integrates `f(u, u', u'')` over `[lo, hi] ∩ domain`, splitting partial cells.
pub fn integrate_window(
    p: &HermiteProfile,
    lo: f64,
    hi: f64,
    f: impl Fn(f64, f64, f64) -> f64,
) -> f64 {
    let g = p.grid();
    let lo = lo.max(g.x_lo());
    let hi = hi.min(g.x_hi());
    if hi <= lo {
        return 0.0;
    }
    let q = QuadratureRule::standard();
    let h = g.h();
    let mut total = 0.0;
    for cell in 0..g.n_cells() {
        let a = g.node(cell).max(lo);
        let b = g.node(cell + 1).min(hi);
        if b <= a {
            continue;
        }
        let (ta, tb) = ((a - g.node(cell)) / h, (b - g.node(cell)) / h);
        let mut acc = 0.0;
        for (&s, &w) in q.abscissae.iter().zip(&q.weights) {
            let t = ta + (tb - ta) * s;
            acc += w
                * f(
                    p.eval_local(cell, t, 0),
                    p.eval_local(cell, t, 1),
                    p.eval_local(cell, t, 2),
                );
        }
        total += acc * (b - a);
    }
    total
}

pub fn potential_energy(p: &HermiteProfile) -> f64 {
    integrals(p).potential
}

pub fn curvature_energy(p: &HermiteProfile) -> f64 {
    integrals(p).curvature
}

pub fn dirichlet_energy(p: &HermiteProfile) -> f64 {
    integrals(p).dirichlet
}

fn phi_of(potential: f64, curvature: f64) -> f64 {
    potential.powf(0.75) * curvature.powf(0.25)
}

/// Φ(u) = (∫₀¹ (u² - 1)²)^{3/4} (∫₀¹ |u''|²)^{1/4}; the profile must live on (0, 1).
pub fn phi(p: &HermiteProfile) -> Result<f64> {
    require_unit_domain(p)?;
    let i = integrals(p);
    Ok(phi_of(i.potential, i.curvature))
}

pub fn psi(p: &HermiteProfile) -> f64 {
    let i = integrals(p);
    i.potential + i.curvature
}

pub fn f_eps(p: &HermiteProfile, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let i = integrals(p);
    Ok(i.potential / eps + eps.powi(3) * i.curvature)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("epsilon must be positive and finite, got {eps}")))
    }
}

fn require_unit_domain(p: &HermiteProfile) -> Result<()> {
    let g = p.grid();
    if g.same_domain(0.0, 1.0) {
        Ok(())
    } else {
        Err(Error::WrongDomain {
            lo: g.x_lo(),
            hi: g.x_hi(),
            want_lo: 0.0,
            want_hi: 1.0,
        })
    }
}

/// All energies of one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub potential: f64,
    pub curvature: f64,
    pub phi: f64,
    pub psi: f64,
    pub epsilon: Option<f64>,
    pub f_eps: Option<f64>,
}

impl EnergyBreakdown {
    /// `phi` is the product P^{3/4} C^{1/4} over the profile's own domain.
    pub fn of(p: &HermiteProfile, epsilon: Option<f64>) -> Result<Self> {
        if let Some(e) = epsilon {
            check_eps(e)?;
        }
        let i = integrals(p);
        Ok(EnergyBreakdown {
            potential: i.potential,
            curvature: i.curvature,
            phi: phi_of(i.potential, i.curvature),
            psi: i.potential + i.curvature,
            epsilon,
            f_eps: epsilon.map(|e| i.potential / e + e.powi(3) * i.curvature),
        })
    }

    pub const CSV_HEADER: &'static str = "P,C,phi,psi,eps,f_eps";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.potential,
            self.curvature,
            self.phi,
            self.psi,
            opt(self.epsilon),
            opt(self.f_eps)
        )
    }
}

/// A discretised functional that the optimizer can minimize.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Potential,
    Curvature,
    Phi,
    Psi,
    FEps(f64),
    /// ∫ (u² - 1)² + |u'|²: the first-order (Modica–Mortola) energy at ε = 1.
    FirstOrder,
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::Potential => "potential",
            Functional::Curvature => "curvature",
            Functional::Phi => "phi",
            Functional::Psi => "psi",
            Functional::FEps(_) => "f_eps",
            Functional::FirstOrder => "first_order",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Functional::FEps(e) => check_eps(*e),
            _ => Ok(()),
        }
    }

    pub fn value_from(&self, i: &Integrals) -> f64 {
        match *self {
            Functional::Potential => i.potential,
            Functional::Curvature => i.curvature,
            Functional::Phi => phi_of(i.potential, i.curvature),
            Functional::Psi => i.potential + i.curvature,
            Functional::FEps(e) => i.potential / e + e.powi(3) * i.curvature,
            Functional::FirstOrder => i.potential + i.dirichlet,
        }
    }

    /// Value of the functional. Φ is evaluated as P^{3/4} C^{1/4} over the
    /// profile's own domain; use [`phi`] for the domain-checked version.
    pub fn value(&self, p: &HermiteProfile) -> Result<f64> {
        self.validate()?;
        Ok(self.value_from(&integrals(p)))
    }

    /// Weights (w_P, w_C, w_D) of the linearisation at the given integrals.
    pub(crate) fn gradient_weights(&self, i: &Integrals) -> Result<(f64, f64, f64)> {
        Ok(match *self {
            Functional::Potential => (1.0, 0.0, 0.0),
            Functional::Curvature => (0.0, 1.0, 0.0),
            Functional::Phi => {
                let (pp, cc) = (i.potential, i.curvature);
                if !(pp > 0.0 && cc > 0.0) {
                    return Err(Error::Singular {
                        potential: pp,
                        curvature: cc,
                    });
                }
                (0.75 * (cc / pp).powf(0.25), 0.25 * (pp / cc).powf(0.75), 0.0)
            }
            Functional::Psi => (1.0, 1.0, 0.0),
            Functional::FEps(e) => (1.0 / e, e.powi(3), 0.0),
            Functional::FirstOrder => (1.0, 0.0, 1.0),
        })
    }

    /// Value and gradient over every degree of freedom.
    pub fn value_and_gradient(&self, p: &HermiteProfile) -> Result<(f64, Vec<f64>)> {
        self.validate()?;
        let i = integrals(p);
        let (wp, wc, wd) = self.gradient_weights(&i)?;
        Ok((self.value_from(&i), weighted_gradient(p, wp, wc, wd)))
    }
}

/// Exact gradient of the discretised functional restricted to the free
/// degrees of freedom (in interleaved order).
pub fn energy_gradient(p: &HermiteProfile, functional: Functional, free_mask: &[bool]) -> Result<Vec<f64>> {
    if free_mask.len() != p.n_dofs() {
        return Err(Error::arg(format!(
            "mask has {} entries for {} degrees of freedom",
            free_mask.len(),
            p.n_dofs()
        )));
    }
    let (_, g) = functional.value_and_gradient(p)?;
    Ok(g.into_iter()
        .zip(free_mask)
        .filter_map(|(v, &free)| free.then_some(v))
        .collect())
}
