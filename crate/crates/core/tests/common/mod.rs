#![allow(dead_code)]

use phasefield::{Functional, Grid, HermiteProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nodal values uniform on [-1.5, 1.5] and slopes uniform on [-3, 3].
pub fn random_profile(grid: Grid, seed: u64) -> HermiteProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_nodes();
    let values = (0..n).map(|_| rng.gen_range(-1.5..=1.5)).collect();
    let derivs = (0..n).map(|_| rng.gen_range(-3.0..=3.0)).collect();
    HermiteProfile::new(grid, values, derivs).unwrap()
}

/// Composite Simpson rule on `sub` panels per cell applied to f(u, u', u'').
pub fn simpson(p: &HermiteProfile, sub: usize, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let g = p.grid();
    let mut total = 0.0;
    for cell in 0..g.n_cells() {
        let (a, b) = (g.node(cell), g.node(cell + 1));
        let h = (b - a) / (2 * sub) as f64;
        let at = |k: usize| {
            // u'' jumps at nodes, so both ends are nudged into the cell
            let nudge = 1e-13 * (b - a);
            let x = match k {
                0 => a + nudge,
                k if k == 2 * sub => b - nudge,
                k => a + k as f64 * h,
            };
            f(p.eval(x, 0).unwrap(), p.eval(x, 1).unwrap(), p.eval(x, 2).unwrap())
        };
        let mut s = at(0) + at(2 * sub);
        for k in 1..2 * sub {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * at(k);
        }
        total += s * h / 3.0;
    }
    total
}

/// (P, C, D, ∫u²) by Simpson quadrature.
pub fn oracle_integrals(p: &HermiteProfile) -> (f64, f64, f64, f64) {
    (
        simpson(p, 512, |u, _, _| (u * u - 1.0).powi(2)),
        simpson(p, 512, |_, _, c| c * c),
        simpson(p, 512, |_, d, _| d * d),
        simpson(p, 512, |u, _, _| u * u),
    )
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

const FD_STEP: f64 = 1e-6;

/// Central differences over every degree of freedom.
pub fn fd_gradient(f: Functional, p: &HermiteProfile) -> Vec<f64> {
    let x = p.dofs();
    let e = |d: &[f64]| f.value(&HermiteProfile::from_dofs(*p.grid(), d).unwrap()).unwrap();
    (0..x.len())
        .map(|k| {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[k] += FD_STEP;
            dn[k] -= FD_STEP;
            (e(&up) - e(&dn)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// max |analytic - fd| / ‖analytic‖∞
pub fn gradient_error(f: Functional, p: &HermiteProfile) -> f64 {
    let (_, ga) = f.value_and_gradient(p).unwrap();
    let gfd = fd_gradient(f, p);
    let scale = ga.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    ga.iter().zip(&gfd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}
