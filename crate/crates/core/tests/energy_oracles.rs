mod common;

use common::{gradient_error, oracle_integrals, random_profile, rel};
use phasefield::energy::{dirichlet_energy, energy_gradient, f_eps, integrals, phi, psi};
use phasefield::{BoundarySpec, Functional, Grid, HermiteProfile};

const FD_RTOL: f64 = 1e-5;

#[test]
fn analytic_gradients_match_central_differences() {
    let functionals = [
        Functional::Potential,
        Functional::Curvature,
        Functional::Phi,
        Functional::Psi,
        Functional::FEps(0.3),
        Functional::FirstOrder,
    ];
    let grid = Grid::unit(16).unwrap();
    for seed in 0..20 {
        let p = random_profile(grid, seed);
        for f in functionals {
            let err = gradient_error(f, &p);
            assert!(err < FD_RTOL, "{} seed {seed}: {err:e}", f.name());
        }
    }
}

#[test]
fn masked_gradient_keeps_only_free_entries() {
    let p = random_profile(Grid::unit(8).unwrap(), 3);
    let mask = BoundarySpec::clamped(-1.0, 1.0).free_mask(p.grid().n_nodes());
    let (_, full) = Functional::Psi.value_and_gradient(&p).unwrap();
    let free = energy_gradient(&p, Functional::Psi, &mask).unwrap();
    assert_eq!(free.len(), p.n_dofs() - 4);
    assert_eq!(free[..], full[2..full.len() - 2]);
    assert!(energy_gradient(&p, Functional::Psi, &mask[1..]).is_err());
}

#[test]
fn quadratic_closed_forms() {
    let p = HermiteProfile::from_fn(Grid::unit(7).unwrap(), |x| x * x, |x| 2.0 * x).unwrap();
    let i = integrals(&p);
    assert!(rel(i.potential, 32.0 / 45.0) < 1e-13);
    assert!(rel(i.curvature, 4.0) < 1e-13);
    assert!(rel(i.dirichlet, 4.0 / 3.0) < 1e-13);
    assert!(rel(i.l2, 0.2) < 1e-13);
    let expect_phi = (32.0f64 / 45.0).powf(0.75) * 4f64.powf(0.25);
    assert!(rel(phi(&p).unwrap(), expect_phi) < 1e-13);
}

#[test]
fn gauss_quadrature_agrees_with_simpson_oracle() {
    for seed in 0..10 {
        let p = random_profile(Grid::new(-0.5, 1.5, 12).unwrap(), 100 + seed);
        let i = integrals(&p);
        let (po, co, dob, l2) = oracle_integrals(&p);
        assert!(rel(i.potential, po) < 1e-9, "P {} vs {}", i.potential, po);
        assert!(rel(i.curvature, co) < 1e-9, "C {} vs {}", i.curvature, co);
        assert!(rel(i.dirichlet, dob) < 1e-9, "D {} vs {}", i.dirichlet, dob);
        assert!(rel(i.l2, l2) < 1e-9);
        assert!(rel(dirichlet_energy(&p), dob) < 1e-9);
    }
}

#[test]
fn f_eps_equals_psi_on_stretched_domain() {
    let eps = 0.07;
    for seed in 0..10 {
        let p = random_profile(Grid::new(0.2, 0.9, 20).unwrap(), 200 + seed);
        let stretched = p.rescale(0.0, 0.7 / eps).unwrap();
        let lhs = f_eps(&p, eps).unwrap();
        assert!(rel(lhs, psi(&stretched)) < 1e-12);
    }
}

#[test]
fn phi_rejects_other_domains_and_bad_eps() {
    let p = random_profile(Grid::new(0.0, 2.0, 4).unwrap(), 1);
    assert!(phi(&p).is_err());
    assert!(f_eps(&p, 0.0).is_err());
    assert!(f_eps(&p, f64::NAN).is_err());
    assert!(Functional::FEps(-1.0).value(&p).is_err());
}
