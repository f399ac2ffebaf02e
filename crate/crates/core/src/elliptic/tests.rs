use std::sync::Arc;

use super::*;
use crate::geometry::{build_mesh, sample_region, DomainKind, Mesh, RegionDescriptor};
use crate::Error;

fn mesh(domain: DomainKind, h: f64) -> Arc<Mesh> {
    Arc::new(build_mesh(domain, h).unwrap())
}

fn vertex_at(mesh: &Mesh, p: [f64; 2]) -> usize {
    mesh.vertices()
        .iter()
        .position(|q| (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12)
        .unwrap()
}

#[test]
fn laplace_reproduces_affine_data() {
    for domain in [DomainKind::Disk, DomainKind::Square] {
        let m = mesh(domain, 0.1);
        let sys = DirichletSystem::new(&m, &CoefficientField::laplace()).unwrap();
        for f in [|_: [f64; 2]| 1.0, |p: [f64; 2]| p[0], |p: [f64; 2]| 2.0 * p[1] - p[0] + 0.5] {
            let sol = solve_dirichlet(&sys, &BoundaryDatum::nodal_from_fn(&m, f)).unwrap();
            for (p, u) in m.vertices().iter().zip(sol.nodal_values()) {
                assert!((u - f(*p)).abs() < 1e-12, "{domain:?} at {p:?}");
            }
            assert!(sys.relative_residual(&sol) < 1e-14);
        }
    }
}

#[test]
fn x1_gradient_is_exact() {
    let m = mesh(DomainKind::Disk, 0.2);
    let sys = DirichletSystem::new(&m, &CoefficientField::laplace()).unwrap();
    let g = BoundaryDatum::fourier(1, vec![0.0, 1.0, 0.0]).unwrap();
    let sol = solve_dirichlet(&sys, &g).unwrap();
    for grad in sol.element_gradients() {
        assert!((grad[0] - 1.0).abs() < 1e-11 && grad[1].abs() < 1e-11);
    }
}

#[test]
fn coarse_square_stiffness_by_hand() {
    // Every cell diagonal meets the centre. Cotangent formula: centre row has
    // 4 on the diagonal, -1 to the edge midpoints and 0 along the diagonals.
    let m = mesh(DomainKind::Square, 0.5);
    let sys = assemble(&m, &CoefficientField::laplace()).unwrap();
    let a = sys.matrix();
    let c = vertex_at(&m, [0.5, 0.5]);
    assert!((a.get(c, c) - 4.0).abs() < 1e-14);
    for p in [[0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5]] {
        assert!((a.get(c, vertex_at(&m, p)) + 1.0).abs() < 1e-14);
    }
    for p in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
        assert!(a.get(c, vertex_at(&m, p)).abs() < 1e-14);
    }
    // rows of the pure stiffness matrix annihilate constants
    for r in 0..a.nrows() {
        assert!(a.row(r).map(|(_, v)| v).sum::<f64>().abs() < 1e-13);
    }
    assert_eq!(sys.interior(), &[c]);
}

#[test]
fn coarse_square_mass_entry() {
    // midpoint rule: ∫φ_c² over the 8 triangles at the centre = 8 · (1/8)/3 · 1/2
    let m = mesh(DomainKind::Square, 0.5);
    let k2: f64 = 3.0;
    let sys = assemble(&m, &CoefficientField::helmholtz(k2.sqrt())).unwrap();
    let c = vertex_at(&m, [0.5, 0.5]);
    assert!((sys.matrix().get(c, c) - (4.0 - k2 / 6.0)).abs() < 1e-13);
}

#[test]
fn first_order_terms_break_symmetry() {
    let m = mesh(DomainKind::Square, 0.25);
    let sym = assemble(&m, &CoefficientField::laplace().with_q(|p| 1.0 + p[0])).unwrap();
    assert!(sym.matrix().asymmetry_norm() < 1e-14);
    let drift = assemble(&m, &CoefficientField::laplace().with_c(|_| [1.0, 0.5])).unwrap();
    assert!(drift.matrix().asymmetry_norm() > 1e-3);
    let flux = assemble(&m, &CoefficientField::laplace().with_b(|_| [0.0, 1.0])).unwrap();
    assert!(flux.matrix().asymmetry_norm() > 1e-3);
}

#[test]
fn divergence_form_drift_pair_is_adjoint() {
    // with b = c the bilinear form is symmetric in u and v up to transposition
    let m = mesh(DomainKind::Square, 0.25);
    let b = assemble(&m, &CoefficientField::laplace().with_b(|p| [p[1], 1.0])).unwrap();
    let c = assemble(&m, &CoefficientField::laplace().with_c(|p| [p[1], 1.0])).unwrap();
    let bt = b.matrix().transpose();
    for r in 0..bt.nrows() {
        for (col, v) in bt.row(r) {
            assert!((v - c.matrix().get(r, col)).abs() < 1e-13);
        }
    }
}

#[test]
fn rejects_non_elliptic_coefficients() {
    let m = mesh(DomainKind::Square, 0.25);
    let bad = CoefficientField::diffusion(|p| Sym2::scalar(p[0] - 0.5), 0.1, RegularityClass::smooth());
    match assemble(&m, &bad) {
        Err(Error::NotElliptic { eigenvalue, claimed, .. }) => {
            assert!(eigenvalue < 0.1);
            assert_eq!(claimed, 0.1);
        }
        other => panic!("expected NotElliptic, got {other:?}"),
    }
}

#[test]
fn coarse_square_helmholtz_resonance_is_singular() {
    // single interior unknown: 4 - k²/6 vanishes at k² = 24
    let m = mesh(DomainKind::Square, 0.5);
    match DirichletSystem::new(&m, &CoefficientField::helmholtz(24f64.sqrt())) {
        Err(Error::SingularSystem { condition_estimate }) => assert!(condition_estimate > 1e12),
        other => panic!("expected SingularSystem, got {other:?}"),
    }
    assert!(DirichletSystem::new(&m, &CoefficientField::helmholtz(4.0)).is_ok());
}

#[test]
fn helmholtz_plane_wave_converges() {
    let k = 2.0;
    let exact = move |p: [f64; 2]| (k * p[0]).cos();
    let mut errors = Vec::new();
    for h in [0.2, 0.1, 0.05] {
        let m = mesh(DomainKind::Disk, h);
        let sys = DirichletSystem::new(&m, &CoefficientField::helmholtz(k)).unwrap();
        let sol = solve_dirichlet(&sys, &BoundaryDatum::nodal_from_fn(&m, exact)).unwrap();
        let err = m
            .vertices()
            .iter()
            .zip(sol.nodal_values())
            .map(|(p, u)| (u - exact(*p)).abs())
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    assert!(errors[2] < 5e-3, "{errors:?}");
    assert!(errors[0] / errors[1] > 3.0 && errors[1] / errors[2] > 3.0, "{errors:?}");
}

#[test]
fn superposition_holds() {
    let m = mesh(DomainKind::Disk, 0.1);
    let coeffs = CoefficientField::diffusion(
        |p| Sym2::rotated(p[0], 1.0, 2.0),
        0.9,
        RegularityClass::smooth(),
    )
    .with_c(|p| [p[1], 0.3])
    .with_q(|_| 0.5);
    let sys = DirichletSystem::new(&m, &coeffs).unwrap();
    let g1 = BoundaryDatum::fourier(3, vec![0.1, 1.0, -0.5, 0.0, 0.2, 0.7, -1.0]).unwrap();
    let g2 = BoundaryDatum::fourier(3, vec![1.0, 0.0, 0.3, -0.4, 0.0, 0.0, 0.5]).unwrap();
    let combo = BoundaryDatum::linear_combination(&[(1.0, &g1), (-2.5, &g2)]).unwrap();
    let u1 = solve_dirichlet(&sys, &g1).unwrap();
    let u2 = solve_dirichlet(&sys, &g2).unwrap();
    let direct = solve_dirichlet(&sys, &combo).unwrap();
    let summed = SolutionField::linear_combination(&[(1.0, &u1), (-2.5, &u2)]).unwrap();
    for (a, b) in direct.nodal_values().iter().zip(summed.nodal_values()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(direct.datum(), summed.datum());
}

#[test]
fn evaluation_checks_mesh_identity() {
    let m = mesh(DomainKind::Disk, 0.1);
    let other = mesh(DomainKind::Disk, 0.05);
    let region = sample_region(
        &m,
        RegionDescriptor::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        },
    )
    .unwrap();
    let sys = DirichletSystem::new(&m, &CoefficientField::laplace()).unwrap();
    let sol = solve_dirichlet(&sys, &BoundaryDatum::nodal_from_fn(&m, |p| p[1])).unwrap();
    let records = evaluate(&sol, &region).unwrap();
    assert_eq!(records.len(), region.len());
    for r in &records {
        assert!((r.value - r.point[1]).abs() < 1e-12);
    }
    let sol_other = SolutionField::interpolate(&other, |p| p[1], RegularityClass::smooth());
    assert!(matches!(evaluate(&sol_other, &region), Err(Error::RegionMismatch)));

    let csv = field_csv(&records[..1]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u,ux,uy"));
    let fields: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(fields[0], records[0].point[0]);
    assert_eq!(fields[2], records[0].value);
}
