use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use bcdesign::cli::{Expr, ScenarioConfig};
use bcdesign::constraints::{ConstraintMap, RegularityPolicy, SolutionFamily};
use bcdesign::elliptic::{solve_dirichlet, BoundaryDatum, CoefficientField, DirichletSystem, RegularityClass, SolutionField};
use bcdesign::geometry::{build_mesh, locate_point, sample_region, DomainKind, Mesh, RegionDescriptor, SampledRegion};
use bcdesign::whitney::{reduce_to_target, ReductionParams};

fn square() -> &'static Arc<Mesh> {
    static MESH: OnceLock<Arc<Mesh>> = OnceLock::new();
    MESH.get_or_init(|| Arc::new(build_mesh(DomainKind::Square, 0.1).unwrap()))
}

/// Square systems for `q ∈ {0, 1, 4}`.
fn square_system(q: usize) -> &'static DirichletSystem {
    static SYSTEMS: OnceLock<Vec<DirichletSystem>> = OnceLock::new();
    &SYSTEMS.get_or_init(|| {
        [0.0, 1.0, 4.0]
            .into_iter()
            .map(|q| DirichletSystem::new(square(), &CoefficientField::laplace().with_q(move |_| q)).unwrap())
            .collect()
    })[q]
}

fn disk() -> &'static (Arc<Mesh>, Arc<SampledRegion>) {
    static DISK: OnceLock<(Arc<Mesh>, Arc<SampledRegion>)> = OnceLock::new();
    DISK.get_or_init(|| {
        let mesh = Arc::new(build_mesh(DomainKind::Disk, 0.1).unwrap());
        let region = RegionDescriptor::Disk {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        let region = Arc::new(sample_region(&mesh, region).unwrap());
        (mesh, region)
    })
}

fn boundary_data(seed: Vec<f64>) -> BoundaryDatum {
    let mesh = square();
    let nodes = mesh.boundary_nodes().len();
    let coefficients = (0..nodes).map(|i| seed[i % seed.len()] * (1.0 + (i / seed.len()) as f64 * 0.1)).collect();
    BoundaryDatum::new(bcdesign::elliptic::BoundaryBasis::Nodal { nodes }, coefficients).unwrap()
}

fn quadratic(c: [f64; 5]) -> impl Fn([f64; 2]) -> f64 {
    move |p| c[0] + c[1] * p[0] + c[2] * p[1] + c[3] * p[0] * p[1] + c[4] * (p[0] * p[0] - p[1] * p[1])
}

/// Random expression source paired with its value at `P`.
const P: [f64; 2] = [0.3, -0.7];

fn expression() -> impl Strategy<Value = (String, f64)> {
    let leaf = prop_oneof![
        (0.1..9.0f64).prop_map(|v| (format!("{v:?}"), v)),
        Just(("x1".to_string(), P[0])),
        Just(("x2".to_string(), P[1])),
        Just(("pi".to_string(), std::f64::consts::PI)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|((a, x), (b, y))| (format!("({a} + {b})"), x + y)),
            (inner.clone(), inner.clone()).prop_map(|((a, x), (b, y))| (format!("({a} - {b})"), x - y)),
            (inner.clone(), inner.clone()).prop_map(|((a, x), (b, y))| (format!("{a} * {b}"), x * y)),
            inner.clone().prop_map(|(a, x)| (format!("sin({a})"), x.sin())),
            inner.clone().prop_map(|(a, x)| (format!("cos({a})"), x.cos())),
            inner.clone().prop_map(|(a, x)| (format!("exp(-abs({a}))"), (-x.abs()).exp())),
            inner.prop_map(|(a, x)| (format!("-{a}"), -x)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn meshes_tile_the_domain(h in 0.06..0.1f64, disk in any::<bool>()) {
        let domain = if disk { DomainKind::Disk } else { DomainKind::Square };
        let mesh = build_mesh(domain, h).unwrap();
        let rel = (mesh.total_area() - domain.area()).abs() / domain.area();
        if disk {
            prop_assert!(rel < 0.02, "{}", rel);
        } else {
            prop_assert!(rel < 1e-12, "{}", rel);
        }
        for t in 0..mesh.triangles().len() {
            prop_assert_eq!(locate_point(&mesh, mesh.barycenter(t)), Some(t));
        }
        prop_assert_eq!(build_mesh(domain, h).unwrap().fingerprint(), mesh.fingerprint());
    }

    #[test]
    fn superposition_and_trace(g1 in prop::collection::vec(-1.0..1.0f64, 7), g2 in prop::collection::vec(-1.0..1.0f64, 5),
                               s in -3.0..3.0f64, t in -3.0..3.0f64, q in 0usize..3) {
        let sys = square_system(q);
        let (d1, d2) = (boundary_data(g1), boundary_data(g2));
        let combined = BoundaryDatum::linear_combination(&[(s, &d1), (t, &d2)]).unwrap();
        let (u1, u2, u) = (
            solve_dirichlet(sys, &d1).unwrap(),
            solve_dirichlet(sys, &d2).unwrap(),
            solve_dirichlet(sys, &combined).unwrap(),
        );
        let scale = u.nodal_values().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        for i in 0..u.nodal_values().len() {
            let lin = s * u1.nodal_values()[i] + t * u2.nodal_values()[i];
            prop_assert!((u.nodal_values()[i] - lin).abs() <= 1e-9 * scale);
        }
        let mesh = square();
        let g = combined.boundary_values(mesh).unwrap();
        for (k, &v) in mesh.boundary_nodes().iter().enumerate() {
            prop_assert_eq!(u.nodal_values()[v], g[k]);
        }
    }

    #[test]
    fn discrete_maximum_principle(g in prop::collection::vec(-2.0..2.0f64, 3..11), q in 0usize..3) {
        let d = boundary_data(g);
        let bv = d.boundary_values(square()).unwrap();
        let (mut lo, mut hi) = bv.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if q > 0 {
            // a positive potential pulls the solution towards zero
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        let u = solve_dirichlet(square_system(q), &d).unwrap();
        for &v in u.nodal_values() {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{} outside [{}, {}]", v, lo, hi);
        }
    }

    #[test]
    fn affine_gradients_are_exact(c in prop::array::uniform3(-5.0..5.0f64), disk in any::<bool>()) {
        let mesh = if disk { Arc::clone(&self::disk().0) } else { Arc::clone(square()) };
        let u = SolutionField::interpolate(&mesh, |p| c[0] + c[1] * p[0] + c[2] * p[1], RegularityClass::smooth());
        for g in u.element_gradients() {
            prop_assert!((g[0] - c[1]).abs() <= 1e-10 * (1.0 + c[1].abs()));
            prop_assert!((g[1] - c[2]).abs() <= 1e-10 * (1.0 + c[2].abs()));
        }
    }

    #[test]
    fn reduction_is_reproducible_and_steps_by_one(cs in prop::collection::vec(prop::array::uniform5(-2.0..2.0f64), 4..7), seed in any::<u64>()) {
        let (mesh, region) = disk();
        let members = cs
            .iter()
            .map(|&c| SolutionField::interpolate(mesh, quadratic(c), RegularityClass::smooth()))
            .chain([
                SolutionField::interpolate(mesh, |p| p[0], RegularityClass::smooth()),
                SolutionField::interpolate(mesh, |p| p[1], RegularityClass::smooth()),
            ])
            .collect();
        let fam = SolutionFamily::new(members, Arc::clone(region), ConstraintMap::Jacobian, RegularityPolicy::Reject).unwrap();
        let target = 4;
        let params = ReductionParams::default();
        let a = reduce_to_target(&fam, target, &params, seed);
        let b = reduce_to_target(&fam, target, &params, seed);
        match (a, b) {
            (Ok((fa, ta)), Ok((_, tb))) => {
                prop_assert_eq!(serde_json::to_string(&ta).unwrap(), serde_json::to_string(&tb).unwrap());
                prop_assert_eq!(fa.len(), target);
                prop_assert_eq!(ta.steps.len(), fam.len() - target);
                for (i, step) in ta.steps.iter().enumerate() {
                    prop_assert_eq!(step.k, fam.len() - i);
                    prop_assert_eq!(step.a.len(), step.k - 1);
                }
            }
            (Err(ea), Err(eb)) => prop_assert_eq!(ea.to_string(), eb.to_string()),
            _ => prop_assert!(false, "runs with one seed disagree"),
        }
    }

    #[test]
    fn expressions_match_direct_evaluation((src, value) in expression()) {
        let e = Expr::parse(&src).unwrap();
        let got = e.eval(P);
        prop_assert!((got - value).abs() <= 1e-12 * (1.0 + value.abs()), "{}: {} vs {}", src, got, value);
    }

    #[test]
    fn scenario_toml_round_trips(h in 0.02..0.3f64, seed in any::<u64>(), m in 1usize..40, theta in 0.01..0.9f64,
                                 alpha in 0.05..1.0f64, radius in 0.1..0.6f64, preset in 0usize..4, square in any::<bool>()) {
        let domain = if square { DomainKind::Square } else { DomainKind::Disk };
        let name = ["laplace", "helmholtz k=1.5", "aniso-smooth", "iso-smooth"][preset];
        let mut c = ScenarioConfig::with_preset(domain, h, name, ConstraintMap::Augmented);
        c.seed = seed;
        c.runge.m = m;
        c.reduction.theta = theta;
        c.regularity.alpha = Some(alpha);
        c.region = Some(RegionDescriptor::Disk { center: domain.center(), radius: radius * domain.inradius() });
        let text = c.to_toml_string().unwrap();
        prop_assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), c);
    }
}
