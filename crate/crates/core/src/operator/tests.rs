use super::*;
use crate::fixtures;
use crate::rng::PathStream;

fn v(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}

fn shifted_identity() -> OperatorSpec {
    // A(x) = x - 1
    OperatorSpec::linear(Matrix::identity(1, 1), v(&[-1.0])).unwrap()
}

#[test]
fn resolvent_examples() {
    let id = fixtures::identity();
    assert_eq!(id.resolvent(1.0, &v(&[2.0])).unwrap(), v(&[1.0]));

    // oracle: grid-minimize |u| + (u - x)^2 / 2 over [-2, 2]
    let abs = fixtures::abs_value();
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=40_000 {
        let u = -2.0 + i as f64 * 1e-4;
        let val = u.abs() + 0.5 * (u - 0.5) * (u - 0.5);
        if val < best.0 {
            best = (val, u);
        }
    }
    let r = abs.resolvent(1.0, &v(&[0.5])).unwrap();
    assert!((r[0] - best.1).abs() < 1e-4);
    assert_eq!(r[0], 0.0);

    // coordinatewise: u + u = 2, second coordinate pinned to the line
    let ex = fixtures::line_restricted();
    let x = v(&[2.0, 3.0]);
    let u = ex.resolvent(1.0, &x).unwrap();
    assert!((u - v(&[1.0, 0.0])).amax() < 1e-15);
    let u = ex.resolvent(1.0, &x).unwrap();
    assert!(ex.graph_residual(&u, &(&x - &u)) < 1e-12);
}

#[test]
fn minimal_norm_examples() {
    let abs = fixtures::abs_value();
    assert_eq!(abs.minimal_norm_element(&v(&[0.0])).unwrap(), v(&[0.0]));
    let ex = fixtures::line_restricted();
    assert_eq!(ex.minimal_norm_element(&v(&[2.0, 0.0])).unwrap(), v(&[2.0, 0.0]));
    let lin = fixtures::strongly_monotone_linear();
    let x = v(&[0.3, -1.2]);
    let (q, b) = lin.as_affine_map().unwrap();
    assert_eq!(lin.minimal_norm_element(&x).unwrap(), q * &x + b);
    assert!(matches!(
        ex.minimal_norm_element(&v(&[1.0, 1.0])),
        Err(Error::OutsideDomain { .. })
    ));
}

#[test]
fn potential_examples() {
    let ex = fixtures::line_restricted();
    assert_eq!(ex.potential_value(&v(&[2.0, 0.0])).unwrap(), 2.0);
    assert_eq!(ex.potential_value(&v(&[1.0, 1.0])).unwrap(), f64::INFINITY);
    assert_eq!(fixtures::abs_value().potential_value(&v(&[2.0])).unwrap(), 2.0);
    assert!(matches!(
        fixtures::skew_rotation().potential_value(&v(&[1.0, 0.0])),
        Err(Error::NoPotential)
    ));
}

#[test]
fn zero_set_examples() {
    let (p, d) = shifted_identity().zero_set_project(&v(&[0.0])).unwrap();
    assert_eq!((p[0], d), (1.0, 1.0));
    let (p, d) = fixtures::hinge().zero_set_project(&v(&[2.0])).unwrap();
    assert_eq!((p[0], d), (1.0, 1.0));
    let skew = fixtures::skew_rotation();
    let (p, d) = skew.zero_set_project(&v(&[3.0, 4.0])).unwrap();
    assert!(p.amax() < 1e-15);
    assert!((d - 5.0).abs() < 1e-14);
    let empty = OperatorSpec::linear(Matrix::zeros(1, 1), v(&[1.0])).unwrap();
    assert!(matches!(empty.zero_set_project(&v(&[0.0])), Err(Error::EmptyZeroSet)));
}

#[test]
fn zero_sets_satisfy_membership() {
    for (name, op) in fixtures::all() {
        let mut rng = PathStream::new(5, 0);
        for _ in 0..20 {
            let x = Vector::from_fn(op.dim(), |_, _| rng.uniform_in(-3.0, 3.0));
            let (p, _) = op.zero_set_project(&x).unwrap();
            let zero = Vector::zeros(op.dim());
            assert!(op.graph_residual(&p, &zero) < 1e-9, "{name}");
        }
    }
}

#[test]
fn tikhonov_point_examples() {
    // x + (x - 1) / eta = 0 at eta = 1 gives 0.5
    let op = shifted_identity();
    assert!((op.tikhonov_point(1.0).unwrap()[0] - 0.5).abs() < 1e-15);
    for eta in [0.01, 0.5, 3.0, 100.0] {
        assert_eq!(fixtures::hinge().tikhonov_point(eta).unwrap()[0], 0.0);
        assert!(fixtures::skew_rotation().tikhonov_point(eta).unwrap().amax() < 1e-15);
    }
}

#[test]
fn tikhonov_curve_converges_to_min_norm_zero() {
    for (name, op) in fixtures::all() {
        let xs = op.min_norm_zero().unwrap();
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let eta = 2f64.powi(-k);
            let x = op.tikhonov_point(eta).unwrap();
            assert!(x.norm() <= xs.norm() + 1e-8, "{name}");
            last = (&x - &xs).norm();
        }
        assert!(last < 1e-8, "{name}: {last}");
    }
}

#[test]
fn tikhonov_derivative_bound() {
    for (name, op) in fixtures::all() {
        let xs = op.min_norm_zero().unwrap().norm();
        for eta in [0.1, 1.0, 10.0] {
            let dh = 1e-5 * eta;
            let dx = (op.tikhonov_point(eta + dh).unwrap() - op.tikhonov_point(eta - dh).unwrap()) / (2.0 * dh);
            assert!(dx.norm() <= xs / eta * 1.05 + 1e-12, "{name} at {eta}");
        }
    }
}

#[test]
fn resolvent_residual_property() {
    for (name, op) in fixtures::all() {
        let mut rng = PathStream::new(11, 1);
        for _ in 0..1000 {
            let lambda = (rng.uniform_in(-4.0, 3.0)).exp();
            let x = Vector::from_fn(op.dim(), |_, _| rng.uniform_in(-5.0, 5.0));
            let u = op.resolvent(lambda, &x).unwrap();
            let r = op.graph_residual(&u, &((&x - &u) / lambda));
            assert!(r <= 1e-8, "{name}: residual {r}");
        }
    }
}

#[test]
fn firm_nonexpansiveness_property() {
    for (name, op) in fixtures::all() {
        let mut rng = PathStream::new(12, 0);
        for _ in 0..500 {
            let lambda = (rng.uniform_in(-3.0, 3.0)).exp();
            let x = Vector::from_fn(op.dim(), |_, _| rng.uniform_in(-5.0, 5.0));
            let y = Vector::from_fn(op.dim(), |_, _| rng.uniform_in(-5.0, 5.0));
            let jx = op.resolvent(lambda, &x).unwrap();
            let jy = op.resolvent(lambda, &y).unwrap();
            let dj = &jx - &jy;
            assert!(dj.norm_squared() <= dj.dot(&(&x - &y)) + 1e-10, "{name}");
        }
    }
}

#[test]
fn sampled_pairs_are_monotone() {
    for (name, op) in fixtures::all() {
        let mut rng = PathStream::new(3, 9);
        let pairs = op.graph_sample(&Region::cube(op.dim(), 2.0), 60, &mut rng).unwrap();
        let rho = op.strong_monotonicity();
        for (u, w) in &pairs {
            assert!(op.graph_residual(u, w) <= 1e-12, "{name}");
        }
        for (u1, v1) in &pairs {
            for (u2, v2) in &pairs {
                let du = u1 - u2;
                assert!((v1 - v2).dot(&du) >= rho * du.norm_squared() - 1e-10, "{name}");
            }
        }
    }
}

#[test]
fn graph_sample_examples() {
    let abs = fixtures::abs_value();
    assert!(abs.is_graph_pair(&v(&[1.0]), &v(&[1.0]), 1e-12));
    assert!(abs.is_graph_pair(&v(&[0.0]), &v(&[0.3]), 1e-12));
    assert!(!abs.is_graph_pair(&v(&[0.5]), &v(&[0.3]), 1e-12));
    let ex = fixtures::line_restricted();
    let mut rng = PathStream::new(1, 1);
    for (u, _) in ex.graph_sample(&Region::cube(2, 1.0), 50, &mut rng).unwrap() {
        assert_eq!(u[1], 0.0);
    }
    let a = ex.graph_sample(&Region::cube(2, 1.0), 5, &mut PathStream::new(4, 2)).unwrap();
    let b = ex.graph_sample(&Region::cube(2, 1.0), 5, &mut PathStream::new(4, 2)).unwrap();
    assert_eq!(a, b);
    let far = Region::Box {
        lo: v(&[-1.0, 2.0]),
        hi: v(&[1.0, 3.0]),
    };
    assert!(matches!(
        ex.graph_sample(&far, 1, &mut rng),
        Err(Error::EmptyIntersection)
    ));
}

#[test]
fn gap_examples() {
    let id = fixtures::identity();
    let k = GapQuery::new(Region::cube(1, 1.0), 2);
    // oracle: grid maximum of (1 - u) u on [-1, 1]
    let oracle = (0..=20_000)
        .map(|i| {
            let u = -1.0 + i as f64 * 1e-4;
            (1.0 - u) * u
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let g = id.gap_function(&v(&[1.0]), &k).unwrap();
    assert!(g.exact);
    assert!((g.value - oracle).abs() < 1e-8);
    assert!((g.value - 0.25).abs() < 1e-15);
    assert_eq!(id.gap_function(&v(&[0.0]), &k).unwrap().value, 0.0);

    // brute force over u in [-1, 1], v = (u, w), w in [-1, 1]
    let ex = fixtures::line_restricted();
    let brute = |x: &Vector| {
        let mut best = f64::NEG_INFINITY;
        for i in 0..=200 {
            let u = -1.0 + i as f64 * 0.01;
            for j in 0..=200 {
                let w = -1.0 + j as f64 * 0.01;
                best = best.max((x[0] - u) * u + x[1] * w);
            }
        }
        best
    };
    let q = GapQuery::new(
        Region::Box {
            lo: v(&[-1.0, 0.0]),
            hi: v(&[1.0, 0.0]),
        },
        201,
    )
    .with_clip(v(&[-1.0, -1.0]), v(&[1.0, 1.0]));
    for x in [v(&[0.0, 0.0]), v(&[1.0, 0.0])] {
        let g = ex.gap_function(&x, &q).unwrap();
        assert!(!g.exact);
        assert!((g.value - brute(&x)).abs() < 1e-12, "{x}");
    }
    assert!(ex.gap_function(&v(&[0.0, 0.0]), &q).unwrap().value.abs() < 1e-15);
    assert!((ex.gap_function(&v(&[1.0, 0.0]), &q).unwrap().value - 0.25).abs() < 1e-12);
}

#[test]
fn gap_grid_is_monotone_under_refinement() {
    let hinge = fixtures::hinge();
    let x = v(&[1.7]);
    let mut prev = f64::NEG_INFINITY;
    let mut n = 2;
    for _ in 0..8 {
        let g = hinge
            .gap_function(&x, &GapQuery::new(Region::cube(1, 2.0), n))
            .unwrap()
            .value;
        assert!(g >= prev);
        prev = g;
        n = 2 * n - 1;
    }
}

#[test]
fn gap_positivity() {
    for (name, op) in fixtures::all() {
        let region = Region::cube(op.dim(), 2.0);
        let q = GapQuery::new(region.clone(), 17).with_clip(
            Vector::from_element(op.dim(), -2.0),
            Vector::from_element(op.dim(), 2.0),
        );
        let mut rng = PathStream::new(8, 0);
        for _ in 0..10 {
            let x = op.project_domain(&Vector::from_fn(op.dim(), |_, _| rng.uniform_in(-2.0, 2.0)));
            let g = op.gap_function(&x, &q).unwrap().value;
            assert!(g >= -1e-10, "{name}: {g}");
        }
        if op.as_affine_map().is_some() {
            let xs = op.min_norm_zero().unwrap();
            if region.contains(&xs, 0.0) {
                assert!(op.gap_function(&xs, &q).unwrap().value.abs() <= 1e-8, "{name}");
            }
        }
    }
}

#[test]
fn skew_gap_on_unit_ball_is_norm() {
    let skew = fixtures::skew_rotation();
    let q = GapQuery::new(Region::unit_ball(2), 2);
    let x = v(&[0.3, -0.4]);
    let g = skew.gap_function(&x, &q).unwrap();
    assert!(g.exact);
    assert!((g.value - 0.5).abs() < 1e-15);
}

#[test]
fn non_diagonal_quadratic_gap_matches_grid() {
    let op = fixtures::strongly_monotone_linear();
    let x = v(&[1.0, 0.5]);
    let q = GapQuery::new(Region::cube(2, 1.0), 2);
    let g = op.gap_function(&x, &q).unwrap();
    let (m, b) = op.as_affine_map().unwrap();
    let mut best = f64::NEG_INFINITY;
    for i in 0..=400 {
        for j in 0..=400 {
            let u = v(&[-1.0 + i as f64 * 0.005, -1.0 + j as f64 * 0.005]);
            best = best.max((&x - &u).dot(&(&m * &u + &b)));
        }
    }
    assert!(g.value >= best - 1e-12);
    assert!(g.value - best < 1e-4);
}

#[test]
fn potential_midpoint_convexity() {
    let mut rng = PathStream::new(21, 0);
    for (name, op) in fixtures::all() {
        if op.potential().is_none() {
            continue;
        }
        for _ in 0..200 {
            let a = op.project_domain(&Vector::from_fn(op.dim(), |_, _| rng.uniform_in(-3.0, 3.0)));
            let b = op.project_domain(&Vector::from_fn(op.dim(), |_, _| rng.uniform_in(-3.0, 3.0)));
            let m = (&a + &b) * 0.5;
            let (fa, fb, fm) = (
                op.potential_value(&a).unwrap(),
                op.potential_value(&b).unwrap(),
                op.potential_value(&m).unwrap(),
            );
            assert!(fm <= 0.5 * (fa + fb) + 1e-12, "{name}");
        }
    }
}

#[test]
fn error_bound_holds_on_sublevel_set() {
    let op = fixtures::hinge();
    let info = op.potential().unwrap();
    let eb = info.error_bound.unwrap();
    let min = info.min_value.unwrap();
    let mut rng = PathStream::new(2, 2);
    for _ in 0..1000 {
        let x = v(&[rng.uniform_in(-3.0, 3.0)]);
        let f = op.potential_value(&x).unwrap();
        if f <= eb.level {
            let (_, d) = op.zero_set_project(&x).unwrap();
            assert!(f - min >= eb.gamma * d.powf(eb.p) - 1e-12);
        }
    }
}

#[test]
fn shifted_and_scaled_compose() {
    let base = fixtures::hinge();
    let sh = OperatorSpec::shifted(base.clone(), v(&[2.0])).unwrap();
    assert_eq!(sh.resolvent(1.0, &v(&[5.0])).unwrap()[0], 4.0);
    let (p, _) = sh.zero_set_project(&v(&[0.0])).unwrap();
    assert_eq!(p[0], 1.0);
    let sc = OperatorSpec::scaled(fixtures::identity(), 3.0).unwrap();
    assert!((sc.resolvent(1.0, &v(&[4.0])).unwrap()[0] - 1.0).abs() < 1e-15);
    assert_eq!(sc.strong_monotonicity(), 3.0);
    let cone = OperatorSpec::affine_normal_cone(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), v(&[1.0])).unwrap();
    let sh = OperatorSpec::shifted(cone, v(&[1.0, 1.0])).unwrap();
    let u = sh.resolvent(0.5, &v(&[0.0, 0.0])).unwrap();
    assert!((u[0] + u[1] - 3.0).abs() < 1e-14);
    assert!(sh.graph_residual(&u, &((v(&[0.0, 0.0]) - &u) / 0.5)) < 1e-12);
}

#[test]
fn invalid_operators_are_rejected() {
    assert!(OperatorSpec::linear(Matrix::from_row_slice(1, 1, &[-1.0]), v(&[0.0])).is_err());
    assert!(OperatorSpec::affine_normal_cone(
        Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
        v(&[0.0, 1.0])
    )
    .is_err());
    assert!(OperatorSpec::scaled(fixtures::identity(), 0.0).is_err());
    assert!(fixtures::identity().resolvent(-1.0, &v(&[1.0])).is_err());
}
