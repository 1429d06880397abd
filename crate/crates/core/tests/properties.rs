mod common;

use linecong::bde::{bde_residual, torsal_branches};
use linecong::contact::{contact_with_point_family, ContactType};
use linecong::invariants::{self, FocalRoots, PointKind};
use linecong::linespace::{affine_transform_point, Line};
use linecong::surfaces::{exponential_map, sample_focal_surface, sample_middle_surface, Grid};
use linecong::verify::{compare_focal, jacobian_determinant_identity, random_congruence};
use linecong::{Congruence, Domain, Poly};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn congruence(seed: u64) -> Congruence<f64> {
    random_congruence(&mut ChaCha8Rng::seed_from_u64(seed), 3)
}

fn coeff() -> impl Strategy<Value = f64> {
    -1.0..1.0f64
}

fn linear_general(c: &[f64]) -> Congruence<f64> {
    let p = |k: usize| Poly::from_terms([(0, 0, c[3 * k]), (1, 0, c[3 * k + 1]), (0, 1, c[3 * k + 2])]);
    Congruence::general(p(0), p(1), p(2), p(3))
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [coeff(), coeff(), coeff()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bde_and_focal_discriminants_agree(c in prop::collection::vec(coeff(), 12)) {
        let j = linear_general(&c).jet(&0.0, &0.0, 1).unwrap();
        let d1 = invariants::discriminant(&j);
        let d2 = invariants::focal_quadratic(&j).discriminant();
        prop_assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn classification_follows_discriminant_sign(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64) {
        let j = congruence(seed).jet(&u, &v, 1).unwrap();
        let c = invariants::classify_point(&j);
        let d = invariants::discriminant(&j);
        if d.abs() > 1e-6 {
            let expected = if d > 0.0 { PointKind::Hyperbolic } else { PointKind::Elliptic };
            prop_assert_eq!(c.kind, expected);
        }
    }

    #[test]
    fn exponential_jacobian_is_focal_quadratic(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64, t in -2.0..2.0f64) {
        let r = jacobian_determinant_identity(&congruence(seed), &[[u, v, t]]).unwrap();
        prop_assert!(r < 1e-6);
    }

    #[test]
    fn focal_points_lie_on_their_line(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64) {
        let z = congruence(seed);
        let fd = invariants::focal_data(&z.jet(&u, &v, 1).unwrap()).unwrap();
        let line = z.line_at(&u, &v).unwrap();
        for e in &fd.elements {
            if let Some(p) = e.point {
                prop_assert!(line.distance_to(&p) < 1e-9 * (1.0 + p.iter().map(|x| x.abs()).fold(0.0, f64::max)));
            }
            if let Some(pl) = &e.plane {
                prop_assert!(pl.contains_line(&line, 1e-9));
            }
        }
    }

    #[test]
    fn oracle_agrees_with_focal_data(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64) {
        let gap = compare_focal(&congruence(seed), u, v).unwrap();
        prop_assert!(gap.is_none_or(|g| g < 1e-8));
    }

    #[test]
    fn torsal_directions_solve_the_bde(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64) {
        let j = congruence(seed).jet(&u, &v, 1).unwrap();
        let bde = invariants::bde_coefficients(&j);
        let scale = bde.a.abs().max(bde.b.abs()).max(bde.c.abs()).max(1.0);
        for br in torsal_branches(&j) {
            prop_assert!(bde_residual(&bde, br.direction).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn focal_points_are_singular_contact(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64) {
        let z = congruence(seed);
        let j = z.jet(&u, &v, 1).unwrap();
        prop_assume!(invariants::discriminant(&j) > 1e-3);
        let fd = invariants::focal_data(&j).unwrap();
        for e in &fd.elements {
            let kind = contact_with_point_family(&z, u, v, e.point.unwrap()).unwrap().kind;
            prop_assert!(kind.is_singular());
            prop_assert_ne!(kind, ContactType::A0);
        }
    }

    #[test]
    fn middle_point_is_affine_equivariant(seed in any::<u64>(), u in -0.5..0.5f64, v in -0.5..0.5f64, r0 in vec3(), r1 in vec3(), r2 in vec3(), t in vec3()) {
        let m = [
            [1.0 + 0.3 * r0[0], 0.3 * r0[1], 0.3 * r0[2]],
            [0.3 * r1[0], 1.0 + 0.3 * r1[1], 0.3 * r1[2]],
            [0.3 * r2[0], 0.3 * r2[1], 1.0 + 0.3 * r2[2]],
        ];
        let z = congruence(seed);
        let img = z.affine_image(&m, &t).unwrap();
        let j = z.jet(&u, &v, 1).unwrap();
        let Ok(ji) = img.jet(&u, &v, 1) else { return Ok(()) };
        let (Ok(p), Ok(q)) = (invariants::middle_point(&j), invariants::middle_point(&ji)) else { return Ok(()) };
        let p = affine_transform_point(&m, &t, &p);
        let scale = 1.0 + q.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for k in 0..3 {
            prop_assert!((p[k] - q[k]).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn rechart_keeps_the_lines(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64, h in -2.0..2.0f64) {
        let z = congruence(seed);
        let l0 = z.line_at(&u, &v).unwrap();
        let l1 = z.rechart_at_height(h).line_at(&u, &v).unwrap();
        prop_assert!(l0.approx_eq(&l1, 1e-9));
    }

    #[test]
    fn reversing_a_line_changes_orientation_only(a in vec3(), b in vec3()) {
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3));
        let l = Line::new(a, b).unwrap();
        let r = Line::new([-a[0], -a[1], -a[2]], b).unwrap();
        prop_assert!(!l.approx_eq(&r, 1e-9));
        prop_assert!(l.approx_eq_unoriented(&r, 1e-9));
    }

    #[test]
    fn exponential_map_moves_along_the_line(seed in any::<u64>(), u in -0.9..0.9f64, v in -0.9..0.9f64, t in -2.0..2.0f64) {
        let z = congruence(seed);
        let x = exponential_map(&z, &u, &v, &t).unwrap();
        prop_assert!(z.line_at(&u, &v).unwrap().distance_to(&x) < 1e-9 * (1.0 + t.abs()));
    }
}

#[test]
fn focal_vertices_satisfy_the_quadratic() {
    for seed in 0..8 {
        let z = congruence(seed);
        let (s1, s2) = sample_focal_surface(&z, &Grid::new(15, 15, Domain::default()));
        for s in [&s1, &s2] {
            for (k, p) in s.params.iter().enumerate() {
                let j = z.jet(&p[0], &p[1], 1).unwrap();
                let q = invariants::focal_quadratic(&j);
                let t = s.values[k];
                let scale = q.q2.abs().max(q.q1.abs()).max(q.q0.abs()) * (1.0 + t * t);
                assert!(q.eval(&t).abs() < 1e-9 * scale, "seed {seed} vertex {k}");
            }
        }
    }
}

#[test]
fn middle_surface_is_the_average_of_the_sheets() {
    for seed in 0..8 {
        let z = congruence(seed);
        let grid = Grid::new(15, 15, Domain::default());
        let (s1, s2) = sample_focal_surface(&z, &grid);
        let mid = sample_middle_surface(&z, &grid);
        for (k, p) in s1.params.iter().enumerate() {
            let Some(k2) = s2.vertex_at(p[0], p[1]).filter(|&k2| s2.params[k2] == *p) else { continue };
            let km = mid.vertex_at(p[0], p[1]).unwrap();
            let (x, y, m) = (s1.vertices[k], s2.vertices[k2], mid.vertices[km]);
            let scale = 1.0 + m.iter().map(|c| c.abs()).fold(0.0, f64::max);
            for c in 0..3 {
                assert!((0.5 * (x[c] + y[c]) - m[c]).abs() < 1e-9 * scale, "seed {seed} at {p:?}");
            }
        }
    }
}

#[test]
fn conjugate_roots_average_to_the_middle_parameter() {
    for seed in 0..32 {
        let z = congruence(seed);
        let j = z.jet(&0.1, &-0.2, 1).unwrap();
        let fd = invariants::focal_data(&j).unwrap();
        if let FocalRoots::Conjugate { re, .. } = fd.roots {
            assert!((invariants::mid_parameter(&j).unwrap() - re).abs() < 1e-12 * (1.0 + re.abs()));
        }
    }
}
