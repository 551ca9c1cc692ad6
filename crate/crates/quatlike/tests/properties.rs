//! Invariants over seeded random inputs.

use proptest::prelude::*;
use quatlike::catalog::{deformed_cone, flat_cone, SpGenerator, XiHatSpec};
use quatlike::confmap::{
    choose_su2_gauge_jets, homothetic_adapted, lift_structure, project, project_values, ConformalHypercomplex, LiftData,
};
use quatlike::connection::{oproiu_jets, xi_transform};
use quatlike::field::{lie_bracket_jets, Rank, TensorField};
use quatlike::jet::{values, variables, Jet};
use quatlike::qstruct::{algebra_residual, frame_from_structure};
use quatlike::report::{num, Tally};
use quatlike::suite::random_xi;
use quatlike::symmetry::{moment_maps, rotation_functions, symmetry_residual, SymmetryPoint};

fn maxdiff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

/// Point of a chart box from unit coordinates.
fn in_box(c: &quatlike::field::Chart, u: &[f64]) -> Vec<f64> {
    let s = c.sample(1, (u[0] * 1e6) as u64);
    s[0].clone()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn deformed_lift_data_round_trips(seed in 0u64..1000, u in prop::array::uniform4(unit())) {
        let base = flat_cone(1, false).unwrap();
        let e = deformed_cone(&base, &XiHatSpec::random(1, seed, 0.3)).unwrap();
        let l = e.lift.as_ref().unwrap();
        let cone = e.cone.as_ref().unwrap();
        let p = in_box(&cone.chart, &u);
        let jv = values(&cone.h_hat.eval(&p, 0).unwrap());
        prop_assert!(algebra_residual(&jv, l.big_dim()) < 1e-10);
        let pr = project_values(&jv, &p, 1).unwrap();
        prop_assert!(pr.cross_block < 1e-10 && pr.mk_inverse < 1e-10);
        let q = &p[4..];
        prop_assert!(maxdiff(&pr.a_section, &values(&l.a.eval(q, 0).unwrap())) < 1e-10);
        prop_assert!(maxdiff(&pr.j_section, &values(&l.j.eval(q, 0).unwrap())) < 1e-10);
        let back = lift_structure(&project(cone, l.z0_sign, l.z0_range, l.chart.clone()));
        prop_assert!(maxdiff(&values(&back.eval(&p, 0).unwrap()), &jv) < 1e-10);
    }

    #[test]
    fn xi_family_is_additive(s1 in 0u64..1000, s2 in 0u64..1000, u in prop::array::uniform4(unit())) {
        let l = flat_cone(1, false).unwrap().lift.unwrap();
        let q = in_box(&l.chart, &u);
        let j = l.j.eval(&q, 2).unwrap();
        let (op, _, _) = oproiu_jets(&j, 4).unwrap();
        let x1 = random_xi(4, s1, 0.4).eval(&q, 1).unwrap();
        let x2 = random_xi(4, s2, 0.4).eval(&q, 1).unwrap();
        let j1: Vec<Jet> = j.iter().map(|x| x.truncate(1)).collect();
        let (a, r1) = xi_transform(&op, &x1, &j1, 1e-8).unwrap();
        let (ab, r2) = xi_transform(&a, &x2, &j1, 1e-8).unwrap();
        let sum: Vec<Jet> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let (s, _) = xi_transform(&op, &sum, &j1, 1e-8).unwrap();
        prop_assert!(r1 < 1e-8 && r2 < 1e-8);
        prop_assert!(maxdiff(&values(&ab.gamma), &values(&s.gamma)) < 1e-10);
        prop_assert!(maxdiff(&values(ab.omega.as_ref().unwrap()), &values(s.omega.as_ref().unwrap())) < 1e-10);
        let neg: Vec<Jet> = x1.iter().map(|x| -x).collect();
        let (z, _) = xi_transform(&a, &neg, &j1, 1e-8).unwrap();
        prop_assert!(maxdiff(&values(&z.gamma), &values(&op.gamma)) < 1e-10);
    }

    #[test]
    fn brackets_are_antisymmetric_and_satisfy_jacobi(c in prop::collection::vec(-1.0..1.0f64, 27), u in prop::array::uniform3(-0.5..0.5f64)) {
        // quadratic fields v_i^Y = c_Y + c_{Y+3} x_{Y} x_{(Y+1)%3} + c_{Y+6} x_Y
        let field = |o: usize| {
            let c = c[9 * o..9 * o + 9].to_vec();
            TensorField::from_expr(3, Rank::VECTOR, 1, move |x| {
                (0..3)
                    .map(|y| {
                        let mut s = &(&x[y] * &x[(y + 1) % 3]).scale(c[y + 3]) + c[y];
                        s.add_scaled(c[y + 6], &x[y]);
                        s
                    })
                    .collect()
            })
        };
        let (a, b, cc) = (field(0).eval(&u, 3).unwrap(), field(1).eval(&u, 3).unwrap(), field(2).eval(&u, 3).unwrap());
        let ab = lie_bracket_jets(&a, &b, 3);
        let ba = lie_bracket_jets(&b, &a, 3);
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!((x.value() + y.value()).abs() < 1e-14);
        }
        let j1 = lie_bracket_jets(&a, &lie_bracket_jets(&b, &cc, 3), 3);
        let j2 = lie_bracket_jets(&b, &lie_bracket_jets(&cc, &a, 3), 3);
        let j3 = lie_bracket_jets(&cc, &lie_bracket_jets(&a, &b, 3), 3);
        for y in 0..3 {
            prop_assert!((j1[y].value() + j2[y].value() + j3[y].value()).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetries_form_a_vector_space(w in prop::collection::vec(-1.0..1.0f64, 10), u in prop::array::uniform4(unit())) {
        let e = flat_cone(1, false).unwrap();
        let l = e.lift.as_ref().unwrap();
        let q = in_box(&l.chart, &u);
        let m = 2;
        let mut entries = vec![[0.0; 4]; m * m];
        for (g, c) in e.generators.iter().zip(&w) {
            for (s, x) in entries.iter_mut().zip(&g.entries) {
                for t in 0..4 {
                    s[t] += c * x[t];
                }
            }
        }
        let comb = SpGenerator { name: "combination".into(), entries, size: m };
        let j = l.j.eval(&q, 2).unwrap();
        let a = l.a.eval(&q, 1).unwrap();
        let (op, _, _) = oproiu_jets(&j, 4).unwrap();
        let (xi, _) = choose_su2_gauge_jets(&j, &a, op.omega.as_ref().unwrap(), 4).unwrap();
        let j1: Vec<Jet> = j.iter().map(|x| x.truncate(1)).collect();
        let (c, _) = xi_transform(&op, &xi, &j1, 1e-8).unwrap();
        let k = comb.projected().eval(&q, 3).unwrap();
        prop_assert!(symmetry_residual(&c.gamma, &k, 4).unwrap() < 1e-8);
        // r⃗ and P⃗ are linear in the generator
        let omega: Vec<Jet> = a.iter().map(|x| x.scale(-0.5)).collect();
        let frame = frame_from_structure(&l.j, &q, None).unwrap();
        let sp = SymmetryPoint { gamma: &c.gamma, omega: &omega, j: &j, frame: &frame, nu: LiftData::nu(l.z0_sign), d: 4 };
        let pm = |k: &[Jet]| {
            let r = rotation_functions(k, &j, 4, 1e-8).unwrap().values();
            (r, moment_maps(&sp, k, &r).unwrap().0)
        };
        let (r, p) = pm(&k);
        let mut rs = [0.0; 3];
        let mut ps = [0.0; 3];
        for (g, cw) in e.generators.iter().zip(&w) {
            let (ri, pi) = pm(&g.projected().eval(&q, 3).unwrap());
            for t in 0..3 {
                rs[t] += cw * ri[t];
                ps[t] += cw * pi[t];
            }
        }
        prop_assert!(maxdiff(&r, &rs) < 1e-10 && maxdiff(&p, &ps) < 1e-10);
    }

    #[test]
    fn lifting_then_projecting_is_the_identity(seed in 0u64..1000, u in prop::array::uniform4(unit())) {
        let l0 = flat_cone(1, true).unwrap().lift.unwrap();
        let l = quatlike::confmap::xi_hat_transform(&l0, &XiHatSpec::random(1, seed, 0.2).field());
        let cone = ConformalHypercomplex { n_h: 1, chart: l.big_chart(), h_hat: lift_structure(&l), metric: None, k: homothetic_adapted(8) };
        let back = project(&cone, l.z0_sign, l.z0_range, l.chart.clone());
        let q = in_box(&l.chart, &u);
        prop_assert!(maxdiff(&values(&back.a.eval(&q, 0).unwrap()), &values(&l.a.eval(&q, 0).unwrap())) < 1e-10);
        prop_assert!(maxdiff(&values(&back.j.eval(&q, 0).unwrap()), &values(&l.j.eval(&q, 0).unwrap())) < 1e-10);
    }
}

proptest! {
    #[test]
    fn report_floats_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let v = num(x);
        let s = v.to_string();
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
        let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
        prop_assert_eq!(digits, 17);
    }

    #[test]
    fn tally_merge_is_order_independent_in_value(v in prop::collection::vec(0.0..1.0f64, 1..20), split in 0usize..20) {
        let mut all = Tally::new();
        for x in &v {
            all.below("c", "", 0.5, *x);
        }
        let k = split.min(v.len());
        let mut a = Tally::new();
        let mut b = Tally::new();
        for x in &v[..k] {
            a.below("c", "", 0.5, *x);
        }
        for x in &v[k..] {
            b.below("c", "", 0.5, *x);
        }
        b.merge(a);
        prop_assert_eq!(b.checks[0].worst, all.checks[0].worst);
        prop_assert_eq!(b.checks[0].samples, v.len());
        prop_assert_eq!(b.pass(), v.iter().all(|&x| x <= 0.5));
    }

    #[test]
    fn chart_samples_are_reproducible_and_inside(seed in 0u64..10_000) {
        let c = flat_cone(2, false).unwrap().lift.unwrap().chart;
        let a = c.sample(5, seed);
        prop_assert_eq!(&a, &c.sample(5, seed));
        for p in &a {
            prop_assert!(c.contains(p));
        }
        let _ = variables(&a[0], 1).unwrap();
    }
}
