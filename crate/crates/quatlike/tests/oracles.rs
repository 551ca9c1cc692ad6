//! Library results against routes that avoid the library's own machinery:
//! finite differences, flows, explicit brackets and closed forms.

use nalgebra::{DMatrix, SymmetricEigen};
use quatlike::catalog::{by_name, flat_cone, XiHatSpec};
use quatlike::confmap::{
    check_closed_homothetic, check_lift_integrability, lift_metric_jets, lift_structure_jets, small_metric,
    su2_vectors, xi_hat_transform, LiftData,
};
use quatlike::connection::{levi_civita_jets, obata_jets};
use quatlike::curvature::{curvature_from_w, extract_w, r_real_from_riemann, ricci, ricci_antisym, riemann, weyl_part};
use quatlike::field::{Rank, TensorField};
use quatlike::jet::{values, variables, Jet};
use quatlike::qstruct::{frame_from_structure, max_abs_jets, nijenhuis_diag_jets, nijenhuis_jets, Vielbein};
use quatlike::quat::flat_j;

fn maxdiff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn maxabs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn mat_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * m / k as f64;
        out += &term;
    }
    out
}

#[test]
fn lie_derivative_matches_flow_pushforward() {
    let n = 3;
    let omega = DMatrix::from_row_slice(3, 3, &[0.0, -0.4, 0.3, 0.4, 0.0, -0.9, -0.3, 0.9, 0.0]);
    let om = omega.clone();
    // k^Y = Ω_YX x^X
    let k = TensorField::from_expr(n, Rank::VECTOR, 1, move |x| {
        (0..3)
            .map(|y| {
                let mut s = Jet::zero(3, x[0].order());
                for c in 0..3 {
                    s.add_scaled(om[(y, c)], &x[c]);
                }
                s
            })
            .collect()
    });
    let g_val = |p: &[f64]| -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[1.0 + p[0] * p[0], 0.2 * p[1], 0.0, 0.2 * p[1], 1.0, p[0] * p[2], 0.0, p[0] * p[2], 2.0])
    };
    let g = TensorField::from_expr(n, Rank::BILINEAR, 1, |x| {
        let o = x[0].order();
        let one = Jet::constant(1.0, 3, o);
        let zero = Jet::zero(3, o);
        vec![
            &one + &(&x[0] * &x[0]),
            x[1].scale(0.2),
            zero.clone(),
            x[1].scale(0.2),
            one.clone(),
            &x[0] * &x[2],
            zero,
            &x[0] * &x[2],
            Jet::constant(2.0, 3, o),
        ]
    });
    let euclid = TensorField::from_expr(n, Rank::BILINEAR, 1, |x| {
        let o = x[0].order();
        (0..9).map(|i| Jet::constant(if i % 4 == 0 { 1.0 } else { 0.0 }, 3, o)).collect()
    });
    let p = [0.3, -0.5, 0.7];
    let pull = |t: f64, field: &dyn Fn(&[f64]) -> DMatrix<f64>| {
        let a = mat_exp(&(&omega * t));
        let pv = &a * nalgebra::DVector::from_row_slice(&p);
        a.transpose() * field(pv.as_slice()) * &a
    };
    let t = 1e-4;
    let id_val = |_: &[f64]| DMatrix::<f64>::identity(3, 3);
    let cases: [(&TensorField, &dyn Fn(&[f64]) -> DMatrix<f64>); 2] = [(&g, &g_val), (&euclid, &id_val)];
    for (tf, fv) in cases {
        let oracle = (pull(t, fv) - pull(-t, fv)) / (2.0 * t);
        let lie = values(
            &quatlike::field::lie_derivative_jets(&k.eval(&p, 1).unwrap(), &tf.eval(&p, 1).unwrap(), Rank::BILINEAR, n)
                .unwrap(),
        );
        let o: Vec<f64> = (0..9).map(|i| oracle[(i / 3, i % 3)]).collect();
        assert!(maxdiff(&lie, &o) < 1e-7, "{lie:?} vs {o:?}");
    }
    let lie = quatlike::field::lie_derivative(&k, &euclid, &p).unwrap();
    assert!(maxabs(&lie) < 1e-15);
}

/// `J(x) = P(x) J₀ P(x)⁻¹` with a non-constant `P`.
fn twisted_j(x: &[f64]) -> DMatrix<f64> {
    let j0 = DMatrix::from_row_slice(4, 4, &flat_j(1)[..16]);
    let p = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.3 * x[2], 0.0, 0.1, 0.0, 1.0 + 0.2 * x[0] * x[1], 0.0, 0.0, 0.4 * x[3], 0.0, 1.0, 0.0, 0.0, 0.0, 0.2 * x[0], 1.0],
    );
    &p * j0 * p.try_inverse().unwrap()
}

#[test]
fn nijenhuis_matches_bracket_oracle() {
    let p = [0.2, -0.4, 0.5, 0.1];
    let h = 1e-5;
    let jfield = TensorField::new(4, Rank::ENDO, 1, |x, o| {
        let v = variables(x, o)?;
        // finite jets of J through the same matrix formula, assembled componentwise
        let j0 = flat_j(1);
        let one = Jet::constant(1.0, 4, o);
        let zero = Jet::zero(4, o);
        let mut pm = vec![zero.clone(); 16];
        for i in 0..4 {
            pm[i * 4 + i] = one.clone();
        }
        pm[1] = v[2].scale(0.3);
        pm[3] = Jet::constant(0.1, 4, o);
        pm[5] = &one + &(&v[0] * &v[1]).scale(0.2);
        pm[8] = v[3].scale(0.4);
        pm[14] = v[0].scale(0.2);
        let pi = quatlike::linalg::inverse_jet(&pm, 4)?;
        let mut out = vec![zero.clone(); 16];
        for i in 0..4 {
            for l in 0..4 {
                let mut s = zero.clone();
                for k in 0..4 {
                    for m in 0..4 {
                        s.add_mul_scaled(j0[k * 4 + m], &pm[i * 4 + k], &pi[m * 4 + l]);
                    }
                }
                out[i * 4 + l] = s;
            }
        }
        Ok(out)
    });
    let nj = values(&nijenhuis_jets(&jfield.eval(&p, 1).unwrap(), 4));
    // vector field V_X = J∂_X has components (V_X)^Z = J_X^Z; brackets by differences
    let vf = |x: &[f64], a: usize| -> Vec<f64> { (0..4).map(|z| twisted_j(x)[(a, z)]).collect() };
    let dv = |a: usize, w: usize| -> Vec<f64> {
        let mut pp = p;
        let mut pm = p;
        pp[w] += h;
        pm[w] -= h;
        vf(&pp, a).iter().zip(vf(&pm, a)).map(|(u, v)| (u - v) / (2.0 * h)).collect()
    };
    let jp = twisted_j(&p);
    let apply_j = |v: &[f64]| -> Vec<f64> { (0..4).map(|z| (0..4).map(|w| v[w] * jp[(w, z)]).sum()).collect() };
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for x in 0..4 {
        for y in 0..4 {
            // [JX, JY]
            let mut b1 = vec![0.0; 4];
            for z in 0..4 {
                for w in 0..4 {
                    b1[z] += jp[(x, w)] * dv(y, w)[z] - jp[(y, w)] * dv(x, w)[z];
                }
            }
            // [JX, Y] = -∂_Y (JX), [X, JY] = ∂_X (JY)
            let b2: Vec<f64> = dv(x, y).iter().map(|v| -v).collect();
            let b3 = dv(y, x);
            let jb2 = apply_j(&b2);
            let jb3 = apply_j(&b3);
            for z in 0..4 {
                let oracle = b1[z] - jb2[z] - jb3[z];
                worst = worst.max((oracle - nj[(x * 4 + y) * 4 + z]).abs());
                size = size.max(oracle.abs());
            }
        }
    }
    assert!(size > 1e-2, "structure should be non-integrable");
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn lifted_flat_cone_is_flat_in_curvilinear_chart() {
    let e = flat_cone(1, false).unwrap();
    let cone = e.cone.as_ref().unwrap();
    let d = cone.chart.dim();
    for p in cone.chart.sample(4, 2) {
        let lc = levi_civita_jets(&cone.metric.as_ref().unwrap().eval(&p, 2).unwrap(), d).unwrap();
        assert!(maxabs(&values(&lc)) > 1e-2);
        assert!(maxabs(&riemann(&lc, d).unwrap()) < 1e-8);
        let k = cone.k.eval(&p, 1).unwrap();
        assert!(check_closed_homothetic(&lc, &k, d).unwrap() < 1e-9);
        let (_, off) = su2_vectors(&cone.h_hat.eval(&p, 0).unwrap(), &k, d);
        assert!(off < 1e-12);
    }
}

#[test]
fn homothetic_normalization_on_linear_coordinates() {
    let d = 8;
    let p = [0.3, -0.1, 0.2, 0.5, -0.4, 0.1, 0.0, 0.7];
    let gamma = vec![Jet::zero(d, 1); d * d * d];
    let x = variables(&p, 1).unwrap();
    let k32: Vec<Jet> = x.iter().map(|v| v.scale(1.5)).collect();
    assert_eq!(check_closed_homothetic(&gamma, &k32, d).unwrap(), 0.0);
    assert!((check_closed_homothetic(&gamma, &x, d).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn obata_connection_solves_defining_equations_by_differences() {
    let e = by_name("deformed-cone", 1).unwrap();
    let cone = e.cone.as_ref().unwrap();
    let d = cone.chart.dim();
    let h = 1e-5;
    for p in cone.chart.sample(3, 6) {
        let ob = obata_jets(&cone.h_hat.eval(&p, 1).unwrap(), d).unwrap();
        let g = values(&ob.gamma);
        let j = cone.h_hat.values(&p).unwrap();
        let dj: Vec<Vec<f64>> = (0..d)
            .map(|w| {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp[w] += h;
                pm[w] -= h;
                let a = cone.h_hat.values(&pp).unwrap();
                let b = cone.h_hat.values(&pm).unwrap();
                a.iter().zip(b).map(|(u, v)| (u - v) / (2.0 * h)).collect()
            })
            .collect();
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for x in 0..d {
                for y in 0..d {
                    for z in 0..d {
                        let idx = (a * d + y) * d + z;
                        let mut s = dj[x][idx];
                        for w in 0..d {
                            s -= g[(x * d + y) * d + w] * j[(a * d + w) * d + z];
                            s += g[(x * d + w) * d + z] * j[(a * d + y) * d + w];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        assert!(worst < 1e-6, "{worst}");
        // torsion-free
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    assert!((g[(x * d + y) * d + z] - g[(y * d + x) * d + z]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn projected_quaternionic_hyperbolic_space_is_einstein_with_ric_minus_three_g() {
    let l = flat_cone(1, false).unwrap().lift.unwrap();
    let (g, nu) = small_metric(&l, 1.0).unwrap();
    assert_eq!(nu, -1.0);
    for q in l.chart.sample(4, 9) {
        let gj = g.eval(&q, 2).unwrap();
        let ric = ricci(&riemann(&levi_civita_jets(&gj, 4).unwrap(), 4).unwrap(), 4);
        let gv = values(&gj);
        let target: Vec<f64> = gv.iter().map(|x| -3.0 * x).collect();
        assert!(maxdiff(&ric, &target) < 1e-8);
    }
}

#[test]
fn nu_follows_the_slice() {
    let l = flat_cone(1, false).unwrap().lift.unwrap();
    for (z0, nu) in [(0.5, -2.0), (1.0, -1.0), (2.0, -0.5), (4.0, -0.25)] {
        assert_eq!(small_metric(&l, z0).unwrap().1, nu);
        assert_eq!(LiftData::nu(z0), nu);
    }
}

fn signature(g: &[f64], d: usize) -> (usize, usize) {
    let e = SymmetricEigen::new(DMatrix::from_row_slice(d, d, g));
    let neg = e.eigenvalues.iter().filter(|&&x| x < -1e-9).count();
    let pos = e.eigenvalues.iter().filter(|&&x| x > 1e-9).count();
    (neg, pos)
}

#[test]
fn cone_metric_signature() {
    for (n_h, want) in [(1usize, (4usize, 4usize)), (2, (4, 8))] {
        let e = flat_cone(n_h, false).unwrap();
        let l = e.lift.as_ref().unwrap();
        let d = l.big_dim();
        for p in e.cone.as_ref().unwrap().chart.sample(3, 1) {
            let g = values(&lift_metric_jets(l, &p, 0).unwrap());
            assert_eq!(signature(&g, d), want);
        }
    }
    let e = flat_cone(2, true).unwrap();
    let l = e.lift.as_ref().unwrap();
    let p = &e.cone.as_ref().unwrap().chart.sample(1, 1)[0];
    assert_eq!(signature(&values(&lift_metric_jets(l, p, 0).unwrap()), 12), (8, 4));
}

fn cone_frame(e: &quatlike::catalog::CatalogEntry, p: &[f64]) -> Vielbein {
    frame_from_structure(&e.cone.as_ref().unwrap().h_hat, p, None).unwrap()
}

#[test]
fn hyper_kahler_cone_has_traceless_w() {
    let e = flat_cone(1, false).unwrap();
    let cone = e.cone.as_ref().unwrap();
    let d = cone.chart.dim();
    for p in cone.chart.sample(2, 4) {
        // the catalog cone is flat, so W = 0 here; the nonzero trace case is the
        // deformed cone below
        let r = riemann(&obata_jets(&cone.h_hat.eval(&p, 2).unwrap(), d).unwrap().gamma, d).unwrap();
        let w = extract_w(&r, &cone_frame(&e, &p));
        assert!(w.trace.iter().all(|z| z.norm() < 1e-8));
        let wp = weyl_part(&w.w, 2);
        assert!(w.w.iter().zip(&wp).all(|(a, b)| (a - b).norm() < 1e-8));
    }
}

#[test]
fn deformed_cone_trace_part_matches_antisymmetric_ricci() {
    let e = by_name("deformed-cone", 1).unwrap();
    let cone = e.cone.as_ref().unwrap();
    let d = cone.chart.dim();
    for p in cone.chart.sample(3, 5) {
        let r = riemann(&obata_jets(&cone.h_hat.eval(&p, 2).unwrap(), d).unwrap().gamma, d).unwrap();
        let f = cone_frame(&e, &p);
        let w = extract_w(&r, &f);
        let tr = w.trace.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let ra = ricci_antisym(&ricci(&r, d), d);
        assert!(tr > 1e-4 && maxabs(&ra) > 1e-4);
        // brute-force contraction of the curvature rebuilt from W
        let (rw, imag) = curvature_from_w(&w.w, &f);
        assert!(imag < 1e-10);
        let raw = ricci_antisym(&ricci(&rw, d), d);
        assert!(maxdiff(&raw, &ra) < 1e-8);
        // and Ric_[XY] = -R^ℝ
        let rr = r_real_from_riemann(&r, d);
        assert!(ra.iter().zip(&rr).all(|(a, b)| (a + b).abs() < 1e-8));
    }
}

#[test]
fn integrability_h_matches_the_cone_metric_h() {
    for n_h in [1, 2] {
        let l = flat_cone(n_h, false).unwrap().lift.unwrap();
        for q in l.chart.sample(3, 8) {
            let i = check_lift_integrability(&l, &q).unwrap();
            let h = values(&l.h.as_ref().unwrap().eval(&q, 0).unwrap());
            assert!(i.residual_a < 1e-8 && i.residual_quat < 1e-8 && i.closed_form < 1e-8);
            assert!(maxdiff(&i.h, &h) < 1e-8);
        }
    }
}

#[test]
fn unstructured_a_fails_integrability() {
    let base = flat_cone(1, false).unwrap().lift.unwrap();
    let a = TensorField::from_expr(4, Rank::COVECTOR, 3, |x| {
        (0..12)
            .map(|i| {
                let c = ((i * 7 + 3) % 11) as f64 / 11.0 - 0.5;
                &x[i % 4] * &x[(i + 1) % 4] + c
            })
            .collect()
    });
    let l = LiftData { a, ..base };
    for q in l.chart.sample(3, 1) {
        assert!(check_lift_integrability(&l, &q).unwrap().residual_a > 1e-3);
    }
}

#[test]
fn xi_hat_deformations_keep_the_lift_integrable() {
    let e = flat_cone(1, false).unwrap();
    let l = e.lift.as_ref().unwrap();
    let d = l.big_dim();
    let constant = TensorField::from_expr(4, Rank::COVECTOR, 1, |x| {
        [0.3, -0.2, 0.1, 0.4].iter().map(|&c| Jet::constant(c, 4, x[0].order())).collect()
    });
    let mut fields = vec![constant];
    fields.extend((0..3).map(|s| XiHatSpec::random(1, s, 0.3).field()));
    for xh in &fields {
        let l2 = xi_hat_transform(l, xh);
        for p in e.cone.as_ref().unwrap().chart.sample(3, 7) {
            let j0 = values(&lift_structure_jets(l, &p, 0).unwrap());
            let j = lift_structure_jets(&l2, &p, 2).unwrap();
            assert!(maxdiff(&values(&j), &j0) > 1e-3);
            assert!(max_abs_jets(&nijenhuis_diag_jets(&j.iter().map(|x| x.truncate(1)).collect::<Vec<_>>(), d)) < 1e-8);
        }
    }
    // the seeded deformations carry ℝ-curvature
    for s in 0..3 {
        let l2 = xi_hat_transform(l, &XiHatSpec::random(1, s, 0.3).field());
        let p = &e.cone.as_ref().unwrap().chart.sample(1, 2)[0];
        let ob = obata_jets(&lift_structure_jets(&l2, p, 2).unwrap(), d).unwrap();
        assert!(maxabs(&r_real_from_riemann(&riemann(&ob.gamma, d).unwrap(), d)) > 1e-4);
    }
}
