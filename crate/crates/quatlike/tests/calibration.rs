//! The two normalization constants that the defining relations leave open,
//! pinned by consistency on the flat cone and its quotient.

mod common;

use common::{field_strength_mismatch, lift_data, nijenhuis_mismatch};
use quatlike::confmap::small_metric;
use quatlike::jet::{values, Jet};
use quatlike::qstruct::{extract_omega_op_jets, omega_op_closed_form, C_N};
use quatlike::curvature::su2_curvature;

#[test]
fn nijenhuis_constant_calibration() {
    assert_eq!(C_N, 1.0 / 12.0);
    for n_h in [1, 2] {
        let l = lift_data(n_h);
        for q in l.chart.sample(5, 3) {
            assert!(nijenhuis_mismatch(&l, &q, C_N) < 1e-8);
            for wrong in [1.0 / 6.0, 1.0 / 24.0, -1.0 / 12.0] {
                assert!(nijenhuis_mismatch(&l, &q, wrong) > 1e-3, "c = {wrong} should not fit");
            }
            let j = l.j.eval(&q, 1).unwrap();
            let fit = extract_omega_op_jets(&j, l.small_dim()).unwrap();
            let cf = omega_op_closed_form(&j.iter().map(|x| x.truncate(0)).collect::<Vec<_>>(), &l.a.eval(&q, 0).unwrap(), l.small_dim());
            let d = values(&fit.omega).iter().zip(values(&cf)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(d < 1e-8 && fit.residual < 1e-8);
        }
    }
}

#[test]
fn su2_field_strength_constant_calibration() {
    for n_h in [1, 2] {
        let l = lift_data(n_h);
        for q in l.chart.sample(5, 4) {
            for z0 in [0.5, 1.0, 2.0, 4.0] {
                assert!(field_strength_mismatch(&l, &q, z0, 2.0) < 1e-8);
                for wrong in [1.0, -2.0, 4.0] {
                    assert!(field_strength_mismatch(&l, &q, z0, wrong) > 1e-3, "c = {wrong} should not fit");
                }
            }
            // the library field strength uses the same constant
            let w: Vec<Jet> = l.a.eval(&q, 1).unwrap().iter().map(|x| x.scale(-0.5)).collect();
            let rv = su2_curvature(&w, l.small_dim()).unwrap();
            let (g, nu) = small_metric(&l, 1.0).unwrap();
            let (_, e2) = quatlike::curvature::einstein_check(
                &values(&g.eval(&q, 0).unwrap()),
                &vec![0.0; l.small_dim() * l.small_dim()],
                Some(&rv),
                &values(&l.j.eval(&q, 0).unwrap()),
                nu,
                l.small_dim(),
            );
            assert!(e2 < 1e-8);
        }
    }
}
