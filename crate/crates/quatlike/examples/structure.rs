//! Quaternion algebra and integrability of the flat cone and of its
//! quaternionic quotient.

use quatlike::catalog::flat_cone;
use quatlike::jet::values;
use quatlike::qstruct::{algebra_residual, extract_omega_op_jets, max_abs_jets, nijenhuis_diag_jets};

fn main() -> quatlike::Result<()> {
    let e = flat_cone(1, false)?;
    let cone = e.cone.as_ref().unwrap();
    let l = e.lift.as_ref().unwrap();
    let d = cone.chart.dim();
    let n = l.small_dim();
    for p in cone.chart.sample(3, 1) {
        let j = cone.h_hat.eval(&p, 1)?;
        println!(
            "cone  algebra {:.1e}  nijenhuis {:.1e}",
            algebra_residual(&values(&j), d),
            max_abs_jets(&nijenhuis_diag_jets(&j, d))
        );
    }
    for q in l.chart.sample(3, 1) {
        let j = l.j.eval(&q, 1)?;
        let w = extract_omega_op_jets(&j, n)?;
        println!(
            "small algebra {:.1e}  N + J·ω fit {:.1e}  ω^Op = {:?}",
            algebra_residual(&values(&j), n),
            w.residual,
            &values(&w.omega)[..4]
        );
    }
    Ok(())
}
