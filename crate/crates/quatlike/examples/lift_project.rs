//! Lift LiftData to the cone, project it back, and shift it by ξ̂.

use quatlike::catalog::{flat_cone, XiHatSpec};
use quatlike::confmap::{lift_structure, project, xi_hat_transform, ConformalHypercomplex, homothetic_adapted};
use quatlike::jet::values;
use quatlike::qstruct::{max_abs_jets, nijenhuis_diag_jets};

fn maxdiff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn main() -> quatlike::Result<()> {
    let e = flat_cone(1, false)?;
    let l = e.lift.as_ref().unwrap();
    let cone = e.cone.as_ref().unwrap();
    let p = &cone.chart.sample(1, 2)[0];
    let q = &p[4..];

    let jl = lift_structure(l);
    println!("lift = cone: {:.1e}", maxdiff(&values(&jl.eval(p, 0)?), &values(&cone.h_hat.eval(p, 0)?)));
    let back = project(cone, l.z0_sign, l.z0_range, l.chart.clone());
    println!("project(cone) A = A: {:.1e}", maxdiff(&values(&back.a.eval(q, 0)?), &values(&l.a.eval(q, 0)?)));

    let xh = XiHatSpec::random(1, 4, 0.3);
    let l2 = xi_hat_transform(l, &xh.field());
    let j2 = lift_structure(&l2);
    let jets = j2.eval(p, 1)?;
    println!(
        "ξ̂-shifted: |Ĵ' - Ĵ| = {:.3}, N(Ĵ') = {:.1e}",
        maxdiff(&values(&jets), &values(&cone.h_hat.eval(p, 0)?)),
        max_abs_jets(&nijenhuis_diag_jets(&jets, l.big_dim()))
    );
    let c2 = ConformalHypercomplex { n_h: 1, chart: l2.big_chart(), h_hat: j2, metric: None, k: homothetic_adapted(l.big_dim()) };
    let l3 = project(&c2, l.z0_sign, l.z0_range, l.chart.clone());
    println!("project(lift(L')) A = A': {:.1e}", maxdiff(&values(&l3.a.eval(q, 0)?), &values(&l2.a.eval(q, 0)?)));
    Ok(())
}
