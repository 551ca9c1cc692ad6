//! sp(1,1) generators on the quaternionic-hyperbolic slice: Killing
//! condition, rotation functions, moment maps and the lift to the cone.

use quatlike::catalog::flat_cone;
use quatlike::confmap::{choose_su2_gauge_jets, LiftData};
use quatlike::connection::{oproiu_jets, xi_transform};
use quatlike::jet::{values, Jet};
use quatlike::qstruct::frame_from_structure;
use quatlike::symmetry::{lift_symmetry, moment_maps, project_symmetry, rotation_functions, symmetry_residual, SymmetryPoint};

fn main() -> quatlike::Result<()> {
    let e = flat_cone(1, false)?;
    let l = e.lift.as_ref().unwrap();
    let cone = e.cone.as_ref().unwrap();
    let n = l.small_dim();
    let p = &cone.chart.sample(1, 8)[0];
    let q = &p[4..];

    let j = l.j.eval(q, 2)?;
    let a = l.a.eval(q, 1)?;
    let (op, _, _) = oproiu_jets(&j, n)?;
    let (xi, _) = choose_su2_gauge_jets(&j, &a, op.omega.as_ref().unwrap(), n)?;
    let (c, _) = xi_transform(&op, &xi, &j, 1e-8)?;
    let omega: Vec<Jet> = a.iter().map(|x| x.scale(-0.5)).collect();
    let frame = frame_from_structure(&l.j, q, None)?;
    let sp = SymmetryPoint { gamma: &c.gamma, omega: &omega, j: &j, frame: &frame, nu: LiftData::nu(l.z0_sign), d: n };

    for g in e.generators.iter().take(6) {
        let k = g.projected().eval(q, 3)?;
        let rot = rotation_functions(&k, &j, n, 1e-8)?;
        let (pr, dk) = moment_maps(&sp, &k, &rot.values())?;
        let kh = values(&lift_symmetry(&g.projected(), l, 1e-8).eval(p, 0)?);
        let back = project_symmetry(&kh, p)?;
        println!(
            "{:<8} killing {:.1e}  P = [{:+.4}, {:+.4}, {:+.4}]  |P - P_dk| {:.1e}  k̂⁰ {:.1e}",
            g.name,
            symmetry_residual(&c.gamma, &k, n)?,
            pr[0],
            pr[1],
            pr[2],
            (0..3).fold(0.0f64, |m, i| m.max((pr[i] - dk.p[i]).abs())),
            back.radial
        );
    }
    Ok(())
}
