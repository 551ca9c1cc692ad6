//! Obata connection on the cone, Oproiu connection downstairs, and the
//! ξ-gauge in which the latter becomes Levi-Civita.

use quatlike::catalog::flat_cone;
use quatlike::confmap::{choose_su2_gauge_jets, small_metric};
use quatlike::connection::{levi_civita_jets, obata_jets, oproiu_jets, xi_transform};
use quatlike::jet::values;

fn main() -> quatlike::Result<()> {
    let e = flat_cone(1, false)?;
    let cone = e.cone.as_ref().unwrap();
    let l = e.lift.as_ref().unwrap();
    let d = cone.chart.dim();
    let n = l.small_dim();

    let p = &cone.chart.sample(1, 3)[0];
    let ob = obata_jets(&cone.h_hat.eval(p, 2)?, d)?;
    let lc = levi_civita_jets(&cone.metric.as_ref().unwrap().eval(p, 2)?, d)?;
    let diff = values(&ob.gamma).iter().zip(values(&lc)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("cone: ∇Ĵ residual {:.1e}, |Obata - Levi-Civita| {:.1e}", ob.residual, diff);

    let q = &l.chart.sample(1, 3)[0];
    let j = l.j.eval(q, 2)?;
    let a = l.a.eval(q, 1)?;
    let (op, wres, sres) = oproiu_jets(&j, n)?;
    let (xi, gres) = choose_su2_gauge_jets(&j, &a, op.omega.as_ref().unwrap(), n)?;
    let (c, _) = xi_transform(&op, &xi, &j, 1e-8)?;
    let (g, nu) = small_metric(l, l.z0_sign)?;
    let lcs = levi_civita_jets(&g.eval(q, 2)?, n)?;
    let diff = values(&c.gamma).iter().zip(values(&lcs)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    println!("small: Oproiu residuals {:.1e} {:.1e}, gauge {:.1e}, |Γ' - Levi-Civita| {:.1e}, ν = {nu}", wres, sres, gres, diff);
    Ok(())
}
