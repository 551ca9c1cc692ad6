//! Einstein bookkeeping on slices of the cone, and the ℝ-curvature of a
//! ξ̂-deformed cone.

use quatlike::catalog::{by_name, flat_cone};
use quatlike::confmap::small_metric;
use quatlike::connection::{levi_civita_jets, obata_jets};
use quatlike::curvature::{einstein_check, r_real_from_riemann, ricci, riemann, su2_curvature};
use quatlike::jet::{values, Jet};

fn main() -> quatlike::Result<()> {
    let e = flat_cone(1, false)?;
    let l = e.lift.as_ref().unwrap();
    let n = l.small_dim();
    let q = &l.chart.sample(1, 5)[0];
    let j = values(&l.j.eval(q, 0)?);
    let a = l.a.eval(q, 2)?;
    let omega: Vec<Jet> = a.iter().map(|x| x.scale(-0.5).truncate(1)).collect();
    let rvec = su2_curvature(&omega, n)?;
    for z0 in [0.5, 1.0, 2.0, 4.0] {
        let (g, nu) = small_metric(l, z0)?;
        let gj = g.eval(q, 2)?;
        let r = riemann(&levi_civita_jets(&gj, n)?, n)?;
        let (e1, e2) = einstein_check(&values(&gj), &ricci(&r, n), Some(&rvec), &j, nu, n);
        let (w, _) = einstein_check(&values(&gj), &ricci(&r, n), None, &j, 2.0 * nu, n);
        println!("z0 = {z0}: ν = {nu:+}, Einstein {e1:.1e}, R⃗ = ½νJ⃗ {e2:.1e}, with 2ν {w:.2}");
    }

    let d = by_name("deformed-cone", 1)?;
    let cone = d.cone.as_ref().unwrap();
    let p = &cone.chart.sample(1, 5)[0];
    let dim = cone.chart.dim();
    let ob = obata_jets(&cone.h_hat.eval(p, 2)?, dim)?;
    let rr = r_real_from_riemann(&riemann(&ob.gamma, dim)?, dim);
    println!("deformed cone: max |R^ℝ| = {:.3}", rr.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    Ok(())
}
