//! Second-order jets of a tensor field against central differences.

use quatlike::field::{Rank, TensorField};
use quatlike::jet::Jet;

fn main() -> quatlike::Result<()> {
    // v = (sin(x y) e^z, x² z - y)
    let v = TensorField::from_expr(3, Rank::VECTOR, 1, |x| {
        let a = (&x[0] * &x[1]).sin() * x[2].exp();
        let b = &(&x[0] * &x[0]) * &x[2] - &x[1];
        let mut c = Jet::zero(3, a.order());
        c += &x[0];
        vec![a, b, c]
    });
    let p = [0.3, -0.7, 0.2];
    let j = v.eval(&p, 2)?;
    let h = 1e-4;
    for i in 0..3 {
        let mut pp = p;
        let mut pm = p;
        pp[i] += h;
        pm[i] -= h;
        let fp = v.eval(&pp, 0)?;
        let fm = v.eval(&pm, 0)?;
        for c in 0..2 {
            let fd = (fp[c].value() - fm[c].value()) / (2.0 * h);
            println!("d{i} v{c}: jet {:+.12}  fd {:+.12}", j[c].d1(i), fd);
        }
    }
    println!("d0d1 v0 = {:+.12}", j[0].d2(0, 1));
    Ok(())
}
