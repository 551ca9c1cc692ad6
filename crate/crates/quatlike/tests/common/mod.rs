//! Oracles shared by the integration tests.
#![allow(dead_code)]

use quatlike::catalog::flat_cone;
use quatlike::confmap::{small_metric, LiftData};
use quatlike::field::eps;
use quatlike::jet::{values, Jet};
use quatlike::qstruct::{nijenhuis_jets, omega_op_closed_form};

pub fn lift_data(n_h: usize) -> LiftData {
    flat_cone(n_h, false).unwrap().lift.unwrap()
}

/// `Σ_a N^{J^a}` from the single-structure tensors, compared with
/// `c⁻¹ (-½ J⃗_X^Z·ω⃗_Y + ½ J⃗_Y^Z·ω⃗_X)` for the closed-form ω⃗.
pub fn nijenhuis_mismatch(l: &LiftData, q: &[f64], c: f64) -> f64 {
    let n = l.small_dim();
    let j = l.j.eval(q, 1).unwrap();
    let a = l.a.eval(q, 0).unwrap();
    let mut raw = vec![0.0; n * n * n];
    for s in 0..3 {
        let ns = values(&nijenhuis_jets(&j[s * n * n..(s + 1) * n * n], n));
        for (r, v) in raw.iter_mut().zip(ns) {
            *r += v;
        }
    }
    let jv = values(&j);
    let w = values(&omega_op_closed_form(&j.iter().map(|x| x.truncate(0)).collect::<Vec<_>>(), &a, n));
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let mut m = 0.0;
                for s in 0..3 {
                    m += -0.5 * jv[(s * n + x) * n + z] * w[s * n + y] + 0.5 * jv[(s * n + y) * n + z] * w[s * n + x];
                }
                worst = worst.max((c * raw[(x * n + y) * n + z] - m).abs());
            }
        }
    }
    worst
}

/// `max |∂ω - ∂ω + c ω×ω - ½ν J⃗ g|` with ω = -½A on the slice `z0`.
pub fn field_strength_mismatch(l: &LiftData, q: &[f64], z0: f64, c: f64) -> f64 {
    let n = l.small_dim();
    let a = l.a.eval(q, 1).unwrap();
    let w: Vec<Jet> = a.iter().map(|x| x.scale(-0.5)).collect();
    let (g, nu) = small_metric(l, z0).unwrap();
    let g = values(&g.eval(q, 0).unwrap());
    let j = values(&l.j.eval(q, 0).unwrap());
    let mut worst: f64 = 0.0;
    for s in 0..3 {
        for x in 0..n {
            for y in 0..n {
                let mut r = w[s * n + y].d1(x) - w[s * n + x].d1(y);
                for b in 0..3 {
                    for e in 0..3 {
                        r += c * eps(s, b, e) * w[b * n + x].value() * w[e * n + y].value();
                    }
                }
                let jl: f64 = (0..n).map(|z| j[(s * n + x) * n + z] * g[z * n + y]).sum();
                worst = worst.max((r - 0.5 * nu * jl).abs());
            }
        }
    }
    worst
}

/// A smooth field on ℝ³ built from a few coefficients.
#[derive(Clone, Debug)]
pub struct Field {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: f64,
    pub e: [f64; 3],
}

impl Field {
    pub fn jet(&self, x: &[Jet]) -> Jet {
        let dot = |w: &[f64; 3]| {
            let mut s = Jet::zero(3, x[0].order());
            for i in 0..3 {
                s.add_scaled(w[i], &x[i]);
            }
            s
        };
        let mut r2 = Jet::constant(1.0, 3, x[0].order());
        for xi in x {
            r2.add_mul(xi, xi);
        }
        let t1 = dot(&self.a).sin() * dot(&self.b).exp();
        let t2 = r2.recip().unwrap().scale(self.c);
        let t3 = (dot(&self.e) * dot(&self.e) + 2.0).sqrt().unwrap();
        t1 + t2 + t3
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let dot = |w: &[f64; 3]| w[0] * p[0] + w[1] * p[1] + w[2] * p[2];
        let r2 = 1.0 + p.iter().map(|x| x * x).sum::<f64>();
        dot(&self.a).sin() * dot(&self.b).exp() + self.c / r2 + (dot(&self.e).powi(2) + 2.0).sqrt()
    }
}
