//! Chart-local fields.
//!
//! Component arrays are flattened row-major with lower indices first, then
//! upper indices: `T_X^Y` is `t[X * dim + Y]`, `Γ_XY^Z` is
//! `g[(X * dim + Y) * dim + Z]`, `R_XYZ^W` is
//! `r[((X * dim + Y) * dim + Z) * dim + W]`. Triplet-valued objects carry the
//! triplet index `a ∈ {0,1,2}` outermost.

use crate::error::{Error, Result};
use crate::jet::{variables, Jet, MAX_ORDER};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type Domain = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A coordinate patch with labels, a sampling box and a domain predicate.
#[derive(Clone)]
pub struct Chart {
    pub names: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    domain: Domain,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("names", &self.names)
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .finish()
    }
}

impl Chart {
    /// A chart whose domain is the open box `(lo, hi)`.
    pub fn boxed(names: Vec<String>, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(names.len(), lo.len());
        assert_eq!(names.len(), hi.len());
        Chart {
            names,
            lo,
            hi,
            domain: Arc::new(|_| true),
        }
    }

    /// Restricts the domain further by `pred`.
    pub fn with_domain(mut self, pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Arc::new(pred);
        self
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| x >= l && x <= h)
            && (self.domain)(p)
    }

    /// `n` points drawn uniformly from the box, rejecting those outside the
    /// domain. Deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut tries = 0usize;
        while out.len() < n {
            let p: Vec<f64> = self
                .lo
                .iter()
                .zip(&self.hi)
                .map(|(l, h)| rng.gen_range(*l..*h))
                .collect();
            tries += 1;
            assert!(tries < 1000 * (n + 10), "chart domain too small to sample");
            if (self.domain)(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Checks that `p` lies in the chart.
    pub fn check(&self, p: &[f64]) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Domain)
        }
    }
}

/// Tensor type `(p contravariant, q covariant)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rank {
    pub up: usize,
    pub down: usize,
}

impl Rank {
    pub const SCALAR: Rank = Rank { up: 0, down: 0 };
    pub const VECTOR: Rank = Rank { up: 1, down: 0 };
    pub const COVECTOR: Rank = Rank { up: 0, down: 1 };
    pub const ENDO: Rank = Rank { up: 1, down: 1 };
    pub const BILINEAR: Rank = Rank { up: 0, down: 2 };
}

type Eval = Arc<dyn Fn(&[f64], u8) -> Result<Vec<Jet>> + Send + Sync>;

/// A chart-local tensor field, evaluated to jets of its components.
#[derive(Clone)]
pub struct TensorField {
    pub dim: usize,
    pub rank: Rank,
    /// Number of stacked copies (3 for triplets).
    pub copies: usize,
    f: Eval,
}

impl TensorField {
    /// Field given by a point-and-order evaluator.
    pub fn new(
        dim: usize,
        rank: Rank,
        copies: usize,
        f: impl Fn(&[f64], u8) -> Result<Vec<Jet>> + Send + Sync + 'static,
    ) -> Self {
        TensorField {
            dim,
            rank,
            copies,
            f: Arc::new(f),
        }
    }

    /// Field given by a jet expression in the coordinates.
    pub fn from_expr(
        dim: usize,
        rank: Rank,
        copies: usize,
        g: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, rank, copies, move |p, order| Ok(g(&variables(p, order)?)))
    }

    pub fn components(&self) -> usize {
        self.copies * self.dim.pow((self.rank.up + self.rank.down) as u32)
    }

    /// Component jets at `p` to the given order.
    pub fn eval(&self, p: &[f64], order: u8) -> Result<Vec<Jet>> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooHigh(order));
        }
        if p.len() != self.dim {
            return Err(Error::Domain);
        }
        let v = (self.f)(p, order)?;
        debug_assert_eq!(v.len(), self.components());
        Ok(v)
    }

    /// Component values and first derivatives: `(values, d[c * dim + X])`.
    pub fn partial(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let j = self.eval(p, 1)?;
        let vals = j.iter().map(Jet::value).collect();
        let mut d = Vec::with_capacity(j.len() * self.dim);
        for c in &j {
            for x in 0..self.dim {
                d.push(c.d1(x));
            }
        }
        Ok((vals, d))
    }
}

/// Evaluates `field` at `p` after checking the chart domain.
pub fn partial(chart: &Chart, field: &TensorField, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    chart.check(p)?;
    field.partial(p)
}

/// A triplet of elements of a common carrier.
#[derive(Clone, Debug, PartialEq)]
pub struct Triplet<T>(pub [T; 3]);

/// Levi-Civita symbol on {0,1,2}.
pub fn eps(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl Triplet<f64> {
    pub fn cross(&self, o: &Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        Triplet([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn dot(&self, o: &Self) -> f64 {
        (0..3).map(|i| self.0[i] * o.0[i]).sum()
    }

    pub fn add(&self, o: &Self) -> Self {
        Triplet([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Triplet<Jet> {
    pub fn cross(&self, o: &Self) -> Self {
        let (a, b) = (&self.0, &o.0);
        Triplet([
            &a[1] * &b[2] - &a[2] * &b[1],
            &a[2] * &b[0] - &a[0] * &b[2],
            &a[0] * &b[1] - &a[1] * &b[0],
        ])
    }

    pub fn dot(&self, o: &Self) -> Jet {
        let mut s = &self.0[0] * &o.0[0];
        s.add_mul(&self.0[1], &o.0[1]);
        s.add_mul(&self.0[2], &o.0[2]);
        s
    }
}

/// Lie derivative `L_k T` on jets. `k` holds `k^Y`, `t` the components of a
/// tensor of rank `rank`. The result is one order lower than its inputs.
pub fn lie_derivative_jets(k: &[Jet], t: &[Jet], rank: Rank, dim: usize) -> Result<Vec<Jet>> {
    let n = dim;
    let dk: Vec<Vec<Jet>> = k.iter().map(|c| (0..n).map(|x| c.partial(x)).collect()).collect();
    let kk: Vec<Jet> = k.iter().map(|c| c.truncate(c.order() - 1)).collect();
    let dt = |c: usize, x: usize| t[c].partial(x);
    let tt: Vec<Jet> = t.iter().map(|c| c.truncate(c.order().saturating_sub(1))).collect();
    let transport = |c: usize| {
        let mut s = Jet::zero(n, kk[0].order().min(tt[0].order()));
        for z in 0..n {
            s.add_mul(&kk[z], &dt(c, z));
        }
        s
    };
    let out = match (rank.up, rank.down) {
        (0, 0) => (0..1).map(transport).collect(),
        (1, 0) => (0..n)
            .map(|y| {
                let mut s = transport(y);
                for z in 0..n {
                    s.add_mul_scaled(-1.0, &tt[z], &dk[y][z]);
                }
                s
            })
            .collect(),
        (0, 1) => (0..n)
            .map(|x| {
                let mut s = transport(x);
                for z in 0..n {
                    s.add_mul(&dk[z][x], &tt[z]);
                }
                s
            })
            .collect(),
        (1, 1) => {
            let mut out = Vec::with_capacity(n * n);
            for x in 0..n {
                for y in 0..n {
                    let mut s = transport(x * n + y);
                    for z in 0..n {
                        s.add_mul(&dk[z][x], &tt[z * n + y]);
                        s.add_mul_scaled(-1.0, &tt[x * n + z], &dk[y][z]);
                    }
                    out.push(s);
                }
            }
            out
        }
        (0, 2) => {
            let mut out = Vec::with_capacity(n * n);
            for x in 0..n {
                for y in 0..n {
                    let mut s = transport(x * n + y);
                    for z in 0..n {
                        s.add_mul(&dk[z][x], &tt[z * n + y]);
                        s.add_mul(&dk[z][y], &tt[x * n + z]);
                    }
                    out.push(s);
                }
            }
            out
        }
        (u, d) => return Err(Error::UnsupportedRank(u, d)),
    };
    Ok(out)
}

/// Lie bracket `[k, v]` of vector fields on jets.
pub fn lie_bracket_jets(k: &[Jet], v: &[Jet], dim: usize) -> Vec<Jet> {
    lie_derivative_jets(k, v, Rank::VECTOR, dim).expect("vector rank is supported")
}

/// Lie derivative of a tensor field along a vector field at `p`.
pub fn lie_derivative(k: &TensorField, t: &TensorField, p: &[f64]) -> Result<Vec<f64>> {
    if k.rank != Rank::VECTOR {
        return Err(Error::UnsupportedRank(k.rank.up, k.rank.down));
    }
    let kj = k.eval(p, 1)?;
    let tj = t.eval(p, 1)?;
    let per = t.dim.pow((t.rank.up + t.rank.down) as u32);
    let mut out = Vec::with_capacity(tj.len());
    for c in 0..t.copies {
        let l = lie_derivative_jets(&kj, &tj[c * per..(c + 1) * per], t.rank, t.dim)?;
        out.extend(l.iter().map(Jet::value));
    }
    Ok(out)
}

/// `(dA)_XY = ∂_X A_Y - ∂_Y A_X` on jets, applied to each stacked copy.
pub fn exterior_derivative_jets(a: &[Jet], dim: usize) -> Vec<Jet> {
    let copies = a.len() / dim;
    let mut out = Vec::with_capacity(copies * dim * dim);
    for c in 0..copies {
        let s = &a[c * dim..(c + 1) * dim];
        for x in 0..dim {
            for y in 0..dim {
                out.push(s[y].partial(x) - s[x].partial(y));
            }
        }
    }
    out
}

/// Exterior derivative of a one-form (or triplet of one-forms) at `p`.
pub fn exterior_derivative(a: &TensorField, p: &[f64]) -> Result<Vec<f64>> {
    if a.rank != Rank::COVECTOR {
        return Err(Error::UnsupportedRank(a.rank.up, a.rank.down));
    }
    let j = a.eval(p, 1)?;
    Ok(exterior_derivative_jets(&j, a.dim).iter().map(Jet::value).collect())
}

/// Gradient one-form of a scalar field, as a field.
pub fn gradient_field(f: TensorField) -> TensorField {
    let dim = f.dim;
    TensorField::new(dim, Rank::COVECTOR, 1, move |p, order| {
        let j = f.eval(p, (order + 1).min(MAX_ORDER))?;
        Ok((0..dim).map(|x| j[0].partial(x).truncate(order)).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_field_partials() {
        let f = TensorField::from_expr(4, Rank::SCALAR, 1, |x| vec![&x[1] * &x[2]]);
        let chart = Chart::boxed(
            (0..4).map(|i| format!("q{i}")).collect(),
            vec![-5.0; 4],
            vec![5.0; 4],
        );
        let (v, d) = partial(&chart, &f, &[0.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(v, vec![2.0]);
        assert_eq!(&d[..4], &[0.0, 2.0, 1.0, 0.0]);
        assert!(matches!(
            partial(&chart, &f, &[9.0, 0.0, 0.0, 0.0]),
            Err(Error::Domain)
        ));
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let f = TensorField::from_expr(2, Rank::ENDO, 1, |x| {
            (0..4).map(|i| Jet::constant(i as f64, x.len(), x[0].order())).collect()
        });
        let (_, d) = f.partial(&[0.1, 0.2]).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn exterior_derivative_example() {
        // A = q2 dq1 (coordinates 0-based: A_0 = x_1).
        let a = TensorField::from_expr(4, Rank::COVECTOR, 1, |x| {
            let z = Jet::zero(4, x[0].order());
            vec![x[1].clone(), z.clone(), z.clone(), z]
        });
        let d = exterior_derivative(&a, &[0.3, 0.1, 0.0, 0.0]).unwrap();
        assert_eq!(d[4], 1.0);
        assert_eq!(d[1], -1.0);
    }

    #[test]
    fn lie_derivative_of_zero_field() {
        let k = TensorField::from_expr(3, Rank::VECTOR, 1, |x| {
            vec![Jet::zero(3, x[0].order()); 3]
        });
        let g = TensorField::from_expr(3, Rank::BILINEAR, 1, |x| {
            (0..9).map(|i| &x[i % 3] * &x[i / 3]).collect()
        });
        let l = lie_derivative(&k, &g, &[0.2, 0.4, 0.6]).unwrap();
        assert!(l.iter().all(|&v| v == 0.0));
        let bad = TensorField::from_expr(3, Rank { up: 2, down: 0 }, 1, |x| {
            vec![Jet::zero(3, x[0].order()); 9]
        });
        assert!(matches!(
            lie_derivative(&k, &bad, &[0.0; 3]),
            Err(Error::UnsupportedRank(2, 0))
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = Chart::boxed(vec!["a".into(), "b".into()], vec![0.0; 2], vec![1.0; 2])
            .with_domain(|p| p[0] + p[1] < 1.0);
        let a = c.sample(20, 3);
        assert_eq!(a, c.sample(20, 3));
        assert!(a.iter().all(|p| c.contains(p)));
    }
}
