//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] carries a value together with all partial derivatives up to a
//! fixed order (at most 3) with respect to the `dim` chart coordinates.
//! Second and third derivatives are stored packed over sorted index tuples,
//! so mixed partials are symmetric by construction.
//!
//! ```
//! use quatlike::jet::{jet_eval, Jet};
//! let j = jet_eval(|x| &(&x[0] * &x[0]) * &x[1], &[2.0, 3.0], 2).unwrap();
//! assert_eq!(j.value(), 12.0);
//! assert_eq!(j.d1(0), 12.0);
//! assert_eq!(j.d2(0, 1), 4.0);
//! ```

use crate::error::{Error, Result};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub const MAX_ORDER: u8 = 3;

#[inline]
fn n2(d: usize) -> usize {
    d * (d + 1) / 2
}

#[inline]
fn n3(d: usize) -> usize {
    d * (d + 1) * (d + 2) / 6
}

#[inline]
fn idx2(i: usize, j: usize, d: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * (2 * d - i + 1) / 2 + (j - i)
}

#[inline]
fn idx3(i: usize, j: usize, k: usize, d: usize) -> usize {
    let mut t = [i, j, k];
    t.sort_unstable();
    let [i, j, k] = t;
    n3(d) - n3(d - i) + idx2(j - i, k - i, d - i)
}

fn layout_len(order: u8, dim: usize) -> usize {
    let mut n = 1;
    if order >= 1 {
        n += dim;
    }
    if order >= 2 {
        n += n2(dim);
    }
    if order >= 3 {
        n += n3(dim);
    }
    n
}

/// Value plus partial derivatives up to `order` in `dim` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: u8,
    dim: usize,
    data: Vec<f64>,
}

impl Jet {
    /// The constant `c`.
    pub fn constant(c: f64, dim: usize, order: u8) -> Self {
        let mut data = vec![0.0; layout_len(order, dim)];
        data[0] = c;
        Jet { order, dim, data }
    }

    /// The zero jet.
    pub fn zero(dim: usize, order: u8) -> Self {
        Self::constant(0.0, dim, order)
    }

    /// Coordinate function `x_i` evaluated at `value`.
    pub fn variable(value: f64, i: usize, dim: usize, order: u8) -> Self {
        let mut j = Self::constant(value, dim, order);
        if order >= 1 {
            j.data[1 + i] = 1.0;
        }
        j
    }

    /// Builds a jet from explicit derivative data. `d2` and `d3` are read
    /// only on sorted index tuples.
    pub fn from_parts(
        value: f64,
        d1: &[f64],
        d2: Option<&dyn Fn(usize, usize) -> f64>,
        d3: Option<&dyn Fn(usize, usize, usize) -> f64>,
    ) -> Self {
        let dim = d1.len();
        let order = match (d2.is_some(), d3.is_some()) {
            (_, true) => 3,
            (true, false) => 2,
            _ => 1,
        };
        let mut j = Self::constant(value, dim, order);
        j.data[1..1 + dim].copy_from_slice(d1);
        if let Some(f) = d2 {
            let o = 1 + dim;
            for a in 0..dim {
                for b in a..dim {
                    j.data[o + idx2(a, b, dim)] = f(a, b);
                }
            }
        }
        if let Some(f) = d3 {
            let o = 1 + dim + n2(dim);
            for a in 0..dim {
                for b in a..dim {
                    for c in b..dim {
                        j.data[o + idx3(a, b, c, dim)] = f(a, b, c);
                    }
                }
            }
        }
        j
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self) -> f64 {
        self.data[0]
    }

    pub fn d1(&self, i: usize) -> f64 {
        if self.order < 1 {
            return 0.0;
        }
        self.data[1 + i]
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        if self.order < 2 {
            return 0.0;
        }
        self.data[1 + self.dim + idx2(i, j, self.dim)]
    }

    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        if self.order < 3 {
            return 0.0;
        }
        self.data[1 + self.dim + n2(self.dim) + idx3(i, j, k, self.dim)]
    }

    /// Gradient as a vector.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.d1(i)).collect()
    }

    /// Raw packed storage `[value, d1, d2, d3]`.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Drops derivatives above `order`.
    pub fn truncate(&self, order: u8) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            order,
            dim: self.dim,
            data: self.data[..layout_len(order, self.dim)].to_vec(),
        }
    }

    /// The jet of `∂f/∂x_k`, one order lower.
    pub fn partial(&self, k: usize) -> Jet {
        assert!(self.order >= 1, "partial of an order-0 jet");
        let d = self.dim;
        let mut out = Jet::zero(d, self.order - 1);
        out.data[0] = self.d1(k);
        if self.order >= 2 {
            for i in 0..d {
                out.data[1 + i] = self.d2(k, i);
            }
        }
        if self.order >= 3 {
            let o = 1 + d;
            for i in 0..d {
                for j in i..d {
                    out.data[o + idx2(i, j, d)] = self.d3(k, i, j);
                }
            }
        }
        out
    }

    /// Re-expresses a jet in `big_dim` variables where small variable `i`
    /// is big variable `map[i]`. The remaining big directions get zero
    /// derivatives.
    pub fn embed(&self, big_dim: usize, map: &[usize]) -> Jet {
        assert_eq!(map.len(), self.dim);
        let mut out = Jet::constant(self.value(), big_dim, self.order);
        let d = self.dim;
        if self.order >= 1 {
            for i in 0..d {
                out.data[1 + map[i]] = self.d1(i);
            }
        }
        if self.order >= 2 {
            let o = 1 + big_dim;
            for i in 0..d {
                for j in i..d {
                    out.data[o + idx2(map[i], map[j], big_dim)] = self.d2(i, j);
                }
            }
        }
        if self.order >= 3 {
            let o = 1 + big_dim + n2(big_dim);
            for i in 0..d {
                for j in i..d {
                    for k in j..d {
                        out.data[o + idx3(map[i], map[j], map[k], big_dim)] = self.d3(i, j, k);
                    }
                }
            }
        }
        out
    }

    /// Keeps only the derivative directions listed in `sel`.
    pub fn restrict(&self, sel: &[usize]) -> Jet {
        let d = sel.len();
        let mut out = Jet::constant(self.value(), d, self.order);
        if self.order >= 1 {
            for i in 0..d {
                out.data[1 + i] = self.d1(sel[i]);
            }
        }
        if self.order >= 2 {
            let o = 1 + d;
            for i in 0..d {
                for j in i..d {
                    out.data[o + idx2(i, j, d)] = self.d2(sel[i], sel[j]);
                }
            }
        }
        if self.order >= 3 {
            let o = 1 + d + n2(d);
            for i in 0..d {
                for j in i..d {
                    for k in j..d {
                        out.data[o + idx3(i, j, k, d)] = self.d3(sel[i], sel[j], sel[k]);
                    }
                }
            }
        }
        out
    }

    fn common(&self, other: &Jet) -> u8 {
        assert_eq!(self.dim, other.dim, "jet dimension mismatch");
        self.order.min(other.order)
    }

    /// `self += a * b`.
    pub fn add_mul(&mut self, a: &Jet, b: &Jet) {
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            *self = self.truncate(order);
        }
        mul_acc(&mut self.data, &a.data, &b.data, order, self.dim, 1.0);
    }

    /// `self += c * a`.
    pub fn add_scaled(&mut self, c: f64, a: &Jet) {
        let order = self.common(a);
        if order < self.order {
            *self = self.truncate(order);
        }
        let n = self.data.len();
        for (x, y) in self.data.iter_mut().zip(&a.data[..n]) {
            *x += c * y;
        }
    }

    /// `self += c * a * b`.
    pub fn add_mul_scaled(&mut self, c: f64, a: &Jet, b: &Jet) {
        let order = self.order.min(a.order).min(b.order);
        if order < self.order {
            *self = self.truncate(order);
        }
        mul_acc(&mut self.data, &a.data, &b.data, order, self.dim, c);
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    /// Composition `φ ∘ self` given `[φ, φ', φ'', φ''']` at `self.value()`.
    pub fn compose(&self, phi: [f64; 4]) -> Jet {
        let d = self.dim;
        let mut out = Jet::zero(d, self.order);
        out.data[0] = phi[0];
        if self.order >= 1 {
            for i in 0..d {
                out.data[1 + i] = phi[1] * self.data[1 + i];
            }
        }
        if self.order >= 2 {
            let o = 1 + d;
            for i in 0..d {
                let fi = self.data[1 + i];
                for j in i..d {
                    let fj = self.data[1 + j];
                    let p = idx2(i, j, d);
                    out.data[o + p] = phi[2] * fi * fj + phi[1] * self.data[o + p];
                }
            }
        }
        if self.order >= 3 {
            let o2 = 1 + d;
            let o3 = 1 + d + n2(d);
            let mut p = 0;
            for i in 0..d {
                let fi = self.data[1 + i];
                for j in i..d {
                    let fj = self.data[1 + j];
                    let fij = self.data[o2 + idx2(i, j, d)];
                    for k in j..d {
                        let fk = self.data[1 + k];
                        let fik = self.data[o2 + idx2(i, k, d)];
                        let fjk = self.data[o2 + idx2(j, k, d)];
                        out.data[o3 + p] = phi[3] * fi * fj * fk
                            + phi[2] * (fij * fk + fik * fj + fjk * fi)
                            + phi[1] * self.data[o3 + p];
                        p += 1;
                    }
                }
            }
        }
        out
    }

    /// `1/self`.
    pub fn recip(&self) -> Result<Jet> {
        let x = self.value();
        if x == 0.0 || !x.is_finite() {
            return Err(Error::Singular(format!("reciprocal of jet with value {x}")));
        }
        let r = 1.0 / x;
        Ok(self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r]))
    }

    /// `sqrt(self)`; requires a positive value.
    pub fn sqrt(&self) -> Result<Jet> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::Singular(format!("sqrt of jet with value {x}")));
        }
        let s = x.sqrt();
        Ok(self.compose([
            s,
            0.5 / s,
            -0.25 / (s * x),
            0.375 / (s * x * x),
        ]))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e, e])
    }

    pub fn ln(&self) -> Result<Jet> {
        let x = self.value();
        if !(x > 0.0) {
            return Err(Error::Singular(format!("log of jet with value {x}")));
        }
        Ok(self.compose([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)]))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    /// Integer power.
    pub fn powi(&self, n: i32) -> Jet {
        let x = self.value();
        let nf = n as f64;
        let p = |k: i32| if n >= 0 && k > n { 0.0 } else { x.powi(n - k) };
        self.compose([
            p(0),
            nf * p(1),
            nf * (nf - 1.0) * p(2),
            nf * (nf - 1.0) * (nf - 2.0) * p(3),
        ])
    }

    /// Quotient `self / other`.
    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        Ok(self * &other.recip()?)
    }

    /// Largest absolute entry over value and derivatives.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `out += c * a * b` on packed storage truncated at `order`.
fn mul_acc(out: &mut [f64], a: &[f64], b: &[f64], order: u8, d: usize, c: f64) {
    let a0 = a[0];
    let b0 = b[0];
    out[0] += c * a0 * b0;
    if order >= 1 {
        for i in 0..d {
            out[1 + i] += c * (a[1 + i] * b0 + a0 * b[1 + i]);
        }
    }
    if order >= 2 {
        let o = 1 + d;
        let mut p = 0;
        for i in 0..d {
            let ai = a[1 + i];
            let bi = b[1 + i];
            for j in i..d {
                out[o + p] += c
                    * (a[o + p] * b0 + ai * b[1 + j] + a[1 + j] * bi + a0 * b[o + p]);
                p += 1;
            }
        }
    }
    if order >= 3 {
        let o2 = 1 + d;
        let o3 = 1 + d + n2(d);
        let mut p = 0;
        for i in 0..d {
            let (ai, bi) = (a[1 + i], b[1 + i]);
            for j in i..d {
                let (aj, bj) = (a[1 + j], b[1 + j]);
                let pij = o2 + idx2(i, j, d);
                let (aij, bij) = (a[pij], b[pij]);
                for k in j..d {
                    let (ak, bk) = (a[1 + k], b[1 + k]);
                    let pik = o2 + idx2(i, k, d);
                    let pjk = o2 + idx2(j, k, d);
                    out[o3 + p] += c
                        * (a[o3 + p] * b0
                            + aij * bk
                            + a[pik] * bj
                            + a[pjk] * bi
                            + ai * b[pjk]
                            + aj * b[pik]
                            + ak * bij
                            + a0 * b[o3 + p]);
                    p += 1;
                }
            }
        }
    }
}

/// Evaluates `f` on coordinate jets at `p`, returning the value and all
/// partials of `f` up to `order`.
pub fn jet_eval<F>(f: F, p: &[f64], order: u8) -> Result<Jet>
where
    F: Fn(&[Jet]) -> Jet,
{
    let vars = variables(p, order)?;
    Ok(f(&vars))
}

/// Coordinate jets `x_i` at `p`.
pub fn variables(p: &[f64], order: u8) -> Result<Vec<Jet>> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh(order));
    }
    Ok((0..p.len())
        .map(|i| Jet::variable(p[i], i, p.len(), order))
        .collect())
}

/// Composition with an elementary function whose derivatives are known.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Elementary {
    Identity,
    Recip,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
}

/// Applies `outer` to `inner` by Faà di Bruno truncated at the inner order.
pub fn jet_compose(outer: Elementary, inner: &Jet) -> Result<Jet> {
    match outer {
        Elementary::Identity => Ok(inner.clone()),
        Elementary::Recip => inner.recip(),
        Elementary::Sqrt => inner.sqrt(),
        Elementary::Exp => Ok(inner.exp()),
        Elementary::Ln => inner.ln(),
        Elementary::Sin => Ok(inner.sin()),
        Elementary::Cos => Ok(inner.cos()),
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let order = self.common(o);
        let mut out = self.truncate(order);
        let n = out.data.len();
        for (x, y) in out.data.iter_mut().zip(&o.data[..n]) {
            *x += y;
        }
        out
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let order = self.common(o);
        let mut out = self.truncate(order);
        let n = out.data.len();
        for (x, y) in out.data.iter_mut().zip(&o.data[..n]) {
            *x -= y;
        }
        out
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let order = self.common(o);
        let mut out = Jet::zero(self.dim, order);
        mul_acc(&mut out.data, &self.data, &o.data, order, self.dim, 1.0);
        out
    }
}

impl<'a> Div<&'a Jet> for &'a Jet {
    type Output = Jet;
    /// Panics on a zero denominator; use [`Jet::try_div`] to handle it.
    fn div(self, o: &Jet) -> Jet {
        self.try_div(o).expect("jet division by zero")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.data.iter_mut().for_each(|x| *x = -*x);
        self
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);
owned_binop!(Div, div);

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        let mut out = self.clone();
        out.data[0] += c;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.data[0] += c;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, c: f64) -> Jet {
        self.data.iter_mut().for_each(|x| *x *= c);
        self
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, o: &Jet) {
        self.add_scaled(1.0, o);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, o: &Jet) {
        self.add_scaled(-1.0, o);
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }
}

/// Values of a slice of jets.
pub fn values(js: &[Jet]) -> Vec<f64> {
    js.iter().map(Jet::value).collect()
}

/// Partial derivatives `∂_k` of a slice of jets.
pub fn partials(js: &[Jet], k: usize) -> Vec<Jet> {
    js.iter().map(|j| j.partial(k)).collect()
}

/// Lowest order in a slice of jets.
pub fn min_order(js: &[Jet]) -> u8 {
    js.iter().map(Jet::order).min().unwrap_or(MAX_ORDER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indices_are_dense() {
        for d in 1..7 {
            let mut seen = vec![false; n3(d)];
            for i in 0..d {
                for j in i..d {
                    for k in j..d {
                        let p = idx3(i, j, k, d);
                        assert!(!seen[p]);
                        seen[p] = true;
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
            let mut p = 0;
            for i in 0..d {
                for j in i..d {
                    assert_eq!(idx2(i, j, d), p);
                    p += 1;
                }
            }
        }
    }

    #[test]
    fn polynomial_example() {
        let j = jet_eval(|x| &(&x[0] * &x[0]) * &x[1], &[2.0, 3.0], 2).unwrap();
        assert_eq!(j.value(), 12.0);
        assert_eq!(j.gradient(), vec![12.0, 4.0]);
        assert_eq!(j.d2(0, 0), 6.0);
        assert_eq!(j.d2(0, 1), 4.0);
        assert_eq!(j.d2(1, 1), 0.0);
    }

    #[test]
    fn constant_has_no_derivatives() {
        let j = jet_eval(|x| Jet::constant(5.0, x.len(), 3), &[0.3, -1.0, 2.0], 3).unwrap();
        assert_eq!(j.value(), 5.0);
        assert!(j.as_slice()[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn reciprocal_and_sqrt() {
        let x = Jet::from_parts(2.0, &[1.0], None, None);
        let r = jet_compose(Elementary::Recip, &x).unwrap();
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.d1(0), -0.25);
        let sq = jet_eval(|x| &x[0] * &x[0], &[3.0], 2).unwrap();
        let s = jet_compose(Elementary::Sqrt, &sq).unwrap();
        assert!((s.value() - 3.0).abs() < 1e-15);
        assert!((s.d1(0) - 1.0).abs() < 1e-15);
        assert!(s.d2(0, 0).abs() < 1e-15);
        assert_eq!(jet_compose(Elementary::Identity, &x).unwrap(), x);
    }

    #[test]
    fn order_above_three_rejected() {
        assert!(matches!(variables(&[0.0], 4), Err(Error::OrderTooHigh(4))));
        assert!(Jet::zero(2, 1).recip().is_err());
    }

    #[test]
    fn third_derivative_of_cubic() {
        let j = jet_eval(|x| &(&x[0] * &x[1]) * &x[2], &[1.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(j.d3(0, 1, 2), 1.0);
        assert_eq!(j.d3(2, 0, 1), 1.0);
        assert_eq!(j.d3(0, 0, 1), 0.0);
        let p = j.partial(2);
        assert_eq!(p.value(), 2.0);
        assert_eq!(p.d2(0, 1), 1.0);
    }

    #[test]
    fn embed_and_restrict_round_trip() {
        let j = jet_eval(|x| (&x[0] * &x[1]).sin(), &[0.4, 0.9], 3).unwrap();
        let b = j.embed(5, &[3, 1]);
        assert_eq!(b.d1(3), j.d1(0));
        assert_eq!(b.d3(1, 3, 3), j.d3(0, 0, 1));
        assert_eq!(b.restrict(&[3, 1]), j);
    }
}
