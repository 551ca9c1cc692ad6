//! The conformal hypercomplex cone over a quaternionic space: lift of
//! [`LiftData`] to the cone structure, projection back, ξ̂-shifts of `A⃗`,
//! the cone metric, and the SU(2) gauge that produces Levi-Civita.

use nalgebra::DMatrix;

use crate::connection::{covariant_derivative_jets, j_star};
use crate::error::{Error, Result};
use crate::field::{eps, Chart, Rank, TensorField};
use crate::jet::{min_order, values, variables, Jet};
use crate::linalg::{inverse_jet, lstsq_jet, lstsq_min_norm, rank};
use crate::qstruct::{
    extract_omega_op_jets, max_abs, max_abs_jets, omega_op_closed_form, HypercomplexTriple,
};
use crate::quat::adjoint_j;

/// Dilatation weight `w` of the closed homothetic vector, `∇k = (w/2)·1`.
pub const HOMOTHETY_WEIGHT: f64 = 3.0;

/// Index offsets of the adapted cone chart `(z⁰, z^α, q^X)`.
pub const Z0: usize = 0;
pub const ZA: usize = 1;
pub const Q0: usize = 4;

/// Parametrization of a conformal hypercomplex cone over a quaternionic
/// space: `J⃗`, `A⃗` and (optionally) `h` on the `z = 0` section of the
/// `4n_H` chart, with the standard su(2) fields `k⃗^α(z)`.
#[derive(Clone)]
pub struct LiftData {
    pub n_h: usize,
    pub j: HypercomplexTriple,
    /// `A^a_X`, three stacked covectors.
    pub a: TensorField,
    pub h: Option<TensorField>,
    /// Sign of `z⁰` on the cone (`+1`: ν < 0, `-1`: ν > 0).
    pub z0_sign: f64,
    pub z0_range: (f64, f64),
    /// Chart of the small space.
    pub chart: Chart,
}

impl LiftData {
    pub fn small_dim(&self) -> usize {
        4 * self.n_h
    }

    pub fn big_dim(&self) -> usize {
        4 * self.n_h + 4
    }

    /// Adapted chart of the cone: `z⁰` in `z0_range`, `z^α` in a box away
    /// from the chart poles, `q` in the small chart.
    pub fn big_chart(&self) -> Chart {
        let mut names = vec!["z0".to_string(), "z1".into(), "z2".into(), "z3".into()];
        names.extend(self.chart.names.iter().cloned());
        let (lo0, hi0) = self.z0_range;
        let mut lo = vec![lo0, -0.5, -0.5, -0.5];
        let mut hi = vec![hi0, 0.5, 0.5, 0.5];
        lo.extend(self.chart.lo.iter().cloned());
        hi.extend(self.chart.hi.iter().cloned());
        let small = self.chart.clone();
        Chart::boxed(names, lo, hi).with_domain(move |p| {
            p[0].abs() >= 0.1 && small.contains(&p[Q0..])
        })
    }

    /// `ν = -1/z⁰` of the slice at `z0`.
    pub fn nu(z0: f64) -> f64 {
        -1.0 / z0
    }
}

/// Standard su(2) fields on the gnomonic fibre chart,
/// `k[a][α] = ½(δ_aα + z_a z_α + ε_{baα} z_b)`.
pub fn k_alpha_jets(z: &[Jet]) -> Vec<Jet> {
    let dim = z[0].dim();
    let o = min_order(z);
    let mut k = vec![Jet::zero(dim, o); 9];
    for a in 0..3 {
        for al in 0..3 {
            let s = &mut k[a * 3 + al];
            if a == al {
                *s += &Jet::constant(0.5, dim, o);
            }
            s.add_mul_scaled(0.5, &z[a], &z[al]);
            for b in 0..3 {
                let e = eps(b, a, al);
                if e != 0.0 {
                    s.add_scaled(0.5 * e, &z[b]);
                }
            }
        }
    }
    k
}

/// `m[a][α]` with `Σ_a k[a][α] m[a][β] = δ_αβ`.
pub fn m_alpha_jets(k: &[Jet]) -> Result<Vec<Jet>> {
    let kt: Vec<Jet> = (0..9).map(|i| k[(i % 3) * 3 + i / 3].clone()).collect();
    let inv = inverse_jet(&kt, 3)?;
    // m = (kᵀ)⁻¹
    Ok(inv)
}

/// Unit quaternion `c(z) = (1, z)/√(1+|z|²)` of the gnomonic chart.
pub fn fibre_quaternion(z: &[Jet]) -> Result<Vec<Jet>> {
    let dim = z[0].dim();
    let o = min_order(z);
    let mut n = Jet::constant(1.0, dim, o);
    for x in z {
        n.add_mul(x, x);
    }
    let inv = n.sqrt()?.recip()?;
    let mut c = vec![inv.clone()];
    for x in z {
        c.push(x * &inv);
    }
    Ok(c)
}

/// `R[a][b] = Ad(c(z))_{ba}`, the fibre rotation of the triplets.
pub fn fibre_rotation(z: &[Jet]) -> Result<Vec<Jet>> {
    let ad = adjoint_j(&fibre_quaternion(z)?);
    let mut r = Vec::with_capacity(9);
    for a in 0..3 {
        for b in 0..3 {
            r.push(ad[b][a].clone());
        }
    }
    Ok(r)
}

/// Jets of the small-space data at the `q` part of a cone point, embedded
/// into the cone variables.
struct Embedded {
    j: Vec<Jet>,
    a: Vec<Jet>,
    h: Option<Vec<Jet>>,
}

fn embedded(l: &LiftData, p: &[f64], order: u8, with_h: bool) -> Result<Embedded> {
    let n = l.small_dim();
    let big = l.big_dim();
    let q = &p[Q0..];
    let map: Vec<usize> = (0..n).map(|i| Q0 + i).collect();
    let emb = |v: Vec<Jet>| v.iter().map(|x| x.embed(big, &map)).collect::<Vec<_>>();
    let j = emb(l.j.eval(q, order)?);
    let a = emb(l.a.eval(q, order)?);
    let h = match (&l.h, with_h) {
        (Some(h), true) => Some(emb(h.eval(q, order)?)),
        _ => None,
    };
    Ok(Embedded { j, a, h })
}

/// Rotated `J(z, q) = R(z) J(0, q)` and `A(z, q) = R(z) A(0, q)`.
fn rotate(r: &[Jet], t: &[Jet], per: usize) -> Vec<Jet> {
    let dim = t[0].dim();
    let o = min_order(t).min(min_order(r));
    let mut out = vec![Jet::zero(dim, o); 3 * per];
    for a in 0..3 {
        for b in 0..3 {
            for k in 0..per {
                out[a * per + k].add_mul(&r[a * 3 + b], &t[b * per + k]);
            }
        }
    }
    out
}

/// Cone structure `Ĵ` assembled block by block from `LiftData`:
/// `Ĵ_0^0 = 0`, `Ĵ_α^0 = -z⁰ m⃗_α`, `Ĵ_X^0 = z⁰ A⃗_X`, `Ĵ_0^β = k⃗^β/z⁰`,
/// `Ĵ_α^β = k⃗^β × m⃗_α`, `Ĵ_X^β = A⃗_X × k⃗^β + J⃗_X^Z (A⃗_Z·k⃗^β)`,
/// `Ĵ_0^Y = Ĵ_α^Y = 0`, `Ĵ_X^Y = J⃗_X^Y`.
pub fn lift_structure_jets(l: &LiftData, p: &[f64], order: u8) -> Result<Vec<Jet>> {
    let d = l.big_dim();
    let n = l.small_dim();
    if p.len() != d {
        return Err(Error::Domain);
    }
    if p[Z0] == 0.0 {
        return Err(Error::Domain);
    }
    let y = variables(p, order)?;
    let e = embedded(l, p, order, false)?;
    let z = &y[ZA..ZA + 3];
    let r = fibre_rotation(z)?;
    let js = rotate(&r, &e.j, n * n);
    let a = rotate(&r, &e.a, n);
    let k = k_alpha_jets(z);
    let m = m_alpha_jets(&k)?;
    let z0 = &y[Z0];
    let iz0 = z0.recip()?;
    let mut out = vec![Jet::zero(d, order); 3 * d * d];
    let at = |c: usize, x: usize, yy: usize| (c * d + x) * d + yy;
    // A_X · k^β
    let mut ak = vec![Jet::zero(d, order); n * 3];
    for x in 0..n {
        for be in 0..3 {
            for b in 0..3 {
                ak[x * 3 + be].add_mul(&a[b * n + x], &k[b * 3 + be]);
            }
        }
    }
    for c in 0..3 {
        for be in 0..3 {
            out[at(c, Z0, ZA + be)] = &k[c * 3 + be] * &iz0;
            out[at(c, ZA + be, Z0)] = -(z0 * &m[c * 3 + be]);
            for al in 0..3 {
                let s = &mut out[at(c, ZA + al, ZA + be)];
                for b in 0..3 {
                    for cc in 0..3 {
                        let ev = eps(c, b, cc);
                        if ev != 0.0 {
                            s.add_mul_scaled(ev, &k[b * 3 + be], &m[cc * 3 + al]);
                        }
                    }
                }
            }
        }
        for x in 0..n {
            out[at(c, Q0 + x, Z0)] = z0 * &a[c * n + x];
            for be in 0..3 {
                let s = &mut out[at(c, Q0 + x, ZA + be)];
                for b in 0..3 {
                    for cc in 0..3 {
                        let ev = eps(c, b, cc);
                        if ev != 0.0 {
                            s.add_mul_scaled(ev, &a[b * n + x], &k[cc * 3 + be]);
                        }
                    }
                }
                for zz in 0..n {
                    s.add_mul(&js[(c * n + x) * n + zz], &ak[zz * 3 + be]);
                }
            }
            for yy in 0..n {
                out[at(c, Q0 + x, Q0 + yy)] = js[(c * n + x) * n + yy].clone();
            }
        }
    }
    Ok(out)
}

/// Lifted structure as a field on the cone chart.
pub fn lift_structure(l: &LiftData) -> HypercomplexTriple {
    let l = l.clone();
    let d = l.big_dim();
    HypercomplexTriple::new(TensorField::new(d, Rank::ENDO, 3, move |p, o| {
        lift_structure_jets(&l, p, o)
    }))
}

/// Cone metric `-(dz⁰)²/z⁰ + z⁰{h - m⃗_α·m⃗_β (dz^α - A⃗·k⃗^α dq)(dz^β - A⃗·k⃗^β dq)}`.
pub fn lift_metric_jets(l: &LiftData, p: &[f64], order: u8) -> Result<Vec<Jet>> {
    let d = l.big_dim();
    let n = l.small_dim();
    if l.h.is_none() {
        return Err(Error::Precondition("LiftData has no h".into()));
    }
    if p[Z0] == 0.0 {
        return Err(Error::Domain);
    }
    let y = variables(p, order)?;
    let e = embedded(l, p, order, true)?;
    let h = e.h.expect("h present");
    let z = &y[ZA..ZA + 3];
    let r = fibre_rotation(z)?;
    let a = rotate(&r, &e.a, n);
    let k = k_alpha_jets(z);
    let m = m_alpha_jets(&k)?;
    let z0 = &y[Z0];
    // One-forms θ^α = dz^α - (A·k^α)_X dq^X as rows over cone indices.
    let mut theta = vec![Jet::zero(d, order); 3 * d];
    for al in 0..3 {
        theta[al * d + ZA + al] = Jet::constant(1.0, d, order);
        for x in 0..n {
            let s = &mut theta[al * d + Q0 + x];
            for b in 0..3 {
                s.add_mul_scaled(-1.0, &a[b * n + x], &k[b * 3 + al]);
            }
        }
    }
    let mut mm = vec![Jet::zero(d, order); 9];
    for al in 0..3 {
        for be in 0..3 {
            for b in 0..3 {
                mm[al * 3 + be].add_mul(&m[b * 3 + al], &m[b * 3 + be]);
            }
        }
    }
    let mut g = vec![Jet::zero(d, order); d * d];
    g[Z0 * d + Z0] = -z0.recip()?;
    for u in 1..d {
        for v in 1..d {
            let mut s = Jet::zero(d, order);
            if u >= Q0 && v >= Q0 {
                s += &h[(u - Q0) * n + v - Q0];
            }
            for al in 0..3 {
                for be in 0..3 {
                    let t = &theta[al * d + u] * &theta[be * d + v];
                    s.add_mul_scaled(-1.0, &mm[al * 3 + be], &t);
                }
            }
            g[u * d + v] = z0 * &s;
        }
    }
    Ok(g)
}

/// Cone metric as a field.
pub fn lift_metric(l: &LiftData) -> TensorField {
    let l = l.clone();
    let d = l.big_dim();
    TensorField::new(d, Rank::BILINEAR, 1, move |p, o| lift_metric_jets(&l, p, o))
}

/// Small-space metric `g = z⁰ h` and `ν = -1/z⁰` on the slice `z0`.
pub fn small_metric(l: &LiftData, z0: f64) -> Result<(TensorField, f64)> {
    let h = l
        .h
        .clone()
        .ok_or_else(|| Error::Precondition("LiftData has no h".into()))?;
    if z0 == 0.0 {
        return Err(Error::Domain);
    }
    let g = TensorField::new(h.dim, Rank::BILINEAR, 1, move |p, o| {
        Ok(h.eval(p, o)?.iter().map(|x| x.scale(z0)).collect())
    });
    Ok((g, LiftData::nu(z0)))
}

/// A conformal hypercomplex manifold in adapted coordinates.
#[derive(Clone)]
pub struct ConformalHypercomplex {
    pub n_h: usize,
    pub chart: Chart,
    pub h_hat: HypercomplexTriple,
    pub metric: Option<TensorField>,
    /// Homothetic vector `k`.
    pub k: TensorField,
}

/// `k = 3 z⁰ ∂_0` in adapted coordinates.
pub fn homothetic_adapted(dim: usize) -> TensorField {
    TensorField::from_expr(dim, Rank::VECTOR, 1, move |y| {
        let o = y[0].order();
        let mut v = vec![Jet::zero(dim, o); dim];
        v[0] = y[0].scale(HOMOTHETY_WEIGHT);
        v
    })
}

/// `max |∇_X k^Y - (w/2) δ_X^Y|`.
pub fn check_closed_homothetic(gamma: &[Jet], k: &[Jet], d: usize) -> Result<f64> {
    let nk = covariant_derivative_jets(gamma, k, Rank::VECTOR, d)?;
    let mut r: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            let e = if x == y { HOMOTHETY_WEIGHT / 2.0 } else { 0.0 };
            r = r.max((nk[x * d + y].value() - e).abs());
        }
    }
    Ok(r)
}

/// `k⃗^a = (1/3) J⃗^a k` (`[a][Y]`) and the largest component outside the
/// `z^α` directions.
pub fn su2_vectors(jhat: &[Jet], k: &[Jet], d: usize) -> (Vec<Jet>, f64) {
    let dim = k[0].dim();
    let o = min_order(k).min(min_order(jhat));
    let mut out = vec![Jet::zero(dim, o); 3 * d];
    for a in 0..3 {
        for y in 0..d {
            let s = &mut out[a * d + y];
            for x in 0..d {
                s.add_mul_scaled(1.0 / HOMOTHETY_WEIGHT, &k[x], &jhat[(a * d + x) * d + y]);
            }
        }
    }
    let mut off: f64 = 0.0;
    for a in 0..3 {
        for y in 0..d {
            if !(ZA..ZA + 3).contains(&y) {
                off = off.max(out[a * d + y].value().abs());
            }
        }
    }
    (out, off)
}

/// Read-off of `LiftData` values from a cone structure at one point.
#[derive(Clone, Debug)]
pub struct Projection {
    /// `k[a][β] = z⁰ Ĵ^a_0^β`.
    pub k: Vec<f64>,
    /// `m[a][α] = -Ĵ^a_α^0 / z⁰`.
    pub m: Vec<f64>,
    /// `A^a_X = Ĵ^a_X^0 / z⁰` in the `z` gauge.
    pub a: Vec<f64>,
    /// `J^a_X^Y = Ĵ^a_X^Y` in the `z` gauge.
    pub j: Vec<f64>,
    /// `A` and `J` rotated back to the `z = 0` section.
    pub a_section: Vec<f64>,
    pub j_section: Vec<f64>,
    /// Largest mismatch of the remaining blocks against the read-offs.
    pub cross_block: f64,
    /// Residual of `k⃗^α · m⃗_β = δ^α_β`.
    pub mk_inverse: f64,
}

/// Reads `LiftData` values off `Ĵ` at `p` and certifies the other blocks.
pub fn project_values(jhat: &[f64], p: &[f64], n_h: usize) -> Result<Projection> {
    let n = 4 * n_h;
    let d = n + 4;
    let z0 = p[Z0];
    if z0 == 0.0 {
        return Err(Error::Domain);
    }
    let at = |c: usize, x: usize, y: usize| jhat[(c * d + x) * d + y];
    let mut k = vec![0.0; 9];
    let mut m = vec![0.0; 9];
    let mut a = vec![0.0; 3 * n];
    let mut j = vec![0.0; 3 * n * n];
    for c in 0..3 {
        for be in 0..3 {
            k[c * 3 + be] = z0 * at(c, Z0, ZA + be);
            m[c * 3 + be] = -at(c, ZA + be, Z0) / z0;
        }
        for x in 0..n {
            a[c * n + x] = at(c, Q0 + x, Z0) / z0;
            for y in 0..n {
                j[(c * n + x) * n + y] = at(c, Q0 + x, Q0 + y);
            }
        }
    }
    let mut cb: f64 = 0.0;
    for c in 0..3 {
        cb = cb.max(at(c, Z0, Z0).abs());
        for y in 0..n {
            cb = cb.max(at(c, Z0, Q0 + y).abs());
            for al in 0..3 {
                cb = cb.max(at(c, ZA + al, Q0 + y).abs());
            }
        }
        for al in 0..3 {
            for be in 0..3 {
                let mut s = 0.0;
                for b in 0..3 {
                    for cc in 0..3 {
                        s += eps(c, b, cc) * k[b * 3 + be] * m[cc * 3 + al];
                    }
                }
                cb = cb.max((at(c, ZA + al, ZA + be) - s).abs());
            }
        }
        for x in 0..n {
            for be in 0..3 {
                let mut s = 0.0;
                for b in 0..3 {
                    for cc in 0..3 {
                        s += eps(c, b, cc) * a[b * n + x] * k[cc * 3 + be];
                    }
                }
                for zz in 0..n {
                    let mut akz = 0.0;
                    for b in 0..3 {
                        akz += a[b * n + zz] * k[b * 3 + be];
                    }
                    s += j[(c * n + x) * n + zz] * akz;
                }
                cb = cb.max((at(c, Q0 + x, ZA + be) - s).abs());
            }
        }
    }
    let mut mk: f64 = 0.0;
    for al in 0..3 {
        for be in 0..3 {
            let mut s = 0.0;
            for b in 0..3 {
                s += k[b * 3 + al] * m[b * 3 + be];
            }
            mk = mk.max((s - if al == be { 1.0 } else { 0.0 }).abs());
        }
    }
    // Back to the section: J(0, q) = R(z)ᵀ J(z, q).
    let zj: Vec<Jet> = p[ZA..ZA + 3].iter().map(|&v| Jet::constant(v, 1, 0)).collect();
    let r = values(&fibre_rotation(&zj)?);
    let mut a_section = vec![0.0; 3 * n];
    let mut j_section = vec![0.0; 3 * n * n];
    for b in 0..3 {
        for c in 0..3 {
            for x in 0..n {
                a_section[b * n + x] += r[c * 3 + b] * a[c * n + x];
            }
            for xy in 0..n * n {
                j_section[b * n * n + xy] += r[c * 3 + b] * j[c * n * n + xy];
            }
        }
    }
    Ok(Projection {
        k,
        m,
        a,
        j,
        a_section,
        j_section,
        cross_block: cb,
        mk_inverse: mk,
    })
}

/// `LiftData` of a cone in adapted coordinates: `J`, `A` (and `h` when the
/// cone carries a metric) read off on the slice `z⁰ = z0_ref`, `z = 0`.
pub fn project(cone: &ConformalHypercomplex, z0_ref: f64, z0_range: (f64, f64), small: Chart) -> LiftData {
    let n_h = cone.n_h;
    let n = 4 * n_h;
    let d = n + 4;
    let sel: Vec<usize> = (Q0..d).collect();
    let lift_point = move |q: &[f64]| {
        let mut p = vec![z0_ref, 0.0, 0.0, 0.0];
        p.extend_from_slice(q);
        p
    };
    let jh = cone.h_hat.clone();
    let sel1 = sel.clone();
    let j = HypercomplexTriple::new(TensorField::new(n, Rank::ENDO, 3, move |q, o| {
        let full = jh.eval(&lift_point(q), o)?;
        let mut out = Vec::with_capacity(3 * n * n);
        for c in 0..3 {
            for x in 0..n {
                for y in 0..n {
                    out.push(full[(c * d + Q0 + x) * d + Q0 + y].restrict(&sel1));
                }
            }
        }
        Ok(out)
    }));
    let jh = cone.h_hat.clone();
    let sel2 = sel.clone();
    let a = TensorField::new(n, Rank::COVECTOR, 3, move |q, o| {
        let full = jh.eval(&lift_point(q), o)?;
        let mut out = Vec::with_capacity(3 * n);
        for c in 0..3 {
            for x in 0..n {
                out.push(full[(c * d + Q0 + x) * d + Z0].restrict(&sel2).scale(1.0 / z0_ref));
            }
        }
        Ok(out)
    });
    let h = cone.metric.clone().map(|g| {
        let jh = cone.h_hat.clone();
        let sel3 = sel.clone();
        TensorField::new(n, Rank::BILINEAR, 1, move |q, o| {
            let pt = lift_point(q);
            let gf = g.eval(&pt, o)?;
            let full = jh.eval(&pt, o)?;
            let rs = |x: &Jet| x.restrict(&sel3);
            // h = (ĝ_XY + z0 (A·k)_X (m·m) (A·k)_Y) / z0 at z = 0
            let mut ak = Vec::with_capacity(3 * n);
            for x in 0..n {
                for be in 0..3 {
                    let mut s = Jet::zero(n, o);
                    for c in 0..3 {
                        // A^c_X k^c_β with k = z0 Ĵ_0^β, A = Ĵ_X^0/z0
                        let t = rs(&full[(c * d + Q0 + x) * d + Z0]) * &rs(&full[(c * d + Z0) * d + ZA + be]);
                        s += &t;
                    }
                    ak.push(s);
                }
            }
            let mut mm = vec![Jet::zero(n, o); 9];
            for al in 0..3 {
                for be in 0..3 {
                    for c in 0..3 {
                        let t = rs(&full[(c * d + ZA + al) * d + Z0]) * &rs(&full[(c * d + ZA + be) * d + Z0]);
                        mm[al * 3 + be] += &t;
                    }
                    mm[al * 3 + be] *= 1.0 / (z0_ref * z0_ref);
                }
            }
            let mut out = Vec::with_capacity(n * n);
            for x in 0..n {
                for y in 0..n {
                    let mut s = rs(&gf[(Q0 + x) * d + Q0 + y]);
                    for al in 0..3 {
                        for be in 0..3 {
                            let t = &ak[x * 3 + al] * &ak[y * 3 + be];
                            s.add_mul_scaled(z0_ref, &mm[al * 3 + be], &t);
                        }
                    }
                    out.push(s.scale(1.0 / z0_ref));
                }
            }
            Ok(out)
        })
    });
    LiftData {
        n_h,
        j,
        a,
        h,
        z0_sign: z0_ref.signum(),
        z0_range,
        chart: small,
    }
}

/// Outcome of [`check_lift_integrability`].
#[derive(Clone, Debug)]
pub struct Integrability {
    /// Residual of `2dA⃗ - 2A⃗_X×A⃗_Y = J⃗_X^Z h_ZY - J⃗_Y^Z h_ZX` for the
    /// least-squares symmetric `h`.
    pub residual_a: f64,
    /// Residual of the `ω⃗^Op` fit.
    pub residual_quat: f64,
    /// Largest difference between the fitted `ω⃗^Op` and the closed form
    /// `-(1/6)(2A⃗_X + A⃗_Y × J⃗_X^Y)`.
    pub closed_form: f64,
    /// Extracted `h` (`[X][Y]`).
    pub h: Vec<f64>,
    /// Dimension of the null space of the `h` system.
    pub h_null: usize,
}

/// Integrability conditions of `LiftData` at a point of the small chart.
pub fn check_lift_integrability(l: &LiftData, q: &[f64]) -> Result<Integrability> {
    let n = l.small_dim();
    let j = l.j.eval(q, 1)?;
    let a = l.a.eval(q, 1)?;
    let jv = values(&j);
    let av = values(&a);
    let da: Vec<f64> = values(&crate::field::exterior_derivative_jets(&a, n));
    // rows (c, X<Y), cols sym(h)
    let np = n * (n + 1) / 2;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let hidx = |x: usize, y: usize| {
        let (u, v) = if x <= y { (x, y) } else { (y, x) };
        u * n - u * (u + 1) / 2 + v
    };
    let rows = 3 * pairs.len();
    let mut m = DMatrix::<f64>::zeros(rows, np);
    let mut b = vec![0.0; rows];
    for c in 0..3 {
        for (pi, &(x, y)) in pairs.iter().enumerate() {
            let row = c * pairs.len() + pi;
            let mut s = 2.0 * da[(c * n + x) * n + y];
            for p1 in 0..3 {
                for p2 in 0..3 {
                    s -= 2.0 * eps(p1, p2, c) * av[p1 * n + x] * av[p2 * n + y];
                }
            }
            b[row] = s;
            for z in 0..n {
                m[(row, hidx(z, y))] += jv[(c * n + x) * n + z];
                m[(row, hidx(z, x))] -= jv[(c * n + y) * n + z];
            }
        }
    }
    let hs = lstsq_min_norm(&m, &b)?;
    let hv = nalgebra::DVector::from_column_slice(&hs);
    let r = &m * &hv - nalgebra::DVector::from_column_slice(&b);
    let h_null = np - rank(&m);
    let mut h = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            h[x * n + y] = hs[hidx(x, y)];
        }
    }
    let j2 = l.j.eval(q, 1)?;
    let w = extract_omega_op_jets(&j2, n)?;
    let a0: Vec<Jet> = a.iter().map(|x| x.truncate(0)).collect();
    let j0: Vec<Jet> = j2.iter().map(|x| x.truncate(0)).collect();
    let cf = omega_op_closed_form(&j0, &a0, n);
    let closed_form = w
        .omega
        .iter()
        .zip(&cf)
        .fold(0.0f64, |mx, (x, y)| mx.max((x.value() - y.value()).abs()));
    Ok(Integrability {
        residual_a: r.amax(),
        residual_quat: w.residual,
        closed_form,
        h,
        h_null,
    })
}

/// ξ̂-transformation `A⃗' = A⃗ + 2J⃗*ξ̂`. When `L` carries `h`, the new `h`
/// is the pointwise least-squares solution of the integrability condition.
pub fn xi_hat_transform(l: &LiftData, xihat: &TensorField) -> LiftData {
    let n = l.small_dim();
    let j = l.j.clone();
    let a0 = l.a.clone();
    let xh = xihat.clone();
    let a = TensorField::new(n, Rank::COVECTOR, 3, move |q, o| {
        let jj = j.eval(q, o)?;
        let x = xh.eval(q, o)?;
        let js = j_star(&jj, &x, n);
        let base = a0.eval(q, o)?;
        Ok(base.iter().zip(&js).map(|(b, s)| {
            let mut t = b.clone();
            t.add_scaled(2.0, s);
            t
        }).collect())
    });
    let mut out = l.clone();
    out.a = a;
    if l.h.is_some() {
        let probe = out.clone();
        out.h = Some(TensorField::new(n, Rank::BILINEAR, 1, move |q, o| {
            if o > 0 {
                return Err(Error::Precondition(
                    "the h of a ξ̂-shifted LiftData is pointwise only".into(),
                ));
            }
            let r = check_lift_integrability(&probe, q)?;
            Ok(r.h.iter().map(|&v| Jet::constant(v, n, 0)).collect())
        }));
    }
    out
}

/// Composition of ξ̂ one-forms as a sum.
pub fn sum_one_forms(a: &TensorField, b: &TensorField) -> TensorField {
    let (a, b) = (a.clone(), b.clone());
    TensorField::new(a.dim, Rank::COVECTOR, 1, move |q, o| {
        Ok(a.eval(q, o)?.iter().zip(b.eval(q, o)?).map(|(x, y)| x + &y).collect())
    })
}

/// ξ solving `ω⃗^Op + J⃗*ξ = -½A⃗` in the least-squares sense, as jets
/// (order of `ω` jets), with its residual.
pub fn choose_su2_gauge_jets(j: &[Jet], a: &[Jet], omega_op: &[Jet], n: usize) -> Result<(Vec<Jet>, f64)> {
    let o = min_order(omega_op).min(min_order(a)).min(min_order(j));
    let rows = 3 * n;
    let dim = j[0].dim();
    let mut m = vec![Jet::zero(dim, o); rows * n];
    let mut b = vec![Jet::zero(dim, o); rows];
    for c in 0..3 {
        for x in 0..n {
            let row = c * n + x;
            for y in 0..n {
                m[row * n + y] = j[(c * n + x) * n + y].truncate(o);
            }
            let s = &mut b[row];
            s.add_scaled(-0.5, &a[c * n + x]);
            s.add_scaled(-1.0, &omega_op[c * n + x]);
        }
    }
    lstsq_jet(&m, rows, n, &b)
}

/// Values-only gauge choice for a `LiftData` at `q`.
pub fn choose_su2_gauge(l: &LiftData, q: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = l.small_dim();
    let j = l.j.eval(q, 1)?;
    let a = l.a.eval(q, 0)?;
    let w = extract_omega_op_jets(&j, n)?;
    let j0: Vec<Jet> = j.iter().map(|x| x.truncate(0)).collect();
    let w0: Vec<Jet> = w.omega.iter().map(|x| x.truncate(0)).collect();
    let (xi, r) = choose_su2_gauge_jets(&j0, &a, &w0, n)?;
    Ok((values(&xi), r))
}

/// Largest value in a table of jets, used by reports.
pub fn max_jets(v: &[Jet]) -> f64 {
    max_abs_jets(v)
}

/// Max-abs of a value vector.
pub fn max_vals(v: &[f64]) -> f64 {
    max_abs(v)
}
