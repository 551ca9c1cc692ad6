//! Analytic example manifolds: the flat pseudo-hyper-Kähler cone on
//! ℍ^{1,n_H} (and its signature variant), ξ̂-deformed cones, and rigid flat
//! ℍ^n.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::confmap::{homothetic_adapted, lift_metric, lift_structure, project, xi_hat_transform, ConformalHypercomplex, LiftData};
use crate::error::{Error, Result};
use crate::field::{Chart, Rank, TensorField};
use crate::jet::{min_order, variables, Jet, MAX_ORDER};
use crate::linalg::inverse_jet;
use crate::qstruct::HypercomplexTriple;
use crate::quat::{flat_j, left_mult, qconj, qmul_j, Q};

/// Default strength of the twisted section.
pub const TWIST: f64 = 0.7;

/// The flat cone `ℍ^{1,n_H}` with metric `diag(-c×4, +c×4n_H)`, and the map
/// from the adapted chart `(z⁰, z^α, q)` to linear coordinates `(u, v_i)`:
/// `u = √(4z⁰/(c(1-|q|²))) s(q) c(z)`, `v_i = q_i u`.
#[derive(Clone, Copy, Debug)]
pub struct FlatCone {
    pub n_h: usize,
    /// `+1` for the `ν < 0` cone, `-1` for the compact-type variant.
    pub c: f64,
    pub twist: f64,
}

impl FlatCone {
    pub fn new(n_h: usize, c: f64) -> Self {
        FlatCone { n_h, c, twist: TWIST }
    }

    pub fn dim(&self) -> usize {
        4 * self.n_h + 4
    }

    /// Diagonal of the flat metric.
    pub fn eta(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| if i < 4 { -self.c } else { self.c }).collect()
    }

    /// Twisted section `s(q)` built from the first quaternion block.
    fn section(&self, q: &[Jet]) -> Result<Vec<Jet>> {
        let t = self.twist;
        let dim = q[0].dim();
        let o = min_order(q);
        let mut w = vec![Jet::constant(1.0, dim, o), q[1].scale(t), q[2].scale(t), q[3].scale(t)];
        w[2].add_mul_scaled(0.3 * t, &q[0], &q[3]);
        let mut n = Jet::zero(dim, o);
        for x in &w {
            n.add_mul(x, x);
        }
        let inv = n.sqrt()?.recip()?;
        Ok(w.iter().map(|x| x * &inv).collect())
    }

    /// `Φ(ŷ)` as jets.
    pub fn phi_jets(&self, y: &[Jet]) -> Result<Vec<Jet>> {
        let z0 = &y[0];
        let z = &y[1..4];
        let q = &y[4..];
        let dim = y[0].dim();
        let o = min_order(y);
        let cz = crate::confmap::fibre_quaternion(z)?;
        let s = self.section(q)?;
        let uh = qmul_j(&s, &cz);
        let mut qq = Jet::constant(1.0, dim, o);
        for x in q {
            qq.add_mul_scaled(-1.0, x, x);
        }
        let rad = (&z0.scale(4.0 / self.c) * &qq.recip()?).sqrt()?;
        let u: Vec<Jet> = uh.iter().map(|x| x * &rad).collect();
        let mut out = u.clone();
        for i in 0..self.n_h {
            out.extend(qmul_j(&q[4 * i..4 * i + 4], &u));
        }
        Ok(out)
    }

    /// Linear coordinates of an adapted point.
    pub fn phi(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(crate::jet::values(&self.phi_jets(&variables(p, 0)?)?))
    }

    /// `D[X̂][Y] = ∂_X̂ Φ^Y`, its inverse and `Φ`, at jet order `order`.
    fn jacobian(&self, p: &[f64], order: u8) -> Result<(Vec<Jet>, Vec<Jet>, Vec<Jet>)> {
        if order + 1 > MAX_ORDER {
            return Err(Error::OrderTooHigh(order + 1));
        }
        let d = self.dim();
        let y = variables(p, order + 1)?;
        let phi = self.phi_jets(&y)?;
        let mut dm = Vec::with_capacity(d * d);
        for x in 0..d {
            for yy in 0..d {
                dm.push(phi[yy].partial(x));
            }
        }
        let di = inverse_jet(&dm, d)?;
        Ok((dm, di, phi))
    }

    /// Pullback `Ĵ = D J_flat D⁻¹` on the adapted chart, jets of order ≤ 2.
    pub fn structure_jets(&self, p: &[f64], order: u8) -> Result<Vec<Jet>> {
        let d = self.dim();
        let (dm, di, _) = self.jacobian(p, order)?;
        let jf = flat_j(self.n_h + 1);
        let mut out = Vec::with_capacity(3 * d * d);
        for a in 0..3 {
            let mut dj = vec![Jet::zero(d, order); d * d];
            for x in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let c = jf[(a * d + i) * d + j];
                        if c != 0.0 {
                            dj[x * d + j].add_scaled(c, &dm[x * d + i]);
                        }
                    }
                }
            }
            for x in 0..d {
                for yy in 0..d {
                    let mut s = Jet::zero(d, order);
                    for j in 0..d {
                        s.add_mul(&dj[x * d + j], &di[j * d + yy]);
                    }
                    out.push(s);
                }
            }
        }
        Ok(out)
    }

    /// Pullback metric `ĝ = D η Dᵀ`.
    pub fn metric_jets(&self, p: &[f64], order: u8) -> Result<Vec<Jet>> {
        let d = self.dim();
        let (dm, _, _) = self.jacobian(p, order)?;
        let eta = self.eta();
        let mut g = Vec::with_capacity(d * d);
        for x in 0..d {
            for y in 0..d {
                let mut s = Jet::zero(d, order);
                for i in 0..d {
                    s.add_mul_scaled(eta[i], &dm[x * d + i], &dm[y * d + i]);
                }
                g.push(s);
            }
        }
        Ok(g)
    }

    /// Pullback of a linear vector field `x ↦ x M` (row convention, `M` a
    /// real `d×d` matrix) to the adapted chart.
    pub fn linear_vector_jets(&self, m: &[f64], p: &[f64], order: u8) -> Result<Vec<Jet>> {
        let d = self.dim();
        let (_, di, phi) = self.jacobian(p, order)?;
        let phi: Vec<Jet> = phi.iter().map(|x| x.truncate(order)).collect();
        let mut v = vec![Jet::zero(d, order); d];
        for j in 0..d {
            for i in 0..d {
                let c = m[i * d + j];
                if c != 0.0 {
                    v[j].add_scaled(c, &phi[i]);
                }
            }
        }
        let mut out = vec![Jet::zero(d, order); d];
        for yy in 0..d {
            for j in 0..d {
                out[yy].add_mul(&v[j], &di[j * d + yy]);
            }
        }
        Ok(out)
    }

    /// Adapted chart with the catalog domain margins.
    pub fn adapted_chart(&self) -> Chart {
        let n = 4 * self.n_h;
        let mut names = vec!["z0".to_string(), "z1".into(), "z2".into(), "z3".into()];
        names.extend((0..n).map(|i| format!("q{i}")));
        let (lo0, hi0) = self.z0_range();
        let mut lo = vec![lo0, -0.5, -0.5, -0.5];
        let mut hi = vec![hi0, 0.5, 0.5, 0.5];
        lo.extend(std::iter::repeat(-0.3).take(n));
        hi.extend(std::iter::repeat(0.3).take(n));
        Chart::boxed(names, lo, hi)
    }

    /// Small chart `|q| < 0.9`, sampled in `[-0.3, 0.3]^{4n_H}`.
    pub fn small_chart(&self) -> Chart {
        let n = 4 * self.n_h;
        let names = (0..n).map(|i| format!("q{i}")).collect();
        Chart::boxed(names, vec![-0.3; n], vec![0.3; n])
            .with_domain(|q| q.iter().map(|x| x * x).sum::<f64>() < 0.81)
    }

    pub fn z0_range(&self) -> (f64, f64) {
        if self.c > 0.0 {
            (0.5, 2.0)
        } else {
            (-2.0, -0.5)
        }
    }

    /// Cone with adapted-chart structure, metric and homothetic vector.
    pub fn cone(&self) -> ConformalHypercomplex {
        let d = self.dim();
        let s1 = *self;
        let s2 = *self;
        ConformalHypercomplex {
            n_h: self.n_h,
            chart: self.adapted_chart(),
            h_hat: HypercomplexTriple::new(TensorField::new(d, Rank::ENDO, 3, move |p, o| s1.structure_jets(p, o))),
            metric: Some(TensorField::new(d, Rank::BILINEAR, 1, move |p, o| s2.metric_jets(p, o))),
            k: homothetic_adapted(d),
        }
    }

    /// Homothetic vector by pullback of `(3/2)x`.
    pub fn homothetic_pullback(&self) -> TensorField {
        let d = self.dim();
        let s = *self;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.5;
        }
        TensorField::new(d, Rank::VECTOR, 1, move |p, o| s.linear_vector_jets(&m, p, o))
    }

    /// `LiftData` read off on the slice `z⁰ = ±1`.
    pub fn lift_data(&self) -> LiftData {
        project(&self.cone(), self.c, self.z0_range(), self.small_chart())
    }
}

/// A quaternionic matrix `M` (`(n+1)×(n+1)` quaternion entries) in
/// sp(1, n_H) for the metric `η`: `M†η + ηM = 0`.
#[derive(Clone, Debug)]
pub struct SpGenerator {
    pub name: String,
    pub entries: Vec<Q>,
    pub size: usize,
}

impl SpGenerator {
    /// Real `d×d` matrix of `x ↦ Mx` in the row convention, `(xR)_j = Σ_i x_i R_ij`.
    pub fn real_matrix(&self) -> Vec<f64> {
        let m = self.size;
        let d = 4 * m;
        let mut r = vec![0.0; d * d];
        for i in 0..m {
            for j in 0..m {
                // (Mx)_i = Σ_j M_ij x_j; component α of block i from β of block j.
                let l = left_mult(&self.entries[i * m + j]);
                for al in 0..4 {
                    for be in 0..4 {
                        r[(4 * j + be) * d + 4 * i + al] = l[al][be];
                    }
                }
            }
        }
        r
    }

    /// Projected vector field on the small chart,
    /// `k_i = M_i0 + M_ij q_j - q_i M_00 - q_i M_0j q_j`.
    pub fn projected_jets(&self, q: &[Jet]) -> Vec<Jet> {
        let m = self.size;
        let n_h = m - 1;
        let dim = q[0].dim();
        let o = min_order(q);
        let c = |x: &Q| -> Vec<Jet> { x.iter().map(|&v| Jet::constant(v, dim, o)).collect() };
        let e = |i: usize, j: usize| c(&self.entries[i * m + j]);
        let mut out = Vec::with_capacity(4 * n_h);
        for i in 1..m {
            let qi = &q[4 * (i - 1)..4 * i];
            let mut s: Vec<Jet> = e(i, 0);
            let sub = qmul_j(qi, &e(0, 0));
            for k in 0..4 {
                s[k] -= &sub[k];
            }
            for j in 1..m {
                let qj = &q[4 * (j - 1)..4 * j];
                let t = qmul_j(&e(i, j), qj);
                let mq = qmul_j(&e(0, j), qj);
                let u = qmul_j(qi, &mq);
                for k in 0..4 {
                    s[k] += &t[k];
                    s[k] -= &u[k];
                }
            }
            out.extend(s);
        }
        out
    }

    /// Projected field as a small-chart tensor field.
    pub fn projected(&self) -> TensorField {
        let g = self.clone();
        let n = 4 * (self.size - 1);
        TensorField::from_expr(n, Rank::VECTOR, 1, move |q| g.projected_jets(q))
    }

    /// Lie bracket `[M, N]` of matrices, giving the bracket of linear fields
    /// up to sign.
    pub fn commutator(&self, o: &SpGenerator) -> SpGenerator {
        let m = self.size;
        let mut e = vec![[0.0; 4]; m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let a = crate::quat::qmul(&self.entries[i * m + k], &o.entries[k * m + j]);
                    let b = crate::quat::qmul(&o.entries[i * m + k], &self.entries[k * m + j]);
                    for t in 0..4 {
                        e[i * m + j][t] += a[t] - b[t];
                    }
                }
            }
        }
        SpGenerator { name: format!("[{},{}]", self.name, o.name), entries: e, size: m }
    }
}

/// Basis of sp(1, n_H) for `η = diag(-c, c, …)`: `M = η⁻¹ S` with
/// `S† = -S`.
pub fn sp_generators(n_h: usize, c: f64) -> Vec<SpGenerator> {
    let m = n_h + 1;
    let eta = |i: usize| if i == 0 { -c } else { c };
    let mut out = Vec::new();
    for i in 0..m {
        for a in 1..4 {
            let mut e = vec![[0.0; 4]; m * m];
            e[i * m + i][a] = 1.0 / eta(i);
            out.push(SpGenerator { name: format!("diag{i}e{a}"), entries: e, size: m });
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            for a in 0..4 {
                let mut s = [0.0; 4];
                s[a] = 1.0;
                let mut e = vec![[0.0; 4]; m * m];
                let sc = qconj(&s);
                e[i * m + j] = s.map(|x| x / eta(i));
                e[j * m + i] = sc.map(|x| -x / eta(j));
                out.push(SpGenerator { name: format!("off{i}{j}e{a}"), entries: e, size: m });
            }
        }
    }
    out
}

/// Seeded admissible ξ̂ one-form `ξ̂ = dφ + ½Fq` on the small chart, with
/// `φ` a random cubic and `F` antisymmetric and commuting with the flat
/// structure.
#[derive(Clone, Debug)]
pub struct XiHatSpec {
    pub linear: Vec<f64>,
    /// `(coefficient, i, j, k)` monomials `q_i q_j q_k`.
    pub cubic: Vec<(f64, usize, usize, usize)>,
    /// `F[X][Y]`, antisymmetric.
    pub f: Vec<f64>,
    pub n: usize,
}

impl XiHatSpec {
    pub fn random(n_h: usize, seed: u64, strength: f64) -> Self {
        let n = 4 * n_h;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let linear = (0..n).map(|_| strength * rng.gen_range(-1.0..1.0)).collect();
        let cubic = (0..3)
            .map(|_| {
                let c = strength * rng.gen_range(-1.0..1.0);
                (c, rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))
            })
            .collect();
        let mut u = |s: f64| s * rng.gen_range(-1.0..1.0);
        // F = kron(S, L(e_c)^T) + kron(A, I) with S symmetric, A antisymmetric.
        let mut f = vec![0.0; n * n];
        for bi in 0..n_h {
            for bj in bi..n_h {
                for c in 1..4 {
                    let s = u(strength);
                    let mut unit = [0.0; 4];
                    unit[c] = 1.0;
                    let l = left_mult(&unit);
                    for x in 0..4 {
                        for y in 0..4 {
                            f[(4 * bi + x) * n + 4 * bj + y] += s * l[y][x];
                            if bi != bj {
                                f[(4 * bj + x) * n + 4 * bi + y] += s * l[y][x];
                            }
                        }
                    }
                }
                if bi != bj {
                    let a = u(strength);
                    for x in 0..4 {
                        f[(4 * bi + x) * n + 4 * bj + x] += a;
                        f[(4 * bj + x) * n + 4 * bi + x] -= a;
                    }
                }
            }
        }
        XiHatSpec { linear, cubic, f, n }
    }

    /// The fixed family used by the deformed catalog entry.
    pub fn standard(n_h: usize) -> Self {
        let n = 4 * n_h;
        let mut linear = vec![0.0; n];
        linear[..4].copy_from_slice(&[0.2, -0.1, 0.15, 0.05]);
        let cubic = vec![(0.3, 0, 0, 1), (-0.2, 2, 3, 3)];
        let mut f = vec![0.0; n * n];
        for b in 0..n_h {
            for (c, s) in [(1usize, 0.4), (3, 0.25)] {
                let mut unit = [0.0; 4];
                unit[c] = 1.0;
                let l = left_mult(&unit);
                for x in 0..4 {
                    for y in 0..4 {
                        f[(4 * b + x) * n + 4 * b + y] += s * l[y][x];
                    }
                }
            }
        }
        XiHatSpec { linear, cubic, f, n }
    }

    pub fn zero(n_h: usize) -> Self {
        let n = 4 * n_h;
        XiHatSpec { linear: vec![0.0; n], cubic: vec![], f: vec![0.0; n * n], n }
    }

    pub fn scaled(&self, s: f64) -> Self {
        XiHatSpec {
            linear: self.linear.iter().map(|x| x * s).collect(),
            cubic: self.cubic.iter().map(|&(c, i, j, k)| (c * s, i, j, k)).collect(),
            f: self.f.iter().map(|x| x * s).collect(),
            n: self.n,
        }
    }

    pub fn jets(&self, q: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        let dim = q[0].dim();
        let o = min_order(q);
        let mut out: Vec<Jet> = self.linear.iter().map(|&c| Jet::constant(c, dim, o)).collect();
        for &(c, i, j, k) in &self.cubic {
            out[i].add_mul_scaled(c, &q[j], &q[k]);
            out[j].add_mul_scaled(c, &q[i], &q[k]);
            out[k].add_mul_scaled(c, &q[i], &q[j]);
        }
        for x in 0..n {
            for y in 0..n {
                out[x].add_scaled(0.5 * self.f[x * n + y], &q[y]);
            }
        }
        out
    }

    pub fn field(&self) -> TensorField {
        let s = self.clone();
        TensorField::from_expr(self.n, Rank::COVECTOR, 1, move |q| s.jets(q))
    }
}

/// What an entry is expected to satisfy.
#[derive(Clone, Debug)]
pub struct Expected {
    pub hypercomplex: bool,
    pub hyper_kahler: bool,
    /// Small-space ν at the reference slice, when quaternionic-Kähler.
    pub nu: Option<f64>,
    pub signature: (usize, usize),
    /// Whether `R^ℝ` vanishes; `None` when not known in advance.
    pub r_curvature_zero: Option<bool>,
}

/// Catalog entry.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub n_h: usize,
    pub params: Value,
    /// Big space in adapted coordinates (cone entries).
    pub cone: Option<ConformalHypercomplex>,
    /// Flat cone map, when the cone is the analytic one.
    pub flat: Option<FlatCone>,
    pub lift: Option<LiftData>,
    /// Rigid entries: the structure and metric on a single chart.
    pub rigid: Option<(Chart, HypercomplexTriple, TensorField)>,
    pub generators: Vec<SpGenerator>,
    pub expected: Expected,
}

/// Flat cone entry. `compact` selects the `ν > 0` signature variant.
pub fn flat_cone(n_h: usize, compact: bool) -> Result<CatalogEntry> {
    if n_h == 0 {
        return Err(Error::Argument("n_h must be at least 1".into()));
    }
    let c = if compact { -1.0 } else { 1.0 };
    let f = FlatCone::new(n_h, c);
    Ok(CatalogEntry {
        name: if compact { "compact-cone" } else { "flat-cone" }.into(),
        n_h,
        params: json!({"n_h": n_h, "c": c, "twist": f.twist}),
        cone: Some(f.cone()),
        flat: Some(f),
        lift: Some(f.lift_data()),
        rigid: None,
        generators: sp_generators(n_h, c),
        expected: Expected {
            hypercomplex: true,
            hyper_kahler: true,
            nu: Some(-1.0 / c),
            signature: if compact { (4 * n_h, 4) } else { (4, 4 * n_h) },
            r_curvature_zero: Some(true),
        },
    })
}

/// ξ̂-deformation of a cone entry.
pub fn deformed_cone(base: &CatalogEntry, xihat: &XiHatSpec) -> Result<CatalogEntry> {
    let l = base
        .lift
        .as_ref()
        .ok_or_else(|| Error::Precondition("base entry has no LiftData".into()))?;
    let mut l2 = xi_hat_transform(l, &xihat.field());
    l2.h = None;
    let chart = l2.big_chart();
    let d = l2.big_dim();
    let cone = ConformalHypercomplex {
        n_h: base.n_h,
        chart,
        h_hat: lift_structure(&l2),
        metric: None,
        k: homothetic_adapted(d),
    };
    Ok(CatalogEntry {
        name: "deformed-cone".into(),
        n_h: base.n_h,
        params: json!({"base": base.name, "n_h": base.n_h}),
        cone: Some(cone),
        flat: None,
        lift: Some(l2),
        rigid: None,
        generators: vec![],
        expected: Expected {
            hypercomplex: true,
            hyper_kahler: false,
            nu: None,
            signature: base.expected.signature,
            r_curvature_zero: Some(false),
        },
    })
}

/// Positive-definite flat `ℍ^n` with constant structure and Euclidean metric.
pub fn rigid_flat(n: usize) -> Result<CatalogEntry> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let d = 4 * n;
    let names = (0..d).map(|i| format!("x{i}")).collect();
    let chart = Chart::boxed(names, vec![-1.0; d], vec![1.0; d]);
    let h = HypercomplexTriple::constant(d, flat_j(n));
    let mut eye = vec![0.0; d * d];
    for i in 0..d {
        eye[i * d + i] = 1.0;
    }
    let g = TensorField::from_expr(d, Rank::BILINEAR, 1, move |x| {
        let o = x[0].order();
        eye.iter().map(|&v| Jet::constant(v, d, o)).collect()
    });
    Ok(CatalogEntry {
        name: "rigid-flat".into(),
        n_h: n,
        params: json!({"n": n}),
        cone: None,
        flat: None,
        lift: None,
        rigid: Some((chart, h, g)),
        generators: vec![],
        expected: Expected {
            hypercomplex: true,
            hyper_kahler: true,
            nu: None,
            signature: (d, 0),
            r_curvature_zero: Some(true),
        },
    })
}

/// Entry built from user LiftData by lifting it to the cone.
pub fn from_lift_data(l: LiftData) -> CatalogEntry {
    let d = l.big_dim();
    let cone = ConformalHypercomplex {
        n_h: l.n_h,
        chart: l.big_chart(),
        h_hat: lift_structure(&l),
        metric: l.h.as_ref().map(|_| lift_metric(&l)),
        k: homothetic_adapted(d),
    };
    let qk = l.h.is_some();
    CatalogEntry {
        name: "liftdata".into(),
        n_h: l.n_h,
        params: json!({"n_h": l.n_h, "z0_range": [l.z0_range.0, l.z0_range.1], "metric": qk}),
        cone: Some(cone),
        flat: None,
        expected: Expected {
            hypercomplex: true,
            hyper_kahler: qk,
            nu: if qk { Some(LiftData::nu(l.z0_sign)) } else { None },
            signature: (0, 0),
            r_curvature_zero: if qk { Some(true) } else { None },
        },
        lift: Some(l),
        rigid: None,
        generators: vec![],
    }
}

pub const NAMES: [&str; 4] = ["flat-cone", "compact-cone", "deformed-cone", "rigid-flat"];

/// Entry by name.
pub fn by_name(name: &str, n_h: usize) -> Result<CatalogEntry> {
    match name {
        "flat-cone" => flat_cone(n_h, false),
        "compact-cone" => flat_cone(n_h, true),
        "deformed-cone" => deformed_cone(&flat_cone(n_h, false)?, &XiHatSpec::standard(n_h)),
        "rigid-flat" => rigid_flat(n_h),
        _ => Err(Error::UnknownManifold(name.into())),
    }
}

/// Manifest of the catalog for `n_h`.
pub fn manifest(n_h: usize) -> Result<Value> {
    let mut entries = Vec::new();
    for name in NAMES {
        let e = by_name(name, n_h)?;
        entries.push(json!({
            "name": e.name,
            "params": e.params,
            "generators": e.generators.iter().map(|g| g.name.clone()).collect::<Vec<_>>(),
            "expected": {
                "hypercomplex": e.expected.hypercomplex,
                "hyper_kahler": e.expected.hyper_kahler,
                "nu": e.expected.nu,
                "signature": [e.expected.signature.0, e.expected.signature.1],
                "r_curvature_zero": e.expected.r_curvature_zero,
            }
        }));
    }
    Ok(json!({"schema": 1, "entries": entries}))
}
