//! Symmetries without metrics: the second-order affine condition, rotation
//! functions of the quaternionic structure, moment maps and their ξ-shift,
//! and the lift and projection of symmetries through the cone.

use num_complex::Complex64 as C64;

use crate::confmap::{fibre_rotation, k_alpha_jets, m_alpha_jets, LiftData, Q0, Z0, ZA};
use crate::connection::{covariant_derivative_jets, j_star, s_xi_jets};
use crate::curvature::riemann;
use crate::error::{Error, Result};
use crate::field::{eps, lie_bracket_jets, lie_derivative_jets, Rank, TensorField};
use crate::jet::{min_order, values, Jet};
use crate::linalg::lstsq_jet;
use crate::qstruct::{l_tensor, Vielbein};

/// A candidate symmetry vector field with a label.
#[derive(Clone)]
pub struct SymmetryCandidate {
    pub label: String,
    pub k: TensorField,
}

/// `max |∇_X∇_Y k^Z - R_XWY^Z k^W|` from `Γ` of order ≥ 1 and `k` of order ≥ 2.
pub fn symmetry_residual(gamma: &[Jet], k: &[Jet], d: usize) -> Result<f64> {
    if min_order(k) < 2 || min_order(gamma) < 1 {
        return Err(Error::Precondition("symmetry residual needs k of order 2 and Γ of order 1".into()));
    }
    let nk = covariant_derivative_jets(gamma, k, Rank::VECTOR, d)?;
    let nnk = covariant_derivative_jets(gamma, &nk, Rank::ENDO, d)?;
    let r = riemann(gamma, d)?;
    let kv = values(k);
    let mut res: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let mut s = nnk[(x * d + y) * d + z].value();
                for w in 0..d {
                    s -= r[((x * d + w) * d + y) * d + z] * kv[w];
                }
                res = res.max(s.abs());
            }
        }
    }
    Ok(res)
}

/// Rotation functions `r⃗` of `L_k J⃗ = r⃗ × J⃗`, solved by least squares.
#[derive(Clone, Debug)]
pub struct Rotation {
    /// `r^a` as jets of order `min(order(k), order(J)) - 1`, capped at 1.
    pub r: Vec<Jet>,
    pub residual: f64,
}

impl Rotation {
    pub fn values(&self) -> [f64; 3] {
        [self.r[0].value(), self.r[1].value(), self.r[2].value()]
    }

    pub fn norm(&self) -> f64 {
        self.values().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Solves `(L_k J^a)_X^Y = ε_abc r^b J^c_X^Y` for `r⃗`. `k` and `J` need
/// order ≥ 1; errors when the fit residual exceeds `tol`.
pub fn rotation_functions(k: &[Jet], j: &[Jet], d: usize, tol: f64) -> Result<Rotation> {
    let n2 = d * d;
    let mut lj = Vec::with_capacity(3 * n2);
    for a in 0..3 {
        lj.extend(lie_derivative_jets(k, &j[a * n2..(a + 1) * n2], Rank::ENDO, d)?);
    }
    let o = min_order(&lj);
    let dim = k[0].dim();
    let jt: Vec<Jet> = j.iter().map(|x| x.truncate(o)).collect();
    let mut m = vec![Jet::zero(dim, o); 3 * n2 * 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let e = eps(a, b, c);
                if e == 0.0 {
                    continue;
                }
                for xy in 0..n2 {
                    m[(a * n2 + xy) * 3 + b].add_scaled(e, &jt[c * n2 + xy]);
                }
            }
        }
    }
    let (r, residual) = lstsq_jet(&m, 3 * n2, 3, &lj)?;
    if !(residual <= tol) {
        return Err(Error::Residual {
            what: "not a quaternionic symmetry: L_k J".into(),
            residual,
            tol,
        });
    }
    Ok(Rotation { r, residual })
}

/// `ω⃗(k)^a = ω^a_X k^X` from values `ω[a][X]`.
pub fn omega_of(omega: &[f64], k: &[f64]) -> [f64; 3] {
    let d = k.len();
    let mut w = [0.0; 3];
    for (a, wa) in w.iter_mut().enumerate() {
        *wa = (0..d).map(|x| omega[a * d + x] * k[x]).sum();
    }
    w
}

/// `P⃗ = (-½ r⃗ - ω⃗(k)) / ν`. Undefined for `ν = 0`.
pub fn moment_map(r: &[f64; 3], omega_k: &[f64; 3], nu: f64) -> Result<[f64; 3]> {
    if nu == 0.0 {
        return Err(Error::Precondition("moment map undefined for ν = 0".into()));
    }
    Ok([0, 1, 2].map(|a| (-0.5 * r[a] - omega_k[a]) / nu))
}

/// Split of `∇_X k^Y = ν J⃗_X^Y·P⃗ + L_X^Y_A^B t_B^A`.
#[derive(Clone, Debug)]
pub struct MomentMapData {
    pub p: [f64; 3],
    /// `t_B^A` at `[B][A]`, `2r × 2r`.
    pub t: Vec<C64>,
    pub nu: f64,
    /// Reconstruction residual of `∇k`.
    pub residual: f64,
}

/// Values `∇_X k^Y` at `[X][Y]`.
pub fn nabla_k(gamma: &[Jet], k: &[Jet], d: usize) -> Result<Vec<f64>> {
    let g0: Vec<Jet> = gamma.iter().map(|g| g.truncate(0)).collect();
    let k1: Vec<Jet> = k.iter().map(|c| c.truncate(1)).collect();
    Ok(values(&covariant_derivative_jets(&g0, &k1, Rank::VECTOR, d)?))
}

/// Decomposes values `nk = ∇k` against `J⃗` (values) and the frame.
pub fn decompose_dk(nk: &[f64], j: &[f64], f: &Vielbein, nu: f64) -> Result<MomentMapData> {
    if nu == 0.0 {
        return Err(Error::Precondition("moment map undefined for ν = 0".into()));
    }
    let d = f.dim();
    let n = 2 * f.r;
    let n2 = d * d;
    let mut p = [0.0; 3];
    for (a, pa) in p.iter_mut().enumerate() {
        let mut tr = 0.0;
        for x in 0..d {
            for y in 0..d {
                tr += nk[x * d + y] * j[(a * d + y) * d + x];
            }
        }
        *pa = -tr / (d as f64) / nu;
    }
    let mut c = vec![0.0; n2];
    for x in 0..n2 {
        c[x] = nk[x] - nu * (0..3).map(|a| p[a] * j[a * n2 + x]).sum::<f64>();
    }
    // T = F⁻¹ C F, block-diagonal in the SU(2) index for an L-type C.
    let mut t = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..2 {
        for b in 0..n {
            for a in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for w in 0..d {
                    for z in 0..d {
                        s += f.finv(i * n + b, w) * c[w * d + z] * f.f(z, i * n + a);
                    }
                }
                t[b * n + a] += s * 0.5;
            }
        }
    }
    let l = l_tensor(f);
    let mut residual: f64 = 0.0;
    for w in 0..d {
        for z in 0..d {
            let mut s = C64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    s += l[((w * d + z) * n + a) * n + b] * t[b * n + a];
                }
            }
            residual = residual.max((s - c[w * d + z]).norm());
        }
    }
    Ok(MomentMapData { p, t, nu, residual })
}

/// `ξ(J⃗k)^a = k^Y J^a_Y^Z ξ_Z`.
pub fn xi_of_jk(xi: &[f64], j: &[f64], k: &[f64]) -> [f64; 3] {
    let d = k.len();
    let mut s = [0.0; 3];
    for (a, sa) in s.iter_mut().enumerate() {
        for y in 0..d {
            for z in 0..d {
                *sa += k[y] * j[(a * d + y) * d + z] * xi[z];
            }
        }
    }
    s
}

/// Moment map before and after a ξ-transformation, by the shift law and
/// by recomputation from the transformed connection.
#[derive(Clone, Debug)]
pub struct XiShift {
    pub p: [f64; 3],
    /// `ν P⃗' = ν P⃗ - ξ(J⃗k)`.
    pub p_shift: [f64; 3],
    /// From `∇'k` with `Γ' = Γ + S^ξ`.
    pub p_decompose: [f64; 3],
    /// From `ω⃗' = ω⃗ + J⃗*ξ` and the (unchanged) rotation functions.
    pub p_omega: [f64; 3],
    pub lie_xi: f64,
    pub decompose_residual: f64,
}

impl XiShift {
    pub fn disagreement(&self) -> f64 {
        (0..3).fold(0.0f64, |m, a| {
            m.max((self.p_shift[a] - self.p_decompose[a]).abs())
                .max((self.p_shift[a] - self.p_omega[a]).abs())
        })
    }
}

/// Inputs for moment-map computations at one point.
pub struct SymmetryPoint<'a> {
    /// `Γ` of order ≥ 0, `ω⃗` at `[a][X]` of order ≥ 0.
    pub gamma: &'a [Jet],
    pub omega: &'a [Jet],
    /// `J` of order ≥ 1.
    pub j: &'a [Jet],
    pub frame: &'a Vielbein,
    pub nu: f64,
    pub d: usize,
}

/// ξ-shift of the moment map of `k` (order ≥ 1) for `ξ` (order ≥ 1),
/// gated on `|L_k ξ| ≤ tol`.
pub fn xi_moment_shift(sp: &SymmetryPoint, k: &[Jet], r: &[f64; 3], xi: &[Jet], tol: f64) -> Result<XiShift> {
    let d = sp.d;
    let lie = lie_derivative_jets(k, xi, Rank::COVECTOR, d)?;
    let lie_xi = values(&lie).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(lie_xi <= tol) {
        return Err(Error::Precondition(format!("ξ breaks the symmetry: |L_k ξ| = {lie_xi:e}")));
    }
    let (kv, jv, xv, wv) = (values(k), values(sp.j), values(xi), values(sp.omega));
    let p = moment_map(r, &omega_of(&wv, &kv), sp.nu)?;
    let s = xi_of_jk(&xv, &jv, &kv);
    let p_shift = [0, 1, 2].map(|a| p[a] - s[a] / sp.nu);
    let x0: Vec<Jet> = xi.iter().map(|c| c.truncate(0)).collect();
    let j0: Vec<Jet> = sp.j.iter().map(|c| c.truncate(0)).collect();
    let sx = s_xi_jets(&x0, &j0, d);
    let g2: Vec<Jet> = sp.gamma.iter().zip(&sx).map(|(g, s)| &g.truncate(0) + s).collect();
    let dk = decompose_dk(&nabla_k(&g2, k, d)?, &jv, sp.frame, sp.nu)?;
    let js = values(&j_star(&j0, &x0, d));
    let w2: Vec<f64> = wv.iter().zip(&js).map(|(a, b)| a + b).collect();
    let p_omega = moment_map(r, &omega_of(&w2, &kv), sp.nu)?;
    Ok(XiShift {
        p,
        p_shift,
        p_decompose: dk.p,
        p_omega,
        lie_xi,
        decompose_residual: dk.residual,
    })
}

/// Moment maps of `k` by the two routes and their reconstruction residual.
pub fn moment_maps(sp: &SymmetryPoint, k: &[Jet], r: &[f64; 3]) -> Result<([f64; 3], MomentMapData)> {
    let p = moment_map(r, &omega_of(&values(sp.omega), &values(k)), sp.nu)?;
    let dk = decompose_dk(&nabla_k(sp.gamma, k, sp.d)?, &values(sp.j), sp.frame, sp.nu)?;
    Ok((p, dk))
}

/// Lifted symmetry `k̂⁰ = 0`, `k̂^α = Σ_a k[a][α] (R r⃗)^a`, `k̂^X = k^X(q)`
/// on the cone chart. The rotation functions are solved against the small
/// structure at the reference slice and rotated with the fibre, as
/// `J(z, q) = R(z) J(0, q)`. Jets up to order 1.
pub fn lift_symmetry(k: &TensorField, l: &LiftData, tol: f64) -> TensorField {
    let k = k.clone();
    let l = l.clone();
    let big = l.big_dim();
    TensorField::new(big, Rank::VECTOR, 1, move |p, order| {
        let order = order.min(1);
        let n = l.small_dim();
        let q = &p[Q0..];
        let jq = l.j.eval(q, order + 1)?;
        let kq = k.eval(q, order + 1)?;
        let rot = rotation_functions(&kq, &jq, n, tol)?;
        let map: Vec<usize> = (0..n).map(|i| Q0 + i).collect();
        let zs: Vec<Jet> = (0..3).map(|a| Jet::variable(p[ZA + a], ZA + a, big, order)).collect();
        let ka = k_alpha_jets(&zs);
        let rz = fibre_rotation(&zs)?;
        let r: Vec<Jet> = rot.r.iter().map(|x| x.truncate(order).embed(big, &map)).collect();
        let mut out = vec![Jet::zero(big, order); big];
        for a in 0..3 {
            let mut ra = Jet::zero(big, order);
            for b in 0..3 {
                ra.add_mul(&rz[a * 3 + b], &r[b]);
            }
            for al in 0..3 {
                out[ZA + al].add_mul(&ka[a * 3 + al], &ra);
            }
        }
        for x in 0..n {
            out[Q0 + x] = kq[x].truncate(order).embed(big, &map);
        }
        Ok(out)
    })
}

/// Small-space data read back from a cone vector at `p`.
#[derive(Clone, Debug)]
pub struct ProjectedSymmetry {
    pub k: Vec<f64>,
    pub r: [f64; 3],
    /// `|k̂⁰|`.
    pub radial: f64,
}

/// Inverts `lift_symmetry` pointwise: `k = k̂^X`, `r⃗ = R⁻¹ m⃗·k̂^α`.
pub fn project_symmetry(khat: &[f64], p: &[f64]) -> Result<ProjectedSymmetry> {
    let big = p.len();
    let zs: Vec<Jet> = (0..3).map(|a| Jet::constant(p[ZA + a], big, 0)).collect();
    let m = values(&m_alpha_jets(&k_alpha_jets(&zs))?);
    let rz = values(&fibre_rotation(&zs)?);
    let mut rr = [0.0; 3];
    for (a, ra) in rr.iter_mut().enumerate() {
        *ra = (0..3).map(|al| m[a * 3 + al] * khat[ZA + al]).sum();
    }
    // R is orthogonal: R⁻¹ = Rᵀ.
    let r = [0, 1, 2].map(|b| (0..3).map(|a| rz[a * 3 + b] * rr[a]).sum());
    Ok(ProjectedSymmetry {
        k: khat[Q0..].to_vec(),
        r,
        radial: khat[Z0].abs(),
    })
}

/// Upstairs certification of a cone vector: `|[k̂, k]|` and the rotation
/// functions of `k̂` against `Ĵ` (zero for triholomorphic).
#[derive(Clone, Debug)]
pub struct ConeSymmetry {
    pub dilatation_commutator: f64,
    pub rotation: [f64; 3],
    pub rotation_residual: f64,
}

/// Certifies `k̂` (order ≥ 1) against `Ĵ` (order ≥ 1) and the homothetic
/// vector `kh` (order ≥ 1).
pub fn certify_cone_symmetry(khat: &[Jet], jhat: &[Jet], kh: &[Jet], d: usize, tol: f64) -> Result<ConeSymmetry> {
    let br = values(&lie_bracket_jets(khat, kh, d));
    let rot = rotation_functions(khat, jhat, d, tol)?;
    Ok(ConeSymmetry {
        dilatation_commutator: br.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        rotation: rot.values(),
        rotation_residual: rot.residual,
    })
}

/// Closure of a pair: the bracket `[k₁, k₂]` (orders ≥ 3 give an order-2
/// bracket).
pub fn bracket(k1: &[Jet], k2: &[Jet], d: usize) -> Vec<Jet> {
    lie_bracket_jets(k1, k2, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::variables;
    use crate::qstruct::frame_basis_jets;
    use crate::quat::flat_j;

    fn flat_j_jets(m: usize, o: u8) -> Vec<Jet> {
        let d = 4 * m;
        flat_j(m).iter().map(|&v| Jet::constant(v, d, o)).collect()
    }

    fn zero_gamma(d: usize) -> Vec<Jet> {
        vec![Jet::zero(d, 1); d * d * d]
    }

    fn frame(j: &[Jet], d: usize) -> Vielbein {
        let b = frame_basis_jets(j, None, d).unwrap();
        Vielbein::from_basis(&values(&b), d / 4).unwrap()
    }

    #[test]
    fn translation_is_a_triholomorphic_symmetry() {
        let d = 8;
        let k: Vec<Jet> = (0..d).map(|i| Jet::constant(i as f64 - 2.5, d, 3)).collect();
        assert_eq!(symmetry_residual(&zero_gamma(d), &k, d).unwrap(), 0.0);
        let rot = rotation_functions(&k, &flat_j_jets(2, 2), d, 1e-12).unwrap();
        assert!(rot.norm() < 1e-14);
    }

    #[test]
    fn quadratic_field_is_not_a_symmetry() {
        let d = 4;
        let p = [0.2, -0.1, 0.3, 0.05];
        let x = variables(&p, 3).unwrap();
        let k: Vec<Jet> = (0..d).map(|i| &x[i] * &x[(i + 1) % d]).collect();
        assert!(symmetry_residual(&zero_gamma(d), &k, d).unwrap() > 1e-3);
    }

    #[test]
    fn left_multiplication_is_triholomorphic_right_multiplication_rotates() {
        let p = [0.3, -0.2, 0.1, 0.4];
        let x = variables(&p, 2).unwrap();
        let j = flat_j_jets(1, 2);
        // x ↦ i x
        let left = vec![-&x[1], x[0].clone(), -&x[3], x[2].clone()];
        assert!(rotation_functions(&left, &j, 4, 1e-12).unwrap().norm() < 1e-14);
        // x ↦ x i
        let right = vec![-&x[1], x[0].clone(), x[3].clone(), -&x[2]];
        let r = rotation_functions(&right, &j, 4, 1e-12).unwrap().values();
        assert!(r[1].abs() < 1e-14 && r[2].abs() < 1e-14);
        assert!((r[0].abs() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn moment_map_rejects_zero_nu_and_scales_inversely() {
        let r = [0.3, -0.1, 0.2];
        let w = [0.05, 0.0, -0.4];
        assert!(moment_map(&r, &w, 0.0).is_err());
        let p1 = moment_map(&r, &w, -1.0).unwrap();
        let p2 = moment_map(&r, &w, -2.0).unwrap();
        for a in 0..3 {
            assert!((p1[a] - 2.0 * p2[a]).abs() < 1e-15);
        }
        assert_eq!(moment_map(&[0.0; 3], &[0.0; 3], 0.5).unwrap(), [0.0; 3]);
    }

    #[test]
    fn translation_moment_map_vanishes_and_t_carries_dk() {
        let d = 4;
        let j = flat_j_jets(1, 1);
        let f = frame(&j, d);
        let k: Vec<Jet> = (0..d).map(|i| Jet::constant(1.0 + i as f64, d, 1)).collect();
        let data = decompose_dk(&nabla_k(&zero_gamma(d), &k, d).unwrap(), &values(&j), &f, -1.0).unwrap();
        assert_eq!(data.p, [0.0; 3]);
        assert!(data.residual < 1e-14);
        assert!(data.t.iter().all(|t| t.norm() < 1e-14));
    }

    #[test]
    fn zero_xi_leaves_moment_map_unchanged() {
        let d = 4;
        let p = [0.1, 0.2, 0.3, 0.4];
        let x = variables(&p, 2).unwrap();
        let j = flat_j_jets(1, 2);
        let f = frame(&j, d);
        let k = vec![-&x[1], x[0].clone(), -&x[3], x[2].clone()];
        let rot = rotation_functions(&k, &j, d, 1e-12).unwrap();
        let omega = vec![Jet::zero(d, 1); 3 * d];
        let gamma = zero_gamma(d);
        let sp = SymmetryPoint { gamma: &gamma, omega: &omega, j: &j, frame: &f, nu: -1.0, d };
        let xi = vec![Jet::zero(d, 1); d];
        let s = xi_moment_shift(&sp, &k, &rot.values(), &xi, 1e-12).unwrap();
        assert_eq!(s.p, s.p_shift);
        assert!(s.disagreement() < 1e-14);
    }

    #[test]
    fn non_invariant_xi_is_rejected() {
        let d = 4;
        let p = [0.1, 0.2, 0.3, 0.4];
        let x = variables(&p, 2).unwrap();
        let j = flat_j_jets(1, 2);
        let f = frame(&j, d);
        let k = vec![-&x[1], x[0].clone(), -&x[3], x[2].clone()];
        let omega = vec![Jet::zero(d, 1); 3 * d];
        let gamma = zero_gamma(d);
        let sp = SymmetryPoint { gamma: &gamma, omega: &omega, j: &j, frame: &f, nu: -1.0, d };
        let xi: Vec<Jet> = (0..d).map(|i| if i == 0 { Jet::constant(1.0, d, 1) } else { Jet::zero(d, 1) }).collect();
        match xi_moment_shift(&sp, &k, &[0.0; 3], &xi, 1e-10) {
            Err(Error::Precondition(m)) => assert!(m.contains("breaks")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
