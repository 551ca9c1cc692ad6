//! Almost hypercomplex structures: quaternion algebra, Nijenhuis tensors,
//! the Oproiu SU(2) one-form, hermiticity, and vielbeins with their
//! symplectic reality data.

use crate::error::{Error, Result};
use crate::field::{eps, Rank, TensorField};
use crate::jet::{Jet, MAX_ORDER};
use crate::linalg::{inverse_jet, lstsq_jet};
use num_complex::Complex64 as C64;

/// Normalization of the diagonal Nijenhuis tensor `N = C_N Σ_a N^{J^a}`.
///
/// Locked by requiring that the quaternionic Nijenhuis form holds with the
/// closed-form Oproiu one-form on the lifted flat cone; see the calibration
/// test `nijenhuis_constant_calibration`.
pub const C_N: f64 = 1.0 / 12.0;

/// Three (1,1) tensor fields `J^a_X^Y`, stacked `[a][X][Y]`.
#[derive(Clone)]
pub struct HypercomplexTriple {
    pub field: TensorField,
}

impl HypercomplexTriple {
    pub fn new(field: TensorField) -> Self {
        assert_eq!(field.copies, 3);
        assert_eq!(field.rank, Rank::ENDO);
        HypercomplexTriple { field }
    }

    pub fn dim(&self) -> usize {
        self.field.dim
    }

    /// Constant structure given by `j` (`[a][X][Y]`).
    pub fn constant(dim: usize, j: Vec<f64>) -> Self {
        Self::new(TensorField::new(dim, Rank::ENDO, 3, move |p, order| {
            Ok(j.iter().map(|&v| Jet::constant(v, p.len(), order)).collect())
        }))
    }

    pub fn eval(&self, p: &[f64], order: u8) -> Result<Vec<Jet>> {
        self.field.eval(p, order)
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(p, 0)?.iter().map(Jet::value).collect())
    }
}

/// A symmetric (0,2) field with a signature label.
#[derive(Clone)]
pub struct HermitianForm {
    pub field: TensorField,
    pub signature: (usize, usize),
}

fn mat(j: &[f64], a: usize, d: usize) -> &[f64] {
    &j[a * d * d..(a + 1) * d * d]
}

/// `max |J^a J^b + δ^{ab} - ε^{abc} J^c|` over all entries.
pub fn algebra_residual(j: &[f64], d: usize) -> f64 {
    let mut r: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let (ja, jb) = (mat(j, a, d), mat(j, b, d));
            for x in 0..d {
                for z in 0..d {
                    let mut s = 0.0;
                    for y in 0..d {
                        s += ja[x * d + y] * jb[y * d + z];
                    }
                    if a == b && x == z {
                        s += 1.0;
                    }
                    for c in 0..3 {
                        s -= eps(a, b, c) * j[(c * d + x) * d + z];
                    }
                    r = r.max(s.abs());
                }
            }
        }
    }
    r
}

/// Residual of `tr J^a = 0` and `tr(J^a J^b) = -d δ^{ab}`.
pub fn trace_residual(j: &[f64], d: usize) -> f64 {
    let mut r: f64 = 0.0;
    for a in 0..3 {
        let t: f64 = (0..d).map(|x| j[(a * d + x) * d + x]).sum();
        r = r.max(t.abs());
        for b in 0..3 {
            let mut s = 0.0;
            for x in 0..d {
                for y in 0..d {
                    s += j[(a * d + x) * d + y] * j[(b * d + y) * d + x];
                }
            }
            let e = if a == b { -(d as f64) } else { 0.0 };
            r = r.max((s - e).abs());
        }
    }
    r
}

/// Quaternion algebra residual of a structure at `p`.
pub fn quaternion_algebra_residual(h: &HypercomplexTriple, p: &[f64]) -> Result<f64> {
    Ok(algebra_residual(&h.values(p)?, h.dim()))
}

/// `max |J J + 1|` of a single endomorphism.
pub fn almost_complex_residual(j: &[f64], d: usize) -> f64 {
    let mut r: f64 = 0.0;
    for x in 0..d {
        for z in 0..d {
            let mut s = if x == z { 1.0 } else { 0.0 };
            for y in 0..d {
                s += j[x * d + y] * j[y * d + z];
            }
            r = r.max(s.abs());
        }
    }
    r
}

/// Nijenhuis tensor `N_XY^Z` of a single structure on jets (one order lower
/// than the input):
/// `J_X^W ∂_W J_Y^Z - J_Y^W ∂_W J_X^Z + ∂_Y J_X^W J_W^Z - ∂_X J_Y^W J_W^Z`.
pub fn nijenhuis_jets(j: &[Jet], d: usize) -> Vec<Jet> {
    let o = j[0].order() - 1;
    let jj: Vec<Jet> = j.iter().map(|x| x.truncate(o)).collect();
    // dj[(X*d+Y)*d+W] = ∂_W J_X^Y
    let mut dj = Vec::with_capacity(d * d * d);
    for c in j {
        for w in 0..d {
            dj.push(c.partial(w));
        }
    }
    let mut out = Vec::with_capacity(d * d * d);
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let mut s = Jet::zero(j[0].dim(), o);
                for w in 0..d {
                    s.add_mul(&jj[x * d + w], &dj[(y * d + z) * d + w]);
                    s.add_mul_scaled(-1.0, &jj[y * d + w], &dj[(x * d + z) * d + w]);
                    s.add_mul(&dj[(x * d + w) * d + y], &jj[w * d + z]);
                    s.add_mul_scaled(-1.0, &dj[(y * d + w) * d + x], &jj[w * d + z]);
                }
                out.push(s);
            }
        }
    }
    out
}

/// Nijenhuis tensor of one structure `J` (a (1,1) field) at `p`.
pub fn nijenhuis(j: &TensorField, p: &[f64], tol: f64) -> Result<Vec<f64>> {
    let jj = j.eval(p, 1)?;
    let d = j.dim;
    let v: Vec<f64> = jj.iter().map(Jet::value).collect();
    let r = almost_complex_residual(&v, d);
    if r > tol {
        return Err(Error::Precondition(format!(
            "structure is not almost complex (J² + 1 residual {r:e})"
        )));
    }
    Ok(nijenhuis_jets(&jj, d).iter().map(Jet::value).collect())
}

/// Diagonal Nijenhuis tensor `C_N Σ_a N^{J^a}` on jets.
pub fn nijenhuis_diag_jets(j: &[Jet], d: usize) -> Vec<Jet> {
    let n = d * d;
    let mut out = nijenhuis_jets(&j[..n], d);
    for a in 1..3 {
        let na = nijenhuis_jets(&j[a * n..(a + 1) * n], d);
        for (o, x) in out.iter_mut().zip(&na) {
            *o += x;
        }
    }
    for o in out.iter_mut() {
        *o *= C_N;
    }
    out
}

/// Diagonal Nijenhuis tensor at `p`.
pub fn nijenhuis_diag(h: &HypercomplexTriple, p: &[f64]) -> Result<Vec<f64>> {
    let j = h.eval(p, 1)?;
    Ok(nijenhuis_diag_jets(&j, h.dim()).iter().map(Jet::value).collect())
}

/// Max-abs over a slice.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Max-abs over jet values.
pub fn max_abs_jets(v: &[Jet]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.value().abs()))
}

/// Result of fitting `N_XY^Z = -½ J⃗_X^Z·ω⃗_Y + ½ J⃗_Y^Z·ω⃗_X`.
#[derive(Clone, Debug)]
pub struct OmegaOp {
    /// `ω^a_X` stacked `[a][X]`, order ≤ 1 jets.
    pub omega: Vec<Jet>,
    pub residual: f64,
}

/// Least-squares extraction of `ω⃗^Op` from jets of `J` (order ≥ 1; order 2
/// gives first derivatives of `ω⃗`).
pub fn extract_omega_op_jets(j: &[Jet], d: usize) -> Result<OmegaOp> {
    let o = j[0].order() - 1;
    let n = nijenhuis_diag_jets(j, d);
    let jt: Vec<Jet> = j.iter().map(|x| x.truncate(o)).collect();
    let cols = 3 * d;
    let rows = d * d * d;
    let dim = j[0].dim();
    let mut m = vec![Jet::zero(dim, o); rows * cols];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let r = (x * d + y) * d + z;
                for a in 0..3 {
                    // -½ J^a_X^Z ω^a_Y + ½ J^a_Y^Z ω^a_X
                    m[r * cols + a * d + y].add_scaled(-0.5, &jt[(a * d + x) * d + z]);
                    m[r * cols + a * d + x].add_scaled(0.5, &jt[(a * d + y) * d + z]);
                }
            }
        }
    }
    let (omega, residual) = lstsq_jet(&m, rows, cols, &n)?;
    Ok(OmegaOp { omega, residual })
}

/// `ω⃗^Op` at `p` with its fit residual.
pub fn extract_omega_op(h: &HypercomplexTriple, p: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
    let j = h.eval(p, 1)?;
    let v: Vec<f64> = j.iter().map(Jet::value).collect();
    let ar = algebra_residual(&v, h.dim());
    if ar > tol {
        return Err(Error::Precondition(format!(
            "quaternion algebra residual {ar:e}"
        )));
    }
    let w = extract_omega_op_jets(&j, h.dim())?;
    Ok((w.omega.iter().map(Jet::value).collect(), w.residual))
}

/// Closed form `-(1/6)(2A⃗_X + A⃗_Y × J⃗_X^Y)` on jets.
pub fn omega_op_closed_form(j: &[Jet], a: &[Jet], d: usize) -> Vec<Jet> {
    let o = j[0].order().min(a[0].order());
    let dim = j[0].dim();
    let mut out = vec![Jet::zero(dim, o); 3 * d];
    for c in 0..3 {
        for x in 0..d {
            let s = &mut out[c * d + x];
            s.add_scaled(2.0, &a[c * d + x]);
            for p in 0..3 {
                for q in 0..3 {
                    let e = eps(p, q, c);
                    if e == 0.0 {
                        continue;
                    }
                    for y in 0..d {
                        s.add_mul_scaled(e, &a[p * d + y], &j[(q * d + x) * d + y]);
                    }
                }
            }
            *s *= -1.0 / 6.0;
        }
    }
    out
}

/// `max_a max |F(J^a X, J^a Y) - F(X, Y)|` over coordinate directions.
pub fn hermiticity_residual_vals(f: &[f64], j: &[f64], d: usize) -> f64 {
    let mut r: f64 = 0.0;
    for a in 0..3 {
        let ja = mat(j, a, d);
        for x in 0..d {
            for y in 0..d {
                let mut s = 0.0;
                for u in 0..d {
                    if ja[x * d + u] == 0.0 {
                        continue;
                    }
                    for v in 0..d {
                        s += ja[x * d + u] * ja[y * d + v] * f[u * d + v];
                    }
                }
                r = r.max((s - f[x * d + y]).abs());
            }
        }
    }
    r
}

/// Hermiticity residual of a (0,2) field at `p`.
pub fn hermiticity_residual(f: &TensorField, h: &HypercomplexTriple, p: &[f64]) -> Result<f64> {
    let fv: Vec<f64> = f.eval(p, 0)?.iter().map(Jet::value).collect();
    Ok(hermiticity_residual_vals(&fv, &h.values(p)?, h.dim()))
}

/// Pauli matrices `σ^1, σ^2, σ^3`.
pub fn pauli() -> [[[C64; 2]; 2]; 3] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [[[z, o], [o, z]], [[z, -i], [i, z]], [[o, z], [z, -o]]]
}

/// The 2×2 symplectic matrix `ε = [[0,1],[-1,0]]`.
pub const EPS2: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

/// Constant intertwiner on ℍ^r: `J_flat^a U = U K^a` with
/// `K^a = (-iσ^a) ⊗ I_{2r}` on the doublet-major index `i·2r + A`.
pub fn intertwiner(r: usize) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re = |x: f64| C64::new(x * s, 0.0);
    let im = |x: f64| C64::new(0.0, x * s);
    let z = C64::new(0.0, 0.0);
    let u1 = [
        [re(1.0), z, z, re(1.0)],
        [z, im(-1.0), im(-1.0), z],
        [z, re(1.0), re(-1.0), z],
        [im(-1.0), z, z, im(1.0)],
    ];
    let d = 4 * r;
    let mut u = vec![z; d * d];
    for p in 0..r {
        for m in 0..4 {
            for i in 0..2 {
                for sidx in 0..2 {
                    u[(4 * p + m) * d + i * 2 * r + 2 * p + sidx] = u1[m][2 * i + sidx];
                }
            }
        }
    }
    u
}

/// Pointwise vielbein `f_X^{iA}` with inverse `f^X_{iA}` and the symplectic
/// data. Complex arrays are stored as paired real arrays.
#[derive(Clone, Debug)]
pub struct Vielbein {
    pub r: usize,
    /// `f_X^{iA}` at `[X][i*2r + A]`.
    pub f_re: Vec<f64>,
    pub f_im: Vec<f64>,
    /// `f^X_{iA}` at `[i*2r + A][X]`.
    pub finv_re: Vec<f64>,
    pub finv_im: Vec<f64>,
    /// `ρ^{AB}`, `2r × 2r`.
    pub rho: Vec<f64>,
    pub eps: [[f64; 2]; 2],
    pub sigma: [[[C64; 2]; 2]; 3],
    /// Real frame basis `B` with `B J^a B⁻¹ = J_flat^a` (rows are frame
    /// vectors).
    pub basis: Vec<f64>,
}

impl Vielbein {
    pub fn dim(&self) -> usize {
        4 * self.r
    }

    pub fn f(&self, x: usize, ia: usize) -> C64 {
        let d = self.dim();
        C64::new(self.f_re[x * d + ia], self.f_im[x * d + ia])
    }

    pub fn finv(&self, ia: usize, x: usize) -> C64 {
        let d = self.dim();
        C64::new(self.finv_re[ia * d + x], self.finv_im[ia * d + x])
    }

    /// Builds the vielbein `F = B⁻¹ U` from a real frame basis `B`.
    pub fn from_basis(basis: &[f64], r: usize) -> Result<Self> {
        let d = 4 * r;
        let bm = nalgebra::DMatrix::from_row_slice(d, d, basis);
        let e = crate::linalg::inverse(&bm)?;
        let u = intertwiner(r);
        let mut f_re = vec![0.0; d * d];
        let mut f_im = vec![0.0; d * d];
        let mut finv_re = vec![0.0; d * d];
        let mut finv_im = vec![0.0; d * d];
        for x in 0..d {
            for c in 0..d {
                let mut s = C64::new(0.0, 0.0);
                let mut t = C64::new(0.0, 0.0);
                for k in 0..d {
                    s += u[k * d + c] * e[(x, k)];
                    // U⁻¹ = U†
                    t += u[k * d + x].conj() * basis[k * d + c];
                }
                f_re[x * d + c] = s.re;
                f_im[x * d + c] = s.im;
                finv_re[x * d + c] = t.re;
                finv_im[x * d + c] = t.im;
            }
        }
        let mut rho = vec![0.0; 4 * r * r];
        for p in 0..r {
            for s in 0..2 {
                for t in 0..2 {
                    rho[(2 * p + s) * 2 * r + 2 * p + t] = EPS2[s][t];
                }
            }
        }
        Ok(Vielbein {
            r,
            f_re,
            f_im,
            finv_re,
            finv_im,
            rho,
            eps: EPS2,
            sigma: pauli(),
            basis: basis.to_vec(),
        })
    }

    /// Residual of `ρ^{AB} = -ρ^{BA}` and `ρ^{AB} ρ_{CB} = δ^A_C`.
    pub fn symplectic_residual(&self) -> f64 {
        let n = 2 * self.r;
        let mut res: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                res = res.max((self.rho[a * n + b] + self.rho[b * n + a]).abs());
                let mut s = 0.0;
                for c in 0..n {
                    s += self.rho[a * n + c] * self.rho[b * n + c];
                }
                let e = if a == b { 1.0 } else { 0.0 };
                res = res.max((s - e).abs());
            }
        }
        res
    }

    /// Residual of `f_X^{iA} f^Y_{iA} = δ_X^Y` and `f_X^{iA} f^X_{jB} = δ`.
    pub fn inverse_residual(&self) -> f64 {
        let d = self.dim();
        let mut res: f64 = 0.0;
        for x in 0..d {
            for y in 0..d {
                let mut s = C64::new(0.0, 0.0);
                let mut t = C64::new(0.0, 0.0);
                for k in 0..d {
                    s += self.f(x, k) * self.finv(k, y);
                    t += self.f(k, x) * self.finv(y, k);
                }
                let e = if x == y { 1.0 } else { 0.0 };
                res = res.max((s - e).norm()).max((t - e).norm());
            }
        }
        res
    }

    /// Residual of `(f^X_{iA})* = ε^{ij} ρ^{AB} f^X_{jB}`.
    pub fn reality_residual(&self) -> f64 {
        let d = self.dim();
        let n = 2 * self.r;
        let mut res: f64 = 0.0;
        for i in 0..2 {
            for a in 0..n {
                for x in 0..d {
                    let mut s = C64::new(0.0, 0.0);
                    for j in 0..2 {
                        for b in 0..n {
                            s += self.finv(j * n + b, x) * self.eps[i][j] * self.rho[a * n + b];
                        }
                    }
                    res = res.max((self.finv(i * n + a, x).conj() - s).norm());
                }
            }
        }
        res
    }
}

/// `J⃗_X^Y = -i σ⃗_i^j f_X^{iA} f^Y_{jA}`; returns the real parts and the
/// largest discarded imaginary part.
pub fn j_from_vielbein(f: &Vielbein) -> (Vec<f64>, f64) {
    let d = f.dim();
    let n = 2 * f.r;
    let mut j = vec![0.0; 3 * d * d];
    let mut imag: f64 = 0.0;
    let mi = C64::new(0.0, -1.0);
    for a in 0..3 {
        for x in 0..d {
            for y in 0..d {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..2 {
                    for k in 0..2 {
                        let sg = f.sigma[a][i][k];
                        if sg.norm() == 0.0 {
                            continue;
                        }
                        for aa in 0..n {
                            s += mi * sg * f.f(x, i * n + aa) * f.finv(k * n + aa, y);
                        }
                    }
                }
                j[(a * d + x) * d + y] = s.re;
                imag = imag.max(s.im.abs());
            }
        }
    }
    (j, imag)
}

/// `L_W^Z_A^B = f^Z_{iA} f_W^{iB}` at `[W][Z][A][B]`.
pub fn l_tensor(f: &Vielbein) -> Vec<C64> {
    let d = f.dim();
    let n = 2 * f.r;
    let mut l = vec![C64::new(0.0, 0.0); d * d * n * n];
    for w in 0..d {
        for z in 0..d {
            for a in 0..n {
                for b in 0..n {
                    let mut s = C64::new(0.0, 0.0);
                    for i in 0..2 {
                        s += f.finv(i * n + a, z) * f.f(w, i * n + b);
                    }
                    l[((w * d + z) * n + a) * n + b] = s;
                }
            }
        }
    }
    l
}

/// Quaternionic Gram–Schmidt on jets. Returns the frame basis `B` (rows
/// `e, e J¹, e J², e J³` per quaternionic block) as jets, with
/// `B J^a B⁻¹ = J_flat^a`. With `g`, seeds are projected `g`-orthogonally
/// and normalized by `|g(e,e)|^{1/2}`; otherwise seeds are unit coordinate
/// vectors chosen to be independent of the span so far.
pub fn frame_basis_jets(j: &[Jet], g: Option<&[Jet]>, d: usize) -> Result<Vec<Jet>> {
    if d % 4 != 0 {
        return Err(Error::Argument("dimension not divisible by 4".into()));
    }
    let dim = j[0].dim();
    let order = j[0].order().min(g.map_or(MAX_ORDER, |g| crate::jet::min_order(g)));
    let r = d / 4;
    let mut rows: Vec<Vec<Jet>> = Vec::with_capacity(d);
    let apply = |v: &[Jet], a: usize| -> Vec<Jet> {
        (0..d)
            .map(|y| {
                let mut s = Jet::zero(dim, order);
                for x in 0..d {
                    s.add_mul(&v[x], &j[(a * d + x) * d + y]);
                }
                s
            })
            .collect()
    };
    let gdot = |u: &[Jet], v: &[Jet], g: &[Jet]| -> Jet {
        let mut s = Jet::zero(dim, order);
        for x in 0..d {
            for y in 0..d {
                let t = &u[x] * &g[x * d + y];
                s.add_mul(&t, &v[y]);
            }
        }
        s
    };
    let mut used = vec![false; d];
    for _block in 0..r {
        // Pick the seed giving the best-conditioned new block.
        let mut best: Option<(f64, usize, Vec<Jet>)> = None;
        for e in 0..d {
            if used[e] {
                continue;
            }
            let mut v: Vec<Jet> = (0..d)
                .map(|x| Jet::constant(if x == e { 1.0 } else { 0.0 }, dim, order))
                .collect();
            let score;
            if let Some(g) = g {
                for b in &rows {
                    let c = gdot(&v, b, g).try_div(&gdot(b, b, g))?;
                    for x in 0..d {
                        v[x].add_mul_scaled(-1.0, &c, &b[x]);
                    }
                }
                score = gdot(&v, &v, g).value().abs();
            } else {
                let mut cand: Vec<Vec<f64>> = rows.iter().map(|b| b.iter().map(Jet::value).collect()).collect();
                cand.push(v.iter().map(Jet::value).collect());
                for a in 0..3 {
                    cand.push(apply(&v, a).iter().map(Jet::value).collect());
                }
                let m = nalgebra::DMatrix::from_fn(cand.len(), d, |i, k| cand[i][k]);
                let s = crate::linalg::singular_values(&m)?;
                let smax = s.iter().cloned().fold(0.0, f64::max);
                let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
                score = smin / smax;
            }
            if best.as_ref().map_or(true, |b| score > b.0 * (1.0 + 1e-9)) {
                best = Some((score, e, v));
            }
        }
        let (score, e, mut v) = best.ok_or_else(|| Error::Singular("frame seed".into()))?;
        if !(score > 1e-10) {
            return Err(Error::Singular("no admissible frame seed".into()));
        }
        used[e] = true;
        if let Some(g) = g {
            let n2 = gdot(&v, &v, g);
            let s = if n2.value() < 0.0 { -&n2 } else { n2 };
            let inv = s.sqrt()?.recip()?;
            for x in 0..d {
                v[x] = &v[x] * &inv;
            }
        }
        let vs: Vec<Vec<Jet>> = (0..3).map(|a| apply(&v, a)).collect();
        rows.push(v);
        rows.extend(vs);
    }
    Ok(rows.into_iter().flatten().collect())
}

/// Pointwise vielbein from a structure (and optionally a metric) at `p`.
pub fn frame_from_structure(
    h: &HypercomplexTriple,
    p: &[f64],
    g: Option<&TensorField>,
) -> Result<Vielbein> {
    let j = h.eval(p, 0)?;
    let d = h.dim();
    let v: Vec<f64> = j.iter().map(Jet::value).collect();
    let ar = algebra_residual(&v, d);
    if ar > 1e-8 {
        return Err(Error::Precondition(format!("quaternion algebra residual {ar:e}")));
    }
    let gj = match g {
        Some(g) => Some(g.eval(p, 0)?),
        None => None,
    };
    let b = frame_basis_jets(&j, gj.as_deref(), d)?;
    let bv: Vec<f64> = b.iter().map(Jet::value).collect();
    Vielbein::from_basis(&bv, d / 4)
}

/// Inverse `E = B⁻¹` of a jet frame basis.
pub fn frame_inverse_jets(b: &[Jet], d: usize) -> Result<Vec<Jet>> {
    inverse_jet(b, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::flat_j;

    #[test]
    fn flat_structure_is_quaternionic() {
        for m in 1..4 {
            let j = flat_j(m);
            assert!(algebra_residual(&j, 4 * m) < 1e-14);
            assert!(trace_residual(&j, 4 * m) < 1e-14);
        }
    }

    #[test]
    fn sign_flip_breaks_algebra_by_two() {
        let mut j = flat_j(1);
        for v in j[..16].iter_mut() {
            *v = -*v;
        }
        assert!((algebra_residual(&j, 4) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_structure_has_zero_nijenhuis() {
        let h = HypercomplexTriple::constant(8, flat_j(2));
        let n = nijenhuis_diag(&h, &[0.1; 8]).unwrap();
        assert!(n.iter().all(|&x| x == 0.0));
        let (w, res) = extract_omega_op(&h, &[0.1; 8], 1e-10).unwrap();
        assert!(max_abs(&w) < 1e-14 && res < 1e-14);
    }

    #[test]
    fn euclidean_metric_is_hermitian() {
        let j = flat_j(1);
        let mut g = vec![0.0; 16];
        for x in 0..4 {
            g[x * 4 + x] = 1.0;
        }
        assert!(hermiticity_residual_vals(&g, &j, 4) < 1e-15);
        let mut f = vec![0.0; 16];
        f[0] = 1.0;
        assert!(hermiticity_residual_vals(&f, &j, 4) > 0.5);
    }

    #[test]
    fn flat_vielbein_reproduces_structure() {
        for r in 1..3 {
            let d = 4 * r;
            let mut b = vec![0.0; d * d];
            for x in 0..d {
                b[x * d + x] = 1.0;
            }
            let v = Vielbein::from_basis(&b, r).unwrap();
            assert!(v.symplectic_residual() == 0.0);
            assert!(v.inverse_residual() < 1e-15);
            assert!(v.reality_residual() < 1e-15);
            let (j, im) = j_from_vielbein(&v);
            assert!(im < 1e-15);
            assert!(max_abs(&j.iter().zip(flat_j(r)).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-15);
        }
    }
}
