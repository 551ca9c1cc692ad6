//! Riemann, Ricci, SU(2) and Gl(r,ℍ) curvatures, the relation between
//! them, the Weyl/Ricci split and the Einstein conditions.
//!
//! `R_XYZ^W = ∂_XΓ_YZ^W - ∂_YΓ_XZ^W + Γ_XV^W Γ_YZ^V - Γ_YV^W Γ_XZ^V`,
//! `Ric_XY = R_ZXY^Z`.

use num_complex::Complex64 as C64;

use crate::connection::GlConnection;
use crate::error::{Error, Result};
use crate::field::eps;
use crate::jet::{min_order, Jet};
use crate::qstruct::{intertwiner, l_tensor, Vielbein, EPS2};

fn need_order(js: &[Jet], o: u8) -> Result<()> {
    if min_order(js) < o {
        return Err(Error::Precondition(format!("jets of order {o} required")));
    }
    Ok(())
}

/// Riemann tensor values from order-1 jets of `Γ`.
pub fn riemann(gamma: &[Jet], d: usize) -> Result<Vec<f64>> {
    need_order(gamma, 1)?;
    let g = |x: usize, y: usize, z: usize| gamma[(x * d + y) * d + z].value();
    let dg = |k: usize, x: usize, y: usize, z: usize| gamma[(x * d + y) * d + z].d1(k);
    let mut r = vec![0.0; d * d * d * d];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                for w in 0..d {
                    let mut s = dg(x, y, z, w) - dg(y, x, z, w);
                    for v in 0..d {
                        s += g(x, v, w) * g(y, z, v) - g(y, v, w) * g(x, z, v);
                    }
                    r[((x * d + y) * d + z) * d + w] = s;
                }
            }
        }
    }
    Ok(r)
}

/// `Ric_XY = R_ZXY^Z`.
pub fn ricci(r: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for x in 0..d {
        for y in 0..d {
            out[x * d + y] = (0..d).map(|z| r[((z * d + x) * d + y) * d + z]).sum();
        }
    }
    out
}

/// `max |R_XYZ^W + R_YZX^W + R_ZXY^W|`.
pub fn bianchi_residual(r: &[f64], d: usize) -> f64 {
    let at = |x: usize, y: usize, z: usize, w: usize| r[((x * d + y) * d + z) * d + w];
    let mut m: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                for w in 0..d {
                    m = m.max((at(x, y, z, w) + at(y, z, x, w) + at(z, x, y, w)).abs());
                }
            }
        }
    }
    m
}

/// `Ric_[XY] = ½(Ric_XY - Ric_YX)`.
pub fn ricci_antisym(ric: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for x in 0..d {
        for y in 0..d {
            out[x * d + y] = 0.5 * (ric[x * d + y] - ric[y * d + x]);
        }
    }
    out
}

/// `R^ℝ_XY = ½ R_XYW^W`.
pub fn r_real_from_riemann(r: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for x in 0..d {
        for y in 0..d {
            out[x * d + y] = 0.5 * (0..d).map(|w| r[((x * d + y) * d + w) * d + w]).sum::<f64>();
        }
    }
    out
}

/// `R⃗_XY = ∂_Xω⃗_Y - ∂_Yω⃗_X + 2 ω⃗_X × ω⃗_Y` at `[a][X][Y]`.
pub fn su2_curvature(omega: &[Jet], d: usize) -> Result<Vec<f64>> {
    need_order(omega, 1)?;
    let mut out = vec![0.0; 3 * d * d];
    for a in 0..3 {
        for x in 0..d {
            for y in 0..d {
                let mut s = omega[a * d + y].d1(x) - omega[a * d + x].d1(y);
                for b in 0..3 {
                    for c in 0..3 {
                        let e = eps(a, b, c);
                        if e != 0.0 {
                            s += 2.0 * e * omega[b * d + x].value() * omega[c * d + y].value();
                        }
                    }
                }
                out[(a * d + x) * d + y] = s;
            }
        }
    }
    Ok(out)
}

/// Field strength `F_WX = ∂_W G_X - ∂_X G_W + G_X G_W - G_W G_X` of a
/// matrix-valued one-form `G [X][y][z]`, at `[W][X][y][z]`.
pub fn field_strength(g: &[Jet], d: usize, m: usize) -> Result<Vec<f64>> {
    need_order(g, 1)?;
    let m2 = m * m;
    let gv = |x: usize, i: usize, j: usize| g[x * m2 + i * m + j].value();
    let mut out = vec![0.0; d * d * m2];
    for w in 0..d {
        for x in 0..d {
            for i in 0..m {
                for j in 0..m {
                    let mut s = g[x * m2 + i * m + j].d1(w) - g[w * m2 + i * m + j].d1(x);
                    for k in 0..m {
                        s += gv(x, i, k) * gv(w, k, j) - gv(w, i, k) * gv(x, k, j);
                    }
                    out[(w * d + x) * m2 + i * m + j] = s;
                }
            }
        }
    }
    Ok(out)
}

/// `R_WX,Y^Z = (E F_WX B)_Y^Z` for a frame field strength.
pub fn frame_to_riemann(f: &[f64], b: &[f64], e: &[f64], d: usize) -> Vec<f64> {
    let n2 = d * d;
    let mut out = vec![0.0; d * d * n2];
    let mut t = vec![0.0; n2];
    for wx in 0..n2 {
        let fw = &f[wx * n2..(wx + 1) * n2];
        t.iter_mut().for_each(|v| *v = 0.0);
        for y in 0..d {
            for p in 0..d {
                let c = e[y * d + p];
                if c == 0.0 {
                    continue;
                }
                for q in 0..d {
                    t[y * d + q] += c * fw[p * d + q];
                }
            }
        }
        for y in 0..d {
            for q in 0..d {
                let c = t[y * d + q];
                if c == 0.0 {
                    continue;
                }
                for z in 0..d {
                    out[wx * n2 + y * d + z] += c * b[q * d + z];
                }
            }
        }
    }
    out
}

/// Gl(r,ℍ) curvature `R_XYB^A` (`[X][Y][B][A]`, complex) from the
/// commutant part of the frame connection.
#[derive(Clone, Debug)]
pub struct GlCurvature {
    pub r: usize,
    pub values: Vec<C64>,
    /// Real frame field strength of `Ω`, `[X][Y][y][z]`.
    pub frame: Vec<f64>,
    /// `R^ℝ_XY = R_XYA^A`.
    pub r_real: Vec<f64>,
    /// Largest imaginary part of the trace.
    pub r_real_imag: f64,
}

pub fn gl_curvature(gl: &GlConnection) -> Result<GlCurvature> {
    let r = gl.r;
    let d = 4 * r;
    let n = 2 * r;
    let n2 = d * d;
    let f = field_strength(&gl.real, d, d)?;
    let u = intertwiner(r);
    let mut values = vec![C64::new(0.0, 0.0); d * d * n * n];
    let mut r_real = vec![0.0; d * d];
    let mut imag: f64 = 0.0;
    for xy in 0..n2 {
        let om = &f[xy * n2..(xy + 1) * n2];
        // U† Ω U restricted to the two diagonal i-blocks, averaged.
        let mut tr = C64::new(0.0, 0.0);
        for bb in 0..n {
            for aa in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..2 {
                    let (p, q) = (i * n + bb, i * n + aa);
                    for y in 0..d {
                        for z in 0..d {
                            let v = om[y * d + z];
                            if v != 0.0 {
                                s += u[y * d + p].conj() * v * u[z * d + q];
                            }
                        }
                    }
                }
                let v = s * 0.5;
                values[(xy * n + bb) * n + aa] = v;
                if aa == bb {
                    tr += v;
                }
            }
        }
        r_real[xy] = tr.re;
        imag = imag.max(tr.im.abs());
    }
    Ok(GlCurvature { r, values, frame: f, r_real, r_real_imag: imag })
}

/// Residual of `R_XYW^Z = -J⃗_W^Z·R⃗_XY + L_W^Z_A^B R_XYB^A`, with the
/// SU(2) term omitted when `rvec` is `None`.
pub fn curvature_relation(r: &[f64], j: &[f64], rvec: Option<&[f64]>, gl: &GlCurvature, f: &Vielbein) -> f64 {
    let d = f.dim();
    let n = 2 * f.r;
    let l = l_tensor(f);
    let mut m: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            let rg = &gl.values[(x * d + y) * n * n..(x * d + y + 1) * n * n];
            for w in 0..d {
                for z in 0..d {
                    let mut s = C64::new(0.0, 0.0);
                    let lw = &l[(w * d + z) * n * n..(w * d + z + 1) * n * n];
                    for a in 0..n {
                        for b in 0..n {
                            s += lw[a * n + b] * rg[b * n + a];
                        }
                    }
                    let mut pred = s.re;
                    if let Some(rv) = rvec {
                        for a in 0..3 {
                            pred -= j[(a * d + w) * d + z] * rv[(a * d + x) * d + y];
                        }
                    }
                    let e = (r[((x * d + y) * d + w) * d + z] - pred).abs().max(s.im.abs());
                    m = m.max(e);
                }
            }
        }
    }
    m
}

/// Contracts each leg of a rank-4 complex tensor with a `d×d` matrix:
/// `out[a][b][c][e] = Σ M1[a][x] M2[b][y] M3[c][w] M4[e][z] t[x][y][w][z]`.
fn transform4(t: &[C64], m: [&[C64]; 4], d: usize) -> Vec<C64> {
    let mut cur = t.to_vec();
    // Contract leading leg and rotate it to the back, four times.
    for mk in m {
        let rest = d * d * d;
        let mut next = vec![C64::new(0.0, 0.0); d * rest];
        for x in 0..d {
            for r in 0..rest {
                let v = cur[x * rest + r];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..d {
                    let c = mk[a * d + x];
                    if c != C64::new(0.0, 0.0) {
                        next[r * d + a] += c * v;
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

fn vielbein_mats(f: &Vielbein) -> (Vec<C64>, Vec<C64>, Vec<C64>, Vec<C64>) {
    let d = f.dim();
    let mut fm = vec![C64::new(0.0, 0.0); d * d];
    let mut ft = fm.clone();
    let mut fi = fm.clone();
    let mut fit = fm.clone();
    for x in 0..d {
        for k in 0..d {
            fm[x * d + k] = f.f(x, k);
            ft[k * d + x] = f.f(x, k);
            fi[k * d + x] = f.finv(k, x);
            fit[x * d + k] = f.finv(k, x);
        }
    }
    // F [X][iA], Fᵀ [iA][X], F⁻¹ [iA][X], F⁻ᵀ [X][iA]
    (fm, ft, fi, fit)
}

/// `W_ABC^D` of a curvature of the form
/// `R_XYW^Z = -½ f_X^{iA} ε_ij f_Y^{jB} L_W^Z_D^C W_ABC^D`.
#[derive(Clone, Debug)]
pub struct WTensor {
    pub r: usize,
    /// `[A][B][C][D]`.
    pub w: Vec<C64>,
    /// Reconstruction residual `max |R - R(W)|`.
    pub residual: f64,
    /// `max |W - sym_ABC W|`.
    pub symmetry_residual: f64,
    /// `W_ABC^C` at `[A][B]`.
    pub trace: Vec<C64>,
}

/// Reconstructs the real curvature from `W` (`[A][B][C][D]`) and returns the
/// largest imaginary part dropped.
pub fn curvature_from_w(w: &[C64], f: &Vielbein) -> (Vec<f64>, f64) {
    let d = f.dim();
    let n = 2 * f.r;
    let mut q = vec![C64::new(0.0, 0.0); d * d * d * d];
    for i in 0..2 {
        for j in 0..2 {
            let e = EPS2[i][j];
            if e == 0.0 {
                continue;
            }
            for mm in 0..2 {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for dd in 0..n {
                                let idx = (((i * n + a) * d + j * n + b) * d + mm * n + c) * d + mm * n + dd;
                                q[idx] = w[((a * n + b) * n + c) * n + dd] * (-0.5 * e);
                            }
                        }
                    }
                }
            }
        }
    }
    let (fm, _, _, fit) = vielbein_mats(f);
    let r = transform4(&q, [&fm, &fm, &fm, &fit], d);
    let imag = r.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    (r.iter().map(|z| z.re).collect(), imag)
}

/// Extracts `W_ABC^D` by contraction with the inverse vielbein.
pub fn extract_w(r: &[f64], f: &Vielbein) -> WTensor {
    let d = f.dim();
    let n = 2 * f.r;
    let rc: Vec<C64> = r.iter().map(|&v| C64::new(v, 0.0)).collect();
    let (_, ft, fi, _) = vielbein_mats(f);
    let s = transform4(&rc, [&fi, &fi, &fi, &ft], d);
    let mut w = vec![C64::new(0.0, 0.0); n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for dd in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..2 {
                        for l in 0..2 {
                            let e = EPS2[k][l];
                            if e == 0.0 {
                                continue;
                            }
                            for m in 0..2 {
                                acc += s[(((k * n + a) * d + l * n + b) * d + m * n + c) * d + m * n + dd] * e;
                            }
                        }
                    }
                    w[((a * n + b) * n + c) * n + dd] = acc * -0.5;
                }
            }
        }
    }
    let (rec, imag) = curvature_from_w(&w, f);
    let residual = rec.iter().zip(r).fold(imag, |m, (x, y)| m.max((x - y).abs()));
    let sw = symmetrize(&w, n);
    let symmetry_residual = w.iter().zip(&sw).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let trace = trace_w(&w, n);
    WTensor { r: f.r, w, residual, symmetry_residual, trace }
}

fn symmetrize(w: &[C64], n: usize) -> Vec<C64> {
    let at = |a: usize, b: usize, c: usize, d: usize| w[((a * n + b) * n + c) * n + d];
    let mut out = vec![C64::new(0.0, 0.0); w.len()];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let s = at(a, b, c, d) + at(a, c, b, d) + at(b, a, c, d) + at(b, c, a, d) + at(c, a, b, d) + at(c, b, a, d);
                    out[((a * n + b) * n + c) * n + d] = s / 6.0;
                }
            }
        }
    }
    out
}

fn trace_w(w: &[C64], n: usize) -> Vec<C64> {
    let mut t = vec![C64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                t[a * n + b] += w[((a * n + b) * n + c) * n + c];
            }
        }
    }
    t
}

/// Symmetric traceless part `𝒲 = sym W - (3/(2r+2)) sym(δ_A^D t_BC)` with
/// `t_BC = (sym W)_ABC^A`.
pub fn weyl_part(w: &[C64], r: usize) -> Vec<C64> {
    let n = 2 * r;
    let sw = symmetrize(w, n);
    let mut t = vec![C64::new(0.0, 0.0); n * n];
    for b in 0..n {
        for c in 0..n {
            for a in 0..n {
                t[b * n + c] += sw[((a * n + b) * n + c) * n + a];
            }
        }
    }
    let alpha = 3.0 / (n as f64 + 2.0);
    let mut out = sw;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let v = &mut out[((a * n + b) * n + c) * n..((a * n + b) * n + c + 1) * n];
                // sym(δ_A^D t_BC) = (δ_A^D t_BC + δ_B^D t_AC + δ_C^D t_AB)/3
                v[a] -= t[b * n + c] * (alpha / 3.0);
                v[b] -= t[a * n + c] * (alpha / 3.0);
                v[c] -= t[a * n + b] * (alpha / 3.0);
            }
        }
    }
    out
}

/// Ricci/Weyl split of a curvature with the residuals that certify it.
#[derive(Clone, Debug)]
pub struct RicciWeylSplit {
    pub r_weyl: Vec<f64>,
    pub r_ricci: Vec<f64>,
    /// `max |Ric(R^W)|`.
    pub weyl_ricci: f64,
    pub bianchi_weyl: f64,
    pub bianchi_ricci: f64,
    /// `max |𝒲|`.
    pub weyl_norm: f64,
    /// Largest imaginary part in the reconstruction of `R^W`.
    pub imag: f64,
}

pub fn ricci_weyl_split(r: &[f64], f: &Vielbein) -> RicciWeylSplit {
    let d = f.dim();
    let w = extract_w(r, f);
    let ww = weyl_part(&w.w, f.r);
    let (rw, imag) = curvature_from_w(&ww, f);
    let rr: Vec<f64> = r.iter().zip(&rw).map(|(a, b)| a - b).collect();
    let ric = ricci(&rw, d);
    RicciWeylSplit {
        weyl_ricci: ric.iter().fold(0.0, |m, x| m.max(x.abs())),
        bianchi_weyl: bianchi_residual(&rw, d),
        bianchi_ricci: bianchi_residual(&rr, d),
        weyl_norm: ww.iter().fold(0.0, |m, z| m.max(z.norm())),
        imag,
        r_weyl: rw,
        r_ricci: rr,
    }
}

/// Residuals of `Ric = ν(r+2) g` and `R⃗_XY = ½ν J⃗_X^Z g_ZY`.
pub fn einstein_check(g: &[f64], ric: &[f64], rvec: Option<&[f64]>, j: &[f64], nu: f64, d: usize) -> (f64, f64) {
    let r = (d / 4) as f64;
    let mut e1: f64 = 0.0;
    for k in 0..d * d {
        e1 = e1.max((ric[k] - nu * (r + 2.0) * g[k]).abs());
    }
    let mut e2: f64 = 0.0;
    if let Some(rv) = rvec {
        for a in 0..3 {
            for x in 0..d {
                for y in 0..d {
                    let jl: f64 = (0..d).map(|z| j[(a * d + x) * d + z] * g[z * d + y]).sum();
                    e2 = e2.max((rv[(a * d + x) * d + y] - 0.5 * nu * jl).abs());
                }
            }
        }
    }
    (e1, e2)
}

/// `max_a max |F(J^aX, J^aY) - F(X, Y)|` for a two-form given as values.
pub fn hermitian_two_form_residual(f: &[f64], j: &[f64], d: usize) -> f64 {
    crate::qstruct::hermiticity_residual_vals(f, j, d)
}
