//! Torsionless affine connections with their SU(2) and Gl(r,ℍ) partners:
//! Obata and Oproiu solves, Levi-Civita, ξ-transformations, covariant
//! derivatives and vielbein covariant constancy.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::field::{eps, Rank};
use crate::jet::{min_order, values, Jet};
use crate::linalg::{inverse, inverse_jet, lstsq_min_norm, NormalFactor};
use crate::qstruct::{extract_omega_op_jets, frame_basis_jets, intertwiner, max_abs, EPS2};
use crate::quat::flat_j;

/// Affine connection `Γ_XY^Z` (stored `[X][Y][Z]`, symmetric in `X, Y`)
/// with optional SU(2) connection `ω^a_X` (`[a][X]`) and Gl(r,ℍ) part.
/// Components are jets of order ≤ 1 at one point.
#[derive(Clone, Debug)]
pub struct ConnectionBundle {
    pub dim: usize,
    pub gamma: Vec<Jet>,
    pub omega: Option<Vec<Jet>>,
    pub omega_gl: Option<GlConnection>,
}

impl ConnectionBundle {
    pub fn new(dim: usize, gamma: Vec<Jet>, omega: Option<Vec<Jet>>) -> Self {
        ConnectionBundle {
            dim,
            gamma,
            omega,
            omega_gl: None,
        }
    }

    pub fn order(&self) -> u8 {
        let mut o = min_order(&self.gamma);
        if let Some(w) = &self.omega {
            o = o.min(min_order(w));
        }
        o
    }

    pub fn gamma_values(&self) -> Vec<f64> {
        values(&self.gamma)
    }

    pub fn omega_values(&self) -> Option<Vec<f64>> {
        self.omega.as_deref().map(values)
    }

    /// Largest violation of `Γ_XY^Z = Γ_YX^Z`.
    pub fn torsion(&self) -> f64 {
        let d = self.dim;
        let mut t: f64 = 0.0;
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    let a = self.gamma[(x * d + y) * d + z].value();
                    let b = self.gamma[(y * d + x) * d + z].value();
                    t = t.max((a - b).abs());
                }
            }
        }
        t
    }
}

/// Gl(r,ℍ) connection read off a vielbein.
#[derive(Clone, Debug)]
pub struct GlConnection {
    pub r: usize,
    /// Commutant-valued frame connection `Ω_X` as real `d×d` matrices,
    /// `[X][y][z]`.
    pub real: Vec<Jet>,
    /// `ω_{XB}^A` at `[X][B][A]`.
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Largest mismatch between the sp(1) part of the frame connection and
    /// `-ω⃗·J_flat` (covariant constancy of the vielbein).
    pub residual: f64,
    /// Largest deviation of `U⁻¹ Ω U` from the form `1 ⊗ ω_gl`.
    pub doublet_residual: f64,
    /// Largest violation of `(ω_{XB}^A)* = ρ ω ρ⁻¹`.
    pub reality_residual: f64,
}

/// `out[i][k] = Σ_j a[i][j] b[j][k]` for constant `a`, jet `b` (`n×n`).
fn cmul_left(a: &[f64], b: &[Jet], n: usize) -> Vec<Jet> {
    let (dim, o) = (b[0].dim(), min_order(b));
    let mut out = vec![Jet::zero(dim, o); n * n];
    for i in 0..n {
        for j in 0..n {
            let c = a[i * n + j];
            if c == 0.0 {
                continue;
            }
            for k in 0..n {
                out[i * n + k].add_scaled(c, &b[j * n + k]);
            }
        }
    }
    out
}

/// `out[i][k] = Σ_j a[i][j] b[j][k]` for jet `a`, constant `b`.
fn cmul_right(a: &[Jet], b: &[f64], n: usize) -> Vec<Jet> {
    let (dim, o) = (a[0].dim(), min_order(a));
    let mut out = vec![Jet::zero(dim, o); n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let c = b[j * n + k];
                if c != 0.0 {
                    out[i * n + k].add_scaled(c, &a[i * n + j]);
                }
            }
        }
    }
    out
}

fn pair(x: usize, y: usize, d: usize) -> usize {
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    a * d - a * (a + 1) / 2 + b
}

/// The operator `Γ ↦ -Γ_XY^W J^a_W^Z + Γ_XW^Z J^a_Y^W` applied to a full
/// `Γ` (`[X][Y][Z]`), giving `[a][X][Y][Z]`.
fn apply_m(j: &[f64], g: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; 3 * d * d * d];
    for a in 0..3 {
        let ja = &j[a * d * d..(a + 1) * d * d];
        for x in 0..d {
            let gx = &g[x * d * d..(x + 1) * d * d];
            for y in 0..d {
                for w in 0..d {
                    let gyw = gx[y * d + w];
                    let jyw = ja[y * d + w];
                    let o = ((a * d + x) * d + y) * d;
                    for z in 0..d {
                        out[o + z] += -gyw * ja[w * d + z] + gx[w * d + z] * jyw;
                    }
                }
            }
        }
    }
    out
}

/// Adjoint of [`apply_m`] followed by the fold onto symmetric unknowns.
fn apply_mt(j: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    let mut full = vec![0.0; d * d * d];
    for a in 0..3 {
        let ja = &j[a * d * d..(a + 1) * d * d];
        for x in 0..d {
            for y in 0..d {
                let o = ((a * d + x) * d + y) * d;
                for z in 0..d {
                    let vv = v[o + z];
                    if vv == 0.0 {
                        continue;
                    }
                    for w in 0..d {
                        // -v_{axyz} J_w^z into G[x][y][w]; v_{axyz} J_y^w into G[x][w][z]
                        full[(x * d + y) * d + w] -= vv * ja[w * d + z];
                        full[(x * d + w) * d + z] += vv * ja[y * d + w];
                    }
                }
            }
        }
    }
    let np = d * (d + 1) / 2;
    let mut out = vec![0.0; np * d];
    for x in 0..d {
        for y in 0..d {
            let p = pair(x, y, d);
            for z in 0..d {
                out[p * d + z] += full[(x * d + y) * d + z];
            }
        }
    }
    out
}

fn expand_sym(s: &[f64], d: usize) -> Vec<f64> {
    let mut g = vec![0.0; d * d * d];
    for x in 0..d {
        for y in 0..d {
            let p = pair(x, y, d);
            for z in 0..d {
                g[(x * d + y) * d + z] = s[p * d + z];
            }
        }
    }
    g
}

/// Normal equations of the torsionless `J_flat`-preserving system in one
/// dimension, factored once and shared.
struct FlatSystem {
    j: Vec<f64>,
    factor: NormalFactor,
}

fn flat_system(d: usize) -> Result<Arc<FlatSystem>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FlatSystem>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(s) = cache.lock().expect("cache lock").get(&d) {
        return Ok(s.clone());
    }
    let j = flat_j(d / 4);
    let np = d * (d + 1) / 2;
    let mut columns = Vec::with_capacity(np * d);
    for x in 0..d {
        for y in x..d {
            for z in 0..d {
                let mut g = vec![0.0; d * d * d];
                g[(x * d + y) * d + z] = 1.0;
                g[(y * d + x) * d + z] = 1.0;
                let col: Vec<(usize, f64)> = apply_m(&j, &g, d)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| *v != 0.0)
                    .collect();
                columns.push(col);
            }
        }
    }
    // Column order matches `pair(x, y) * d + z`.
    let factor = NormalFactor::new(&columns, 3 * d * d * d)?;
    let s = Arc::new(FlatSystem { j, factor });
    cache.lock().expect("cache lock").insert(d, s.clone());
    Ok(s)
}

/// Result of a torsionless connection solve.
#[derive(Clone, Debug)]
pub struct GammaSolve {
    pub gamma: Vec<Jet>,
    /// Max-abs residual of `∇J⃗ + 2ω⃗×J⃗` in the original coordinates.
    pub residual: f64,
    /// Block sizes of the factored normal matrix (full rank is checked when
    /// it is built).
    pub unknowns: usize,
}

/// Solves `∇_X J⃗ + 2 ω⃗_X × J⃗ = 0` (or `∇J⃗ = 0` without `ω`) for a
/// symmetric `Γ` by least squares.
///
/// The solve runs in the pointwise quaternionic frame at `p`, where `J` is
/// the standard constant structure and the normal matrix is shared. `J`
/// needs order ≥ 1; with order ≥ 2 (and `ω` of order ≥ 1) the first
/// derivatives of `Γ` are returned as well.
pub fn solve_torsionless(j: &[Jet], omega: Option<&[Jet]>, d: usize) -> Result<GammaSolve> {
    let oj = min_order(j);
    if oj < 1 {
        return Err(Error::Precondition("structure jets need order ≥ 1".into()));
    }
    let mut op = (oj - 1).min(1);
    if let Some(w) = omega {
        op = op.min(min_order(w));
    }
    let dim = j[0].dim();
    let sys = flat_system(d)?;
    let jv = values(j);
    let jc: Vec<Jet> = jv.iter().map(|&v| Jet::constant(v, dim, 0)).collect();
    let bv = values(&frame_basis_jets(&jc, None, d)?);
    let bi = inverse(&DMatrix::from_row_slice(d, d, &bv))?;
    let biv: Vec<f64> = (0..d * d).map(|k| bi[(k / d, k % d)]).collect();
    let n2 = d * d;
    // J' = B J B⁻¹
    let mut jp = Vec::with_capacity(3 * n2);
    for a in 0..3 {
        let t = cmul_left(&bv, &j[a * n2..(a + 1) * n2], d);
        jp.extend(cmul_right(&t, &biv, d));
    }
    // ∂'_x = B[x,X] ∂_X
    let mut b = Vec::with_capacity(3 * d * n2);
    let wp: Option<Vec<Jet>> = omega.map(|w| {
        let mut out = vec![Jet::zero(dim, op); 3 * d];
        for a in 0..3 {
            for x in 0..d {
                for xx in 0..d {
                    out[a * d + x].add_scaled(bv[x * d + xx], &w[a * d + xx]);
                }
            }
        }
        out
    });
    let djp: Vec<Vec<Jet>> = jp
        .iter()
        .map(|c| (0..dim).map(|w| c.partial(w).truncate(op)).collect())
        .collect();
    for a in 0..3 {
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    let c = (a * d + y) * d + z;
                    let mut s = Jet::zero(dim, op);
                    for xx in 0..d {
                        s.add_scaled(-bv[x * d + xx], &djp[c][xx]);
                    }
                    if let Some(w) = &wp {
                        for bb in 0..3 {
                            for cc in 0..3 {
                                let e = eps(a, bb, cc);
                                if e != 0.0 {
                                    s.add_mul_scaled(-2.0 * e, &w[bb * d + x], &jp[(cc * d + y) * d + z]);
                                }
                            }
                        }
                    }
                    b.push(s);
                }
            }
        }
    }
    let b0 = values(&b);
    let g0s = sys.factor.solve(&apply_mt(&sys.j, &b0, d));
    let g0 = expand_sym(&g0s, d);
    let mg = apply_m(&sys.j, &g0, d);
    let r0: Vec<f64> = b0.iter().zip(&mg).map(|(x, y)| x - y).collect();
    let mut dg: Vec<Vec<f64>> = Vec::new();
    if op >= 1 {
        for w in 0..dim {
            let dj: Vec<f64> = jp.iter().map(|c| c.d1(w)).collect();
            let db: Vec<f64> = b.iter().map(|c| c.d1(w)).collect();
            let mdj = apply_m(&dj, &g0, d);
            let t: Vec<f64> = db.iter().zip(&mdj).map(|(x, y)| x - y).collect();
            let mut rhs = apply_mt(&sys.j, &t, d);
            for (x, y) in rhs.iter_mut().zip(apply_mt(&dj, &r0, d)) {
                *x += y;
            }
            dg.push(expand_sym(&sys.factor.solve(&rhs), d));
        }
    }
    let gp: Vec<Jet> = (0..d * n2)
        .map(|k| {
            if op >= 1 {
                let d1: Vec<f64> = (0..dim).map(|w| dg[w][k]).collect();
                Jet::from_parts(g0[k], &d1, None, None)
            } else {
                Jet::constant(g0[k], dim, 0)
            }
        })
        .collect();
    // Γ_XY^Z = B⁻¹[X,x] B⁻¹[Y,y] Γ'_xy^z B[z,Z]
    let mut t1 = vec![Jet::zero(dim, op); d * n2];
    for x in 0..d {
        // (Γ'_x)[y][z] → B⁻¹ Γ'_x B  over (y, z)
        let gx = &gp[x * n2..(x + 1) * n2];
        let m = cmul_right(&cmul_left(&biv, gx, d), &bv, d);
        for k in 0..n2 {
            t1[x * n2 + k] = m[k].clone();
        }
    }
    let mut gamma = vec![Jet::zero(dim, op); d * n2];
    for xx in 0..d {
        for x in 0..d {
            let c = biv[xx * d + x];
            if c == 0.0 {
                continue;
            }
            for k in 0..n2 {
                gamma[xx * n2 + k].add_scaled(c, &t1[x * n2 + k]);
            }
        }
    }
    let residual = max_abs(&values(&quat_nabla_jets(
        &gamma.iter().map(|g| g.truncate(0)).collect::<Vec<_>>(),
        omega.map(|w| w.iter().map(|g| g.truncate(0)).collect::<Vec<_>>()).as_deref(),
        &j.iter().map(|g| g.truncate(1)).collect::<Vec<_>>(),
        d,
    )));
    Ok(GammaSolve {
        gamma,
        residual,
        unknowns: sys.factor.cols,
    })
}

/// `(∇_X J^a)_Y^Z + 2 (ω⃗_X × J⃗)^a_Y^Z` at `[a][X][Y][Z]`.
pub fn quat_nabla_jets(gamma: &[Jet], omega: Option<&[Jet]>, j: &[Jet], d: usize) -> Vec<Jet> {
    let n2 = d * d;
    let mut out = Vec::with_capacity(3 * d * n2);
    for a in 0..3 {
        let nj = covariant_derivative_jets(gamma, &j[a * n2..(a + 1) * n2], Rank::ENDO, d)
            .expect("endomorphism rank is supported");
        out.extend(nj);
    }
    if let Some(w) = omega {
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let e = eps(a, b, c);
                    if e == 0.0 {
                        continue;
                    }
                    for x in 0..d {
                        for yz in 0..n2 {
                            let k = (a * d + x) * n2 + yz;
                            let (w0, j0) = (&w[b * d + x], &j[c * n2 + yz]);
                            out[k].add_mul_scaled(2.0 * e, w0, j0);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Covariant derivative `∇_X T` on jets, stored `[X][components]`. The
/// result has order `min(order(T) - 1, order(Γ))`.
pub fn covariant_derivative_jets(gamma: &[Jet], t: &[Jet], rank: Rank, d: usize) -> Result<Vec<Jet>> {
    let dim = t[0].dim();
    let o = (min_order(t) - 1).min(min_order(gamma));
    let tt: Vec<Jet> = t.iter().map(|c| c.truncate(o)).collect();
    let g = |x: usize, y: usize, z: usize| &gamma[(x * d + y) * d + z];
    let n = t.len();
    let mut out = Vec::with_capacity(d * n);
    for x in 0..d {
        match (rank.up, rank.down) {
            (1, 0) => {
                for y in 0..d {
                    let mut s = t[y].partial(x).truncate(o);
                    for z in 0..d {
                        s.add_mul(g(x, z, y), &tt[z]);
                    }
                    out.push(s);
                }
            }
            (0, 1) => {
                for y in 0..d {
                    let mut s = t[y].partial(x).truncate(o);
                    for z in 0..d {
                        s.add_mul_scaled(-1.0, g(x, y, z), &tt[z]);
                    }
                    out.push(s);
                }
            }
            (0, 0) => out.push(t[0].partial(x).truncate(o)),
            (1, 1) => {
                for y in 0..d {
                    for z in 0..d {
                        let mut s = t[y * d + z].partial(x).truncate(o);
                        for w in 0..d {
                            s.add_mul_scaled(-1.0, g(x, y, w), &tt[w * d + z]);
                            s.add_mul(g(x, w, z), &tt[y * d + w]);
                        }
                        out.push(s);
                    }
                }
            }
            (0, 2) => {
                for y in 0..d {
                    for z in 0..d {
                        let mut s = t[y * d + z].partial(x).truncate(o);
                        for w in 0..d {
                            s.add_mul_scaled(-1.0, g(x, y, w), &tt[w * d + z]);
                            s.add_mul_scaled(-1.0, g(x, z, w), &tt[y * d + w]);
                        }
                        out.push(s);
                    }
                }
            }
            (u, dn) => return Err(Error::UnsupportedRank(u, dn)),
        }
    }
    let _ = dim;
    Ok(out)
}

/// Obata connection of a hypercomplex structure from jets of `J`.
pub fn obata_jets(j: &[Jet], d: usize) -> Result<GammaSolve> {
    solve_torsionless(j, None, d)
}

/// Oproiu connection: `ω⃗ = ω⃗^Op` from the Nijenhuis tensor, then the
/// torsionless solve of `∇J⃗ + 2ω⃗×J⃗ = 0`. Returns the bundle, the
/// `ω⃗^Op` fit residual and the solve residual.
pub fn oproiu_jets(j: &[Jet], d: usize) -> Result<(ConnectionBundle, f64, f64)> {
    let w = extract_omega_op_jets(j, d)?;
    let s = solve_torsionless(j, Some(&w.omega), d)?;
    Ok((ConnectionBundle::new(d, s.gamma, Some(w.omega)), w.residual, s.residual))
}

/// Christoffel symbols `½ g^{ZW}(∂_X g_YW + ∂_Y g_XW - ∂_W g_XY)`.
pub fn levi_civita_jets(g: &[Jet], d: usize) -> Result<Vec<Jet>> {
    let o = min_order(g);
    if o < 1 {
        return Err(Error::Precondition("metric jets need order ≥ 1".into()));
    }
    let dim = g[0].dim();
    let gt: Vec<Jet> = g.iter().map(|c| c.truncate(o - 1)).collect();
    let gi = inverse_jet(&gt, d)?;
    let dg: Vec<Vec<Jet>> = g.iter().map(|c| (0..d).map(|x| c.partial(x)).collect()).collect();
    let mut low = Vec::with_capacity(d * d * d);
    for x in 0..d {
        for y in 0..d {
            for w in 0..d {
                let mut s = dg[y * d + w][x].clone();
                s += &dg[x * d + w][y];
                s -= &dg[x * d + y][w];
                s *= 0.5;
                low.push(s);
            }
        }
    }
    let mut out = vec![Jet::zero(dim, o - 1); d * d * d];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let s = &mut out[(x * d + y) * d + z];
                for w in 0..d {
                    s.add_mul(&gi[z * d + w], &low[(x * d + y) * d + w]);
                }
            }
        }
    }
    Ok(out)
}

/// `S^ξ_XY^Z = ξ_X δ_Y^Z + ξ_Y δ_X^Z - (J⃗_X^W ξ_W)·J⃗_Y^Z - (J⃗_Y^W ξ_W)·J⃗_X^Z`.
pub fn s_xi_jets(xi: &[Jet], j: &[Jet], d: usize) -> Vec<Jet> {
    let dim = xi[0].dim();
    let o = min_order(xi).min(min_order(j));
    let jxi = j_star(j, xi, d);
    let mut out = vec![Jet::zero(dim, o); d * d * d];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let s = &mut out[(x * d + y) * d + z];
                if y == z {
                    s.add_scaled(1.0, &xi[x]);
                }
                if x == z {
                    s.add_scaled(1.0, &xi[y]);
                }
                for a in 0..3 {
                    s.add_mul_scaled(-1.0, &jxi[a * d + x], &j[(a * d + y) * d + z]);
                    s.add_mul_scaled(-1.0, &jxi[a * d + y], &j[(a * d + x) * d + z]);
                }
            }
        }
    }
    out
}

/// `(J^a*ξ)_X = J^a_X^Y ξ_Y`, stored `[a][X]`.
pub fn j_star(j: &[Jet], xi: &[Jet], d: usize) -> Vec<Jet> {
    let dim = xi[0].dim();
    let o = min_order(xi).min(min_order(j));
    let mut out = vec![Jet::zero(dim, o); 3 * d];
    for a in 0..3 {
        for x in 0..d {
            for y in 0..d {
                out[a * d + x].add_mul(&j[(a * d + x) * d + y], &xi[y]);
            }
        }
    }
    out
}

/// ξ-transformation `Γ' = Γ + S^ξ`, `ω⃗' = ω⃗ + J⃗*ξ`. Returns the new bundle
/// with its re-certified `∇J⃗ + 2ω⃗×J⃗` residual (needs `J` of order ≥ 1).
pub fn xi_transform(c: &ConnectionBundle, xi: &[Jet], j: &[Jet], tol: f64) -> Result<(ConnectionBundle, f64)> {
    let d = c.dim;
    let dim = xi[0].dim();
    let o = c.order().min(min_order(xi));
    let s = s_xi_jets(xi, j, d);
    let gamma: Vec<Jet> = c
        .gamma
        .iter()
        .zip(&s)
        .map(|(g, s)| (g + s).truncate(o))
        .collect();
    let js = j_star(j, xi, d);
    let omega: Vec<Jet> = match &c.omega {
        Some(w) => w.iter().zip(&js).map(|(a, b)| (a + b).truncate(o)).collect(),
        None => js.iter().map(|b| b.truncate(o)).collect(),
    };
    let _ = dim;
    let out = ConnectionBundle::new(d, gamma, Some(omega));
    let jt: Vec<Jet> = j.iter().map(|g| g.truncate(1)).collect();
    let g0: Vec<Jet> = out.gamma.iter().map(|g| g.truncate(0)).collect();
    let w0: Vec<Jet> = out.omega.as_ref().unwrap().iter().map(|g| g.truncate(0)).collect();
    let r = max_abs(&values(&quat_nabla_jets(&g0, Some(&w0), &jt, d)));
    if r > tol {
        return Err(Error::Residual {
            what: "ξ-transformed connection".into(),
            residual: r,
            tol,
        });
    }
    Ok((out, r))
}

/// Brute-force assembly of the Oproiu connection from its formula: the
/// symmetric part of the minimal-torsion `J`-preserving connection minus
/// `½(J⃗_X^Z·ω⃗_Y + J⃗_Y^Z·ω⃗_X)`. Values only; `J` of order ≥ 1.
pub fn oproiu_formula(j: &[Jet], omega: &[f64], d: usize) -> Result<Vec<f64>> {
    let n2 = d * d;
    let jv = values(j);
    // [J^a, G] = -∂_x J^a, one system per derivative direction x.
    let mut k = DMatrix::<f64>::zeros(3 * n2, n2);
    for a in 0..3 {
        let ja = &jv[a * n2..(a + 1) * n2];
        for y in 0..d {
            for z in 0..d {
                let row = a * n2 + y * d + z;
                for w in 0..d {
                    // (J G - G J)[y][z] = J[y][w] G[w][z] - G[y][w] J[w][z]
                    k[(row, w * d + z)] += ja[y * d + w];
                    k[(row, y * d + w)] -= ja[w * d + z];
                }
            }
        }
    }
    // The commutator map has the commutant as kernel, so use the SVD.
    let svd = crate::linalg::svd(&k)?;
    let smax = svd.s.iter().cloned().fold(0.0, f64::max);
    let tol = smax * 1e-10;
    let mut null: Vec<Vec<f64>> = Vec::new();
    let mut kp = DMatrix::<f64>::zeros(n2, 3 * n2);
    for (i, &s) in svd.s.iter().enumerate() {
        if s > tol {
            for r in 0..n2 {
                for c in 0..3 * n2 {
                    kp[(r, c)] += svd.v[(r, i)] * svd.u[(c, i)] / s;
                }
            }
        } else {
            null.push((0..n2).map(|r| svd.v[(r, i)]).collect());
        }
    }
    let mut gp = vec![0.0; d * n2];
    for x in 0..d {
        let rhs: Vec<f64> = (0..3 * n2)
            .map(|row| {
                let a = row / n2;
                let yz = row % n2;
                -j[a * n2 + yz].d1(x)
            })
            .collect();
        for r in 0..n2 {
            let mut s = 0.0;
            for c in 0..3 * n2 {
                s += kp[(r, c)] * rhs[c];
            }
            gp[x * n2 + r] = s;
        }
    }
    // Minimize torsion over G_x → G_x + Σ c_{x,n} null_n.
    let nn = null.len();
    let mut tm = DMatrix::<f64>::zeros(d * n2, d * nn);
    for x in 0..d {
        for (ni, v) in null.iter().enumerate() {
            for y in 0..d {
                for z in 0..d {
                    let val = v[y * d + z];
                    tm[((x * d + y) * d + z, x * nn + ni)] += val;
                    tm[((y * d + x) * d + z, x * nn + ni)] -= val;
                }
            }
        }
    }
    let mut t0 = vec![0.0; d * n2];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                t0[(x * d + y) * d + z] = -(gp[(x * d + y) * d + z] - gp[(y * d + x) * d + z]);
            }
        }
    }
    let c = lstsq_min_norm(&tm, &t0)?;
    let mut gh = gp.clone();
    for x in 0..d {
        for (ni, v) in null.iter().enumerate() {
            let cc = c[x * nn + ni];
            for yz in 0..n2 {
                gh[x * n2 + yz] += cc * v[yz];
            }
        }
    }
    let mut out = vec![0.0; d * n2];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let mut s = 0.5 * (gh[(x * d + y) * d + z] + gh[(y * d + x) * d + z]);
                for a in 0..3 {
                    s -= 0.5 * jv[(a * d + x) * d + z] * omega[a * d + y];
                    s -= 0.5 * jv[(a * d + y) * d + z] * omega[a * d + x];
                }
                out[(x * d + y) * d + z] = s;
            }
        }
    }
    Ok(out)
}

/// Projection onto the commutant of `J_flat`: `¼(X - Σ_a J^a X J^a)`.
pub fn commutant_part(x: &[Jet], jf: &[f64], d: usize) -> Vec<Jet> {
    let n2 = d * d;
    let mut out: Vec<Jet> = x.iter().map(|c| c.scale(0.25)).collect();
    for a in 0..3 {
        let ja = &jf[a * n2..(a + 1) * n2];
        let t = cmul_right(&cmul_left(ja, x, d), ja, d);
        for (o, t) in out.iter_mut().zip(&t) {
            o.add_scaled(-0.25, t);
        }
    }
    out
}

/// Frame connection `G_X = B(Γ_X E - ∂_X E)` of a smooth frame basis `B`
/// with inverse `E`, at `[X][y][z]`; the result has order
/// `min(order Γ, order E - 1, order B)`.
pub fn frame_connection(gamma: &[Jet], b: &[Jet], e: &[Jet], d: usize) -> Vec<Jet> {
    let dim = b[0].dim();
    let o = min_order(gamma).min(min_order(e) - 1).min(min_order(b));
    let n2 = d * d;
    let mut out = Vec::with_capacity(d * n2);
    for x in 0..d {
        // T[y][c] = Σ_z Γ_xy^z E[z][c] - ∂_x E[y][c]
        let mut t = vec![Jet::zero(dim, o); n2];
        for y in 0..d {
            for c in 0..d {
                let s = &mut t[y * d + c];
                s.add_scaled(-1.0, &e[y * d + c].partial(x));
                for z in 0..d {
                    s.add_mul(&gamma[(x * d + y) * d + z], &e[z * d + c]);
                }
            }
        }
        for r in 0..d {
            for c in 0..d {
                let mut s = Jet::zero(dim, o);
                for y in 0..d {
                    s.add_mul(&b[r * d + y], &t[y * d + c]);
                }
                out.push(s);
            }
        }
    }
    out
}

/// Splits the frame connection `G_X = -ω⃗_X·J_flat + Ω_X` into its sp(1)
/// and commutant parts. Returns `(ω [a][X], Ω [X][y][z], max residual of
/// the sp(1) part not of the form -ω·J_flat)`.
pub fn split_frame_connection(g: &[Jet], d: usize) -> (Vec<Jet>, Vec<Jet>, f64) {
    let jf = flat_j(d / 4);
    let n2 = d * d;
    let dim = g[0].dim();
    let o = min_order(g);
    let mut omega = vec![Jet::zero(dim, o); 3 * d];
    let mut big = Vec::with_capacity(d * n2);
    let mut res: f64 = 0.0;
    for x in 0..d {
        let gx = &g[x * n2..(x + 1) * n2];
        let c = commutant_part(gx, &jf, d);
        let rest: Vec<Jet> = gx.iter().zip(&c).map(|(a, b)| a - b).collect();
        for a in 0..3 {
            // ω^a = tr(J^a rest) / d
            let s = &mut omega[a * d + x];
            for y in 0..d {
                for z in 0..d {
                    let v = jf[a * n2 + y * d + z];
                    if v != 0.0 {
                        s.add_scaled(v / d as f64, &rest[z * d + y]);
                    }
                }
            }
        }
        for y in 0..d {
            for z in 0..d {
                let mut v = rest[y * d + z].value();
                for a in 0..3 {
                    v += omega[a * d + x].value() * jf[a * n2 + y * d + z];
                }
                res = res.max(v.abs());
            }
        }
        big.extend(c);
    }
    (omega, big, res)
}

/// Gl(r,ℍ) connection from a smooth frame basis and a connection bundle:
/// solves the vielbein covariant-constancy equation for `ω_{XB}^A`.
pub fn gl_connection(c: &ConnectionBundle, b: &[Jet], e: &[Jet]) -> Result<GlConnection> {
    let d = c.dim;
    let r = d / 4;
    let g = frame_connection(&c.gamma, b, e, d);
    let (w, big, split_res) = split_frame_connection(&g, d);
    let residual = match &c.omega {
        Some(om) => {
            let mut m = split_res;
            for (a, bb) in w.iter().zip(om) {
                m = m.max((a.value() - bb.value()).abs());
            }
            m
        }
        None => split_res.max(max_abs(&values(&w))),
    };
    let u = intertwiner(r);
    let n = 2 * r;
    let n2 = d * d;
    let mut re = vec![0.0; d * n * n];
    let mut im = vec![0.0; d * n * n];
    let mut dres: f64 = 0.0;
    for x in 0..d {
        let om: Vec<f64> = values(&big[x * n2..(x + 1) * n2]);
        // U⁻¹ Ω U with U⁻¹ = U†
        let mut m = vec![C64::new(0.0, 0.0); n2];
        for p in 0..d {
            for q in 0..d {
                let mut s = C64::new(0.0, 0.0);
                for y in 0..d {
                    for z in 0..d {
                        let v = om[y * d + z];
                        if v != 0.0 {
                            s += u[y * d + p].conj() * v * u[z * d + q];
                        }
                    }
                }
                m[p * d + q] = s;
            }
        }
        for bb in 0..n {
            for aa in 0..n {
                let v = (m[bb * d + aa] + m[(n + bb) * d + n + aa]) * 0.5;
                re[(x * n + bb) * n + aa] = v.re;
                im[(x * n + bb) * n + aa] = v.im;
                for i in 0..2 {
                    for jj in 0..2 {
                        let e = if i == jj { v } else { C64::new(0.0, 0.0) };
                        dres = dres.max((m[(i * n + bb) * d + jj * n + aa] - e).norm());
                    }
                }
            }
        }
    }
    // Reality: conj(ω) = ρ ω ρ⁻¹ with ρ = 1 ⊗ ε (ρ⁻¹ = ρᵀ).
    let mut rho = vec![0.0; n * n];
    for p in 0..r {
        for s in 0..2 {
            for t in 0..2 {
                rho[(2 * p + s) * n + 2 * p + t] = EPS2[s][t];
            }
        }
    }
    let mut rres: f64 = 0.0;
    for x in 0..d {
        for bb in 0..n {
            for aa in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for p in 0..n {
                    for q in 0..n {
                        let w = C64::new(re[(x * n + p) * n + q], im[(x * n + p) * n + q]);
                        s += rho[bb * n + p] * w * rho[aa * n + q];
                    }
                }
                let w = C64::new(re[(x * n + bb) * n + aa], im[(x * n + bb) * n + aa]);
                rres = rres.max((w.conj() - s).norm());
            }
        }
    }
    Ok(GlConnection {
        r,
        real: big,
        re,
        im,
        residual,
        doublet_residual: dres,
        reality_residual: rres,
    })
}

/// Smooth frame basis `B` and inverse `E` from jets of `J` (and optionally
/// a metric). Orders follow the inputs.
pub fn frame_fields(j: &[Jet], g: Option<&[Jet]>, d: usize) -> Result<(Vec<Jet>, Vec<Jet>)> {
    let b = frame_basis_jets(j, g, d)?;
    let e = inverse_jet(&b, d)?;
    Ok((b, e))
}

/// Max-abs difference of two value slices.
pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::variables;

    fn const_j(d: usize, dim: usize, order: u8) -> Vec<Jet> {
        flat_j(d / 4).iter().map(|&v| Jet::constant(v, dim, order)).collect()
    }

    #[test]
    fn constant_structure_gives_zero_connection() {
        for d in [4, 8] {
            let s = obata_jets(&const_j(d, d, 2), d).unwrap();
            assert!(max_abs(&values(&s.gamma)) < 1e-14);
            assert!(s.residual < 1e-14);
            assert_eq!(s.unknowns, d * d * (d + 1) / 2);
        }
    }

    #[test]
    fn flat_metric_linear_coordinates() {
        let d = 4;
        let g: Vec<Jet> = (0..16)
            .map(|k| Jet::constant(if k % 5 == 0 { 1.0 } else { 0.0 }, d, 2))
            .collect();
        let lc = levi_civita_jets(&g, d).unwrap();
        assert!(lc.iter().all(|x| x.max_abs() == 0.0));
    }

    #[test]
    fn linear_change_of_coordinates_keeps_gamma_zero() {
        // J conjugated by a constant invertible matrix is still constant.
        let d = 4;
        let a = [2.0, 0.3, 0.0, 0.1, 0.0, 1.0, 0.2, 0.0, 0.5, 0.0, 1.5, 0.0, 0.0, 0.1, 0.0, 0.7];
        let am = DMatrix::from_row_slice(4, 4, &a);
        let ai = inverse(&am).unwrap();
        let jf = flat_j(1);
        let mut jv = vec![0.0; 48];
        for k in 0..3 {
            let m = DMatrix::from_row_slice(4, 4, &jf[k * 16..(k + 1) * 16]);
            let t = &am * m * &ai;
            for x in 0..4 {
                for y in 0..4 {
                    jv[k * 16 + x * 4 + y] = t[(x, y)];
                }
            }
        }
        let j: Vec<Jet> = jv.iter().map(|&v| Jet::constant(v, d, 2)).collect();
        let s = obata_jets(&j, d).unwrap();
        assert!(max_abs(&values(&s.gamma)) < 1e-13);
    }

    #[test]
    fn s_xi_is_linear() {
        let d = 4;
        let p = [0.1, 0.2, -0.3, 0.4];
        let v = variables(&p, 1).unwrap();
        let j = const_j(d, d, 1);
        let xi1: Vec<Jet> = v.iter().map(|x| x * x).collect();
        let xi2: Vec<Jet> = v.iter().map(|x| x * 0.5).collect();
        let sum: Vec<Jet> = xi1.iter().zip(&xi2).map(|(a, b)| a + b).collect();
        let s1 = s_xi_jets(&xi1, &j, d);
        let s2 = s_xi_jets(&xi2, &j, d);
        let s = s_xi_jets(&sum, &j, d);
        for k in 0..s.len() {
            assert!((s[k].value() - s1[k].value() - s2[k].value()).abs() < 1e-15);
        }
    }
}
