//! Verification suites over catalog entries or user LiftData: each suite
//! evaluates residuals at seeded chart points and aggregates the worst case
//! per check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::{CatalogEntry, XiHatSpec};
use crate::confmap::*;
use crate::connection::*;
use crate::curvature::*;
use crate::error::{Error, Result};
use crate::field::{eps, lie_bracket_jets, Rank, TensorField};
use crate::jet::{min_order, values, variables, Jet};
use crate::linalg::inverse_jet;
use crate::qstruct::*;
use crate::report::Tally;
use crate::symmetry::*;

/// Bound for algebraic identities and exact round trips.
pub const STRICT: f64 = 1e-10;
/// Detection threshold for deliberately broken inputs.
pub const DETECT: f64 = 1e-3;
/// Random ξ̂-deformations lifted by the structure suite.
pub const DEFORMATIONS: u64 = 10;
/// Slices `z⁰` (times the cone sign) for the ν bookkeeping.
pub const SLICES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
    pub order: u8,
    /// Worker threads; 0 uses the rayon default.
    pub parallel: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config { points: 100, seed: 1, tol: 1e-8, order: 3, parallel: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Structure,
    Connections,
    Curvature,
    Lift,
    Project,
    Roundtrip,
    Symmetries,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Structure => "verify-structure",
            Suite::Connections => "connections",
            Suite::Curvature => "curvature",
            Suite::Lift => "lift",
            Suite::Project => "project",
            Suite::Roundtrip => "roundtrip",
            Suite::Symmetries => "symmetries",
            Suite::All => "all",
        }
    }

    /// Jet order the suite needs from the evaluators.
    pub fn required_order(self) -> u8 {
        match self {
            Suite::Lift | Suite::Project | Suite::Roundtrip => 1,
            Suite::Structure | Suite::Connections | Suite::Curvature => 2,
            Suite::Symmetries | Suite::All => 3,
        }
    }
}

/// Runs `suite` on `entry`.
pub fn run(suite: Suite, entry: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    if cfg.points == 0 {
        return Err(Error::Argument("point count must be positive".into()));
    }
    if cfg.order > crate::jet::MAX_ORDER {
        return Err(Error::OrderTooHigh(cfg.order));
    }
    if cfg.order < suite.required_order() {
        return Err(Error::Argument(format!(
            "suite {} needs jet order {}, got {}",
            suite.name(),
            suite.required_order(),
            cfg.order
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    pool.install(|| match suite {
        Suite::Structure => structure(entry, cfg),
        Suite::Connections => connections(entry, cfg),
        Suite::Curvature => curvature(entry, cfg),
        Suite::Lift => lift(entry, cfg),
        Suite::Project => project_suite(entry, cfg),
        Suite::Roundtrip => roundtrip(entry, cfg),
        Suite::Symmetries => symmetries(entry, cfg),
        Suite::All => {
            let mut t = Tally::new();
            for s in [
                Suite::Structure,
                Suite::Connections,
                Suite::Curvature,
                Suite::Lift,
                Suite::Project,
                Suite::Roundtrip,
                Suite::Symmetries,
            ] {
                if applicable(s, entry) {
                    t.merge(run_inner(s, entry, cfg)?);
                }
            }
            Ok(t)
        }
    })
}

fn run_inner(s: Suite, e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    match s {
        Suite::Structure => structure(e, cfg),
        Suite::Connections => connections(e, cfg),
        Suite::Curvature => curvature(e, cfg),
        Suite::Lift => lift(e, cfg),
        Suite::Project => project_suite(e, cfg),
        Suite::Roundtrip => roundtrip(e, cfg),
        Suite::Symmetries => symmetries(e, cfg),
        Suite::All => unreachable!(),
    }
}

/// Whether a suite has anything to check on `e`.
pub fn applicable(s: Suite, e: &CatalogEntry) -> bool {
    match s {
        Suite::Lift | Suite::Project | Suite::Roundtrip => e.lift.is_some() && e.cone.is_some(),
        _ => true,
    }
}

fn need<'a, T>(x: &'a Option<T>, what: &str) -> Result<&'a T> {
    x.as_ref()
        .ok_or_else(|| Error::Precondition(format!("entry has no {what}")))
}

// ---------------------------------------------------------------------------
// helpers

fn mx(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn md(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn trunc(v: &[Jet], o: u8) -> Vec<Jet> {
    v.iter().map(|x| x.truncate(o)).collect()
}

fn section(t: &mut Tally, name: &str, f: impl FnOnce(&mut Tally) -> Result<()>) {
    if let Err(e) = f(t) {
        t.fail(name, "evaluation succeeds", &e);
    }
}

fn over_points<F>(pts: &[Vec<f64>], f: F) -> Tally
where
    F: Fn(&[f64], &mut Tally) + Sync,
{
    let parts: Vec<Tally> = pts
        .par_iter()
        .map(|p| {
            let mut t = Tally::new();
            f(p, &mut t);
            t
        })
        .collect();
    let mut out = Tally::new();
    for t in parts {
        out.merge(t);
    }
    out
}

fn rng(cfg: &Config, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

fn random_matrix(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n * n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// `P J^a P⁻¹` with `P = 1 + s·x_last·E`: stays an almost quaternionic
/// structure but is generically non-integrable.
fn conjugated(j: &[Jet], e: &[f64], s: f64, p: &[f64], d: usize) -> Result<Vec<Jet>> {
    let dim = p.len();
    let o = min_order(j).min(1);
    let x = variables(p, o)?;
    let t = &x[dim - 1];
    let mut pm = vec![Jet::zero(dim, o); d * d];
    for i in 0..d {
        for k in 0..d {
            if i == k {
                pm[i * d + k] = Jet::constant(1.0, dim, o);
            }
            pm[i * d + k].add_scaled(s * e[i * d + k], t);
        }
    }
    let pi = inverse_jet(&pm, d)?;
    let j = trunc(j, o);
    let mut out = vec![Jet::zero(dim, o); 3 * d * d];
    for a in 0..3 {
        let ja = &j[a * d * d..(a + 1) * d * d];
        let mut tmp = vec![Jet::zero(dim, o); d * d];
        for i in 0..d {
            for k in 0..d {
                for l in 0..d {
                    tmp[i * d + l].add_mul(&pm[i * d + k], &ja[k * d + l]);
                }
            }
        }
        for i in 0..d {
            for l in 0..d {
                for k in 0..d {
                    out[(a * d + i) * d + l].add_mul(&tmp[i * d + k], &pi[k * d + l]);
                }
            }
        }
    }
    Ok(out)
}

fn frame_checks(t: &mut Tally, tag: &str, f: &Vielbein, jv: &[f64]) {
    t.below(&format!("{tag}.vielbein.symplectic"), "ρ antisymmetric, ρρᵀ = 1", STRICT, f.symplectic_residual());
    t.below(&format!("{tag}.vielbein.inverse"), "f_X^{iA} f^Y_{iA} = δ, f_X^{iA} f^X_{jB} = δ", STRICT, f.inverse_residual());
    t.below(&format!("{tag}.vielbein.reality"), "(f^X_{iA})* = ε^{ij} ρ^{AB} f^X_{jB}", STRICT, f.reality_residual());
    let (j2, imag) = j_from_vielbein(f);
    t.below(
        &format!("{tag}.vielbein.structure"),
        "J⃗ = -i σ⃗ f f⁻¹ reproduces the structure",
        STRICT,
        md(&j2, jv).max(imag),
    );
}

/// Cone points from the entry's adapted chart.
fn cone_points(e: &CatalogEntry, cfg: &Config) -> Result<Vec<Vec<f64>>> {
    Ok(need(&e.cone, "cone")?.chart.sample(cfg.points, cfg.seed))
}

fn small_points(l: &LiftData, cfg: &Config) -> Vec<Vec<f64>> {
    l.chart.sample(cfg.points, cfg.seed)
}

/// Polynomial one-form `ξ_X = c_X + M_XY q^Y + s q_X |q|²`, fixed by the seed.
pub fn random_xi(n: usize, seed: u64, scale: f64) -> TensorField {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
    let c: Vec<f64> = (0..n).map(|_| scale * r.gen_range(-1.0..1.0)).collect();
    let m: Vec<f64> = (0..n * n).map(|_| scale * r.gen_range(-1.0..1.0)).collect();
    let s = scale * r.gen_range(-1.0..1.0);
    TensorField::from_expr(n, Rank::COVECTOR, 1, move |q| {
        let dim = q[0].dim();
        let o = min_order(q);
        let mut q2 = Jet::zero(dim, o);
        for x in q {
            q2.add_mul(x, x);
        }
        (0..n)
            .map(|x| {
                let mut v = Jet::constant(c[x], dim, o);
                for y in 0..n {
                    v.add_scaled(m[x * n + y], &q[y]);
                }
                v.add_mul_scaled(s, &q[x], &q2);
                v
            })
            .collect()
    })
}

/// `ξ = 0.3 (1 + |q|²) q`, the gradient of a function of `|q|²`.
pub fn radial_xi(n: usize) -> TensorField {
    TensorField::from_expr(n, Rank::COVECTOR, 1, move |q| {
        let dim = q[0].dim();
        let mut s = Jet::constant(1.0, dim, min_order(q));
        for x in q {
            s.add_mul(x, x);
        }
        q.iter().map(|x| (&s * x).scale(0.3)).collect()
    })
}

// ---------------------------------------------------------------------------
// structure

fn structure(e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    let mut out = Tally::new();
    let mut r = rng(cfg, 1);
    if let Some((chart, h, g)) = &e.rigid {
        let d = h.dim();
        let pts = chart.sample(cfg.points, cfg.seed);
        out.merge(over_points(&pts, |p, t| {
            section(t, "structure.rigid", |t| {
                let j = h.eval(p, 1)?;
                let jv = values(&j);
                t.below("structure.rigid.algebra", "J^a J^b = -δ^{ab} + ε^{abc} J^c", STRICT, algebra_residual(&jv, d).max(trace_residual(&jv, d)));
                t.below("structure.rigid.nijenhuis", "N = 0", cfg.tol, max_abs_jets(&nijenhuis_diag_jets(&j, d)));
                t.below("structure.rigid.hermitian", "g(J X, J Y) = g(X, Y)", STRICT, hermiticity_residual_vals(&values(&g.eval(p, 0)?), &jv, d));
                let f = frame_from_structure(h, p, Some(g))?;
                frame_checks(t, "structure.rigid", &f, &jv);
                Ok(())
            })
        }));
        return Ok(out);
    }
    let cone = need(&e.cone, "cone")?;
    let d = cone.chart.dim();
    let bb = random_matrix(&mut r, d);
    let be = random_matrix(&mut r, d);
    let pts = cone_points(e, cfg)?;
    let deformed: Vec<LiftData> = match &e.lift {
        Some(l) => (0..DEFORMATIONS)
            .map(|s| xi_hat_transform(l, &XiHatSpec::random(l.n_h, cfg.seed.wrapping_add(s), 0.3).field()))
            .collect(),
        None => vec![],
    };
    out.merge(over_points(&pts, |p, t| {
        section(t, "structure.cone", |t| {
            let j = cone.h_hat.eval(p, 1)?;
            let jv = values(&j);
            t.below("structure.cone.algebra", "Ĵ^a Ĵ^b = -δ^{ab} + ε^{abc} Ĵ^c", STRICT, algebra_residual(&jv, d).max(trace_residual(&jv, d)));
            t.below("structure.cone.nijenhuis", "N(Ĵ) = 0", cfg.tol, max_abs_jets(&nijenhuis_diag_jets(&j, d)));
            let broken: Vec<f64> = jv.iter().zip(bb.iter().cycle()).map(|(x, b)| x + 0.01 * b).collect();
            t.above("structure.detect.algebra", "perturbed Ĵ breaks the algebra", DETECT, algebra_residual(&broken, d));
            let jc = conjugated(&j, &be, 0.3, p, d)?;
            t.below("structure.detect.conjugated_algebra", "P Ĵ P⁻¹ keeps the algebra", STRICT, algebra_residual(&values(&jc), d));
            t.above("structure.detect.nijenhuis", "non-integrable P Ĵ P⁻¹ has N ≠ 0", DETECT, max_abs_jets(&nijenhuis_diag_jets(&jc, d)));
            let f = frame_from_structure(&cone.h_hat, p, None)?;
            frame_checks(t, "structure.cone", &f, &jv);
            if let Some(g) = &cone.metric {
                let gv = values(&g.eval(p, 0)?);
                t.below("structure.cone.hermitian", "ĝ(Ĵ X, Ĵ Y) = ĝ(X, Y)", cfg.tol, hermiticity_residual_vals(&gv, &jv, d));
            }
            if let Some(l) = &e.lift {
                let jl = lift_structure_jets(l, p, 1)?;
                let jlv = values(&jl);
                t.below("structure.lift.algebra", "lifted Ĵ: quaternion algebra", STRICT, algebra_residual(&jlv, d).max(trace_residual(&jlv, d)));
                t.below("structure.lift.nijenhuis", "lifted Ĵ: N = 0", cfg.tol, max_abs_jets(&nijenhuis_diag_jets(&jl, d)));
            }
            for l in &deformed {
                let jl = lift_structure_jets(l, p, 1)?;
                let jlv = values(&jl);
                t.below("structure.xi_hat.algebra", "lifted ξ̂-deformed Ĵ: quaternion algebra", STRICT, algebra_residual(&jlv, d).max(trace_residual(&jlv, d)));
                t.below("structure.xi_hat.nijenhuis", "lifted ξ̂-deformed Ĵ: N = 0", cfg.tol, max_abs_jets(&nijenhuis_diag_jets(&jl, d)));
            }
            Ok(())
        })
    }));
    if let Some(l) = &e.lift {
        let n = l.small_dim();
        let bs = random_matrix(&mut r, n);
        let pts = small_points(l, cfg);
        out.merge(over_points(&pts, |q, t| {
            section(t, "structure.small", |t| {
                let j = l.j.eval(q, 1)?;
                let jv = values(&j);
                let a = l.a.eval(q, 0)?;
                t.below("structure.small.algebra", "J^a J^b = -δ^{ab} + ε^{abc} J^c", STRICT, algebra_residual(&jv, n).max(trace_residual(&jv, n)));
                let w = extract_omega_op_jets(&j, n)?;
                t.below("structure.small.quaternionic", "N = -½J⃗_X·ω⃗_Y + ½J⃗_Y·ω⃗_X solvable", cfg.tol, w.residual);
                let cf = omega_op_closed_form(&trunc(&j, 0), &a, n);
                t.below("structure.small.omega_op_closed_form", "ω⃗^Op = -(1/6)(2A⃗_X + A⃗_Y × J⃗_X^Y)", cfg.tol, md(&values(&w.omega), &values(&cf)));
                let integ = check_lift_integrability(l, q)?;
                t.below("structure.small.integrability", "2dA⃗ - 2A⃗×A⃗ = J⃗h - hJ⃗ for symmetric h", cfg.tol, integ.residual_a);
                let mut jb = j.clone();
                for (k, x) in jb.iter_mut().enumerate() {
                    *x += &Jet::constant(0.05 * bs[k % (n * n)], n, 1);
                }
                let wb = extract_omega_op_jets(&jb, n)?;
                t.above("structure.detect.quaternionic", "perturbed J is not quaternionic", DETECT, wb.residual);
                let f = frame_from_structure(&l.j, q, None)?;
                frame_checks(t, "structure.small", &f, &jv);
                if let Some(h) = &l.h {
                    t.below("structure.small.h_hermitian", "h(J X, J Y) = h(X, Y)", cfg.tol, hermiticity_residual_vals(&values(&h.eval(q, 0)?), &jv, n));
                }
                Ok(())
            })
        }));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// connections

fn connections(e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    let mut out = Tally::new();
    if let Some((chart, h, g)) = &e.rigid {
        let d = h.dim();
        let pts = chart.sample(cfg.points, cfg.seed);
        out.merge(over_points(&pts, |p, t| {
            section(t, "connections.rigid", |t| {
                let j = h.eval(p, 2)?;
                let ob = obata_jets(&j, d)?;
                t.below("connections.rigid.obata", "Γ = 0 for constant J⃗", 1e-12, mx(&values(&ob.gamma)));
                let lc = levi_civita_jets(&g.eval(p, 2)?, d)?;
                t.below("connections.rigid.levi_civita", "Γ = 0 for the flat metric", 1e-12, mx(&values(&lc)));
                let (b, ee) = frame_fields(&j, None, d)?;
                let gl = gl_connection(&ConnectionBundle::new(d, ob.gamma, None), &b, &ee)?;
                t.below("connections.rigid.gl", "ω_{XA}^B = 0", 1e-12, mx(&gl.re).max(mx(&gl.im)));
                Ok(())
            })
        }));
        return Ok(out);
    }
    let cone = need(&e.cone, "cone")?;
    let d = cone.chart.dim();
    let pts = cone_points(e, cfg)?;
    out.merge(over_points(&pts, |p, t| {
        section(t, "connections.cone", |t| {
            let j = cone.h_hat.eval(p, 2)?;
            let ob = obata_jets(&j, d)?;
            t.below("connections.obata", "∇Ĵ = 0, unique torsionless solution", cfg.tol, ob.residual);
            let k = cone.k.eval(p, 2)?;
            t.below("connections.homothetic", "∇_X k^Y = (3/2) δ_X^Y", cfg.tol, check_closed_homothetic(&ob.gamma, &k, d)?);
            let (kv, off) = su2_vectors(&j, &k, d);
            t.below("connections.su2.adapted", "k⃗ = (1/3)Ĵk lies along z^α", cfg.tol, off);
            let mut clo: f64 = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    let br = values(&lie_bracket_jets(&kv[a * d..(a + 1) * d], &kv[b * d..(b + 1) * d], d));
                    for y in 0..d {
                        let mut s = br[y];
                        for c in 0..3 {
                            s -= eps(a, b, c) * kv[c * d + y].value();
                        }
                        clo = clo.max(s.abs());
                    }
                }
            }
            t.below("connections.su2.closure", "[k⃗^a, k⃗^b] = ε^{abc} k⃗^c", cfg.tol, clo);
            if let Some(g) = &cone.metric {
                let gj = g.eval(p, 2)?;
                let lc = levi_civita_jets(&gj, d)?;
                t.below("connections.obata_equals_levi_civita", "Obata = Levi-Civita on the hyper-Kähler cone", cfg.tol, md(&values(&lc), &values(&ob.gamma)));
                let ng = covariant_derivative_jets(&trunc(&ob.gamma, 0), &trunc(&gj, 1), Rank::BILINEAR, d)?;
                t.below("connections.cone.metricity", "∇̂ĝ = 0", cfg.tol, mx(&values(&ng)));
                let (gv, kk) = (values(&gj), values(&k));
                let gkk: f64 = (0..d).flat_map(|x| (0..d).map(move |y| (x, y))).map(|(x, y)| gv[x * d + y] * kk[x] * kk[y]).sum();
                let mut nr: f64 = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        let mut s = 0.0;
                        for x in 0..d {
                            for y in 0..d {
                                s += gv[x * d + y] * kv[a * d + x].value() * kv[b * d + y].value();
                            }
                        }
                        let e = if a == b { gkk / 9.0 } else { 0.0 };
                        nr = nr.max((s - e).abs());
                    }
                }
                t.below("connections.su2.norms", "ĝ(k⃗^a, k⃗^b) = δ^{ab} ĝ(k, k)/9", cfg.tol, nr);
            }
            let (b, ee) = frame_fields(&j, None, d)?;
            let gl = gl_connection(&ConnectionBundle::new(d, ob.gamma, None), &b, &ee)?;
            t.below("connections.cone.vielbein", "∇f = 0 with ω_{XA}^B (hypercomplex)", cfg.tol, gl.residual.max(gl.doublet_residual));
            t.below("connections.cone.gl_reality", "ω_{XA}^B obeys the reality condition", cfg.tol, gl.reality_residual);
            Ok(())
        })
    }));
    if let Some(l) = &e.lift {
        let n = l.small_dim();
        let x1 = random_xi(n, cfg.seed, 0.3);
        let x2 = random_xi(n, cfg.seed + 1, 0.3);
        let pts = small_points(l, cfg);
        out.merge(over_points(&pts, |q, t| {
            section(t, "connections.small", |t| {
                let j = l.j.eval(q, 2)?;
                let a = l.a.eval(q, 1)?;
                let (op, wres, sres) = oproiu_jets(&j, n)?;
                let om = op.omega.clone().unwrap();
                t.below("connections.oproiu", "∇J⃗ + 2ω⃗^Op × J⃗ = 0", cfg.tol, sres.max(wres));
                let f = oproiu_formula(&j, &values(&om), n)?;
                t.below("connections.oproiu.formula", "Γ^Op from its closed assembly", cfg.tol, md(&f, &values(&op.gamma)));
                let j1 = trunc(&j, 1);
                let xi1 = x1.eval(q, 1)?;
                let xi2 = x2.eval(q, 1)?;
                let (c1, r1) = xi_transform(&op, &xi1, &j1, f64::INFINITY)?;
                t.below("connections.xi.covariance", "ξ-transformed (Γ, ω⃗) solve ∇J⃗ + 2ω⃗×J⃗ = 0", cfg.tol, r1);
                let (c12, _) = xi_transform(&c1, &xi2, &j1, f64::INFINITY)?;
                let xs: Vec<Jet> = xi1.iter().zip(&xi2).map(|(a, b)| a + b).collect();
                let (cs, _) = xi_transform(&op, &xs, &j1, f64::INFINITY)?;
                let dg = md(&values(&c12.gamma), &values(&cs.gamma));
                let dw = md(&values(c12.omega.as_ref().unwrap()), &values(cs.omega.as_ref().unwrap()));
                t.below("connections.xi.additivity", "ξ₂ ∘ ξ₁ = ξ₁ + ξ₂", STRICT, dg.max(dw));
                let (xi, gres) = choose_su2_gauge_jets(&j1, &a, &om, n)?;
                t.below("connections.gauge", "ω⃗^Op + J⃗*ξ = -½A⃗ reachable", cfg.tol, gres);
                if let Some(h) = &l.h {
                    let (gf, _) = small_metric(l, l.z0_sign)?;
                    let _ = h;
                    let lc = levi_civita_jets(&gf.eval(q, 2)?, n)?;
                    let (cg, _) = xi_transform(&op, &xi, &j1, f64::INFINITY)?;
                    t.below("connections.gauge.levi_civita", "Γ in the -½A⃗ gauge = Levi-Civita of g", cfg.tol, md(&values(&cg.gamma), &values(&lc)));
                    let omh: Vec<Jet> = a.iter().map(|x| x.scale(-0.5)).collect();
                    let qn = values(&quat_nabla_jets(&trunc(&lc, 0), Some(&trunc(&omh, 0)), &j1, n));
                    t.below("connections.levi_civita.quaternionic", "∇^g J⃗ - A⃗ × J⃗ = 0", cfg.tol, mx(&qn));
                }
                let (b, ee) = frame_fields(&j, None, n)?;
                let gl = gl_connection(&op, &b, &ee)?;
                t.below("connections.small.vielbein", "∇f = 0 with ω⃗^Op and ω_{XA}^B", cfg.tol, gl.residual.max(gl.doublet_residual));
                t.below("connections.small.gl_reality", "ω_{XA}^B obeys the reality condition", cfg.tol, gl.reality_residual);
                Ok(())
            })
        }));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// curvature

struct SmallCurv {
    r: Vec<f64>,
    curvrel: f64,
    gl: f64,
}

fn small_curvature(bundle: &ConnectionBundle, j: &[Jet], jv: &[f64], n: usize) -> Result<SmallCurv> {
    let r = riemann(&bundle.gamma, n)?;
    let om = bundle.omega.as_ref().ok_or_else(|| Error::Precondition("SU(2) connection missing".into()))?;
    let rvec = su2_curvature(om, n)?;
    let (b, e) = frame_fields(j, None, n)?;
    let gl = gl_connection(bundle, &b, &e)?;
    let glc = gl_curvature(&gl)?;
    let vb = Vielbein::from_basis(&values(&b), n / 4)?;
    let curvrel = curvature_relation(&r, jv, Some(&rvec), &glc, &vb);
    Ok(SmallCurv { r, curvrel, gl: gl.residual })
}

fn split_checks(t: &mut Tally, tag: &str, r: &[f64], f: &Vielbein, tol: f64) {
    let sp = ricci_weyl_split(r, f);
    t.below(&format!("{tag}.weyl.ricci_flat"), "Ric(R^W) = 0", tol, sp.weyl_ricci);
    t.below(&format!("{tag}.weyl.bianchi"), "R^W_[XYZ]^W = 0", tol, sp.bianchi_weyl);
    t.below(&format!("{tag}.ricci_part.bianchi"), "R^Ric_[XYZ]^W = 0", tol, sp.bianchi_ricci);
    t.below(&format!("{tag}.weyl.real"), "Weyl part is real", tol, sp.imag);
}

fn curvature(e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    let mut out = Tally::new();
    if let Some((chart, h, g)) = &e.rigid {
        let d = h.dim();
        let pts = chart.sample(cfg.points, cfg.seed);
        out.merge(over_points(&pts, |p, t| {
            section(t, "curvature.rigid", |t| {
                let j = h.eval(p, 2)?;
                let lc = levi_civita_jets(&g.eval(p, 3)?, d)?;
                let r = riemann(&lc, d)?;
                t.below("curvature.rigid.riemann", "R = 0", 1e-12, mx(&r));
                t.below("curvature.rigid.bianchi", "R_[XYZ]^W = 0", 1e-12, bianchi_residual(&r, d));
                let (b, ee) = frame_fields(&j, None, d)?;
                let gl = gl_connection(&ConnectionBundle::new(d, lc, None), &b, &ee)?;
                let glc = gl_curvature(&gl)?;
                let vb = Vielbein::from_basis(&values(&b), d / 4)?;
                t.below("curvature.rigid.curvrel", "R = L·R^{Gl}", 1e-12, curvature_relation(&r, &values(&j), None, &glc, &vb));
                Ok(())
            })
        }));
        return Ok(out);
    }
    let cone = need(&e.cone, "cone")?;
    let d = cone.chart.dim();
    let pts = cone_points(e, cfg)?;
    out.merge(over_points(&pts, |p, t| {
        section(t, "curvature.cone", |t| {
            let j = cone.h_hat.eval(p, 2)?;
            let jv = values(&j);
            let ob = obata_jets(&j, d)?;
            let r = riemann(&ob.gamma, d)?;
            t.below("curvature.cone.bianchi", "R_[XYZ]^W = 0", cfg.tol, bianchi_residual(&r, d));
            if e.flat.is_some() {
                t.below("curvature.cone.flat", "R = 0 on the flat cone", cfg.tol, mx(&r));
            }
            let ric = ricci(&r, d);
            let rr = r_real_from_riemann(&r, d);
            let ra = ricci_antisym(&ric, d);
            let s: Vec<f64> = ra.iter().zip(&rr).map(|(a, b)| a + b).collect();
            t.below("curvature.cone.ric_antisym", "Ric_[XY] = -R^ℝ_XY", cfg.tol, mx(&s));
            t.below("curvature.cone.r_real_hermitian", "R^ℝ(ĴX, ĴY) = R^ℝ(X, Y)", cfg.tol, hermitian_two_form_residual(&rr, &jv, d));
            if e.expected.r_curvature_zero == Some(false) {
                t.above("curvature.cone.r_real_nonzero", "ξ̂-deformed cone has R^ℝ ≠ 0", 1e-4, mx(&rr));
            }
            let (b, ee) = frame_fields(&j, None, d)?;
            let gl = gl_connection(&ConnectionBundle::new(d, ob.gamma.clone(), None), &b, &ee)?;
            let glc = gl_curvature(&gl)?;
            let vb = Vielbein::from_basis(&values(&b), d / 4)?;
            t.below("curvature.cone.curvrel", "R_XYW^Z = L_W^Z_A^B R_XYB^A", cfg.tol, curvature_relation(&r, &jv, None, &glc, &vb));
            t.below("curvature.cone.gl_trace", "½R_XYW^W = R^ℝ from the Gl(r,ℍ) trace", cfg.tol, md(&glc.r_real, &rr).max(glc.r_real_imag));
            let w = extract_w(&r, &vb);
            t.below("curvature.cone.w.reconstruction", "R = -½ f ε f f W", cfg.tol, w.residual);
            t.below("curvature.cone.w.symmetric", "W_ABC^D symmetric in ABC", cfg.tol, w.symmetry_residual);
            if e.expected.hyper_kahler {
                t.below("curvature.cone.w.trace", "W_ABC^C = 0 on the hyper-Kähler cone", cfg.tol, w.trace.iter().fold(0.0f64, |m, z| m.max(z.norm())));
            }
            split_checks(t, "curvature.cone", &r, &vb, cfg.tol);
            if let Some(l) = &e.lift {
                let n = l.small_dim();
                let q = &p[Q0..];
                let js = l.j.eval(q, 2)?;
                let a = l.a.eval(q, 2)?;
                let (op, _, _) = oproiu_jets(&js, n)?;
                let (xi, _) = choose_su2_gauge_jets(&js, &a, op.omega.as_ref().unwrap(), n)?;
                let (cg, _) = xi_transform(&op, &xi, &trunc(&js, 1), f64::INFINITY)?;
                let rs = riemann(&cg.gamma, n)?;
                let rrs = r_real_from_riemann(&rs, n);
                let mut rrb = vec![0.0; n * n];
                for x in 0..n {
                    for y in 0..n {
                        rrb[x * n + y] = rr[(Q0 + x) * d + Q0 + y];
                    }
                }
                t.below("curvature.r_real.big_small", "R^ℝ of the quaternionic space = R^ℝ of the cone", cfg.tol, md(&rrs, &rrb));
            }
            Ok(())
        })
    }));
    if let Some(l) = &e.lift {
        let n = l.small_dim();
        let rr = n as f64 / 4.0;
        let xr = random_xi(n, cfg.seed + 7, 0.3);
        let pts = small_points(l, cfg);
        let mut r = rng(cfg, 3);
        let sym: Vec<f64> = {
            let m = random_matrix(&mut r, n);
            (0..n * n).map(|k| 0.05 * (m[k] + m[(k % n) * n + k / n])).collect()
        };
        out.merge(over_points(&pts, |q, t| {
            section(t, "curvature.small", |t| {
                let j = l.j.eval(q, 2)?;
                let jv = values(&j);
                let a = l.a.eval(q, 2)?;
                let (op, _, _) = oproiu_jets(&j, n)?;
                let sc = small_curvature(&op, &j, &jv, n)?;
                t.below("curvature.small.curvrel.oproiu", "R = -J⃗·R⃗ + L·R^{Gl} (Oproiu gauge)", cfg.tol, sc.curvrel.max(sc.gl));
                t.below("curvature.small.bianchi", "R_[XYZ]^W = 0", cfg.tol, bianchi_residual(&sc.r, n));
                let xi = xr.eval(q, 2)?;
                let (cx, _) = xi_transform(&op, &xi, &trunc(&j, 1), f64::INFINITY)?;
                let scx = small_curvature(&cx, &j, &jv, n)?;
                t.below("curvature.small.curvrel.random_xi", "R = -J⃗·R⃗ + L·R^{Gl} (random ξ gauge)", cfg.tol, scx.curvrel.max(scx.gl));
                let (xg, _) = choose_su2_gauge_jets(&j, &a, op.omega.as_ref().unwrap(), n)?;
                let (cg, _) = xi_transform(&op, &xg, &trunc(&j, 1), f64::INFINITY)?;
                let scg = small_curvature(&cg, &j, &jv, n)?;
                t.below("curvature.small.curvrel.gauge", "R = -J⃗·R⃗ + L·R^{Gl} (-½A⃗ gauge)", cfg.tol, scg.curvrel.max(scg.gl));
                let fb = frame_from_structure(&l.j, q, None)?;
                split_checks(t, "curvature.small", &scg.r, &fb, cfg.tol);
                let rrs = r_real_from_riemann(&scg.r, n);
                let ra = ricci_antisym(&ricci(&scg.r, n), n);
                let s: Vec<f64> = ra.iter().zip(&rrs).map(|(a, b)| a + b).collect();
                t.below("curvature.small.ric_antisym", "Ric_[XY] = -R^ℝ_XY", cfg.tol, mx(&s));
                if l.h.is_some() {
                    for z in SLICES {
                        let z0 = z * l.z0_sign;
                        let (g, nu) = small_metric(l, z0)?;
                        let gj = g.eval(q, 2)?;
                        let gv = values(&gj);
                        let lc = levi_civita_jets(&gj, n)?;
                        let r = riemann(&lc, n)?;
                        let ric = ricci(&r, n);
                        let omh: Vec<Jet> = a.iter().map(|x| x.scale(-0.5)).collect();
                        let rvec = su2_curvature(&trunc(&omh, 1), n)?;
                        let (e1, e2) = einstein_check(&gv, &ric, Some(&rvec), &jv, nu, n);
                        t.below(&format!("curvature.einstein.z0={z0}"), &format!("Ric = ν(r+2)g, R⃗ = ½νJ⃗g with ν = {nu}"), cfg.tol, e1.max(e2));
                        let dnu = nu;
                        let (w1, _) = einstein_check(&gv, &ric, None, &jv, nu + dnu, n);
                        let scale = dnu.abs() * (rr + 2.0) * mx(&gv);
                        t.above(&format!("curvature.einstein.wrong_nu.z0={z0}"), "Ric - (2ν)(r+2)g fails at the |Δν|(r+2)|g| scale", 0.99, w1 / scale);
                    }
                }
                Ok(())
            })
        }));
        if l.h.is_some() {
            out.merge(iff_checks(e, l, cfg, &sym)?);
        }
    }
    Ok(out)
}

/// Hyper-Kähler cone upstairs ⇔ Einstein downstairs, for the entry's `h`
/// and for a broken `h' = (1 + 0.3 q⁰) h + S`.
fn iff_checks(e: &CatalogEntry, l: &LiftData, cfg: &Config, sym: &[f64]) -> Result<Tally> {
    let cone = need(&e.cone, "cone")?;
    let d = l.big_dim();
    let n = l.small_dim();
    let h0 = l.h.clone().unwrap();
    let conf = {
        let h0 = h0.clone();
        TensorField::new(n, Rank::BILINEAR, 1, move |q, o| {
            let h = h0.eval(q, o)?;
            let x = variables(q, o)?;
            let f = &x[0].scale(0.3) + 1.0;
            Ok(h.iter().map(|v| v * &f).collect())
        })
    };
    let shifted = {
        let h0 = h0.clone();
        let s = sym.to_vec();
        TensorField::new(n, Rank::BILINEAR, 1, move |q, o| {
            let h = h0.eval(q, o)?;
            Ok(h.iter().zip(&s).map(|(v, c)| v + *c).collect())
        })
    };
    let variants: Vec<(&str, LiftData)> = vec![
        ("valid", l.clone()),
        ("broken_conformal", LiftData { h: Some(conf), ..l.clone() }),
        ("broken_shift", LiftData { h: Some(shifted), ..l.clone() }),
    ];
    let pts = cone_points(e, cfg)?;
    Ok(over_points(&pts, |p, t| {
        section(t, "iff", |t| {
            let j = cone.h_hat.eval(p, 2)?;
            let jv = values(&trunc(&j, 0));
            let ob = obata_jets(&j, d)?;
            for (tag, lv) in &variants {
                let gj = lift_metric_jets(lv, p, 1)?;
                let ng = covariant_derivative_jets(&trunc(&ob.gamma, 0), &gj, Rank::BILINEAR, d)?;
                let up = mx(&values(&ng)).max(hermiticity_residual_vals(&values(&gj), &jv, d));
                let q = &p[Q0..];
                let (g, nu) = small_metric(lv, p[Z0])?;
                let gq = g.eval(q, 2)?;
                let lc = levi_civita_jets(&gq, n)?;
                let r = riemann(&lc, n)?;
                let (e1, _) = einstein_check(&values(&gq), &ricci(&r, n), None, &values(&l.j.eval(q, 0)?), nu, n);
                if *tag == "valid" {
                    t.below("iff.valid.cone", "∇̂ĝ = 0 and ĝ hermitian", cfg.tol, up);
                    t.below("iff.valid.small", "Ric = ν(r+2)g at the slice of the point", cfg.tol, e1);
                } else {
                    t.above(&format!("iff.{tag}.cone"), "broken h: cone not hyper-Kähler", DETECT, up);
                    t.above(&format!("iff.{tag}.small"), "broken h: slice not Einstein", DETECT, e1);
                }
            }
            Ok(())
        })
    }))
}

// ---------------------------------------------------------------------------
// lift / project / roundtrip

fn lift(e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    let l = need(&e.lift, "LiftData")?;
    let cone = need(&e.cone, "cone")?;
    let d = l.big_dim();
    let pts = cone_points(e, cfg)?;
    Ok(over_points(&pts, |p, t| {
        section(t, "lift", |t| {
            let jl = lift_structure_jets(l, p, 1)?;
            let jlv = values(&jl);
            t.below("lift.algebra", "lifted Ĵ: quaternion algebra", STRICT, algebra_residual(&jlv, d).max(trace_residual(&jlv, d)));
            t.below("lift.nijenhuis", "lifted Ĵ: N = 0", cfg.tol, max_abs_jets(&nijenhuis_diag_jets(&jl, d)));
            t.below("lift.matches_cone", "lifted Ĵ = Ĵ of the entry", STRICT, md(&jlv, &values(&cone.h_hat.eval(p, 0)?)));
            if l.h.is_some() {
                let gl = values(&lift_metric_jets(l, p, 0)?);
                t.below("lift.metric_hermitian", "lifted ĝ hermitian for lifted Ĵ", cfg.tol, hermiticity_residual_vals(&gl, &jlv, d));
                if let Some(g) = &cone.metric {
                    t.below("lift.metric_matches_cone", "lifted ĝ = ĝ of the entry", STRICT, md(&gl, &values(&g.eval(p, 0)?)));
                }
            }
            Ok(())
        })
    }))
}

fn project_suite(e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    let l = need(&e.lift, "LiftData")?;
    let cone = need(&e.cone, "cone")?;
    let n = l.small_dim();
    let xh = random_xi(n, cfg.seed + 11, 0.2);
    let l2 = xi_hat_transform(l, &xh);
    let cone2 = ConformalHypercomplex {
        n_h: l.n_h,
        chart: l.big_chart(),
        h_hat: lift_structure(&l2),
        metric: None,
        k: homothetic_adapted(l.big_dim()),
    };
    let back = project(&cone2, l.z0_sign, l.z0_range, l.chart.clone());
    let pts = cone_points(e, cfg)?;
    Ok(over_points(&pts, |p, t| {
        section(t, "project", |t| {
            let jv = values(&cone.h_hat.eval(p, 0)?);
            let pr = project_values(&jv, p, l.n_h)?;
            t.below("project.cross_block", "remaining blocks match the read-offs", cfg.tol, pr.cross_block);
            t.below("project.mk_inverse", "k⃗^α·m⃗_β = δ^α_β", cfg.tol, pr.mk_inverse);
            let q = &p[Q0..];
            t.below("project.j", "read-off J⃗ = J⃗ of the LiftData", STRICT, md(&pr.j_section, &values(&l.j.eval(q, 0)?)));
            t.below("project.a", "read-off A⃗ = A⃗ of the LiftData", STRICT, md(&pr.a_section, &values(&l.a.eval(q, 0)?)));
            let mut target = values(&l.a.eval(q, 0)?);
            let js = values(&j_star(&l.j.eval(q, 0)?, &xh.eval(q, 0)?, n));
            for (x, s) in target.iter_mut().zip(&js) {
                *x += 2.0 * s;
            }
            t.below("project.xi_hat.a", "project(ξ̂-shifted cone) has A⃗ + 2J⃗*ξ̂", STRICT, md(&values(&back.a.eval(q, 0)?), &target));
            t.below("project.xi_hat.j", "project(ξ̂-shifted cone) keeps J⃗", STRICT, md(&values(&back.j.eval(q, 0)?), &values(&l.j.eval(q, 0)?)));
            Ok(())
        })
    }))
}

fn roundtrip(e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    let l = need(&e.lift, "LiftData")?;
    let cone = need(&e.cone, "cone")?;
    let lifted = ConformalHypercomplex {
        n_h: l.n_h,
        chart: l.big_chart(),
        h_hat: lift_structure(l),
        metric: l.h.as_ref().map(|_| lift_metric(l)),
        k: homothetic_adapted(l.big_dim()),
    };
    let pl = project(&lifted, l.z0_sign, l.z0_range, l.chart.clone());
    let lp = lift_structure(&project(cone, l.z0_sign, l.z0_range, l.chart.clone()));
    let mut t = over_points(&small_points(l, cfg), |q, t| {
        section(t, "roundtrip.small", |t| {
            t.below("roundtrip.project_lift.j", "project(lift(L)) J⃗ = J⃗", STRICT, md(&values(&pl.j.eval(q, 0)?), &values(&l.j.eval(q, 0)?)));
            t.below("roundtrip.project_lift.a", "project(lift(L)) A⃗ = A⃗", STRICT, md(&values(&pl.a.eval(q, 0)?), &values(&l.a.eval(q, 0)?)));
            if let (Some(h1), Some(h0)) = (&pl.h, &l.h) {
                t.below("roundtrip.project_lift.h", "project(lift(L)) h = h", STRICT, md(&values(&h1.eval(q, 0)?), &values(&h0.eval(q, 0)?)));
            }
            Ok(())
        })
    });
    t.merge(over_points(&cone_points(e, cfg)?, |p, t| {
        section(t, "roundtrip.cone", |t| {
            t.below("roundtrip.lift_project", "lift(project(Ĵ)) = Ĵ", STRICT, md(&values(&lp.eval(p, 0)?), &values(&cone.h_hat.eval(p, 0)?)));
            Ok(())
        })
    }));
    Ok(t)
}

// ---------------------------------------------------------------------------
// symmetries

fn symmetries(e: &CatalogEntry, cfg: &Config) -> Result<Tally> {
    let mut out = Tally::new();
    if let Some((chart, h, g)) = &e.rigid {
        let d = h.dim();
        let pts = chart.sample(cfg.points, cfg.seed);
        out.merge(over_points(&pts, |p, t| {
            section(t, "symmetries.rigid", |t| {
                let j = h.eval(p, 2)?;
                let lc = levi_civita_jets(&g.eval(p, 3)?, d)?;
                let f = frame_from_structure(h, p, Some(g))?;
                for i in 0..d {
                    let k: Vec<Jet> = (0..d).map(|y| Jet::constant(if y == i { 1.0 } else { 0.0 }, d, 3)).collect();
                    t.below("symmetries.rigid.killing", "constant vectors: ∇∇k = R k", 1e-12, symmetry_residual(&lc, &k, d)?);
                    let rot = rotation_functions(&k, &j, d, cfg.tol)?;
                    t.below("symmetries.rigid.triholomorphic", "constant vectors: L_k J⃗ = 0", 1e-12, rot.norm());
                    let refused = decompose_dk(&nabla_k(&lc, &k, d)?, &values(&j), &f, 0.0).is_err()
                        && moment_map(&rot.values(), &[0.0; 3], 0.0).is_err();
                    t.below("symmetries.rigid.nu_zero", "moment map undefined for ν = 0", 0.0, if refused { 0.0 } else { 1.0 });
                }
                Ok(())
            })
        }));
        return Ok(out);
    }
    let cone = need(&e.cone, "cone")?;
    let d = cone.chart.dim();
    let pts = cone_points(e, cfg)?;
    let gens = &e.generators;
    let lifted: Vec<TensorField> = match &e.lift {
        Some(l) => gens.iter().map(|g| lift_symmetry(&g.projected(), l, cfg.tol)).collect(),
        None => vec![],
    };
    let radial = e.lift.as_ref().map(|l| radial_xi(l.small_dim()));
    out.merge(over_points(&pts, |p, t| {
        section(t, "symmetries.cone", |t| {
            let j = cone.h_hat.eval(p, 2)?;
            let ob = obata_jets(&j, d)?;
            let k = cone.k.eval(p, 2)?;
            t.below("symmetries.homothetic.killing", "∇∇k = R k for the homothetic vector", cfg.tol, symmetry_residual(&ob.gamma, &k, d)?);
            let rot = rotation_functions(&k, &trunc(&j, 1), d, cfg.tol)?;
            t.below("symmetries.homothetic.triholomorphic", "L_k Ĵ = 0", cfg.tol, rot.norm());
            let (kv, _) = su2_vectors(&j, &k, d);
            for a in 0..3 {
                let ka = &kv[a * d..(a + 1) * d];
                t.below("symmetries.su2.killing", "∇∇k⃗^a = R k⃗^a", cfg.tol, symmetry_residual(&ob.gamma, ka, d)?);
                let r = rotation_functions(ka, &trunc(&j, 1), d, cfg.tol)?.values();
                let dev = (0..3).fold(0.0f64, |m, b| m.max((r[b] + if a == b { 1.0 } else { 0.0 }).abs()));
                t.below("symmetries.su2.rotation", "L_{k⃗^a} Ĵ = r⃗ × Ĵ with r⃗ = -e_a", cfg.tol, dev);
            }
            if let Some(f) = &e.flat {
                for g in gens {
                    let kl = f.linear_vector_jets(&g.real_matrix(), p, 2)?;
                    t.below("symmetries.cone.generators.killing", "linear sp(1,n) fields: ∇∇k = R k", cfg.tol, symmetry_residual(&ob.gamma, &kl, d)?);
                    t.below("symmetries.cone.generators.triholomorphic", "linear sp(1,n) fields: L_k Ĵ = 0", cfg.tol, rotation_functions(&kl, &trunc(&j, 1), d, cfg.tol)?.norm());
                }
            }
            let Some(l) = &e.lift else { return Ok(()) };
            if gens.is_empty() {
                return Ok(());
            }
            let n = l.small_dim();
            let q = &p[Q0..];
            let js = l.j.eval(q, 2)?;
            let jsv = values(&js);
            let a = l.a.eval(q, 1)?;
            let fr = frame_from_structure(&l.j, q, None)?;
            let (op, _, _) = oproiu_jets(&js, n)?;
            let (xg, _) = choose_su2_gauge_jets(&js, &a, op.omega.as_ref().unwrap(), n)?;
            let (cg, _) = xi_transform(&op, &xg, &trunc(&js, 1), f64::INFINITY)?;
            let omh: Vec<Jet> = a.iter().map(|x| x.scale(-0.5)).collect();
            let nu = LiftData::nu(l.z0_sign);
            let sp = SymmetryPoint { gamma: &cg.gamma, omega: &omh, j: &js, frame: &fr, nu, d: n };
            let om_op = op.omega.clone().unwrap();
            let sp_op = SymmetryPoint { gamma: &op.gamma, omega: &om_op, j: &js, frame: &fr, nu, d: n };
            let xi = radial.as_ref().unwrap().eval(q, 1)?;
            let jh1 = trunc(&j, 1);
            let kh1 = trunc(&k, 1);
            for (gi, g) in gens.iter().enumerate() {
                let ks = g.projected().eval(q, 3)?;
                t.below("symmetries.small.killing", "∇∇k = R k in the -½A⃗ gauge", cfg.tol, symmetry_residual(&cg.gamma, &ks, n)?);
                let rot = rotation_functions(&ks, &js, n, cfg.tol)?;
                t.below("symmetries.small.rotation", "L_k J⃗ = r⃗ × J⃗", cfg.tol, rot.residual);
                let rv = rot.values();
                let (p1, dk) = moment_maps(&sp, &ks, &rv)?;
                t.below("symmetries.small.moment_map", "νP⃗ = -½r⃗ - ω⃗(k) agrees with the ∇k split", cfg.tol, md(&p1, &dk.p));
                t.below("symmetries.small.decompose", "∇k = νJ⃗·P⃗ + L t", cfg.tol, dk.residual);
                let (p2, dk2) = moment_maps(&sp_op, &ks, &rv)?;
                t.below("symmetries.small.moment_map.oproiu", "moment maps agree in the Oproiu gauge", cfg.tol, md(&p2, &dk2.p).max(dk2.residual));
                match xi_moment_shift(&sp, &ks, &rv, &xi, cfg.tol) {
                    Ok(s) => {
                        t.below("symmetries.xi_shift", "νP⃗' = νP⃗ - ξ(J⃗k) by three routes", cfg.tol, s.disagreement());
                        t.below("symmetries.xi_shift.decompose", "∇'k = νJ⃗·P⃗' + L t'", cfg.tol, s.decompose_residual);
                    }
                    Err(Error::Precondition(_)) => {}
                    Err(err) => return Err(err),
                }
                let kl = lifted[gi].eval(p, 1)?;
                let cs = certify_cone_symmetry(&kl, &jh1, &kh1, d, cfg.tol)?;
                t.below("symmetries.lift.dilatation", "[k̂, k] = 0", cfg.tol, cs.dilatation_commutator);
                t.below("symmetries.lift.triholomorphic", "L_k̂ Ĵ = 0", cfg.tol, mx(&cs.rotation).max(cs.rotation_residual));
                let klv = values(&kl);
                let pr = project_symmetry(&klv, p)?;
                t.below("symmetries.lift.radial", "k̂⁰ = 0", cfg.tol, pr.radial);
                t.below("symmetries.roundtrip", "project(lift(k)) = (k, r⃗)", cfg.tol, md(&pr.k, &values(&ks)).max(md(&pr.r, &rv)));
                if let Some(f) = &e.flat {
                    let lin = values(&f.linear_vector_jets(&g.real_matrix(), p, 0)?);
                    t.below("symmetries.lift.matches_linear", "lifted k̂ = linear sp(1,n) field", cfg.tol, md(&klv, &lin));
                }
            }
            let _ = jsv;
            Ok(())
        })
    }));
    if let (Some(l), false) = (&e.lift, gens.is_empty()) {
        let n = l.small_dim();
        let cpts: Vec<Vec<f64>> = small_points(l, cfg).into_iter().take(cfg.points.min(10)).collect();
        let proj: Vec<TensorField> = gens.iter().map(|g| g.projected()).collect();
        out.merge(over_points(&cpts, |q, t| {
            section(t, "symmetries.closure", |t| {
                let js = l.j.eval(q, 2)?;
                let a = l.a.eval(q, 1)?;
                let (op, _, _) = oproiu_jets(&js, n)?;
                let (xg, _) = choose_su2_gauge_jets(&js, &a, op.omega.as_ref().unwrap(), n)?;
                let (cg, _) = xi_transform(&op, &xg, &trunc(&js, 1), f64::INFINITY)?;
                let ks: Vec<Vec<Jet>> = proj.iter().map(|g| g.eval(q, 3)).collect::<Result<_>>()?;
                for i in 0..gens.len() {
                    for j in i + 1..gens.len() {
                        let b = lie_bracket_jets(&ks[i], &ks[j], n);
                        t.below("symmetries.closure.killing", "[k_I, k_J] is again a symmetry", cfg.tol, symmetry_residual(&cg.gamma, &b, n)?);
                        let c = values(&gens[i].commutator(&gens[j]).projected().eval(q, 0)?);
                        let bv = values(&b);
                        let s: Vec<f64> = bv.iter().zip(&c).map(|(x, y)| x + y).collect();
                        t.below("symmetries.closure.algebra", "[k_M, k_N] = -k_[M,N]", cfg.tol, mx(&s));
                    }
                }
                Ok(())
            })
        }));
    }
    Ok(out)
}
