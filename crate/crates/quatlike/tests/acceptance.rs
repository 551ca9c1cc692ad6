//! Acceptance run: one line per criterion, nonzero exit if any fails.

mod common;

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{field_strength_mismatch, lift_data, nijenhuis_mismatch, Field};
use quatlike::catalog;
use quatlike::confmap::{small_metric, LiftData};
use quatlike::jet::variables;
use quatlike::qstruct::C_N;
use quatlike::report::{Check, Expect};
use quatlike::suite::{self, Config, Suite, DEFORMATIONS, SLICES};

const SUITES: [Suite; 7] = [
    Suite::Structure,
    Suite::Connections,
    Suite::Curvature,
    Suite::Lift,
    Suite::Project,
    Suite::Roundtrip,
    Suite::Symmetries,
];

const SUITE_LIMIT_S: f64 = 60.0;
const ALL_LIMIT_S: f64 = 300.0;

struct Run {
    manifold: &'static str,
    n_h: usize,
    suite: Suite,
    checks: Vec<Check>,
    errors: Vec<String>,
    secs: f64,
}

struct Criterion {
    lines: Vec<(bool, String)>,
}

impl Criterion {
    fn new() -> Self {
        Criterion { lines: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        self.lines.push((ok, what.into()));
    }

    /// Every check in `cs` within `bound` in its own direction.
    fn checks(&mut self, what: &str, cs: &[&Check], bound: f64) {
        if cs.is_empty() {
            self.expect(false, format!("{what}: no checks ran"));
            return;
        }
        let good = |c: &Check| match c.expect {
            Expect::Below => c.worst <= bound,
            Expect::Above => c.worst >= bound,
        };
        let margin = |c: &Check| match c.expect {
            Expect::Below => c.worst / bound,
            Expect::Above => bound / c.worst,
        };
        let ok = cs.iter().all(|c| good(c));
        let w = if ok {
            cs.iter().copied().max_by(|a, b| margin(a).total_cmp(&margin(b))).unwrap()
        } else {
            cs.iter().copied().find(|c| !good(c)).unwrap()
        };
        let rel = if w.expect == Expect::Below { "<=" } else { ">=" };
        self.expect(ok, format!("{what}: {} checks, {} = {:.3e} ({rel} {bound:e})", cs.len(), w.name, w.worst));
    }

    fn finish(self, n: usize, title: &str) -> bool {
        let ok = self.lines.iter().all(|l| l.0);
        println!("criterion {n}: {} {title}", if ok { "PASS" } else { "FAIL" });
        for (good, l) in &self.lines {
            println!("    [{}] {l}", if *good { "ok" } else { "FAIL" });
        }
        ok
    }
}

fn select<'a>(runs: &'a [Run], manifolds: &[&str], pred: impl Fn(&str) -> bool) -> Vec<&'a Check> {
    runs.iter()
        .filter(|r| manifolds.contains(&r.manifold))
        .flat_map(|r| r.checks.iter())
        .filter(|c| pred(&c.name))
        .collect()
}

fn run_suites() -> Vec<Run> {
    let cfg = Config::default();
    let mut runs = Vec::new();
    for (manifold, n_h) in [
        ("flat-cone", 1),
        ("flat-cone", 2),
        ("compact-cone", 1),
        ("deformed-cone", 1),
        ("deformed-cone", 2),
        ("rigid-flat", 2),
    ] {
        let e = catalog::by_name(manifold, n_h).expect("catalog entry");
        for s in SUITES {
            if !suite::applicable(s, &e) {
                continue;
            }
            let t0 = Instant::now();
            let (checks, errors) = match suite::run(s, &e, &cfg) {
                Ok(t) => (t.checks, t.errors),
                Err(err) => (Vec::new(), vec![err.to_string()]),
            };
            runs.push(Run { manifold, n_h, suite: s, checks, errors, secs: t0.elapsed().as_secs_f64() });
        }
    }
    runs
}

fn suite_errors(c: &mut Criterion, runs: &[Run], suite: Suite) {
    for r in runs.iter().filter(|r| r.suite == suite) {
        c.expect(r.errors.is_empty(), format!("{} on {} nh={}: {} errors {:?}", suite.name(), r.manifold, r.n_h, r.errors.len(), r.errors));
    }
}

const CONES: [&str; 3] = ["flat-cone", "compact-cone", "deformed-cone"];

fn criterion1(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    suite_errors(&mut c, runs, Suite::Structure);
    let structural = |n: &str| n.starts_with("structure.") && !n.starts_with("structure.detect.");
    c.checks("algebra", &select(runs, &CONES, |n| structural(n) && n.ends_with(".algebra")), 1e-10);
    c.checks("Nijenhuis", &select(runs, &CONES, |n| structural(n) && n.ends_with(".nijenhuis")), 1e-8);
    c.checks("lifted structure", &select(runs, &CONES, |n| n == "structure.lift.algebra"), 1e-10);
    c.checks("deformed structures", &select(runs, &CONES, |n| n == "structure.xi_hat.nijenhuis"), 1e-8);
    c.expect(DEFORMATIONS == 10, format!("{DEFORMATIONS} deformations per point"));
    c.checks("detection", &select(runs, &CONES, |n| n.starts_with("structure.detect.")), 1e-3);
    c.finish(1, "structure suite")
}

fn criterion2(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    suite_errors(&mut c, runs, Suite::Connections);
    c.checks("Obata", &select(runs, &CONES, |n| n == "connections.obata"), 1e-8);
    c.checks("Oproiu", &select(runs, &CONES, |n| n == "connections.oproiu"), 1e-8);
    c.checks("xi additivity", &select(runs, &CONES, |n| n == "connections.xi.additivity"), 1e-10);
    c.finish(2, "connection suite")
}

fn criterion3(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    c.expect(C_N == 1.0 / 12.0, format!("c_N = {C_N}"));
    for n_h in [1, 2] {
        let l = lift_data(n_h);
        let pts = l.chart.sample(10, 3);
        let good = pts.iter().map(|q| nijenhuis_mismatch(&l, q, C_N)).fold(0.0f64, f64::max);
        c.expect(good < 1e-8, format!("nh={n_h} Nijenhuis with c_N: {good:.3e} (< 1e-8)"));
        for wrong in [1.0 / 6.0, 1.0 / 24.0, -1.0 / 12.0] {
            let bad = pts.iter().map(|q| nijenhuis_mismatch(&l, q, wrong)).fold(f64::INFINITY, f64::min);
            c.expect(bad > 1e-3, format!("nh={n_h} Nijenhuis with c = {wrong:.4}: {bad:.3e} (> 1e-3)"));
        }
        let mut good = 0.0f64;
        let mut bad = f64::INFINITY;
        for q in &pts {
            for z0 in SLICES {
                good = good.max(field_strength_mismatch(&l, q, z0, 2.0));
                for wrong in [1.0, -2.0, 4.0] {
                    bad = bad.min(field_strength_mismatch(&l, q, z0, wrong));
                }
            }
        }
        c.expect(good < 1e-8, format!("nh={n_h} field strength with c_ω = 2: {good:.3e} (< 1e-8)"));
        c.expect(bad > 1e-3, format!("nh={n_h} field strength with c_ω in {{1, -2, 4}}: {bad:.3e} (> 1e-3)"));
    }
    c.checks("closed-form ω^Op", &select(runs, &CONES, |n| n == "structure.small.omega_op_closed_form"), 1e-8);
    c.finish(3, "calibration locks")
}

fn criterion4(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    for s in [Suite::Lift, Suite::Project, Suite::Roundtrip] {
        suite_errors(&mut c, runs, s);
    }
    let on = ["flat-cone", "deformed-cone"];
    c.checks("round trips", &select(runs, &on, |n| n.starts_with("roundtrip.")), 1e-10);
    c.checks("deformed LiftData", &select(runs, &on, |n| n.starts_with("project.xi_hat.")), 1e-10);
    c.checks("lifted algebra", &select(runs, &on, |n| n == "lift.algebra"), 1e-10);
    c.checks("lifted Nijenhuis", &select(runs, &on, |n| n == "lift.nijenhuis"), 1e-8);
    c.finish(4, "lift/project round trip")
}

fn criterion5(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    suite_errors(&mut c, runs, Suite::Curvature);
    let l: LiftData = lift_data(1);
    for (z0, nu) in SLICES.iter().zip([-2.0, -1.0, -0.5, -0.25]) {
        let got = small_metric(&l, *z0).map(|(_, n)| n).unwrap_or(f64::NAN);
        c.expect(got == nu && LiftData::nu(*z0) == nu, format!("z0 = {z0}: ν = {got}"));
        let name = format!("curvature.einstein.z0={z0}");
        c.checks(&format!("Einstein z0={z0}"), &select(runs, &["flat-cone"], |n| n == name), 1e-8);
        let wrong = format!("curvature.einstein.wrong_nu.z0={z0}");
        c.checks(&format!("wrong ν z0={z0}, in units of |Δν|(r+2)|g|"), &select(runs, &["flat-cone"], |n| n == wrong), 0.99);
    }
    c.finish(5, "Einstein and ν bookkeeping")
}

fn criterion6(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    let on = ["flat-cone", "compact-cone"];
    c.checks("valid h, both sides", &select(runs, &on, |n| n.starts_with("iff.valid.")), 1e-8);
    c.checks("broken h, both sides", &select(runs, &on, |n| n.starts_with("iff.broken_")), 1e-3);
    for side in ["cone", "small"] {
        let k = select(runs, &on, |n| n.starts_with("iff.broken_") && n.ends_with(side)).len();
        c.expect(k >= 2, format!("{k} broken-h controls on the {side} side"));
    }
    c.finish(6, "hyper-Kähler cone iff Einstein quotient")
}

fn criterion7(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    let curvrel = select(runs, &CONES, |n| n.starts_with("curvature.") && n.contains(".curvrel"));
    let gauges = ["oproiu", "random_xi", "gauge"].iter().filter(|g| curvrel.iter().any(|x| x.name.ends_with(*g))).count();
    c.expect(gauges == 3, format!("{gauges} ξ-gauges tested downstairs"));
    c.checks("curvature relation", &curvrel, 1e-8);
    c.checks("Weyl part Ricci-flat", &select(runs, &CONES, |n| n.ends_with(".weyl.ricci_flat")), 1e-8);
    c.checks("first Bianchi of both parts", &select(runs, &CONES, |n| n.ends_with(".weyl.bianchi") || n.ends_with(".ricci_part.bianchi")), 1e-8);
    c.checks("Ric_[XY] = -R^ℝ (deformed)", &select(runs, &["deformed-cone"], |n| n.ends_with(".ric_antisym")), 1e-8);
    c.checks("R^ℝ nonzero (deformed)", &select(runs, &["deformed-cone"], |n| n == "curvature.cone.r_real_nonzero"), 1e-3);
    c.checks("big/small R^ℝ", &select(runs, &CONES, |n| n == "curvature.r_real.big_small"), 1e-8);
    c.finish(7, "curvature decompositions")
}

fn criterion8(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    suite_errors(&mut c, runs, Suite::Symmetries);
    let on = ["flat-cone", "compact-cone"];
    let names = |ns: &'static [&'static str]| select(runs, &on, move |n| ns.contains(&n));
    c.checks("Killing", &names(&["symmetries.small.killing", "symmetries.cone.generators.killing"]), 1e-8);
    c.checks("moment maps", &names(&["symmetries.small.moment_map", "symmetries.small.decompose"]), 1e-8);
    c.checks("ξ shift, two derivations", &names(&["symmetries.xi_shift", "symmetries.xi_shift.decompose"]), 1e-8);
    c.checks("lift/project", &names(&["symmetries.roundtrip"]), 1e-8);
    c.checks("upstairs certificates", &names(&["symmetries.lift.triholomorphic", "symmetries.lift.dilatation"]), 1e-8);
    c.finish(8, "symmetry suite")
}

fn criterion9() -> bool {
    let mut c = Criterion::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut u = || rng.gen_range(-1.0..1.0);
    let (mut fd_worst, mut exact_worst) = (0.0f64, 0.0f64);
    let h = 1e-5;
    for _ in 0..100 {
        let mut f = || Field { a: [u(), u(), u()], b: [u(), u(), u()], c: u(), e: [u(), u(), u()] };
        let (f, g) = (f(), f());
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        let p = [0.8 * u(), 0.8 * u(), 0.8 * u()];
        let j = f.jet(&variables(&p, 3).unwrap());
        for i in 0..3 {
            let (mut pp, mut pm) = (p, p);
            pp[i] += h;
            pm[i] -= h;
            fd_worst = fd_worst.max(rel(j.d1(i), (f.value(&pp) - f.value(&pm)) / (2.0 * h)));
            let jp = f.jet(&variables(&pp, 2).unwrap());
            let jm = f.jet(&variables(&pm, 2).unwrap());
            for k in 0..3 {
                fd_worst = fd_worst.max(rel(j.d2(i, k), (jp.d1(k) - jm.d1(k)) / (2.0 * h)));
                for l in 0..3 {
                    fd_worst = fd_worst.max(rel(j.d3(i, k, l), (jp.d2(k, l) - jm.d2(k, l)) / (2.0 * h)));
                }
            }
        }
        let x = variables(&p, 3).unwrap();
        let (a, b) = (f.jet(&x), g.jet(&x));
        let ab = &a * &b;
        let s = a.sin();
        let (sv, cv) = (a.value().sin(), a.value().cos());
        for i in 0..3 {
            exact_worst = exact_worst.max((ab.d1(i) - (a.d1(i) * b.value() + a.value() * b.d1(i))).abs());
            exact_worst = exact_worst.max((s.d1(i) - cv * a.d1(i)).abs());
            for k in 0..3 {
                let leib = a.d2(i, k) * b.value() + a.d1(i) * b.d1(k) + a.d1(k) * b.d1(i) + a.value() * b.d2(i, k);
                exact_worst = exact_worst.max((ab.d2(i, k) - leib).abs());
                exact_worst = exact_worst.max((s.d2(i, k) - (-sv * a.d1(i) * a.d1(k) + cv * a.d2(i, k))).abs());
            }
        }
    }
    c.expect(fd_worst < 1e-6, format!("100 fields, orders 1-3 vs central differences: relative {fd_worst:.3e} (< 1e-6)"));
    c.expect(exact_worst < 1e-12, format!("product and chain rules: {exact_worst:.3e} (< 1e-12)"));
    c.finish(9, "derivative substrate")
}

fn bin(args: &[&str]) -> (Output, f64) {
    let t0 = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_quatlike")).args(args).output().expect("binary runs");
    (out, t0.elapsed().as_secs_f64())
}

fn criterion10(runs: &[Run]) -> bool {
    let mut c = Criterion::new();
    let args = ["curvature", "--manifold", "compact-cone", "--points", "20", "--seed", "5"];
    let (a, _) = bin(&args);
    let (b, _) = bin(&args);
    c.expect(!a.stdout.is_empty() && a.stdout == b.stdout, format!("repeated curvature reports identical ({} bytes)", a.stdout.len()));

    let dir = std::env::temp_dir().join(format!("quatlike-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let write = |name: &str, text: &str| -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let garbage = write("garbage.json", "{\"schema\": 1, \"J\": 7}");
    // a constant A over the flat J is not quaternionic
    let broken = write(
        "broken.json",
        r#"{"schema": 1, "n_h": 1, "J": "flat", "A": [[[1.0, []]], [], [], [], [], [], [], [], [], [], [], []], "h": null,
            "k_alpha": "su2-standard", "z0_range": [0.5, 4.0]}"#,
    );
    let (g, b) = (garbage.to_str().unwrap(), broken.to_str().unwrap());
    type Case<'a> = (&'a str, Vec<&'a str>, i32);
    let cases: Vec<Case> = vec![
        ("passing run", vec!["verify-structure", "--points", "3"], 0),
        ("failing check", vec!["verify-structure", "--liftdata", b, "--points", "3"], 1),
        ("usage", vec!["verify-structure", "--bogus"], 2),
        ("unknown manifold", vec!["curvature", "--manifold", "nowhere"], 3),
        ("bad LiftData", vec!["lift", "--liftdata", g], 4),
        ("zero points", vec!["curvature", "--points", "0"], 5),
        ("order too high", vec!["curvature", "--order", "9"], 6),
        ("missing file", vec!["lift", "--liftdata", "/nonexistent/lift.json"], 7),
        ("no LiftData", vec!["lift", "--manifold", "rigid-flat"], 8),
    ];
    for (what, args, want) in &cases {
        let (o, _) = bin(args);
        let got = o.status.code().unwrap_or(-1);
        let clean = *want <= 1 || o.stdout.is_empty();
        c.expect(got == *want && clean, format!("{what}: exit {got} (want {want})"));
    }
    let _ = std::fs::remove_dir_all(&dir);

    let (o, secs) = bin(&["all", "--manifold", "flat-cone", "--nh", "2"]);
    c.expect(o.status.success() && secs < ALL_LIMIT_S, format!("all --manifold flat-cone --nh 2: exit {:?} in {secs:.1} s (< {ALL_LIMIT_S} s)", o.status.code()));
    for r in runs {
        c.expect(r.secs < SUITE_LIMIT_S, format!("{} on {} nh={}: {:.1} s (< {SUITE_LIMIT_S} s)", r.suite.name(), r.manifold, r.n_h, r.secs));
    }
    c.finish(10, "determinism and CLI contract")
}

fn main() {
    let runs = run_suites();
    let results = [
        criterion1(&runs),
        criterion2(&runs),
        criterion3(&runs),
        criterion4(&runs),
        criterion5(&runs),
        criterion6(&runs),
        criterion7(&runs),
        criterion8(&runs),
        criterion9(),
        criterion10(&runs),
    ];
    let failed = results.iter().filter(|r| !**r).count();
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
