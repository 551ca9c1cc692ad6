//! User LiftData from JSON. The catalog reference lifts to an integrable
//! cone; a flat J with an arbitrary constant triplet A⃗ does not, and the
//! lifted Nijenhuis tensor says so.

use quatlike::catalog::from_lift_data;
use quatlike::liftjson::parse;
use quatlike::suite::{run, Config, Suite};
use serde_json::json;

fn report(label: &str, text: &str) -> quatlike::Result<()> {
    let e = from_lift_data(parse(text)?);
    let t = run(Suite::Lift, &e, &Config { points: 20, ..Config::default() })?;
    println!("{label}");
    for c in &t.checks {
        println!("  {:<24} {:.2e}  {}", c.name, c.worst, if c.pass() { "pass" } else { "FAIL" });
    }
    Ok(())
}

fn main() -> quatlike::Result<()> {
    let reference = json!({
        "schema": 1,
        "n_h": 1,
        "J": {"catalog": "flat-cone"},
        "h": null,
        "k_alpha": "su2-standard",
        "z0_range": [0.5, 2.0],
    });
    report("catalog reference", &reference.to_string())?;

    let mut a = vec![json!([]); 12];
    a[0] = json!([[0.2, []]]);
    a[5] = json!([[-0.1, []], [0.3, [[2, 1]]]]);
    let arbitrary = json!({
        "schema": 1,
        "n_h": 1,
        "J": "flat",
        "A": a,
        "k_alpha": "su2-standard",
        "z0_range": [0.5, 2.0],
    });
    report("flat J, arbitrary A", &arbitrary.to_string())
}
