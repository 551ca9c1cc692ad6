//! Run a verification suite and print the JSON report.

use quatlike::catalog::by_name;
use quatlike::report::{to_string, Header};
use quatlike::suite::{run, Config, Suite};

fn main() -> quatlike::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "compact-cone".into());
    let e = by_name(&name, 1)?;
    let cfg = Config { points: 10, ..Config::default() };
    let t = run(Suite::Curvature, &e, &cfg)?;
    let h = Header {
        subcommand: Suite::Curvature.name().into(),
        manifold: e.name.clone(),
        params: e.params.clone(),
        seed: cfg.seed,
        tolerance: cfg.tol,
        points: cfg.points,
        order: cfg.order,
    };
    print!("{}", to_string(&h, &t));
    Ok(())
}
