//! LiftData JSON, schema 1.
//!
//! ```text
//! {
//!   "schema": 1,
//!   "n_h": 1,
//!   "J": "flat" | {"catalog": "flat-cone"} | <table: 3·n·n, layout [a][X][Y]>,
//!   "A": <table: 3·n, layout [a][X]>,            (optional with a catalog J)
//!   "h": <table: n·n> | null,                    (optional)
//!   "k_alpha": "su2-standard",
//!   "z0_range": [lo, hi],
//!   "half_width": 0.3                            (optional sampling box)
//! }
//! ```
//!
//! A table is a flat array of polynomials in `q`; a polynomial is an array
//! of terms `[coef, [[var, power], ...]]`, so `[[0.5, []], [2.0, [[0, 2]]]]`
//! is `0.5 + 2 q₀²`. With a catalog `J`, the catalog's `A` and `h` are used
//! for any field left out.

use serde_json::Value;

use crate::catalog::{flat_cone, by_name};
use crate::confmap::LiftData;
use crate::error::{Error, Result};
use crate::field::{Chart, Rank, TensorField};
use crate::jet::{min_order, Jet};
use crate::qstruct::HypercomplexTriple;
use crate::quat::flat_j;

type Poly = Vec<(f64, Vec<(usize, u32)>)>;

fn bad(msg: impl Into<String>) -> Error {
    Error::LiftData(msg.into())
}

fn parse_poly(v: &Value, n: usize) -> Result<Poly> {
    let terms = v.as_array().ok_or_else(|| bad("polynomial must be an array of terms"))?;
    terms
        .iter()
        .map(|t| {
            let t = t.as_array().filter(|t| t.len() == 2).ok_or_else(|| bad("term must be [coef, monomial]"))?;
            let c = t[0].as_f64().ok_or_else(|| bad("coefficient must be a number"))?;
            let mono = t[1].as_array().ok_or_else(|| bad("monomial must be an array"))?;
            let mono = mono
                .iter()
                .map(|f| {
                    let f = f.as_array().filter(|f| f.len() == 2).ok_or_else(|| bad("factor must be [var, power]"))?;
                    let var = f[0].as_u64().ok_or_else(|| bad("variable index must be a nonnegative integer"))? as usize;
                    let pw = f[1].as_u64().ok_or_else(|| bad("power must be a nonnegative integer"))? as u32;
                    if var >= n {
                        return Err(bad(format!("variable index {var} out of range for dimension {n}")));
                    }
                    Ok((var, pw))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((c, mono))
        })
        .collect()
}

fn eval_poly(p: &Poly, q: &[Jet]) -> Jet {
    let mut s = Jet::zero(q[0].dim(), min_order(q));
    for (c, mono) in p {
        let mut t = Jet::constant(*c, q[0].dim(), min_order(q));
        for &(v, pw) in mono {
            t = &t * &q[v].powi(pw as i32);
        }
        s += &t;
    }
    s
}

fn parse_table(v: &Value, n: usize, len: usize, rank: Rank, copies: usize, what: &str) -> Result<TensorField> {
    let a = v.as_array().ok_or_else(|| bad(format!("{what} must be an array")))?;
    if a.len() != len {
        return Err(bad(format!("{what} needs {len} components, got {}", a.len())));
    }
    let polys = a.iter().map(|x| parse_poly(x, n)).collect::<Result<Vec<_>>>()?;
    Ok(TensorField::from_expr(n, rank, copies, move |q| polys.iter().map(|p| eval_poly(p, q)).collect()))
}

/// Parses LiftData JSON.
pub fn parse(text: &str) -> Result<LiftData> {
    let v: Value = serde_json::from_str(text).map_err(|e| bad(format!("not JSON: {e}")))?;
    from_value(&v)
}

pub fn from_value(v: &Value) -> Result<LiftData> {
    let o = v.as_object().ok_or_else(|| bad("top level must be an object"))?;
    if o.get("schema").and_then(Value::as_u64) != Some(1) {
        return Err(bad("schema must be 1"));
    }
    let n_h = o
        .get("n_h")
        .and_then(Value::as_u64)
        .filter(|&x| x >= 1)
        .ok_or_else(|| bad("n_h must be a positive integer"))? as usize;
    let n = 4 * n_h;
    match o.get("k_alpha") {
        Some(Value::String(s)) if s == "su2-standard" => {}
        _ => return Err(bad("k_alpha must be \"su2-standard\"")),
    }
    let r = o
        .get("z0_range")
        .and_then(Value::as_array)
        .filter(|r| r.len() == 2)
        .ok_or_else(|| bad("z0_range must be [lo, hi]"))?;
    let (lo, hi) = match (r[0].as_f64(), r[1].as_f64()) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => return Err(bad("z0_range must be increasing numbers")),
    };
    if lo * hi <= 0.0 || lo.abs().min(hi.abs()) < 0.1 {
        return Err(bad("z0_range must stay on one side of the apex with |z0| >= 0.1"));
    }
    let z0_sign = lo.signum();
    let hw = match o.get("half_width") {
        None => 0.3,
        Some(x) => x.as_f64().filter(|&w| w > 0.0 && w < 1.0).ok_or_else(|| bad("half_width must be in (0, 1)"))?,
    };
    let names = (0..n).map(|i| format!("q{i}")).collect();
    let chart = Chart::boxed(names, vec![-hw; n], vec![hw; n]);

    let jv = o.get("J").ok_or_else(|| bad("J missing"))?;
    let base: Option<LiftData> = match jv {
        Value::Object(c) => {
            let name = c.get("catalog").and_then(Value::as_str).ok_or_else(|| bad("J reference must be {\"catalog\": name}"))?;
            let e = by_name(name, n_h).map_err(|_| bad(format!("unknown catalog entry '{name}'")))?;
            Some(e.lift.ok_or_else(|| bad(format!("catalog entry '{name}' has no LiftData")))?)
        }
        _ => None,
    };
    let j = match (jv, &base) {
        (_, Some(b)) => b.j.clone(),
        (Value::String(s), None) if s == "flat" => HypercomplexTriple::constant(n, flat_j(n_h)),
        (Value::Array(_), None) => HypercomplexTriple::new(parse_table(jv, n, 3 * n * n, Rank::ENDO, 3, "J")?),
        _ => return Err(bad("J must be \"flat\", a catalog reference or a table")),
    };
    let a = match (o.get("A"), &base) {
        (Some(x), _) => parse_table(x, n, 3 * n, Rank::COVECTOR, 3, "A")?,
        (None, Some(b)) => b.a.clone(),
        (None, None) => return Err(bad("A missing")),
    };
    let h = match (o.get("h"), &base) {
        (Some(Value::Null), _) => None,
        (Some(x), _) => Some(parse_table(x, n, n * n, Rank::BILINEAR, 1, "h")?),
        (None, Some(b)) => b.h.clone(),
        (None, None) => None,
    };
    Ok(LiftData { n_h, j, a, h, z0_sign, z0_range: (lo, hi), chart })
}

/// LiftData JSON referring to the flat cone, with `A` and `h` from the
/// catalog.
pub fn flat_cone_reference(n_h: usize) -> Result<Value> {
    let f = flat_cone(n_h, false)?;
    let (lo, hi) = f.flat.map(|c| c.z0_range()).unwrap_or((0.5, 2.0));
    Ok(serde_json::json!({
        "schema": 1,
        "n_h": n_h,
        "J": {"catalog": "flat-cone"},
        "k_alpha": "su2-standard",
        "z0_range": [lo, hi],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::values;

    fn minimal(extra: &str) -> String {
        format!(r#"{{"schema": 1, "n_h": 1, "J": "flat", "A": {}, "k_alpha": "su2-standard", "z0_range": [0.5, 2.0]{extra}}}"#,
            serde_json::to_string(&vec![Value::Array(vec![]); 12]).unwrap())
    }

    #[test]
    fn polynomial_tables_evaluate() {
        let mut a = vec![serde_json::json!([]); 12];
        a[1] = serde_json::json!([[0.5, []], [2.0, [[0, 2]]]]);
        let text = serde_json::json!({"schema": 1, "n_h": 1, "J": "flat", "A": a,
            "k_alpha": "su2-standard", "z0_range": [0.5, 2.0]}).to_string();
        let l = parse(&text).unwrap();
        let v = values(&l.a.eval(&[0.3, 0.0, 0.0, 0.0], 0).unwrap());
        assert!((v[1] - (0.5 + 2.0 * 0.09)).abs() < 1e-15);
        assert_eq!(v[0], 0.0);
        assert!(l.h.is_none());
    }

    #[test]
    fn schema_violations_are_rejected() {
        assert!(parse(&minimal("")).is_ok());
        for bad_text in [
            "not json".to_string(),
            minimal("").replace("\"schema\": 1", "\"schema\": 2"),
            minimal("").replace("su2-standard", "other"),
            minimal("").replace("[0.5, 2.0]", "[-1.0, 2.0]"),
            minimal(", \"half_width\": 3"),
            minimal("").replace("\"J\": \"flat\"", "\"J\": 3"),
        ] {
            assert!(matches!(parse(&bad_text), Err(Error::LiftData(_))), "{bad_text}");
        }
    }

    #[test]
    fn catalog_reference_takes_catalog_fields() {
        let l = from_value(&flat_cone_reference(1).unwrap()).unwrap();
        let c = flat_cone(1, false).unwrap().lift.unwrap();
        let q = [0.1, -0.2, 0.05, 0.0];
        let d = values(&l.a.eval(&q, 0).unwrap()).iter().zip(values(&c.a.eval(&q, 0).unwrap())).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert_eq!(d, 0.0);
        assert!(l.h.is_some());
    }
}
