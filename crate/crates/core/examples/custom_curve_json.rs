//! Build a curve from a JSON description with rational coefficients.

use nearcurve::counting;
use nearcurve::Curve;

const SPEC: &str = r#"{
  "name": "sheared cubic",
  "n": 3,
  "coeffs": [[0, 0, 1], [0, "1/3", "1/2", 1]],
  "domain": [-1, 1]
}"#;

fn main() -> nearcurve::Result<()> {
    let curve = Curve::from_json(SPEC)?;
    println!("{}: n = {}, min |W| = {:.4}", curve.name(), curve.n(), curve.min_wronskian());
    for q in [6u64, 12, 24] {
        let c = counting::count_exact(&curve, q, 0.1)?;
        println!("q = {q:>3}: N = {} on curve = {}", c.value, counting::count_on_curve(&curve, q));
    }
    match Curve::from_json(r#"{"n": 3, "coeffs": [[0, 0, 1], [0, 0, 1]]}"#) {
        Ok(_) => println!("unexpected: degenerate curve accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
