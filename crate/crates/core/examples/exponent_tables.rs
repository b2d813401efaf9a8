//! Exact exponent tables and the error envelope.

use nearcurve::bounds;

fn main() -> nearcurve::Result<()> {
    for n in 3..=8 {
        let t = bounds::exponent_table(n)?;
        let kappa: Vec<String> = t.kappa.iter().map(|k| k.to_string()).collect();
        println!("n = {n}: Theta = {}, beta = {}, kappa = [{}]", t.theta, t.beta, kappa.join(", "));
    }
    println!("{}", serde_json::to_string(&bounds::exponent_table(3)?)?);

    let nu = 0.05;
    for q in [1e4f64, 1e5, 1e6] {
        let beta = bounds::to_f64(bounds::beta_closed(3));
        let delta = q.powf(-beta + nu);
        println!("q = {q:e}, delta = {delta:.4}: E = {:.4}", bounds::envelope(3, q, delta));
    }
    Ok(())
}
