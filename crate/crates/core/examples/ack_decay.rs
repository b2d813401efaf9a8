//! Oscillatory integrals along the curve against the H-functional decay.

use nearcurve::fourier;
use nearcurve::geometry;
use nearcurve::{Curve, SmoothWeights};

fn main() -> nearcurve::Result<()> {
    let curve = Curve::moment(3)?;
    let w = SmoothWeights::minus();
    let mut worst: f64 = 0.0;
    for xi in geometry::xi_corpus(3, 40, 1e4, 7) {
        let h = geometry::h_functional(&curve, &xi);
        let i = fourier::curve_integral(&curve, &xi, &w, 1e-10)?.norm();
        let ratio = i * (1.0 + h.value);
        worst = worst.max(ratio);
        let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        println!("|xi| = {norm:>10.1}  H = {:>8.3}  |I| = {i:.3e}  |I|(1+H) = {ratio:.3}", h.value);
    }
    println!("largest |I|(1+H) = {worst:.3}");

    // Along the slow direction e_3 the decay is only |xi|^{-1/3}.
    for s in [1e2, 1e3, 1e4] {
        let xi = [0.0, 0.0, s];
        let (abs, decay) = geometry::ack_check(&curve, &xi, &w, 1e-10)?;
        println!("xi = (0, 0, {s:e}): |I| = {abs:.3e}, (1+H)^-1 = {decay:.3e}");
    }
    Ok(())
}
