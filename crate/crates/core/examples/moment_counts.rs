//! Sharp counts near the twisted cubic, with the Euclidean oracle and the
//! smoothed count side by side.

use nearcurve::counting;
use nearcurve::{Curve, SmoothWeights};

fn main() -> nearcurve::Result<()> {
    let curve = Curve::moment(3)?;
    let w = SmoothWeights::minus();
    println!("{:>6} {:>6} {:>10} {:>10} {:>12}", "q", "delta", "exact", "oracle", "smooth");
    for q in [10u64, 20, 40] {
        for delta in [0.05, 0.1, 0.2] {
            let exact = counting::count_exact(&curve, q, delta)?;
            let oracle = counting::count_euclidean_oracle(&curve, q, delta)?;
            let smooth = counting::count_smooth(&curve, q, delta, &w)?;
            println!(
                "{q:>6} {delta:>6} {:>10} {:>10} {:>12.4}",
                exact.value, oracle.value, smooth.value
            );
        }
    }
    // rational points with denominator at most Q
    let big_q = 30;
    println!("N_rat(Q = {big_q}, delta = 0.1) = {}", counting::count_rational(&curve, big_q, 0.1)?);
    Ok(())
}
