//! Rebuild the smoothed count from its Fourier expansion and compare with
//! the direct sum.

use nearcurve::counting;
use nearcurve::fourier;
use nearcurve::{Curve, SmoothWeights};

fn main() -> nearcurve::Result<()> {
    let curve = Curve::moment(3)?;
    let w = SmoothWeights::minus();
    let (q, delta) = (5, 0.2);
    let direct = counting::count_smooth(&curve, q, delta, &w)?.value;
    for eps in [0.4, 1.0, 1.3] {
        let d = fourier::fourier_count(&curve, q, delta, eps, &w, 1e-8)?;
        println!(
            "eps = {eps}: main {:.5} + error {:.5} = {:.5}, direct {direct:.5}, |diff| {:.2e} <= {:.2e} ({} frequencies)",
            d.main_term,
            d.error_sum,
            d.total,
            (d.total - direct).abs(),
            d.allowed_discrepancy(),
            d.frequencies
        );
    }
    Ok(())
}
