//! Upper and lower sweeps of the main theorem at desk scale.

use nearcurve::bounds::{self, Mode};
use nearcurve::Curve;

fn main() -> nearcurve::Result<()> {
    let curve = Curve::moment(3)?;
    let qs = [1_000, 10_000, 100_000];
    for mode in [Mode::Lower, Mode::Upper] {
        let rep = bounds::verify_theorem(&curve, &qs, 0.05, mode)?;
        println!("{mode:?}: passed = {}, fitted C_up = {:.3}", rep.passed(), rep.c_up_fit);
        for row in rep.rows.iter().take(6) {
            println!(
                "  q = {:>7} delta = {:.4} N = {:>9} N/(delta^2 q) = {:.3}",
                row.q, row.delta, row.n_exact, row.main_ratio
            );
        }
    }
    Ok(())
}
