//! Lattice points in neighbourhoods of the slow-decay cone.

use nearcurve::geometry;
use nearcurve::Curve;

fn main() -> nearcurve::Result<()> {
    let curve = Curve::moment(3)?;
    for t in [[1.0, 1.0], [4.0, 1.0], [8.0, 2.0]] {
        let nb = geometry::cone_members(&curve, &t, 1.0)?;
        println!(
            "T = {t:?}: {} points, R = {:.1}, count/(R prod T) = {:.1}",
            nb.count(),
            nb.r,
            nb.count() as f64 / nb.volume_scale()
        );
    }
    let vol = geometry::cone_volume_mc(&curve, &[8.0, 2.0], 1.0, 200_000, 3)?;
    println!("Monte Carlo volume for T = [8, 2]: {vol:.0}");
    Ok(())
}
