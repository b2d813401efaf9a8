//! Split a dyadic shell of frequencies into H level sets and check that each
//! class sits in the predicted box around the dual curve.

use nearcurve::fourier::FrequencySet;
use nearcurve::geometry;
use nearcurve::Curve;

fn main() -> nearcurve::Result<()> {
    let curve = Curve::moment(3)?;
    let q = 8;
    let fs = FrequencySet::new(&curve, q, 0.25, 1.0)?;
    for r in [8.0, 16.0] {
        let reports = geometry::level_sets_for_shell(&curve, q, r, &fs, geometry::DEFAULT_FLOOR_C)?;
        for rep in &reports {
            println!(
                "R = {r:>4}  lambda = {:>8.3}  members = {:>5}  contained = {}  C = {:.3}",
                rep.lambda,
                rep.cardinality,
                geometry::containment_check(&curve, rep, geometry::DEFAULT_CONTAINMENT_C),
                geometry::containment_constant(&curve, rep)
            );
        }
    }
    Ok(())
}
