//! Frenet frame, curvatures and the dual curve G of the moment curve in R^4.

use nearcurve::Curve;

fn main() -> nearcurve::Result<()> {
    let curve = Curve::moment(4)?;
    println!("min |W| = {:.4}, min |e_nn| = {:.4}", curve.min_wronskian(), curve.min_last_frenet());
    for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let f = curve.frenet_at(t)?;
        let res = curve.frenet_serret_residual(t, 1e-4)?;
        println!("t = {t:>5}: kappa~ = {:.4?}, G = {:.4?}, Frenet-Serret residual {res:.1e}", f.kappa_tilde, f.big_g);
        let jet = curve.dual_jet(t, 2)?;
        println!("         G' = {:.4?}, G'' = {:.4?}, dual Wronskian {:.4}", jet[1], jet[2], curve.dual_wronskian(t)?);
    }
    Ok(())
}
