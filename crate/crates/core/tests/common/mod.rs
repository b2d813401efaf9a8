//! Frozen constants shared by the integration and acceptance tests.
//!
//! Each fitted constant carries a 2× margin over the largest (or half the
//! smallest) value observed on its corpus. Re-fit by running the acceptance
//! target, which prints the observed values next to the frozen ones.
#![allow(dead_code)]

use nearcurve::Curve;

/// Agreement factor between the Euclidean oracle and the graph count.
pub const ORACLE_FACTOR: f64 = 2.0;

/// `|fourier − smooth| / (δ^{n−1} q)` gate.
pub const POISSON_REL_TOL: f64 = 1e-2;
pub const POISSON_EPS: f64 = 0.4;
pub const POISSON_TOL: f64 = 1e-8;

/// ACK constant per curve (observed 3.41 for n = 3, 4.42 for n = 4).
pub const ACK_C_FIT_N3: f64 = 7.0;
pub const ACK_C_FIT_N4: f64 = 9.0;
/// Largest allowed change of the ACK constant on held-out samples.
pub const ACK_REFIT_FACTOR: f64 = 2.0;

/// Lower bound for `H(ξ)/(1+|ξ|)^{1/n}` (observed 0.676 for n = 3, 0.817 for n = 4).
pub const H_FLOOR_N3: f64 = 0.33;
pub const H_FLOOR_N4: f64 = 0.40;
/// Relative change of the floor under doubling the t-grid.
pub const H_GRID_STABILITY: f64 = 0.01;

/// Size and bound of the ξ corpora.
pub const CORPUS_SIZE: usize = 1000;
pub const CORPUS_MAX_NORM: f64 = 1e5;
pub const CORPUS_SEED_FIT: u64 = 1;
pub const CORPUS_SEED_HELD: u64 = 2;

/// Main-term ratio bracket `c_up / c_low`.
pub const LOWER_SPREAD: f64 = 10.0;

/// Upper-bound constant per curve (observed 5.58 for n = 3, 3.49 for n = 4).
pub const C_UP_N3: f64 = 12.0;
pub const C_UP_N4: f64 = 8.0;

/// Witness constant (observed 0.365 on the q ∈ {4, 8}, R ∈ {8, 16} corpus).
pub const CONTAINMENT_C: f64 = 1.0;

/// `#𝓛_σ(T) ≤ C R ∏ T_r` (observed 943 at T = (1, 1)).
pub const CONE_C: f64 = 2000.0;

/// `H(q; 𝐣) ≥ c (q|𝐣|)^{1/3}` on shells (observed 0.975).
pub const SHELL_FLOOR_C: f64 = 0.45;

pub fn moment(n: usize) -> Curve {
    Curve::moment(n).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
