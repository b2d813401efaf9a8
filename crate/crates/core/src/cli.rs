//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{self, Mode, VerifyOptions};
use crate::counting::{self, CountResult};
use crate::curve::Curve;
use crate::error::{invalid, Error, Result};
use crate::fourier::{self, FourierOptions, FrequencySet};
use crate::geometry;
use crate::weights::{Kind, SmoothWeights};

/// Environment variable read for the default thread count.
pub const THREADS_ENV: &str = "NEARCURVE_THREADS";

/// Exit status for a failed verdict.
pub const EXIT_VERDICT: i32 = 2;
/// Exit status for bad input or a runtime error.
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "nearcurve", version, about = "Integral points near nondegenerate polynomial curves")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write data here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Seed for randomized corpora.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Moment curve (t, t², …, tⁿ).
    #[arg(long, conflicts_with = "curve")]
    pub moment: Option<usize>,
    /// JSON curve file.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

impl CurveArgs {
    pub fn load(&self) -> Result<Curve> {
        match (&self.moment, &self.curve) {
            (Some(n), None) => Curve::moment(*n),
            (None, Some(p)) => Curve::from_path(p),
            _ => invalid("give exactly one of --moment or --curve"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountMethod {
    Exact,
    Oracle,
    Smooth,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count lattice points near qM.
    Count {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
        #[arg(long, value_enum, default_value = "exact")]
        method: CountMethod,
        /// Weight pair for the smooth count.
        #[arg(long, default_value = "minus")]
        weights: Kind,
    },
    /// Sum of exact counts over q ≤ Q.
    Rational {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long = "big-q")]
        big_q: u64,
        #[arg(long)]
        delta: f64,
    },
    /// Fourier-side evaluation of the smoothed count.
    Fourier {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.4)]
        eps: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value = "minus")]
        weights: Kind,
        /// Per-frequency ledger CSV.
        #[arg(long)]
        ledger: Option<PathBuf>,
    },
    /// The H-functional at one frequency or over a seeded corpus.
    Hfunc {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        xi: Option<Vec<f64>>,
        #[arg(long, conflicts_with = "xi")]
        corpus: Option<usize>,
        #[arg(long, default_value_t = 1e5)]
        max_norm: f64,
    },
    /// Oscillatory integrals against (1 + H)^{-1} over a seeded corpus.
    Ack {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value_t = 1000)]
        corpus: usize,
        #[arg(long, default_value_t = 1e5)]
        max_norm: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = "minus")]
        weights: Kind,
    },
    /// Sublevel sets of H(q; ·) on a dyadic shell.
    Levelsets {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        q: u64,
        #[arg(long = "R")]
        r: f64,
        /// One λ class; all nonempty classes if omitted.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = geometry::DEFAULT_FLOOR_C)]
        floor_c: f64,
    },
    /// Lattice points near the cone over the dual curve.
    Cone {
        #[command(flatten)]
        curve: CurveArgs,
        /// Box radii T₀,…,T_{n−2}.
        #[arg(long = "T", value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Θ, β and κ in exact rationals.
    Exponents {
        #[arg(long)]
        n: usize,
    },
    /// The error envelope on a (q, δ) grid.
    Envelope {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
    },
    /// Upper or lower bound harness.
    Verify {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        #[arg(long, default_value_t = 0.05)]
        nu: f64,
        #[arg(long, default_value = "lower")]
        mode: Mode,
        #[arg(long, default_value_t = bounds::DEFAULT_C_UP)]
        c_up: f64,
        #[arg(long, default_value_t = bounds::DEFAULT_C_LOW)]
        c_low: f64,
    },
    /// Cartesian (q, δ) sweep of a counter.
    Sweep {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        delta: Vec<f64>,
        #[arg(long, value_enum, default_value = "exact")]
        method: CountMethod,
        #[arg(long, default_value = "minus")]
        weights: Kind,
    },
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => EXIT_VERDICT,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Runs a parsed command; `Ok(false)` signals a failed verdict.
pub fn run(cli: &Cli) -> Result<bool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return invalid("--threads must be positive");
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let ok = pool.install(|| dispatch(cli, &mut buf))?;
    match &cli.output {
        Some(p) => File::create(p)?.write_all(&buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(ok)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return invalid(format!("--{name} must be positive, got {v}"));
    }
    Ok(())
}

fn json_out<T: Serialize>(v: &T, out: &mut Vec<u8>) -> Result<()> {
    serde_json::to_writer(&mut *out, v)?;
    out.push(b'\n');
    Ok(())
}

fn count_one(curve: &Curve, q: u64, delta: f64, method: CountMethod, weights: Kind) -> Result<CountResult> {
    match method {
        CountMethod::Exact => counting::count_exact(curve, q, delta),
        CountMethod::Oracle => counting::count_euclidean_oracle(curve, q, delta),
        CountMethod::Smooth => counting::count_smooth(curve, q, delta, &SmoothWeights::new(weights, weights)),
    }
}

fn emit_counts(rows: &[CountResult], format: Format, out: &mut Vec<u8>) -> Result<()> {
    match format {
        Format::Csv => counting::write_counts_csv(rows, out),
        Format::Json => json_out(&rows, out),
    }
}

#[derive(Serialize)]
struct HRow {
    xi: Vec<f64>,
    h: f64,
    argmin_t: f64,
    argmax_r: usize,
}

#[derive(Serialize)]
struct AckRow {
    xi: Vec<f64>,
    integral_abs: f64,
    bound: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct EnvelopeRow {
    n: usize,
    q: f64,
    delta: f64,
    envelope: f64,
}

#[derive(Serialize)]
struct RationalRow {
    n: usize,
    big_q: u64,
    delta: f64,
    n_rat: u64,
}

fn dispatch(cli: &Cli, out: &mut Vec<u8>) -> Result<bool> {
    let fmt = cli.format.unwrap_or(Format::Csv);
    match &cli.command {
        Command::Count {
            curve,
            q,
            delta,
            method,
            weights,
        }
        | Command::Sweep {
            curve,
            q,
            delta,
            method,
            weights,
        } => {
            let c = curve.load()?;
            for &d in delta {
                check_positive("delta", d)?;
            }
            let mut rows = Vec::new();
            for &qq in q {
                for &d in delta {
                    log::info!("count q = {qq}, delta = {d}");
                    rows.push(count_one(&c, qq, d, *method, *weights)?);
                }
            }
            emit_counts(&rows, fmt, out)?;
            Ok(true)
        }
        Command::Rational { curve, big_q, delta } => {
            let c = curve.load()?;
            let row = RationalRow {
                n: c.n(),
                big_q: *big_q,
                delta: *delta,
                n_rat: counting::count_rational(&c, *big_q, *delta)?,
            };
            match fmt {
                Format::Json => json_out(&row, out)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    w.write_record(["n", "Q", "delta", "N_rat"])?;
                    w.write_record([row.n.to_string(), row.big_q.to_string(), row.delta.to_string(), row.n_rat.to_string()])?;
                    w.flush()?;
                }
            }
            Ok(true)
        }
        Command::Fourier {
            curve,
            q,
            delta,
            eps,
            tol,
            weights,
            ledger,
        } => {
            let c = curve.load()?;
            check_positive("tol", *tol)?;
            let wts = SmoothWeights::new(*weights, *weights);
            let mut opts = FourierOptions::new(*tol);
            opts.ledger = ledger.is_some();
            let dec = fourier::fourier_count_with(&c, *q, *delta, *eps, &wts, &opts)?;
            let direct = counting::count_smooth(&c, *q, *delta, &wts)?.value;
            if let (Some(path), Some(entries)) = (ledger, &dec.per_frequency) {
                fourier::write_ledger_csv(&c, *q, entries, geometry::DEFAULT_FLOOR_C, File::create(path)?)?;
            }
            #[derive(Serialize)]
            struct Out<'a> {
                #[serde(flatten)]
                dec: &'a fourier::FourierDecomposition,
                smooth_direct: f64,
                discrepancy: f64,
            }
            let row = Out {
                dec: &dec,
                smooth_direct: direct,
                discrepancy: (dec.total - direct).abs(),
            };
            match fmt {
                Format::Json => json_out(&row, out)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    w.write_record([
                        "n", "q", "delta", "eps", "main_term", "error_sum", "total", "smooth_direct", "tail_bound",
                        "frequencies",
                    ])?;
                    w.write_record([
                        dec.n.to_string(),
                        dec.q.to_string(),
                        dec.delta.to_string(),
                        dec.eps.to_string(),
                        dec.main_term.to_string(),
                        dec.error_sum.to_string(),
                        dec.total.to_string(),
                        direct.to_string(),
                        dec.tail_bound.to_string(),
                        dec.frequencies.to_string(),
                    ])?;
                    w.flush()?;
                }
            }
            Ok(true)
        }
        Command::Hfunc {
            curve,
            xi,
            corpus,
            max_norm,
        } => {
            let c = curve.load()?;
            let xis = match (xi, corpus) {
                (Some(x), None) => {
                    if x.len() != c.n() {
                        return invalid(format!("--xi needs {} components", c.n()));
                    }
                    vec![x.clone()]
                }
                (None, Some(m)) => geometry::xi_corpus(c.n(), *m, *max_norm, cli.seed),
                _ => return invalid("give --xi or --corpus"),
            };
            let rows: Vec<HRow> = xis
                .iter()
                .map(|x| {
                    let h = geometry::h_functional(&c, x);
                    HRow {
                        xi: x.clone(),
                        h: h.value,
                        argmin_t: h.argmin_t,
                        argmax_r: h.argmax_r,
                    }
                })
                .collect();
            match fmt {
                Format::Json => json_out(&rows, out)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    let mut header: Vec<String> = (1..=c.n()).map(|i| format!("xi{i}")).collect();
                    header.extend(["H", "argmin_t", "argmax_r"].map(String::from));
                    w.write_record(&header)?;
                    for r in &rows {
                        let mut rec: Vec<String> = r.xi.iter().map(|v| v.to_string()).collect();
                        rec.extend([r.h.to_string(), r.argmin_t.to_string(), r.argmax_r.to_string()]);
                        w.write_record(&rec)?;
                    }
                    w.flush()?;
                }
            }
            Ok(true)
        }
        Command::Ack {
            curve,
            corpus,
            max_norm,
            tol,
            weights,
        } => {
            let c = curve.load()?;
            let wts = SmoothWeights::new(*weights, *weights);
            let xis = geometry::xi_corpus(c.n(), *corpus, *max_norm, cli.seed);
            use rayon::prelude::*;
            let rows: Vec<AckRow> = xis
                .par_iter()
                .map(|x| {
                    geometry::ack_check(&c, x, &wts, *tol).map(|(a, b)| AckRow {
                        xi: x.clone(),
                        integral_abs: a,
                        bound: b,
                        ratio: a / b,
                    })
                })
                .collect::<Result<_>>()?;
            let cfit = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
            log::info!("ack: max ratio {cfit}");
            match fmt {
                Format::Json => json_out(&rows, out)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    let mut header: Vec<String> = (1..=c.n()).map(|i| format!("xi{i}")).collect();
                    header.extend(["integral_abs", "bound", "ratio"].map(String::from));
                    w.write_record(&header)?;
                    for r in &rows {
                        let mut rec: Vec<String> = r.xi.iter().map(|v| v.to_string()).collect();
                        rec.extend([r.integral_abs.to_string(), r.bound.to_string(), r.ratio.to_string()]);
                        w.write_record(&rec)?;
                    }
                    w.flush()?;
                }
            }
            Ok(true)
        }
        Command::Levelsets {
            curve,
            q,
            r,
            lambda,
            delta,
            eps,
            floor_c,
        } => {
            let c = curve.load()?;
            check_positive("R", *r)?;
            let fs = FrequencySet::new(&c, *q, *delta, *eps)?;
            let reports = match lambda {
                Some(l) => vec![geometry::level_set_enumerate(&c, *q, *r, *l, &fs)?],
                None => geometry::level_sets_for_shell(&c, *q, *r, &fs, *floor_c)?,
            };
            let ok = reports
                .iter()
                .all(|rep| geometry::containment_check(&c, rep, geometry::DEFAULT_CONTAINMENT_C));
            match fmt {
                Format::Json => json_out(&reports, out)?,
                Format::Csv => geometry::write_level_sets_csv(c.n(), &reports, out)?,
            }
            Ok(ok)
        }
        Command::Cone { curve, t, sigma } => {
            let c = curve.load()?;
            let nb = geometry::cone_members(&c, t, *sigma)?;
            log::info!("cone: {} members, R·ΠT = {}", nb.count(), nb.volume_scale());
            match fmt {
                Format::Json => json_out(&nb, out)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    let header: Vec<String> = (1..=c.n()).map(|i| format!("b{i}")).collect();
                    w.write_record(&header)?;
                    for m in &nb.lattice_members {
                        w.write_record(m.iter().map(|v| v.to_string()))?;
                    }
                    w.flush()?;
                }
            }
            Ok(true)
        }
        Command::Exponents { n } => {
            let t = bounds::exponent_table(*n)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => json_out(&t, out)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    w.write_record(["n", "d", "kappa", "theta", "beta"])?;
                    for (d, k) in t.kappa.iter().enumerate() {
                        w.write_record([
                            t.n.to_string(),
                            (d + 1).to_string(),
                            k.to_string(),
                            t.theta.to_string(),
                            t.beta.to_string(),
                        ])?;
                    }
                    w.flush()?;
                }
            }
            Ok(t.identities_hold())
        }
        Command::Envelope { n, q, delta } => {
            if *n < 3 {
                return invalid("--n must be at least 3");
            }
            let mut rows = Vec::new();
            for &qq in q {
                check_positive("q", qq)?;
                for &d in delta {
                    check_positive("delta", d)?;
                    rows.push(EnvelopeRow {
                        n: *n,
                        q: qq,
                        delta: d,
                        envelope: bounds::envelope(*n, qq, d),
                    });
                }
            }
            match fmt {
                Format::Json => json_out(&rows, out)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(out);
                    for r in &rows {
                        w.serialize(r)?;
                    }
                    w.flush()?;
                }
            }
            Ok(true)
        }
        Command::Verify {
            curve,
            q,
            nu,
            mode,
            c_up,
            c_low,
        } => {
            let c = curve.load()?;
            let opts = VerifyOptions {
                c_up: *c_up,
                c_low: *c_low,
            };
            let rep = bounds::verify_theorem_with(&c, q, *nu, *mode, &opts)?;
            log::info!("verify: c1 = {}, c2 = {}, C_up fit = {}, q0 = {:?}", rep.c1, rep.c2, rep.c_up_fit, rep.q0);
            match fmt {
                Format::Json => json_out(&rep, out)?,
                Format::Csv => rep.write_csv(&mut *out)?,
            }
            Ok(rep.passed())
        }
    }
}
