use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use plat_core::beta_zeta::*;
use plat_core::dependence::*;
use plat_core::enumeration::*;
use plat_core::error::PlatError;
use plat_core::plancherel::*;
use plat_core::spherical::*;
use plat_core::suites::{dependence_chain, run_suite, SuiteConfig};
use plat_core::{Signature, VerificationReport};

#[derive(Parser)]
#[command(
    name = "plat",
    about = "Lattice harmonic analysis over Q_p: verification front end"
)]
struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    /// Attach wall-clock time to every report.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Macdonald,
    Orbit,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum DependRoute {
    Field,
    Gram,
    Both,
}

#[derive(Subcommand)]
enum Cmd {
    /// Orbit size of a signature.
    Nu {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        /// Also enumerate the orbit and compare.
        #[arg(long)]
        exact: bool,
    },
    /// Lattices of a given relative position to O^n.
    Orbit {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        #[arg(long)]
        list: bool,
    },
    /// Spherical function at λ = i s.
    Phi {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        #[arg(long, value_enum, default_value = "both")]
        route: Route,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    Beta {
        #[command(subcommand)]
        cmd: VerifyOnly<BetaArgs>,
    },
    /// Gram matrix of K_α over the box.
    Gram {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long = "box", default_value_t = 1)]
        radius: i64,
        /// Report PSD evidence (or a witness for disallowed α) instead of the matrix.
        #[arg(long)]
        eig: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    Zeta {
        #[command(subcommand)]
        cmd: ZetaCmd,
    },
    Plancherel {
        #[command(subcommand)]
        cmd: VerifyOnly<PlancherelArgs>,
    },
    Continuation {
        #[command(subcommand)]
        cmd: VerifyOnly<ContinuationArgs>,
    },
    /// Degenerate Plancherel measure at integer α in [0, n-1].
    Degenerate {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long)]
        alpha: usize,
        #[arg(long, allow_hyphen_values = true)]
        k: String,
        #[arg(long, default_value_t = 48)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    Depend {
        #[command(subcommand)]
        cmd: VerifyOnly<DependArgs>,
    },
    /// Run a named suite: lattice, enumeration, spherical, beta, plancherel, continuation,
    /// degenerate, dependence, zeta or all.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum VerifyOnly<A: Args> {
    Verify(A),
}

#[derive(Args)]
struct BetaArgs {
    #[arg(long, default_value_t = 2)]
    p: u64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Vec<f64>,
    #[arg(long = "box", default_value_t = 4)]
    radius: i64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Also compare against the exact rational closed form (integer parameters).
    #[arg(long)]
    exact: bool,
}

#[derive(Subcommand)]
enum ZetaCmd {
    /// Box sum over sublattices of O^n against the Euler product.
    Tamagawa {
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma: Vec<f64>,
        #[arg(long = "box", default_value_t = 6)]
        radius: i64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// n = 1 beta factors as Euler factors of ζ quotients.
    Rational {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2,3")]
        p: Vec<u64>,
        #[arg(long = "box", default_value_t = 8)]
        radius: i64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Args)]
struct PlancherelArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    k: String,
    #[arg(long, default_value_t = 48)]
    grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct ContinuationArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    k: String,
    #[arg(long, default_value_t = 48)]
    grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct DependArgs {
    #[arg(long, default_value_t = 2)]
    p: u64,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, value_enum, default_value = "both")]
    route: DependRoute,
}

#[derive(Args)]
struct RunArgs {
    suite: String,
    /// JSON file with the same keys as the flags below.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long = "box")]
    radius: Option<i64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

enum Output {
    Reports(Vec<VerificationReport>),
    Value(Value),
}

fn usage(msg: String) -> PlatError {
    PlatError::Domain(msg)
}

fn signature(k: &str, n: Option<usize>) -> Result<Signature, PlatError> {
    let s: Signature = k.parse()?;
    match n {
        Some(n) if n != s.n() => Err(usage(format!("--k has {} entries but --n is {}", s.n(), n))),
        _ => Ok(s),
    }
}

fn prime(p: u64) -> Result<u64, PlatError> {
    if plat_core::lattice::is_prime(p) {
        Ok(p)
    } else {
        Err(PlatError::NotPrime(p))
    }
}

fn grids(top: usize) -> Vec<usize> {
    let mut g: Vec<usize> = [top / 3, 2 * top / 3, top]
        .into_iter()
        .filter(|x| *x >= 4)
        .collect();
    g.dedup();
    g
}

fn execute(cmd: Cmd, timings: bool) -> Result<Output, PlatError> {
    Ok(match cmd {
        Cmd::Nu { p, k, exact } => {
            let p = prime(p)?;
            let k = signature(&k, None)?;
            let nu = nu_closed_form(&k, p)?;
            if exact {
                let brute = orbit_of_signature(&k, p)?.len();
                let equal = nu == brute.into();
                Output::Reports(vec![VerificationReport::exact(
                    "orbit-count",
                    equal,
                    brute as f64,
                    brute as f64,
                )
                .param("p", p)
                .param("k", k.to_string())
                .with_meta("closed_form", nu.to_string())])
            } else {
                Output::Value(json!({"p": p, "k": k.to_string(), "nu": nu.to_string()}))
            }
        }
        Cmd::Orbit { p, k, list } => {
            let p = prime(p)?;
            let k = signature(&k, None)?;
            let orbit = orbit_of_signature(&k, p)?;
            if list {
                Output::Value(Value::from(
                    orbit.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
                ))
            } else {
                Output::Value(json!({"p": p, "k": k.to_string(), "size": orbit.len()}))
            }
        }
        Cmd::Phi {
            p,
            k,
            s,
            route,
            tol,
        } => {
            let k = signature(&k, None)?;
            if s.len() != k.n() {
                return Err(usage("--s and --k must have the same length".into()));
            }
            let l = SpectralPoint::imaginary(&s);
            let cval = |z: Complex64| json!([z.re, z.im]);
            match route {
                Route::Macdonald => Output::Value(
                    json!({"route": "macdonald", "phi": cval(phi_macdonald(&k, &l, p as f64)?)}),
                ),
                Route::Orbit => Output::Value(
                    json!({"route": "orbit", "phi": cval(phi_orbit_average(&k, &l, p)?)}),
                ),
                Route::Both => {
                    let a = phi_macdonald(&k, &l, p as f64)?;
                    let b = phi_orbit_average(&k, &l, p)?;
                    Output::Reports(vec![VerificationReport::compare(
                        "spherical-routes",
                        a,
                        b,
                        tol,
                    )
                    .param("p", p)
                    .param("k", k.to_string())
                    .param("s", format!("{:?}", s))])
                }
            }
        }
        Cmd::Beta {
            cmd: VerifyOnly::Verify(a),
        } => {
            if a.alpha.len() != a.beta.len() || a.alpha.is_empty() {
                return Err(usage(
                    "--alpha and --beta need the same nonzero length".into(),
                ));
            }
            let n = a.alpha.len();
            let params = BetaParams::real(&a.alpha, &a.beta)?;
            let t = beta_truncated(&params, &BoxSpec::new(n, a.p, a.radius)?)?;
            let closed = beta_closed_form(&params, a.p as f64)?;
            let mut r = VerificationReport::compare("beta-identity", t.value, closed, a.tol)
                .param("n", n)
                .param("p", a.p)
                .param("box", a.radius)
                .param("alpha", format!("{:?}", a.alpha))
                .param("beta", format!("{:?}", a.beta))
                .with_meta("margin", convergence_check(&params).margin)
                .with_meta("decay_ok", t.decay_ok)
                .with_meta("accelerated", t.accelerated.re);
            r.pass = r.pass && t.decay_ok;
            let mut out = vec![r];
            if a.exact {
                let ints = |v: &[f64]| {
                    v.iter()
                        .map(|x| (x.fract() == 0.0).then_some(*x as i64))
                        .collect::<Option<Vec<i64>>>()
                };
                let (ai, bi) = ints(&a.alpha)
                    .zip(ints(&a.beta))
                    .ok_or_else(|| usage("--exact needs integer parameters".into()))?;
                let q = beta_closed_exact(&ai, &bi, a.p)?;
                out.push(
                    VerificationReport::compare_real(
                        "beta-closed-exact",
                        closed.re,
                        num_traits::ToPrimitive::to_f64(&q).unwrap_or(f64::NAN),
                        1e-12,
                    )
                    .with_meta("rational", q.to_string()),
                );
            }
            Output::Reports(out)
        }
        Cmd::Gram {
            p,
            n,
            alpha,
            radius,
            eig,
            tol,
        } => {
            if eig {
                Output::Reports(psd_scan(
                    n,
                    p,
                    &[alpha],
                    radius,
                    &PsdScanConfig {
                        tol,
                        ..Default::default()
                    },
                )?)
            } else {
                let g = gram_matrix(&box_lattices(&BoxSpec::new(n, p, radius)?)?, alpha, tol)?;
                Output::Value(serde_json::to_value(&g).map_err(|e| usage(e.to_string()))?)
            }
        }
        Cmd::Zeta {
            cmd:
                ZetaCmd::Tamagawa {
                    p,
                    gamma,
                    radius,
                    tol,
                },
        } => {
            let g: Vec<Complex64> = gamma.iter().map(|x| Complex64::new(*x, 0.0)).collect();
            let t = tamagawa(&g, p, radius)?;
            Output::Reports(vec![VerificationReport::compare(
                "tamagawa",
                t.truncated,
                t.product,
                tol,
            )
            .param("p", p)
            .param("gamma", format!("{:?}", gamma))
            .param("box", radius)
            .with_meta("selected", t.selected)
            .with_meta("printed_product", t.product_alt.re)])
        }
        Cmd::Zeta {
            cmd:
                ZetaCmd::Rational {
                    alpha,
                    beta,
                    p,
                    radius,
                    tol,
                },
        } => Output::Reports(rational_zeta_check(&alpha, &beta, &p, radius, tol)?),
        Cmd::Plancherel {
            cmd: VerifyOnly::Verify(a),
        } => {
            let k = signature(&a.k, a.n)?;
            Output::Reports(vec![verify_plancherel_signature(
                &k,
                a.alpha,
                a.p,
                &grids(a.grid),
                a.tol,
            )?
            .param("n", k.n())])
        }
        Cmd::Continuation {
            cmd: VerifyOnly::Verify(a),
        } => {
            let k = signature(&a.k, a.n)?;
            let opts = IntegralOptions {
                min_points: a.grid,
                ..Default::default()
            };
            Output::Reports(vec![verify_continuation_signature(
                &k, a.alpha, a.p, &opts, a.tol,
            )?
            .param("n", k.n())])
        }
        Cmd::Degenerate {
            p,
            alpha,
            k,
            grid,
            tol,
        } => {
            let k = signature(&k, None)?;
            let opts = IntegralOptions {
                min_points: grid,
                ..Default::default()
            };
            Output::Reports(vec![verify_degenerate_signature(
                alpha, &k, p as f64, &opts, tol,
            )?
            .param("n", k.n())])
        }
        Cmd::Depend {
            cmd: VerifyOnly::Verify(a),
        } => {
            if a.m as usize >= a.n {
                return Err(usage("--m must be below --n".into()));
            }
            let mut out = Vec::new();
            if matches!(a.route, DependRoute::Field | DependRoute::Both) {
                out.push(verify_dependence_functions(a.m, a.p)?);
            }
            if matches!(a.route, DependRoute::Gram | DependRoute::Both) {
                let (r, s) = dependence_chain(a.p, a.n, a.m)?;
                out.push(verify_dependence_gram(&r, &s, a.m)?.param("n", a.n));
                out.push(verify_dependence_dual(&r, &s, a.m)?.param("n", a.n));
            }
            Output::Reports(out)
        }
        Cmd::Run(a) => {
            let mut cfg = match &a.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| usage(format!("{}: {}", path.display(), e)))?;
                    serde_json::from_str::<SuiteConfig>(&text)
                        .map_err(|e| usage(format!("config: {}", e)))?
                }
                None => SuiteConfig::default(),
            };
            cfg.p = a.p.or(cfg.p);
            cfg.n = a.n.or(cfg.n);
            cfg.m = a.m.or(cfg.m);
            cfg.radius = a.radius.or(cfg.radius);
            cfg.grid = a.grid.or(cfg.grid);
            cfg.tol = a.tol.or(cfg.tol);
            cfg.seed = a.seed.or(cfg.seed);
            cfg.timings |= timings;
            Output::Reports(run_suite(&a.suite, &cfg)?)
        }
    })
}

fn emit(out: &Output, format: Format) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match (out, format) {
        (Output::Value(v), _) => writeln!(lock, "{}", v),
        (Output::Reports(reps), Format::Json) => {
            for r in reps {
                writeln!(lock, "{}", serde_json::to_string(r)?)?;
            }
            Ok(())
        }
        (Output::Reports(reps), Format::Csv) => {
            let mut w = csv::Writer::from_writer(lock);
            w.write_record(VerificationReport::csv_header())?;
            for r in reps {
                w.write_record(r.csv_row())?;
            }
            w.flush()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = std::time::Instant::now();
    let out = match execute(cli.cmd, cli.timings) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(2);
        }
    };
    let out = match out {
        Output::Reports(mut reps) if cli.timings => {
            let ms = start.elapsed().as_secs_f64() * 1e3;
            for r in &mut reps {
                r.wall_ms.get_or_insert(ms);
            }
            Output::Reports(reps)
        }
        o => o,
    };
    if let Err(e) = emit(&out, cli.format) {
        eprintln!("error: {}", e);
        return ExitCode::from(2);
    }
    match out {
        Output::Reports(reps) if reps.iter().any(|r| !r.pass) => ExitCode::from(1),
        _ => ExitCode::SUCCESS,
    }
}
