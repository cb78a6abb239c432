mod cache;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use npthin::limit::{l0_hat, two_sheet_symbol};
use npthin::prolate::{eigenvalue, half_property_defect, r_to_l, tune_l};
use npthin::quasimode::{residual_flat, residual_oblate, residual_prolate, QuasiOptions};
use npthin::spectra::{density_scan, discretize_oblate, discretize_prolate, eigenvalues, ScanOptions};
use npthin::{Family, ModeIndex, Parity, QuasiModeSpec, Scheme};

use cache::{Cache, CacheKey, SpectrumCacheRecord, SCHEMA_VERSION};
use config::{parse_list, Format, RunConfig};
use output::{Cell, Table};

#[derive(Parser, Debug)]
#[command(name = "npthin", version, about = "Neumann-Poincaré spectra of thin spheroids and flat domains")]
struct Cli {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format for tables.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    L0,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpheroidFamily {
    Prolate,
    Oblate,
}

impl From<SpheroidFamily> for Family {
    fn from(f: SpheroidFamily) -> Self {
        match f {
            SpheroidFamily::Prolate => Family::Prolate,
            SpheroidFamily::Oblate => Family::Oblate,
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: npthin::Error| e.to_string())
}

fn parse_parity(s: &str) -> Result<Parity, String> {
    s.parse().map_err(|e: npthin::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: npthin::Error| e.to_string())
}

/// Comma-separated numbers given as one argument.
#[derive(Debug, Clone)]
struct FloatList(Vec<f64>);

fn parse_csv_list(s: &str) -> Result<FloatList, String> {
    parse_list(s).map(FloatList).map_err(|e| format!("{e:#}"))
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Analytic prolate eigenvalues lambda_{m,n}, 1 <= n <= nmax, 0 <= m <= n.
    #[command(group(ArgGroup::new("shape").required(true).args(["l", "r"])))]
    ProlateEigs {
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long)]
        nmax: u32,
    },
    /// Nyström spectrum of the sphere against 1/(4n+2).
    SphereCheck {
        #[arg(long = "N")]
        n: Option<usize>,
        /// Number of leading eigenvalues to compare.
        #[arg(long, default_value_t = 6)]
        count: usize,
        /// Fail when the largest error exceeds this.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Defect of sum_m lambda_{m,n}(L) from 1/2 for n <= nmax.
    HalfProperty {
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        nmax: u32,
    },
    /// Find L with lambda_{m,n}(L) equal to a target.
    Tune {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        m: i32,
        #[arg(long, allow_hyphen_values = true)]
        target: f64,
    },
    /// Samples of a limit symbol: l0 (needles) or the two-sheet Poisson symbol (1/2) exp(-4 pi xi).
    LimitSymbol {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        xi_max: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Nyström spectrum of one reduced operator, as JSON; cached.
    Discretize {
        #[arg(long, value_enum)]
        family: SpheroidFamily,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, default_value_t = 0)]
        m: u32,
        #[arg(long, value_parser = parse_parity)]
        parity: Option<Parity>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long, value_parser = parse_scheme)]
        scheme: Option<Scheme>,
        /// Neither read nor write the cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Coverage of a lambda grid by Nyström spectra over several R, as JSON.
    DensityScan {
        #[arg(long, value_enum)]
        family: SpheroidFamily,
        #[arg(long, value_parser = parse_csv_list)]
        r_list: Option<FloatList>,
        #[arg(long, value_parser = parse_csv_list, allow_hyphen_values = true)]
        lambda_grid: Option<FloatList>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        m_max: Option<u32>,
        #[arg(long)]
        a: Option<f64>,
    },
    /// Residuals of quasi-modes concentrated at the frequency matching lambda.
    Quasimode {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, value_parser = parse_csv_list)]
        r_list: Option<FloatList>,
    },
    /// Print the effective configuration in config-file syntax.
    ShowConfig,
    /// Resonant permittivity ratios k for eigenvalues.
    #[command(group(ArgGroup::new("input").required(true).args(["lambda", "spectrum_file"])))]
    Plasmon {
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Spectrum JSON from `discretize` or a cache record.
        #[arg(long)]
        spectrum_file: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = (|| {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(f) = cli.format {
            cfg.format = f;
        }
        run(cli.cmd, &cfg)
    })();
    match res {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Cmd, cfg: &RunConfig) -> Result<String> {
    match cmd {
        Cmd::ProlateEigs { l, r, nmax } => {
            let l = match (l, r) {
                (Some(l), _) => l,
                (None, Some(r)) => r_to_l(r)?,
                _ => unreachable!("clap enforces one of --L/--R"),
            };
            if nmax == 0 {
                bail!("--nmax must be at least 1");
            }
            let mut t = Table::new(&["n", "m", "lambda"]);
            for n in 1..=nmax {
                for m in 0..=n {
                    let v = eigenvalue(ModeIndex::new(n, m as i32)?, l)?;
                    t.push(vec![n.into(), m.into(), v.into()]);
                }
            }
            t.render(cfg.format)
        }
        Cmd::SphereCheck { n, count, tol } => {
            let n = n.unwrap_or(cfg.n);
            let spec = eigenvalues(&discretize_prolate(1.0, n, cfg.scheme)?)?;
            let vals = spec.values();
            if vals.len() < count {
                bail!("only {} eigenvalues for {count} requested", vals.len());
            }
            let mut t = Table::new(&["n", "nystrom", "exact", "abs_error"]);
            let mut worst: f64 = 0.0;
            for (k, &v) in vals.iter().take(count).enumerate() {
                let exact = 1.0 / (4.0 * k as f64 + 2.0);
                worst = worst.max((v - exact).abs());
                t.push(vec![(k as i64).into(), v.into(), exact.into(), (v - exact).abs().into()]);
            }
            let text = t.render(cfg.format)?;
            if !(worst < tol) {
                print!("{text}");
                bail!("max abs error {worst:e} exceeds {tol:e}");
            }
            Ok(text)
        }
        Cmd::HalfProperty { l, nmax } => {
            if nmax == 0 {
                bail!("--nmax must be at least 1");
            }
            let mut t = Table::new(&["n", "defect"]);
            for n in 1..=nmax {
                t.push(vec![n.into(), half_property_defect(n, l)?.into()]);
            }
            t.render(cfg.format)
        }
        Cmd::Tune { n, m, target } => {
            let res = tune_l(ModeIndex::new(n, m)?, target)?;
            let mut t = Table::new(&["l", "r", "achieved", "residual"]);
            t.push(vec![res.l.into(), res.r.into(), res.achieved.into(), res.residual.into()]);
            t.render(cfg.format)
        }
        Cmd::LimitSymbol { which, xi_max, steps } => {
            if !(xi_max > 0.0 && xi_max.is_finite()) || steps == 0 {
                bail!("need --xi-max > 0 and --steps >= 1");
            }
            let mut t = Table::new(&["xi", "symbol"]);
            for k in 0..=steps {
                let xi = xi_max * k as f64 / steps as f64;
                let v = match which {
                    Which::L0 => l0_hat(xi),
                    Which::Poisson => two_sheet_symbol([xi, 0.0], Parity::Even),
                };
                t.push(vec![xi.into(), v.into()]);
            }
            t.render(cfg.format)
        }
        Cmd::Discretize {
            family,
            r,
            a,
            m,
            parity,
            n,
            scheme,
            no_cache,
        } => {
            let family = Family::from(family);
            let n = n.unwrap_or(cfg.n);
            let scheme = scheme.unwrap_or(cfg.scheme);
            let (a, parity) = match family {
                Family::Prolate => {
                    if m != 0 || parity.is_some() || a.is_some() {
                        bail!("prolate discretization takes m = 0 only and no --a/--parity");
                    }
                    (None, None)
                }
                _ => (Some(a.unwrap_or(cfg.a)), Some(parity.unwrap_or(Parity::Even))),
            };
            let key = CacheKey {
                family,
                r,
                a,
                m,
                parity,
                n,
                scheme: scheme.id().to_string(),
            };
            let cache = (!no_cache).then(|| cfg.resolve_cache_dir()).flatten().map(Cache::new);
            if let Some(rec) = cache.as_ref().and_then(|c| c.load(&key)) {
                log::info!("cache hit {}", key.file_name());
                return Ok(serde_json::to_string_pretty(&rec.result)? + "\n");
            }
            let t0 = Instant::now();
            let op = match family {
                Family::Prolate => discretize_prolate(r, n, scheme)?,
                _ => discretize_oblate(r, a.unwrap(), m, parity.unwrap(), n, scheme)?,
            };
            let result = eigenvalues(&op)?;
            let rec = SpectrumCacheRecord {
                schema_version: SCHEMA_VERSION,
                library_version: npthin::VERSION.to_string(),
                key,
                wall_clock_s: t0.elapsed().as_secs_f64(),
                result,
            };
            if let Some(c) = &cache {
                match c.store(&rec) {
                    Ok(p) => log::info!("cached {}", p.display()),
                    Err(e) => log::warn!("could not write cache: {e:#}"),
                }
            }
            Ok(serde_json::to_string_pretty(&rec.result)? + "\n")
        }
        Cmd::DensityScan {
            family,
            r_list,
            lambda_grid,
            eps,
            n,
            m_max,
            a,
        } => {
            let opts = ScanOptions {
                n: n.unwrap_or(cfg.scan_n),
                m_max: m_max.unwrap_or(cfg.m_max),
                a: a.unwrap_or(cfg.a),
                scheme: cfg.scheme,
            };
            let r_list = r_list.map(|l| l.0).unwrap_or_else(|| cfg.scan_r_list.clone());
            let grid = lambda_grid.map(|l| l.0).unwrap_or_else(|| cfg.lambda_grid.clone());
            let report = density_scan(family.into(), &r_list, &grid, eps.unwrap_or(cfg.eps), &opts)?;
            Ok(serde_json::to_string_pretty(&report)? + "\n")
        }
        Cmd::Quasimode {
            family,
            lambda,
            sigma,
            r_list,
        } => {
            let spec = QuasiModeSpec::new(family, lambda, sigma)?;
            let opts = QuasiOptions {
                max_nodes: cfg.max_nodes,
                pair_budget: cfg.pair_budget,
                a: cfg.a,
                ..QuasiOptions::default()
            };
            let r_list = r_list.map(|l| l.0).unwrap_or_else(|| cfg.quasi_r_list.clone());
            let table = match family {
                Family::Prolate => {
                    let mut t = Table::new(&["r", "residual", "rho", "limit_residual"]);
                    for &r in &r_list {
                        let q = residual_prolate(&spec, r, &opts).with_context(|| format!("R = {r}"))?;
                        t.push(vec![r.into(), q.residual.into(), q.rho.into(), q.limit_residual.into()]);
                    }
                    t
                }
                Family::Flat => {
                    let mut t = Table::new(&["r", "residual", "sidewall", "rho"]);
                    for &r in &r_list {
                        let q = residual_flat(&spec, r, &opts).with_context(|| format!("R = {r}"))?;
                        t.push(vec![r.into(), q.sheet.into(), q.sidewall.into(), q.rho.into()]);
                    }
                    t
                }
                Family::Oblate => {
                    let mut t = Table::new(&["r", "residual", "rho", "same_sheet", "cross_sheet"]);
                    for &r in &r_list {
                        let q = residual_oblate(&spec, r, &opts).with_context(|| format!("R = {r}"))?;
                        t.push(vec![
                            r.into(),
                            q.residual.into(),
                            q.rho.into(),
                            q.same_sheet.into(),
                            q.cross_sheet.into(),
                        ]);
                    }
                    t
                }
            };
            table.render(cfg.format)
        }
        Cmd::ShowConfig => Ok(cfg.to_text()),
        Cmd::Plasmon { lambda, spectrum_file } => {
            let lambdas = match (lambda, spectrum_file) {
                (Some(l), _) => vec![l],
                (None, Some(p)) => cache::read_spectrum_file(&p)?.values(),
                _ => unreachable!("clap enforces one input"),
            };
            let pairs = if lambdas.len() == 1 {
                vec![npthin::ResonancePair {
                    lambda: lambdas[0],
                    k: npthin::plasmon::lambda_to_k(lambdas[0])?,
                }]
            } else {
                npthin::plasmon::resonance_table(&lambdas)?
            };
            let mut t = Table::new(&["lambda", "k"]);
            for p in pairs {
                t.push(vec![Cell::from(p.lambda), Cell::from(p.k)]);
            }
            t.render(cfg.format)
        }
    }
}
