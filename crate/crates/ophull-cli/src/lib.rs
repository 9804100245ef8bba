//! Experiment runner and pipeline commands for the `ophull` library.
//!
//! Subcommands: `generate` (simulated families), `fit` (subspace model),
//! `project` (hull projection report), `approx-curve` and `timing-curve`
//! (the two experiment CSVs). Exit codes: 0 success, 1 runtime error,
//! 2 usage error.

pub mod config;
pub mod experiments;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{family_params, parse_usize_list, validate_sweep, Config, FamilyOverrides};
use experiments::{approx_curve, timing_curve, TimingConfig};
use ophull::io::{self, FileMode};
use ophull::{
    als_fit, generate_family, hosvd_init, Error, HullModel, Method, ProjectOptions, Result,
    StoppingRule,
};

#[derive(Debug, Parser)]
#[command(name = "ophull", version, about = "Shared subspaces and convex hulls of factored operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulated diffusion-like operator family (OPFAM1 file).
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid side g; operators act on flattened g×g images.
        #[arg(long)]
        grid: Option<usize>,
        /// Pairs per operator K.
        #[arg(long)]
        pairs: Option<usize>,
        /// Number of operators L.
        #[arg(long)]
        count: Option<usize>,
        /// Payload mode of the output file (text or binary).
        #[arg(long)]
        format: Option<String>,
    },
    /// Fit a subspace model to a family (SSM1 file).
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Input family file.
        #[arg(long)]
        family: Option<PathBuf>,
        /// Basis dimension |I| (and |J| unless --dim-j is given).
        #[arg(long)]
        dim: Option<usize>,
        /// Input-mode basis dimension |J|.
        #[arg(long)]
        dim_j: Option<usize>,
        /// hosvd (initialisation only) or als (default).
        #[arg(long, default_value = "als")]
        method: String,
        /// ALS iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// ALS relative decrease tolerance.
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Payload mode of the output file (text or binary).
        #[arg(long)]
        format: Option<String>,
    },
    /// Project operators onto the convex hull of a fitted family.
    Project {
        #[command(flatten)]
        common: CommonArgs,
        /// Subspace model file (SSM1).
        #[arg(long)]
        model: PathBuf,
        /// Family file whose projections are the hull vertices.
        #[arg(long)]
        family: Option<PathBuf>,
        /// Prebuilt hull file (HUL1); alternative to --family.
        #[arg(long)]
        hull: Option<PathBuf>,
        /// Operators to project (family file).
        #[arg(long)]
        input: PathBuf,
        /// Write the hull to this path after building it.
        #[arg(long)]
        save_hull: Option<PathBuf>,
        /// Projection iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Projection stopping tolerance.
        #[arg(long)]
        rel_tol: Option<f64>,
        /// Payload mode of the saved hull (text or binary).
        #[arg(long)]
        format: Option<String>,
    },
    /// Relative approximation error versus basis dimension (CSV).
    ApproxCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Input family file; generated from the family parameters if absent.
        #[arg(long)]
        family: Option<PathBuf>,
        /// Comma-separated dimension sweep, e.g. 0,1,2,4,8.
        #[arg(long)]
        dims: Option<String>,
        /// Comma-separated methods out of dct, svd, hosvd, als.
        #[arg(long)]
        methods: Option<String>,
        /// Entry cap for the dense SVD baseline.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Wall time versus operator size (CSV).
    TimingCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated size sweep, e.g. 128,256,512.
        #[arg(long)]
        sizes: Option<String>,
        /// Comma-separated methods out of dct, svd, hosvd, als.
        #[arg(long)]
        methods: Option<String>,
        /// Repetitions per measurement (median reported).
        #[arg(long)]
        reps: Option<usize>,
        /// Basis dimension fitted at every size.
        #[arg(long)]
        dim: Option<usize>,
        /// Pairs per operator of the timing family.
        #[arg(long)]
        pairs: Option<usize>,
        /// Operators in the timing family.
        #[arg(long)]
        count: Option<usize>,
        /// Entry cap for the dense SVD baseline.
        #[arg(long)]
        cap: Option<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<Config> {
    match &common.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
}

fn out_path(common: &CommonArgs, config: &Config) -> Result<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| config.get("out").map(PathBuf::from))
        .ok_or(Error::InvalidParam {
            name: "out",
            reason: "an output path is required (--out or `out=` in the config)".into(),
        })
}

fn resolve_format(flag: Option<&str>, config: &Config) -> Result<FileMode> {
    let raw = flag.or_else(|| config.get("format")).unwrap_or("binary");
    raw.parse().map_err(|()| Error::InvalidParam {
        name: "format",
        reason: format!("expected `text` or `binary`, found {raw:?}"),
    })
}

fn parse_methods(raw: Option<&str>, config: &Config) -> Result<Vec<Method>> {
    let raw = match raw {
        Some(r) => r.to_string(),
        None => config.get("methods").unwrap_or("dct,svd,hosvd,als").to_string(),
    };
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|()| Error::InvalidParam {
                name: "methods",
                reason: format!("unknown method {s:?}"),
            })
        })
        .collect()
}

fn sweep_from(
    flag: Option<&str>,
    config: &Config,
    key: &'static str,
    default: &[usize],
) -> Result<Vec<usize>> {
    let sweep = match flag {
        Some(raw) => parse_usize_list(raw)?,
        None => match config.get(key) {
            Some(raw) => parse_usize_list(raw)?,
            None => default.to_vec(),
        },
    };
    validate_sweep(key, &sweep)?;
    Ok(sweep)
}

fn notice_skipped(skipped: &[Method]) {
    for method in skipped {
        eprintln!("notice: {method} baseline skipped (dense size cap exceeded)");
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, grid, pairs, count, format } => {
            let config = load_config(&common)?;
            let mode = resolve_format(format.as_deref(), &config)?;
            let params = family_params(
                &config,
                &FamilyOverrides { grid, pairs, count, seed: common.seed },
            )?;
            let out = out_path(&common, &config)?;
            let family = generate_family(&params)?;
            io::write_family(&out, &family, mode)?;
            println!(
                "wrote {} operators on a {}x{} grid (n = {}, K = {}) to {}",
                family.len(),
                params.grid,
                params.grid,
                params.ambient_dim(),
                params.pairs,
                out.display()
            );
            Ok(())
        }

        Command::Fit { common, family, dim, dim_j, method, max_iters, rel_tol, format } => {
            let config = load_config(&common)?;
            let mode = resolve_format(format.as_deref(), &config)?;
            if method != "hosvd" && method != "als" {
                return Err(Error::InvalidParam {
                    name: "method",
                    reason: format!("expected `hosvd` or `als`, found {method:?}"),
                });
            }
            let family_path = family
                .or_else(|| config.get("family").map(PathBuf::from))
                .ok_or(Error::InvalidParam {
                    name: "family",
                    reason: "an input family is required (--family or `family=`)".into(),
                })?;
            let samples = io::read_family(&family_path)?;
            let i_dim = dim.or(config.usize_value("dim")?).unwrap_or(10);
            let j_dim = dim_j.unwrap_or(i_dim);
            let stopping = StoppingRule {
                max_iters: max_iters
                    .or(config.usize_value("max-iters")?)
                    .unwrap_or(StoppingRule::default().max_iters),
                rel_tol: rel_tol
                    .or(config.f64_value("rel-tol")?)
                    .unwrap_or(StoppingRule::default().rel_tol),
            };
            let init = hosvd_init(&samples, i_dim, j_dim)?;
            let model = if method == "hosvd" {
                init
            } else {
                als_fit(&samples, &init, stopping)?
            };
            let out = out_path(&common, &config)?;
            io::write_model(&out, &model, mode)?;
            println!(
                "fitted ({}, {}) model: fit {:.6e} after {} half-steps, written to {}",
                model.i_dim(),
                model.j_dim(),
                model.fit(),
                model.history().len().saturating_sub(1),
                out.display()
            );
            Ok(())
        }

        Command::Project {
            common, model, family, hull, input, save_hull, max_iters, rel_tol, format,
        } => {
            let config = load_config(&common)?;
            let mode = resolve_format(format.as_deref(), &config)?;
            let subspace = io::read_model(&model)?;
            let hull_model = match (&hull, &family) {
                (Some(path), _) => io::read_hull(path, subspace.clone())?,
                (None, Some(path)) => {
                    let vertices = io::read_family(path)?;
                    HullModel::build(&vertices, subspace.clone())?
                }
                (None, None) => {
                    return Err(Error::InvalidParam {
                        name: "family",
                        reason: "either --family or --hull is required".into(),
                    })
                }
            };
            if let Some(path) = &save_hull {
                io::write_hull(path, &hull_model, mode)?;
            }
            let opts = ProjectOptions {
                max_iters: max_iters
                    .or(config.usize_value("max-iters")?)
                    .unwrap_or(ProjectOptions::default().max_iters),
                rel_tol: rel_tol
                    .or(config.f64_value("rel-tol")?)
                    .unwrap_or(ProjectOptions::default().rel_tol),
                ..Default::default()
            };

            let inputs = io::read_family(&input)?;
            let mut report = String::from("operator,objective,reduced,orthogonal,total,iterations");
            for l in 0..hull_model.len() {
                report.push_str(&format!(",lambda{l}"));
            }
            report.push('\n');
            for (index, operator) in inputs.iter().enumerate() {
                let coeffs = subspace.project_coeffs(operator)?;
                let projection = hull_model.project_reduced(&coeffs, &opts)?;
                let objective = *projection.history.last().unwrap();
                let reduced = (projection.coeffs.gamma() - coeffs.gamma()).norm();
                let orthogonal = subspace.residual_norm_sq(operator)?.sqrt();
                let total = reduced.hypot(orthogonal);
                report.push_str(&format!(
                    "{index},{objective},{reduced},{orthogonal},{total},{}",
                    projection.history.len() - 1
                ));
                for weight in projection.weights.as_vector().iter() {
                    report.push_str(&format!(",{weight}"));
                }
                report.push('\n');
            }
            let out = out_path(&common, &config)?;
            std::fs::write(&out, report)?;
            println!("projected {} operators against {} vertices, report in {}",
                inputs.len(), hull_model.len(), out.display());
            Ok(())
        }

        Command::ApproxCurve { common, family, dims, methods, cap } => {
            let config = load_config(&common)?;
            let samples = match family.or_else(|| config.get("family").map(PathBuf::from)) {
                Some(path) => io::read_family(&path)?,
                None => {
                    let params = family_params(
                        &config,
                        &FamilyOverrides { grid: None, pairs: None, count: None, seed: common.seed },
                    )?;
                    generate_family(&params)?
                }
            };
            let default_dims: Vec<usize> = (0..=30).collect();
            let dims = sweep_from(dims.as_deref(), &config, "dims", &default_dims)?;
            let methods = parse_methods(methods.as_deref(), &config)?;
            let cap = cap
                .or(config.usize_value("cap")?)
                .unwrap_or(ophull::DEFAULT_DENSIFY_CAP);
            let (records, skipped) = approx_curve(&samples, &dims, &methods, cap)?;
            notice_skipped(&skipped);
            let out = out_path(&common, &config)?;
            io::write_csv(&out, &records)?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }

        Command::TimingCurve { common, sizes, methods, reps, dim, pairs, count, cap } => {
            let config = load_config(&common)?;
            let defaults = TimingConfig::default();
            let timing = TimingConfig {
                sizes: sweep_from(sizes.as_deref(), &config, "sizes", &defaults.sizes)?,
                methods: parse_methods(methods.as_deref(), &config)?,
                repetitions: reps
                    .or(config.usize_value("reps")?)
                    .unwrap_or(defaults.repetitions),
                dimension: dim.or(config.usize_value("dim")?).unwrap_or(defaults.dimension),
                pairs: pairs
                    .or(config.usize_value("timing-pairs")?)
                    .unwrap_or(defaults.pairs),
                count: count
                    .or(config.usize_value("timing-count")?)
                    .unwrap_or(defaults.count),
                seed: common.seed.or(config.u64_value("seed")?).unwrap_or(defaults.seed),
                cap: cap.or(config.usize_value("cap")?).unwrap_or(defaults.cap),
            };
            let (records, skipped) = timing_curve(&timing)?;
            for (method, n) in &skipped {
                eprintln!("notice: {method} baseline skipped at n = {n} (dense size cap exceeded)");
            }
            let out = out_path(&common, &config)?;
            io::write_csv(&out, &records)?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
    }
}
