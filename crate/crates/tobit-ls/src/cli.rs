//! Command-line front-end: data ingestion, model fitting, hypothesis
//! testing, diagnostics, sampling, and the simulation studies.
//!
//! Every run is deterministic given `--seed`, and every output embeds the
//! fully resolved configuration (JSON field or `#`-prefixed comment lines
//! in CSV output). Exit codes: 0 success, 1 numerical failure, 2
//! usage/contract error.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::diagnostics::{gcs_residuals, qq_envelope};
use crate::error::{Error, Result};
use crate::infer::{fit, run_tests, FitOptions, Restriction, TestKind};
use crate::lsdist::{GeneratorFamily, GeneratorKind, LogSymmetricParams};
use crate::mcsim::{
    format_bias_mse_table, format_power_table, run_bias_mse, run_power, BiasMseConfig, PowerConfig,
};
use crate::rng;
use crate::tobitmodel::{load_csv, CsvOptions, GammaScale, ParamId, TobitDataset};

#[derive(Parser, Debug)]
#[command(
    name = "tobit-ls",
    version,
    about = "Tobit regression with log-symmetric error laws"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for all randomness; identical seeds give byte-identical output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for parallel commands (falls back to TOBITLS_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Primary output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GammaScaleArg {
    Natural,
    Log,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a tobit-log-symmetric model to a CSV dataset.
    Fit(FitArgs),
    /// Likelihood-ratio and gradient tests of equality restrictions.
    Test(TestArgs),
    /// Generalized Cox-Snell residuals of a fitted model.
    Residuals(ResidualArgs),
    /// Simulated QQ envelope for the Cox-Snell residuals.
    Envelope(EnvelopeArgs),
    /// Run a Monte Carlo study from a JSON config.
    Simulate(SimulateArgs),
    /// Draw samples from a log-symmetric distribution.
    Sample(SampleArgs),
}

/// Flags shared by every command that fits a model to a CSV file.
#[derive(Args, Debug)]
struct ModelArgs {
    /// Input CSV: header row, columns `y`, `censored` (0/1), covariates.
    data: PathBuf,

    /// Error family: normal, student-t, power-exponential,
    /// birnbaum-saunders, birnbaum-saunders-t.
    #[arg(long, default_value = "normal")]
    family: String,

    /// Extra parameter value(s) for the family, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xi: Vec<f64>,

    /// Censoring threshold; defaults to the minimum observed y (with a
    /// warning).
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,

    /// Scale the threshold is given on.
    #[arg(long, value_enum, default_value_t = GammaScaleArg::Log)]
    gamma_scale: GammaScaleArg,

    /// Do not prepend an intercept column.
    #[arg(long)]
    no_intercept: bool,

    /// Estimate the extra parameter(s) by maximum likelihood.
    #[arg(long, conflicts_with = "fix_xi")]
    free_xi: bool,

    /// Keep the extra parameter(s) fixed at their given values.
    #[arg(long, conflicts_with = "free_xi")]
    fix_xi: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    model: ModelArgs,

    /// Restrictions "name=value,..." naming covariate columns (or
    /// `intercept`, `phi`, `xi1`, `xi2`).
    #[arg(long)]
    restrict: String,

    /// Which statistic(s) to compute.
    #[arg(long, default_value = "both")]
    kind: String,
}

#[derive(Args, Debug)]
struct ResidualArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct EnvelopeArgs {
    #[command(flatten)]
    model: ModelArgs,

    #[arg(long, default_value_t = 100)]
    replications: usize,

    /// Pointwise coverage of the band.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Which study to run.
    #[arg(long, value_enum)]
    study: Study,

    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Study {
    BiasMse,
    Power,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, default_value = "normal")]
    family: String,

    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xi: Vec<f64>,

    /// Scale (median) of the log-symmetric law.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,

    /// Dispersion of the log-symmetric law.
    #[arg(long, default_value_t = 1.0)]
    phi: f64,

    /// Number of draws.
    #[arg(short = 'n', long = "count", default_value_t = 100)]
    count: usize,
}

/// Parse the process arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap distinguishes --help/--version from real usage errors
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let threads = cli.threads.or_else(|| {
        std::env::var("TOBITLS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        // ignore the error if a global pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let ctx = Context {
        seed: cli.seed,
        threads,
        output: cli.output.clone(),
        format: cli.format,
    };
    match cli.command {
        Command::Fit(args) => cmd_fit(&ctx, &args),
        Command::Test(args) => cmd_test(&ctx, &args),
        Command::Residuals(args) => cmd_residuals(&ctx, &args),
        Command::Envelope(args) => cmd_envelope(&ctx, &args),
        Command::Simulate(args) => cmd_simulate(&ctx, &args),
        Command::Sample(args) => cmd_sample(&ctx, &args),
    }
}

struct Context {
    seed: u64,
    threads: Option<usize>,
    output: Option<PathBuf>,
    format: Option<Format>,
}

impl Context {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, content: &str) -> Result<()> {
        match &self.output {
            Some(path) => fs::write(path, content)?,
            None => print!("{content}"),
        }
        Ok(())
    }
}

/// Resolve the family and free-extra flags from the shared model flags.
fn resolve_family(
    family: &str,
    xi: &[f64],
    free_xi: bool,
    fix_xi: bool,
) -> Result<(GeneratorFamily, Vec<bool>)> {
    let kind: GeneratorKind = family.parse()?;
    let extra = if xi.is_empty() {
        kind.default_extra()
    } else {
        xi.to_vec()
    };
    let fam = GeneratorFamily::new(kind, extra)?;
    // BS kinds estimate their first extra parameter unless told otherwise;
    // the others keep extras fixed unless asked to free them.
    let mut free = match kind {
        GeneratorKind::BirnbaumSaunders => vec![true],
        GeneratorKind::BirnbaumSaundersT => vec![true, false],
        _ => vec![false; kind.extra_len()],
    };
    if free_xi {
        free = vec![true; kind.extra_len()];
    }
    if fix_xi {
        free = vec![false; kind.extra_len()];
    }
    Ok((fam, free))
}

fn load_model_data(args: &ModelArgs) -> Result<(TobitDataset, GeneratorFamily, Vec<bool>)> {
    let (family, free_extra) = resolve_family(&args.family, &args.xi, args.free_xi, args.fix_xi)?;
    let file = fs::File::open(&args.data)?;
    let loaded = load_csv(
        file,
        &CsvOptions {
            gamma: args.gamma,
            gamma_scale: match args.gamma_scale {
                GammaScaleArg::Natural => GammaScale::Natural,
                GammaScaleArg::Log => GammaScale::Log,
            },
            intercept: !args.no_intercept,
        },
    )?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok((loaded.dataset, family, free_extra))
}

fn model_config_json(
    ctx: &Context,
    args: &ModelArgs,
    family: &GeneratorFamily,
) -> serde_json::Value {
    json!({
        "data": args.data.display().to_string(),
        "family": family,
        "gamma": args.gamma,
        "gamma_scale": match args.gamma_scale { GammaScaleArg::Natural => "natural", GammaScaleArg::Log => "log" },
        "intercept": !args.no_intercept,
        "free_xi": args.free_xi,
        "fix_xi": args.fix_xi,
        "seed": ctx.seed,
        "threads": ctx.threads,
    })
}

fn cmd_fit(ctx: &Context, args: &FitArgs) -> Result<()> {
    let (data, family, free_extra) = load_model_data(&args.model)?;
    let result = fit(&data, &family, &free_extra, &FitOptions::default())?;
    if !result.optim.converged {
        eprintln!(
            "fit did not converge after {} iterations: {} (gradient norm {:.3e})",
            result.optim.iterations, result.optim.message, result.optim.final_gradient_norm
        );
        return Err(Error::Optimization(result.optim.message));
    }
    let config = model_config_json(ctx, &args.model, &family);
    match ctx.format_or(Format::Json) {
        Format::Json => {
            let doc = json!({ "config": config, "result": result });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))
        }
        Format::Csv => {
            let mut out = format!("# config: {}\n", serde_json::to_string(&config)?);
            out.push_str("parameter,estimate,se\n");
            for ((name, est), se) in result
                .param_names
                .iter()
                .zip(&result.estimates)
                .zip(&result.se)
            {
                out.push_str(&format!("{name},{est},{se}\n"));
            }
            out.push_str(&format!(
                "# loglik={} aic={} bic={} n={} censored={}\n",
                result.loglik, result.aic, result.bic, result.n_total, result.n_censored
            ));
            ctx.emit(&out)
        }
    }
}

/// Parse "name=value,name=value" restrictions against the dataset columns.
fn parse_restriction(expr: &str, data: &TobitDataset) -> Result<Restriction> {
    let mut fixed = Vec::new();
    for part in expr.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, value) = part.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "restriction \"{part}\" must have the form name=value"
            ))
        })?;
        let value: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidParameter(format!("cannot parse restriction value in \"{part}\""))
        })?;
        let name = name.trim();
        let id = match name {
            "phi" => ParamId::Phi,
            "xi1" => ParamId::Extra(0),
            "xi2" => ParamId::Extra(1),
            other => match data.column_index(other) {
                Some(j) => ParamId::Beta(j),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown covariate \"{other}\" in restriction (columns: {})",
                        data.names().join(", ")
                    )))
                }
            },
        };
        fixed.push((id, value));
    }
    if fixed.is_empty() {
        return Err(Error::InvalidParameter("empty restriction".into()));
    }
    Ok(Restriction { fixed })
}

fn cmd_test(ctx: &Context, args: &TestArgs) -> Result<()> {
    let (data, family, free_extra) = load_model_data(&args.model)?;
    let restriction = parse_restriction(&args.restrict, &data)?;
    let kinds: Vec<TestKind> = match args.kind.as_str() {
        "lr" => vec![TestKind::Lr],
        "gr" => vec![TestKind::Gr],
        "both" => vec![TestKind::Lr, TestKind::Gr],
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown test kind \"{other}\" (expected lr, gr, or both)"
            )))
        }
    };
    let results = run_tests(
        &data,
        &family,
        &free_extra,
        &restriction,
        &kinds,
        &FitOptions::default(),
    )?;
    let config = {
        let mut c = model_config_json(ctx, &args.model, &family);
        c["restrict"] = json!(args.restrict);
        c["kind"] = json!(args.kind);
        c
    };
    match ctx.format_or(Format::Json) {
        Format::Json => {
            let doc = json!({ "config": config, "results": results });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))
        }
        Format::Csv => {
            let mut out = format!("# config: {}\n", serde_json::to_string(&config)?);
            out.push_str("kind,statistic,df,p_value,warnings\n");
            for t in &results {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    match t.kind {
                        TestKind::Lr => "lr",
                        TestKind::Gr => "gr",
                    },
                    t.statistic,
                    t.df,
                    t.p_value,
                    t.warning_flags.join(";")
                ));
            }
            ctx.emit(&out)
        }
    }
}

fn cmd_residuals(ctx: &Context, args: &ResidualArgs) -> Result<()> {
    let (data, family, free_extra) = load_model_data(&args.model)?;
    let fit_result = fit(&data, &family, &free_extra, &FitOptions::default())?;
    if !fit_result.optim.converged {
        return Err(Error::Optimization(fit_result.optim.message));
    }
    let report = gcs_residuals(&fit_result, &data)?;
    let config = model_config_json(ctx, &args.model, &family);
    match ctx.format_or(Format::Csv) {
        Format::Json => {
            let doc = json!({ "config": config, "result": report });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))
        }
        Format::Csv => {
            let mut out = format!("# config: {}\n", serde_json::to_string(&config)?);
            out.push_str(&format!(
                "# ks_statistic={} ks_pvalue={}\n",
                report.ks_statistic, report.ks_pvalue
            ));
            out.push_str("index,residual,censored\n");
            for (i, (r, c)) in report
                .residuals
                .iter()
                .zip(&report.censored_flags)
                .enumerate()
            {
                out.push_str(&format!("{},{},{}\n", i, r, u8::from(*c)));
            }
            ctx.emit(&out)
        }
    }
}

fn cmd_envelope(ctx: &Context, args: &EnvelopeArgs) -> Result<()> {
    let (data, family, free_extra) = load_model_data(&args.model)?;
    let fit_result = fit(&data, &family, &free_extra, &FitOptions::default())?;
    if !fit_result.optim.converged {
        return Err(Error::Optimization(fit_result.optim.message));
    }
    let report = gcs_residuals(&fit_result, &data)?;
    let band = qq_envelope(&fit_result, &data, args.replications, args.level, ctx.seed)?;

    // observed residuals sorted with their censoring flags
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.sort_by(|&a, &b| report.residuals[a].total_cmp(&report.residuals[b]));

    let config = {
        let mut c = model_config_json(ctx, &args.model, &family);
        c["replications"] = json!(args.replications);
        c["level"] = json!(args.level);
        c
    };
    match ctx.format_or(Format::Csv) {
        Format::Json => {
            let doc = json!({ "config": config, "band": band, "residuals": report });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))
        }
        Format::Csv => {
            let mut out = format!("# config: {}\n", serde_json::to_string(&config)?);
            out.push_str(&format!("# refit_failures={}\n", band.failures));
            out.push_str("index,residual,censored,theoretical_q,lower,median,upper\n");
            for (i, &obs) in order.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    i,
                    report.residuals[obs],
                    u8::from(report.censored_flags[obs]),
                    band.theoretical_quantiles[i],
                    band.lower[i],
                    band.median[i],
                    band.upper[i]
                ));
            }
            ctx.emit(&out)
        }
    }
}

fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let mut raw = String::new();
    fs::File::open(&args.config)?.read_to_string(&mut raw)?;
    match args.study {
        Study::BiasMse => {
            let mut config: BiasMseConfig = serde_json::from_str(&raw)?;
            config.seed = if config.seed == 0 {
                ctx.seed
            } else {
                config.seed
            };
            if ctx.threads.is_some() {
                config.threads = ctx.threads;
            }
            let report = run_bias_mse(&config)?;
            match ctx.format_or(Format::Csv) {
                Format::Json => {
                    ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))?
                }
                Format::Csv => {
                    let mut out = format!("# config: {}\n", serde_json::to_string(&report.config)?);
                    out.push_str("n,phi,rho,parameter,bias,mse,mc_standard_error,failures\n");
                    for r in &report.rows {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            r.n,
                            r.phi,
                            r.rho,
                            r.parameter,
                            r.bias,
                            r.mse,
                            r.mc_standard_error,
                            r.failures
                        ));
                    }
                    ctx.emit(&out)?;
                }
            }
            eprintln!("{}", format_bias_mse_table(&report));
            Ok(())
        }
        Study::Power => {
            let mut config: PowerConfig = serde_json::from_str(&raw)?;
            config.seed = if config.seed == 0 {
                ctx.seed
            } else {
                config.seed
            };
            if ctx.threads.is_some() {
                config.threads = ctx.threads;
            }
            let report = run_power(&config)?;
            match ctx.format_or(Format::Csv) {
                Format::Json => {
                    ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))?
                }
                Format::Csv => {
                    let mut out = format!("# config: {}\n", serde_json::to_string(&report.config)?);
                    out.push_str(
                        "n,phi,rho,beta4,level,rejection_rate_lr,rejection_rate_gr,mc_standard_error,failures\n",
                    );
                    for r in &report.rows {
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{},{}\n",
                            r.n,
                            r.phi,
                            r.rho,
                            r.beta4,
                            r.level,
                            r.rejection_rate_lr,
                            r.rejection_rate_gr,
                            r.mc_standard_error,
                            r.failures
                        ));
                    }
                    ctx.emit(&out)?;
                }
            }
            eprintln!("{}", format_power_table(&report));
            Ok(())
        }
    }
}

fn cmd_sample(ctx: &Context, args: &SampleArgs) -> Result<()> {
    let kind: GeneratorKind = args.family.parse()?;
    let extra = if args.xi.is_empty() {
        kind.default_extra()
    } else {
        args.xi.clone()
    };
    let family = GeneratorFamily::new(kind, extra)?;
    let params = LogSymmetricParams::new(args.eta, args.phi, family.clone())?;
    let mut stream = rng::substream(ctx.seed, &[0x5a_4d]);
    let draws = params.sample(&mut stream, args.count);

    let config = json!({
        "family": family,
        "eta": args.eta,
        "phi": args.phi,
        "count": args.count,
        "seed": ctx.seed,
    });
    match ctx.format_or(Format::Csv) {
        Format::Json => {
            let doc = json!({ "config": config, "draws": draws });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))
        }
        Format::Csv => {
            let mut out = format!("# config: {}\n", serde_json::to_string(&config)?);
            out.push_str("t\n");
            for d in &draws {
                out.push_str(&format!("{d}\n"));
            }
            ctx.emit(&out)
        }
    }
}

/// Write a CSV file usable as `fit` input; test helper shared with the
/// examples.
pub fn write_dataset_csv(data: &TobitDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    // covariate columns skip the intercept when present
    let start = usize::from(
        data.names()
            .first()
            .map(|n| n == "intercept")
            .unwrap_or(false),
    );
    out.push_str("y,censored");
    for name in &data.names()[start..] {
        out.push_str(&format!(",{name}"));
    }
    out.push('\n');
    for i in 0..data.n() {
        out.push_str(&format!("{},{}", data.y()[i], u8::from(data.censored()[i])));
        for j in start..data.p() {
            out.push_str(&format!(",{}", data.x().row(i)[j]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_resolution_defaults() {
        let (fam, free) = resolve_family("student-t", &[], false, false).unwrap();
        assert_eq!(fam.extra(), &[4.0]);
        assert_eq!(free, vec![false]);

        let (fam, free) = resolve_family("birnbaum-saunders", &[1.5], false, false).unwrap();
        assert_eq!(fam.extra(), &[1.5]);
        assert_eq!(free, vec![true]);

        let (_, free) = resolve_family("birnbaum-saunders-t", &[], false, false).unwrap();
        assert_eq!(free, vec![true, false]);

        let (_, free) = resolve_family("student-t", &[7.0], true, false).unwrap();
        assert_eq!(free, vec![true]);

        assert!(resolve_family("weibull", &[], false, false).is_err());
    }

    #[test]
    fn restriction_parser() {
        let data = TobitDataset::new(
            vec![1.0, 2.0],
            vec![false, false],
            crate::linalg::Mat::from_rows(vec![vec![1.0, 0.3], vec![1.0, 0.6]]),
            vec!["intercept".into(), "dose".into()],
            0.0,
        )
        .unwrap();
        let r = parse_restriction("dose=0, phi=1.5", &data).unwrap();
        assert_eq!(r.fixed.len(), 2);
        assert_eq!(r.fixed[0], (ParamId::Beta(1), 0.0));
        assert_eq!(r.fixed[1], (ParamId::Phi, 1.5));
        assert!(parse_restriction("nonexistent=0", &data).is_err());
        assert!(parse_restriction("dose", &data).is_err());
        assert!(parse_restriction("", &data).is_err());
    }
}
