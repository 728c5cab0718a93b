//! Command-line front end.
//!
//! Human-readable reports use four decimals; CSV artifacts carry full
//! precision. Exit status is 0 on success, 1 when a computation fails, 2 for
//! usage errors and 3 when a fit did not converge (unless
//! `--allow-nonconverged` is given).

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::diagnostics::{
    acf, default_lags, deviance, information_criteria, ljung_box, monti, pacf, qq_points, residuals, ResidualKind,
};
use crate::error::{BsarmaError, Result};
use crate::estimation::{confidence_interval, fit, seasonality_test, wald_z, FitOptions, FittedModel};
use crate::forecast::{accuracy, forecast};
use crate::io::{format_full, read_series, write_series, write_table};
use crate::model::{Link, ModelOrder, ParamVector};
use crate::montecarlo::{replication_rng, run_study, simulate_series, McConfig, McReport, PowerScenario, Study};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Fit,
    Forecast,
    Diagnose,
    Simulate,
    McStudy,
}

#[derive(Debug, Parser)]
#[command(name = "bsarma", about = "Beta seasonal ARMA models for rates and proportions")]
struct RawArgs {
    #[arg(value_enum)]
    command: Command,
    /// CSV with header `y` or `date,y`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file; a directory for `diagnose`. Standard output if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Model order `p,q,P,Q,S`.
    #[arg(long)]
    order: Option<String>,
    #[arg(long, default_value = "logit")]
    link: String,
    /// Trailing observations held out for forecast evaluation.
    #[arg(long, default_value_t = 0)]
    holdout: usize,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    replications: Option<usize>,
    /// Portmanteau lags; defaults to max(10, 2S).
    #[arg(long)]
    b: Option<usize>,
    /// Confidence level for intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Series length for `simulate`, sample size for `mc-study`.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sample sizes for `mc-study`.
    #[arg(long)]
    sizes: Option<String>,
    /// Parameters in the order beta, phi.., Phi.., theta.., Theta.., precision.
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    #[arg(long, default_value = "estimation")]
    study: String,
    /// Power scenario: 1 (omitted MA term) or 2 (omitted AR term).
    #[arg(long, default_value = "2")]
    scenario: String,
    /// Comma-separated misspecification sizes for the power study.
    #[arg(long)]
    deltas: Option<String>,
    #[arg(long, default_value = "weighted")]
    residuals: String,
    #[arg(long)]
    allow_nonconverged: bool,
}

/// Validated command-line configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub order: ModelOrder,
    pub link: Link,
    pub holdout: usize,
    pub horizon: Option<usize>,
    pub seed: u64,
    pub replications: Option<usize>,
    pub b: Option<usize>,
    pub level: f64,
    pub n: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub params: Option<Vec<f64>>,
    pub study: Study,
    pub scenario: PowerScenario,
    pub deltas: Option<Vec<f64>>,
    pub residual_kind: ResidualKind,
    pub allow_nonconverged: bool,
}

/// Usage or help output with the exit status it should produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError {
    pub message: String,
    pub code: i32,
}

fn usage(message: impl Into<String>) -> UsageError {
    UsageError {
        message: message.into(),
        code: EXIT_USAGE,
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> std::result::Result<Vec<T>, UsageError> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| usage(format!("--{flag}: cannot parse {p:?}"))))
        .collect()
}

/// Parses `argv` (including the program name).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<CliConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let raw = RawArgs::try_parse_from(argv).map_err(|e| UsageError {
        message: e.render().to_string(),
        code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
    })?;

    let order = match (&raw.order, raw.command) {
        (Some(s), _) => s.parse::<ModelOrder>().map_err(|e| usage(e.to_string()))?,
        (None, Command::McStudy) => McConfig::reference_design(Study::Estimation).order,
        (None, _) => return Err(usage("--order is required")),
    };
    if matches!(raw.command, Command::Fit | Command::Forecast | Command::Diagnose) && raw.input.is_none() {
        return Err(usage("--input is required"));
    }
    if raw.command == Command::Simulate && raw.n.is_none() {
        return Err(usage("--n is required for simulate"));
    }
    if raw.command == Command::Diagnose && raw.output.is_none() {
        return Err(usage("--output directory is required for diagnose"));
    }
    if !(raw.level > 0.0 && raw.level < 1.0) {
        return Err(usage("--level must lie in (0, 1)"));
    }
    if raw.horizon == Some(0) {
        return Err(usage("--horizon must be at least 1"));
    }
    if raw.replications == Some(0) {
        return Err(usage("--replications must be at least 1"));
    }
    let link = Link::by_name(&raw.link).map_err(|e| usage(e.to_string()))?;
    let study = raw.study.parse().map_err(|e: BsarmaError| usage(e.to_string()))?;
    let scenario = raw.scenario.parse().map_err(|e: BsarmaError| usage(e.to_string()))?;
    let residual_kind = raw.residuals.parse().map_err(|e: BsarmaError| usage(e.to_string()))?;
    let params = raw.params.as_deref().map(|s| parse_list("params", s)).transpose()?;
    if let Some(p) = &params {
        if p.len() != order.n_params() {
            return Err(usage(format!(
                "--params needs {} values for {order}, got {}",
                order.n_params(),
                p.len()
            )));
        }
    }
    let sizes = raw.sizes.as_deref().map(|s| parse_list("sizes", s)).transpose()?;
    let deltas = raw.deltas.as_deref().map(|s| parse_list("deltas", s)).transpose()?;

    Ok(CliConfig {
        command: raw.command,
        input: raw.input,
        output: raw.output,
        order,
        link,
        holdout: raw.holdout,
        horizon: raw.horizon,
        seed: raw.seed,
        replications: raw.replications,
        b: raw.b,
        level: raw.level,
        n: raw.n,
        sizes,
        params,
        study,
        scenario,
        deltas,
        residual_kind,
        allow_nonconverged: raw.allow_nonconverged,
    })
}

/// Runs the command, writing artifacts to `--output` or `stdout`.
pub fn run_with(config: &CliConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(config, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Runs the command against the process streams.
pub fn run(config: &CliConfig) -> i32 {
    let out = std::io::stdout();
    let err = std::io::stderr();
    run_with(config, &mut out.lock(), &mut err.lock())
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(argv) {
        Ok(config) => run(&config),
        Err(e) => {
            if e.code == EXIT_OK {
                print!("{}", e.message);
            } else {
                eprint!("{}", e.message);
                if !e.message.ends_with('\n') {
                    eprintln!();
                }
            }
            e.code
        }
    }
}

fn io_err(e: std::io::Error) -> BsarmaError {
    BsarmaError::Input(e.to_string())
}

fn emit(output: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<()> {
    match output {
        Some(p) => fs::write(p, bytes).map_err(|e| BsarmaError::Input(format!("{}: {e}", p.display()))),
        None => stdout.write_all(bytes).map_err(io_err),
    }
}

fn fit_options(config: &CliConfig) -> FitOptions {
    FitOptions {
        link: config.link,
        ..FitOptions::default()
    }
}

fn convergence_status(config: &CliConfig, fitted: &FittedModel, stderr: &mut dyn Write) -> i32 {
    if fitted.converged || config.allow_nonconverged {
        EXIT_OK
    } else {
        let _ = writeln!(
            stderr,
            "error: optimizer did not converge ({}); pass --allow-nonconverged to accept",
            fitted.termination
        );
        EXIT_NOT_CONVERGED
    }
}

fn execute(config: &CliConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match config.command {
        Command::Fit => {
            let series = read_series(config.input.as_ref().expect("validated"))?;
            let (train, _) = series.split_tail(config.holdout)?;
            let fitted = fit(&config.order, &train, &fit_options(config))?;
            let report = fit_report(&fitted, config.b, config.level);
            emit(config.output.as_deref(), stdout, report.as_bytes())?;
            Ok(convergence_status(config, &fitted, stderr))
        }
        Command::Diagnose => {
            let series = read_series(config.input.as_ref().expect("validated"))?;
            let (train, _) = series.split_tail(config.holdout)?;
            let fitted = fit(&config.order, &train, &fit_options(config))?;
            let dir = config.output.as_ref().expect("validated");
            fs::create_dir_all(dir).map_err(io_err)?;
            write_diagnostics(&fitted, dir, config)?;
            Ok(convergence_status(config, &fitted, stderr))
        }
        Command::Forecast => {
            let series = read_series(config.input.as_ref().expect("validated"))?;
            let (train, test) = series.split_tail(config.holdout)?;
            let fitted = fit(&config.order, &train, &fit_options(config))?;
            let status = convergence_status(config, &fitted, stderr);
            let h = config.horizon.unwrap_or(if config.holdout > 0 { config.holdout } else { 10 });
            let fc = forecast(&fitted, h)?;
            let labels = test.labels();
            let rows: Vec<Vec<String>> = fc
                .means
                .iter()
                .enumerate()
                .map(|(i, mu)| {
                    let date = labels.and_then(|l| l.get(i)).cloned().unwrap_or_default();
                    let actual = test.values().get(i).map(|v| format_full(*v)).unwrap_or_default();
                    vec![(i + 1).to_string(), date, format_full(*mu), actual]
                })
                .collect();
            let mut buf = Vec::new();
            write_table(&mut buf, &["step", "date", "mean", "actual"], &rows)?;
            emit(config.output.as_deref(), stdout, &buf)?;
            if config.holdout > 0 {
                let k = h.min(config.holdout);
                let acc = accuracy(&fc.means[..k], &test.values()[..k])?;
                let mut summary = String::new();
                let _ = writeln!(summary, "Forecast accuracy over {k} held-out observations");
                let _ = writeln!(summary, "MSE   {:.4}", acc.mse);
                let _ = writeln!(summary, "MAPE  {:.4}", acc.mape);
                match &config.output {
                    Some(p) => {
                        let path = sibling(p, "_accuracy.csv");
                        let mut buf = Vec::new();
                        write_table(
                            &mut buf,
                            &["metric", "value"],
                            &[
                                vec!["mse".into(), format_full(acc.mse)],
                                vec!["mape".into(), format_full(acc.mape)],
                            ],
                        )?;
                        fs::write(&path, buf).map_err(io_err)?;
                        stdout.write_all(summary.as_bytes()).map_err(io_err)?;
                    }
                    None => stderr.write_all(summary.as_bytes()).map_err(io_err)?,
                }
            }
            Ok(status)
        }
        Command::Simulate => {
            let params = simulation_params(config)?;
            let mut rng = replication_rng(config.seed, 0);
            let series = simulate_series(
                &config.order,
                &params,
                config.n.expect("validated"),
                &mut rng,
                None,
                &config.link,
            )?;
            let mut buf = Vec::new();
            write_series(&mut buf, &series)?;
            emit(config.output.as_deref(), stdout, &buf)?;
            Ok(EXIT_OK)
        }
        Command::McStudy => {
            let mc = mc_config(config)?;
            let report = run_study(&mc)?;
            emit(config.output.as_deref(), stdout, mc_report_table(&report).as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn simulation_params(config: &CliConfig) -> Result<ParamVector> {
    match &config.params {
        Some(v) => ParamVector::from_slice(&config.order, v),
        None => {
            let reference = McConfig::reference_design(Study::Estimation);
            if config.order == reference.order {
                Ok(reference.true_params)
            } else {
                Err(BsarmaError::Input(format!(
                    "--params is required for {}; the default parameters are for {}",
                    config.order, reference.order
                )))
            }
        }
    }
}

fn mc_config(config: &CliConfig) -> Result<McConfig> {
    let mut mc = McConfig::reference_design(config.study);
    mc.order = config.order;
    mc.true_params = simulation_params(config)?;
    mc.seed = config.seed;
    mc.lags = config.b;
    mc.fit_options = fit_options(config);
    mc.scenario = config.scenario;
    if let Some(r) = config.replications {
        mc.replications = r;
    }
    if let Some(sizes) = &config.sizes {
        mc.sample_sizes = sizes.clone();
    } else if let Some(n) = config.n {
        mc.sample_sizes = vec![n];
    }
    if let Some(d) = &config.deltas {
        mc.power_grid = d.clone();
    }
    Ok(mc)
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

/// Estimate table followed by fit statistics and residual tests.
pub fn fit_report(fitted: &FittedModel, b: Option<usize>, level: f64) -> String {
    let order = &fitted.order;
    let names = order.param_names();
    let est = fitted.estimate_vec();
    let se = fitted.std_errors().ok();
    let mut s = String::new();
    let _ = writeln!(s, "{order} with {} link", fitted.link.name());
    let _ = writeln!(
        s,
        "n = {}, conditioning on m = {}, iterations = {}, converged = {} ({})",
        fitted.n(),
        fitted.burn_in(),
        fitted.iterations,
        if fitted.converged { "yes" } else { "no" },
        fitted.termination
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<10} {:>12} {:>12} {:>10} {:>10}",
        "", "Estimate", "Std. error", "z stat.", "p-value"
    );
    for (i, name) in names.iter().enumerate() {
        let (se_s, z_s, p_s) = match (&se, wald_z(fitted, i, 0.0)) {
            (Some(se), Ok(z)) => (fmt4(se[i]), fmt4(z.statistic), fmt4(z.p_value)),
            _ => ("NA".into(), "NA".into(), "NA".into()),
        };
        let _ = writeln!(s, "{:<10} {:>12} {:>12} {:>10} {:>10}", name, fmt4(est[i]), se_s, z_s, p_s);
    }
    let _ = writeln!(s);
    let pct = level * 100.0;
    let _ = writeln!(s, "{:<10} {:>12} {:>12}", format!("{pct}% CI"), "Lower", "Upper");
    for (i, name) in names.iter().enumerate() {
        match confidence_interval(fitted, i, level) {
            Ok((lo, hi)) => {
                let _ = writeln!(s, "{:<10} {:>12} {:>12}", name, fmt4(lo), fmt4(hi));
            }
            Err(_) => {
                let _ = writeln!(s, "{:<10} {:>12} {:>12}", name, "NA", "NA");
            }
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Log-likelihood  {}", fmt4(fitted.loglik));
    match deviance(fitted) {
        Ok(d) => {
            let _ = writeln!(s, "Deviance        {} (scaled {})", fmt4(d.deviance), fmt4(d.scaled));
        }
        Err(e) => {
            let _ = writeln!(s, "Deviance        NA ({e})");
        }
    }
    let ic = information_criteria(fitted);
    let _ = writeln!(s, "MAIC            {}", fmt4(ic.maic));
    let _ = writeln!(s, "MSIC            {}", fmt4(ic.msic));
    let _ = writeln!(s, "MHQ             {}", fmt4(ic.mhq));
    match seasonality_test(fitted) {
        Ok(w) => {
            let _ = writeln!(
                s,
                "Seasonality     W = {}, df = {}, p-value = {}",
                fmt4(w.statistic),
                w.df,
                fmt4(w.p_value)
            );
        }
        Err(e) => {
            let _ = writeln!(s, "Seasonality     NA ({e})");
        }
    }
    let b = b.unwrap_or_else(|| default_lags(order));
    let res = residuals(fitted, ResidualKind::Weighted);
    for (label, test) in [
        ("Ljung-Box", ljung_box(&res, order, b)),
        ("Monti", monti(&res, order, b)),
    ] {
        match test {
            Ok(t) => {
                let _ = writeln!(
                    s,
                    "{:<15} Q = {}, b = {}, df = {}, p-value = {}",
                    label,
                    fmt4(t.statistic),
                    t.b,
                    t.df,
                    fmt4(t.p_value)
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{label:<15} NA ({e})");
            }
        }
    }
    s
}

fn write_diagnostics(fitted: &FittedModel, dir: &Path, config: &CliConfig) -> Result<()> {
    let report = fit_report(fitted, config.b, config.level);
    fs::write(dir.join("report.txt"), report).map_err(io_err)?;

    let m = fitted.burn_in();
    let res = residuals(fitted, config.residual_kind);
    let labels = fitted.series.labels();
    let y = fitted.series.values();
    let rows: Vec<Vec<String>> = res
        .values
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = m + i;
            vec![
                (t + 1).to_string(),
                labels.map(|l| l[t].clone()).unwrap_or_default(),
                format_full(y[t]),
                format_full(fitted.path.mu[t]),
                format_full(*r),
            ]
        })
        .collect();
    let mut buf = Vec::new();
    write_table(&mut buf, &["t", "date", "y", "fitted", "residual"], &rows)?;
    fs::write(dir.join("residuals.csv"), buf).map_err(io_err)?;

    let b = config.b.unwrap_or_else(|| default_lags(&fitted.order));
    let max_lag = b.min(res.len().saturating_sub(1));
    let rho = acf(&res.values, max_lag)?;
    let phi = pacf(&res.values, max_lag)?;
    let band = 1.96 / (res.len() as f64).sqrt();
    let rows: Vec<Vec<String>> = (1..=max_lag)
        .map(|k| {
            vec![
                k.to_string(),
                format_full(rho[k]),
                format_full(phi[k - 1]),
                format_full(-band),
                format_full(band),
            ]
        })
        .collect();
    let mut buf = Vec::new();
    write_table(&mut buf, &["lag", "acf", "pacf", "lower", "upper"], &rows)?;
    fs::write(dir.join("acf.csv"), buf).map_err(io_err)?;

    let rows: Vec<Vec<String>> = qq_points(&res.values)
        .into_iter()
        .map(|(q, v)| vec![format_full(q), format_full(v)])
        .collect();
    let mut buf = Vec::new();
    write_table(&mut buf, &["theoretical", "sample"], &rows)?;
    fs::write(dir.join("qq.csv"), buf).map_err(io_err)?;
    Ok(())
}

/// Monte Carlo report as fixed-width text.
pub fn mc_report_table(report: &McReport) -> String {
    let mut s = String::new();
    if !report.estimation.is_empty() {
        let _ = writeln!(
            s,
            "{:>6} {:<8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8}",
            "n", "param", "truth", "mean", "bias", "RB%", "SD", "MSE", "cover"
        );
        for r in &report.estimation {
            let _ = writeln!(
                s,
                "{:>6} {:<8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8}",
                r.n,
                r.parameter,
                fmt4(r.truth),
                fmt4(r.mean),
                fmt4(r.bias),
                fmt4(r.relative_bias_pct),
                fmt4(r.sd),
                fmt4(r.mse),
                fmt4(r.coverage_95)
            );
        }
    }
    if !report.rejection.is_empty() {
        let _ = writeln!(
            s,
            "{:>6} {:>8} {:<10} {:>8} {:>10}",
            "n", "delta", "test", "level", "rate"
        );
        for r in &report.rejection {
            let delta = r.delta.map(fmt4).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:>6} {:>8} {:<10} {:>8} {:>10}",
                r.n,
                delta,
                r.test,
                fmt4(r.level),
                fmt4(r.rate)
            );
        }
    }
    let _ = writeln!(s);
    for b in &report.bookkeeping {
        let delta = b.delta.map(|d| format!(", delta {}", fmt4(d))).unwrap_or_default();
        let _ = writeln!(
            s,
            "n {}{}: {} replications, {} failed, {} used",
            b.n, delta, b.replications, b.failed, b.used
        );
    }
    s
}
