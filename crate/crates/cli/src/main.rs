//! `vsgof`: entropy estimation, Vasicek–Song goodness-of-fit tests and
//! power studies from the command line.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 parameter, 5 constraint
//! violated for every window, 6 too many ties, 7 estimation failure.

mod input;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use vsgof::entropy::{entropy_max_window, WindowScan};
use vsgof::power::{parse_scenarios, run_power_studies, PowerTable};
use vsgof::vs::ASYMPTOTIC_MIN_N;
use vsgof::{
    vasicek_estimate, vs_test, ErrorKind, Family, PValueMethod, ParamVector, Sample, TestOptions,
    VsTestReport,
};

/// Version tag written in every JSON document.
pub const SCHEMA: &str = "vsgof/1";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: format!("{e:#}"),
        }
    }

    fn data(message: String) -> Self {
        Failure { code: 3, message }
    }
}

impl From<vsgof::Error> for Failure {
    fn from(e: vsgof::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Parameter => 4,
            ErrorKind::Constraint => 5,
            ErrorKind::Ties => 6,
            ErrorKind::Estimation => 7,
        };
        let mut message = e.to_string();
        match e.kind() {
            ErrorKind::Ties => message.push_str("\nhint: --extend searches every window below n/2"),
            ErrorKind::Constraint => {
                message.push_str("\nhint: --relax drops the entropy constraint")
            }
            _ => {}
        }
        Failure { code, message }
    }
}

#[derive(Parser)]
#[command(name = "vsgof", version, about = "Vasicek-Song goodness-of-fit tests")]
struct Cli {
    /// Worker threads for Monte-Carlo work (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spacing-based entropy estimate of a dataset.
    Entropy(EntropyArgs),
    /// Test a dataset against a family of distributions.
    Test(TestArgs),
    /// Run the power studies described in a scenario file.
    Power(PowerArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["window", "scan"]))]
struct EntropyArgs {
    /// Data file (one value per line or single-column CSV); `-` for stdin.
    data: PathBuf,
    /// Window size m.
    #[arg(long)]
    window: Option<usize>,
    /// Estimate at every window below n/2 and report the maximizing one.
    #[arg(long)]
    scan: bool,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    data: PathBuf,
    /// Family by density name: dunif, dnorm, dlnorm, dexp, dgamma, dweibull,
    /// dpareto, df, dlaplace, dbeta.
    #[arg(long)]
    family: String,
    /// Comma-separated parameters for a simple null.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    extend: bool,
    #[arg(long)]
    relax: bool,
    /// Monte-Carlo replicates.
    #[arg(long = "B", default_value_t = 5000)]
    b: usize,
    /// Force Monte-Carlo p-values.
    #[arg(long = "simulate-p")]
    simulate_p: bool,
    /// Seed; required whenever the p-value is simulated.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PowerArgs {
    scenario: PathBuf,
    /// Write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    command: &'static str,
    report: &'a T,
}

fn write_json<T: Serialize>(path: &Path, command: &'static str, report: &T) -> Result<(), Failure> {
    let doc = Envelope {
        schema: SCHEMA,
        command,
        report,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(Failure::usage)?;
    std::fs::write(path, text + "\n")
        .map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))
}

#[derive(Serialize)]
struct EntropyReport {
    n: usize,
    window: usize,
    estimate: f64,
    scan: Option<WindowScan>,
}

fn cmd_entropy(a: &EntropyArgs) -> Result<String, Failure> {
    let x = Sample::new(input::read_dataset(&a.data)?)?;
    let report = match a.window {
        Some(m) => EntropyReport {
            n: x.len(),
            window: m,
            estimate: vasicek_estimate(&x, m)?,
            scan: None,
        },
        None => {
            let (m, v, scan) = entropy_max_window(&x)?;
            EntropyReport {
                n: x.len(),
                window: m,
                estimate: v,
                scan: Some(scan),
            }
        }
    };
    let mut out = format!("n: {}\n", report.n);
    if let Some(scan) = &report.scan {
        out.push_str("window  estimate\n");
        for (i, v) in scan.values.iter().enumerate() {
            match v {
                Some(v) => writeln!(out, "{:>6}  {v}", scan.m_min + i).unwrap(),
                None => writeln!(out, "{:>6}  NA (zero spacing)", scan.m_min + i).unwrap(),
            }
        }
        writeln!(out, "maximizing window: {}", report.window).unwrap();
    } else {
        writeln!(out, "window: {}", report.window).unwrap();
    }
    writeln!(out, "entropy estimate: {}", report.estimate).unwrap();
    if let Some(path) = &a.json {
        write_json(path, "entropy", &report)?;
    }
    Ok(out)
}

fn render_test(r: &VsTestReport, source: &str) -> String {
    let spec = r.family.spec();
    let mut out = String::new();
    writeln!(
        out,
        "Vasicek-Song test for the {} family ({})",
        r.family.display_name(),
        r.family.call_name()
    )
    .unwrap();
    writeln!(out, "data: {source}, n = {}", r.n).unwrap();
    match &r.estimate {
        Some(_) => writeln!(
            out,
            "null: composite, parameters estimated by maximum likelihood"
        )
        .unwrap(),
        None => {
            let p: Vec<String> = spec
                .param_names
                .iter()
                .zip(r.null_params.values())
                .map(|(name, v)| format!("{name} = {v}"))
                .collect();
            writeln!(out, "null: simple, {}", p.join(", ")).unwrap()
        }
    }
    writeln!(out, "statistic: {}", r.statistic).unwrap();
    writeln!(out, "optimal window: {}", r.optimal_window).unwrap();
    let method = match r.p_value_method {
        PValueMethod::Asymptotic => "asymptotic",
        PValueMethod::MonteCarlo => "Monte-Carlo",
    };
    writeln!(out, "p-value: {} ({method})", r.p_value).unwrap();
    if let Some(fit) = &r.estimate {
        writeln!(out, "estimates:").unwrap();
        for (name, v) in spec.param_names.iter().zip(fit.params.values()) {
            writeln!(out, "  {name}: {v}").unwrap();
        }
    }
    if r.ignored_replicates > 0 {
        writeln!(out, "ignored replicates: {}", r.ignored_replicates).unwrap();
    }
    for w in &r.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    out
}

fn cmd_test(a: &TestArgs) -> Result<String, Failure> {
    let family = Family::from_name(&a.family)?;
    let params = a.params.clone().map(ParamVector::new);
    if let Some(p) = &params {
        vsgof::Distribution::new(family, p)?;
    }
    let x = Sample::new(input::read_dataset(&a.data)?)?;
    let simulated = a.extend || a.simulate_p || x.len() < ASYMPTOTIC_MIN_N;
    if a.b == 0 {
        return Err(Failure::usage("--B must be at least 1"));
    }
    let seed = match (a.seed, simulated) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => {
            return Err(Failure::usage(
                "this run uses Monte-Carlo p-values: pass --seed to make it reproducible",
            ))
        }
    };
    let opts = TestOptions {
        delta: a.delta,
        extend: a.extend,
        relax: a.relax,
        simulate_p_value: a.simulate_p.then_some(true),
        replicates: a.b,
        fixed_params: params,
        seed,
    };
    let report = vs_test(&x, family, &opts)?;
    if let Some(path) = &a.json {
        write_json(path, "test", &report)?;
    }
    Ok(render_test(&report, &a.data.display().to_string()))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    n: usize,
    test: &'a str,
    power_pct: f64,
    se_pct: f64,
    errors: usize,
}

fn write_csv(path: &Path, table: &PowerTable) -> Result<(), Failure> {
    let fail = |e: csv::Error| Failure::usage(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    for r in &table.rows {
        w.serialize(CsvRow {
            scenario: &r.scenario,
            n: r.n,
            test: r.test.name(),
            power_pct: r.power_pct,
            se_pct: r.se_pct,
            errors: r.errors,
        })
        .map_err(fail)?;
    }
    w.flush()
        .map_err(|e| Failure::usage(format!("writing {}: {e}", path.display())))
}

fn cmd_power(a: &PowerArgs) -> Result<String, Failure> {
    let text = std::fs::read_to_string(&a.scenario)
        .map_err(|e| Failure::usage(format!("reading {}: {e}", a.scenario.display())))?;
    let scenarios = parse_scenarios(&text)?;
    let table = run_power_studies(&scenarios)?;
    if let Some(path) = &a.csv {
        write_csv(path, &table)?;
    }
    if let Some(path) = &a.json {
        write_json(path, "power", &table)?;
    }
    Ok(table.render_text())
}

fn run(cli: Cli) -> Result<String, Failure> {
    let work = || match &cli.command {
        Command::Entropy(a) => cmd_entropy(a),
        Command::Test(a) => cmd_test(a),
        Command::Power(a) => cmd_power(a),
    };
    match cli.threads {
        None => work(),
        Some(0) => Err(Failure::usage("--threads must be at least 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(Failure::usage)?
            .install(work),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let code = |e: vsgof::Error| Failure::from(e).code;
        assert_eq!(code(vsgof::Error::Data("x".into())), 3);
        assert_eq!(code(vsgof::Error::UnknownFamily("dfoo".into())), 4);
        assert_eq!(code(vsgof::Error::ConstraintViolated), 5);
        assert_eq!(
            code(vsgof::Error::TooManyTies {
                max_tie_run: 3,
                m_max: 2
            }),
            6
        );
        assert_eq!(code(vsgof::Error::AllReplicatesIgnored { b: 10 }), 7);
        assert_eq!(code(vsgof::Error::InvalidOption("x".into())), 2);
        assert!(Failure::from(vsgof::Error::ConstraintViolated)
            .message
            .contains("--relax"));
    }
}
