//! `gramdfe` command-line front end.
//!
//! Subcommands: `analyze` (rates, entropies, DFE filters), `simulate`
//! (genie-aided decision feedback, Monte Carlo), `codebook` (random-codebook
//! word error rates at one stage). Exit codes: 0 success, 1 input error,
//! 2 self-check failure.

mod config;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use gramdfe_core::{
    dfe_filters, incremental_rates, mmse_project, run_codebook_experiment, run_genie_dfe,
    GaussianSet, HermitianGram, SeedSpec, OBSERVATION_GROUP,
};

use config::{LogBase, ScenarioConfig, ValidatedConfig};
use report::{fmt_f64, matrix_json, CsvFile, OutputFormat, ReportBundle};

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent input: exit code 1.
    Input(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
        }
    }
}

/// A command's outputs plus the verdict of its built-in self-check; a
/// failed self-check still emits every file, then exits with code 2.
struct CommandResult {
    bundle: ReportBundle,
    self_check_failure: Option<String>,
}

impl CommandResult {
    fn ok(bundle: ReportBundle) -> Self {
        CommandResult {
            bundle,
            self_check_failure: None,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gramdfe",
    version,
    about = "Successive-decoding analysis of linear Gaussian channels via Gram-matrix calculus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute incremental rates, entropies and DFE filters for a scenario
    Analyze(CommonArgs),
    /// Run the genie-aided successive decoding Monte Carlo simulation
    Simulate(CommonArgs),
    /// Run the random-codebook word-error-rate experiment at one stage
    Codebook(CodebookArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration (JSON)
    config: PathBuf,
    /// Directory for output files (default: config `outputs.dir`, else ".")
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Which outputs to write
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
    /// Override the seed from the config
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CodebookArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Decoding stage to test (1-based position in the order)
    #[arg(long)]
    stage: usize,
    /// Code block length in channel uses
    #[arg(long)]
    n: usize,
    /// Code rate in bits per symbol
    #[arg(long)]
    rate: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<ValidatedConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.config.display())))?;
    let mut validated = ScenarioConfig::parse(&text)?.validate()?;
    if args.seed.is_some() {
        validated.seed = args.seed;
    }
    Ok(validated)
}

fn rate_unit(base: LogBase) -> &'static str {
    match base {
        LogBase::Bits => "bits",
        LogBase::Nats => "nats",
    }
}

fn in_unit(base: LogBase, nats: f64, bits: f64) -> f64 {
    match base {
        LogBase::Bits => bits,
        LogBase::Nats => nats,
    }
}

/// Entropy in nats of a Gram matrix (-inf when singular), via a synthetic
/// labeled set.
fn gram_entropy_nats(g: &HermitianGram) -> Result<f64, CliError> {
    let labels: Vec<String> = (0..g.dim()).map(|i| format!("e{i}")).collect();
    let set = GaussianSet::new(labels, g.clone())
        .map_err(|e| CliError::input(format!("internal: {e}")))?;
    Ok(set
        .differential_entropy()
        .map_err(|e| CliError::input(format!("config: {e}")))?
        .nats)
}

fn cmd_analyze(v: &ValidatedConfig) -> Result<CommandResult, CliError> {
    let joint = v
        .scenario
        .build_joint_gram()
        .map_err(|e| CliError::input(format!("config: {e}")))?;
    let order: Vec<&str> = v.order.iter().map(String::as_str).collect();
    let profile =
        incremental_rates(&joint, &order).map_err(|e| CliError::input(format!("config: {e}")))?;
    let filters =
        dfe_filters(&joint, &order).map_err(|e| CliError::input(format!("config: {e}")))?;
    let projection = mmse_project(&joint, &order, &[OBSERVATION_GROUP])
        .map_err(|e| CliError::input(format!("config: {e}")))?;

    // Rates table.
    let mut rate_rows = Vec::new();
    let mut stages_json = Vec::new();
    for (i, st) in profile.stages.iter().enumerate() {
        rate_rows.push(format!(
            "{},{},{},{}",
            i + 1,
            st.group,
            fmt_f64(st.bits),
            fmt_f64(st.nats)
        ));
        stages_json.push(json!({
            "stage": i + 1,
            "group": st.group,
            "rate_bits": st.bits,
            "rate_nats": st.nats,
        }));
    }
    rate_rows.push(format!(
        "total,,{},{}",
        fmt_f64(profile.total_bits),
        fmt_f64(profile.total_nats)
    ));
    rate_rows.push(format!(
        "reference_mi,,{},{}",
        fmt_f64(profile.reference_mi_bits),
        fmt_f64(profile.reference_mi_nats)
    ));

    // Entropy table: input set, observation, error set, mutual information.
    let h_x = gram_entropy_nats(
        &joint
            .principal(&order)
            .map_err(|e| CliError::input(format!("internal: {e}")))?,
    )?;
    let h_y = gram_entropy_nats(
        &joint
            .principal(&[OBSERVATION_GROUP])
            .map_err(|e| CliError::input(format!("internal: {e}")))?,
    )?;
    let h_e = gram_entropy_nats(&projection.error_gram)?;
    let ln2 = std::f64::consts::LN_2;
    let entropy_rows: Vec<(&str, f64)> = vec![
        ("h_x", h_x),
        ("h_y", h_y),
        ("h_x_given_y", h_e),
        ("i_xy", profile.reference_mi_nats),
    ];
    let entropy_csv: Vec<String> = entropy_rows
        .iter()
        .map(|(q, nats)| format!("{q},{},{}", fmt_f64(*nats), fmt_f64(nats / ln2)))
        .collect();
    let entropy_json: Vec<serde_json::Value> = entropy_rows
        .iter()
        .map(|(q, nats)| json!({"quantity": q, "nats": nats, "bits": nats / ln2}))
        .collect();

    // Filter matrices.
    let mut filter_rows = Vec::new();
    for (name, m) in [
        ("forward", &filters.forward),
        ("predictor", &filters.predictor),
        ("feedforward_std", &filters.feedforward_std),
        ("feedback_std", &filters.feedback_std),
    ] {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let z = m.at(i, j);
                filter_rows.push(format!(
                    "{name},{i},{j},{},{}",
                    fmt_f64(z.re),
                    fmt_f64(z.im)
                ));
            }
        }
    }

    // Self-check: the rate sum must reproduce the reference MI and no stage
    // rate may be meaningfully negative.
    let residual = profile.rate_sum_residual();
    let rates_ok = residual <= 1e-9 && profile.stages.iter().all(|s| s.nats >= -1e-12);

    let json = json!({
        "command": "analyze",
        "config": v.canonical,
        "order": v.order,
        "rates": {
            "stages": stages_json,
            "total": {"bits": profile.total_bits, "nats": profile.total_nats},
            "reference_mi": {"bits": profile.reference_mi_bits, "nats": profile.reference_mi_nats},
        },
        "entropy": entropy_json,
        "filters": {
            "forward": matrix_json(&filters.forward),
            "predictor": matrix_json(&filters.predictor),
            "feedforward_std": matrix_json(&filters.feedforward_std),
            "feedback_std": matrix_json(&filters.feedback_std),
        },
        "self_check": {"rate_sum_residual_nats": residual, "passed": rates_ok},
    });

    let unit = rate_unit(v.log_base);
    let mut summary = String::new();
    for (i, st) in profile.stages.iter().enumerate() {
        summary.push_str(&format!(
            "stage {} ({}): R = {:.6} {unit}\n",
            i + 1,
            st.group,
            in_unit(v.log_base, st.nats, st.bits)
        ));
    }
    summary.push_str(&format!(
        "total = {:.6} {unit}, I(X;Y) = {:.6} {unit}, rate-sum residual = {:.3e} nats\n",
        in_unit(v.log_base, profile.total_nats, profile.total_bits),
        in_unit(v.log_base, profile.reference_mi_nats, profile.reference_mi_bits),
        residual
    ));

    let bundle = ReportBundle {
        csv: vec![
            CsvFile {
                name: "rates.csv",
                header: "stage,group,rate_bits,rate_nats",
                rows: rate_rows,
            },
            CsvFile {
                name: "entropy.csv",
                header: "quantity,nats,bits",
                rows: entropy_csv,
            },
            CsvFile {
                name: "filters.csv",
                header: "filter,row,col,re,im",
                rows: filter_rows,
            },
        ],
        json,
        summary,
    };
    Ok(CommandResult {
        bundle,
        self_check_failure: (!rates_ok).then(|| {
            format!("rate-sum residual {residual:.3e} nats exceeds 1e-9")
        }),
    })
}

fn cmd_simulate(v: &ValidatedConfig) -> Result<CommandResult, CliError> {
    let seed = v
        .seed
        .ok_or_else(|| CliError::input("seed: required for simulate".to_string()))?;
    let trials = v
        .trials
        .ok_or_else(|| CliError::input("trials: required for simulate".to_string()))?;
    if trials == 0 {
        return Err(CliError::input("trials: must be at least 1".to_string()));
    }
    let joint = v
        .scenario
        .build_joint_gram()
        .map_err(|e| CliError::input(format!("config: {e}")))?;
    let order: Vec<&str> = v.order.iter().map(String::as_str).collect();
    let filters =
        dfe_filters(&joint, &order).map_err(|e| CliError::input(format!("config: {e}")))?;
    let report = run_genie_dfe(
        &v.scenario,
        &order,
        &filters,
        &SeedSpec::new(seed),
        trials as usize,
    )
    .map_err(|e| CliError::input(format!("config: {e}")))?;

    // Genie table: one row per error coordinate (stage repeated for
    // multi-label stages). Self-check: empirical pivots within 5 standard
    // errors of theory, orthogonality z-scores within 5.
    let mut genie_rows = Vec::new();
    let mut stages_json = Vec::new();
    let mut checks_ok = true;
    let se_factor = 5.0 / (trials as f64).sqrt();
    for (i, st) in report.stages.iter().enumerate() {
        for (emp, th) in st.empirical_pivots.iter().zip(&st.theory_pivots) {
            let rel = if *th > 0.0 {
                (emp - th).abs() / th
            } else if *emp == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if rel > se_factor {
                checks_ok = false;
            }
            genie_rows.push(format!(
                "{},{},{},{},{trials}",
                i + 1,
                fmt_f64(*th),
                fmt_f64(*emp),
                fmt_f64(rel)
            ));
        }
        stages_json.push(json!({
            "stage": i + 1,
            "group": st.group,
            "theory_pivots": st.theory_pivots,
            "empirical_pivots": st.empirical_pivots,
            "theory_variances": st.theory_variances,
            "empirical_variances": st.empirical_variances,
        }));
    }
    if report.max_cross_zscore > 5.0 {
        checks_ok = false;
    }

    // Orthogonality table: empirical <error, y> entries with their standard
    // errors.
    let y_labels = joint
        .group_labels(OBSERVATION_GROUP)
        .map_err(|e| CliError::input(format!("internal: {e}")))?;
    let mut orth_rows = Vec::new();
    let mut orth_json = Vec::new();
    for (i, err_label) in filters.labels.iter().enumerate() {
        for (k, obs_label) in y_labels.iter().enumerate() {
            let cc = report.cross_correlation.at(i, k);
            let se = report.cross_se[i][k];
            let z = report.cross_zscores[i][k];
            orth_rows.push(format!(
                "{err_label},{obs_label},{},{},{}",
                fmt_f64(cc.norm()),
                fmt_f64(se),
                fmt_f64(z)
            ));
            orth_json.push(json!({
                "error_label": err_label,
                "obs_label": obs_label,
                "re": cc.re,
                "im": cc.im,
                "abs": cc.norm(),
                "std_error": se,
                "zscore": z,
            }));
        }
    }

    let json = json!({
        "command": "simulate",
        "config": v.canonical,
        "order": v.order,
        "seed": seed,
        "n_trials": trials,
        "stages": stages_json,
        "orthogonality": {
            "max_zscore": report.max_cross_zscore,
            "entries": orth_json,
        },
        "self_check": {
            "variance_bound_rel": se_factor,
            "zscore_bound": 5.0,
            "passed": checks_ok,
        },
    });

    let mut summary = String::new();
    for (i, st) in report.stages.iter().enumerate() {
        for (k, (emp, th)) in st
            .empirical_pivots
            .iter()
            .zip(&st.theory_pivots)
            .enumerate()
        {
            summary.push_str(&format!(
                "stage {} ({}) pivot {k}: theory {th:.6}, empirical {emp:.6}\n",
                i + 1,
                st.group
            ));
        }
    }
    summary.push_str(&format!(
        "orthogonality max |z| = {:.3} over {} trials\n",
        report.max_cross_zscore, trials
    ));

    let bundle = ReportBundle {
        csv: vec![
            CsvFile {
                name: "genie.csv",
                header: "stage,theory_var,empirical_var,rel_err,n_trials",
                rows: genie_rows,
            },
            CsvFile {
                name: "orthogonality.csv",
                header: "error_label,obs_label,abs_crosscorr,std_error,zscore",
                rows: orth_rows,
            },
        ],
        json,
        summary,
    };
    Ok(CommandResult {
        bundle,
        self_check_failure: (!checks_ok)
            .then(|| "a 5-standard-error concordance check failed".to_string()),
    })
}

fn cmd_codebook(v: &ValidatedConfig, args: &CodebookArgs) -> Result<CommandResult, CliError> {
    let seed = v
        .seed
        .ok_or_else(|| CliError::input("seed: required for codebook".to_string()))?;
    let trials = v
        .trials
        .ok_or_else(|| CliError::input("trials: required for codebook".to_string()))?;
    if trials == 0 {
        return Err(CliError::input("trials: must be at least 1".to_string()));
    }
    if args.stage == 0 || args.stage > v.order.len() {
        return Err(CliError::input(format!(
            "--stage: must be between 1 and {}",
            v.order.len()
        )));
    }
    let order: Vec<&str> = v.order.iter().map(String::as_str).collect();
    let exp = run_codebook_experiment(
        &v.scenario,
        &order,
        args.stage - 1,
        args.n,
        args.rate,
        &SeedSpec::new(seed),
        trials as usize,
    )
    .map_err(|e| CliError::input(format!("{e}")))?;

    let row = format!(
        "{},{},{},{},{},{}",
        args.stage,
        exp.block_length,
        fmt_f64(exp.rate_bits),
        fmt_f64(exp.incremental_rate_bits),
        exp.trials,
        fmt_f64(exp.wer)
    );
    let json = json!({
        "command": "codebook",
        "config": v.canonical,
        "seed": seed,
        "stage": args.stage,
        "group": exp.group,
        "n": exp.block_length,
        "rate_bits": exp.rate_bits,
        "incremental_rate_bits": exp.incremental_rate_bits,
        "codebook_size": exp.codebook_size,
        "trials": exp.trials,
        "word_errors": exp.word_errors,
        "wer": exp.wer,
    });
    let summary = format!(
        "stage {} ({}): rate {} bits vs incremental rate {:.6} bits -> WER {} ({} words, {} trials)\n",
        args.stage,
        exp.group,
        fmt_f64(exp.rate_bits),
        exp.incremental_rate_bits,
        fmt_f64(exp.wer),
        exp.codebook_size,
        exp.trials
    );
    Ok(CommandResult::ok(ReportBundle {
        csv: vec![CsvFile {
            name: "codebook.csv",
            header: "stage,n,R_bits,incremental_rate_bits,trials,wer",
            rows: vec![row],
        }],
        json,
        summary,
    }))
}

fn run(cli: &Cli) -> Result<(CommandResult, PathBuf, OutputFormat), CliError> {
    let common = match &cli.command {
        Command::Analyze(c) | Command::Simulate(c) => c,
        Command::Codebook(a) => &a.common,
    };
    let validated = load_config(common)?;
    let out_dir = common
        .out_dir
        .clone()
        .or_else(|| validated.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let result = match &cli.command {
        Command::Analyze(_) => cmd_analyze(&validated)?,
        Command::Simulate(_) => cmd_simulate(&validated)?,
        Command::Codebook(args) => cmd_codebook(&validated, args)?,
    };
    Ok((result, out_dir, common.format.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((result, out_dir, format)) => {
            if let Err(e) = result.bundle.write(&out_dir, format) {
                eprintln!("gramdfe: {e}");
                return ExitCode::from(1);
            }
            print!("{}", result.bundle.summary);
            match result.self_check_failure {
                None => ExitCode::SUCCESS,
                Some(msg) => {
                    eprintln!("gramdfe: self-check failed: {msg} (outputs were written)");
                    ExitCode::from(2)
                }
            }
        }
        Err(err) => {
            eprintln!("gramdfe: {err}");
            ExitCode::from(1)
        }
    }
}
