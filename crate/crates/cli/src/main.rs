//! `cfrsense` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cfrsense::cfr::session_cfr;
use cfrsense::channel::{simulate_campaign, CampaignSpec, ScenarioKind};
use cfrsense::classifiers::{ModelSpec, Variant};
use cfrsense::eval::{cross_validate, CvReport};
use cfrsense::io::{
    hash_file, read_cfr_csv, read_examples_csv, read_manifest, verify_manifest, write_cfr_csv,
    write_examples_csv, write_manifest, write_report, RunManifest,
};
use cfrsense::ofdm::{Modem, OfdmConfig};
use cfrsense::pipeline::{snapshots_to_examples, FeatureSettings};
use cfrsense::preprocess::FilterSpec;
use cfrsense::Error;

#[derive(Debug, Parser)]
#[command(name = "cfrsense", version, about = "OFDM CFR hydration-sensing pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a recording campaign and write one CFR CSV per session.
    Simulate(SimulateArgs),
    /// Filter and window CFR CSVs into an examples CSV.
    Featurize(FeaturizeArgs),
    /// Cross-validate classifier variants on an examples CSV.
    Evaluate(EvaluateArgs),
    /// Verify a run directory's manifests and summarise its results.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value = "chest", value_parser = ["chest", "hand"])]
    scenario: String,
    #[arg(long, default_value_t = 5)]
    subjects: u32,
    #[arg(long, default_value_t = 5)]
    sessions_per_class: u32,
    #[arg(long, default_value_t = 30.0)]
    duration_s: f64,
    #[arg(long, default_value_t = 0.2)]
    separation: f64,
    #[arg(long, default_value_t = 15.0)]
    snr_db: f64,
    #[arg(long, env = "CFRSENSE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FeaturizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 125)]
    window_frames: usize,
    #[arg(long, default_value_t = 5.0)]
    lowpass_hz: f64,
    #[arg(long, default_value_t = 4)]
    lowpass_order: usize,
    #[arg(long, default_value_t = 11)]
    savgol_window: usize,
    #[arg(long, default_value_t = 3)]
    savgol_order: usize,
    #[arg(long, default_value_t = 6.0)]
    z_threshold: f64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    examples: PathBuf,
    /// A catalogue variant name, or `all`.
    #[arg(long, default_value = "all")]
    model: String,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, env = "CFRSENSE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::FilterSpec(_) | Error::Scenario(_) | Error::Split(_) => 1,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Data { .. }
        | Error::Version { .. }
        | Error::Schema(_)
        | Error::HashMismatch { .. }
        | Error::Json(_)
        | Error::Input(_)
        | Error::FrameFormat(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Featurize(a) => featurize(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn session_file_name(subject: u32, session: u32, label: cfrsense::Label) -> String {
    format!("subject{subject:02}_session{session:02}_{label}.csv")
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let kind: ScenarioKind = a.scenario.parse()?;
    let cfg = OfdmConfig {
        master_seed: a.seed,
        ..OfdmConfig::default()
    };
    let campaign = CampaignSpec {
        kind,
        n_subjects: a.subjects,
        sessions_per_class: a.sessions_per_class,
        duration_s: a.duration_s,
        separation: a.separation,
        snr_db: a.snr_db,
        seed: a.seed,
    };
    let plan = simulate_campaign(&cfg, &campaign)?;
    let modem = Modem::new(cfg.clone())?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    let mut manifest = RunManifest::new("simulate");
    for i in 0..plan.len() {
        let session = plan.simulate(&modem, i)?;
        let snaps = session_cfr(&modem, &session)?;
        let s = &plan.scenarios[i];
        let name = session_file_name(s.subject_id, s.session_id, s.hydration_label);
        write_cfr_csv(&snaps, &a.out.join(&name))?;
        manifest.add_file(&a.out, &name)?;
        log::debug!("wrote {name} ({} snapshots)", snaps.len());
    }
    manifest.ofdm = Some(cfg);
    manifest.campaign = Some(campaign);
    manifest.scenarios = plan.scenarios.clone();
    manifest.seeds.insert("master".into(), a.seed);
    write_manifest(&manifest, &a.out.join("manifest.json"))?;
    println!("wrote {} session files to {}", plan.len(), a.out.display());
    Ok(())
}

fn sibling_manifest(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn featurize(a: FeaturizeArgs) -> CmdResult {
    let settings = FeatureSettings {
        filter: FilterSpec {
            lowpass_order: a.lowpass_order,
            lowpass_cutoff_hz: a.lowpass_hz,
            savgol_window: a.savgol_window,
            savgol_polyorder: a.savgol_order,
        },
        window_frames: a.window_frames,
        z_threshold: a.z_threshold,
    };
    let source_manifest = a.input.join("manifest.json");
    let (cfg, mut inputs) = if source_manifest.exists() {
        let m = read_manifest(&source_manifest)?;
        verify_manifest(&m, &a.input)?;
        let files: Vec<String> = m
            .files
            .iter()
            .map(|f| f.path.clone())
            .filter(|p| p.ends_with(".csv"))
            .collect();
        (m.ofdm.unwrap_or_default(), files)
    } else {
        let mut files = Vec::new();
        for entry in fs::read_dir(&a.input).map_err(io_err(&a.input))? {
            let entry = entry.map_err(io_err(&a.input))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".csv") {
                files.push(name);
            }
        }
        (OfdmConfig::default(), files)
    };
    inputs.sort();
    let rate = cfg.frames_per_second();
    settings.filter.validate_lowpass(rate)?;
    settings.filter.validate_savgol()?;
    if settings.window_frames == 0 {
        return Err(Failure::Usage("--window-frames must be at least 1".into()));
    }
    let mut examples = Vec::new();
    let mut rejected = 0;
    let mut short = 0;
    for name in &inputs {
        let snaps = read_cfr_csv(&a.input.join(name))?;
        let (f, r) = snapshots_to_examples(snaps, &settings, rate)?;
        examples.extend(f.examples);
        rejected += r;
        short += f.short_sessions;
    }
    log::info!("artifact rejection removed {rejected} snapshots");
    if short > 0 {
        log::warn!("{short} sessions were shorter than one window and produced no examples");
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    write_examples_csv(&examples, &a.out)?;
    let mut manifest = RunManifest::new("featurize");
    manifest.ofdm = Some(cfg);
    manifest.filter = Some(settings.filter.clone());
    manifest
        .parameters
        .insert("window_frames".into(), settings.window_frames.into());
    manifest
        .parameters
        .insert("z_threshold".into(), settings.z_threshold.into());
    manifest
        .parameters
        .insert("rejected_snapshots".into(), rejected.into());
    manifest
        .parameters
        .insert("input_dir".into(), a.input.display().to_string().into());
    let (dir, name) = split_path(&a.out);
    manifest.add_file(&dir, &name)?;
    write_manifest(&manifest, &sibling_manifest(&a.out))?;
    println!("wrote {} examples to {}", examples.len(), a.out.display());
    Ok(())
}

fn split_path(path: &Path) -> (PathBuf, String) {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    (dir, name)
}

fn evaluate(a: EvaluateArgs) -> CmdResult {
    let variants: Vec<Variant> = if a.model == "all" {
        Variant::CATALOG.to_vec()
    } else {
        vec![a.model.parse().map_err(|e: Error| match e {
            Error::Input(msg) => Failure::Usage(msg),
            other => Failure::Lib(other),
        })?]
    };
    let examples = read_examples_csv(&a.examples)?;
    let mut reports: Vec<CvReport> = Vec::with_capacity(variants.len());
    let mut manifest = RunManifest::new("evaluate");
    for v in variants {
        let spec = ModelSpec::new(v, a.seed);
        let r = cross_validate(&examples, &spec, a.folds, a.seed)?;
        println!(
            "{:<32} pooled {:>8.4}%  mean {:>8.4}%",
            v.name(),
            r.pooled_accuracy,
            r.mean_accuracy
        );
        manifest.models.push(spec);
        reports.push(r);
    }
    if let Some(parent) = a.report.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let paths = write_report(&reports, &a.report)?;
    let (dir, _) = split_path(&a.report);
    for p in [&paths.accuracy, &paths.confusion, &paths.comparison] {
        manifest.add_file(&dir, &split_path(p).1)?;
    }
    let (input_hash, _) = hash_file(&a.examples)?;
    manifest.seeds.insert("master".into(), a.seed);
    manifest.parameters.insert("folds".into(), a.folds.into());
    manifest
        .parameters
        .insert("examples".into(), a.examples.display().to_string().into());
    manifest
        .parameters
        .insert("examples_sha256".into(), input_hash.into());
    if let Some(r) = reports.first() {
        manifest.parameters.insert(
            "dataset_fingerprint".into(),
            r.dataset_fingerprint.clone().into(),
        );
    }
    let mut mpath = a.report.as_os_str().to_owned();
    mpath.push("_manifest.json");
    write_manifest(&manifest, Path::new(&mpath))?;
    Ok(())
}

/// Rows of a report CSV written by `evaluate`, keyed by the header.
fn read_simple_csv(path: &Path) -> Result<Vec<Vec<(String, String)>>, Error> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("{} is empty", path.display()),
        })?
        .split(',')
        .collect();
    lines
        .enumerate()
        .map(|(i, l)| {
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != header.len() {
                return Err(Error::Parse {
                    line: i as u64 + 2,
                    message: format!("{}: expected {} fields", path.display(), header.len()),
                });
            }
            Ok(header
                .iter()
                .zip(fields)
                .map(|(h, f)| (h.to_string(), f.to_string()))
                .collect())
        })
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    row.iter()
        .find(|(k, _)| k == key)
        .map_or("", |(_, v)| v.as_str())
}

fn report(a: ReportArgs) -> CmdResult {
    let Format::Csv = a.format;
    let mut manifests = Vec::new();
    for entry in fs::read_dir(&a.run).map_err(io_err(&a.run))? {
        let entry = entry.map_err(io_err(&a.run))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with("manifest.json") {
            manifests.push(name);
        }
    }
    manifests.sort();
    if manifests.is_empty() {
        return Err(Error::Input(format!("no manifest found in {}", a.run.display())).into());
    }
    let mut summary = String::from("variant,mean_accuracy,pooled_accuracy,tp,tn,fp,fn,report\n");
    let mut verified = 0;
    for name in &manifests {
        let m = read_manifest(&a.run.join(name))?;
        verify_manifest(&m, &a.run)?;
        verified += m.files.len();
        if m.command != "evaluate" {
            continue;
        }
        let find = |suffix: &str| m.files.iter().find(|f| f.path.ends_with(suffix)).map(|f| a.run.join(&f.path));
        let (Some(acc), Some(conf)) = (find("_accuracy.csv"), find("_confusion.csv")) else {
            continue;
        };
        let acc_rows = read_simple_csv(&acc)?;
        let conf_rows = read_simple_csv(&conf)?;
        let prefix = name.trim_end_matches("_manifest.json");
        for row in &acc_rows {
            let variant = field(row, "variant");
            let c = conf_rows
                .iter()
                .find(|r| field(r, "variant") == variant)
                .ok_or_else(|| {
                    Error::Data {
                        line: 0,
                        message: format!("{variant} missing from {}", conf.display()),
                    }
                })?;
            summary.push_str(&format!(
                "{variant},{},{},{},{},{},{},{prefix}\n",
                field(row, "mean_accuracy"),
                field(row, "pooled_accuracy"),
                field(c, "tp"),
                field(c, "tn"),
                field(c, "fp"),
                field(c, "fn"),
            ));
        }
    }
    let out = a.run.join("summary.csv");
    fs::write(&out, &summary).map_err(io_err(&out))?;
    eprintln!(
        "verified {verified} files across {} manifests",
        manifests.len()
    );
    print!("{summary}");
    Ok(())
}
