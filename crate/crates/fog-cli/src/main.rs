//! `fog` — freezing-of-gait detection pipeline CLI.
//!
//! Subcommands: `synth` writes a synthetic Daphnet-format recording,
//! `featurize` turns recordings into a feature-matrix CSV, and `run`
//! executes config-driven experiments (optionally the whole 13-experiment
//! grid) producing JSON reports, ROC CSVs and model checkpoints.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use fog_core::eval::SplitMode;
use fog_core::features::{build_matrix, FeatureGroup, FeatureMatrix, SpectralContext};
use fog_core::harness::{
    grid_configs, report_to_json, run_experiment, summary_csv, write_roc_csv, EvalReport,
    ExperimentConfig, ExperimentOutput, SensorChoice,
};
use fog_core::ingest::{
    compute_magnitudes, filter_annotation_zero, generate_synthetic, load_daphnet_dir,
    parse_daphnet, write_daphnet, FreezeEpisode, Recording, SynthSpec,
};
use fog_core::windowing::{segment, LabelRule, WindowSpec};

#[derive(Parser)]
#[command(name = "fog", version, about = "Freezing-of-gait detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled recording in Daphnet text format.
    Synth(SynthArgs),
    /// Extract a feature matrix CSV from one or more recordings.
    Featurize(FeaturizeArgs),
    /// Run experiments from a JSON config file.
    Run(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Recording length in seconds.
    #[arg(long)]
    duration: f64,

    /// Freeze episode as START:DURATION seconds; repeatable.
    #[arg(long = "freeze", value_name = "START:DUR")]
    episodes: Vec<String>,

    #[arg(long)]
    seed: u64,

    /// Output file.
    #[arg(short, long)]
    output: PathBuf,

    /// Noise standard deviation, milli-g.
    #[arg(long, default_value_t = 50.0)]
    noise: f64,

    #[arg(long, default_value_t = 2.0)]
    walk_hz: f64,

    #[arg(long, default_value_t = 6.0)]
    freeze_hz: f64,

    /// Oscillation amplitude, milli-g.
    #[arg(long, default_value_t = 400.0)]
    amplitude: f64,

    /// Gravity offset magnitude, milli-g.
    #[arg(long, default_value_t = 1000.0)]
    gravity: f64,

    #[arg(long, default_value = "synth")]
    patient_id: String,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum GroupArg {
    Statistical,
    Frequency,
    Both,
}

impl From<GroupArg> for FeatureGroup {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Statistical => FeatureGroup::Statistical,
            GroupArg::Frequency => FeatureGroup::Frequency,
            GroupArg::Both => FeatureGroup::Both,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SensorsArg {
    Ankle,
    Thigh,
    Trunk,
    All,
}

impl From<SensorsArg> for SensorChoice {
    fn from(s: SensorsArg) -> Self {
        match s {
            SensorsArg::Ankle => SensorChoice::Ankle,
            SensorsArg::Thigh => SensorChoice::Thigh,
            SensorsArg::Trunk => SensorChoice::Trunk,
            SensorsArg::All => SensorChoice::All,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LabelRuleArg {
    Majority,
    AnyFreeze,
}

#[derive(Args)]
struct FeaturizeArgs {
    /// Recording file or directory of `S##R##.txt` sessions; repeatable.
    #[arg(short, long, required = true)]
    input: Vec<PathBuf>,

    #[arg(long, value_enum, default_value_t = GroupArg::Both)]
    group: GroupArg,

    #[arg(long, value_enum, default_value_t = SensorsArg::All)]
    sensors: SensorsArg,

    /// Output CSV.
    #[arg(short, long)]
    output: PathBuf,

    /// Window length in samples.
    #[arg(long, default_value_t = 256)]
    length: usize,

    /// Window stride in samples.
    #[arg(long, default_value_t = 32)]
    stride: usize,

    #[arg(long, value_enum, default_value_t = LabelRuleArg::Majority)]
    label_rule: LabelRuleArg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Independent,
    Dependent,
    Both,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(short, long)]
    config: PathBuf,

    /// Run all 13 grid experiments instead of the config's single one.
    #[arg(long)]
    grid: bool,

    /// Split protocol(s) to run; defaults to the config's split mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Parallel experiment jobs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => cmd_synth(args),
        Command::Featurize(args) => cmd_featurize(args),
        Command::Run(args) => cmd_run(args),
    }
}

/// Write via a temp file in the same directory so failures never leave a
/// partial output behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn parse_episode(text: &str) -> Result<FreezeEpisode> {
    let (start, duration) = text
        .split_once(':')
        .with_context(|| format!("episode {text:?} is not START:DUR"))?;
    Ok(FreezeEpisode {
        start_s: start.parse().with_context(|| format!("bad episode start {start:?}"))?,
        duration_s: duration
            .parse()
            .with_context(|| format!("bad episode duration {duration:?}"))?,
    })
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let episodes = args
        .episodes
        .iter()
        .map(|e| parse_episode(e))
        .collect::<Result<Vec<_>>>()?;
    let spec = SynthSpec {
        patient_id: args.patient_id,
        duration_s: args.duration,
        episodes,
        noise_mg: args.noise,
        walk_hz: args.walk_hz,
        freeze_hz: args.freeze_hz,
        amplitude_mg: args.amplitude,
        gravity_mg: args.gravity,
    };
    let recording = generate_synthetic(&spec, args.seed)?;
    let mut buf = Vec::new();
    write_daphnet(&recording, &mut buf)?;
    write_atomic(&args.output, &buf)?;
    eprintln!(
        "wrote {} samples ({} freeze) to {}",
        recording.len(),
        recording
            .samples
            .iter()
            .filter(|s| s.annotation == fog_core::ingest::Annotation::Freeze)
            .count(),
        args.output.display()
    );
    Ok(())
}

fn load_inputs(inputs: &[PathBuf]) -> Result<Vec<Recording>> {
    let mut recordings = Vec::new();
    for input in inputs {
        if input.is_dir() {
            recordings.extend(load_daphnet_dir(input)?);
        } else {
            let file = fs::File::open(input)
                .with_context(|| format!("opening {}", input.display()))?;
            let patient_id = input
                .file_stem()
                .and_then(|s| s.to_str())
                .map(|s| if s.len() >= 3 && s.starts_with('S') { &s[..3] } else { s })
                .unwrap_or("unknown")
                .to_string();
            recordings.push(parse_daphnet(std::io::BufReader::new(file), &patient_id)?);
        }
    }
    Ok(recordings)
}

fn cmd_featurize(args: FeaturizeArgs) -> Result<()> {
    let window = WindowSpec {
        length_samples: args.length,
        stride_samples: args.stride,
        label_rule: match args.label_rule {
            LabelRuleArg::Majority => LabelRule::Majority,
            LabelRuleArg::AnyFreeze => LabelRule::AnyFreeze,
        },
    };
    window.validate()?;
    let recordings = load_inputs(&args.input)?;
    let ctx = SpectralContext::new(64.0, window.length_samples)?;
    let group: FeatureGroup = args.group.into();
    let sensors = SensorChoice::from(args.sensors).sensors();

    let mut parts = Vec::new();
    for (idx, recording) in recordings.iter().enumerate() {
        let filtered = filter_annotation_zero(recording);
        if filtered.is_empty() {
            continue;
        }
        let with_mags = compute_magnitudes(&filtered);
        let mut windows = segment(&with_mags, &window)?;
        if windows.is_empty() {
            continue;
        }
        for w in &mut windows {
            w.segment += idx << 16;
        }
        parts.push(build_matrix(&windows, group, &sensors, &ctx)?);
    }
    if parts.is_empty() {
        bail!("no input recording produced any windows");
    }
    let matrix = FeatureMatrix::vstack(&parts)?;
    let mut buf = Vec::new();
    matrix.to_csv(&mut buf)?;
    write_atomic(&args.output, &buf)?;
    eprintln!(
        "wrote {} rows x {} feature columns to {}",
        matrix.n_rows(),
        matrix.n_cols(),
        args.output.display()
    );
    Ok(())
}

fn write_outputs(out_dir: &Path, output: &ExperimentOutput) -> Result<()> {
    let report = &output.report;
    let stem = format!("{}_{}", report.experiment, report.mode.name());
    write_atomic(
        &out_dir.join(format!("{stem}.json")),
        report_to_json(report)?.as_bytes(),
    )?;
    let mut roc = Vec::new();
    write_roc_csv(&report.roc, &mut roc)?;
    write_atomic(&out_dir.join(format!("{stem}_roc.csv")), &roc)?;
    for (name, model) in &output.models {
        let mut buf = Vec::new();
        model.save_checkpoint(&mut buf)?;
        let path = if output.models.len() == 1 {
            out_dir.join(format!("{stem}_model.json"))
        } else {
            out_dir.join(format!("{stem}_models")).join(format!("{name}.json"))
        };
        write_atomic(&path, &buf)?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut base: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        base.seed = seed;
    }
    if let Some(out) = &args.out {
        base.out_dir = Some(out.clone());
    }
    base.validate()?;
    let out_dir = base.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));

    let modes: Vec<SplitMode> = match args.mode {
        None => vec![base.split.mode],
        Some(ModeArg::Independent) => vec![SplitMode::SubjectIndependent],
        Some(ModeArg::Dependent) => vec![SplitMode::SubjectDependent],
        Some(ModeArg::Both) => vec![
            SplitMode::SubjectIndependent,
            SplitMode::SubjectDependent,
        ],
    };

    let configs = if args.grid { grid_configs(&base) } else { vec![base] };
    let mut jobs = Vec::new();
    for config in &configs {
        for &mode in &modes {
            let mut job = config.clone();
            job.split.mode = mode;
            jobs.push(job);
        }
    }
    // validate the whole grid before any compute
    for job in &jobs {
        job.validate()?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("building thread pool")?;
    let outputs: Vec<Result<ExperimentOutput>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let output = run_experiment(job)?;
                write_outputs(&out_dir, &output)?;
                Ok(output)
            })
            .collect()
    });

    let mut reports: Vec<EvalReport> = Vec::with_capacity(outputs.len());
    for (job, outcome) in jobs.iter().zip(outputs) {
        match outcome {
            Ok(output) => {
                let r = &output.report;
                eprintln!(
                    "{} [{}]: AUC {:.4} sens {} spec {}",
                    r.experiment,
                    r.mode.name(),
                    r.auc,
                    r.sensitivity.map_or("-".to_string(), |v| format!("{v:.4}")),
                    r.specificity.map_or("-".to_string(), |v| format!("{v:.4}")),
                );
                reports.push(output.report);
            }
            Err(err) => bail!("experiment {} [{}] failed: {err}", job.id, job.split.mode.name()),
        }
    }

    if args.grid {
        write_atomic(&out_dir.join("summary.csv"), summary_csv(&reports).as_bytes())?;
    }
    Ok(())
}
