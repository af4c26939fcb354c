//! The `matchalign` command line: `synth`, `train`, `align`, `eval`, `report`.
//!
//! Effective settings resolve as defaults ← config file ← flags. The config
//! file is flat TOML (keys are the field names below; keys a command does not
//! know are ignored) or a run manifest written by an earlier invocation,
//! which replays that run. Relative paths in a config file resolve against
//! the file's directory.

use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::aligner::{train, write_loss_trace, TrainConfig};
use crate::coarse::llm::{PromptTemplatePaths, ENV_KEY, ENV_URL};
use crate::coarse::{CoarseConfig, CoarseMode, HttpLlmClient, LlmClient, LlmEndpointConfig};
use crate::error::Error;
use crate::model::{compute_offset_stats, load_match, render_report, MatchRecord, DEFAULT_WINDOWS};
use crate::numerics::read_checkpoint;
use crate::realign::{pipeline_align, write_aligned, RealignConfig};
use crate::synth::dataset::match_file;
use crate::synth::{load_split, read_manifest, write_dataset, Split, SynthConfig};

pub const RUN_MANIFEST: &str = "run_manifest.json";
pub const CHECKPOINT_FILE: &str = "heads.mtac";
pub const LOSS_FILE: &str = "loss.csv";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ENDPOINT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "matchalign",
    version,
    about = "Align match commentary timestamps to video key frames"
)]
pub struct Cli {
    /// Flat TOML config file, or a run manifest to replay.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with planted ground truth.
    Synth(SynthArgs),
    /// Train projection heads on a dataset split.
    Train(TrainArgs),
    /// Correct commentary timestamps (coarse stage, then fine realignment).
    Align(AlignArgs),
    /// Offset statistics of aligned files against ground truth.
    Eval(EvalArgs),
    /// Offset table plus histogram CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub num_matches: Option<usize>,
    #[arg(long)]
    pub num_test: Option<usize>,
    #[arg(long)]
    pub num_val: Option<usize>,
    #[arg(long)]
    pub commentaries: Option<usize>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub replay_prob: Option<f64>,
    #[arg(long)]
    pub filler_per_minute: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `synth`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub split: Option<Split>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub output_dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Match file; repeatable.
    #[arg(long = "match")]
    pub matches: Vec<PathBuf>,
    /// Align every match of `--split` in this dataset directory.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub split: Option<Split>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory receiving one aligned match file per input.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub coarse_mode: Option<CoarseMode>,
    #[arg(long)]
    pub before_s: Option<f64>,
    #[arg(long)]
    pub after_s: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub llm_url: Option<String>,
    #[arg(long)]
    pub llm_model: Option<String>,
    #[arg(long)]
    pub llm_timeout_s: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TimestampField {
    /// `t_aligned`
    Aligned,
    /// `t`, the uncorrected source timestamp
    Input,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Aligned match files or directories of them.
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
    /// Comma-separated window radii in seconds.
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub field: Option<TimestampField>,
    /// Also write the table and a run manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "input")]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub field: Option<TimestampField>,
    #[arg(long)]
    pub bin_s: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthRun {
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub synth: SynthConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRun {
    pub data: Option<PathBuf>,
    pub split: Option<Split>,
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub train: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignRun {
    pub matches: Vec<PathBuf>,
    pub data: Option<PathBuf>,
    pub split: Option<Split>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Defaults to `llm` when an endpoint URL is configured, else `lexical`.
    pub coarse_mode: Option<CoarseMode>,
    pub before_s: f64,
    pub after_s: f64,
    pub fps: f64,
    pub bin_s: f64,
    pub tau: f64,
    pub candidate_span_s: f64,
    pub llm_url: Option<String>,
    pub llm_model: String,
    pub llm_timeout_s: f64,
    pub llm_max_retries: u32,
    pub llm_max_tokens: u32,
    pub llm_max_in_flight: usize,
    pub summarize_template: Option<PathBuf>,
    pub predict_template: Option<PathBuf>,
}

impl Default for AlignRun {
    fn default() -> Self {
        let realign = RealignConfig::default();
        let coarse = CoarseConfig::default();
        let llm = LlmEndpointConfig::default();
        Self {
            matches: Vec::new(),
            data: None,
            split: None,
            checkpoint: None,
            out: None,
            coarse_mode: None,
            before_s: realign.before_s,
            after_s: realign.after_s,
            fps: realign.fps,
            bin_s: coarse.bin_s,
            tau: coarse.tau,
            candidate_span_s: coarse.candidate_span_s,
            llm_url: None,
            llm_model: llm.model_name,
            llm_timeout_s: llm.timeout_s,
            llm_max_retries: llm.max_retries,
            llm_max_tokens: llm.max_tokens,
            llm_max_in_flight: llm.max_in_flight,
            summarize_template: None,
            predict_template: None,
        }
    }
}

impl AlignRun {
    pub fn realign(&self) -> RealignConfig {
        RealignConfig {
            before_s: self.before_s,
            after_s: self.after_s,
            fps: self.fps,
        }
    }

    pub fn endpoint(&self) -> Option<LlmEndpointConfig> {
        let base_url = self.llm_url.clone().filter(|u| !u.is_empty())?;
        Some(LlmEndpointConfig {
            base_url,
            model_name: self.llm_model.clone(),
            timeout_s: self.llm_timeout_s,
            max_retries: self.llm_max_retries,
            max_tokens: self.llm_max_tokens,
            max_in_flight: self.llm_max_in_flight,
            prompt_template_paths: PromptTemplatePaths {
                summarize: self.summarize_template.clone(),
                predict: self.predict_template.clone(),
            },
            api_key: std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty()),
        })
    }

    pub fn mode(&self) -> CoarseMode {
        self.coarse_mode.unwrap_or(if self.llm_url.is_some() {
            CoarseMode::Llm
        } else {
            CoarseMode::Lexical
        })
    }

    pub fn coarse(&self) -> CoarseConfig {
        CoarseConfig {
            mode: self.mode(),
            bin_s: self.bin_s,
            tau: self.tau,
            candidate_span_s: self.candidate_span_s,
            endpoint: self.endpoint(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalRun {
    pub inputs: Vec<PathBuf>,
    pub windows: Vec<f64>,
    pub field: TimestampField,
    pub bin_s: f64,
    pub out: Option<PathBuf>,
}

impl Default for EvalRun {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            windows: DEFAULT_WINDOWS.to_vec(),
            field: TimestampField::Aligned,
            bin_s: 10.0,
            out: None,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Usage(m),
            other => CliError::Run(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Run(Error::Endpoint(_)) => EXIT_ENDPOINT,
            CliError::Run(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Serialize, Deserialize)]
struct RunManifest<T> {
    command: String,
    version: String,
    config: T,
}

/// Loads the command's settings from a TOML file or a run manifest, with
/// relative paths resolved against the file's directory.
fn load_config<T: DeserializeOwned + Default + Serialize>(
    path: Option<&Path>,
) -> CliResult<(T, PathBuf)> {
    let Some(path) = path else {
        return Ok((T::default(), PathBuf::new()));
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Run(Error::io(path, e)))?;
    let value: serde_json::Value = if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        match v.get("config") {
            Some(c) if v.get("command").is_some() => c.clone(),
            _ => v,
        }
    } else {
        let t: toml::Table =
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t).expect("toml converts to json")
    };
    let cfg =
        serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok((
        cfg,
        path.parent().map(Path::to_path_buf).unwrap_or_default(),
    ))
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() && !base.as_os_str().is_empty() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

/// `target` relative to `base` when possible.
fn relative(base: &Path, target: &Path) -> PathBuf {
    match (std::path::absolute(base), std::path::absolute(target)) {
        (Ok(b), Ok(t)) => pathdiff::diff_paths(&t, &b).unwrap_or(t),
        _ => target.to_path_buf(),
    }
}

fn relative_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        *p = relative(base, p);
    }
}

fn write_run_manifest<T: Serialize>(dir: &Path, command: &str, config: T) -> CliResult<()> {
    let manifest = RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config,
    };
    let path = dir.join(RUN_MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::Run(Error::io(&path, e)))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Run(Error::io(dir, e)))
}

macro_rules! override_from {
    ($args:expr, $cfg:expr, $($flag:ident => $field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$flag.clone() { $cfg.$field = v.into(); })*
    };
}

pub fn resolve_synth(args: &SynthArgs, config: Option<&Path>) -> CliResult<SynthRun> {
    let (mut run, base): (SynthRun, _) = load_config(config)?;
    resolve_opt(&base, &mut run.out);
    if args.out.is_some() {
        run.out = args.out.clone();
    }
    let s = &mut run.synth;
    override_from!(args, s,
        seed => seed, num_matches => num_matches, num_test => num_test, num_val => num_val,
        commentaries => commentaries_per_match, duration_s => duration_s, dim => d,
        noise_sigma => noise_sigma, replay_prob => replay_prob, filler_per_minute => filler_per_minute,
    );
    Ok(run)
}

pub fn cmd_synth(run: &SynthRun) -> CliResult<()> {
    let out = run
        .out
        .as_deref()
        .ok_or_else(|| usage("synth needs --out"))?;
    if run.synth.num_matches == 0 {
        return Err(usage("num_matches must be at least 1"));
    }
    let manifest = write_dataset(out, &run.synth)?;
    let mut recorded = run.clone();
    relative_opt(out, &mut recorded.out);
    write_run_manifest(out, "synth", &recorded)?;
    log::info!(
        "wrote {} matches ({} train, {} val, {} test) to {}",
        run.synth.num_matches,
        manifest.train.len(),
        manifest.val.len(),
        manifest.test.len(),
        out.display()
    );
    Ok(())
}

pub fn resolve_train(args: &TrainArgs, config: Option<&Path>) -> CliResult<TrainRun> {
    let (mut run, base): (TrainRun, _) = load_config(config)?;
    resolve_opt(&base, &mut run.data);
    resolve_opt(&base, &mut run.out);
    resolve_opt(&base, &mut run.train.checkpoint);
    if args.data.is_some() {
        run.data = args.data.clone();
    }
    if args.out.is_some() {
        run.out = args.out.clone();
        run.train.checkpoint = None;
    }
    if args.split.is_some() {
        run.split = args.split;
    }
    let t = &mut run.train;
    override_from!(args, t, seed => seed, epochs => epochs, lr => lr, weight_decay => weight_decay);
    if args.hidden_dim.is_some() {
        t.hidden_dim = args.hidden_dim;
    }
    if args.output_dim.is_some() {
        t.output_dim = args.output_dim;
    }
    Ok(run)
}

pub fn cmd_train(run: &TrainRun) -> CliResult<()> {
    let data = run
        .data
        .as_deref()
        .ok_or_else(|| usage("train needs --data"))?;
    let out = run
        .out
        .as_deref()
        .ok_or_else(|| usage("train needs --out"))?;
    run.train.validate()?;
    create_dir(out)?;
    let dataset = load_split(data, run.split.unwrap_or(Split::Train))?;
    if dataset.is_empty() {
        return Err(usage("the selected split has no matches"));
    }
    let mut cfg = run.train.clone();
    cfg.checkpoint
        .get_or_insert_with(|| out.join(CHECKPOINT_FILE));
    let outcome = train(&dataset, &cfg)?;
    write_loss_trace(out.join(LOSS_FILE), &outcome.loss_trace)?;

    let mut recorded = run.clone();
    recorded.train.checkpoint = cfg.checkpoint.clone();
    relative_opt(out, &mut recorded.data);
    relative_opt(out, &mut recorded.train.checkpoint);
    relative_opt(out, &mut recorded.out);
    write_run_manifest(out, "train", &recorded)?;
    if let (Some(first), Some(last)) = (outcome.loss_trace.first(), outcome.loss_trace.last()) {
        log::info!("mean loss {:.4} → {:.4}", first.mean_loss, last.mean_loss);
    }
    Ok(())
}

pub fn resolve_align(args: &AlignArgs, config: Option<&Path>) -> CliResult<AlignRun> {
    let (mut run, base): (AlignRun, _) = load_config(config)?;
    run.matches.iter_mut().for_each(|p| resolve(&base, p));
    resolve_opt(&base, &mut run.data);
    resolve_opt(&base, &mut run.checkpoint);
    resolve_opt(&base, &mut run.out);
    resolve_opt(&base, &mut run.summarize_template);
    resolve_opt(&base, &mut run.predict_template);
    if !args.matches.is_empty() {
        run.matches = args.matches.clone();
    }
    if args.data.is_some() {
        run.data = args.data.clone();
    }
    if args.split.is_some() {
        run.split = args.split;
    }
    if args.checkpoint.is_some() {
        run.checkpoint = args.checkpoint.clone();
    }
    if args.out.is_some() {
        run.out = args.out.clone();
    }
    if args.coarse_mode.is_some() {
        run.coarse_mode = args.coarse_mode;
    }
    if args.llm_url.is_some() {
        run.llm_url = args.llm_url.clone();
    } else if run.llm_url.is_none() {
        run.llm_url = std::env::var(ENV_URL).ok().filter(|u| !u.is_empty());
    }
    override_from!(args, run, before_s => before_s, after_s => after_s, tau => tau,
        llm_model => llm_model, llm_timeout_s => llm_timeout_s);
    Ok(run)
}

fn checkpoint_id(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::Run(Error::io(path, e)))?;
    let mut h = std::collections::hash_map::DefaultHasher::new();
    bytes.hash(&mut h);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(format!("{stem}-{:016x}", h.finish()))
}

/// Aligned records, in input order.
pub fn cmd_align(run: &AlignRun) -> CliResult<Vec<MatchRecord>> {
    let checkpoint = run
        .checkpoint
        .as_deref()
        .ok_or_else(|| usage("align needs --checkpoint"))?;
    let out = run
        .out
        .as_deref()
        .ok_or_else(|| usage("align needs --out"))?;
    let mut inputs = run.matches.clone();
    if let Some(data) = &run.data {
        let manifest = read_manifest(data)?;
        inputs.extend(
            manifest
                .ids(run.split.unwrap_or(Split::Test))
                .iter()
                .map(|id| match_file(data, id)),
        );
    }
    if inputs.is_empty() {
        return Err(usage("align needs --match or --data"));
    }
    run.realign().validate()?;
    let coarse = run.coarse();
    if coarse.mode == CoarseMode::Llm && coarse.endpoint.is_none() {
        return Err(usage(format!(
            "--coarse-mode llm needs --llm-url or {ENV_URL}"
        )));
    }
    let client = match &coarse.endpoint {
        Some(e) if coarse.mode == CoarseMode::Llm => Some(HttpLlmClient::new(e.clone())?),
        _ => None,
    };
    let heads = read_checkpoint(checkpoint)?;
    let id = checkpoint_id(checkpoint)?;
    create_dir(out)?;

    let mut recorded = run.clone();
    recorded.matches = inputs.iter().map(|p| relative(out, p)).collect();
    recorded.data = None;
    recorded.coarse_mode = Some(coarse.mode);
    relative_opt(out, &mut recorded.checkpoint);
    relative_opt(out, &mut recorded.out);
    relative_opt(out, &mut recorded.summarize_template);
    relative_opt(out, &mut recorded.predict_template);
    let provenance_cfg = serde_json::to_value(&recorded).expect("config serializes");

    let mut aligned = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let record = load_match(path)?;
        let report = pipeline_align(
            &record,
            &heads,
            &coarse,
            &run.realign(),
            client.as_ref().map(|c| c as &dyn LlmClient),
        )?;
        for w in &report.warnings {
            eprintln!("warning: {}: {w}", record.match_id);
        }
        write_aligned(
            out.join(format!("{}.json", record.match_id)),
            &record,
            &report,
            &id,
            provenance_cfg.clone(),
        )?;
        aligned.push(report.apply(&record));
    }
    write_run_manifest(out, "align", &recorded)?;
    Ok(aligned)
}

fn resolve_eval_like(
    inputs: &[PathBuf],
    windows: &Option<Vec<f64>>,
    field: Option<TimestampField>,
    bin_s: Option<f64>,
    out: &Option<PathBuf>,
    config: Option<&Path>,
) -> CliResult<EvalRun> {
    let (mut run, base): (EvalRun, _) = load_config(config)?;
    run.inputs.iter_mut().for_each(|p| resolve(&base, p));
    resolve_opt(&base, &mut run.out);
    if !inputs.is_empty() {
        run.inputs = inputs.to_vec();
    }
    if let Some(w) = windows {
        run.windows = w.clone();
    }
    if let Some(f) = field {
        run.field = f;
    }
    if let Some(b) = bin_s {
        run.bin_s = b;
    }
    if out.is_some() {
        run.out = out.clone();
    }
    Ok(run)
}

pub fn resolve_eval(args: &EvalArgs, config: Option<&Path>) -> CliResult<EvalRun> {
    resolve_eval_like(
        &args.inputs,
        &args.windows,
        args.field,
        None,
        &args.out,
        config,
    )
}

pub fn resolve_report(args: &ReportArgs, config: Option<&Path>) -> CliResult<EvalRun> {
    resolve_eval_like(
        &args.inputs,
        &args.windows,
        args.field,
        args.bin_s,
        &args.out,
        config,
    )
}

/// Match files named by `inputs`; directories contribute their `*.json`
/// files except run manifests, sorted by name.
fn expand_inputs(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::Run(Error::io(p, e)))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|e| e == "json")
                        && f.file_name()
                            .is_some_and(|n| n != RUN_MANIFEST && n != "manifest.json")
                        && !f.to_string_lossy().ends_with(".asr.json")
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(usage("no input match files"));
    }
    Ok(files)
}

/// Pooled `(pred, gt)` over every commentary of every input.
pub fn collect_offsets(
    inputs: &[PathBuf],
    field: TimestampField,
) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let (mut pred, mut gt) = (Vec::new(), Vec::new());
    for path in expand_inputs(inputs)? {
        let record = load_match(&path)?;
        gt.extend(record.ground_truth()?);
        for (i, c) in record.commentaries.iter().enumerate() {
            pred.push(match field {
                TimestampField::Input => c.t,
                TimestampField::Aligned => c.t_aligned.ok_or_else(|| {
                    Error::invariant(
                        &record.match_id,
                        format!("commentaries[{i}].t_aligned"),
                        "missing; run align first",
                    )
                })?,
            });
        }
    }
    Ok((pred, gt))
}

fn check_windows(windows: &[f64]) -> CliResult<()> {
    if windows.is_empty()
        || windows.windows(2).any(|w| w[0] > w[1])
        || windows.iter().any(|w| *w < 0.0)
    {
        return Err(usage("--windows must be non-negative and ascending"));
    }
    Ok(())
}

/// Returns the rendered table.
pub fn cmd_eval(run: &EvalRun) -> CliResult<String> {
    check_windows(&run.windows)?;
    let (pred, gt) = collect_offsets(&run.inputs, run.field)?;
    let stats = compute_offset_stats(&pred, &gt, &run.windows)?;
    let table = render_report(&stats, run.bin_s).table;
    if let Some(out) = &run.out {
        create_dir(out)?;
        let path = out.join("table.txt");
        fs::write(&path, &table).map_err(|e| CliError::Run(Error::io(&path, e)))?;
        write_run_manifest(out, "eval", relative_eval(run, out))?;
    }
    Ok(table)
}

fn relative_eval(run: &EvalRun, out: &Path) -> EvalRun {
    let mut recorded = run.clone();
    recorded.inputs = run.inputs.iter().map(|p| relative(out, p)).collect();
    relative_opt(out, &mut recorded.out);
    recorded
}

/// Writes `table.txt` and `histogram.csv`; returns the table.
pub fn cmd_report(run: &EvalRun) -> CliResult<String> {
    check_windows(&run.windows)?;
    if !(run.bin_s > 0.0) {
        return Err(usage("--bin-s must be positive"));
    }
    let out = run
        .out
        .as_deref()
        .ok_or_else(|| usage("report needs --out"))?;
    let (pred, gt) = collect_offsets(&run.inputs, run.field)?;
    let stats = compute_offset_stats(&pred, &gt, &run.windows)?;
    let report = render_report(&stats, run.bin_s);
    create_dir(out)?;
    for (name, body) in [
        ("table.txt", &report.table),
        ("histogram.csv", &report.histogram_csv()),
    ] {
        let path = out.join(name);
        fs::write(&path, body).map_err(|e| CliError::Run(Error::io(&path, e)))?;
    }
    write_run_manifest(out, "report", relative_eval(run, out))?;
    Ok(report.table)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Synth(a) => cmd_synth(&resolve_synth(a, config)?),
        Command::Train(a) => cmd_train(&resolve_train(a, config)?),
        Command::Align(a) => cmd_align(&resolve_align(a, config)?).map(|_| ()),
        Command::Eval(a) => cmd_eval(&resolve_eval(a, config)?).map(|t| print!("{t}")),
        Command::Report(a) => cmd_report(&resolve_report(a, config)?).map(|t| print!("{t}")),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run_from(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(
            &cfg,
            "epochs = 7\nlr = 0.01\ndata = \"ds\"\nbefore_s = 10.0\n",
        )
        .unwrap();
        let args = TrainArgs {
            data: None,
            split: None,
            out: None,
            seed: Some(3),
            epochs: None,
            lr: Some(0.5),
            weight_decay: None,
            hidden_dim: None,
            output_dim: None,
        };
        let run = resolve_train(&args, Some(&cfg)).unwrap();
        assert_eq!(run.train.epochs, 7);
        assert_eq!(run.train.lr, 0.5);
        assert_eq!(run.train.seed, 3);
        assert_eq!(run.train.weight_decay, 0.01);
        assert_eq!(run.data.unwrap(), dir.path().join("ds"));
    }

    #[test]
    fn bad_config_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        fs::write(&cfg, "epochs = \"many\"\n").unwrap();
        let code = run_from([
            "matchalign",
            "--config",
            cfg.to_str().unwrap(),
            "train",
            "--out",
            "x",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_from(["matchalign", "bogus"]), EXIT_USAGE);
        assert_eq!(
            CliError::from(Error::Endpoint("x".into())).exit_code(),
            EXIT_ENDPOINT
        );
        assert_eq!(
            CliError::from(Error::EmptyWindow { index: 0 }).exit_code(),
            EXIT_DATA
        );
        assert_eq!(
            CliError::from(Error::Config("x".into())).exit_code(),
            EXIT_USAGE
        );
    }

    #[test]
    fn zero_matches_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("ds");
        let code = run_from([
            "matchalign",
            "synth",
            "--out",
            out.to_str().unwrap(),
            "--num-matches",
            "0",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn window_list_parses() {
        let cli = Cli::try_parse_from([
            "matchalign",
            "eval",
            "--input",
            "a.json",
            "--windows",
            "5,15",
        ])
        .unwrap();
        let Command::Eval(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.windows, Some(vec![5.0, 15.0]));
    }
}
