//! `emospan` command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors (bad flags, bad input files,
//! schema problems), 1 on runtime failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use emospan::analysis::{
    alpha_sweep, default_alpha_grid, label_correlations, sentence_heatmap, word_associations, LabelSource,
};
use emospan::checkpoint::{load_checkpoint, CheckpointMeta};
use emospan::data::{compute_stats, load_ec_tsv, load_ec_tsv_unlabeled, normalize, write_ec_tsv, Dataset, Split};
use emospan::labels::Language;
use emospan::metrics::{evaluate, stratified_eval, MetricReport};
use emospan::model::{check_threshold, SpanModel};
use emospan::trainer::{predict_dataset, train, Ablation, EncoderKind, SelectionMetric, TrainConfig};
use emospan::{Error, LabelSpace, Result};

/// Stdout writes that tolerate a closed pipe (`emospan … | head`).
macro_rules! emit {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! emitln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "emospan", version, about = "Multi-label emotion classification as span prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check E-c files against the label schema and print dataset statistics.
    ValidateData(ValidateArgs),
    /// Fine-tune a model and keep the best checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a labeled file, optionally by co-existing-emotion strata.
    Eval(EvalArgs),
    /// Write predictions in the E-c layout.
    Predict(PredictArgs),
    /// Top-k words per emotion by hidden-state similarity.
    AnalyzeWords(WordsArgs),
    /// Label-by-word similarity heatmap for one sentence.
    AnalyzeHeatmap(HeatmapArgs),
    /// Correlation matrices of gold (and optionally predicted) labels.
    AnalyzeCorrelations(CorrelationArgs),
    /// Train once per α and plot validation metrics.
    SweepAlpha(SweepArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// E-c files; the split is inferred from each file name.
    #[arg(long, required = true, num_args = 1..)]
    tsv: Vec<PathBuf>,
    #[arg(long, default_value = "english")]
    language: String,
    /// Also write `stats.json` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flags mapping onto training-config fields; unset flags keep the
/// `--config` file value or the default.
#[derive(Debug, Args)]
struct TrainFlags {
    /// Flat JSON file with training-config fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "english")]
    language: String,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    lr_encoder: Option<f64>,
    #[arg(long)]
    lr_head: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// none | no_lca | no_bce | no_label_segment
    #[arg(long)]
    ablation: Option<String>,
    /// jacS | miF1 | maF1
    #[arg(long)]
    selection_metric: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// toy | bert
    #[arg(long)]
    encoder: Option<String>,
    /// Pretrained checkpoint directory or registry id (resolved under SPANEMO_CACHE).
    #[arg(long)]
    encoder_path: Option<String>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    toy_width: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    tsv: PathBuf,
    /// Defaults to the checkpoint's threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Minimum gold-label counts, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    strata: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    tsv: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct WordsArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    tsv: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// File holding the example named by `--id`.
    #[arg(long, requires = "id", conflicts_with = "text")]
    tsv: Option<PathBuf>,
    #[arg(long)]
    id: Option<String>,
    /// Raw sentence to analyze instead of a file row.
    #[arg(long)]
    text: Option<String>,
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    #[arg(long)]
    tsv: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Adds the matrix of this checkpoint's predictions.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value = "english")]
    language: String,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    valid: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated α values; defaults to 0, 0.1, …, 1.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[command(flatten)]
    flags: TrainFlags,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::ValidateData(a) => validate_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::AnalyzeWords(a) => words_cmd(a),
        Command::AnalyzeHeatmap(a) => heatmap_cmd(a),
        Command::AnalyzeCorrelations(a) => correlations_cmd(a),
        Command::SweepAlpha(a) => sweep_cmd(a),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Usage(format!("no such file: {}", path.display())))
    }
}

fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::Usage(format!("no such directory: {}", path.display())))
    }
}

fn split_of(path: &Path, fallback: Split) -> Split {
    Split::infer(path).unwrap_or(fallback)
}

fn load(path: &Path, space: &LabelSpace, fallback: Split) -> Result<Dataset> {
    require_file(path)?;
    load_ec_tsv(path, space, split_of(path, fallback))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Paths, language and effective config, written to `<out>/run.json`.
#[derive(Serialize)]
struct RunRecord<'a, C: Serialize> {
    command: &'a str,
    language: Option<Language>,
    inputs: BTreeMap<&'a str, &'a Path>,
    out: &'a Path,
    config: C,
}

fn echo_run<C: Serialize>(
    out: &Path,
    command: &str,
    language: Option<Language>,
    inputs: &[(&'static str, &Path)],
    config: C,
) -> Result<()> {
    let record = RunRecord { command, language, inputs: inputs.iter().copied().collect(), out, config };
    write_json(&out.join("run.json"), &record)
}

fn validate_data(a: ValidateArgs) -> Result<()> {
    let language: Language = a.language.parse()?;
    let space = LabelSpace::for_language(language);
    let mut sets = Vec::new();
    for path in &a.tsv {
        let split = Split::infer(path).ok_or_else(|| {
            Error::Usage(format!("cannot tell the split of {}; name it *train*, *dev* or *test*", path.display()))
        })?;
        let ds = load(path, &space, split)?;
        emitln!("{}: {} rows, schema ok", path.display(), ds.len());
        sets.push(ds);
    }
    let stats = compute_stats(&sets.iter().collect::<Vec<_>>())?;
    emit!("{stats}");
    if let Some(out) = &a.out {
        create_out(out)?;
        write_json(&out.join("stats.json"), &stats)?;
        let inputs: Vec<(&'static str, &Path)> = a.tsv.iter().map(|p| ("tsv", p.as_path())).collect();
        echo_run(out, "validate-data", Some(language), &inputs, ())?;
    }
    Ok(())
}

fn merged_config(flags: &TrainFlags) -> Result<(TrainConfig, Language)> {
    let language: Language = flags.language.parse()?;
    let mut cfg = match &flags.config {
        Some(path) => {
            require_file(path)?;
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))?
        }
        None => TrainConfig::default(),
    };
    macro_rules! set {
        ($flag:ident => $field:ident) => {
            if let Some(v) = flags.$flag.clone() {
                cfg.$field = v;
            }
        };
    }
    set!(batch_size => batch_size);
    set!(epochs => epochs);
    set!(patience => early_stop_patience);
    set!(lr_encoder => lr_encoder);
    set!(lr_head => lr_head);
    set!(dropout => dropout);
    set!(alpha => alpha);
    set!(seed => seed);
    set!(threshold => threshold);
    set!(max_len => max_len);
    set!(toy_width => toy_width);
    if let Some(a) = &flags.ablation {
        cfg.ablation = a.parse::<Ablation>()?;
    }
    if let Some(m) = &flags.selection_metric {
        cfg.selection_metric = m.parse::<SelectionMetric>()?;
    }
    if let Some(e) = &flags.encoder {
        cfg.encoder = match e.as_str() {
            "toy" => EncoderKind::Toy,
            "bert" => EncoderKind::Bert,
            other => return Err(Error::Usage(format!("unknown encoder `{other}`"))),
        };
    }
    if let Some(p) = &flags.encoder_path {
        cfg.encoder_path = Some(p.clone());
    }
    if cfg.encoder == EncoderKind::Bert && cfg.encoder_path.is_none() {
        cfg.encoder_path = Some(language.default_encoder_id().to_string());
    }
    cfg.validate()?;
    Ok((cfg, language))
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let (cfg, language) = merged_config(&a.flags)?;
    let space = LabelSpace::for_language(language);
    let train_set = load(&a.train, &space, Split::Train)?;
    let valid_set = load(&a.valid, &space, Split::Valid)?;
    create_out(&a.out)?;
    write_json(&a.out.join("config.json"), &cfg)?;
    echo_run(&a.out, "train", Some(language), &[("train", &a.train), ("valid", &a.valid)], &cfg)?;

    let outcome = train(&cfg, &train_set, &valid_set, &a.out)?;
    emitln!(
        "trained {} epochs; best {} = {:.4} at epoch {}",
        outcome.epochs_run,
        selection_name(cfg.selection_metric),
        outcome.best_score,
        outcome.best_epoch
    );
    emitln!("checkpoint: {}", outcome.checkpoint.display());
    emitln!("log: {}", outcome.log_path.display());
    Ok(())
}

fn selection_name(m: SelectionMetric) -> &'static str {
    match m {
        SelectionMetric::MicroF1 => "miF1",
        SelectionMetric::MacroF1 => "maF1",
        SelectionMetric::Jaccard => "jacS",
    }
}

fn open_checkpoint(path: &Path) -> Result<(SpanModel, CheckpointMeta)> {
    require_dir(path)?;
    load_checkpoint(path)
}

fn threshold_or(meta: &CheckpointMeta, flag: Option<f64>) -> Result<f64> {
    check_threshold(flag.unwrap_or(meta.threshold))
}

#[derive(Serialize)]
struct EvalOutput {
    threshold: f64,
    overall: MetricReport,
    /// Keyed by minimum gold-label count.
    strata: BTreeMap<usize, MetricReport>,
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let (model, meta) = open_checkpoint(&a.checkpoint)?;
    let threshold = threshold_or(&meta, a.threshold)?;
    let ds = load(&a.tsv, &meta.space, Split::Test)?;
    let (_, preds) = predict_dataset(&model, &ds, threshold)?;
    let gold = ds.labels();
    let overall = evaluate(&gold, &preds)?;
    let names = meta.space.names();
    emit!("{}", overall.to_table("overall", names));
    let mut strata = BTreeMap::new();
    for &k in &a.strata {
        let r = stratified_eval(&gold, &preds, k)?;
        emit!("{}", r.to_table(&format!("at least {k} gold labels"), names));
        strata.insert(k, r);
    }
    if let Some(out) = &a.out {
        create_out(out)?;
        write_json(&out.join("eval.json"), &EvalOutput { threshold, overall, strata })?;
        echo_run(out, "eval", None, &[("checkpoint", &a.checkpoint), ("tsv", &a.tsv)], threshold)?;
    }
    Ok(())
}

fn predict_cmd(a: PredictArgs) -> Result<()> {
    let (model, meta) = open_checkpoint(&a.checkpoint)?;
    let threshold = threshold_or(&meta, a.threshold)?;
    require_file(&a.tsv)?;
    let ds = load_ec_tsv_unlabeled(&a.tsv, &meta.space, split_of(&a.tsv, Split::Test))?;
    let (probs, preds) = predict_dataset(&model, &ds, threshold)?;
    create_out(&a.out)?;

    let path = a.out.join("predictions.txt");
    let mut buf = Vec::new();
    write_ec_tsv(&mut buf, &ds, Some(&preds))?;
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;

    let mut csv = String::from("id");
    for n in meta.space.names() {
        csv.push(',');
        csv.push_str(n);
    }
    csv.push('\n');
    for (ex, p) in ds.examples.iter().zip(&probs) {
        csv.push_str(&ex.id);
        for v in p.as_slice() {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    let path = a.out.join("probabilities.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    echo_run(&a.out, "predict", None, &[("checkpoint", &a.checkpoint), ("tsv", &a.tsv)], threshold)?;
    emitln!("wrote {} predictions to {}", preds.len(), a.out.join("predictions.txt").display());
    Ok(())
}

fn words_cmd(a: WordsArgs) -> Result<()> {
    let (model, meta) = open_checkpoint(&a.checkpoint)?;
    let ds = load(&a.tsv, &meta.space, Split::Valid)?;
    let table = word_associations(&model, &ds, a.k)?;
    create_out(&a.out)?;
    let path = a.out.join("word_associations.csv");
    fs::write(&path, table.to_csv()).map_err(|e| Error::io(&path, e))?;
    echo_run(&a.out, "analyze-words", None, &[("checkpoint", &a.checkpoint), ("tsv", &a.tsv)], a.k)?;
    emit!("{}", table.to_text());
    Ok(())
}

fn heatmap_cmd(a: HeatmapArgs) -> Result<()> {
    let (model, meta) = open_checkpoint(&a.checkpoint)?;
    let (stem, tokens) = match (&a.tsv, &a.id, &a.text) {
        (Some(tsv), Some(id), None) => {
            let ds = load(tsv, &meta.space, Split::Valid)?;
            let ex = ds.find(id).ok_or_else(|| Error::Usage(format!("no example `{id}` in {}", tsv.display())))?;
            (format!("heatmap_{}", sanitize(id)), ex.tokens.clone())
        }
        (None, _, Some(text)) => ("heatmap".to_string(), normalize(text)),
        _ => return Err(Error::Usage("give either --tsv with --id, or --text".into())),
    };
    let matrix = sentence_heatmap(&model, &tokens)?;
    create_out(&a.out)?;
    matrix.write(&a.out, &stem, &tokens.join(" "))?;
    let mut inputs: Vec<(&'static str, &Path)> = vec![("checkpoint", &a.checkpoint)];
    if let Some(t) = &a.tsv {
        inputs.push(("tsv", t));
    }
    echo_run(&a.out, "analyze-heatmap", None, &inputs, (&a.id, &a.text))?;
    emitln!("wrote {}", a.out.join(format!("{stem}.csv")).display());
    Ok(())
}

fn sanitize(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn correlations_cmd(a: CorrelationArgs) -> Result<()> {
    let checkpoint = a.checkpoint.as_deref().map(open_checkpoint).transpose()?;
    let space = match &checkpoint {
        Some((_, meta)) => meta.space.clone(),
        None => LabelSpace::for_language(a.language.parse()?),
    };
    let ds = load(&a.tsv, &space, Split::Valid)?;
    create_out(&a.out)?;
    let gold = label_correlations(&ds.labels(), space.names(), LabelSource::Gold)?;
    gold.write(&a.out, "correlations_gold")?;
    if let Some((model, meta)) = &checkpoint {
        let threshold = threshold_or(meta, a.threshold)?;
        let (_, preds) = predict_dataset(model, &ds, threshold)?;
        label_correlations(&preds, space.names(), LabelSource::Predicted)?.write(&a.out, "correlations_predicted")?;
    }
    let mut inputs: Vec<(&'static str, &Path)> = vec![("tsv", &a.tsv)];
    if let Some(c) = &a.checkpoint {
        inputs.push(("checkpoint", c));
    }
    echo_run(&a.out, "analyze-correlations", None, &inputs, a.threshold)?;
    emitln!("wrote correlation matrices to {}", a.out.display());
    Ok(())
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let (cfg, language) = merged_config(&a.flags)?;
    let space = LabelSpace::for_language(language);
    let train_set = load(&a.train, &space, Split::Train)?;
    let valid_set = load(&a.valid, &space, Split::Valid)?;
    let grid = if a.grid.is_empty() { default_alpha_grid() } else { a.grid.clone() };
    create_out(&a.out)?;
    write_json(&a.out.join("config.json"), &cfg)?;
    echo_run(&a.out, "sweep-alpha", Some(language), &[("train", &a.train), ("valid", &a.valid)], (&cfg, &grid))?;
    let report = alpha_sweep(&cfg, &grid, &train_set, &valid_set, &a.out)?;
    report.write(&a.out, "alpha_sweep")?;
    emit!("{}", report.to_csv());
    Ok(())
}
