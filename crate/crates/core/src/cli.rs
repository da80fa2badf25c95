//! The `evodyn` command-line front end.
//!
//! Subcommands cover the whole pipeline: `preprocess`, `synth`, `evolve`,
//! `fit`, `evaluate`, `compare`, and `render-model`. Settings are layered:
//! command-line flags override the TOML config file, which overrides the
//! built-in defaults. Every artifact embeds the command, seed, and effective
//! configuration that produced it; logs go to standard error, data to files.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{
    load_long_csv, load_schema_toml, preprocess, synth_generate, Cohort, PreprocessOptions,
    SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::{
    compare_algorithms, evaluate_cohorts, patient_fit_seed, select_member, write_comparisons_csv,
    write_rmse_csv, EvalConfig, EvaluationOutput, Sample,
};
use crate::fitness::{fit_patient, ComplexityMode, FitnessConfig};
use crate::gp::{evolve, GpConfig};
use crate::model::{
    coupled_pair_genotype, coupled_pair_schema, mood_fixture_genotype, mood_fixture_schema,
    ModelFile, ModelGenotype, StateSchema,
};

const EXIT_USAGE: i32 = 2;
const EXIT_IO: i32 = 3;
const EXIT_DATA: i32 = 4;
const EXIT_DOMAIN: i32 = 5;

const EXIT_CODE_HELP: &str = "Exit codes:\n  \
    0  success\n  \
    2  usage or configuration error\n  \
    3  I/O error\n  \
    4  data or file-format error\n  \
    5  domain error (model, segment, or numeric constraints)";

#[derive(Parser)]
#[command(
    name = "evodyn",
    version,
    about = "Evolves interpretable difference-equation models from time series",
    after_help = EXIT_CODE_HELP,
    propagate_version = true
)]
struct Cli {
    /// TOML config file with [gp], [nsga], [fitness], [data], [eval] sections.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Cap the worker-thread count (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert long-format CSV observations into a preprocessed cohort JSON.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic cohort plus its ground truth.
    Synth(SynthArgs),
    /// Evolve a model structure on a cohort.
    Evolve(EvolveArgs),
    /// Fit a model's parameters to each patient of a cohort.
    Fit(FitArgs),
    /// Score a model and the persistence baseline on test segments.
    Evaluate(EvaluateArgs),
    /// Recompute rank-sum comparisons from stored evaluation results.
    Compare(CompareArgs),
    /// Print a model file as readable equations.
    RenderModel(RenderModelArgs),
}

#[derive(Args)]
struct PreprocessArgs {
    /// Long-format CSV with header patient_id,date,variable,value.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Schema TOML listing [[states]] entries (name, scale, target).
    #[arg(long, value_name = "FILE")]
    schema: PathBuf,
    /// Output cohort JSON path.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Fail on unknown variable names instead of skipping them.
    #[arg(long)]
    strict_unknown: bool,
    /// Minimum distinct observed days per patient [default: 40].
    #[arg(long, value_name = "N")]
    min_days: Option<usize>,
    /// Longest horizon each split segment must support [default: 3].
    #[arg(long, value_name = "N")]
    max_horizon: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    /// Two states: s1 relaxes toward the constant s2.
    CoupledPair,
    /// Seven self-report states with mood and sleep as targets.
    Mood,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for cohort.json and ground_truth.json.
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    /// Master random seed.
    #[arg(long)]
    seed: u64,
    /// Number of synthetic patients [default: 20].
    #[arg(long, value_name = "N")]
    patients: Option<usize>,
    /// Days per patient [default: 120].
    #[arg(long, value_name = "N")]
    days: Option<usize>,
    /// Observation noise sigma [default: 0.02].
    #[arg(long, value_name = "SIGMA")]
    noise: Option<f64>,
    /// Generating model [default: coupled-pair].
    #[arg(long, value_enum, default_value_t = Generator::CoupledPair)]
    generator: Generator,
}

#[derive(Args)]
struct EvolveArgs {
    /// Cohort JSON produced by preprocess or synth.
    #[arg(long, value_name = "FILE")]
    cohort: PathBuf,
    /// Output directory for best_model.json/.txt, trace.jsonl, fitness_report.json.
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    /// Master random seed.
    #[arg(long)]
    seed: u64,
    /// Population size [default: 50].
    #[arg(long, value_name = "N")]
    population: Option<usize>,
    /// Generations [default: 50].
    #[arg(long, value_name = "N")]
    generations: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// Cohort JSON.
    #[arg(long, value_name = "FILE")]
    cohort: PathBuf,
    /// Model JSON to fit.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Output instances JSON path.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// Master random seed.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Cohort the model was built on (scored as sample "in").
    #[arg(long, value_name = "FILE")]
    cohort: PathBuf,
    /// Held-out cohort (scored as sample "out").
    #[arg(long, value_name = "FILE")]
    out_cohort: Option<PathBuf>,
    /// Model JSON to evaluate.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Output directory for rmse_table.csv, comparisons.csv, eval_results.json.
    #[arg(long, value_name = "DIR")]
    output_dir: PathBuf,
    /// Master random seed.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct CompareArgs {
    /// eval_results.json written by the evaluate command.
    #[arg(long, value_name = "FILE")]
    results: PathBuf,
    /// Output comparisons CSV path.
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// First algorithm of the pair.
    #[arg(long, default_value = "model")]
    algorithm_a: String,
    /// Second algorithm of the pair.
    #[arg(long, default_value = "persistence")]
    algorithm_b: String,
}

#[derive(Args)]
struct RenderModelArgs {
    /// Model JSON file.
    #[arg(value_name = "MODEL")]
    model: PathBuf,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = err.exit_code();
            let _ = err.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    if let Some(threads) = cli.threads {
        // Best effort: the global pool can only be sized once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Toml(_) => EXIT_USAGE,
        Error::Io { .. } => EXIT_IO,
        Error::Csv(_)
        | Error::Json(_)
        | Error::DataRow { .. }
        | Error::Data(_)
        | Error::ModelSyntax { .. }
        | Error::UnknownState(_)
        | Error::Schema(_) => EXIT_DATA,
        Error::Model(_)
        | Error::ParamOutOfRange { .. }
        | Error::SegmentTooShort(_)
        | Error::Evaluation { .. }
        | Error::TooManyObjectives(_) => EXIT_DOMAIN,
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let file = load_file_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Preprocess(args) => cmd_preprocess(args, &file),
        Command::Synth(args) => cmd_synth(args, &file),
        Command::Evolve(args) => cmd_evolve(args, &file),
        Command::Fit(args) => cmd_fit(args, &file),
        Command::Evaluate(args) => cmd_evaluate(args, &file),
        Command::Compare(args) => cmd_compare(args),
        Command::RenderModel(args) => cmd_render_model(args),
    }
}

// ---------------------------------------------------------------------------
// Config file layering

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    gp: GpSection,
    #[serde(default)]
    nsga: NsgaSection,
    #[serde(default)]
    fitness: FitnessSection,
    #[serde(default)]
    data: DataSection,
    #[serde(default)]
    eval: EvalSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GpSection {
    population: Option<usize>,
    generations: Option<usize>,
    p_op: Option<f64>,
    tournament_size: Option<usize>,
    p_copy: Option<f64>,
    crossover_tries: Option<usize>,
    max_depth: Option<usize>,
    lambda_max: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NsgaSection {
    pop_size: Option<usize>,
    generations: Option<usize>,
    crossover_prob: Option<f64>,
    crossover_eta: Option<f64>,
    mutation_eta: Option<f64>,
    mutation_prob: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitnessSection {
    runs_per_patient: Option<usize>,
    param_range: Option<(f64, f64)>,
    weights: Option<[f64; 4]>,
    complexity_mode: Option<ComplexityMode>,
    correlation_threshold: Option<f64>,
    horizons: Option<Vec<usize>>,
    clamp_states: Option<bool>,
    clamp_error: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    min_days: Option<usize>,
    fractions: Option<(f64, f64, f64)>,
    max_horizon: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalSection {
    runs_per_patient: Option<usize>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| Error::Toml(format!("{}: {e}", path.display())))
}

macro_rules! apply {
    ($section:expr, $target:expr; $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $section.$field {
            $target.$field = v;
        })+
    };
}

fn build_fitness(file: &FileConfig) -> FitnessConfig {
    let mut cfg = FitnessConfig::default();
    apply!(file.fitness, cfg; runs_per_patient, param_range, weights, complexity_mode,
        correlation_threshold);
    apply!(file.nsga, cfg.nsga; pop_size, generations, crossover_prob, crossover_eta,
        mutation_eta);
    if file.nsga.mutation_prob.is_some() {
        cfg.nsga.mutation_prob = file.nsga.mutation_prob;
    }
    if let Some(horizons) = &file.fitness.horizons {
        cfg.forecast.horizons = horizons.iter().copied().collect();
    }
    apply!(file.fitness, cfg.forecast; clamp_states, clamp_error);
    cfg
}

fn build_gp(file: &FileConfig, args: &EvolveArgs) -> GpConfig {
    let mut cfg = GpConfig { fitness: build_fitness(file), master_seed: args.seed, ..GpConfig::default() };
    apply!(file.gp, cfg; population, generations, p_op, tournament_size, p_copy,
        crossover_tries, max_depth, lambda_max);
    if let Some(population) = args.population {
        cfg.population = population;
    }
    if let Some(generations) = args.generations {
        cfg.generations = generations;
    }
    cfg
}

fn build_eval(file: &FileConfig, seed: u64) -> EvalConfig {
    let mut fitness = build_fitness(file);
    fitness.runs_per_patient = file.eval.runs_per_patient.unwrap_or(1);
    EvalConfig { fitness, master_seed: seed }
}

fn build_preprocess(file: &FileConfig, args: &PreprocessArgs) -> PreprocessOptions {
    let mut opts = PreprocessOptions::default();
    apply!(file.data, opts; min_days, fractions, max_horizon);
    if let Some(min_days) = args.min_days {
        opts.min_days = min_days;
    }
    if let Some(max_horizon) = args.max_horizon {
        opts.max_horizon = max_horizon;
    }
    opts
}

// ---------------------------------------------------------------------------
// Reproducibility metadata

/// Header embedded in every artifact: what produced it and with which
/// effective settings. Deliberately carries no timestamps so reruns are
/// byte-identical.
#[derive(Debug, Serialize)]
struct RunMeta {
    tool: String,
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    config: serde_json::Value,
}

impl RunMeta {
    fn new(command: &str, seed: Option<u64>, config: &impl Serialize) -> Result<RunMeta> {
        Ok(RunMeta {
            tool: format!("evodyn {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config)?,
        })
    }

    fn to_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }

    /// `#` comment lines for CSV and text artifacts.
    fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("tool: {}", self.tool), format!("command: {}", self.command)];
        if let Some(seed) = self.seed {
            lines.push(format!("seed: {seed}"));
        }
        lines.push(format!("config: {}", self.config));
        lines
    }
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_preprocess(args: &PreprocessArgs, file: &FileConfig) -> Result<()> {
    let schema = load_schema_toml(&args.schema)?;
    let opts = build_preprocess(file, args);
    let records = load_long_csv(&args.input, &schema, args.strict_unknown)?;
    let patients = preprocess(&records, &schema, &opts)?;
    if patients.is_empty() {
        return Err(Error::Data("no patients survived preprocessing".into()));
    }
    let meta = RunMeta::new("preprocess", None, &opts)?;
    let cohort = Cohort { meta: Some(meta.to_value()?), schema, patients };
    cohort.save(&args.output)?;
    let stats = cohort.stats();
    log::info!(
        "wrote {} with {} patients (mean {:.1} days)",
        args.output.display(),
        stats.patients,
        stats.mean_days
    );
    Ok(())
}

fn generator_fixture(generator: Generator) -> (ModelGenotype, StateSchema) {
    match generator {
        Generator::CoupledPair => (coupled_pair_genotype(), coupled_pair_schema()),
        Generator::Mood => (mood_fixture_genotype(), mood_fixture_schema()),
    }
}

fn cmd_synth(args: &SynthArgs, file: &FileConfig) -> Result<()> {
    let mut cfg = SynthConfig::default();
    if let Some(fractions) = file.data.fractions {
        cfg.fractions = fractions;
    }
    if let Some(max_horizon) = file.data.max_horizon {
        cfg.max_horizon = max_horizon;
    }
    if let Some(patients) = args.patients {
        cfg.patients = patients;
    }
    if let Some(days) = args.days {
        cfg.days = days;
    }
    if let Some(noise) = args.noise {
        cfg.noise_sigma = noise;
    }
    let (genotype, schema) = generator_fixture(args.generator);
    let (mut cohort, mut truth) = synth_generate(&genotype, &schema, &cfg, args.seed)?;
    let meta = RunMeta::new("synth", Some(args.seed), &cfg)?;
    cohort.meta = Some(meta.to_value()?);
    truth.model.meta = Some(meta.to_value()?);
    create_dir(&args.output_dir)?;
    cohort.save(&args.output_dir.join("cohort.json"))?;
    write_text(&args.output_dir.join("ground_truth.json"), &truth.to_json_pretty()?)?;
    log::info!(
        "wrote {} synthetic patients ({} days each) to {}",
        cfg.patients,
        cfg.days,
        args.output_dir.display()
    );
    Ok(())
}

fn cmd_evolve(args: &EvolveArgs, file: &FileConfig) -> Result<()> {
    let cohort = Cohort::load(&args.cohort)?;
    let cfg = build_gp(file, args);
    let outcome = evolve(&cfg, &cohort.schema, &cohort.patients)?;
    let meta = RunMeta::new("evolve", Some(args.seed), &cfg)?;
    create_dir(&args.output_dir)?;

    let mut model = ModelFile::from_genotype(&outcome.best, cohort.schema.names());
    model.meta = Some(meta.to_value()?);
    write_text(&args.output_dir.join("best_model.json"), &model.to_json_pretty()?)?;

    let mut text = String::new();
    for line in meta.comment_lines() {
        text.push_str("# ");
        text.push_str(&line);
        text.push('\n');
    }
    text.push_str(&outcome.best.render(&cohort.schema));
    write_text(&args.output_dir.join("best_model.txt"), &text)?;

    let mut trace = serde_json::to_string(&serde_json::json!({ "meta": meta.to_value()? }))?;
    trace.push('\n');
    for stats in &outcome.trace {
        trace.push_str(&serde_json::to_string(stats)?);
        trace.push('\n');
    }
    write_text(&args.output_dir.join("trace.jsonl"), &trace)?;

    let report = serde_json::json!({ "meta": meta.to_value()?, "report": *outcome.report });
    write_text(
        &args.output_dir.join("fitness_report.json"),
        &format!("{:#}\n", report),
    )?;
    log::info!(
        "evolved {} generations; best fitness {:.4}; artifacts in {}",
        cfg.generations,
        outcome.report.total,
        args.output_dir.display()
    );
    Ok(())
}

/// One fitted parameter set, as stored by the fit command.
#[derive(Debug, Serialize, Deserialize)]
struct FittedInstance {
    patient_id: String,
    params: Vec<f64>,
    training_errors: Vec<f64>,
    validation_errors: Vec<f64>,
}

fn load_model(path: &Path) -> Result<(Arc<ModelGenotype>, Vec<String>)> {
    let model = ModelFile::from_json(&read_text(path)?)?;
    let genotype = model.to_genotype()?;
    Ok((Arc::new(genotype), model.schema))
}

fn check_states(model_states: &[String], cohort: &Cohort, path: &Path) -> Result<()> {
    if model_states != cohort.schema.names() {
        return Err(Error::Schema(format!(
            "model states [{}] do not match cohort states [{}] from {}",
            model_states.join(", "),
            cohort.schema.names().join(", "),
            path.display()
        )));
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs, file: &FileConfig) -> Result<()> {
    let cohort = Cohort::load(&args.cohort)?;
    let (genotype, states) = load_model(&args.model)?;
    check_states(&states, &cohort, &args.cohort)?;
    let cfg = build_eval(file, args.seed);
    cfg.fitness.validate()?;
    let targets = cohort.schema.target_indices().to_vec();
    let mut instances = Vec::with_capacity(cohort.patients.len());
    for patient in &cohort.patients {
        let patient_seed =
            patient_fit_seed(cfg.master_seed, Sample::In, &genotype, &patient.patient_id);
        let fit = fit_patient(&genotype, patient, &targets, &cfg.fitness, patient_seed)?;
        let member = select_member(fit.runs.iter().flat_map(|front| &front.members))
            .ok_or_else(|| {
                Error::Data(format!("no fitted member for patient {}", patient.patient_id))
            })?;
        instances.push(FittedInstance {
            patient_id: patient.patient_id.clone(),
            params: member.params.clone(),
            training_errors: member.training_errors.0.clone(),
            validation_errors: member.validation_errors.0.clone(),
        });
    }
    let meta = RunMeta::new("fit", Some(args.seed), &cfg)?;
    let doc = serde_json::json!({ "meta": meta.to_value()?, "instances": instances });
    write_text(&args.output, &format!("{:#}\n", doc))?;
    log::info!("fitted {} patients into {}", instances.len(), args.output.display());
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, file: &FileConfig) -> Result<()> {
    let cohort = Cohort::load(&args.cohort)?;
    let (genotype, states) = load_model(&args.model)?;
    check_states(&states, &cohort, &args.cohort)?;
    let out_cohort = match &args.out_cohort {
        Some(path) => {
            let out = Cohort::load(path)?;
            check_states(&states, &out, path)?;
            Some(out)
        }
        None => None,
    };
    let cfg = build_eval(file, args.seed);
    let output = evaluate_cohorts(
        &genotype,
        &cohort.schema,
        &cohort.patients,
        out_cohort.as_ref().map_or(&[][..], |c| &c.patients),
        &cfg,
    )?;
    let meta = RunMeta::new("evaluate", Some(args.seed), &cfg)?;
    create_dir(&args.output_dir)?;
    write_rmse_csv(&output.table, &meta.comment_lines(), &args.output_dir.join("rmse_table.csv"))?;
    write_comparisons_csv(
        &output.comparisons,
        &meta.comment_lines(),
        &args.output_dir.join("comparisons.csv"),
    )?;
    let doc = serde_json::json!({ "meta": meta.to_value()?, "results": output });
    write_text(&args.output_dir.join("eval_results.json"), &format!("{:#}\n", doc))?;
    log::info!(
        "evaluated {} table rows, {} comparisons; artifacts in {}",
        output.table.rows.len(),
        output.comparisons.len(),
        args.output_dir.display()
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
struct StoredEvaluation {
    #[serde(default)]
    #[allow(dead_code)]
    meta: Option<serde_json::Value>,
    results: EvaluationOutput,
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let stored: StoredEvaluation = serde_json::from_str(&read_text(&args.results)?)?;
    let comparisons =
        compare_algorithms(&stored.results.table, &args.algorithm_a, &args.algorithm_b)?;
    if comparisons.is_empty() {
        return Err(Error::Data(format!(
            "no shared cells between `{}` and `{}` in {}",
            args.algorithm_a,
            args.algorithm_b,
            args.results.display()
        )));
    }
    let pair = serde_json::json!({
        "algorithm_a": args.algorithm_a,
        "algorithm_b": args.algorithm_b,
        "results": args.results.display().to_string(),
    });
    let meta = RunMeta::new("compare", None, &pair)?;
    write_comparisons_csv(&comparisons, &meta.comment_lines(), &args.output)?;
    log::info!("wrote {} comparisons to {}", comparisons.len(), args.output.display());
    Ok(())
}

fn cmd_render_model(args: &RenderModelArgs) -> Result<()> {
    let model = ModelFile::from_json(&read_text(&args.model)?)?;
    let genotype = model.to_genotype()?;
    print!("{}", genotype.render_with_names(&model.schema));
    Ok(())
}

// ---------------------------------------------------------------------------
// Small file helpers

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_partition_the_error_space() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Toml("x".into())), EXIT_USAGE);
        assert_eq!(
            exit_code(&Error::io("f", std::io::Error::new(std::io::ErrorKind::NotFound, "x"))),
            EXIT_IO
        );
        assert_eq!(exit_code(&Error::Data("x".into())), EXIT_DATA);
        assert_eq!(exit_code(&Error::Schema("x".into())), EXIT_DATA);
        assert_eq!(exit_code(&Error::Model("x".into())), EXIT_DOMAIN);
        assert_eq!(exit_code(&Error::SegmentTooShort("x".into())), EXIT_DOMAIN);
    }

    #[test]
    fn config_file_sections_layer_over_defaults() {
        let file: FileConfig = toml::from_str(
            r#"
            [gp]
            population = 10
            p_copy = 0.2

            [nsga]
            pop_size = 8
            generations = 6

            [fitness]
            runs_per_patient = 2
            weights = [0.5, 0.5, 0.0, 0.0]
            complexity_mode = "literal"
            horizons = [1, 2]

            [data]
            min_days = 30

            [eval]
            runs_per_patient = 4
            "#,
        )
        .unwrap();

        let fitness = build_fitness(&file);
        assert_eq!(fitness.runs_per_patient, 2);
        assert_eq!(fitness.nsga.pop_size, 8);
        assert_eq!(fitness.nsga.generations, 6);
        assert_eq!(fitness.weights, [0.5, 0.5, 0.0, 0.0]);
        assert_eq!(fitness.complexity_mode, ComplexityMode::Literal);
        assert_eq!(fitness.forecast.horizons.len(), 2);

        let eval = build_eval(&file, 9);
        assert_eq!(eval.fitness.runs_per_patient, 4);
        assert_eq!(eval.master_seed, 9);

        let args = EvolveArgs {
            cohort: PathBuf::new(),
            output_dir: PathBuf::new(),
            seed: 3,
            population: Some(20),
            generations: None,
        };
        let gp = build_gp(&file, &args);
        assert_eq!(gp.population, 20, "flag must beat the config file");
        assert_eq!(gp.p_copy, 0.2);
        assert_eq!(gp.generations, 50, "untouched fields keep defaults");
        assert_eq!(gp.master_seed, 3);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[gp]\npopsize = 3\n").is_err());
        assert!(toml::from_str::<FileConfig>("[mystery]\n").is_err());
    }

    #[test]
    fn meta_comment_lines_have_no_timestamps() {
        let meta = RunMeta::new("evolve", Some(7), &serde_json::json!({"population": 50}))
            .unwrap();
        let lines = meta.comment_lines();
        assert!(lines[0].starts_with("tool: evodyn "));
        assert_eq!(lines[1], "command: evolve");
        assert_eq!(lines[2], "seed: 7");
        assert!(lines[3].starts_with("config: {"));
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn cli_parses_every_subcommand() {
        let parse = |argv: &[&str]| Cli::try_parse_from(argv.iter().map(|s| s.to_string()));
        assert!(parse(&["evodyn", "synth", "--output-dir", "d", "--seed", "1"]).is_ok());
        assert!(
            parse(&["evodyn", "evolve", "--cohort", "c.json", "--output-dir", "d"]).is_err(),
            "evolve without --seed must be a usage error"
        );
        assert!(parse(&["evodyn", "render-model", "m.json"]).is_ok());
        assert!(parse(&["evodyn", "compare", "--results", "r.json", "--output", "c.csv"]).is_ok());
        assert!(parse(&["evodyn", "nonsense"]).is_err());
    }
}
