//! Test-segment evaluation: per-patient fitting, rolling-origin RMSE,
//! the persistence baseline, median tables, and rank-sum comparisons.

mod wilcoxon;

pub use wilcoxon::{rank_sum_test, RankSumTest};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PatientSeries;
use crate::error::{Error, Result};
use crate::fitness::{fit_patient, FitnessConfig, FittedMember};
use crate::model::{EquationTree, ModelGenotype, StateSchema};
use crate::seed;
use crate::sim::ModelInstance;
use crate::stats;

pub const MODEL_ALGORITHM: &str = "model";
pub const PERSISTENCE_ALGORITHM: &str = "persistence";

/// Which cohort a result came from: patients the model was built on (`In`)
/// or held-out patients (`Out`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sample {
    In,
    Out,
}

impl fmt::Display for Sample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sample::In => "in",
            Sample::Out => "out",
        })
    }
}

/// Evaluation settings. Fitting reuses the per-patient NSGA-II machinery;
/// unlike fitness scoring, evaluation defaults to a single run per patient,
/// with the repeat count exposed for variance studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub fitness: FitnessConfig,
    pub master_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            fitness: FitnessConfig { runs_per_patient: 1, ..FitnessConfig::default() },
            master_seed: 0,
        }
    }
}

/// RMSE of one algorithm on one patient at one (target, horizon) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmseCell {
    pub target: String,
    pub horizon: usize,
    pub rmse: f64,
}

/// All cells of one algorithm for one patient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawPatientResult {
    pub algorithm: String,
    pub sample: Sample,
    pub patient_id: String,
    pub cells: Vec<RmseCell>,
}

/// One median row of the final table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub algorithm: String,
    pub sample: Sample,
    pub target: String,
    pub horizon: usize,
    pub median_rmse: f64,
    pub n_patients: usize,
}

/// Median RMSE per (algorithm, sample, target, horizon); the raw per-patient
/// values behind the medians are retained for comparisons and plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmseTable {
    pub rows: Vec<RmseRow>,
    pub raw: Vec<RawPatientResult>,
}

/// Which algorithm of a compared pair had the lower (better) median RMSE.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FirstLower,
    SecondLower,
    Tie,
}

/// Rank-sum comparison of two algorithms on one (sample, target, horizon)
/// cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub algorithm_a: String,
    pub algorithm_b: String,
    pub sample: Sample,
    pub target: String,
    pub horizon: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub direction: Direction,
}

/// Table plus comparisons from one evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub table: RmseTable,
    pub comparisons: Vec<Comparison>,
}

/// The fitted member with the minimal sum of validation error components;
/// the earliest such member wins ties.
pub fn select_member<'a, I>(members: I) -> Option<&'a FittedMember>
where
    I: IntoIterator<Item = &'a FittedMember>,
{
    let mut best: Option<(&FittedMember, f64)> = None;
    for member in members {
        let sum: f64 = member.validation_errors.0.iter().sum();
        match best {
            Some((_, lowest)) if sum >= lowest => {}
            _ => best = Some((member, sum)),
        }
    }
    best.map(|(member, _)| member)
}

/// Rolling-origin RMSE per (target, horizon): the full state is re-seeded
/// from the observed values at every origin day and run forward; predictions
/// are scored against the observed day `origin + h`.
pub fn test_rmse(
    instance: &ModelInstance,
    segment: &[Vec<f64>],
    targets: &[usize],
    horizons: &BTreeSet<usize>,
    clamp_states: bool,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let max_h = check_horizons(segment.len(), horizons)?;
    let ordered: Vec<usize> = horizons.iter().copied().collect();
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    let states = segment[0].len();
    let mut cur = vec![0.0; states];
    let mut next = vec![0.0; states];
    for origin in 0..segment.len() - 1 {
        cur.copy_from_slice(&segment[origin]);
        let reach = max_h.min(segment.len() - 1 - origin);
        let mut pending = ordered.iter().peekable();
        for h in 1..=reach {
            instance.step_into(&cur, clamp_states, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if pending.peek() == Some(&&h) {
                pending.next();
                let observed = &segment[origin + h];
                for &t in targets {
                    let d = cur[t] - observed[t];
                    let entry = sums.entry((t, h)).or_insert((0.0, 0));
                    entry.0 += d * d;
                    entry.1 += 1;
                }
            }
        }
    }
    Ok(sums.into_iter().map(|(key, (sum, count))| (key, (sum / count as f64).sqrt())).collect())
}

/// RMSE per (target, horizon) of the persistence rule: the prediction for
/// `origin + h` is the observation at `origin`. Matches `test_rmse` of the
/// all-persistence genotype bit for bit (same iteration and accumulation
/// order).
pub fn persistence_rmse(
    segment: &[Vec<f64>],
    targets: &[usize],
    horizons: &BTreeSet<usize>,
) -> Result<BTreeMap<(usize, usize), f64>> {
    let max_h = check_horizons(segment.len(), horizons)?;
    let ordered: Vec<usize> = horizons.iter().copied().collect();
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for origin in 0..segment.len() - 1 {
        let reach = max_h.min(segment.len() - 1 - origin);
        for &h in ordered.iter().take_while(|&&h| h <= reach) {
            let observed = &segment[origin + h];
            for &t in targets {
                let d = segment[origin][t] - observed[t];
                let entry = sums.entry((t, h)).or_insert((0.0, 0));
                entry.0 += d * d;
                entry.1 += 1;
            }
        }
    }
    Ok(sums.into_iter().map(|(key, (sum, count))| (key, (sum / count as f64).sqrt())).collect())
}

fn check_horizons(days: usize, horizons: &BTreeSet<usize>) -> Result<usize> {
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::Config("horizons must be positive and non-empty".into()));
    }
    let max_h = *horizons.iter().next_back().expect("checked non-empty");
    if days <= max_h {
        return Err(Error::SegmentTooShort(format!(
            "{days} days cannot support horizon {max_h}"
        )));
    }
    Ok(max_h)
}

/// Seed for fitting one patient during evaluation. Shared by `evaluate` and
/// standalone fitting so both produce identical instances for a master seed.
pub fn patient_fit_seed(
    master_seed: u64,
    sample: Sample,
    genotype: &ModelGenotype,
    patient_id: &str,
) -> u64 {
    seed::mix(
        master_seed,
        &[
            seed::hash_str("eval"),
            seed::hash_str(&sample.to_string()),
            seed::hash_str(&genotype.structure_key()),
            seed::hash_str(patient_id),
        ],
    )
}

/// Genotype whose every equation keeps its own state unchanged.
pub fn persistence_genotype(schema: &StateSchema) -> ModelGenotype {
    let trees = (0..schema.state_count()).map(EquationTree::State).collect();
    ModelGenotype::new(trees, 0, schema).expect("state refs are valid")
}

/// Collapses raw per-patient results into one median row per
/// (algorithm, sample, target, horizon). Even patient counts take the mean
/// of the two middle values.
pub fn median_table(raw: Vec<RawPatientResult>) -> Result<RmseTable> {
    if raw.is_empty() {
        return Err(Error::Data("median table needs at least one patient result".into()));
    }
    let mut groups: BTreeMap<(String, Sample, String, usize), Vec<f64>> = BTreeMap::new();
    for result in &raw {
        for cell in &result.cells {
            groups
                .entry((result.algorithm.clone(), result.sample, cell.target.clone(), cell.horizon))
                .or_default()
                .push(cell.rmse);
        }
    }
    let rows = groups
        .into_iter()
        .map(|((algorithm, sample, target, horizon), values)| RmseRow {
            algorithm,
            sample,
            target,
            horizon,
            median_rmse: stats::median(&values),
            n_patients: values.len(),
        })
        .collect();
    Ok(RmseTable { rows, raw })
}

/// Rank-sum comparison of two algorithms on every (sample, target, horizon)
/// cell both cover, in patient order.
pub fn compare_algorithms(
    table: &RmseTable,
    algorithm_a: &str,
    algorithm_b: &str,
) -> Result<Vec<Comparison>> {
    let mut cells: BTreeMap<(Sample, String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for result in &table.raw {
        let side = if result.algorithm == algorithm_a {
            0
        } else if result.algorithm == algorithm_b {
            1
        } else {
            continue;
        };
        for cell in &result.cells {
            let entry = cells
                .entry((result.sample, cell.target.clone(), cell.horizon))
                .or_default();
            if side == 0 {
                entry.0.push(cell.rmse);
            } else {
                entry.1.push(cell.rmse);
            }
        }
    }
    let mut comparisons = Vec::new();
    for ((sample, target, horizon), (a_values, b_values)) in cells {
        if a_values.is_empty() || b_values.is_empty() {
            continue;
        }
        let test = rank_sum_test(&a_values, &b_values)?;
        let median_a = stats::median(&a_values);
        let median_b = stats::median(&b_values);
        let direction = if median_a < median_b {
            Direction::FirstLower
        } else if median_b < median_a {
            Direction::SecondLower
        } else {
            Direction::Tie
        };
        comparisons.push(Comparison {
            algorithm_a: algorithm_a.to_string(),
            algorithm_b: algorithm_b.to_string(),
            sample,
            target,
            horizon,
            statistic: test.statistic,
            p_value: test.p_value,
            direction,
        });
    }
    Ok(comparisons)
}

/// Full evaluation protocol: per patient, fit the genotype on the training
/// segment, pick the member with the lowest validation error sum, score the
/// test segment, and do the same for the persistence baseline; then assemble
/// the median table and the model-versus-persistence comparisons.
/// `out_cohort` may be empty. Deterministic per master seed.
pub fn evaluate_cohorts(
    genotype: &Arc<ModelGenotype>,
    schema: &StateSchema,
    in_cohort: &[PatientSeries],
    out_cohort: &[PatientSeries],
    cfg: &EvalConfig,
) -> Result<EvaluationOutput> {
    cfg.fitness.validate()?;
    if genotype.schema_key() != schema.key() {
        return Err(Error::Schema(format!(
            "genotype was built for states [{}], not [{}]",
            genotype.schema_key(),
            schema.key()
        )));
    }
    if in_cohort.is_empty() {
        return Err(Error::Config("evaluation needs at least one in-sample patient".into()));
    }
    let targets = schema.target_indices().to_vec();
    let mut raw = Vec::new();
    for (sample, cohort) in [(Sample::In, in_cohort), (Sample::Out, out_cohort)] {
        raw.extend(evaluate_sample(genotype, schema, cohort, sample, &targets, cfg)?);
    }
    let table = median_table(raw)?;
    let comparisons = compare_algorithms(&table, MODEL_ALGORITHM, PERSISTENCE_ALGORITHM)?;
    Ok(EvaluationOutput { table, comparisons })
}

fn evaluate_sample(
    genotype: &Arc<ModelGenotype>,
    schema: &StateSchema,
    cohort: &[PatientSeries],
    sample: Sample,
    targets: &[usize],
    cfg: &EvalConfig,
) -> Result<Vec<RawPatientResult>> {
    let pairs: Vec<(RawPatientResult, RawPatientResult)> = cohort
        .par_iter()
        .map(|patient| -> Result<_> {
            let patient_seed =
                patient_fit_seed(cfg.master_seed, sample, genotype, &patient.patient_id);
            let fit = fit_patient(genotype, patient, targets, &cfg.fitness, patient_seed)?;
            let member = select_member(fit.runs.iter().flat_map(|front| &front.members))
                .ok_or_else(|| {
                    Error::Data(format!("no fitted member for patient {}", patient.patient_id))
                })?;
            let bounds = vec![cfg.fitness.param_range; genotype.param_indices().len()];
            let instance =
                ModelInstance::new(Arc::clone(genotype), member.params.clone(), bounds)?;
            let test = patient.test();
            let horizons = &cfg.fitness.forecast.horizons;
            let model = test_rmse(
                &instance,
                test,
                targets,
                horizons,
                cfg.fitness.forecast.clamp_states,
            )?;
            let baseline = persistence_rmse(test, targets, horizons)?;
            Ok((
                to_raw(MODEL_ALGORITHM, sample, &patient.patient_id, schema, model),
                to_raw(PERSISTENCE_ALGORITHM, sample, &patient.patient_id, schema, baseline),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for (model, baseline) in pairs {
        out.push(model);
        out.push(baseline);
    }
    Ok(out)
}

fn to_raw(
    algorithm: &str,
    sample: Sample,
    patient_id: &str,
    schema: &StateSchema,
    rmse: BTreeMap<(usize, usize), f64>,
) -> RawPatientResult {
    let cells = rmse
        .into_iter()
        .map(|((target, horizon), value)| RmseCell {
            target: schema.names()[target].clone(),
            horizon,
            rmse: value,
        })
        .collect();
    RawPatientResult {
        algorithm: algorithm.to_string(),
        sample,
        patient_id: patient_id.to_string(),
        cells,
    }
}

/// Writes the median table as CSV. Lines in `meta` become leading `#`
/// comments before the header.
pub fn write_rmse_csv(table: &RmseTable, meta: &[String], path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    for line in meta {
        writeln!(buf, "# {line}").expect("write to vec");
    }
    let mut writer = csv::Writer::from_writer(buf);
    writer.write_record(["algorithm", "sample", "target", "horizon", "median_rmse", "n_patients"])?;
    for row in &table.rows {
        writer.write_record([
            row.algorithm.as_str(),
            &row.sample.to_string(),
            row.target.as_str(),
            &row.horizon.to_string(),
            &row.median_rmse.to_string(),
            &row.n_patients.to_string(),
        ])?;
    }
    let buf = writer.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes the comparisons as CSV, with the same `#` comment convention.
pub fn write_comparisons_csv(
    comparisons: &[Comparison],
    meta: &[String],
    path: &Path,
) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    for line in meta {
        writeln!(buf, "# {line}").expect("write to vec");
    }
    let mut writer = csv::Writer::from_writer(buf);
    writer.write_record([
        "algorithm_a",
        "algorithm_b",
        "sample",
        "target",
        "horizon",
        "statistic",
        "p_value",
    ])?;
    for c in comparisons {
        writer.write_record([
            c.algorithm_a.as_str(),
            c.algorithm_b.as_str(),
            &c.sample.to_string(),
            c.target.as_str(),
            &c.horizon.to_string(),
            &c.statistic.to_string(),
            &c.p_value.to_string(),
        ])?;
    }
    let buf = writer.into_inner().map_err(|e| Error::Data(format!("csv buffer: {e}")))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
