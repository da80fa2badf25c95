//! Four-criterion genotype fitness: per-patient NSGA-II parameter fitting
//! followed by descriptive, predictive, sensitivity, and complexity scores
//! combined as a weighted sum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::data::PatientSeries;
use crate::error::{Error, Result};
use crate::model::ModelGenotype;
use crate::moo::{dominated_hypervolume, nsga2_run, Nsga2Config, ObjectivePoint};
use crate::seed;
use crate::sim::{objective_errors, ForecastSpec, ModelInstance};
use crate::stats;

/// Direction of the parameter-count score.
///
/// `Literal` rewards parameter use (k/λ_max); `Penalizing` rewards sparsity
/// (1 − k/λ_max) and is the default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityMode {
    Literal,
    Penalizing,
}

impl Default for ComplexityMode {
    fn default() -> Self {
        ComplexityMode::Penalizing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessConfig {
    /// NSGA-II runs per patient (r).
    pub runs_per_patient: usize,
    pub nsga: Nsga2Config,
    /// Bounds applied to every distinct parameter.
    pub param_range: (f64, f64),
    pub forecast: ForecastSpec,
    /// Weights for descriptive, predictive, sensitivity, complexity.
    pub weights: [f64; 4],
    pub complexity_mode: ComplexityMode,
    /// A parameter counts as useful when some |Pearson r| exceeds this.
    pub correlation_threshold: f64,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            runs_per_patient: 3,
            nsga: Nsga2Config::default(),
            param_range: (0.0, 1.0),
            forecast: ForecastSpec::default(),
            weights: [0.25; 4],
            complexity_mode: ComplexityMode::Penalizing,
            correlation_threshold: 0.35,
        }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_patient == 0 {
            return Err(Error::Config("runs_per_patient must be at least 1".into()));
        }
        self.nsga.validate()?;
        self.forecast.validate()?;
        let (lo, hi) = self.param_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("parameter range [{lo}, {hi}] invalid")));
        }
        if self.weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::Config("fitness weights must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.correlation_threshold) {
            return Err(Error::Config("correlation threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One fitted parameter vector with errors on both segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedMember {
    pub params: Vec<f64>,
    pub training_errors: ObjectivePoint,
    pub validation_errors: ObjectivePoint,
}

/// The non-dominated set from one NSGA-II run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedFront {
    pub members: Vec<FittedMember>,
}

/// All fitting runs for one patient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientFitResult {
    pub patient_id: String,
    pub runs: Vec<FittedFront>,
}

/// Every score and the intermediate statistics behind them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub descriptive: f64,
    pub predictive: f64,
    pub sensitivity: f64,
    pub complexity: f64,
    pub total: f64,
    pub mu_d: f64,
    pub sigma_d: f64,
    pub mu_ap: f64,
    pub sigma_ap: f64,
    pub k: usize,
    pub per_parameter_max_corr: Vec<f64>,
}

/// Fits `genotype` to one patient: `runs_per_patient` NSGA-II runs on the
/// training segment, every front member re-scored on the validation segment.
/// Deterministic given `patient_seed`.
pub fn fit_patient(
    genotype: &Arc<ModelGenotype>,
    patient: &PatientSeries,
    targets: &[usize],
    cfg: &FitnessConfig,
    patient_seed: u64,
) -> Result<PatientFitResult> {
    cfg.validate()?;
    let max_h = cfg.forecast.max_horizon();
    for (name, len) in
        [("training", patient.training().len()), ("validation", patient.validation().len())]
    {
        if len <= max_h {
            return Err(Error::SegmentTooShort(format!(
                "patient {}: {name} segment has {len} days, horizon {max_h} needs more",
                patient.patient_id
            )));
        }
    }

    let k = genotype.param_indices().len();
    let bounds = vec![cfg.param_range; k];
    let training = patient.training();
    let validation = patient.validation();
    let evaluate = |params: &[f64]| -> Result<ObjectivePoint> {
        let instance =
            ModelInstance::new(Arc::clone(genotype), params.to_vec(), bounds.clone())?;
        Ok(ObjectivePoint(objective_errors(&instance, training, targets, &cfg.forecast)?))
    };

    let mut runs = Vec::with_capacity(cfg.runs_per_patient);
    for run in 0..cfg.runs_per_patient {
        let run_seed = seed::mix(patient_seed, &[run as u64]);
        let front = nsga2_run(&evaluate, &bounds, &cfg.nsga, run_seed)?;
        let members = front
            .members
            .into_iter()
            .map(|m| {
                let instance = ModelInstance::new(
                    Arc::clone(genotype),
                    m.params.clone(),
                    bounds.clone(),
                )?;
                let validation_errors = ObjectivePoint(objective_errors(
                    &instance,
                    validation,
                    targets,
                    &cfg.forecast,
                )?);
                Ok(FittedMember {
                    params: m.params,
                    training_errors: m.errors,
                    validation_errors,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        runs.push(FittedFront { members });
    }
    Ok(PatientFitResult { patient_id: patient.patient_id.clone(), runs })
}

/// Mean-hypervolume score: μ_d·(1−σ_d) over per-patient mean dominated
/// hypervolumes of the training fronts. Returns (score, μ_d, σ_d).
pub fn descriptive_score(results: &[PatientFitResult]) -> Result<(f64, f64, f64)> {
    debug_assert!(!results.is_empty());
    let mut per_patient = Vec::with_capacity(results.len());
    for r in results {
        let mut hvs = Vec::with_capacity(r.runs.len());
        for front in &r.runs {
            let points: Vec<ObjectivePoint> =
                front.members.iter().map(|m| m.training_errors.clone()).collect();
            let c = points.first().map(|p| p.len()).unwrap_or(1);
            let reference = ObjectivePoint(vec![1.0; c]);
            hvs.push(dominated_hypervolume(&points, &reference)?);
        }
        per_patient.push(stats::mean(&hvs));
    }
    let mu = stats::mean(&per_patient);
    let sigma = stats::population_std(&per_patient);
    Ok((mu * (1.0 - sigma), mu, sigma))
}

/// Validation-error score: (1−μ_ap)·(1−σ_ap) over every validation error
/// component of every member. Returns (score, μ_ap, σ_ap).
pub fn predictive_score(results: &[PatientFitResult]) -> (f64, f64, f64) {
    let pooled: Vec<f64> = results
        .iter()
        .flat_map(|r| &r.runs)
        .flat_map(|f| &f.members)
        .flat_map(|m| m.validation_errors.0.iter().copied())
        .collect();
    debug_assert!(!pooled.is_empty());
    let mu = stats::mean(&pooled);
    let sigma = stats::population_std(&pooled);
    ((1.0 - mu) * (1.0 - sigma), mu, sigma)
}

/// Fraction of parameters whose value correlates with some training error
/// across a front (|Pearson r| above the threshold for any patient, run,
/// objective triple). Parameter-free models score 1. Returns the score and
/// each parameter's maximum |r|.
pub fn sensitivity_score(
    genotype: &ModelGenotype,
    results: &[PatientFitResult],
    threshold: f64,
) -> (f64, Vec<f64>) {
    let k = genotype.param_indices().len();
    if k == 0 {
        return (1.0, Vec::new());
    }
    let mut max_corr = vec![0.0f64; k];
    for r in results {
        for front in &r.runs {
            // Correlations over fewer than 3 members are noise.
            if front.members.len() < 3 {
                continue;
            }
            let c = front.members[0].training_errors.len();
            for slot in 0..k {
                let xs: Vec<f64> = front.members.iter().map(|m| m.params[slot]).collect();
                for obj in 0..c {
                    let ys: Vec<f64> =
                        front.members.iter().map(|m| m.training_errors.0[obj]).collect();
                    let r = stats::pearson(&xs, &ys).abs();
                    if r > max_corr[slot] {
                        max_corr[slot] = r;
                    }
                }
            }
        }
    }
    let useful = max_corr.iter().filter(|&&r| r > threshold).count();
    (useful as f64 / k as f64, max_corr)
}

/// Parameter-count score over the pool ceiling.
pub fn complexity_score(genotype: &ModelGenotype, mode: ComplexityMode) -> f64 {
    let k = genotype.distinct_params() as f64;
    let lambda = genotype.lambda_max() as f64;
    match mode {
        ComplexityMode::Literal => k / lambda,
        ComplexityMode::Penalizing => 1.0 - k / lambda,
    }
}

/// Weighted sum of the four sub-scores.
pub fn total_fitness(scores: [f64; 4], weights: [f64; 4]) -> f64 {
    scores.iter().zip(&weights).map(|(s, w)| s * w).sum()
}

/// Full fitness of one genotype over a cohort. Patients are fitted
/// independently (in parallel) with seeds derived from the master seed, the
/// genotype structure, and the patient id, so results are schedule-free.
pub fn evaluate_genotype(
    genotype: &Arc<ModelGenotype>,
    patients: &[PatientSeries],
    targets: &[usize],
    cfg: &FitnessConfig,
    master_seed: u64,
) -> Result<FitnessReport> {
    if patients.is_empty() {
        return Err(Error::Config("fitness needs at least one patient".into()));
    }
    let structure = seed::hash_str(&genotype.structure_key());
    let results: Vec<PatientFitResult> = patients
        .par_iter()
        .map(|p| {
            let patient_seed =
                seed::mix(master_seed, &[structure, seed::hash_str(&p.patient_id)]);
            fit_patient(genotype, p, targets, cfg, patient_seed)
        })
        .collect::<Result<Vec<_>>>()?;

    let (descriptive, mu_d, sigma_d) = descriptive_score(&results)?;
    let (predictive, mu_ap, sigma_ap) = predictive_score(&results);
    let (sensitivity, per_parameter_max_corr) =
        sensitivity_score(genotype, &results, cfg.correlation_threshold);
    let complexity = complexity_score(genotype, cfg.complexity_mode);
    let total =
        total_fitness([descriptive, predictive, sensitivity, complexity], cfg.weights);
    Ok(FitnessReport {
        descriptive,
        predictive,
        sensitivity,
        complexity,
        total,
        mu_d,
        sigma_d,
        mu_ap,
        sigma_ap,
        k: genotype.distinct_params(),
        per_parameter_max_corr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthConfig};
    use crate::model::{
        coupled_pair_genotype, coupled_pair_schema, EquationTree, ModelGenotype, StateSchema,
    };

    fn front(members: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>) -> FittedFront {
        FittedFront {
            members: members
                .into_iter()
                .map(|(params, t, v)| FittedMember {
                    params,
                    training_errors: ObjectivePoint(t),
                    validation_errors: ObjectivePoint(v),
                })
                .collect(),
        }
    }

    fn patient(id: &str, runs: Vec<FittedFront>) -> PatientFitResult {
        PatientFitResult { patient_id: id.into(), runs }
    }

    #[test]
    fn descriptive_matches_the_hand_cases() {
        // Every front at the ideal point: hypervolume 1, sigma 0.
        let perfect = vec![
            patient("a", vec![front(vec![(vec![], vec![0.0, 0.0], vec![0.0, 0.0])])]),
            patient("b", vec![front(vec![(vec![], vec![0.0, 0.0], vec![0.0, 0.0])])]),
        ];
        let (score, mu, sigma) = descriptive_score(&perfect).unwrap();
        assert!((score - 1.0).abs() < 1e-12);
        assert_eq!((mu, sigma), (1.0, 0.0));

        // Single-member fronts with hypervolume 0.9 and 0.7: mu 0.8, sigma 0.1.
        let split = vec![
            patient("a", vec![front(vec![(vec![], vec![0.1, 0.0], vec![0.0, 0.0])])]),
            patient("b", vec![front(vec![(vec![], vec![0.3, 0.0], vec![0.0, 0.0])])]),
        ];
        let (score, mu, sigma) = descriptive_score(&split).unwrap();
        assert!((mu - 0.8).abs() < 1e-12);
        assert!((sigma - 0.1).abs() < 1e-12);
        assert!((score - 0.72).abs() < 1e-12);

        // One patient: sigma 0, score is that patient's mean hypervolume.
        let single = vec![patient(
            "a",
            vec![
                front(vec![(vec![], vec![0.5, 0.0], vec![0.0, 0.0])]),
                front(vec![(vec![], vec![0.3, 0.0], vec![0.0, 0.0])]),
            ],
        )];
        let (score, mu, sigma) = descriptive_score(&single).unwrap();
        assert_eq!(sigma, 0.0);
        assert!((mu - 0.6).abs() < 1e-12);
        assert!((score - 0.6).abs() < 1e-12);
    }

    #[test]
    fn predictive_matches_the_hand_cases() {
        let zeros = vec![patient(
            "a",
            vec![front(vec![(vec![], vec![0.2, 0.2], vec![0.0, 0.0])])],
        )];
        let (score, ..) = predictive_score(&zeros);
        assert!((score - 1.0).abs() < 1e-12);

        // Pooled components {0.1, 0.3}: mu 0.2, sigma 0.1, score 0.72.
        let mixed = vec![patient(
            "a",
            vec![front(vec![
                (vec![], vec![0.0], vec![0.1]),
                (vec![], vec![0.0], vec![0.3]),
            ])],
        )];
        let (score, mu, sigma) = predictive_score(&mixed);
        assert!((mu - 0.2).abs() < 1e-12);
        assert!((sigma - 0.1).abs() < 1e-12);
        assert!((score - 0.72).abs() < 1e-12);

        let worst = vec![patient(
            "a",
            vec![front(vec![(vec![], vec![0.0, 0.0], vec![1.0, 1.0])])],
        )];
        let (score, mu, sigma) = predictive_score(&worst);
        assert_eq!((mu, sigma), (1.0, 0.0));
        assert_eq!(score, 0.0);
    }

    /// s1' = g1*s1, s2' = s2 over the pair schema: exactly one parameter.
    fn one_param_genotype() -> ModelGenotype {
        ModelGenotype::new(
            vec![
                EquationTree::Op {
                    op: crate::model::BinOp::Mul,
                    left: Box::new(EquationTree::Param(0)),
                    right: Box::new(EquationTree::State(0)),
                },
                EquationTree::State(1),
            ],
            7,
            &coupled_pair_schema(),
        )
        .unwrap()
    }

    fn two_param_genotype() -> ModelGenotype {
        ModelGenotype::new(
            vec![
                EquationTree::Op {
                    op: crate::model::BinOp::Mul,
                    left: Box::new(EquationTree::Param(0)),
                    right: Box::new(EquationTree::State(0)),
                },
                EquationTree::Op {
                    op: crate::model::BinOp::Mul,
                    left: Box::new(EquationTree::Param(1)),
                    right: Box::new(EquationTree::State(1)),
                },
            ],
            7,
            &coupled_pair_schema(),
        )
        .unwrap()
    }

    #[test]
    fn sensitivity_matches_the_hand_cases() {
        let genotype = one_param_genotype();
        // Parameter linearly drives the error: |r| = 1 > 0.35.
        let driving = vec![patient(
            "a",
            vec![front(vec![
                (vec![0.1], vec![0.1], vec![0.0]),
                (vec![0.2], vec![0.2], vec![0.0]),
                (vec![0.3], vec![0.3], vec![0.0]),
            ])],
        )];
        let (score, corr) = sensitivity_score(&genotype, &driving, 0.35);
        assert_eq!(score, 1.0);
        assert!((corr[0] - 1.0).abs() < 1e-12);

        // Zero parameter variance in every front: correlation 0, score 0.
        let flat = vec![patient(
            "a",
            vec![front(vec![
                (vec![0.5], vec![0.1], vec![0.0]),
                (vec![0.5], vec![0.2], vec![0.0]),
                (vec![0.5], vec![0.3], vec![0.0]),
            ])],
        )];
        let (score, corr) = sensitivity_score(&genotype, &flat, 0.35);
        assert_eq!(score, 0.0);
        assert_eq!(corr, vec![0.0]);

        // Two parameters, one useful.
        let two = two_param_genotype();
        let half = vec![patient(
            "a",
            vec![front(vec![
                (vec![0.1, 0.5], vec![0.1], vec![0.0]),
                (vec![0.2, 0.5], vec![0.2], vec![0.0]),
                (vec![0.3, 0.5], vec![0.3], vec![0.0]),
            ])],
        )];
        let (score, corr) = sensitivity_score(&two, &half, 0.35);
        assert_eq!(score, 0.5);
        assert_eq!(corr.len(), 2);

        // Fronts below 3 members contribute nothing.
        let tiny = vec![patient(
            "a",
            vec![front(vec![
                (vec![0.1], vec![0.1], vec![0.0]),
                (vec![0.9], vec![0.9], vec![0.0]),
            ])],
        )];
        let (score, _) = sensitivity_score(&genotype, &tiny, 0.35);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn sensitivity_of_parameter_free_models_is_one() {
        let persistence = ModelGenotype::new(
            vec![EquationTree::State(0), EquationTree::State(1)],
            7,
            &coupled_pair_schema(),
        )
        .unwrap();
        let (score, corr) = sensitivity_score(&persistence, &[], 0.35);
        assert_eq!(score, 1.0);
        assert!(corr.is_empty());
    }

    #[test]
    fn complexity_covers_both_modes() {
        let saturated_schema =
            StateSchema::new(vec!["s".into()], vec![0], vec![(0.0, 1.0)]).unwrap();
        let mut tree = EquationTree::Param(0);
        for p in 1..7 {
            tree = EquationTree::Op {
                op: crate::model::BinOp::Add,
                left: Box::new(tree),
                right: Box::new(EquationTree::Param(p)),
            };
        }
        let saturated = ModelGenotype::new(vec![tree], 7, &saturated_schema).unwrap();
        assert_eq!(saturated.distinct_params(), 7);
        assert_eq!(complexity_score(&saturated, ComplexityMode::Literal), 1.0);
        assert_eq!(complexity_score(&saturated, ComplexityMode::Penalizing), 0.0);

        let one = one_param_genotype();
        assert!((complexity_score(&one, ComplexityMode::Penalizing) - 6.0 / 7.0).abs() < 1e-12);
        assert!((complexity_score(&one, ComplexityMode::Literal) - 1.0 / 7.0).abs() < 1e-12);

        let none = ModelGenotype::new(
            vec![EquationTree::State(0), EquationTree::State(1)],
            7,
            &coupled_pair_schema(),
        )
        .unwrap();
        assert_eq!(complexity_score(&none, ComplexityMode::Literal), 0.0);
        assert_eq!(complexity_score(&none, ComplexityMode::Penalizing), 1.0);
    }

    #[test]
    fn total_is_the_weighted_sum() {
        assert!((total_fitness([1.0; 4], [0.25; 4]) - 1.0).abs() < 1e-12);
        let total = total_fitness([0.9, 0.9, 1.0, 6.0 / 7.0], [0.25; 4]);
        assert!((total - 0.9142857142857143).abs() < 1e-12);
        assert_eq!(total_fitness([0.7, 0.2, 0.3, 0.4], [1.0, 0.0, 0.0, 0.0]), 0.7);
    }

    #[test]
    fn total_is_monotone_in_every_subscore() {
        let weights = [0.25, 0.25, 0.3, 0.2];
        let base = [0.4, 0.5, 0.6, 0.7];
        let f0 = total_fitness(base, weights);
        for i in 0..4 {
            let mut bumped = base;
            bumped[i] += 0.1;
            assert!(total_fitness(bumped, weights) >= f0);
        }
    }

    fn small_fit_cfg() -> FitnessConfig {
        FitnessConfig {
            nsga: Nsga2Config { pop_size: 8, generations: 8, ..Nsga2Config::default() },
            ..FitnessConfig::default()
        }
    }

    fn synth_patients(noise: f64, seed: u64) -> crate::data::Cohort {
        let (cohort, _) = synth_generate(
            &coupled_pair_genotype(),
            &coupled_pair_schema(),
            &SynthConfig { patients: 3, days: 40, noise_sigma: noise, ..SynthConfig::default() },
            seed,
        )
        .unwrap();
        cohort
    }

    #[test]
    fn parameter_free_genotypes_fit_to_single_member_fronts() {
        let cohort = synth_patients(0.05, 3);
        let persistence = Arc::new(
            ModelGenotype::new(
                vec![EquationTree::State(0), EquationTree::State(1)],
                7,
                &coupled_pair_schema(),
            )
            .unwrap(),
        );
        let result = fit_patient(
            &persistence,
            &cohort.patients[0],
            cohort.schema.target_indices(),
            &small_fit_cfg(),
            11,
        )
        .unwrap();
        assert_eq!(result.runs.len(), 3);
        for run in &result.runs {
            assert_eq!(run.members.len(), 1);
            assert!(run.members[0].params.is_empty());
        }
    }

    #[test]
    fn fitting_is_deterministic_per_seed() {
        let cohort = synth_patients(0.05, 5);
        let genotype = Arc::new(coupled_pair_genotype());
        let targets = cohort.schema.target_indices();
        let a = fit_patient(&genotype, &cohort.patients[0], targets, &small_fit_cfg(), 9)
            .unwrap();
        let b = fit_patient(&genotype, &cohort.patients[0], targets, &small_fit_cfg(), 9)
            .unwrap();
        assert_eq!(a, b);
        let c = fit_patient(&genotype, &cohort.patients[0], targets, &small_fit_cfg(), 10)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn the_generating_model_fits_noise_free_data_almost_exactly() {
        let cohort = synth_patients(0.0, 21);
        let genotype = Arc::new(coupled_pair_genotype());
        let cfg = FitnessConfig {
            nsga: Nsga2Config { pop_size: 20, generations: 30, ..Nsga2Config::default() },
            runs_per_patient: 1,
            ..FitnessConfig::default()
        };
        let result = fit_patient(
            &genotype,
            &cohort.patients[0],
            cohort.schema.target_indices(),
            &cfg,
            13,
        )
        .unwrap();
        let best = result.runs[0]
            .members
            .iter()
            .map(|m| m.training_errors.0.iter().cloned().fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-6, "best max training error {best}");
    }

    #[test]
    fn short_segments_are_rejected_before_fitting() {
        let cohort = synth_patients(0.0, 2);
        let mut patient = cohort.patients[0].clone();
        patient.val_end = patient.train_end + 2; // validation of 2 days, horizon 3
        let genotype = Arc::new(coupled_pair_genotype());
        let err = fit_patient(
            &genotype,
            &patient,
            cohort.schema.target_indices(),
            &small_fit_cfg(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SegmentTooShort(_)));
    }

    #[test]
    fn cohort_evaluation_is_deterministic_and_self_consistent() {
        let cohort = synth_patients(0.05, 17);
        let genotype = Arc::new(coupled_pair_genotype());
        let cfg = small_fit_cfg();
        let targets = cohort.schema.target_indices();
        let a = evaluate_genotype(&genotype, &cohort.patients, targets, &cfg, 31).unwrap();
        let b = evaluate_genotype(&genotype, &cohort.patients, targets, &cfg, 31).unwrap();
        assert_eq!(a, b);

        assert_eq!(a.k, 1);
        assert_eq!(a.per_parameter_max_corr.len(), 1);
        let recombined = total_fitness(
            [a.descriptive, a.predictive, a.sensitivity, a.complexity],
            cfg.weights,
        );
        assert!((a.total - recombined).abs() < 1e-12);
        assert!((a.descriptive - a.mu_d * (1.0 - a.sigma_d)).abs() < 1e-12);
        assert!((a.predictive - (1.0 - a.mu_ap) * (1.0 - a.sigma_ap)).abs() < 1e-12);
        for score in [a.descriptive, a.predictive, a.sensitivity, a.complexity] {
            assert!((0.0..=1.0).contains(&score), "score {score}");
        }
    }

    #[test]
    fn reports_serialize_with_stable_keys() {
        let report = FitnessReport {
            descriptive: 0.9,
            predictive: 0.8,
            sensitivity: 1.0,
            complexity: 6.0 / 7.0,
            total: 0.88,
            mu_d: 0.9,
            sigma_d: 0.0,
            mu_ap: 0.2,
            sigma_ap: 0.0,
            k: 1,
            per_parameter_max_corr: vec![0.9],
        };
        let json = serde_json::to_string(&report).unwrap();
        for key in [
            "descriptive",
            "predictive",
            "sensitivity",
            "complexity",
            "total",
            "mu_d",
            "sigma_d",
            "mu_ap",
            "sigma_ap",
            "\"k\"",
            "per_parameter_max_corr",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back: FitnessReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
