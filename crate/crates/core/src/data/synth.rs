//! Synthetic cohorts drawn from a known generating model, for tests and
//! desk-scale experiments.

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::data::{split_indices, Cohort, PatientSeries, Provenance};
use crate::error::{Error, Result};
use crate::model::{ModelFile, ModelGenotype, StateSchema};
use crate::seed;
use crate::sim::ModelInstance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub patients: usize,
    pub days: usize,
    /// Gaussian observation noise added to the clean trajectory.
    pub noise_sigma: f64,
    pub init_range: (f64, f64),
    pub param_range: (f64, f64),
    pub fractions: (f64, f64, f64),
    pub max_horizon: usize,
    pub start_date: NaiveDate,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            patients: 20,
            days: 120,
            noise_sigma: 0.02,
            init_range: (0.2, 0.8),
            param_range: (0.1, 0.9),
            fractions: (0.6, 0.2, 0.2),
            max_horizon: 3,
            start_date: NaiveDate::from_ymd_opt(2024, 1, 1).expect("valid date"),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patients == 0 {
            return Err(Error::Config("synthetic cohort needs at least 1 patient".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!("noise sigma {} invalid", self.noise_sigma)));
        }
        for (name, (lo, hi)) in [("init", self.init_range), ("param", self.param_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("{name} range [{lo}, {hi}] invalid")));
            }
        }
        if !(0.0..=1.0).contains(&self.init_range.0) || !(0.0..=1.0).contains(&self.init_range.1) {
            return Err(Error::Config("initial states must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// The sampled parameters behind one synthetic patient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientParams {
    pub patient_id: String,
    pub params: Vec<f64>,
}

/// What generated a synthetic cohort: the model and each patient's
/// parameters, kept for recovery checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub model: ModelFile,
    pub patients: Vec<PatientParams>,
}

impl GroundTruth {
    pub fn to_json_pretty(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<GroundTruth> {
        let gt: GroundTruth = serde_json::from_str(text)?;
        gt.model.to_genotype()?;
        Ok(gt)
    }
}

/// Simulates a cohort from `genotype`: per patient, draw parameters and an
/// initial state, iterate the model with clamping, add observation noise,
/// clamp to [0,1], split. Deterministic per seed.
pub fn synth_generate(
    genotype: &ModelGenotype,
    schema: &StateSchema,
    cfg: &SynthConfig,
    master_seed: u64,
) -> Result<(Cohort, GroundTruth)> {
    cfg.validate()?;
    split_indices(cfg.days, cfg.fractions, cfg.max_horizon)?;
    let arc = Arc::new(genotype.clone());
    let k = genotype.param_indices().len();
    let tag = seed::hash_str("synth-patient");

    let mut patients = Vec::with_capacity(cfg.patients);
    let mut truths = Vec::with_capacity(cfg.patients);
    for i in 0..cfg.patients {
        let mut rng = seed::rng(seed::mix(master_seed, &[tag, i as u64]));
        let patient_id = format!("p{i:03}");

        let params: Vec<f64> = (0..k).map(|_| sample(cfg.param_range, &mut rng)).collect();
        let instance =
            ModelInstance::new(Arc::clone(&arc), params.clone(), vec![cfg.param_range; k])?;

        let m = schema.state_count();
        let mut values = Vec::with_capacity(cfg.days);
        let mut state: Vec<f64> = (0..m).map(|_| sample(cfg.init_range, &mut rng)).collect();
        values.push(state.clone());
        for _ in 1..cfg.days {
            state = instance.step(&state, true);
            values.push(state.clone());
        }
        if cfg.noise_sigma > 0.0 {
            let noise = Normal::new(0.0, cfg.noise_sigma)
                .map_err(|e| Error::Config(format!("noise distribution: {e}")))?;
            for row in &mut values {
                for v in row.iter_mut() {
                    *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
                }
            }
        }

        let (train_end, val_end) = split_indices(cfg.days, cfg.fractions, cfg.max_horizon)?;
        patients.push(PatientSeries {
            patient_id: patient_id.clone(),
            start_date: cfg.start_date,
            values,
            provenance: vec![vec![Provenance::Observed; m]; cfg.days],
            train_end,
            val_end,
        });
        truths.push(PatientParams { patient_id, params });
    }

    let cohort = Cohort { meta: None, schema: schema.clone(), patients };
    let truth = GroundTruth {
        model: ModelFile::from_genotype(genotype, schema.names()),
        patients: truths,
    };
    Ok((cohort, truth))
}

fn sample<R: Rng>(range: (f64, f64), rng: &mut R) -> f64 {
    if range.1 > range.0 {
        rng.gen_range(range.0..=range.1)
    } else {
        range.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{coupled_pair_genotype, coupled_pair_schema, mood_fixture_genotype,
        mood_fixture_schema};

    fn pair_cfg(noise: f64) -> SynthConfig {
        SynthConfig { patients: 4, days: 30, noise_sigma: noise, ..SynthConfig::default() }
    }

    #[test]
    fn noise_free_series_satisfy_the_generating_equations() {
        let genotype = coupled_pair_genotype();
        let schema = coupled_pair_schema();
        let (cohort, truth) =
            synth_generate(&genotype, &schema, &pair_cfg(0.0), 99).unwrap();
        for (p, gt) in cohort.patients.iter().zip(&truth.patients) {
            let instance = ModelInstance::new(
                Arc::new(genotype.clone()),
                gt.params.clone(),
                vec![(0.1, 0.9); gt.params.len()],
            )
            .unwrap();
            for pair in p.values.windows(2) {
                let stepped = instance.step(&pair[0], true);
                for (a, b) in stepped.iter().zip(&pair[1]) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn outputs_stay_in_the_unit_interval_under_heavy_noise() {
        let (cohort, _) = synth_generate(
            &mood_fixture_genotype(),
            &mood_fixture_schema(),
            &SynthConfig { patients: 3, days: 50, noise_sigma: 0.5, ..SynthConfig::default() },
            4,
        )
        .unwrap();
        for p in &cohort.patients {
            for row in &p.values {
                for &v in row {
                    assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_cohort_exactly() {
        let genotype = coupled_pair_genotype();
        let schema = coupled_pair_schema();
        let a = synth_generate(&genotype, &schema, &pair_cfg(0.05), 7).unwrap();
        let b = synth_generate(&genotype, &schema, &pair_cfg(0.05), 7).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&genotype, &schema, &pair_cfg(0.05), 8).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn ground_truth_lists_every_patient_with_in_range_params() {
        let genotype = coupled_pair_genotype();
        let schema = coupled_pair_schema();
        let (cohort, truth) = synth_generate(&genotype, &schema, &pair_cfg(0.02), 1).unwrap();
        assert_eq!(cohort.patients.len(), 4);
        assert_eq!(truth.patients.len(), 4);
        assert_eq!(cohort.patients[0].patient_id, "p000");
        assert_eq!(truth.patients[3].patient_id, "p003");
        for gt in &truth.patients {
            assert_eq!(gt.params.len(), 1);
            assert!((0.1..=0.9).contains(&gt.params[0]));
        }
        let text = truth.to_json_pretty().unwrap();
        let back = GroundTruth::from_json(&text).unwrap();
        assert_eq!(truth, back);
    }

    #[test]
    fn splits_and_provenance_are_populated() {
        let (cohort, _) = synth_generate(
            &coupled_pair_genotype(),
            &coupled_pair_schema(),
            &SynthConfig { patients: 1, days: 41, ..SynthConfig::default() },
            2,
        )
        .unwrap();
        let p = &cohort.patients[0];
        assert_eq!((p.train_end, p.val_end), (24, 32));
        assert!(p.provenance.iter().flatten().all(|&f| f == Provenance::Observed));
    }

    #[test]
    fn rejects_unsplittable_or_degenerate_configs() {
        let genotype = coupled_pair_genotype();
        let schema = coupled_pair_schema();
        let cfg = SynthConfig { days: 5, ..SynthConfig::default() };
        assert!(synth_generate(&genotype, &schema, &cfg, 1).is_err());
        let cfg = SynthConfig { noise_sigma: -0.1, ..SynthConfig::default() };
        assert!(synth_generate(&genotype, &schema, &cfg, 1).is_err());
        let cfg = SynthConfig { patients: 0, ..SynthConfig::default() };
        assert!(synth_generate(&genotype, &schema, &cfg, 1).is_err());
    }
}
