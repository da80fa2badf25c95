//! Deterministic simulation of model instances and forecast-error objectives.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelGenotype;

/// How forecasts are rolled out against a segment when computing objectives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastProtocol {
    /// Re-seed the full state from observations at every origin day, predict
    /// each configured horizon ahead, and pool the squared errors.
    RollingOrigin,
    /// Seed once from the first day of the segment and let the model run
    /// freely across it, comparing every subsequent day.
    FreeRun,
}

/// Forecast-evaluation settings shared by fitting and test evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastSpec {
    pub horizons: BTreeSet<usize>,
    pub clamp_states: bool,
    pub clamp_error: bool,
    pub protocol: ForecastProtocol,
}

impl Default for ForecastSpec {
    fn default() -> Self {
        ForecastSpec {
            horizons: [1, 2, 3].into_iter().collect(),
            clamp_states: true,
            clamp_error: true,
            protocol: ForecastProtocol::RollingOrigin,
        }
    }
}

impl ForecastSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(Error::Config("forecast horizons must be non-empty".into()));
        }
        if self.horizons.contains(&0) {
            return Err(Error::Config("forecast horizons must be positive".into()));
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().next_back().copied().unwrap_or(0)
    }
}

fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        return 0.0;
    }
    x.clamp(0.0, 1.0)
}

/// A genotype with instantiated parameter values.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    genotype: Arc<ModelGenotype>,
    params: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    /// Parameter values indexed by raw pool index, for tree evaluation.
    dense: Vec<f64>,
}

impl ModelInstance {
    /// `params` in canonical order: ascending raw pool index.
    pub fn new(
        genotype: Arc<ModelGenotype>,
        params: Vec<f64>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let indices = genotype.param_indices();
        if params.len() != indices.len() {
            return Err(Error::Config(format!(
                "instance has {} parameter values but the genotype uses {} parameters",
                params.len(),
                indices.len()
            )));
        }
        if bounds.len() != params.len() {
            return Err(Error::Config("bounds length differs from parameter count".into()));
        }
        for (i, (&v, &(lo, hi))) in params.iter().zip(&bounds).enumerate() {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::Config(format!(
                    "parameter {i} value {v} outside bounds [{lo}, {hi}]"
                )));
            }
        }
        let mut dense = vec![0.0; genotype.lambda_max()];
        for (slot, &raw) in indices.iter().enumerate() {
            dense[raw] = params[slot];
        }
        Ok(ModelInstance { genotype, params, bounds, dense })
    }

    pub fn genotype(&self) -> &Arc<ModelGenotype> {
        &self.genotype
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Advances the state by one day, writing into `out`.
    pub fn step_into(&self, state: &[f64], clamp_states: bool, out: &mut [f64]) {
        debug_assert_eq!(state.len(), self.genotype.state_count());
        debug_assert_eq!(out.len(), state.len());
        for (slot, tree) in out.iter_mut().zip(self.genotype.trees()) {
            let v = tree.eval(state, &self.dense);
            *slot = if clamp_states { clamp_unit(v) } else { v };
        }
    }

    /// Advances the state by one day.
    pub fn step(&self, state: &[f64], clamp_states: bool) -> Vec<f64> {
        let mut out = vec![0.0; state.len()];
        self.step_into(state, clamp_states, &mut out);
        out
    }
}

/// Forecast `h` days ahead from observed values at `origin`.
///
/// The full state vector is seeded from `segment[origin]`; intermediate steps
/// feed the model its own predictions.
pub fn forecast(
    instance: &ModelInstance,
    segment: &[Vec<f64>],
    origin: usize,
    h: usize,
    clamp_states: bool,
) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::Config("forecast horizon must be positive".into()));
    }
    if origin >= segment.len() || origin + h >= segment.len() {
        return Err(Error::Config(format!(
            "forecast origin {origin} + horizon {h} outside segment of {} days",
            segment.len()
        )));
    }
    let mut cur = segment[origin].clone();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..h {
        instance.step_into(&cur, clamp_states, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// Mean squared forecast error per target state over a segment.
///
/// Rolling-origin protocol: every day is an origin; squared errors are pooled
/// over all (origin, horizon) pairs that stay inside the segment. Free-run
/// protocol: the state is seeded once from day 0 and every later day is
/// compared against the model's free trajectory (horizons are ignored).
pub fn objective_errors(
    instance: &ModelInstance,
    segment: &[Vec<f64>],
    targets: &[usize],
    spec: &ForecastSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    debug_assert!(!targets.is_empty());
    let max_h = spec.max_horizon();
    if segment.len() <= max_h {
        return Err(Error::SegmentTooShort(format!(
            "{} days cannot support horizon {max_h}",
            segment.len()
        )));
    }

    let mut sums = vec![0.0; targets.len()];
    let mut count = 0usize;
    let mut cur = vec![0.0; instance.genotype.state_count()];
    let mut next = vec![0.0; cur.len()];

    match spec.protocol {
        ForecastProtocol::RollingOrigin => {
            let horizons: Vec<usize> = spec.horizons.iter().copied().collect();
            for origin in 0..segment.len() - 1 {
                cur.copy_from_slice(&segment[origin]);
                let reach = max_h.min(segment.len() - 1 - origin);
                let mut h_iter = horizons.iter().peekable();
                for h in 1..=reach {
                    instance.step_into(&cur, spec.clamp_states, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                    if h_iter.peek() == Some(&&h) {
                        h_iter.next();
                        let observed = &segment[origin + h];
                        for (sum, &t) in sums.iter_mut().zip(targets) {
                            let d = cur[t] - observed[t];
                            *sum += d * d;
                        }
                        count += 1;
                    }
                }
            }
        }
        ForecastProtocol::FreeRun => {
            cur.copy_from_slice(&segment[0]);
            for observed in &segment[1..] {
                instance.step_into(&cur, spec.clamp_states, &mut next);
                std::mem::swap(&mut cur, &mut next);
                for (sum, &t) in sums.iter_mut().zip(targets) {
                    let d = cur[t] - observed[t];
                    *sum += d * d;
                }
                count += 1;
            }
        }
    }

    debug_assert!(count > 0, "segment length precondition guarantees pairs");
    let mut errors: Vec<f64> = sums.iter().map(|s| s / count as f64).collect();
    if spec.clamp_error {
        for e in &mut errors {
            *e = clamp_unit(*e);
        }
    }
    Ok(errors)
}
