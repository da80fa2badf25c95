//! NSGA-II over bounded real parameter vectors.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::{crowding_distance, non_dominated_sort, ObjectivePoint};
use crate::seed;

/// Settings for one NSGA-II run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nsga2Config {
    pub pop_size: usize,
    pub generations: usize,
    /// Probability that a mating pair undergoes simulated binary crossover.
    pub crossover_prob: f64,
    /// SBX distribution index (η_c).
    pub crossover_eta: f64,
    /// Polynomial-mutation distribution index (η_m).
    pub mutation_eta: f64,
    /// Per-variable mutation probability; `None` means 1/dim.
    pub mutation_prob: Option<f64>,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Nsga2Config {
            pop_size: 5,
            generations: 5,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_eta: 20.0,
            mutation_prob: None,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Config("NSGA-II population must be at least 2".into()));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob.unwrap_or(0.5)),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.crossover_eta <= 0.0 || self.mutation_eta <= 0.0 {
            return Err(Error::Config("distribution indices must be positive".into()));
        }
        Ok(())
    }
}

/// One fitted parameter vector with its objective errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontMember {
    pub params: Vec<f64>,
    pub errors: ObjectivePoint,
}

/// Non-dominated set returned by a completed run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    pub members: Vec<FrontMember>,
}

impl ParetoFront {
    pub fn error_points(&self) -> Vec<ObjectivePoint> {
        self.members.iter().map(|m| m.errors.clone()).collect()
    }
}

struct Candidate {
    x: Vec<f64>,
    errors: ObjectivePoint,
}

/// Runs NSGA-II and returns the final non-dominated set.
///
/// `evaluate` maps a parameter vector within `bounds` to objective errors and
/// may be called concurrently for distinct members of a generation. With zero
/// parameters the single fixed evaluation is returned directly. Deterministic
/// given `run_seed`: the same seed yields bitwise-identical fronts.
pub fn nsga2_run<F>(
    evaluate: &F,
    bounds: &[(f64, f64)],
    cfg: &Nsga2Config,
    run_seed: u64,
) -> Result<ParetoFront>
where
    F: Fn(&[f64]) -> Result<ObjectivePoint> + Sync,
{
    cfg.validate()?;
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("invalid parameter bounds [{lo}, {hi}]")));
        }
    }

    let dim = bounds.len();
    if dim == 0 {
        let errors = run_eval(evaluate, &[])?;
        return Ok(ParetoFront {
            members: vec![FrontMember { params: Vec::new(), errors }],
        });
    }

    let mut rng = seed::rng(run_seed);
    let mutation_prob = cfg.mutation_prob.unwrap_or(1.0 / dim as f64);

    let initial: Vec<Vec<f64>> = (0..cfg.pop_size)
        .map(|_| bounds.iter().map(|&(lo, hi)| sample_uniform(lo, hi, &mut rng)).collect())
        .collect();
    let mut pop = evaluate_all(evaluate, initial)?;

    for _ in 0..cfg.generations {
        let points: Vec<ObjectivePoint> = pop.iter().map(|c| c.errors.clone()).collect();
        let (rank, crowd) = rank_and_crowding(&points);

        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(cfg.pop_size);
        while offspring.len() < cfg.pop_size {
            let a = crowded_tournament(&rank, &crowd, &mut rng);
            let b = crowded_tournament(&rank, &crowd, &mut rng);
            let (mut c1, mut c2) = sbx_pair(&pop[a].x, &pop[b].x, bounds, cfg, &mut rng);
            polynomial_mutation(&mut c1, bounds, mutation_prob, cfg.mutation_eta, &mut rng);
            polynomial_mutation(&mut c2, bounds, mutation_prob, cfg.mutation_eta, &mut rng);
            offspring.push(c1);
            if offspring.len() < cfg.pop_size {
                offspring.push(c2);
            }
        }
        let offspring = evaluate_all(evaluate, offspring)?;

        pop.extend(offspring);
        pop = environmental_selection(pop, cfg.pop_size);
    }

    let points: Vec<ObjectivePoint> = pop.iter().map(|c| c.errors.clone()).collect();
    let fronts = non_dominated_sort(&points);
    let members = fronts[0]
        .iter()
        .map(|&i| FrontMember { params: pop[i].x.clone(), errors: pop[i].errors.clone() })
        .collect();
    Ok(ParetoFront { members })
}

fn sample_uniform(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn run_eval<F>(evaluate: &F, x: &[f64]) -> Result<ObjectivePoint>
where
    F: Fn(&[f64]) -> Result<ObjectivePoint> + Sync,
{
    evaluate(x).map_err(|e| Error::Evaluation { params: x.to_vec(), msg: e.to_string() })
}

fn evaluate_all<F>(evaluate: &F, xs: Vec<Vec<f64>>) -> Result<Vec<Candidate>>
where
    F: Fn(&[f64]) -> Result<ObjectivePoint> + Sync,
{
    xs.into_par_iter()
        .map(|x| {
            let errors = run_eval(evaluate, &x)?;
            Ok(Candidate { x, errors })
        })
        .collect()
}

fn rank_and_crowding(points: &[ObjectivePoint]) -> (Vec<usize>, Vec<f64>) {
    let fronts = non_dominated_sort(points);
    let mut rank = vec![0usize; points.len()];
    let mut crowd = vec![0.0f64; points.len()];
    for (r, front) in fronts.iter().enumerate() {
        let front_points: Vec<ObjectivePoint> =
            front.iter().map(|&i| points[i].clone()).collect();
        let dists = crowding_distance(&front_points);
        for (&i, d) in front.iter().zip(dists) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

/// Binary tournament under the crowded comparison operator; exact ties are
/// broken uniformly at random.
fn crowded_tournament(rank: &[usize], crowd: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let n = rank.len();
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    if rank[a] < rank[b] {
        a
    } else if rank[b] < rank[a] {
        b
    } else if crowd[a] > crowd[b] {
        a
    } else if crowd[b] > crowd[a] {
        b
    } else if rng.gen_bool(0.5) {
        a
    } else {
        b
    }
}

/// Simulated binary crossover (bounded, Deb's formulation).
fn sbx_pair(
    p1: &[f64],
    p2: &[f64],
    bounds: &[(f64, f64)],
    cfg: &Nsga2Config,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.gen::<f64>() > cfg.crossover_prob {
        return (c1, c2);
    }
    let eta = cfg.crossover_eta;
    for j in 0..p1.len() {
        if rng.gen::<f64>() > 0.5 {
            continue;
        }
        let (mut y1, mut y2) = (p1[j], p2[j]);
        if (y2 - y1).abs() <= 1e-14 {
            continue;
        }
        if y1 > y2 {
            std::mem::swap(&mut y1, &mut y2);
        }
        let (lo, hi) = bounds[j];
        let u: f64 = rng.gen();

        let beta = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
        let mut lower_child = 0.5 * ((y1 + y2) - beta_q(u, beta, eta) * (y2 - y1));
        let beta = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
        let mut upper_child = 0.5 * ((y1 + y2) + beta_q(u, beta, eta) * (y2 - y1));

        lower_child = lower_child.clamp(lo, hi);
        upper_child = upper_child.clamp(lo, hi);
        if rng.gen::<f64>() <= 0.5 {
            std::mem::swap(&mut lower_child, &mut upper_child);
        }
        c1[j] = lower_child;
        c2[j] = upper_child;
    }
    (c1, c2)
}

fn beta_q(u: f64, beta: f64, eta: f64) -> f64 {
    let alpha = 2.0 - beta.powf(-(eta + 1.0));
    if u <= 1.0 / alpha {
        (u * alpha).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
    }
}

/// Polynomial mutation (bounded, Deb's formulation).
fn polynomial_mutation(
    x: &mut [f64],
    bounds: &[(f64, f64)],
    prob: f64,
    eta: f64,
    rng: &mut ChaCha8Rng,
) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        if rng.gen::<f64>() >= prob {
            continue;
        }
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        let d1 = (*v - lo) / range;
        let d2 = (hi - *v) / range;
        let u: f64 = rng.gen();
        let mp = 1.0 / (eta + 1.0);
        let delta = if u <= 0.5 {
            let xy = 1.0 - d1;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(mp) - 1.0
        } else {
            let xy = 1.0 - d2;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(mp)
        };
        *v = (*v + delta * range).clamp(lo, hi);
    }
}

/// μ+λ environmental selection: whole fronts first, the split front by
/// descending crowding distance (ties by index, so selection is stable).
fn environmental_selection(combined: Vec<Candidate>, target: usize) -> Vec<Candidate> {
    let points: Vec<ObjectivePoint> = combined.iter().map(|c| c.errors.clone()).collect();
    let fronts = non_dominated_sort(&points);
    let mut keep: Vec<usize> = Vec::with_capacity(target);
    for front in fronts {
        if keep.len() == target {
            break;
        }
        if keep.len() + front.len() <= target {
            keep.extend(&front);
            continue;
        }
        let front_points: Vec<ObjectivePoint> =
            front.iter().map(|&i| points[i].clone()).collect();
        let dists = crowding_distance(&front_points);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            dists[b].partial_cmp(&dists[a]).expect("crowding is never NaN").then(a.cmp(&b))
        });
        for &pos in order.iter().take(target - keep.len()) {
            keep.push(front[pos]);
        }
        break;
    }
    keep.sort_unstable();
    let mut keep_flags = vec![false; combined.len()];
    for &i in &keep {
        keep_flags[i] = true;
    }
    combined
        .into_iter()
        .zip(keep_flags)
        .filter_map(|(c, keep)| keep.then_some(c))
        .collect()
}
