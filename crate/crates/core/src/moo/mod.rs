//! Multi-objective machinery: dominance sorting, crowding distance, exact
//! dominated hypervolume, and NSGA-II over bounded real vectors.

use serde::{Deserialize, Serialize};

mod hypervolume;
mod nsga2;

pub use hypervolume::dominated_hypervolume;
pub use nsga2::{nsga2_run, FrontMember, Nsga2Config, ParetoFront};

/// A vector of objective values under minimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectivePoint(pub Vec<f64>);

impl ObjectivePoint {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Pareto dominance: no worse everywhere, strictly better somewhere.
    pub fn dominates(&self, other: &ObjectivePoint) -> bool {
        debug_assert_eq!(self.len(), other.len());
        let mut strictly_better = false;
        for (a, b) in self.0.iter().zip(&other.0) {
            if a > b {
                return false;
            }
            if a < b {
                strictly_better = true;
            }
        }
        strictly_better
    }
}

/// Fast non-dominated sort; returns fronts of indices, best first.
///
/// Front 1 holds all non-dominated points; each later front is non-dominated
/// once earlier fronts are removed. Indices within a front are ascending.
pub fn non_dominated_sort(points: &[ObjectivePoint]) -> Vec<Vec<usize>> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dominated_by = vec![0usize; n];

    for i in 0..n {
        for j in (i + 1)..n {
            if points[i].dominates(&points[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            } else if points[j].dominates(&points[i]) {
                dominates[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts: Vec<Vec<usize>> =
        vec![(0..n).filter(|&i| dominated_by[i] == 0).collect()];

    let mut current = 0;
    while !fronts[current].is_empty() {
        let mut next = Vec::new();
        for &i in &fronts[current] {
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        fronts.push(next);
        current += 1;
    }
    fronts
}

/// NSGA-II crowding distance for one front.
///
/// Boundary members per objective get infinity; interior members accumulate
/// `(next - prev) / range` per objective; a zero-range objective contributes
/// nothing.
pub fn crowding_distance(front: &[ObjectivePoint]) -> Vec<f64> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let c = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for obj in 0..c {
        order.sort_by(|&a, &b| {
            front[a].0[obj]
                .partial_cmp(&front[b].0[obj])
                .expect("finite objective values")
                .then(a.cmp(&b))
        });
        let lo = front[order[0]].0[obj];
        let hi = front[order[n - 1]].0[obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            if dist[order[w]].is_finite() {
                dist[order[w]] +=
                    (front[order[w + 1]].0[obj] - front[order[w - 1]].0[obj]) / range;
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn pt(values: &[f64]) -> ObjectivePoint {
        ObjectivePoint(values.to_vec())
    }

    #[test]
    fn dominance_definition() {
        assert!(pt(&[0.1, 0.2]).dominates(&pt(&[0.2, 0.2])));
        assert!(pt(&[0.1, 0.1]).dominates(&pt(&[0.2, 0.2])));
        assert!(!pt(&[0.2, 0.2]).dominates(&pt(&[0.2, 0.2])));
        assert!(!pt(&[0.1, 0.9]).dominates(&pt(&[0.9, 0.1])));
        assert!(!pt(&[0.9, 0.1]).dominates(&pt(&[0.1, 0.9])));
    }

    #[test]
    fn sort_groups_mutually_nondominated_points() {
        let fronts =
            non_dominated_sort(&[pt(&[0.1, 0.9]), pt(&[0.9, 0.1]), pt(&[0.5, 0.5])]);
        assert_eq!(fronts, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn sort_splits_strict_dominance_chain() {
        let fronts = non_dominated_sort(&[pt(&[0.2, 0.2]), pt(&[0.3, 0.3])]);
        assert_eq!(fronts, vec![vec![0], vec![1]]);
        assert!(non_dominated_sort(&[]).is_empty());
    }

    fn brute_force_fronts(points: &[ObjectivePoint]) -> Vec<Vec<usize>> {
        let mut remaining: Vec<usize> = (0..points.len()).collect();
        let mut fronts = Vec::new();
        while !remaining.is_empty() {
            let front: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| {
                    !remaining.iter().any(|&j| j != i && points[j].dominates(&points[i]))
                })
                .collect();
            remaining.retain(|i| !front.contains(i));
            fronts.push(front);
        }
        fronts
    }

    #[test]
    fn sort_matches_brute_force_oracle() {
        let mut rng = seed::rng(8);
        for trial in 0..100 {
            let c = if trial % 2 == 0 { 2 } else { 3 };
            let n = rng.gen_range(1..=50);
            let points: Vec<ObjectivePoint> =
                (0..n).map(|_| pt(&(0..c).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())).collect();
            assert_eq!(non_dominated_sort(&points), brute_force_fronts(&points));
        }
    }

    #[test]
    fn sort_covers_every_index_exactly_once() {
        let mut rng = seed::rng(9);
        let points: Vec<ObjectivePoint> =
            (0..40).map(|_| pt(&[rng.gen(), rng.gen()])).collect();
        let fronts = non_dominated_sort(&points);
        let mut seen: Vec<usize> = fronts.concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..points.len()).collect::<Vec<_>>());
    }

    #[test]
    fn crowding_boundary_and_interior_values() {
        assert_eq!(crowding_distance(&[pt(&[0.3, 0.3])]), vec![f64::INFINITY]);
        assert_eq!(
            crowding_distance(&[pt(&[0.1, 0.9]), pt(&[0.9, 0.1])]),
            vec![f64::INFINITY, f64::INFINITY]
        );
        let d = crowding_distance(&[pt(&[0.0, 1.0]), pt(&[0.5, 0.5]), pt(&[1.0, 0.0])]);
        assert_eq!(d[0], f64::INFINITY);
        assert!((d[1] - 2.0).abs() < 1e-12);
        assert_eq!(d[2], f64::INFINITY);
    }

    #[test]
    fn crowding_ignores_degenerate_objectives() {
        let d = crowding_distance(&[pt(&[0.0, 0.5]), pt(&[0.5, 0.5]), pt(&[1.0, 0.5])]);
        assert!((d[1] - 1.0).abs() < 1e-12);
    }
}
