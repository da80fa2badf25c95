//! Exact dominated hypervolume for up to four objectives.

use crate::error::{Error, Result};
use crate::moo::ObjectivePoint;

/// Lebesgue measure of the union of boxes `[point, reference]` over the
/// front, i.e. the region dominated by the front up to the reference point.
///
/// Exact recursive slab decomposition; supports 1 to 4 objectives and rejects
/// more. An empty front measures 0. Point coordinates beyond the reference
/// contribute empty boxes.
pub fn dominated_hypervolume(
    points: &[ObjectivePoint],
    reference: &ObjectivePoint,
) -> Result<f64> {
    let c = reference.len();
    if c == 0 {
        return Err(Error::Config("hypervolume reference point is empty".into()));
    }
    if c > 4 {
        return Err(Error::TooManyObjectives(c));
    }
    if !reference.is_finite() {
        return Err(Error::Config("hypervolume reference point must be finite".into()));
    }
    for p in points {
        if p.len() != c {
            return Err(Error::Config(format!(
                "objective point has {} values, reference has {c}",
                p.len()
            )));
        }
        if !p.is_finite() {
            return Err(Error::Config("objective values must be finite".into()));
        }
    }
    if points.is_empty() {
        return Ok(0.0);
    }
    let boxes: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.0.iter().zip(&reference.0).map(|(v, r)| v.min(*r)).collect())
        .collect();
    Ok(union_measure(&boxes, &reference.0))
}

/// Union volume of boxes [corner, reference]; recursion sweeps the first
/// coordinate in slabs and measures the active set one dimension down.
fn union_measure(corners: &[Vec<f64>], reference: &[f64]) -> f64 {
    if corners.is_empty() {
        return 0.0;
    }
    if reference.len() == 1 {
        let lowest = corners.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        return reference[0] - lowest;
    }
    let mut cuts: Vec<f64> = corners.iter().map(|p| p[0]).collect();
    cuts.push(reference[0]);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    cuts.dedup();

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let active: Vec<Vec<f64>> = corners
            .iter()
            .filter(|p| p[0] <= a)
            .map(|p| p[1..].to_vec())
            .collect();
        if active.is_empty() {
            continue;
        }
        total += (b - a) * union_measure(&active, &reference[1..]);
    }
    total
}
