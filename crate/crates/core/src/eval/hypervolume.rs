//! Exact 2-D hypervolume of (component count, accuracy) fronts inside the
//! unit square, measured against the worst corner (all components, zero
//! accuracy).

use crate::error::{Error, Result};

/// Points are (normalized component count, accuracy): the first coordinate
/// is minimized, the second maximized, both in [0,1]. The result is the area
/// dominated by the non-dominated subset, between the attainment staircase
/// and the corner (1, 0). Sweep is exact and O(p log p).
pub fn hypervolume(points: &[(f64, f64)]) -> Result<f64> {
    for &(x, a) in points {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&a) {
            return Err(Error::PointOutsideUnitSquare(x, a));
        }
    }
    if points.is_empty() {
        return Ok(0.0);
    }
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0).then(q.1.total_cmp(&p.1)));
    // keep the staircase: accuracy must strictly rise as the component count
    // grows, otherwise the point is dominated (or duplicate) and adds nothing
    let mut front: Vec<(f64, f64)> = Vec::new();
    for &(x, a) in &sorted {
        if front.last().map_or(true, |&(_, best)| a > best) {
            front.push((x, a));
        }
    }
    let mut area = 0.0;
    for (i, &(x, a)) in front.iter().enumerate() {
        let next_x = front.get(i + 1).map_or(1.0, |&(nx, _)| nx);
        area += (next_x - x) * a;
    }
    Ok(area)
}
