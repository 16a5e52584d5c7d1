//! Non-dominated algorithms in a two-objective space (both maximized).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub label: String,
    /// Name of the objective pair, e.g. `U1/U2`.
    pub space: String,
    pub x: f64,
    pub y: f64,
}

impl ParetoPoint {
    pub fn new(label: impl Into<String>, space: impl Into<String>, x: f64, y: f64) -> Self {
        ParetoPoint {
            label: label.into(),
            space: space.into(),
            x,
            y,
        }
    }

    /// `self ≻ other`: at least as good in both objectives and better in one.
    pub fn dominates(&self, other: &ParetoPoint) -> bool {
        self.x >= other.x && self.y >= other.y && (self.x > other.x || self.y > other.y)
    }
}

/// Front membership flag for every point, in input order.
///
/// Sweeps points by decreasing `x`; a point survives iff its `y` beats every
/// point with strictly larger `x` and ties the best `y` among equal `x`.
pub fn pareto_front(points: &[ParetoPoint]) -> Result<Vec<bool>> {
    if let Some(first) = points.first() {
        if let Some(p) = points.iter().find(|p| p.space != first.space) {
            return Err(Error::MixedObjectiveSpace(first.space.clone(), p.space.clone()));
        }
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::NonFinite("pareto point coordinates"));
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .x
            .total_cmp(&points[a].x)
            .then(points[b].y.total_cmp(&points[a].y))
    });

    let mut on_front = vec![false; points.len()];
    let mut best_y_right = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let x = points[order[start]].x;
        let end = order[start..]
            .iter()
            .position(|&i| points[i].x != x)
            .map_or(order.len(), |off| start + off);
        let group_best = points[order[start]].y;
        for &i in &order[start..end] {
            let y = points[i].y;
            on_front[i] = y == group_best && y > best_y_right;
        }
        best_y_right = best_y_right.max(group_best);
        start = end;
    }
    Ok(on_front)
}
