use nalgebra::DVector;

/// Per-attempt convergence indices; `None` where a denominator vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceIndices {
    pub magnitude: Vec<Option<f64>>,
    pub direction: Vec<Option<f64>>,
}

/// `‖a/‖a‖ - b/‖b‖‖`.
pub fn direction_distance(a: &DVector<f64>, b: &DVector<f64>) -> Option<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((a / na - b / nb).norm())
}

/// `δ_m = ‖Γ_m - Γ*‖ / ‖Γ_1 - Γ*‖` and the direction distance to `Γ*`.
pub fn convergence_indices(history: &[DVector<f64>], reference: &DVector<f64>) -> ConvergenceIndices {
    let first = history.first().map(|g| (g - reference).norm()).unwrap_or(0.0);
    let magnitude = history
        .iter()
        .map(|g| if first > 0.0 { Some((g - reference).norm() / first) } else { None })
        .collect();
    let direction = history.iter().map(|g| direction_distance(g, reference)).collect();
    ConvergenceIndices { magnitude, direction }
}

/// First index from which every later value is defined and below `level`.
pub fn settles_below(values: &[Option<f64>], level: f64) -> Option<usize> {
    let mut settled = None;
    for (i, v) in values.iter().enumerate().rev() {
        match v {
            Some(x) if *x < level => settled = Some(i),
            _ => break,
        }
    }
    settled
}
