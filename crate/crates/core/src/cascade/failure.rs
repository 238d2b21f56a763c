use crate::grid::{FailureParams, NetworkCase, Topology};

/// Branch failure rates (1/min) and their derivatives with respect to the
/// signed branch flow (1/min per MW).
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRates {
    pub lambda: Vec<f64>,
    pub slope: Vec<f64>,
    /// Piece of the loading curve each branch sits on.
    pub segment: Vec<RateSegment>,
}

/// Loadings within this distance of a breakpoint count as on it.
pub const BREAKPOINT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateSegment {
    OutOfService,
    Flat,
    Rising,
    Overload,
    Capped,
    /// At the knee, at full loading or where the cap starts.
    Breakpoint,
}

pub fn rate_segment(p: &FailureParams, loading: f64) -> RateSegment {
    let cap_at = 1.0 + (p.lambda_max - p.lambda1) / p.overload_slope;
    let near = |b: f64| (loading - b).abs() <= BREAKPOINT_TOL;
    if near(p.knee) || near(1.0) || (p.overload_slope > 0.0 && near(cap_at)) {
        RateSegment::Breakpoint
    } else if loading <= p.knee {
        RateSegment::Flat
    } else if loading <= 1.0 {
        RateSegment::Rising
    } else if failure_rate(p, loading).1 == 0.0 {
        RateSegment::Capped
    } else {
        RateSegment::Overload
    }
}

impl FailureRates {
    pub fn total(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// Branches whose rate responds to flow.
    pub fn responsive(&self) -> Vec<usize> {
        (0..self.slope.len()).filter(|&k| self.slope[k] != 0.0).collect()
    }
}

/// Rate at `loading = |F|/F^max` and its derivative with respect to loading.
pub fn failure_rate(p: &FailureParams, loading: f64) -> (f64, f64) {
    if loading <= p.knee {
        (p.lambda0, 0.0)
    } else if loading <= 1.0 {
        let s = (p.lambda1 - p.lambda0) / (1.0 - p.knee);
        (p.lambda0 + s * (loading - p.knee), s)
    } else {
        let v = p.lambda1 + p.overload_slope * (loading - 1.0);
        if v >= p.lambda_max {
            (p.lambda_max, 0.0)
        } else {
            (v, p.overload_slope)
        }
    }
}

/// Evaluates the loading model for every branch. Out-of-service branches
/// carry no rate.
pub fn failure_rates(case: &NetworkCase, topo: &Topology, flows: &[f64]) -> FailureRates {
    let m = case.n_branches();
    let mut lambda = vec![0.0; m];
    let mut slope = vec![0.0; m];
    let mut segment = vec![RateSegment::OutOfService; m];
    for k in 0..m {
        if !topo.in_service(k) {
            continue;
        }
        let fmax = case.branches[k].rate_mw;
        let params = case.failure_params(k);
        let loading = flows[k].abs() / fmax;
        let (l, dl) = failure_rate(&params, loading);
        segment[k] = rate_segment(&params, loading);
        lambda[k] = l;
        if dl != 0.0 && flows[k] != 0.0 {
            slope[k] = dl * flows[k].signum() / fmax;
        }
    }
    FailureRates { lambda, slope, segment }
}
