//! Side-by-side comparison of every shift route.

use serde::Serialize;

use crate::error::Result;
use crate::jacobi::{classical_shift_closed, classical_shift_green, oracle_linear_response, JacobiBasis};
use crate::model::SimulationConfig;
use crate::qshift::{quantum_shift_angular, quantum_shift_reduced, DpMode};
use crate::trajectory::Trajectory;

/// Default agreement budget between the exact routes.
pub const ROUTE_TOLERANCE: f64 = 1e-5;
/// Budget for the finite-difference solid-angle route.
pub const FD_ROUTE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteValue {
    pub name: &'static str,
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiff {
    pub a: &'static str,
    pub b: &'static str,
    pub abs_diff: f64,
    pub rel_diff: f64,
}

/// All shift values, their error estimates and pairwise differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftReport {
    pub dz_classical_closed: f64,
    pub dz_classical_closed_error: f64,
    pub dz_classical_green: f64,
    pub dz_classical_green_error: f64,
    pub dz_oracle_linear_response: f64,
    pub dp_oracle_linear_response: f64,
    pub dzq_reduced: f64,
    pub dzq_reduced_error: f64,
    pub dzq_angular: f64,
    pub dzq_angular_error: f64,
    pub dzq_angular_fd: f64,
    pub dzq_angular_fd_error: f64,
    pub symplectic_drift: f64,
    pub pairs: Vec<PairDiff>,
    /// Largest relative difference among the exact routes and the oracle.
    pub max_rel_diff: f64,
    /// Largest relative difference of the fd route against the others.
    pub max_rel_diff_fd: f64,
    pub tolerance: f64,
    pub fd_tolerance: f64,
    pub pass: bool,
}

/// |a - b| / max(|a|, |b|), zero when both vanish.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

impl ShiftReport {
    pub fn compute(traj: &Trajectory, config: &SimulationConfig) -> Result<Self> {
        let closed = classical_shift_closed(traj, config)?;
        let basis = JacobiBasis::new(traj, config)?;
        let green = classical_shift_green(traj, &basis, config)?;
        let (oracle_dz, oracle_dp) = oracle_linear_response(traj, config)?;
        let reduced = quantum_shift_reduced(traj, config)?;
        let angular = quantum_shift_angular(traj, DpMode::AnalyticDp, config)?;
        let fd = quantum_shift_angular(traj, DpMode::FdDp, config)?;

        let exact = [
            RouteValue { name: "dz_classical_closed", value: closed.value, error: closed.error },
            RouteValue { name: "dz_classical_green", value: green.value, error: green.error },
            RouteValue { name: "dz_oracle_linear_response", value: oracle_dz, error: 0.0 },
            RouteValue { name: "dzq_reduced", value: reduced.value, error: reduced.error },
            RouteValue {
                name: "dzq_angular",
                value: angular.value,
                error: angular.angular_error + angular.inner_error,
            },
        ];
        let fd_route =
            RouteValue { name: "dzq_angular_fd", value: fd.value, error: fd.angular_error + fd.inner_error };

        let mut pairs = Vec::new();
        let mut max_rel: f64 = 0.0;
        for (i, a) in exact.iter().enumerate() {
            for b in &exact[i + 1..] {
                let r = rel_diff(a.value, b.value);
                max_rel = max_rel.max(r);
                pairs.push(PairDiff { a: a.name, b: b.name, abs_diff: (a.value - b.value).abs(), rel_diff: r });
            }
        }
        let mut max_fd: f64 = 0.0;
        for a in &exact {
            let r = rel_diff(a.value, fd_route.value);
            max_fd = max_fd.max(r);
            pairs.push(PairDiff {
                a: a.name,
                b: fd_route.name,
                abs_diff: (a.value - fd_route.value).abs(),
                rel_diff: r,
            });
        }
        let pass = max_rel <= ROUTE_TOLERANCE && max_fd <= FD_ROUTE_TOLERANCE;
        Ok(ShiftReport {
            dz_classical_closed: closed.value,
            dz_classical_closed_error: closed.error,
            dz_classical_green: green.value,
            dz_classical_green_error: green.error,
            dz_oracle_linear_response: oracle_dz,
            dp_oracle_linear_response: oracle_dp,
            dzq_reduced: reduced.value,
            dzq_reduced_error: reduced.error,
            dzq_angular: angular.value,
            dzq_angular_error: exact[4].error,
            dzq_angular_fd: fd.value,
            dzq_angular_fd_error: fd_route.error,
            symplectic_drift: basis.symplectic_drift(),
            pairs,
            max_rel_diff: max_rel,
            max_rel_diff_fd: max_fd,
            tolerance: ROUTE_TOLERANCE,
            fd_tolerance: FD_ROUTE_TOLERANCE,
            pass,
        })
    }

    /// The shift values in a fixed order, for tabular output.
    pub fn values(&self) -> [(&'static str, f64); 6] {
        [
            ("dz_classical_closed", self.dz_classical_closed),
            ("dz_classical_green", self.dz_classical_green),
            ("dz_oracle_linear_response", self.dz_oracle_linear_response),
            ("dzq_reduced", self.dzq_reduced),
            ("dzq_angular", self.dzq_angular),
            ("dzq_angular_fd", self.dzq_angular_fd),
        ]
    }
}
