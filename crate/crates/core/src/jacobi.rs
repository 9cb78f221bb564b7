//! Linearized flow about the unperturbed worldline and the classical
//! position shift it produces.
//!
//! A Jacobi pair (Δz, ΔP) solves
//!
//! ```text
//! dΔz/dt = A(t) ΔP,   A = 1/(m γ^3)
//! dΔP/dt = B(t) Δz,   B = -V''(z(t))
//! ```
//!
//! Since z(t) is monotone, the system is integrated in z (d/dz = ż^{-1} d/dt),
//! where every coefficient is closed-form. The symplectic product
//! Δz¹ΔP² - ΔP¹Δz² is conserved, which gives Δz_s(t) = -Δz_t(s) and lets the
//! Green's function be assembled from two basis solutions.

use serde::Serialize;

use crate::error::Result;
use crate::ldforce::f_ld_value;
use crate::model::SimulationConfig;
use crate::ode::{integrate, OdeOpts, Solution};
use crate::quad::{adaptive, AdaptiveOpts, QuadResult};
use crate::trajectory::Trajectory;

/// (A, B) at time t.
pub fn coeffs(traj: &Trajectory, t: f64) -> Result<(f64, f64)> {
    traj.check_span(t)?;
    Ok(coeffs_at_z(traj, traj.z_of_t(t)))
}

pub fn coeffs_at_z(traj: &Trajectory, z: f64) -> (f64, f64) {
    let k = traj.kinematics(z);
    (1.0 / (traj.particle.m * k.gamma.powi(3)), -traj.profile.local(z).d2v)
}

/// F_LD at position z on the unperturbed worldline.
pub fn f_ld_at_z(traj: &Trajectory, z: f64) -> f64 {
    f_ld_value(&traj.point_at_z(z), traj.particle.alpha_c)
}

pub(crate) fn ode_opts(traj: &Trajectory, config: &SimulationConfig) -> OdeOpts {
    let len = traj.profile.z1 - traj.profile.z2;
    OdeOpts::new(config.ode_rel_tol, config.ode_abs_tol).with_max_step((len / 4.0).min(traj.profile.feature_width() / 4.0))
}

pub(crate) fn quad_opts(config: &SimulationConfig) -> AdaptiveOpts {
    AdaptiveOpts { rel_tol: config.quad_rel_tol, abs_tol: 1e-300, max_intervals: 20_000 }
}

fn rhs_in_z(traj: &Trajectory, z: f64, y: &[f64; 2]) -> [f64; 2] {
    let k = traj.kinematics(z);
    let a = 1.0 / (traj.particle.m * k.gamma.powi(3));
    let b = -traj.profile.local(z).d2v;
    [a * y[1] / k.zdot, b * y[0] / k.zdot]
}

/// Δz_s(t), ΔP_s(t) for the pair seeded with (0, 1) at time s.
pub fn propagate(traj: &Trajectory, s: f64, t: f64, config: &SimulationConfig) -> Result<(f64, f64)> {
    traj.check_span(s)?;
    traj.check_span(t)?;
    let (zs, zt) = (traj.z_of_t(s), traj.z_of_t(t));
    let sol = integrate(|z, y: &[f64; 2]| rhs_in_z(traj, z, y), zs, [0.0, 1.0], zt, ode_opts(traj, config), false)?;
    Ok((sol.y_end[0], sol.y_end[1]))
}

/// Symplectic product Δz¹ ΔP² - ΔP¹ Δz².
pub fn symplectic(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// One Jacobi pair tabulated over the whole span.
#[derive(Debug, Clone, Serialize)]
pub struct JacobiPair {
    pub s: f64,
    /// (t, Δz, ΔP), ascending in t.
    pub samples: Vec<(f64, f64, f64)>,
}

impl JacobiPair {
    pub fn solve(traj: &Trajectory, s: f64, config: &SimulationConfig) -> Result<Self> {
        traj.check_span(s)?;
        let zs = traj.z_of_t(s);
        let opts = ode_opts(traj, config);
        let f = |z: f64, y: &[f64; 2]| rhs_in_z(traj, z, y);
        let back = integrate(f, zs, [0.0, 1.0], traj.z_min, opts, true)?;
        let fwd = integrate(f, zs, [0.0, 1.0], 0.0, opts, true)?;
        let mut samples: Vec<(f64, f64, f64)> =
            back.nodes.iter().rev().map(|n| (traj.t_of_z(n.x), n.y[0], n.y[1])).collect();
        samples.extend(fwd.nodes.iter().skip(1).map(|n| (traj.t_of_z(n.x), n.y[0], n.y[1])));
        Ok(JacobiPair { s, samples })
    }
}

/// Two basis solutions seeded at the exit point z = -Z2:
/// Y1 = (1, 0), Y2 = (0, 1), with dense output over the full span.
#[derive(Debug, Clone)]
pub struct JacobiBasis {
    forward: Solution<4>,
    backward: Solution<4>,
    z_seed: f64,
}

impl JacobiBasis {
    pub fn new(traj: &Trajectory, config: &SimulationConfig) -> Result<Self> {
        let z_seed = -traj.profile.z2;
        let opts = ode_opts(traj, config);
        let f = |z: f64, y: &[f64; 4]| {
            let a = rhs_in_z(traj, z, &[y[0], y[1]]);
            let b = rhs_in_z(traj, z, &[y[2], y[3]]);
            [a[0], a[1], b[0], b[1]]
        };
        let y0 = [1.0, 0.0, 0.0, 1.0];
        let forward = integrate(f, z_seed, y0, 0.0, opts, true)?;
        let backward = integrate(f, z_seed, y0, traj.z_min, opts, true)?;
        Ok(JacobiBasis { forward, backward, z_seed })
    }

    /// [u1, w1, u2, w2] at position z.
    pub fn at_z(&self, z: f64) -> [f64; 4] {
        if z >= self.z_seed {
            self.forward.eval(z)
        } else {
            self.backward.eval(z)
        }
    }

    /// Largest |ω(Y1, Y2) - 1| over every accepted step, where ω(Y1, Y2) = 1
    /// at the seed.
    pub fn symplectic_drift(&self) -> f64 {
        self.forward
            .nodes
            .iter()
            .chain(self.backward.nodes.iter())
            .map(|n| (symplectic((n.y[0], n.y[1]), (n.y[2], n.y[3])) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Δz_s(t) from the basis, with s and t given as positions.
    pub fn delta_z(&self, zs: f64, zt: f64) -> f64 {
        let s = self.at_z(zs);
        let t = self.at_z(zt);
        s[0] * t[2] - s[2] * t[0]
    }

    /// ΔP_s(t) from the basis, with s and t given as positions.
    pub fn delta_p(&self, zs: f64, zt: f64) -> f64 {
        let s = self.at_z(zs);
        let t = self.at_z(zt);
        s[0] * t[3] - s[2] * t[1]
    }
}

/// δz = ∫ dt F_LD(t) Δz_t(0), with Δz_t(0) from the basis solutions.
pub fn classical_shift_green(traj: &Trajectory, basis: &JacobiBasis, config: &SimulationConfig) -> Result<QuadResult> {
    let end = basis.at_z(0.0);
    let (a, b) = (-traj.profile.z1, -traj.profile.z2);
    adaptive(
        |z| {
            let y = basis.at_z(z);
            let kernel = y[0] * end[2] - y[2] * end[0];
            f_ld_at_z(traj, z) * kernel / traj.kinematics(z).zdot
        },
        a,
        b,
        &traj.profile.breakpoints(),
        quad_opts(config),
    )
}

/// δP(t) = ∫_{-∞}^t ds F_LD(s) ΔP_s(t).
pub fn momentum_shift(traj: &Trajectory, basis: &JacobiBasis, t: f64, config: &SimulationConfig) -> Result<QuadResult> {
    traj.check_span(t)?;
    let zt = traj.z_of_t(t);
    let a = -traj.profile.z1;
    let b = zt.min(-traj.profile.z2);
    if b <= a {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let at_t = basis.at_z(zt);
    adaptive(
        |z| {
            let y = basis.at_z(z);
            let kernel = y[0] * at_t[3] - y[2] * at_t[1];
            f_ld_at_z(traj, z) * kernel / traj.kinematics(z).zdot
        },
        a,
        b,
        &traj.profile.breakpoints(),
        quad_opts(config),
    )
}

/// δz = -(ż|₀/m) ∫ (∫_0^t dt'/(γ^3 ż^2)) F_LD ż dt, written in z as
/// -(ż|₀/m) ∫ J(z) F_LD(z) dz over the acceleration interval.
pub fn classical_shift_closed(traj: &Trajectory, config: &SimulationConfig) -> Result<QuadResult> {
    let scale = -traj.v_out / traj.particle.m;
    let r = adaptive(
        |z| traj.j_of_z(z) * f_ld_at_z(traj, z),
        -traj.profile.z1,
        -traj.profile.z2,
        &traj.profile.breakpoints(),
        quad_opts(config),
    )?;
    Ok(QuadResult { value: scale * r.value, error: scale.abs() * r.error, intervals: r.intervals })
}

/// Direct time integration of the forced linear system
/// dδz/dt = A δP, dδP/dt = B δz + F_LD, from rest at `t_start` to t = 0,
/// carrying z(t) along via dz/dt = ż(z). Returns (δz(0), δP(0)).
pub fn linear_response_with<F>(traj: &Trajectory, t_start: f64, forcing: F, config: &SimulationConfig) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    let z_start = traj.z_of_t(t_start);
    let opts = ode_opts(traj, config);
    let sol = integrate(
        |t, y: &[f64; 3]| {
            let z = y[0];
            let k = traj.kinematics(z);
            let a = 1.0 / (traj.particle.m * k.gamma.powi(3));
            let b = -traj.profile.local(z).d2v;
            [k.zdot, a * y[2], b * y[1] + forcing(t, z)]
        },
        t_start,
        [z_start, 0.0, 0.0],
        0.0,
        opts,
        false,
    )?;
    Ok((sol.y_end[1], sol.y_end[2]))
}

/// Brute-force oracle for the classical shift: the forced linear system
/// started at rest at t_entry, where F_LD first becomes nonzero. Solved at
/// unit coupling and rescaled, so the result is exactly linear in α.
pub fn oracle_linear_response(traj: &Trajectory, config: &SimulationConfig) -> Result<(f64, f64)> {
    let alpha = traj.particle.alpha_c;
    if alpha == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (dz, dp) =
        linear_response_with(traj, traj.t_entry, |_t, z| f_ld_value(&traj.point_at_z(z), 1.0), config)?;
    Ok((alpha * dz, alpha * dp))
}
