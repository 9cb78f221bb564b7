//! Lorentz-Dirac radiation-reaction force for motion along z.

use serde::Serialize;

use crate::trajectory::TrajectoryPoint;

/// The reduced force F_LD at one worldline sample, evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LdForceSample {
    pub t: f64,
    pub f_ld: f64,
    /// (2α/3) γ d/dt(γ^3 z̈), with d/dt(γ^3 z̈) taken from the equation of
    /// motion γ^3 z̈ = -V'/m, i.e. -V'' ż / m.
    pub form_a: f64,
    /// (2α/3)(γ^4 z⃛ + 3 γ^6 ż z̈^2) from the closed-form jerk.
    pub form_b: f64,
}

/// Evaluates F_LD at `point`. `d2v` is V''(z) at the point's position and
/// `m` the rest mass; they feed the equation-of-motion form.
pub fn f_ld_at(point: &TrajectoryPoint, alpha_c: f64, m: f64, d2v: f64) -> LdForceSample {
    let k = 2.0 * alpha_c / 3.0;
    let g = point.gamma;
    let g2 = g * g;
    let g4 = g2 * g2;
    let form_b = k * (g4 * point.zdddot + 3.0 * g4 * g2 * point.zdot * point.zddot * point.zddot);
    let form_a = k * g * (-d2v * point.zdot / m);
    LdForceSample { t: point.t, f_ld: form_b, form_a, form_b }
}

/// F_LD from the trajectory alone, for callers that only need the value.
pub fn f_ld_value(point: &TrajectoryPoint, alpha_c: f64) -> f64 {
    let g = point.gamma;
    let g2 = g * g;
    (2.0 * alpha_c / 3.0) * g2 * g2 * (point.zdddot + 3.0 * g2 * point.zdot * point.zddot * point.zddot)
}

/// (F^t, F^z) = (F_LD γ ż, F_LD γ); the transverse components vanish.
pub fn four_force(point: &TrajectoryPoint, f_ld: f64) -> (f64, f64) {
    (f_ld * point.gamma * point.zdot, f_ld * point.gamma)
}

/// Relativistic Larmor power for linear motion, (2α/3) γ^6 z̈^2.
pub fn larmor_power(point: &TrajectoryPoint, alpha_c: f64) -> f64 {
    (2.0 * alpha_c / 3.0) * point.gamma.powi(6) * point.zddot * point.zddot
}

/// Relative disagreement of the two forms, floored at α m.
pub fn form_mismatch(s: &LdForceSample, alpha_c: f64, m: f64) -> f64 {
    (s.form_a - s.form_b).abs() / s.form_a.abs().max(s.form_b.abs()).max(alpha_c * m).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(zdot: f64, zddot: f64, zdddot: f64) -> TrajectoryPoint {
        let gamma = 1.0 / (1.0 - zdot * zdot).sqrt();
        TrajectoryPoint { t: 0.0, z: 0.0, zdot, zddot, zdddot, gamma }
    }

    #[test]
    fn force_free_point() {
        let s = f_ld_at(&pt(0.5, 0.0, 0.0), 0.01, 1.0, 0.0);
        assert_eq!(s.f_ld, 0.0);
        assert_eq!(s.form_a, 0.0);
        assert_eq!(four_force(&pt(0.5, 0.0, 0.0), 0.0), (0.0, 0.0));
    }

    #[test]
    fn nonrelativistic_limit() {
        let p = pt(1e-7, 0.3, 2.0);
        let f = f_ld_value(&p, 0.01);
        assert!((f - 2.0 * 0.01 / 3.0 * 2.0).abs() < 1e-9);
        let (ft, fz) = four_force(&p, f);
        assert!(ft.abs() < 1e-8 && (fz - f).abs() < 1e-12);
    }

    #[test]
    fn four_force_is_orthogonal_to_velocity() {
        let p = pt(0.6, 0.1, -0.3);
        let f = f_ld_value(&p, 0.02);
        let (ft, fz) = four_force(&p, f);
        // u = γ(1, ż); u·F with metric (+,-) vanishes.
        let dot = ft * p.gamma - fz * p.gamma * p.zdot;
        assert!(dot.abs() < 1e-16);
    }
}
