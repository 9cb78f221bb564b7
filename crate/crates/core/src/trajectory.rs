//! The unperturbed (e = 0) worldline through z(0) = 0 with final momentum p.
//!
//! Because the velocity is a closed-form function of position through energy
//! conservation, the worldline is built as t(z) = -∫_z^0 dζ / ż(ζ) by
//! piecewise Gauss-Legendre quadrature on a fixed knot grid, and z(t) is
//! recovered by safeguarded Newton iteration. Every kinematic quantity is
//! evaluated from closed forms in z; nothing is differentiated numerically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_scenario, ParticleParams, PotentialProfile, SimulationConfig};
use crate::quad::gl20;

/// Kinematic state at a position, without a time label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kinematics {
    pub z: f64,
    pub zdot: f64,
    pub zddot: f64,
    pub zdddot: f64,
    pub gamma: f64,
}

/// A sample of the worldline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub z: f64,
    pub zdot: f64,
    pub zddot: f64,
    pub zdddot: f64,
    pub gamma: f64,
}

impl TrajectoryPoint {
    fn new(t: f64, k: Kinematics) -> Self {
        TrajectoryPoint { t, z: k.z, zdot: k.zdot, zddot: k.zddot, zdddot: k.zdddot, gamma: k.gamma }
    }
}

/// ż = sqrt(1 - m^2 / (E - V)^2).
pub fn velocity_from_energy(e: f64, v: f64, m: f64) -> Result<f64> {
    let k = e - v;
    if !(k > m) {
        return Err(Error::TurningPoint { z: f64::NAN, kinetic: k, threshold: m });
    }
    Ok(((k - m) * (k + m)).sqrt() / k)
}

/// Closed-form kinematics at position z.
pub fn kinematics_at(profile: &PotentialProfile, particle: &ParticleParams, z: f64) -> Result<Kinematics> {
    let pv = profile.local(z);
    let e = particle.energy();
    let m = particle.m;
    let zdot = velocity_from_energy(e, pv.v, m).map_err(|err| match err {
        Error::TurningPoint { kinetic, threshold, .. } => Error::TurningPoint { z, kinetic, threshold },
        other => other,
    })?;
    let gamma = (e - pv.v) / m;
    let g3 = gamma * gamma * gamma;
    let zddot = -pv.dv / (m * g3);
    let zdddot = -pv.d2v * zdot / (m * g3) + 3.0 * pv.dv * zdot * zddot / (m * gamma);
    Ok(Kinematics { z, zdot, zddot, zdddot, gamma })
}

/// WKB local momentum κ_p(z) = sqrt((p0 - V)^2 - m^2 - |p_perp|^2).
pub fn kappa(profile: &PotentialProfile, m: f64, p0: f64, p_perp: [f64; 2], z: f64) -> Result<f64> {
    let v = profile.local(z).v;
    let arg = (p0 - v).powi(2) - m * m - p_perp[0] * p_perp[0] - p_perp[1] * p_perp[1];
    if arg < 0.0 {
        return Err(Error::Forbidden(arg));
    }
    Ok(arg.sqrt())
}

/// Unperturbed worldline with cumulative tables for t(z) and
/// J(z) = ∫_0^z dζ / (γ^3 ż^3).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub particle: ParticleParams,
    pub profile: PotentialProfile,
    pub energy: f64,
    /// Final (outgoing) velocity ż|₀.
    pub v_out: f64,
    /// Incoming velocity in the z <= -Z1 region.
    pub v_in: f64,
    pub gamma_out: f64,
    pub gamma_in: f64,
    pub t_entry: f64,
    pub t_exit: f64,
    pub t_min: f64,
    pub z_min: f64,
    knots: Vec<f64>,
    cum_t: Vec<f64>,
    cum_j: Vec<f64>,
    samples: Vec<TrajectoryPoint>,
}

impl Trajectory {
    /// Builds the worldline on [t_min, 0]. `t_min` is moved earlier if it does
    /// not leave `config.t_margin` before the entry time.
    pub fn build(
        profile: &PotentialProfile,
        particle: &ParticleParams,
        t_min: Option<f64>,
        config: &SimulationConfig,
    ) -> Result<Self> {
        config.validate()?;
        validate_scenario(profile, particle, config.delta_min)?;
        let e = particle.energy();
        let m = particle.m;
        let v_out = particle.final_velocity();
        let gamma_out = e / m;
        let v_in = velocity_from_energy(e, profile.v0, m)?;
        let gamma_in = (e - profile.v0) / m;

        // Knot grid over the acceleration interval.
        let (a, b) = (-profile.z1, -profile.z2);
        let h_max = ((b - a) / 64.0).min(profile.feature_width() / 8.0);
        let breaks = profile.breakpoints();
        let mut knots = vec![breaks[0]];
        for w in breaks.windows(2) {
            let n = ((w[1] - w[0]) / h_max).ceil().max(1.0) as usize;
            for i in 1..=n {
                knots.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
            }
        }

        let inv_v = |z: f64| -> Result<f64> { Ok(1.0 / kinematics_at(profile, particle, z)?.zdot) };
        let jac = |z: f64| -> Result<f64> {
            let k = kinematics_at(profile, particle, z)?;
            Ok(1.0 / (k.gamma.powi(3) * k.zdot.powi(3)))
        };
        let n = knots.len();
        let mut cum_t = vec![0.0; n];
        let mut cum_j = vec![0.0; n];
        cum_t[n - 1] = b / v_out;
        cum_j[n - 1] = b / (gamma_out.powi(3) * v_out.powi(3));
        for i in (0..n - 1).rev() {
            cum_t[i] = cum_t[i + 1] - gl_checked(knots[i], knots[i + 1], inv_v)?;
            cum_j[i] = cum_j[i + 1] - gl_checked(knots[i], knots[i + 1], jac)?;
        }
        let t_entry = cum_t[0];
        let t_exit = cum_t[n - 1];
        let t_min = t_min.unwrap_or(f64::INFINITY).min(t_entry - config.t_margin);
        let z_min = a + v_in * (t_min - t_entry);

        let mut traj = Trajectory {
            particle: *particle,
            profile: profile.clone(),
            energy: e,
            v_out,
            v_in,
            gamma_out,
            gamma_in,
            t_entry,
            t_exit,
            t_min,
            z_min,
            knots,
            cum_t,
            cum_j,
            samples: Vec::new(),
        };
        traj.samples = traj.dense_samples(config)?;
        if traj.samples.windows(2).any(|w| !(w[1].z > w[0].z && w[1].t > w[0].t)) {
            return Err(Error::Consistency("trajectory samples are not strictly monotone".into()));
        }
        Ok(traj)
    }

    fn dense_samples(&self, config: &SimulationConfig) -> Result<Vec<TrajectoryPoint>> {
        let mut ts: Vec<f64> = (0..config.min_samples)
            .map(|i| self.t_min + (0.0 - self.t_min) * i as f64 / (config.min_samples - 1) as f64)
            .collect();
        ts.extend(self.cum_t.iter().copied());
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
        let mut pts: Vec<TrajectoryPoint> = ts.iter().map(|&t| self.point_at(t)).collect::<Result<_>>()?;
        // Refine until the cubic Hermite interpolant of z and ż meets the tolerance at midpoints.
        let scale_z = self.profile.z2;
        for _round in 0..30 {
            let mut out = Vec::with_capacity(pts.len() * 2);
            let mut refined = false;
            for w in pts.windows(2) {
                out.push(w[0]);
                let tm = 0.5 * (w[0].t + w[1].t);
                let exact = self.point_at(tm)?;
                let (zi, vi) = hermite_pair(&w[0], &w[1], tm);
                let ez = (zi - exact.z).abs() / exact.z.abs().max(scale_z);
                let ev = (vi - exact.zdot).abs() / exact.zdot;
                if ez > config.ode_rel_tol || ev > config.ode_rel_tol {
                    out.push(exact);
                    refined = true;
                }
            }
            out.push(*pts.last().expect("non-empty"));
            pts = out;
            if !refined {
                break;
            }
        }
        Ok(pts)
    }

    pub fn samples(&self) -> &[TrajectoryPoint] {
        &self.samples
    }

    /// Knots of the cumulative tables inside [-Z1, -Z2].
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn kinematics(&self, z: f64) -> Kinematics {
        kinematics_at(&self.profile, &self.particle, z).expect("validated scenario has no turning point")
    }

    fn panel(&self, z: f64) -> usize {
        self.knots.partition_point(|&k| k <= z).clamp(1, self.knots.len() - 1) - 1
    }

    /// t(z), exact up to quadrature round-off, for any real z.
    pub fn t_of_z(&self, z: f64) -> f64 {
        let (a, b) = (-self.profile.z1, -self.profile.z2);
        if z >= b {
            z / self.v_out
        } else if z <= a {
            self.t_entry + (z - a) / self.v_in
        } else {
            let i = self.panel(z);
            self.cum_t[i] + gl20().integrate(self.knots[i], z, |x| 1.0 / self.kinematics(x).zdot)
        }
    }

    /// J(z) = ∫_0^z dζ / (γ^3 ż^3) = ∫_0^t dt' / (γ^3 ż^2).
    pub fn j_of_z(&self, z: f64) -> f64 {
        let (a, b) = (-self.profile.z1, -self.profile.z2);
        if z >= b {
            z / (self.gamma_out.powi(3) * self.v_out.powi(3))
        } else if z <= a {
            self.cum_j[0] + (z - a) / (self.gamma_in.powi(3) * self.v_in.powi(3))
        } else {
            let i = self.panel(z);
            self.cum_j[i]
                + gl20().integrate(self.knots[i], z, |x| {
                    let k = self.kinematics(x);
                    1.0 / (k.gamma.powi(3) * k.zdot.powi(3))
                })
        }
    }

    /// z(t) by safeguarded Newton on t(z); valid for any real t.
    pub fn z_of_t(&self, t: f64) -> f64 {
        if t >= self.t_exit {
            return self.v_out * t;
        }
        if t <= self.t_entry {
            return -self.profile.z1 + self.v_in * (t - self.t_entry);
        }
        let i = self.cum_t.partition_point(|&c| c <= t).clamp(1, self.cum_t.len() - 1) - 1;
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        let (tl, th) = (self.cum_t[i], self.cum_t[i + 1]);
        let mut z = lo + (hi - lo) * (t - tl) / (th - tl);
        for _ in 0..60 {
            let k = self.kinematics(z);
            let f = self.t_of_z(z) - t;
            if f > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let mut zn = z - f * k.zdot;
            if !(zn > lo && zn < hi) {
                zn = 0.5 * (lo + hi);
            }
            let done = (zn - z).abs() <= 4.0 * f64::EPSILON * (1.0 + z.abs());
            z = zn;
            if done {
                break;
            }
        }
        z
    }

    pub fn point_at(&self, t: f64) -> Result<TrajectoryPoint> {
        let z = self.z_of_t(t);
        Ok(TrajectoryPoint::new(t, kinematics_at(&self.profile, &self.particle, z)?))
    }

    pub fn point_at_z(&self, z: f64) -> TrajectoryPoint {
        TrajectoryPoint::new(self.t_of_z(z), self.kinematics(z))
    }

    /// Cubic Hermite interpolant over the dense samples: (z, ż).
    pub fn interpolate(&self, t: f64) -> (f64, f64) {
        let s = &self.samples;
        let i = s.partition_point(|p| p.t <= t).clamp(1, s.len() - 1) - 1;
        hermite_pair(&s[i], &s[i + 1], t)
    }

    pub fn check_span(&self, t: f64) -> Result<()> {
        if !(t >= self.t_min - 1e-12 && t <= 1e-12) {
            return Err(Error::OutOfSpan { t, lo: self.t_min, hi: 0.0 });
        }
        Ok(())
    }

    /// (∂z/∂p) at fixed t, evaluated at position z(t).
    pub fn dzdp_at_z(&self, z: f64) -> f64 {
        let k = self.kinematics(z);
        k.zdot * self.v_out / self.particle.m * self.j_of_z(z)
    }

    /// d/dt of (∂z/∂p)_t at position z.
    pub fn dzdp_rate_at_z(&self, z: f64) -> f64 {
        let k = self.kinematics(z);
        self.v_out / self.particle.m * (k.zddot * self.j_of_z(z) + 1.0 / (k.gamma.powi(3) * k.zdot))
    }

    /// (∂z/∂p)_t = ż(t) (ż|₀/m) ∫_0^t dt' / (γ^3 ż^2).
    pub fn dzdp_fixed_t(&self, t: f64) -> Result<f64> {
        self.check_span(t)?;
        Ok(self.dzdp_at_z(self.z_of_t(t)))
    }

    /// Largest value of A(t) = 1/(m γ^3) over the span.
    pub fn a_max(&self) -> f64 {
        let g_min = self.samples.iter().map(|p| p.gamma).fold(f64::INFINITY, f64::min);
        1.0 / (self.particle.m * g_min.powi(3))
    }

    pub fn xi_frame(&self, cos_theta: f64) -> XiFrame<'_> {
        XiFrame { traj: self, c: cos_theta.clamp(-1.0, 1.0) }
    }
}

fn gl_checked<F: Fn(f64) -> Result<f64>>(a: f64, b: f64, f: F) -> Result<f64> {
    let mut err = None;
    let v = gl20().integrate(a, b, |x| match f(x) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn hermite_pair(a: &TrajectoryPoint, b: &TrajectoryPoint, t: f64) -> (f64, f64) {
    let h = b.t - a.t;
    let s = (t - a.t) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (
        h00 * a.z + h * h10 * a.zdot + h01 * b.z + h * h11 * b.zdot,
        h00 * a.zdot + h * h10 * a.zddot + h01 * b.zdot + h * h11 * b.zddot,
    )
}

/// Quantities in the retarded coordinate ξ = t - z cosθ at one point of the worldline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiPoint {
    pub t: f64,
    pub z: f64,
    pub xi: f64,
    /// 1 - ż cosθ = dξ/dt.
    pub dxi_dt: f64,
    pub dt_dxi: f64,
    pub dz_dxi: f64,
    pub d2t_dxi2: f64,
    pub d2z_dxi2: f64,
    /// (∂z/∂p) at fixed ξ.
    pub dzdp_xi: f64,
    /// (∂t/∂p) at fixed ξ.
    pub dtdp_xi: f64,
    /// ∂/∂p of dt/dξ at fixed ξ.
    pub dp_dt_dxi: f64,
    /// ∂/∂p of dz/dξ at fixed ξ.
    pub dp_dz_dxi: f64,
}

/// Reparameterization of a trajectory by ξ for one emission direction.
#[derive(Debug, Clone, Copy)]
pub struct XiFrame<'a> {
    pub traj: &'a Trajectory,
    pub c: f64,
}

impl XiFrame<'_> {
    pub fn xi_of_z(&self, z: f64) -> f64 {
        self.traj.t_of_z(z) - z * self.c
    }

    pub fn at_t(&self, t: f64) -> XiPoint {
        let z = self.traj.z_of_t(t);
        self.at_z_with_t(z, t)
    }

    pub fn at_z(&self, z: f64) -> XiPoint {
        self.at_z_with_t(z, self.traj.t_of_z(z))
    }

    fn at_z_with_t(&self, z: f64, t: f64) -> XiPoint {
        let c = self.c;
        let k = self.traj.kinematics(z);
        let q = 1.0 - k.zdot * c;
        let d2z = k.zddot / (q * q * q);
        let dzdp_t = self.traj.dzdp_at_z(z);
        let dzdp_xi = dzdp_t / q;
        // d/dt of (∂z/∂p)_ξ.
        let rate = self.traj.dzdp_rate_at_z(z) / q + dzdp_t * c * k.zddot / (q * q);
        let dt_dxi = 1.0 / q;
        XiPoint {
            t,
            z,
            xi: t - z * c,
            dxi_dt: q,
            dt_dxi,
            dz_dxi: k.zdot / q,
            d2t_dxi2: c * d2z,
            d2z_dxi2: d2z,
            dzdp_xi,
            dtdp_xi: c * dzdp_xi,
            dp_dt_dxi: dt_dxi * c * rate,
            dp_dz_dxi: dt_dxi * rate,
        }
    }

    /// z with ξ(z) = xi, for any real xi.
    pub fn z_of_xi(&self, xi: f64) -> f64 {
        let traj = self.traj;
        // ξ is affine in z outside the acceleration interval.
        let (a, b) = (-traj.profile.z1, -traj.profile.z2);
        let (xa, xb) = (self.xi_of_z(a), self.xi_of_z(b));
        if xi >= xb {
            return b + (xi - xb) / (1.0 / traj.v_out - self.c);
        }
        if xi <= xa {
            return a + (xi - xa) / (1.0 / traj.v_in - self.c);
        }
        let (mut lo, mut hi) = (a, b);
        let mut z = a + (b - a) * (xi - xa) / (xb - xa);
        for _ in 0..80 {
            let f = self.xi_of_z(z) - xi;
            if f > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let k = traj.kinematics(z);
            let slope = 1.0 / k.zdot - self.c;
            let mut zn = z - f / slope;
            if !(zn > lo && zn < hi) {
                zn = 0.5 * (lo + hi);
            }
            let done = (zn - z).abs() <= 4.0 * f64::EPSILON * (1.0 + z.abs());
            z = zn;
            if done {
                break;
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> Trajectory {
        let profile = PotentialProfile::quintic(0.2, 2.0, 1.0).unwrap();
        let particle = ParticleParams::new(1.0, 0.01, 1.0).unwrap();
        Trajectory::build(&profile, &particle, None, &SimulationConfig::default()).unwrap()
    }

    #[test]
    fn velocity_examples() {
        assert!((velocity_from_energy(5.0, 0.0, 4.0).unwrap() - 0.6).abs() < 1e-16);
        assert!((velocity_from_energy(2.0, 0.0, 1.0).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-16);
        assert!(velocity_from_energy(1.0, 0.0, 1.0).is_err());
        let mut prev = 0.0;
        for i in 1..50 {
            let v = velocity_from_energy(1.0 + 1e-6 * i as f64, 0.0, 1.0).unwrap();
            assert!(v > prev && v > 0.0);
            prev = v;
        }
        assert!(velocity_from_energy(1.0 + 1e-12, 0.0, 1.0).unwrap() < 2e-6);
    }

    #[test]
    fn flat_region_kinematics() {
        let profile = PotentialProfile::quintic(0.2, 2.0, 1.0).unwrap();
        let particle = ParticleParams::new(1.0, 0.01, 1.0).unwrap();
        for z in [-5.0, -2.0, -1.0, 0.0] {
            let k = kinematics_at(&profile, &particle, z).unwrap();
            assert_eq!(k.zddot, 0.0);
            assert_eq!(k.zdddot, 0.0);
        }
    }

    #[test]
    fn kappa_examples() {
        let profile = PotentialProfile::quintic(0.2, 2.0, 1.0).unwrap();
        let particle = ParticleParams::new(1.0, 0.01, 1.0).unwrap();
        let e = particle.energy();
        assert!((kappa(&profile, 1.0, e, [0.0, 0.0], -0.5).unwrap() - 1.0).abs() < 1e-15);
        let k = kinematics_at(&profile, &particle, -1.4).unwrap();
        let kap = kappa(&profile, 1.0, e, [0.0, 0.0], -1.4).unwrap();
        assert!((kap - k.gamma * k.zdot).abs() / kap < 1e-12);
        let kp = kappa(&profile, 1.0, e, [0.1, 0.0], 0.0).unwrap();
        assert!((kp - (e * e - 1.0 - 0.01f64).sqrt()).abs() < 1e-15);
        assert!(matches!(kappa(&profile, 1.0, 0.5, [0.0, 0.0], 0.0), Err(Error::Forbidden(_))));
    }

    #[test]
    fn boundary_and_free_particle() {
        let traj = canonical();
        assert_eq!(traj.z_of_t(0.0), 0.0);
        assert_eq!(traj.t_of_z(0.0), 0.0);
        let profile = PotentialProfile::quintic(0.0, 2.0, 1.0).unwrap();
        let particle = ParticleParams::new(1.0, 0.01, 1.0).unwrap();
        let free = Trajectory::build(&profile, &particle, None, &SimulationConfig::default()).unwrap();
        let e = particle.energy();
        assert!((free.t_entry + 2.0 * e).abs() < 1e-13);
        for t in [-3.0, -1.7, -0.2] {
            assert!((free.z_of_t(t) - t / e).abs() < 1e-14);
        }
    }

    #[test]
    fn incoming_velocity_and_samples() {
        let traj = canonical();
        let v_in = (1.0 - 1.0 / (2f64.sqrt() - 0.2).powi(2)).sqrt();
        assert!((traj.point_at(traj.t_min).unwrap().zdot - v_in).abs() < 1e-15);
        assert!(traj.samples().len() >= 200);
        for p in traj.samples() {
            let g = 1.0 / (1.0 - p.zdot * p.zdot).sqrt();
            assert!((g - p.gamma).abs() / p.gamma < 1e-12);
            let pv = traj.profile.local(p.z);
            assert!((traj.particle.m * p.gamma + pv.v - traj.energy).abs() / traj.energy < 1e-10);
            assert!((p.gamma.powi(3) * p.zddot + pv.dv).abs() <= 1e-10 * pv.dv.abs().max(1e-300));
        }
    }

    #[test]
    fn interpolant_reproduces_velocity() {
        let traj = canonical();
        for i in 0..97 {
            let t = traj.t_min + (0.0 - traj.t_min) * (i as f64 + 0.37) / 97.0;
            let (z, v) = traj.interpolate(t);
            let exact = traj.point_at(t).unwrap();
            assert!((v - exact.zdot).abs() / exact.zdot < 1e-11);
            assert!((z - exact.z).abs() < 1e-11);
        }
    }

    #[test]
    fn xi_frame_identities() {
        let traj = canonical();
        let f0 = traj.xi_frame(0.0);
        for p in traj.samples().iter().step_by(7) {
            let x = f0.at_t(p.t);
            assert!((x.xi - p.t).abs() < 1e-15);
            assert!((x.d2z_dxi2 - p.zddot).abs() <= 1e-15 * p.zddot.abs());
            assert!((x.dzdp_xi - traj.dzdp_at_z(p.z)).abs() <= 1e-15 * x.dzdp_xi.abs());
        }
        for c in [-0.9, -0.3, 0.4, 0.99] {
            let f = traj.xi_frame(c);
            for p in traj.samples().iter().step_by(5) {
                let x = f.at_z(p.z);
                assert_eq!(x.d2t_dxi2 - c * x.d2z_dxi2, 0.0);
                assert!((x.dtdp_xi - c * x.dzdp_xi).abs() <= 1e-14 * x.dtdp_xi.abs());
                assert!(x.dxi_dt > 0.0);
                assert!((f.z_of_xi(x.xi) - p.z).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dzdp_vanishes_at_origin_and_is_checked() {
        let traj = canonical();
        assert_eq!(traj.dzdp_fixed_t(0.0).unwrap(), 0.0);
        assert!(traj.dzdp_fixed_t(1.0).is_err());
    }
}
