//! QED-side quantities: the photon-emission amplitude of the classical
//! current, its window regularization, the position shift from the
//! solid-angle integral and from the reduced one-dimensional integral, and the
//! radiated energy by time-domain and spectral routes.
//!
//! The raw photon-momentum integral of the shift is never evaluated
//! numerically; its k-integration collapses analytically, and the shift is
//! computed from the resulting forms. Amplitudes are used for spectra and
//! identities only.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::{f_ld_at_z, quad_opts};
use crate::ldforce::larmor_power;
use crate::model::SimulationConfig;
use crate::quad::{adaptive, gl16, gl20, pairwise_sum, AdaptiveOpts, GaussLegendre, QuadResult};
use crate::trajectory::Trajectory;

/// Smoothstep s(u) = 6u^5 - 15u^4 + 10u^3 and its first derivative.
fn smoothstep(u: f64) -> (f64, f64) {
    let u = u.clamp(0.0, 1.0);
    (u * u * u * (10.0 + u * (-15.0 + 6.0 * u)), 30.0 * u * u * (1.0 - u) * (1.0 - u))
}

/// C² window χ(ξ): one on [plateau_lo, plateau_hi], quintic roll-off of
/// width `rolloff` on both sides, zero beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub rolloff: f64,
}

impl Window {
    /// Window for emission direction `cos_theta`. The plateau is centered on
    /// the ξ-image of the acceleration interval.
    pub fn for_direction(traj: &Trajectory, cos_theta: f64, half_width: Option<f64>, rolloff: f64) -> Result<Self> {
        let (lo, hi) = accel_image(traj, cos_theta);
        let half_image = 0.5 * (hi - lo);
        let half = half_width.unwrap_or(half_image + 0.25 * rolloff);
        if half < half_image {
            return Err(Error::param(
                "window_plateau_half_width",
                format!("{half} does not cover the acceleration image (half-width {half_image})"),
            ));
        }
        let mid = 0.5 * (lo + hi);
        Ok(Window { plateau_lo: mid - half, plateau_hi: mid + half, rolloff })
    }

    pub fn from_config(traj: &Trajectory, cos_theta: f64, config: &SimulationConfig) -> Result<Self> {
        Window::for_direction(traj, cos_theta, config.window_plateau_half_width, config.window_rolloff)
    }

    pub fn widened(&self, factor: f64) -> Self {
        let mid = 0.5 * (self.plateau_lo + self.plateau_hi);
        let half = 0.5 * (self.plateau_hi - self.plateau_lo) * factor;
        Window { plateau_lo: mid - half, plateau_hi: mid + half, rolloff: self.rolloff * factor }
    }

    pub fn value(&self, xi: f64) -> f64 {
        if xi >= self.plateau_lo && xi <= self.plateau_hi {
            1.0
        } else if xi < self.plateau_lo {
            smoothstep((xi - (self.plateau_lo - self.rolloff)) / self.rolloff).0
        } else {
            smoothstep((self.plateau_hi + self.rolloff - xi) / self.rolloff).0
        }
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        if xi >= self.plateau_lo && xi <= self.plateau_hi {
            0.0
        } else if xi < self.plateau_lo {
            smoothstep((xi - (self.plateau_lo - self.rolloff)) / self.rolloff).1 / self.rolloff
        } else {
            -smoothstep((self.plateau_hi + self.rolloff - xi) / self.rolloff).1 / self.rolloff
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.plateau_lo - self.rolloff, self.plateau_hi + self.rolloff)
    }

    /// ∫ χ'(ξ) e^{ikξ} dξ over the (left, right) roll-offs, in closed form.
    pub fn rolloff_transforms(&self, k: f64) -> (Complex64, Complex64) {
        let a = k * self.rolloff;
        let left_start = self.plateau_lo - self.rolloff;
        let right_end = self.plateau_hi + self.rolloff;
        let left = Complex64::from_polar(1.0, k * left_start) * smoothstep_slope_transform(a);
        let right = -Complex64::from_polar(1.0, k * right_end) * smoothstep_slope_transform(-a);
        (left, right)
    }
}

/// ∫_0^1 s'(u) e^{iau} du with s'(u) = 30u^2(1-u)^2.
fn smoothstep_slope_transform(a: f64) -> Complex64 {
    if a.abs() <= 20.0 {
        let rule = gl20();
        let mut acc = Complex64::new(0.0, 0.0);
        for (u, w) in rule.mapped(0.0, 1.0) {
            acc += w * smoothstep(u).1 * Complex64::from_polar(1.0, a * u);
        }
        return acc;
    }
    // Repeated integration by parts; q(0) = q(1) = q'(0) = q'(1) = 0.
    let ia = Complex64::new(0.0, a);
    let e = Complex64::from_polar(1.0, a);
    (60.0 * e - 60.0) / ia.powi(3) - (360.0 * e + 360.0) / ia.powi(4) + (720.0 * e - 720.0) / ia.powi(5)
}

/// ξ-image of the acceleration interval, [ξ(-Z1), ξ(-Z2)].
pub fn accel_image(traj: &Trajectory, cos_theta: f64) -> (f64, f64) {
    let f = traj.xi_frame(cos_theta);
    (f.xi_of_z(-traj.profile.z1), f.xi_of_z(-traj.profile.z2))
}

/// dX^μ/dξ = (1, ż)/(1 - ż cosθ) for a constant velocity.
fn four_velocity_xi(v: f64, c: f64) -> [f64; 2] {
    let q = 1.0 - v * c;
    [1.0 / q, v / q]
}

/// Emission amplitude (A^t, A^z) at wave number k and direction cosθ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmissionAmplitude {
    pub k: f64,
    pub cos_theta: f64,
    #[serde(serialize_with = "ser_complex")]
    pub a_t: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub a_z: Complex64,
    pub window: Window,
}

fn ser_complex<S: serde::Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&c.re)?;
    t.serialize_element(&c.im)?;
    t.end()
}

impl EmissionAmplitude {
    /// -A^μ* A_μ with metric (+, -): |A^z|^2 - |A^t|^2.
    pub fn minus_square(&self) -> f64 {
        self.a_z.norm_sqr() - self.a_t.norm_sqr()
    }

    /// max-norm distance to another amplitude relative to the larger norm.
    pub fn rel_diff(&self, other: &EmissionAmplitude) -> f64 {
        let d = (self.a_t - other.a_t).norm().max((self.a_z - other.a_z).norm());
        let n = self.a_t.norm().max(self.a_z.norm()).max(other.a_t.norm()).max(other.a_z.norm());
        if n == 0.0 {
            0.0
        } else {
            d / n
        }
    }
}

/// Precomputed quadrature nodes over the acceleration interval for one
/// direction, cached per panel subdivision level.
pub struct AmplitudeKernel<'a> {
    traj: &'a Trajectory,
    c: f64,
    slope_max: f64,
    cache: RefCell<HashMap<usize, std::rc::Rc<Vec<KernelNode>>>>,
}

#[derive(Debug, Clone, Copy)]
struct KernelNode {
    xi: f64,
    /// weight × (1/ż, 1): direct-form integrand over dz.
    direct: [f64; 2],
    /// weight × (cosθ, 1) z̈ / ((1 - ż cosθ)^2 ż): d²X/dξ² dξ over dz.
    ibp: [f64; 2],
}

impl<'a> AmplitudeKernel<'a> {
    pub fn new(traj: &'a Trajectory, cos_theta: f64) -> Self {
        let v_min = traj.samples().iter().map(|p| p.zdot).fold(f64::INFINITY, f64::min);
        AmplitudeKernel {
            traj,
            c: cos_theta,
            slope_max: 1.0 / v_min + 1.0,
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn subdivisions(&self, k: f64) -> usize {
        let knots = self.traj.knots();
        let h = knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        // Each GL16 panel spans at most an eighth of a period in ξ.
        ((k * self.slope_max * h) / (2.0 * PI / 8.0)).ceil().max(1.0) as usize
    }

    fn panels(&self, k: f64) -> usize {
        self.subdivisions(k) * (self.traj.knots().len() - 1)
    }

    fn nodes(&self, sub: usize) -> std::rc::Rc<Vec<KernelNode>> {
        if let Some(n) = self.cache.borrow().get(&sub) {
            return n.clone();
        }
        let frame = self.traj.xi_frame(self.c);
        let rule = gl16();
        let mut out = Vec::new();
        for w in self.traj.knots().windows(2) {
            for j in 0..sub {
                let a = w[0] + (w[1] - w[0]) * j as f64 / sub as f64;
                let b = if j + 1 == sub { w[1] } else { w[0] + (w[1] - w[0]) * (j + 1) as f64 / sub as f64 };
                for (z, wt) in rule.mapped(a, b) {
                    let kin = self.traj.kinematics(z);
                    let q = 1.0 - kin.zdot * self.c;
                    let acc = kin.zddot / (q * q * kin.zdot);
                    out.push(KernelNode {
                        xi: frame.xi_of_z(z),
                        direct: [wt / kin.zdot, wt],
                        ibp: [wt * self.c * acc, wt * acc],
                    });
                }
            }
        }
        let rc = std::rc::Rc::new(out);
        self.cache.borrow_mut().insert(sub, rc.clone());
        rc
    }

    fn accel_sums(&self, k: f64, max_panels: usize, ibp: bool) -> Result<[Complex64; 2]> {
        let panels = self.panels(k);
        if panels > max_panels {
            return Err(resolution_error(k, panels, max_panels));
        }
        let nodes = self.nodes(self.subdivisions(k));
        let mut parts_t = Vec::with_capacity(nodes.len());
        let mut parts_z = Vec::with_capacity(nodes.len());
        let mut parts_ti = Vec::with_capacity(nodes.len());
        let mut parts_zi = Vec::with_capacity(nodes.len());
        for n in nodes.iter() {
            let ph = Complex64::from_polar(1.0, k * n.xi);
            let g = if ibp { n.ibp } else { n.direct };
            parts_t.push(g[0] * ph.re);
            parts_ti.push(g[0] * ph.im);
            parts_z.push(g[1] * ph.re);
            parts_zi.push(g[1] * ph.im);
        }
        Ok([
            Complex64::new(pairwise_sum(&parts_t), pairwise_sum(&parts_ti)),
            Complex64::new(pairwise_sum(&parts_z), pairwise_sum(&parts_zi)),
        ])
    }

    /// Direct form: -e ∫ dξ (dX^μ/dξ) χ(ξ) e^{ikξ}.
    pub fn direct(&self, k: f64, window: &Window, max_panels: usize) -> Result<EmissionAmplitude> {
        let traj = self.traj;
        let e = traj.particle.charge();
        let c = self.c;
        let (xa, xb) = accel_image(traj, c);
        if window.plateau_lo > xa || window.plateau_hi < xb {
            return Err(Error::param("window", "plateau does not cover the acceleration image"));
        }
        let accel = self.accel_sums(k, max_panels, false)?;
        let u_in = four_velocity_xi(traj.v_in, c);
        let u_out = four_velocity_xi(traj.v_out, c);
        // Constant-velocity stretches: plateau remainder plus the roll-off.
        let budget = max_panels.saturating_sub(self.panels(k));
        let (s_lo, s_hi) = window.support();
        // Split at the plateau edges, where χ is only C².
        let chi = |x: f64| window.value(x);
        let left = osc_integral(s_lo, window.plateau_lo, k, budget, chi)?
            + osc_integral(window.plateau_lo, xa, k, budget, chi)?;
        let right = osc_integral(xb, window.plateau_hi, k, budget, chi)?
            + osc_integral(window.plateau_hi, s_hi, k, budget, chi)?;
        let a_t = -e * (accel[0] + u_in[0] * left + u_out[0] * right);
        let a_z = -e * (accel[1] + u_in[1] * left + u_out[1] * right);
        Ok(EmissionAmplitude { k, cos_theta: c, a_t, a_z, window: *window })
    }

    /// Integrated-by-parts form: (e/ik) ∫ dξ d/dξ[(dX^μ/dξ) χ] e^{ikξ}.
    pub fn ibp(&self, k: f64, window: &Window, max_panels: usize) -> Result<EmissionAmplitude> {
        let traj = self.traj;
        let e = traj.particle.charge();
        let c = self.c;
        let (xa, xb) = accel_image(traj, c);
        if window.plateau_lo > xa || window.plateau_hi < xb {
            return Err(Error::param("window", "plateau does not cover the acceleration image"));
        }
        let accel = self.accel_sums(k, max_panels, true)?;
        let u_in = four_velocity_xi(traj.v_in, c);
        let u_out = four_velocity_xi(traj.v_out, c);
        let (wl, wr) = window.rolloff_transforms(k);
        let pre = Complex64::new(0.0, -e / k);
        let a_t = pre * (accel[0] + u_in[0] * wl + u_out[0] * wr);
        let a_z = pre * (accel[1] + u_in[1] * wl + u_out[1] * wr);
        Ok(EmissionAmplitude { k, cos_theta: c, a_t, a_z, window: *window })
    }
}

fn resolution_error(k: f64, panels: usize, budget: usize) -> Error {
    Error::Resolution { panels, budget, k_max: k * budget as f64 / panels as f64 }
}

/// ∫_a^b g(ξ) e^{ikξ} dξ for a smooth real g, by composite GL16 with panels
/// no longer than an eighth of a period.
fn osc_integral<G: Fn(f64) -> f64>(a: f64, b: f64, k: f64, budget: usize, g: G) -> Result<Complex64> {
    if b <= a {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let n = ((k * (b - a)) / (2.0 * PI / 8.0)).ceil().max(4.0) as usize;
    if n > budget {
        return Err(resolution_error(k, n, budget));
    }
    let rule = gl16();
    let mut re = Vec::with_capacity(n);
    let mut im = Vec::with_capacity(n);
    for j in 0..n {
        let x0 = a + (b - a) * j as f64 / n as f64;
        let x1 = if j + 1 == n { b } else { a + (b - a) * (j + 1) as f64 / n as f64 };
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in rule.mapped(x0, x1) {
            acc += w * g(x) * Complex64::from_polar(1.0, k * x);
        }
        re.push(acc.re);
        im.push(acc.im);
    }
    Ok(Complex64::new(pairwise_sum(&re), pairwise_sum(&im)))
}

pub fn amplitude_direct(
    traj: &Trajectory,
    k: f64,
    cos_theta: f64,
    window: &Window,
    config: &SimulationConfig,
) -> Result<EmissionAmplitude> {
    check_k(k)?;
    AmplitudeKernel::new(traj, cos_theta).direct(k, window, config.max_panels)
}

pub fn amplitude_ibp(
    traj: &Trajectory,
    k: f64,
    cos_theta: f64,
    window: &Window,
    config: &SimulationConfig,
) -> Result<EmissionAmplitude> {
    check_k(k)?;
    AmplitudeKernel::new(traj, cos_theta).ibp(k, window, config.max_panels)
}

fn check_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::param("k", format!("must be finite and > 0, got {k}")));
    }
    Ok(())
}

/// Soft factor e[(dX^μ/dξ)_out - (dX^μ/dξ)_in] from the asymptotic velocities.
/// For 1/rolloff << k << 1/ξ-scale, k A^μ(k) ≈ -i × this value.
pub fn soft_limit(traj: &Trajectory, cos_theta: f64) -> [Complex64; 2] {
    let e = traj.particle.charge();
    let u_in = four_velocity_xi(traj.v_in, cos_theta);
    let u_out = four_velocity_xi(traj.v_out, cos_theta);
    [
        Complex64::new(e * (u_out[0] - u_in[0]), 0.0),
        Complex64::new(e * (u_out[1] - u_in[1]), 0.0),
    ]
}

/// Quantum shift from the reduced form -∫ dt F_LD(t) (∂z/∂p)_t, integrated in t.
pub fn quantum_shift_reduced(traj: &Trajectory, config: &SimulationConfig) -> Result<QuadResult> {
    let breaks: Vec<f64> = traj.profile.breakpoints().iter().map(|&z| traj.t_of_z(z)).collect();
    let r = adaptive(
        |t| {
            let z = traj.z_of_t(t);
            f_ld_at_z(traj, z) * traj.dzdp_at_z(z)
        },
        traj.t_entry,
        traj.t_exit,
        &breaks,
        quad_opts(config),
    )?;
    Ok(QuadResult { value: -r.value, ..r })
}

/// How ∂/∂p at fixed ξ is realized in the solid-angle route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DpMode {
    /// Chain-rule partials from the single trajectory.
    AnalyticDp,
    /// Central differences over trajectories rebuilt at p ± h.
    FdDp,
}

/// Solid-angle result with its angular convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngularShift {
    pub value: f64,
    /// |Q(n) - Q(2n)| between angular orders n and 2n.
    pub angular_error: f64,
    /// Largest inner-quadrature error estimate, scaled to the shift.
    pub inner_error: f64,
    pub order: usize,
}

struct FdStencil {
    h: f64,
    plus: Trajectory,
    minus: Trajectory,
    half: Option<(Trajectory, Trajectory)>,
}

impl FdStencil {
    fn build(traj: &Trajectory, config: &SimulationConfig) -> Result<Self> {
        let h = config.fd_step_rel * traj.particle.p;
        let mk = |dp: f64| {
            Trajectory::build(&traj.profile, &traj.particle.with_p(traj.particle.p + dp), Some(traj.t_min), config)
        };
        let half = if config.fd_richardson { Some((mk(0.5 * h)?, mk(-0.5 * h)?)) } else { None };
        Ok(FdStencil { h, plus: mk(h)?, minus: mk(-h)?, half })
    }

    /// ∂/∂p of (dt/dξ, dz/dξ) at fixed ξ.
    fn derivative(&self, xi: f64, c: f64) -> [f64; 2] {
        let at = |tr: &Trajectory| {
            let f = tr.xi_frame(c);
            let z = f.z_of_xi(xi);
            four_velocity_xi(tr.kinematics(z).zdot, c)
        };
        let central = |p: &Trajectory, m: &Trajectory, h: f64| {
            let (a, b) = (at(p), at(m));
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        };
        let d = central(&self.plus, &self.minus, self.h);
        match &self.half {
            None => d,
            Some((p, m)) => {
                let d2 = central(p, m, 0.5 * self.h);
                [(4.0 * d2[0] - d[0]) / 3.0, (4.0 * d2[1] - d[1]) / 3.0]
            }
        }
    }
}

/// Quantum shift from the solid-angle form
/// -(α/4π) ∫dΩ ∫dξ (d²X^μ/dξ²) ∂_p(dX_μ/dξ), azimuth done analytically.
pub fn quantum_shift_angular(traj: &Trajectory, mode: DpMode, config: &SimulationConfig) -> Result<AngularShift> {
    let stencil = match mode {
        DpMode::AnalyticDp => None,
        DpMode::FdDp => Some(FdStencil::build(traj, config)?),
    };
    let opts = match mode {
        DpMode::AnalyticDp => quad_opts(config),
        // Difference quotients carry ~1e-9 relative noise from the ξ → z inversions.
        DpMode::FdDp => AdaptiveOpts { rel_tol: config.quad_rel_tol.max(1e-8), ..quad_opts(config) },
    };
    let n = config.quad_order_angle;
    let (q1, e1) = angular_sum(traj, stencil.as_ref(), n, opts)?;
    let (q2, e2) = angular_sum(traj, stencil.as_ref(), 2 * n, opts)?;
    Ok(AngularShift { value: q2, angular_error: (q1 - q2).abs(), inner_error: e1.max(e2), order: n })
}

fn angular_sum(traj: &Trajectory, stencil: Option<&FdStencil>, n: usize, opts: AdaptiveOpts) -> Result<(f64, f64)> {
    let rule = GaussLegendre::new(n);
    let breaks = traj.profile.breakpoints();
    let inner: Vec<Result<QuadResult>> = rule
        .nodes
        .par_iter()
        .map(|&c| {
            let frame = traj.xi_frame(c);
            let integrand = |z: f64, fd: bool| {
                let x = frame.at_z(z);
                let (dp_t, dp_z) = match stencil {
                    Some(s) if fd => {
                        let d = s.derivative(x.xi, c);
                        (d[0], d[1])
                    }
                    _ => (x.dp_dt_dxi, x.dp_dz_dxi),
                };
                // Metric (+,-): time product minus z product; dξ = (1 - ż c) dz / ż.
                let contraction = x.d2t_dxi2 * dp_t - x.d2z_dxi2 * dp_z;
                contraction * x.dxi_dt / traj.kinematics(z).zdot
            };
            let mut opts = opts;
            let fd = stencil.is_some();
            if fd {
                // Difference quotients are noisy and the integrand may nearly
                // cancel, so the target is relative to ∫|integrand|, sized
                // from the chain-rule integrand.
                let rule = gl20();
                let mut mag = 0.0;
                for w in traj.knots().windows(2) {
                    mag += rule.integrate(w[0], w[1], |z| integrand(z, false).abs());
                }
                opts.abs_tol = opts.rel_tol * mag;
            }
            adaptive(|z| integrand(z, fd), -traj.profile.z1, -traj.profile.z2, &breaks, opts)
        })
        .collect();
    let mut terms = Vec::with_capacity(n);
    let mut err = 0.0;
    for (r, w) in inner.into_iter().zip(&rule.weights) {
        let r = r?;
        terms.push(w * r.value);
        err += w * r.error;
    }
    // -(α/4π) × 2π from the azimuth.
    let pre = -traj.particle.alpha_c / 2.0;
    Ok((pre * pairwise_sum(&terms), pre.abs() * err))
}

/// Radiated energy by the two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiatedEnergy {
    pub time_domain: f64,
    pub time_domain_error: f64,
    pub spectral: f64,
    pub spectral_error: f64,
    pub k_max: f64,
    pub rel_diff: f64,
}

/// ∫ dt (2α/3) γ^6 z̈^2.
pub fn larmor_energy(traj: &Trajectory, config: &SimulationConfig) -> Result<QuadResult> {
    adaptive(
        |z| larmor_power(&traj.point_at_z(z), traj.particle.alpha_c) / traj.kinematics(z).zdot,
        -traj.profile.z1,
        -traj.profile.z2,
        &traj.profile.breakpoints(),
        quad_opts(config),
    )
}

/// Spectral energy density d²W/(dk dcosθ) = k^2 (-A^μ* A_μ) / (8π^2).
pub fn spectral_density(amp: &EmissionAmplitude) -> f64 {
    amp.k * amp.k * amp.minus_square() / (8.0 * PI * PI)
}

/// ∫_0^∞ dk d²W/(dk dcosθ) for one direction, with the tail cut where it
/// falls below `spectral_rel_tol` of the running total. `abs_floor` is an
/// absolute error target below which no refinement is attempted.
pub fn spectral_energy_direction(
    traj: &Trajectory,
    cos_theta: f64,
    abs_floor: f64,
    config: &SimulationConfig,
) -> Result<(f64, f64, f64)> {
    let window = Window::for_direction(traj, cos_theta, None, config.spectral_rolloff)?;
    let kernel = AmplitudeKernel::new(traj, cos_theta);
    let (xa, xb) = accel_image(traj, cos_theta);
    let scale = (xb - xa).max(1e-300);
    let tol = config.spectral_rel_tol;
    let opts = AdaptiveOpts { rel_tol: 0.1 * tol, abs_tol: abs_floor, max_intervals: 2000 };
    let failure = RefCell::new(None);
    let density = |k: f64| -> f64 {
        if k <= 0.0 {
            return 0.0;
        }
        match kernel.ibp(k, &window, config.max_panels) {
            Ok(a) => spectral_density(&a),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let k0 = 20.0 / scale;
    let mut breaks = Vec::new();
    let mut b = 1.0 / window.rolloff;
    while b < k0 {
        breaks.push(b);
        b *= 4.0;
    }
    let head = adaptive(&density, 0.0, k0, &breaks, opts)?;
    let mut total = head.value;
    let mut err = head.error;
    let mut k = k0;
    loop {
        let tail_opts = AdaptiveOpts { abs_tol: abs_floor.max(0.01 * tol * total.abs()), ..opts };
        let piece = adaptive(&density, k, 2.0 * k, &[], tail_opts)?;
        total += piece.value;
        err += piece.error;
        k *= 2.0;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(match e {
                Error::Resolution { .. } => Error::SpectralTail { tail_fraction: (piece.value / total).abs(), k },
                other => other,
            });
        }
        if piece.value.abs() <= (tol * total.abs()).max(abs_floor) {
            err += piece.value.abs();
            break;
        }
    }
    Ok((total, err, k))
}

/// Radiated energy: Larmor integral vs spectral integral of the amplitude.
pub fn radiated_energy(traj: &Trajectory, config: &SimulationConfig) -> Result<RadiatedEnergy> {
    let time = larmor_energy(traj, config)?;
    if traj.particle.alpha_c == 0.0 {
        return Ok(RadiatedEnergy {
            time_domain: 0.0,
            time_domain_error: 0.0,
            spectral: 0.0,
            spectral_error: 0.0,
            k_max: 0.0,
            rel_diff: 0.0,
        });
    }
    let p = &traj.particle;
    let abs_floor = 0.1 * config.spectral_rel_tol * time.value.max(1e-12 * p.charge().powi(2) * p.m);
    let rule = GaussLegendre::new(config.quad_order_angle);
    let per_dir: Vec<Result<(f64, f64, f64)>> =
        rule.nodes.par_iter().map(|&c| spectral_energy_direction(traj, c, abs_floor, config)).collect();
    let mut terms = Vec::with_capacity(rule.order());
    let mut err = 0.0;
    let mut k_max: f64 = 0.0;
    for (r, w) in per_dir.into_iter().zip(&rule.weights) {
        let (v, e, k) = r?;
        terms.push(w * v);
        err += w * e;
        k_max = k_max.max(k);
    }
    let spectral = pairwise_sum(&terms);
    let rel_diff = if time.value == 0.0 { spectral.abs() } else { (spectral - time.value).abs() / time.value.abs() };
    Ok(RadiatedEnergy {
        time_domain: time.value,
        time_domain_error: time.error,
        spectral,
        spectral_error: err,
        k_max,
        rel_diff,
    })
}

/// Soft-limit probe: k A^μ at k = 1e-3 / ξ-scale, where ξ-scale is the
/// largest |ξ| on the acceleration image, against -i × the soft factor. The
/// roll-off is stretched so that the window's own transform is negligible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoftLimitCheck {
    pub cos_theta: f64,
    pub k: f64,
    pub rel_error: f64,
}

pub fn soft_limit_check(traj: &Trajectory, cos_theta: f64, config: &SimulationConfig) -> Result<SoftLimitCheck> {
    let (xa, xb) = accel_image(traj, cos_theta);
    let xi_scale = xa.abs().max(xb.abs()).max(xb - xa);
    let k = 1e-3 / xi_scale;
    let window = Window::for_direction(traj, cos_theta, None, 2000.0 / k)?;
    let amp = amplitude_ibp(traj, k, cos_theta, &window, config)?;
    let soft = soft_limit(traj, cos_theta);
    let target = [Complex64::new(0.0, -1.0) * soft[0], Complex64::new(0.0, -1.0) * soft[1]];
    let got = [k * amp.a_t, k * amp.a_z];
    let num = (got[0] - target[0]).norm().max((got[1] - target[1]).norm());
    let den = target[0].norm().max(target[1].norm());
    let rel_error = if den == 0.0 { num } else { num / den };
    Ok(SoftLimitCheck { cos_theta, k, rel_error })
}
