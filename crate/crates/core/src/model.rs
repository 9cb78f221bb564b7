//! Physical scenario: particle parameters, the static step potential V(z) and
//! the numerical settings shared by every computation.
//!
//! Units have c = 1. Energies, masses and momenta share one unit; lengths and
//! times share the inverse of it only through the profile geometry, so any
//! consistent choice works.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mass, coupling and final momentum of the charge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleParams {
    pub m: f64,
    pub alpha_c: f64,
    pub p: f64,
}

impl ParticleParams {
    pub fn new(m: f64, alpha_c: f64, p: f64) -> Result<Self> {
        let pp = ParticleParams { m, alpha_c, p };
        pp.validate()?;
        Ok(pp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::param("m", format!("must be finite and > 0, got {}", self.m)));
        }
        if !(self.alpha_c.is_finite() && self.alpha_c >= 0.0) {
            return Err(Error::param("alpha_c", format!("must be finite and >= 0, got {}", self.alpha_c)));
        }
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::param("p", format!("must be finite and > 0, got {}", self.p)));
        }
        Ok(())
    }

    /// Total energy E = sqrt(p^2 + m^2).
    pub fn energy(&self) -> f64 {
        self.p.hypot(self.m)
    }

    /// Final velocity p / E.
    pub fn final_velocity(&self) -> f64 {
        self.p / self.energy()
    }

    /// Charge e = sqrt(4 pi alpha_c) in Heaviside-Lorentz units.
    pub fn charge(&self) -> f64 {
        (4.0 * std::f64::consts::PI * self.alpha_c).sqrt()
    }

    pub fn with_p(&self, p: f64) -> Self {
        ParticleParams { p, ..*self }
    }

    pub fn with_alpha(&self, alpha_c: f64) -> Self {
        ParticleParams { alpha_c, ..*self }
    }
}

/// V, V' and V'' at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialValue {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
}

/// Interpolation used between the two flat regions.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// V0 (1 - s(u)) with s(u) = 6u^5 - 15u^4 + 10u^3, u = (z + Z1)/(Z1 - Z2).
    QuinticSmoothstep,
    /// V0 (1 - tanh((z - z_c)/w))/2 with tails cut where they fall below
    /// 1e-15 |V0|.
    Tanh { width: f64, cut: f64 },
    /// Clamped cubic spline through (z, V) nodes.
    Tabulated(Spline),
}

/// Tail level at which the tanh profile is replaced by its asymptote.
pub const TANH_TAIL: f64 = 1e-15;

/// Number of tanh widths from the center at which the tail drops to
/// [`TANH_TAIL`] times |V0|.
pub fn tanh_cut_widths() -> f64 {
    (1.0 - 2.0 * TANH_TAIL).atanh()
}

/// Static potential with compactly supported derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    pub v0: f64,
    pub z1: f64,
    pub z2: f64,
    pub shape: Shape,
    pub eps_profile: f64,
}

impl PotentialProfile {
    pub fn quintic(v0: f64, z1: f64, z2: f64) -> Result<Self> {
        let p = PotentialProfile { v0, z1, z2, shape: Shape::QuinticSmoothstep, eps_profile: 1e-12 };
        p.validate()?;
        Ok(p)
    }

    /// Tanh step centered in the acceleration interval. Without an explicit
    /// width, the width is chosen so the cut points land exactly on -Z1, -Z2.
    pub fn tanh(v0: f64, z1: f64, z2: f64, width: Option<f64>) -> Result<Self> {
        check_geometry(z1, z2)?;
        let cut_w = tanh_cut_widths();
        let half = 0.5 * (z1 - z2);
        let width = width.unwrap_or(half / cut_w);
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("tanh_width", "must be finite and > 0"));
        }
        let cut = cut_w * width;
        if cut > half * (1.0 + 1e-12) {
            return Err(Error::ProfileInvariant(format!(
                "tanh width {width} too large: tails exceed {TANH_TAIL:e}|V0| outside [-Z1, -Z2]; max width {}",
                half / cut_w
            )));
        }
        let p = PotentialProfile { v0, z1, z2, shape: Shape::Tanh { width, cut: cut.min(half) }, eps_profile: 1e-12 };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(v0: f64, z1: f64, z2: f64, table: &[(f64, f64)]) -> Result<Self> {
        check_geometry(z1, z2)?;
        let spline = Spline::clamped(table)?;
        let p = PotentialProfile { v0, z1, z2, shape: Shape::Tabulated(spline), eps_profile: 1e-9 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps_profile = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn shape_name(&self) -> &'static str {
        match self.shape {
            Shape::QuinticSmoothstep => "quintic",
            Shape::Tanh { .. } => "tanh",
            Shape::Tabulated(_) => "tabulated",
        }
    }

    /// Checks geometry and asymptotic flatness.
    pub fn validate(&self) -> Result<()> {
        check_geometry(self.z1, self.z2)?;
        if !self.v0.is_finite() {
            return Err(Error::param("V0", "must be finite"));
        }
        if !(self.eps_profile.is_finite() && self.eps_profile > 0.0) {
            return Err(Error::param("eps_profile", "must be finite and > 0"));
        }
        if let Shape::Tabulated(s) = &self.shape {
            if s.z_min() > -self.z1 || s.z_max() < -self.z2 {
                return Err(Error::ProfileInvariant(format!(
                    "table range [{}, {}] must cover [-Z1, -Z2] = [{}, {}]",
                    s.z_min(),
                    s.z_max(),
                    -self.z1,
                    -self.z2
                )));
            }
        }
        // Flatness outside the acceleration interval, on the closed-form shape.
        let scan = |a: f64, b: f64, target: f64| -> Result<()> {
            let n = 400;
            for i in 0..=n {
                let z = a + (b - a) * i as f64 / n as f64;
                let v = self.local(z).v;
                if (v - target).abs() > self.eps_profile {
                    return Err(Error::ProfileInvariant(format!(
                        "|V({z}) - {target}| = {:e} exceeds eps_profile {:e}",
                        (v - target).abs(),
                        self.eps_profile
                    )));
                }
            }
            Ok(())
        };
        let lo = match &self.shape {
            Shape::Tabulated(s) => s.z_min().min(-self.z1),
            _ => -self.z1 - (self.z1 - self.z2),
        };
        let hi = match &self.shape {
            Shape::Tabulated(s) => s.z_max().max(-self.z2),
            _ => -self.z2 + (self.z1 - self.z2),
        };
        scan(lo, -self.z1, self.v0)?;
        scan(-self.z2, hi, 0.0)?;
        Ok(())
    }

    /// V, V', V'' at z. Fails only for a tabulated profile queried outside
    /// its table.
    pub fn eval(&self, z: f64) -> Result<PotentialValue> {
        if let Shape::Tabulated(s) = &self.shape {
            if z < s.z_min() || z > s.z_max() {
                return Err(Error::OutOfTableRange { z, lo: s.z_min(), hi: s.z_max() });
            }
        }
        Ok(self.local(z))
    }

    /// Infallible evaluation: inside the acceleration interval the shape is
    /// used, outside it the exact asymptotes V0 and 0.
    pub fn local(&self, z: f64) -> PotentialValue {
        const FLAT_ZERO: PotentialValue = PotentialValue { v: 0.0, dv: 0.0, d2v: 0.0 };
        if z >= -self.z2 {
            return match &self.shape {
                Shape::Tabulated(s) if z <= s.z_max() => s.eval(z),
                _ => FLAT_ZERO,
            };
        }
        if z <= -self.z1 {
            return match &self.shape {
                Shape::Tabulated(s) if z >= s.z_min() => s.eval(z),
                _ => PotentialValue { v: self.v0, dv: 0.0, d2v: 0.0 },
            };
        }
        match &self.shape {
            Shape::QuinticSmoothstep => {
                let len = self.z1 - self.z2;
                let u = (z + self.z1) / len;
                let s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
                let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
                let d2s = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
                PotentialValue { v: self.v0 * (1.0 - s), dv: -self.v0 * ds / len, d2v: -self.v0 * d2s / (len * len) }
            }
            Shape::Tanh { width, cut } => {
                let zc = -0.5 * (self.z1 + self.z2);
                let x = (z - zc) / width;
                if x >= cut / width {
                    FLAT_ZERO
                } else if x <= -cut / width {
                    PotentialValue { v: self.v0, dv: 0.0, d2v: 0.0 }
                } else {
                    let t = x.tanh();
                    let sech2 = 1.0 / x.cosh().powi(2);
                    // (1 - tanh)/2 written as e^{-x}/(2 cosh x) avoids cancellation for large x.
                    let one_minus_t_half = 0.5 * (-x).exp() / x.cosh();
                    PotentialValue {
                        v: self.v0 * one_minus_t_half,
                        dv: -self.v0 * sech2 / (2.0 * width),
                        d2v: self.v0 * t * sech2 / (width * width),
                    }
                }
            }
            Shape::Tabulated(s) => s.eval(z),
        }
    }

    /// Points where V'' may lose smoothness; useful as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![-self.z1, -self.z2];
        match &self.shape {
            Shape::Tanh { cut, .. } => {
                let zc = -0.5 * (self.z1 + self.z2);
                b.push(zc - cut);
                b.push(zc);
                b.push(zc + cut);
            }
            Shape::Tabulated(s) => b.extend(s.knots().iter().copied()),
            Shape::QuinticSmoothstep => {}
        }
        b.retain(|&z| z >= -self.z1 && z <= -self.z2);
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * (1.0 + b.abs()));
        b
    }

    /// Smallest length over which V'' changes appreciably.
    pub fn feature_width(&self) -> f64 {
        match &self.shape {
            Shape::QuinticSmoothstep => self.z1 - self.z2,
            Shape::Tanh { width, .. } => *width,
            Shape::Tabulated(s) => s.min_spacing(),
        }
    }
}

fn check_geometry(z1: f64, z2: f64) -> Result<()> {
    if !(z1.is_finite() && z2.is_finite() && z1 > z2 && z2 > 0.0) {
        return Err(Error::ProfileInvariant(format!("need Z1 > Z2 > 0, got Z1 = {z1}, Z2 = {z2}")));
    }
    Ok(())
}

/// Clamped (zero end slope) cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    z: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    pub fn clamped(table: &[(f64, f64)]) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::param("table", "needs at least two points"));
        }
        let z: Vec<f64> = table.iter().map(|t| t.0).collect();
        let v: Vec<f64> = table.iter().map(|t| t.1).collect();
        if z.windows(2).any(|w| !(w[1] > w[0])) || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("table", "z must be strictly increasing and values finite"));
        }
        let n = z.len();
        let h: Vec<f64> = z.windows(2).map(|w| w[1] - w[0]).collect();
        // Second-derivative system with clamped ends (V' = 0).
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut r = vec![0.0; n];
        b[0] = 2.0 * h[0];
        c[0] = h[0];
        r[0] = 6.0 * ((v[1] - v[0]) / h[0]);
        for i in 1..n - 1 {
            a[i] = h[i - 1];
            b[i] = 2.0 * (h[i - 1] + h[i]);
            c[i] = h[i];
            r[i] = 6.0 * ((v[i + 1] - v[i]) / h[i] - (v[i] - v[i - 1]) / h[i - 1]);
        }
        a[n - 1] = h[n - 2];
        b[n - 1] = 2.0 * h[n - 2];
        r[n - 1] = -6.0 * ((v[n - 1] - v[n - 2]) / h[n - 2]);
        // Thomas algorithm.
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            r[i] -= w * r[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = r[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (r[i] - c[i] * m[i + 1]) / b[i];
        }
        Ok(Spline { z, v, m })
    }

    pub fn z_min(&self) -> f64 {
        self.z[0]
    }

    pub fn z_max(&self) -> f64 {
        self.z[self.z.len() - 1]
    }

    pub fn knots(&self) -> &[f64] {
        &self.z
    }

    fn min_spacing(&self) -> f64 {
        self.z.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, x: f64) -> PotentialValue {
        let i = self.z.partition_point(|&zi| zi <= x).clamp(1, self.z.len() - 1) - 1;
        let h = self.z[i + 1] - self.z[i];
        let a = (self.z[i + 1] - x) / h;
        let b = (x - self.z[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.v[i] + b * self.v[i + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (self.v[i + 1] - self.v[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2v = a * m0 + b * m1;
        PotentialValue { v, dv, d2v }
    }
}

/// Numerical settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub ode_rel_tol: f64,
    pub ode_abs_tol: f64,
    pub quad_order_angle: usize,
    pub quad_rel_tol: f64,
    pub fd_step_rel: f64,
    pub fd_richardson: bool,
    pub t_margin: f64,
    /// Half-width of the window plateau; `None` covers the acceleration
    /// image plus `window_rolloff / 4` on each side.
    pub window_plateau_half_width: Option<f64>,
    pub window_rolloff: f64,
    /// Roll-off used for the spectral energy integral.
    pub spectral_rolloff: f64,
    pub spectral_rel_tol: f64,
    pub delta_min: f64,
    pub min_samples: usize,
    pub max_panels: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            ode_rel_tol: 1e-12,
            ode_abs_tol: 1e-14,
            quad_order_angle: 64,
            quad_rel_tol: 1e-11,
            fd_step_rel: 1e-4,
            fd_richardson: false,
            t_margin: 1.0,
            window_plateau_half_width: None,
            window_rolloff: 2.0,
            spectral_rolloff: 1e5,
            spectral_rel_tol: 1e-4,
            delta_min: 1e-6,
            min_samples: 200,
            max_panels: 200_000,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ode_rel_tol", self.ode_rel_tol),
            ("ode_abs_tol", self.ode_abs_tol),
            ("quad_rel_tol", self.quad_rel_tol),
            ("fd_step_rel", self.fd_step_rel),
            ("t_margin", self.t_margin),
            ("window_rolloff", self.window_rolloff),
            ("spectral_rolloff", self.spectral_rolloff),
            ("spectral_rel_tol", self.spectral_rel_tol),
            ("delta_min", self.delta_min),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if let Some(h) = self.window_plateau_half_width {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::param("window_plateau_half_width", "must be finite and > 0"));
            }
        }
        if self.quad_order_angle < 2 {
            return Err(Error::param("quad_order_angle", "must be >= 2"));
        }
        if self.min_samples < 2 || self.max_panels < 1 {
            return Err(Error::param("min_samples", "min_samples >= 2 and max_panels >= 1 required"));
        }
        Ok(())
    }
}

/// Outcome of [`validate_scenario`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub energy: f64,
    pub v_max: f64,
    pub v_min: f64,
    /// min over the scan of (E - V)/m - 1.
    pub min_margin: f64,
    pub z_at_min_margin: f64,
}

/// Checks that the particle passes the step without a turning point:
/// E - V(z) >= m (1 + delta_min) on a dense scan.
pub fn validate_scenario(
    profile: &PotentialProfile,
    particle: &ParticleParams,
    delta_min: f64,
) -> Result<ValidationReport> {
    particle.validate()?;
    profile.validate()?;
    let e = particle.energy();
    let n = 20_000;
    let (a, b) = (-profile.z1, -profile.z2);
    let mut v_max = f64::NEG_INFINITY;
    let mut v_min = f64::INFINITY;
    let mut worst = (f64::INFINITY, a);
    let mut probe = |z: f64| {
        let v = profile.local(z).v;
        v_max = v_max.max(v);
        v_min = v_min.min(v);
        let margin = (e - v) / particle.m - 1.0;
        if margin < worst.0 {
            worst = (margin, z);
        }
    };
    for i in 0..=n {
        probe(a + (b - a) * i as f64 / n as f64);
    }
    probe(a - 1.0);
    probe(0.0);
    if worst.0 < delta_min {
        let v = profile.local(worst.1).v;
        return Err(Error::TurningPoint { z: worst.1, kinetic: e - v, threshold: particle.m * (1.0 + delta_min) });
    }
    Ok(ValidationReport { energy: e, v_max, v_min, min_margin: worst.0, z_at_min_margin: worst.1 })
}
