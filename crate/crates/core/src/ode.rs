//! Embedded Dormand-Prince 5(4) integrator for small fixed-size systems,
//! with optional storage of accepted steps for cubic Hermite dense output.

use crate::error::{Error, Result};

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct OdeOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed |h|; `f64::INFINITY` for no cap.
    pub max_step: f64,
    pub max_steps: usize,
}

impl OdeOpts {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        OdeOpts { rel_tol, abs_tol, max_step: f64::INFINITY, max_steps: 200_000 }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

/// Accepted step record.
#[derive(Debug, Clone, Copy)]
pub struct Node<const N: usize> {
    pub x: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

/// Output of [`integrate`]: the end state plus, if requested, every accepted
/// node (ordered along the direction of integration).
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub y_end: [f64; N],
    pub nodes: Vec<Node<N>>,
    pub steps: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrate dy/dx = f(x, y) from x0 to x1 (either direction).
pub fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    opts: OdeOpts,
    keep_nodes: bool,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut nodes = Vec::new();
    let mut k1 = f(x0, &y0);
    if keep_nodes {
        nodes.push(Node { x: x0, y: y0, dy: k1 });
    }
    if x1 == x0 {
        return Ok(Solution { y_end: y0, nodes, steps: 0, rejected: 0 });
    }
    let dir = (x1 - x0).signum();
    let span = (x1 - x0).abs();
    let mut h = initial_step(&y0, &k1, span, opts).min(opts.max_step);
    let mut x = x0;
    let mut y = y0;
    let mut steps = 0;
    let mut rejected = 0;
    let mut err_prev: f64 = 1e-4;

    while (x1 - x) * dir > 0.0 {
        if steps + rejected >= opts.max_steps {
            return Err(Error::Ode { x, reason: format!("step budget {} exhausted", opts.max_steps) });
        }
        let remaining = (x1 - x).abs();
        let last = h >= remaining;
        let hh = if last { remaining } else { h };
        let hs = dir * hh;

        let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(
            x + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let x_new = if last { x1 } else { x + hs };
        let k7 = f(x_new, &y_new);

        let mut err2 = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err2 += (e / sc).powi(2);
        }
        let err = (err2 / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Ode { x, reason: "non-finite state".into() });
        }

        if err <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            steps += 1;
            if keep_nodes {
                nodes.push(Node { x, y, dy: k1 });
            }
            // PI controller.
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0)
            };
            err_prev = err.max(1e-4);
            h = (hh * fac).min(opts.max_step);
        } else {
            rejected += 1;
            h = hh * (0.9 * err.powf(-0.2)).max(0.1);
        }
        if h < 1e-14 * span.max(x.abs()) {
            return Err(Error::Ode { x, reason: format!("step size underflow (h = {h:.3e})") });
        }
    }
    Ok(Solution { y_end: y, nodes, steps, rejected })
}

fn initial_step<const N: usize>(y: &[f64; N], dy: &[f64; N], span: f64, opts: OdeOpts) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs();
        d0 = d0.max((y[i] / sc).abs());
        d1 = d1.max((dy[i] / sc).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}

impl<const N: usize> Solution<N> {
    /// Cubic Hermite interpolation between stored nodes.
    pub fn eval(&self, x: f64) -> [f64; N] {
        hermite_eval(&self.nodes, x)
    }
}

/// Piecewise cubic Hermite evaluation over nodes sorted in either direction.
/// Queries outside the node range are extrapolated from the end cell.
pub fn hermite_eval<const N: usize>(nodes: &[Node<N>], x: f64) -> [f64; N] {
    assert!(!nodes.is_empty());
    if nodes.len() == 1 {
        return nodes[0].y;
    }
    let ascending = nodes[nodes.len() - 1].x > nodes[0].x;
    let key = |n: &Node<N>| if ascending { n.x } else { -n.x };
    let xk = if ascending { x } else { -x };
    let idx = nodes.partition_point(|n| key(n) <= xk);
    let i = idx.clamp(1, nodes.len() - 1) - 1;
    let (a, b) = (&nodes[i], &nodes[i + 1]);
    let h = b.x - a.x;
    let s = (x - a.x) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for j in 0..N {
        out[j] = h00 * a.y[j] + h * h10 * a.dy[j] + h01 * b.y[j] + h * h11 * b.dy[j];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate_both_directions() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let opts = OdeOpts::new(1e-12, 1e-14);
        let fwd = integrate(f, 0.0, [0.0, 1.0], 10.0, opts, false).unwrap();
        assert!((fwd.y_end[0] - 10f64.sin()).abs() < 1e-10);
        assert!((fwd.y_end[1] - 10f64.cos()).abs() < 1e-10);
        let back = integrate(f, 10.0, fwd.y_end, 0.0, opts, false).unwrap();
        assert!(back.y_end[0].abs() < 1e-10 && (back.y_end[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_for_linear_growth() {
        let sol = integrate(|_x, _y: &[f64; 1]| [2.0], 1.0, [0.0], -3.0, OdeOpts::new(1e-10, 1e-12), false)
            .unwrap();
        assert!((sol.y_end[0] + 8.0).abs() < 1e-13);
    }

    #[test]
    fn dense_output_interpolates() {
        let f = |x: f64, _y: &[f64; 1]| [x.cos()];
        let sol = integrate(f, 0.0, [0.0], 3.0, OdeOpts::new(1e-12, 1e-14).with_max_step(0.01), true).unwrap();
        for i in 0..=30 {
            let x = 0.1 * i as f64;
            assert!((sol.eval(x)[0] - x.sin()).abs() < 1e-10, "x={x}");
        }
        let back = integrate(f, 3.0, [3f64.sin()], 0.0, OdeOpts::new(1e-12, 1e-14).with_max_step(0.01), true)
            .unwrap();
        assert!((back.eval(1.234)[0] - 1.234f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn step_budget_is_enforced() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut opts = OdeOpts::new(1e-12, 1e-14);
        opts.max_steps = 5;
        assert!(matches!(integrate(f, 0.0, [0.0, 1.0], 100.0, opts, false), Err(Error::Ode { .. })));
    }
}
