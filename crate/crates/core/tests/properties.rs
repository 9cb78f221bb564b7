use std::sync::OnceLock;

use proptest::prelude::*;
use radshift::jacobi::{classical_shift_closed, propagate, symplectic};
use radshift::qshift::{quantum_shift_reduced, Window};
use radshift::trajectory::kappa;
use radshift::verify::energy_conservation;
use radshift::{Error, ParticleParams, PotentialProfile, SimulationConfig, Trajectory};

fn canonical() -> &'static Trajectory {
    static T: OnceLock<Trajectory> = OnceLock::new();
    T.get_or_init(|| {
        let profile = PotentialProfile::quintic(0.2, 2.0, 1.0).unwrap();
        let particle = ParticleParams::new(1.0, 0.01, 1.0).unwrap();
        Trajectory::build(&profile, &particle, None, &SimulationConfig::default()).unwrap()
    })
}

fn profile(tanh: bool, v0: f64) -> PotentialProfile {
    if tanh {
        PotentialProfile::tanh(v0, 2.0, 1.0, None).unwrap()
    } else {
        PotentialProfile::quintic(v0, 2.0, 1.0).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_derivatives_match_differences(tanh: bool, v0 in -0.5f64..0.5, z in -2.3f64..-0.7) {
        let pr = profile(tanh, v0);
        let w = pr.feature_width();
        let h = 1e-4 * w;
        let (lo, mid, hi) = (pr.local(z - h), pr.local(z), pr.local(z + h));
        let scale = v0.abs().max(1e-3);
        prop_assert!(((hi.v - lo.v) / (2.0 * h) - mid.dv).abs() < 1e-6 * scale / w);
        prop_assert!(((hi.dv - lo.dv) / (2.0 * h) - mid.d2v).abs() < 1e-6 * scale / (w * w));
    }

    #[test]
    fn kappa_squares_to_mass_shell(v0 in -0.5f64..0.5, z in -3.0f64..0.0, px in -0.5f64..0.5, py in -0.5f64..0.5, p0 in 0.0f64..4.0) {
        let pr = PotentialProfile::quintic(v0, 2.0, 1.0).unwrap();
        let arg = (p0 - pr.local(z).v).powi(2) - 1.0 - px * px - py * py;
        match kappa(&pr, 1.0, p0, [px, py], z) {
            Ok(k) => prop_assert!((k * k - arg).abs() <= 1e-14 * (1.0 + p0 * p0)),
            Err(Error::Forbidden(a)) => prop_assert!(arg < 0.0 && a == arg),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn symplectic_product_is_antisymmetric_and_bilinear(
        a in prop::array::uniform2(-10f64..10.0),
        b in prop::array::uniform2(-10f64..10.0),
        c in prop::array::uniform2(-10f64..10.0),
        s in -3f64..3.0,
    ) {
        let (a, b, c) = ((a[0], a[1]), (b[0], b[1]), (c[0], c[1]));
        prop_assert_eq!(symplectic(a, b), -symplectic(b, a));
        prop_assert_eq!(symplectic(a, a), 0.0);
        let lin = symplectic((a.0 + s * c.0, a.1 + s * c.1), b);
        prop_assert!((lin - symplectic(a, b) - s * symplectic(c, b)).abs() < 1e-11);
    }

    #[test]
    fn window_is_a_unit_bump(c in -0.95f64..0.95, x in -1.0f64..1.0) {
        let traj = canonical();
        let w = Window::from_config(traj, c, &SimulationConfig::default()).unwrap();
        let (lo, hi) = w.support();
        let xi = lo + (hi - lo) * (0.5 + 0.6 * x);
        let v = w.value(xi);
        prop_assert!((0.0..=1.0).contains(&v));
        if xi <= lo || xi >= hi {
            prop_assert_eq!(v, 0.0);
        }
        if xi >= w.plateau_lo && xi <= w.plateau_hi {
            prop_assert_eq!(v, 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn propagator_is_antisymmetric(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let traj = canonical();
        let cfg = SimulationConfig::default();
        let (s, t) = (traj.t_min * u, traj.t_min * v);
        let (dst, _) = propagate(traj, s, t, &cfg).unwrap();
        let (dts, _) = propagate(traj, t, s, &cfg).unwrap();
        let scale = dst.abs().max(traj.a_max() * (t - s).abs()).max(1e-300);
        prop_assert!((dst + dts).abs() <= 1e-8 * scale);
    }

    #[test]
    fn energy_is_conserved_along_worldline(tanh: bool, v0 in -0.4f64..0.15, p in 0.8f64..4.0) {
        let traj = Trajectory::build(
            &profile(tanh, v0),
            &ParticleParams::new(1.0, 0.01, p).unwrap(),
            None,
            &SimulationConfig::default(),
        ).unwrap();
        prop_assert!(energy_conservation(&traj) <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn shifts_are_linear_in_coupling(alpha in 1e-4f64..0.1) {
        let cfg = SimulationConfig::default();
        let traj = canonical();
        let scaled = Trajectory::build(&traj.profile, &traj.particle.with_alpha(alpha), Some(traj.t_min), &cfg).unwrap();
        let r = alpha / traj.particle.alpha_c;
        let closed = classical_shift_closed(traj, &cfg).unwrap().value;
        let reduced = quantum_shift_reduced(traj, &cfg).unwrap().value;
        let closed_a = classical_shift_closed(&scaled, &cfg).unwrap().value;
        let reduced_a = quantum_shift_reduced(&scaled, &cfg).unwrap().value;
        prop_assert!((closed_a - r * closed).abs() <= 1e-10 * closed_a.abs());
        prop_assert!((reduced_a - r * reduced).abs() <= 1e-10 * reduced_a.abs());
    }
}
