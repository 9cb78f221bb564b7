//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use radshift::jacobi::JacobiBasis;
use radshift::model::validate_scenario;
use radshift::qshift::{radiated_energy, soft_limit_check};
use radshift::report::{rel_diff, ShiftReport};
use radshift::verify::{
    alpha_linearity, antisymmetry, cos_grid, dzdp_consistency, ibp_identity, k_grid, ld_form_equivalence,
};
use radshift::{ParticleParams, PotentialProfile, SimulationConfig, Trajectory};

const SEED: u64 = 20240611;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn canonical() -> Trajectory {
    scenario(false, 1.0, 0.2)
}

fn scenario(tanh: bool, p: f64, v0: f64) -> Trajectory {
    let profile = if tanh {
        PotentialProfile::tanh(v0, 2.0, 1.0, None).unwrap()
    } else {
        PotentialProfile::quintic(v0, 2.0, 1.0).unwrap()
    };
    let particle = ParticleParams::new(1.0, 0.01, p).unwrap();
    let cfg = SimulationConfig::default();
    validate_scenario(&profile, &particle, cfg.delta_min).unwrap();
    Trajectory::build(&profile, &particle, None, &cfg).unwrap()
}

/// Canonical plus eight variations of p, V0 and the profile shape. (p, V0) =
/// (0.5, 0.2) has a turning point and is replaced by (1, -0.3).
fn scenarios() -> Vec<(String, Trajectory)> {
    let mut out = vec![("quintic p=1 V0=0.2".to_string(), canonical())];
    let list = [
        (false, 0.5, -0.3),
        (false, 1.0, -0.3),
        (false, 3.0, 0.2),
        (false, 3.0, -0.3),
        (true, 0.5, -0.3),
        (true, 1.0, 0.2),
        (true, 3.0, 0.2),
        (true, 3.0, -0.3),
    ];
    for (tanh, p, v0) in list {
        let name = format!("{} p={p} V0={v0}", if tanh { "tanh" } else { "quintic" });
        out.push((name, scenario(tanh, p, v0)));
    }
    out
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let v = f();
    (v, t0.elapsed())
}

fn main() {
    let cfg = SimulationConfig::default();
    let mut outcomes = Vec::new();

    // Main theorem and oracle anchoring share the per-scenario reports.
    let (reports, elapsed) = timed(|| {
        scenarios()
            .into_iter()
            .map(|(name, traj)| (name, ShiftReport::compute(&traj, &cfg).unwrap()))
            .collect::<Vec<_>>()
    });
    let mut worst_exact: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for (name, r) in &reports {
        let routes = [r.dz_classical_closed, r.dz_classical_green, r.dzq_reduced, r.dzq_angular];
        let mut exact: f64 = 0.0;
        let mut fd: f64 = 0.0;
        let mut oracle: f64 = 0.0;
        for (i, a) in routes.iter().enumerate() {
            for b in &routes[i + 1..] {
                exact = exact.max(rel_diff(*a, *b));
            }
            fd = fd.max(rel_diff(*a, r.dzq_angular_fd));
            oracle = oracle.max(rel_diff(*a, r.dz_oracle_linear_response));
        }
        println!(
            "  {name:<22} dz = {:+.10e}  routes {exact:.1e}  fd {fd:.1e}  oracle {oracle:.1e}",
            r.dz_classical_closed
        );
        worst_exact = worst_exact.max(exact);
        worst_fd = worst_fd.max(fd);
        worst_oracle = worst_oracle.max(oracle);
    }
    outcomes.push(Outcome {
        name: "main theorem: four routes agree (1e-5), fd route (1e-4), 9 scenarios, < 60 s",
        pass: worst_exact <= 1e-5 && worst_fd <= 1e-4 && elapsed < Duration::from_secs(60),
        detail: format!("routes {worst_exact:.2e}, fd {worst_fd:.2e}, {:.2} s", elapsed.as_secs_f64()),
    });
    outcomes.push(Outcome {
        name: "oracle anchoring: every route vs forced linear response (1e-5)",
        pass: worst_oracle <= 1e-5,
        detail: format!("{worst_oracle:.2e}"),
    });

    let traj = canonical();

    let (drift, elapsed) = timed(|| JacobiBasis::new(&traj, &cfg).unwrap().symplectic_drift());
    outcomes.push(Outcome {
        name: "symplectic conservation: drift <= 1e-10, < 1 s",
        pass: drift <= 1e-10 && elapsed < Duration::from_secs(1),
        detail: format!("{drift:.2e}, {:.3} s", elapsed.as_secs_f64()),
    });

    let (anti, elapsed) = timed(|| antisymmetry(&traj, 20, SEED, &cfg).unwrap());
    outcomes.push(Outcome {
        name: "antisymmetry: |dz_s(t) + dz_t(s)| <= 1e-8 scale, 20 pairs, < 5 s",
        pass: anti <= 1e-8 && elapsed < Duration::from_secs(5),
        detail: format!("{anti:.2e}, {:.3} s", elapsed.as_secs_f64()),
    });

    let forms = ld_form_equivalence(&traj, 1000);
    outcomes.push(Outcome {
        name: "LD force: two closed forms agree to 1e-10 at 1000 samples",
        pass: forms <= 1e-10,
        detail: format!("{forms:.2e}"),
    });

    let dzdp = dzdp_consistency(&traj, 10, SEED, &cfg).unwrap();
    outcomes.push(Outcome {
        name: "momentum partial: (dz/dp)_t vs finite differences (1e-5), 10 times",
        pass: dzdp <= 1e-5,
        detail: format!("{dzdp:.2e}"),
    });

    let ((ibp, soft), elapsed) = timed(|| {
        let ibp = ibp_identity(&traj, &k_grid(10), &cos_grid(10), 1.0, &cfg).unwrap();
        let soft = cos_grid(10)
            .iter()
            .map(|&c| soft_limit_check(&traj, c, &cfg).unwrap().rel_error)
            .fold(0.0, f64::max);
        (ibp, soft)
    });
    outcomes.push(Outcome {
        name: "amplitude: direct = ibp on 10x10 grid (1e-6), soft limit (1e-3), < 30 s",
        pass: ibp <= 1e-6 && soft <= 1e-3 && elapsed < Duration::from_secs(30),
        detail: format!("ibp {ibp:.2e}, soft {soft:.2e}, {:.2} s", elapsed.as_secs_f64()),
    });

    let (energy, elapsed) = timed(|| radiated_energy(&traj, &cfg).unwrap());
    outcomes.push(Outcome {
        name: "energy balance: spectral vs Larmor (2e-2), < 60 s",
        pass: energy.rel_diff <= 2e-2 && elapsed < Duration::from_secs(60),
        detail: format!(
            "Larmor {:.8e}, spectral {:.8e}, rel {:.2e}, {:.2} s",
            energy.time_domain,
            energy.spectral,
            energy.rel_diff,
            elapsed.as_secs_f64()
        ),
    });

    let lin = alpha_linearity(&traj, &reports[0].1, &cfg).unwrap();
    outcomes.push(Outcome {
        name: "alpha linearity: every route under alpha -> 4 alpha (1e-10)",
        pass: lin <= 1e-10,
        detail: format!("{lin:.2e}"),
    });

    let mut failed = 0;
    for o in &outcomes {
        println!("{} {} [{}]", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} acceptance criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
