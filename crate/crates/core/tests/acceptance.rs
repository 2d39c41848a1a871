//! Acceptance criteria, one line per criterion plus its individual checks.
//!
//! Runs as a plain binary so the report is always printed. Pass criterion
//! numbers (e.g. `cargo test --test acceptance -- 3 6`) to run a subset.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use twophoton::langevin::{run_ensemble_detailed, TrajectoryConfig};
use twophoton::validation::{self, all_passed, CheckResult};
use twophoton::ModelParams;

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    run: fn() -> Vec<CheckResult>,
}

fn determinism() -> Vec<CheckResult> {
    let a = validation::invariant_suite();
    let b = validation::invariant_suite();
    let mut out = vec![CheckResult::new(
        "invariant suite repeated",
        a == b,
        format!("{} checks, identical: {}", a.len(), a == b),
    )];
    let p = ModelParams::new(17.0, 20.0, 1.0).unwrap();
    let config = TrajectoryConfig {
        n_traj: 200,
        t_sample: 20.0,
        seed: 99,
        ..TrajectoryConfig::default()
    };
    let runs: Vec<_> = [1, 2, 4]
        .iter()
        .map(|&t| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap();
            pool.install(|| run_ensemble_detailed(&p, &config, false))
        })
        .collect();
    let same = runs.iter().all(|r| r.is_ok() && r == &runs[0]);
    out.push(CheckResult::new(
        "ensemble under 1, 2, 4 threads",
        same,
        format!("bitwise identical: {same}"),
    ));
    out
}

const CRITERIA: [Criterion; 9] = [
    Criterion {
        id: 1,
        title: "critical closed forms vs moment quadrature",
        budget: Duration::from_secs(1),
        run: validation::critical_moments,
    },
    Criterion {
        id: 2,
        title: "critical exponents of the exact solution",
        budget: Duration::from_secs(10),
        run: validation::exact_exponents,
    },
    Criterion {
        id: 3,
        title: "g2 regimes",
        budget: Duration::from_secs(5),
        run: validation::g2_regimes,
    },
    Criterion {
        id: 4,
        title: "Langevin ensemble vs exact",
        budget: Duration::from_secs(300),
        run: || validation::langevin_vs_exact(&validation::default_mc_config()),
    },
    Criterion {
        id: 5,
        title: "Ito vs Stratonovich",
        budget: Duration::from_secs(600),
        run: || validation::ito_vs_stratonovich(&validation::default_mc_config()),
    },
    Criterion {
        id: 6,
        title: "reduced Wigner, exact vs Boltzmann",
        budget: Duration::from_secs(30),
        run: validation::reduced_wigner_agreement,
    },
    Criterion {
        id: 7,
        title: "scaling ansatz of the reduced critical dynamics",
        budget: Duration::from_secs(600),
        run: || validation::scaling_ansatz(&validation::default_mc_config()),
    },
    Criterion {
        id: 8,
        title: "normalization and consistency invariants",
        budget: Duration::from_secs(60),
        run: validation::invariant_suite,
    },
    Criterion {
        id: 9,
        title: "determinism",
        budget: Duration::from_secs(120),
        run: determinism,
    },
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for c in CRITERIA
        .iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.id))
    {
        let start = Instant::now();
        let mut checks = (c.run)();
        let elapsed = start.elapsed();
        checks.push(CheckResult::new(
            "runtime",
            elapsed <= c.budget,
            format!(
                "{:.2} s (budget {} s)",
                elapsed.as_secs_f64(),
                c.budget.as_secs()
            ),
        ));
        let ok = all_passed(&checks);
        println!(
            "criterion {}: {} {} ({:.1} s)",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.title,
            elapsed.as_secs_f64()
        );
        for check in &checks {
            println!("    {check}");
        }
        if !ok {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
