//! Acceptance criteria, run in sequence so that each runtime budget is
//! measured without competing tests. Prints one PASS/FAIL line per criterion.
//! A statistical criterion that fails is rerun once on a second fixed seed;
//! both outcomes are printed and the budget covers both runs.
//! Built without the libtest harness so the lines are never captured.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use plrank::chain::{AlphaSpec, ChainConfig};
use plrank::dist;
use plrank::dynamic_model::{run_dynamic_gibbs, DynamicConfig, PhiSpec, SimulationConfig};
use plrank::measures::{ItemId, PartialRanking};
use plrank::oracle::calibration::{run_calibration, CalibrationSpec};
use plrank::oracle::geweke::{static_geweke, static_geweke_with, StaticGewekeSpec};
use plrank::oracle::{
    chapman_kolmogorov_ks, enumerate_checks, lifetime_checks, marginal_checks, psi_kappa_checks, stationarity_ks,
    Check, CK_PATHS, KS_LEVEL, STATIONARITY_SETTINGS, STATIONARITY_STEPS,
};
use plrank::static_model::{alpha_posterior, gibbs_update_weights, gibbs_update_z, run_static_gibbs};
use plrank::Result;

const SEED: u64 = 20_240_601;
/// Statistical criteria that fail on `SEED` are rerun once on this seed.
const RETRY_SEED: u64 = 20_240_602;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: &[Check]) -> Outcome {
    let worst: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:.3e} (bound {:.1e})", c.name, c.value, c.bound))
        .collect();
    Outcome {
        passed: worst.is_empty(),
        detail: if worst.is_empty() {
            format!("{} checks within bounds", checks.len())
        } else {
            worst.join("; ")
        },
    }
}

fn attempt(f: fn(u64) -> Result<Outcome>, seed: u64) -> Outcome {
    f(seed).unwrap_or_else(|e| Outcome {
        passed: false,
        detail: format!("error: {e}"),
    })
}

fn run(&(n, title, budget, retry, f): &Criterion) -> bool {
    let start = Instant::now();
    let mut outcome = attempt(f, SEED);
    if !outcome.passed && retry {
        let second = attempt(f, RETRY_SEED);
        outcome = Outcome {
            passed: second.passed,
            detail: format!(
                "seed {SEED} failed: {}; rerun on seed {RETRY_SEED}: {}",
                outcome.detail, second.detail
            ),
        };
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget);
    let in_time = elapsed <= budget;
    let ok = outcome.passed && in_time;
    println!(
        "criterion {n:>2} [{}] {title}: {} | {:.1}s of {}s{}",
        if ok { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { " (over budget)" }
    );
    ok
}

fn c1(_seed: u64) -> Result<Outcome> {
    Ok(from_checks(&psi_kappa_checks()?))
}

fn c2(seed: u64) -> Result<Outcome> {
    Ok(from_checks(&enumerate_checks(seed)?))
}

fn c3(seed: u64) -> Result<Outcome> {
    let checks: Vec<Check> = marginal_checks(seed)?
        .into_iter()
        .filter(|c| c.name.ends_with("|z|"))
        .collect();
    Ok(from_checks(&checks))
}

fn c4(seed: u64) -> Result<Outcome> {
    let spec = StaticGewekeSpec::default();
    let good = static_geweke(&spec, &mut plrank::rng_stream(seed, 4))?;
    // Negative control: the unseen mass drawn with half its conditional rate.
    // Doubling it instead drives the total mass to zero and Z to overflow.
    let prior = spec.alpha_prior;
    let tau = spec.tau;
    let bad = static_geweke_with(&spec, &mut plrank::rng_stream(seed, 5), |state, stats, rng| {
        gibbs_update_z(state, stats, rng);
        gibbs_update_weights(state, stats, tau, rng)?;
        let (shape, rate) = alpha_posterior(state, stats, &prior, tau)?;
        state.alpha = dist::gamma(rng, shape, rate);
        state.w_star = dist::gamma(rng, state.alpha, 0.5 * (tau + state.total_z()));
        Ok(())
    })?;
    let control = bad.max_abs_z();
    Ok(Outcome {
        passed: good.passed && control > 10.0,
        detail: format!(
            "max |z| = {:.2} over {} statistics (bound 4); corrupted-rate control max |z| = {:.1} (needs > 10)",
            good.max_abs_z(),
            good.stats.len(),
            control
        ),
    })
}

fn c5(seed: u64) -> Result<Outcome> {
    Ok(from_checks(&lifetime_checks(seed)?))
}

fn c6(seed: u64) -> Result<Outcome> {
    let mut checks = Vec::new();
    for (i, &(a, t, phi)) in STATIONARITY_SETTINGS.iter().enumerate() {
        let r = stationarity_ks(a, t, phi, STATIONARITY_STEPS, seed + i as u64)?;
        checks.push(Check {
            name: format!("alpha={a} tau={t} phi={phi}: KS p-value (n={})", r.n_effective),
            value: r.p_value,
            bound: KS_LEVEL,
            passed: r.p_value > KS_LEVEL,
        });
    }
    let ps: Vec<String> = checks.iter().map(|c| format!("{} = {:.3}", c.name, c.value)).collect();
    Ok(Outcome {
        passed: checks.iter().all(|c| c.passed),
        detail: ps.join("; "),
    })
}

fn c7(seed: u64) -> Result<Outcome> {
    let r = chapman_kolmogorov_ks(2.0, 1.0, 0.5, 1.0, CK_PATHS, seed)?;
    Ok(Outcome {
        passed: r.p_value > KS_LEVEL,
        detail: format!("two-sample KS D = {:.4}, p = {:.3} (level 0.01)", r.statistic, r.p_value),
    })
}

fn ranking(v: &[u64]) -> PartialRanking {
    PartialRanking::new(v.iter().map(|&x| ItemId(x)).collect()).unwrap()
}

fn c8(seed: u64) -> Result<Outcome> {
    let lists = vec![
        ranking(&[1, 2, 3]),
        ranking(&[2, 1, 4]),
        ranking(&[1, 3, 5]),
        ranking(&[2, 4, 1]),
        ranking(&[6, 1, 2]),
    ];
    let cfg = ChainConfig::short(40_000, 5_000);
    let s = run_static_gibbs(&lists, &cfg, &mut plrank::rng_stream(seed, 8))?;
    let dyn_cfg = DynamicConfig {
        phi: PhiSpec::Fixed(1.0),
        ..DynamicConfig::default()
    };
    let d = run_dynamic_gibbs(&[lists], &cfg, &dyn_cfg, &mut plrank::rng_stream(seed, 9))?;
    let (sm, su) = s.mean_normalized(0);
    let (dm, du) = d.mean_normalized(0);
    let mut diff = (su - du).abs();
    for (k, id) in s.items.iter().enumerate() {
        let j = d.items.iter().position(|x| x == id).expect("same items");
        diff = diff.max((sm[k] - dm[j]).abs());
    }
    Ok(Outcome {
        passed: diff < 0.02,
        detail: format!("max |static - dynamic| posterior mean = {diff:.4} (bound 0.02)"),
    })
}

fn calibration_spec() -> CalibrationSpec {
    CalibrationSpec {
        replications: 100,
        simulation: SimulationConfig {
            epochs: 30,
            lists_per_epoch: 1,
            list_len: 10,
            tau: 1.0,
        },
        alpha: 2.0,
        phi: 50.0,
        chain: ChainConfig {
            alpha: AlphaSpec::Prior {
                prior: plrank::GammaPrior::IMPROPER,
                init: 1.0,
            },
            ..ChainConfig::short(20_000, 10_000)
        },
        dynamic: DynamicConfig {
            first_appearance_filter: false,
            ..DynamicConfig::default()
        },
        level: 0.95,
    }
}

fn c9(seed: u64) -> Result<Outcome> {
    let spec = calibration_spec();
    let r = run_calibration(&spec, seed)?;
    let below = r.replications.iter().filter(|x| x.phi_interval.1 < spec.phi).count();
    let above = r.replications.iter().filter(|x| x.phi_interval.0 > spec.phi).count();
    Ok(Outcome {
        passed: r.alpha_covered >= 90 && r.phi_covered >= 90 && r.mean_kendall >= 0.6,
        detail: format!(
            "alpha covered {}/100, phi covered {}/100 (need >= 90; phi intervals below truth {below}, above {above}); \
             mean Kendall tau {:.3} (need >= 0.6)",
            r.alpha_covered, r.phi_covered, r.mean_kendall
        ),
    })
}

fn cli(args: &[&str]) -> Result<()> {
    let out = Command::new(env!("CARGO_BIN_EXE_plrank"))
        .args(args)
        .env_remove("PLRANK_OUTPUT_DIR")
        .output()?;
    if !out.status.success() {
        return Err(plrank::Error::Internal(format!(
            "plrank {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        )));
    }
    Ok(())
}

fn pipeline(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let d = |p: &str| dir.join(p).to_string_lossy().into_owned();
    cli(&[
        "simulate", "--model", "dynamic", "--alpha", "2", "--phi", "50", "--epochs", "30", "--list-len", "10",
        "--seed", "42", "--out", &d("sim"),
    ])?;
    cli(&[
        "fit", "--model", "dynamic", "--data", &d("sim/data.csv"), "--seed", "42", "--chains", "2",
        "--iterations", "2000", "--burn-in", "1000", "--out", &d("fit"),
    ])?;
    cli(&["summarize", "--chain", &d("fit/chain.jsonl"), "--out", &d("sum")])?;
    let mut files = Vec::new();
    for f in [
        "sim/data.csv",
        "sim/truth.json",
        "fit/chain.jsonl",
        "fit/summary.csv",
        "fit/posterior.json",
        "sum/summary.csv",
        "sum/posterior.json",
    ] {
        files.push((f.to_string(), std::fs::read(dir.join(f))?));
    }
    Ok(files)
}

fn c10(_seed: u64) -> Result<Outcome> {
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    let fa = pipeline(a.path())?;
    let fb = pipeline(b.path())?;
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let resummarized = fa[3].1 == fa[5].1 && fa[4].1 == fa[6].1;
    Ok(Outcome {
        passed: differing.is_empty() && resummarized,
        detail: format!(
            "{} files compared, differing: {:?}; summarize reproduces fit summaries: {}",
            fa.len(),
            differing,
            resummarized
        ),
    })
}

/// Number, title, runtime budget in seconds, whether a failure is rerun on
/// `RETRY_SEED`, and the check itself.
type Criterion = (usize, &'static str, u64, bool, fn(u64) -> Result<Outcome>);

// The calibration is not rerun: a second pass cannot fit in its budget.
const CRITERIA: [Criterion; 10] = [
    (1, "psi/kappa vs quadrature", 10, false, c1),
    (2, "top-m enumeration", 5, true, c2),
    (3, "marginal likelihood Monte Carlo", 120, true, c3),
    (4, "static Geweke", 180, true, c4),
    (5, "atom lifetime", 60, true, c5),
    (6, "Pitt-Walker stationarity", 30, true, c6),
    (7, "continuous-time composition", 60, true, c7),
    (8, "dynamic T=1 reduces to static", 120, true, c8),
    (9, "synthetic calibration", 1800, false, c9),
    (10, "end-to-end determinism", 300, false, c10),
];

/// Numeric arguments select criteria; anything else is ignored.
fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let results: Vec<bool> = CRITERIA
        .iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.0))
        .map(run)
        .collect();
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
