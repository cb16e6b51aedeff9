//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.

use std::process::Command;
use std::time::{Duration, Instant};

use clonelab::baselines::{self, f_clon, f_estimation, f_random};
use clonelab::channel::{channel_fidelity_with_double_unitary, insert_gate, CombNetwork};
use clonelab::cloner;
use clonelab::haar::{sample_haar_unitary, SeededRng};
use clonelab::irrep::{build_irrep_table, verify_covariance};
use clonelab::matrix::{tensor, ComplexMatrix};
use clonelab::optimizer::{analytic_bound, build_problem, solve, Task};
use clonelab::protocol::{build_bases, canonical_bell, run_exact, run_sampled, Strategy};
use clonelab::Result;

const FIDELITY_TOL: f64 = 1e-9;
const SDP_TOL: f64 = 1e-6;
const SOLVER_TOL: f64 = 1e-7;
const CHOI_TOL: f64 = 1e-9;
const COMB_TOL: f64 = 1e-9;
const STATE_TOL: f64 = 1e-10;
const OVERLAP_TOL: f64 = 1e-12;
const SIGMA_LIMIT: f64 = 4.0;
/// "Exact" for probabilities that are sums over many floating-point cells.
const EXACT_TOL: f64 = 1e-15;

/// Exact clone-attack statistics, frozen from the density-matrix oracle.
const CLONE_QBER: f64 = 0.283_493_649_053_890_3;
const CLONE_GUESS: f64 = 0.716_506_350_946_109_7;
const LOCK_TOL: f64 = 1e-12;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { ok, detail: detail.into() })
}

fn c1_closed_form() -> Result<Outcome> {
    let mut rng = SeededRng::new(1);
    let mut worst = 0.0f64;
    for d in 2..=4 {
        for _ in 0..3 {
            let u = sample_haar_unitary(d, &mut rng);
            let f = channel_fidelity_with_double_unitary(&cloner::cloner_channel(&u)?, &u)?;
            worst = worst.max((f - f_clon(d)).abs());
        }
    }
    let quoted = (f_clon(2) - 0.466_506_35).abs() < 5e-9;
    outcome(worst <= FIDELITY_TOL && quoted, format!("max |F - closed form| = {worst:.2e}, F(2) = {:.8}", f_clon(2)))
}

fn c2_optimizer() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for d in 2..=3 {
        let t = Instant::now();
        let res = solve(&build_problem(d, Task::Clone)?, SOLVER_TOL)?;
        slowest = slowest.max(t.elapsed());
        worst = worst.max((res.optimal_value - analytic_bound(d)).abs());
    }
    outcome(
        worst <= SDP_TOL && slowest < Duration::from_secs(60),
        format!("max gap {worst:.2e}, slowest instance {:.3} s", slowest.as_secs_f64()),
    )
}

fn c3_learning() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for d in 2..=4 {
        let t = Instant::now();
        let res = solve(&build_problem(d, Task::Learn)?, SOLVER_TOL)?;
        slowest = slowest.max(t.elapsed());
        let target = if d == 2 { 5.0 / 16.0 } else { 6.0 / (d as f64).powi(4) };
        assert_eq!(target, f_estimation(d));
        worst = worst.max((res.optimal_value - target).abs());
    }
    outcome(
        worst <= SDP_TOL && slowest < Duration::from_secs(60),
        format!("max |F_learn - 6/d^4 (5/16)| = {worst:.2e}"),
    )
}

fn c4_decohered() -> Result<Outcome> {
    let mut rng = SeededRng::new(4);
    let mut worst = 0.0f64;
    let mut exact = true;
    for d in 2..=4 {
        let u = sample_haar_unitary(d, &mut rng);
        let f = channel_fidelity_with_double_unitary(&cloner::decohered_cloner_channel(&u)?, &u)?;
        worst = worst.max((f - 1.0 / (d * d) as f64).abs());
        exact &= baselines::f_decohered(d) == f_random(d);
    }
    outcome(worst <= FIDELITY_TOL && exact, format!("max |F_deco - 1/d^2| = {worst:.2e}"))
}

fn c5_comb() -> Result<Outcome> {
    let mut rng = SeededRng::new(5);
    let (mut choi, mut norm, mut cov) = (0.0f64, 0.0f64, 0.0f64);
    for d in 2..=3 {
        let r1: CombNetwork = cloner::choi_r1_of_cloner(d)?;
        for _ in 0..20 {
            let u = sample_haar_unitary(d, &mut rng);
            let diff = insert_gate(&r1, &u)?.choi().max_abs_diff(cloner::cloner_channel_closed_form(&u)?.choi());
            choi = choi.max(diff);
        }
        norm = norm.max(r1.normalization_report().max_residual());
        cov = cov.max(verify_covariance(r1.choi(), &build_irrep_table(d)?, 5, &mut rng)?);
    }
    outcome(
        choi <= CHOI_TOL && norm < COMB_TOL && cov < COMB_TOL,
        format!("Choi distance {choi:.2e}, normalization {norm:.2e}, covariance {cov:.2e}"),
    )
}

fn c6_state_cloner() -> Result<Outcome> {
    let mut rng = SeededRng::new(6);
    let mut worst = 0.0f64;
    for d in 2..=4 {
        for _ in 0..5 {
            let psi = cloner::random_pure_state(d, &mut rng);
            let out = cloner::state_cloner_output(&psi)?;
            worst = worst.max(out.max_abs_diff(&cloner::universal_state_clone(&psi)));
        }
    }
    let psi = cloner::random_pure_state(2, &mut rng);
    let single = cloner::single_clone_fidelity(&cloner::state_cloner_output(&psi)?, &psi)?;
    let gap = (single - 5.0 / 6.0).abs();
    outcome(
        worst <= STATE_TOL && gap <= FIDELITY_TOL,
        format!("reduction residual {worst:.2e}, single-clone fidelity {single:.12}"),
    )
}

fn c7_no_cloning() -> Result<Outcome> {
    let fixed = baselines::no_cloning_fixed_points(1001)?;
    let perm = baselines::permutation_discrimination(3)?;
    outcome(
        fixed == [0.0, 0.5] && perm.max_distinguishable == 3 && perm.permutations == 6,
        format!("fixed points {fixed:?}, distinguishable {} of {}", perm.max_distinguishable, perm.permutations),
    )
}

fn c8_protocol() -> Result<Outcome> {
    let bases = build_bases(&canonical_bell())?;
    let honest = run_exact(Strategy::None, &bases)?;
    let honest_ok = honest.symbol_error_rate == 0.0 && honest.sift_rate == 0.5;

    let mut rng = SeededRng::new(8);
    let mut overlap = 0.0f64;
    for _ in 0..10 {
        let v = sample_haar_unitary(2, &mut rng);
        let b = build_bases(&tensor(&v, &ComplexMatrix::identity(2)).apply(&canonical_bell()))?;
        overlap = b.overlaps.iter().flatten().fold(overlap, |w, x| w.max((x - 0.25).abs()));
    }

    let ir = run_exact(Strategy::InterceptResend, &bases)?;
    let sampled = run_sampled(Strategy::InterceptResend, &bases, 100_000, &mut SeededRng::new(0))?;
    let sigma = (sampled.symbol_error_rate - 0.375).abs() / sampled.stderr.expect("sampled").symbol_error_rate;

    let clone = run_exact(Strategy::CloneAttack, &bases)?;
    let locked = (clone.symbol_error_rate - CLONE_QBER).abs() <= LOCK_TOL
        && (clone.eve_guess_prob - CLONE_GUESS).abs() <= LOCK_TOL
        && clone.symbol_error_rate < 0.375
        && clone.eve_guess_prob > 0.25;

    outcome(
        honest_ok && overlap <= OVERLAP_TOL && (ir.symbol_error_rate - 0.375).abs() <= EXACT_TOL && sigma <= SIGMA_LIMIT && locked,
        format!(
            "overlap dev {overlap:.1e}, intercept exact {} sampled {:.2} sigma, clone QBER {:.6} guess {:.6}",
            ir.symbol_error_rate, sigma, clone.symbol_error_rate, clone.eve_guess_prob
        ),
    )
}

fn run_suite(quick: bool) -> (bool, Duration, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_clonelab"));
    cmd.arg("full-suite").arg("--json").env_remove("CLONELAB_SEED").env_remove("CLONELAB_CORRUPT_R1");
    if quick {
        cmd.arg("--quick");
    }
    let t = Instant::now();
    let out = cmd.output().expect("binary runs");
    let elapsed = t.elapsed();
    let mut json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
    if let Some(obj) = json.as_object_mut() {
        obj.remove("seconds");
    }
    (out.status.success(), elapsed, json.to_string())
}

fn c9_full_suite() -> Result<Outcome> {
    let (ok1, t1, a) = run_suite(true);
    let (ok2, _, b) = run_suite(true);
    let (ok3, t3, _) = run_suite(false);
    outcome(
        ok1 && ok2 && ok3 && a == b && t1 < Duration::from_secs(30) && t3 < Duration::from_secs(300),
        format!(
            "quick {:.2} s (deterministic: {}), d <= 3 {:.2} s",
            t1.as_secs_f64(),
            a == b,
            t3.as_secs_f64()
        ),
    )
}

type Criterion = (&'static str, fn() -> Result<Outcome>, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        ("closed-form optimal fidelity", c1_closed_form, Duration::from_secs(10)),
        ("optimizer reproduces the bound", c2_optimizer, Duration::from_secs(120)),
        ("learning equals estimation", c3_learning, Duration::from_secs(180)),
        ("decohered equals random", c4_decohered, Duration::MAX),
        ("comb calculus consistency", c5_comb, Duration::MAX),
        ("state-cloner reduction", c6_state_cloner, Duration::MAX),
        ("no-cloning arithmetic", c7_no_cloning, Duration::MAX),
        ("protocol statistics", c8_protocol, Duration::MAX),
        ("full suite", c9_full_suite, Duration::MAX),
    ];
    let mut failures = 0;
    for (k, (name, f, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = f();
        let elapsed = t.elapsed();
        let (ok, detail) = match res {
            Ok(o) => (o.ok && elapsed < *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} [{}] {name}: {detail} ({:.2} s)",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
