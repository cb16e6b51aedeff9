//! Command implementations behind the `clonelab` binary.
//!
//! Every command produces a [`Report`]: named checks with measured values
//! against pinned limits, plus command-specific data. Reports render as
//! text, JSON (`"schema": "1"`) or CSV.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use clonelab::baselines::{self, BaselineReport};
use clonelab::channel::{channel_fidelity_with_double_unitary, insert_gate_with, CombNetwork, Validation};
use clonelab::cloner::{self, ClonerAssembly};
use clonelab::haar::{average_fidelity_mc, sample_haar_unitary, SeededRng};
use clonelab::irrep::{blocks_and_residual, build_irrep_table, verify_covariance};
use clonelab::matrix::{re, ComplexMatrix};
use clonelab::optimizer::{self, Task};
use clonelab::protocol::{self, Strategy};
use clonelab::{eig, Error};

pub const SCHEMA: &str = "1";
pub const TABLE_HEADER: &str = "d,f_clon,f_est,f_ran,f_deco,f_learn";
/// Setting this variable perturbs one entry of `R^(1)` by 1e-3.
pub const CORRUPT_ENV: &str = "CLONELAB_CORRUPT_R1";

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_ROUNDS: u64 = 100_000;
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Parser)]
#[command(name = "clonelab", version, about = "Optimal cloning of unitary gates: verification and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Emit JSON
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV
    #[arg(long)]
    pub csv: bool,
    /// Write the report to a file instead of stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl Output {
    pub fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Text
        }
    }
}

/// Seed from `--seed`, else `CLONELAB_SEED`, else 0.
#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    #[arg(long, env = "CLONELAB_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Clone,
    Learn,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Clone => Task::Clone,
            TaskArg::Learn => Task::Learn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    None,
    Intercept,
    Clone,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::None => Strategy::None,
            StrategyArg::Intercept => Strategy::InterceptResend,
            StrategyArg::Clone => Strategy::CloneAttack,
        }
    }
}

fn dimension(s: &str) -> Result<usize, String> {
    let d: usize = s.parse().map_err(|_| format!("{s:?} is not an integer"))?;
    if (2..=4).contains(&d) {
        Ok(d)
    } else {
        Err(format!("d = {d} is outside the supported range 2..=4"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the cloning network: channels, comb, covariance, fidelities
    VerifyCloner {
        #[arg(long, value_parser = dimension)]
        d: usize,
        /// Haar samples for the Monte Carlo average
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// Print the comb Choi operator as JSON to this file
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Solve the clone or learn semidefinite program
    Optimize {
        #[arg(long, value_parser = dimension)]
        d: usize,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Reference fidelities and the no-cloning arithmetic
    Baselines {
        #[arg(long, value_parser = dimension)]
        d: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Simulate the gate-encoded key distribution protocol
    Protocol {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = DEFAULT_ROUNDS)]
        rounds: u64,
        #[command(flatten)]
        seed: SeedArg,
        /// Exact probabilities instead of sampling
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Baseline fidelities for d = 2, 3, 4
    Table {
        #[command(flatten)]
        out: Output,
    },
    /// Every acceptance check at d = 2 and d = 3
    FullSuite {
        /// d = 2 only
        #[arg(long)]
        quick: bool,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// A measured quantity against its limit.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    /// Passes when `|value − target| ≤ tol`; the reported value is the deviation.
    pub fn close(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self::at_most(name, (value - target).abs(), tol)
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            limit: 1.0,
            passed: ok,
        }
    }

    pub fn failed(name: impl Into<String>, err: &Error) -> Self {
        Self {
            name: format!("{} ({err})", name.into()),
            value: f64::NAN,
            limit: 0.0,
            passed: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub data: Map<String, Value>,
    pub checks: Vec<Check>,
    /// Rows for CSV output; the first row is the header.
    pub csv: Option<Vec<Vec<String>>>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.data.insert(key.to_string(), v.into());
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("schema".into(), json!(SCHEMA));
        obj.insert("command".into(), json!(self.command));
        for (k, v) in &self.data {
            obj.insert(k.clone(), v.clone());
        }
        obj.insert("checks".into(), serde_json::to_value(&self.checks).expect("serializable"));
        obj.insert("passed".into(), json!(self.passed()));
        Value::Object(obj)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
                s.push('\n');
                s
            }
            Format::Csv => {
                let rows = self.csv.clone().unwrap_or_else(|| {
                    let mut rows = vec![vec!["check".into(), "value".into(), "limit".into(), "passed".into()]];
                    rows.extend(self.checks.iter().map(|c| {
                        vec![c.name.clone(), c.value.to_string(), c.limit.to_string(), c.passed.to_string()]
                    }));
                    rows
                });
                rows.iter().map(|r| r.join(",") + "\n").collect()
            }
            Format::Text => {
                let mut s = String::new();
                let _ = writeln!(s, "{}", self.command);
                for (k, v) in &self.data {
                    let _ = writeln!(s, "  {k}: {}", text_value(v));
                }
                for c in &self.checks {
                    let _ = writeln!(
                        s,
                        "  {} {}: {:.3e} (limit {:.1e})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.value,
                        c.limit
                    );
                }
                let _ = writeln!(s, "{}", if self.passed() { "PASS" } else { "FAIL" });
                s
            }
        }
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

fn corrupt(r: CombNetwork) -> clonelab::Result<CombNetwork> {
    let d = r.d();
    let mut m = r.into_choi();
    m[(0, 0)] += re(1e-3);
    CombNetwork::new(m, d)
}

/// Checks on the cloning network at dimension `d`; honours [`CORRUPT_ENV`].
pub fn verify_cloner(d: usize, samples: usize, seed: u64) -> clonelab::Result<Report> {
    verify_cloner_with(d, samples, seed, std::env::var_os(CORRUPT_ENV).is_some())
}

pub fn verify_cloner_with(d: usize, samples: usize, seed: u64, corrupted: bool) -> clonelab::Result<Report> {
    let mut rep = Report::new("verify-cloner");
    let mut rng = SeededRng::new(seed);
    let closed = baselines::f_clon(d);
    rep.put("d", d);
    rep.put("seed", seed);
    rep.put("f_clon_closed_form", closed);

    let asm = ClonerAssembly::build(d)?;
    rep.check(Check::at_most(
        "pre-channel Kraus completeness",
        cloner::kraus_completeness_residual(&cloner::pre_kraus_operators(d)?),
        1e-10,
    ));
    rep.check(Check::at_most("pre-channel CPTP residual", asm.channel_a.cptp_residual()?, 1e-9));
    rep.check(Check::at_most("post-channel CPTP residual", asm.channel_b.cptp_residual()?, 1e-9));

    let r1 = if corrupted {
        rep.put("corrupted", true);
        corrupt(asm.r1.clone())?
    } else {
        asm.r1.clone()
    };
    rep.check(Check::at_most("comb normalization", r1.normalization_report().max_residual(), 1e-9));

    let table = build_irrep_table(d)?;
    match blocks_and_residual(r1.choi(), &table, f64::INFINITY) {
        Ok((blocks, residual)) => {
            rep.check(Check::at_most("covariance (block projection)", residual, 1e-9));
            rep.check(Check::close("block fidelity formula", blocks.fidelity(&table), closed, 1e-9));
            let min = if d <= 3 { eig::min_eigenvalue(r1.choi())? } else { blocks.min_eigenvalue()? };
            rep.check(Check::at_most("comb positivity (-min eigenvalue)", (-min).max(0.0), 1e-9));
        }
        Err(e) => rep.check(Check::failed("covariance (block projection)", &e)),
    }
    if d <= 3 {
        match verify_covariance(r1.choi(), &table, 2, &mut rng) {
            Ok(res) => rep.check(Check::at_most("covariance (Haar trials)", res, 1e-9)),
            Err(e) => rep.check(Check::failed("covariance (Haar trials)", &e)),
        }
    }

    let probes = if d <= 3 { 5 } else { 2 };
    let mut worst_fid = 0.0f64;
    let mut worst_paths = 0.0f64;
    for k in 0..probes {
        let u = if k == 0 { ComplexMatrix::identity(d) } else { sample_haar_unitary(d, &mut rng) };
        let via_comb = insert_gate_with(&r1, &u, Validation::Skip)?;
        let composed = cloner::cloner_channel(&u)?;
        let closed_form = cloner::cloner_channel_closed_form(&u)?;
        worst_fid = worst_fid.max((channel_fidelity_with_double_unitary(&via_comb, &u)? - closed).abs());
        worst_paths = worst_paths
            .max(via_comb.choi().max_abs_diff(closed_form.choi()))
            .max(composed.choi().max_abs_diff(closed_form.choi()));
    }
    rep.check(Check::at_most("fidelity vs closed form", worst_fid, 1e-9));
    rep.check(Check::at_most("comb / composed / closed-form channels agree", worst_paths, 1e-9));

    let mc_samples = if d <= 3 { samples } else { samples.min(20) };
    match average_fidelity_mc(&r1, mc_samples.max(1), &mut rng) {
        Ok(mc) => {
            rep.put("f_clon_monte_carlo", mc.mean);
            rep.put("monte_carlo_samples", mc.samples);
            rep.check(Check::close("Monte Carlo average", mc.mean, closed, 1e-9));
        }
        Err(e) => rep.check(Check::failed("Monte Carlo average", &e)),
    }

    let u = sample_haar_unitary(d, &mut rng);
    let deco = channel_fidelity_with_double_unitary(&cloner::decohered_cloner_channel(&u)?, &u)?;
    rep.put("f_deco", deco);
    rep.check(Check::close("decohered fidelity = 1/d^2", deco, baselines::f_random(d), 1e-9));

    let dil = cloner::controlled_swap_dilation(d, 20, &mut rng)?;
    rep.check(Check::at_most("controlled-swap dilation (up to Hadamard on memory)", dil.residual, 1e-9));

    let psi = cloner::random_pure_state(d, &mut rng);
    let out = cloner::state_cloner_output(&psi)?;
    rep.check(Check::at_most(
        "state-cloner reduction",
        out.max_abs_diff(&cloner::universal_state_clone(&psi)),
        1e-10,
    ));
    let single = cloner::single_clone_fidelity(&out, &psi)?;
    rep.check(Check::close(
        "single-clone fidelity (d+3)/(2(d+1))",
        single,
        (d + 3) as f64 / (2 * (d + 1)) as f64,
        1e-9,
    ));
    Ok(rep)
}

pub fn optimize(d: usize, task: Task, tol: f64) -> clonelab::Result<Report> {
    let mut rep = Report::new("optimize");
    let problem = optimizer::build_problem(d, task)?;
    let start = Instant::now();
    let res = optimizer::solve(&problem, tol)?;
    let reference = match task {
        Task::Clone => optimizer::analytic_bound(d),
        Task::Learn => baselines::f_learning(d),
    };
    rep.put("d", d);
    rep.put("task", task.to_string());
    rep.put("variable_size", problem.variable_size());
    rep.put("constraints", problem.constraints.len());
    rep.put("optimal_value", res.optimal_value);
    rep.put("analytic_reference", reference);
    rep.put("gap", (res.optimal_value - reference).abs());
    rep.put("iterations", res.iterations);
    rep.put("kkt_residual", res.kkt_residual);
    rep.put("seconds", start.elapsed().as_secs_f64());
    rep.check(Check::close("optimum vs analytic value", res.optimal_value, reference, 1e-6));
    rep.check(Check::at_most("constraint residual", problem.constraint_residual(&res.optimal_blocks.matrix), 1e-8));
    rep.check(Check::at_most("blocks PSD (-min eigenvalue)", (-res.optimal_blocks.min_eigenvalue()?).max(0.0), 1e-9));
    rep.check(Check::at_most(
        "value below bound",
        res.optimal_value - optimizer::analytic_bound(d),
        1e-7,
    ));
    Ok(rep)
}

pub fn baselines_report(d: usize) -> clonelab::Result<Report> {
    let mut rep = Report::new("baselines");
    let b = BaselineReport::new(d);
    for (k, v) in serde_json::to_value(b).expect("serializable").as_object().expect("object") {
        rep.put(k, v.clone());
    }
    let fixed = baselines::no_cloning_fixed_points(1001)?;
    rep.put("fixed_points", fixed.clone());
    let perm = baselines::permutation_discrimination(3)?;
    rep.put("permutation_max_distinguishable", perm.max_distinguishable);
    rep.put("permutations", perm.permutations);
    rep.check(Check::holds("ordering f_clon > f_est >= f_learn, f_clon > f_ran, f_deco = f_ran", b.ordering_holds()));
    rep.check(Check::holds("fixed points are {0, 1/2}", fixed == [0.0, 0.5]));
    rep.check(Check::holds("three letters: 3 of 6 distinguishable", perm.max_distinguishable == 3 && !perm.feasible_all));
    Ok(rep)
}

pub fn protocol_report(strategy: Strategy, rounds: u64, seed: u64, exact: bool) -> clonelab::Result<Report> {
    let mut rep = Report::new("protocol");
    let bases = protocol::build_bases(&protocol::canonical_bell())?;
    let stats = if exact {
        protocol::run_exact(strategy, &bases)?
    } else {
        protocol::run_sampled(strategy, &bases, rounds, &mut SeededRng::new(seed))?
    };
    let mode = if exact { "exact" } else { "sampled" };
    rep.put("strategy", strategy.to_string());
    rep.put("sift_rate", stats.sift_rate);
    rep.put("symbol_error_rate", stats.symbol_error_rate);
    rep.put("eve_guess_prob", stats.eve_guess_prob);
    rep.put("mode", mode);
    rep.put("rounds", if exact { Value::Null } else { json!(rounds) });
    rep.put("seed", if exact { Value::Null } else { json!(seed) });
    if let Some(e) = stats.stderr {
        rep.put("stderr", serde_json::to_value(e).expect("serializable"));
    }
    rep.check(Check::holds(
        "probabilities in [0, 1]",
        [stats.sift_rate, stats.symbol_error_rate, stats.eve_guess_prob]
            .iter()
            .all(|p| (0.0..=1.0).contains(p)),
    ));
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    rep.csv = Some(vec![
        ["strategy", "mode", "rounds", "seed", "sift_rate", "symbol_error_rate", "eve_guess_prob"]
            .map(String::from)
            .to_vec(),
        vec![
            strategy.to_string(),
            mode.to_string(),
            opt((!exact).then_some(rounds)),
            opt((!exact).then_some(seed)),
            stats.sift_rate.to_string(),
            stats.symbol_error_rate.to_string(),
            stats.eve_guess_prob.to_string(),
        ],
    ]);
    Ok(rep)
}

pub fn table_report() -> Report {
    let mut rep = Report::new("table");
    let rows: Vec<BaselineReport> = (2..=4).map(BaselineReport::new).collect();
    rep.put("rows", serde_json::to_value(&rows).expect("serializable"));
    for r in &rows {
        rep.check(Check::holds(format!("d = {} ordering", r.d), r.ordering_holds()));
    }
    let mut csv = vec![TABLE_HEADER.split(',').map(String::from).collect::<Vec<_>>()];
    for r in &rows {
        csv.push(vec![
            r.d.to_string(),
            r.f_clon.to_string(),
            r.f_est.to_string(),
            r.f_ran.to_string(),
            r.f_deco.to_string(),
            r.f_learn.to_string(),
        ]);
    }
    rep.csv = Some(csv);
    rep
}

/// `(name, Result<checks>)` for each component of the suite.
fn suite_section(rep: &mut Report, prefix: &str, section: clonelab::Result<Report>) {
    match section {
        Ok(r) => {
            for mut c in r.checks {
                c.name = format!("{prefix}: {}", c.name);
                rep.checks.push(c);
            }
        }
        Err(e) => rep.check(Check::failed(prefix, &e)),
    }
}

pub fn full_suite(quick: bool, seed: u64) -> Report {
    let start = Instant::now();
    let mut rep = Report::new("full-suite");
    let dims: &[usize] = if quick { &[2] } else { &[2, 3] };
    rep.put("quick", quick);
    rep.put("seed", seed);
    rep.put("dimensions", dims.to_vec());
    for &d in dims {
        suite_section(&mut rep, &format!("verify-cloner d={d}"), verify_cloner(d, 200, seed));
        for task in [Task::Clone, Task::Learn] {
            suite_section(&mut rep, &format!("optimize {task} d={d}"), optimize(d, task, DEFAULT_TOL));
        }
        suite_section(&mut rep, &format!("baselines d={d}"), baselines_report(d));
    }
    suite_section(&mut rep, "protocol", protocol_suite(seed, if quick { 20_000 } else { 100_000 }));
    rep.put("seconds", start.elapsed().as_secs_f64());
    rep
}

fn protocol_suite(seed: u64, rounds: u64) -> clonelab::Result<Report> {
    let mut rep = Report::new("protocol");
    let bases = protocol::build_bases(&protocol::canonical_bell())?;
    let none = protocol::run_exact(Strategy::None, &bases)?;
    rep.check(Check::at_most("honest symbol error", none.symbol_error_rate, 0.0));
    rep.check(Check::close("honest sift rate", none.sift_rate, 0.5, 0.0));
    let mut rng = SeededRng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = sample_haar_unitary(2, &mut rng);
        let bell = clonelab::matrix::tensor(&v, &ComplexMatrix::identity(2)).apply(&protocol::canonical_bell());
        let b = protocol::build_bases(&bell)?;
        worst = b.overlaps.iter().flatten().fold(worst, |w, x| w.max((x - 0.25).abs()));
    }
    rep.check(Check::at_most("mutual unbiasedness", worst, 1e-12));
    let ir = protocol::run_exact(Strategy::InterceptResend, &bases)?;
    rep.check(Check::close("intercept-resend error (exact)", ir.symbol_error_rate, 0.375, 1e-12));
    let sampled = protocol::run_sampled(Strategy::InterceptResend, &bases, rounds, &mut rng)?;
    let se = sampled.stderr.expect("sampled").symbol_error_rate;
    rep.check(Check::at_most(
        "intercept-resend error (sampled, in stderr units)",
        (sampled.symbol_error_rate - 0.375).abs() / se,
        4.0,
    ));
    let cl = protocol::run_exact(Strategy::CloneAttack, &bases)?;
    rep.check(Check::close("clone attack error (locked)", cl.symbol_error_rate, CLONE_ATTACK_QBER, 1e-12));
    rep.check(Check::close("clone attack Eve guess (locked)", cl.eve_guess_prob, CLONE_ATTACK_GUESS, 1e-12));
    rep.check(Check::holds("clone attack beats intercept-resend", cl.symbol_error_rate < 0.375 && cl.eve_guess_prob > 0.25));
    Ok(rep)
}

/// Exact clone-attack statistics, frozen from the density-matrix oracle.
pub const CLONE_ATTACK_QBER: f64 = 0.283_493_649_053_890_3;
pub const CLONE_ATTACK_GUESS: f64 = 0.716_506_350_946_109_7;

fn emit(rep: &Report, out: &Output) -> i32 {
    let text = rep.render(out.format());
    match &out.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{text}"),
    }
    rep.exit_code()
}

fn fail(e: Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::UnsupportedDimension { .. } | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (result, out) = match cli.command {
        Command::VerifyCloner {
            d,
            samples,
            seed,
            dump,
            out,
        } => {
            if let Some(path) = dump {
                let dumped = cloner::choi_r1_of_cloner(d).map(|r| serde_json::to_string(&r.dump()).expect("serializable"));
                match dumped {
                    Ok(s) => {
                        if let Err(e) = std::fs::write(&path, s) {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return 1;
                        }
                    }
                    Err(e) => return fail(e),
                }
            }
            (verify_cloner(d, samples, seed.seed), out)
        }
        Command::Optimize { d, task, tol, out } => (optimize(d, task.into(), tol), out),
        Command::Baselines { d, out } => (baselines_report(d), out),
        Command::Protocol {
            strategy,
            rounds,
            seed,
            exact,
            out,
        } => (protocol_report(strategy.into(), rounds, seed.seed, exact), out),
        Command::Table { out } => (Ok(table_report()), out),
        Command::FullSuite { quick, seed, out } => (Ok(full_suite(quick, seed.seed)), out),
    };
    match result {
        Ok(rep) => emit(&rep, &out),
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("clonelab").chain(args.iter().copied()))
    }

    #[test]
    fn dimension_outside_range_is_a_usage_error() {
        let err = parse(&["verify-cloner", "--d", "7"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("2..=4"));
    }

    #[test]
    fn defaults() {
        let Cli { command } = parse(&["optimize", "--d", "2", "--task", "clone"]).unwrap();
        match command {
            Command::Optimize { tol, out, .. } => {
                assert_eq!(tol, 1e-7);
                assert_eq!(out.format(), Format::Text);
            }
            other => panic!("{other:?}"),
        }
        let Cli { command } = parse(&["verify-cloner", "--d", "2", "--seed", "5"]).unwrap();
        match command {
            Command::VerifyCloner { samples, seed, .. } => assert_eq!((samples, seed.seed), (1000, 5)),
            other => panic!("{other:?}"),
        }
        assert!(parse(&["protocol", "--strategy", "clone", "--json", "--csv"]).is_err());
    }

    #[test]
    fn table_csv_header_and_rows() {
        let csv = table_report().render(Format::Csv);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TABLE_HEADER));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row[0], 2.0);
        assert!((row[1] - 0.46651).abs() < 1e-5);
        assert_eq!(&row[2..], &[0.3125, 0.25, 0.25, 0.3125]);
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn protocol_json_schema() {
        let rep = protocol_report(Strategy::InterceptResend, 2000, 1, false).unwrap();
        let v = rep.to_json();
        for key in ["schema", "strategy", "sift_rate", "symbol_error_rate", "eve_guess_prob", "mode", "rounds", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["schema"], "1");
        assert_eq!(v["mode"], "sampled");
        let text = rep.render(Format::Json);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["strategy"], v["strategy"]);
        assert_eq!(back["rounds"], 2000);
        let exact = protocol_report(Strategy::None, 1, 0, true).unwrap().to_json();
        assert_eq!(exact["symbol_error_rate"], 0.0);
        assert!(exact["rounds"].is_null());
    }

    #[test]
    fn verify_and_optimize_pass_at_d2() {
        let rep = verify_cloner(2, 50, 0).unwrap();
        assert!(rep.passed(), "{}", rep.render(Format::Text));
        assert!(optimize(2, Task::Learn, 1e-7).unwrap().passed());
        assert!(baselines_report(3).unwrap().passed());
    }

    #[test]
    fn corrupted_comb_fails_normalization() {
        let r = corrupt(cloner::choi_r1_of_cloner(2).unwrap()).unwrap();
        assert!(r.normalization_report().max_residual() > 1e-4);
        let rep = verify_cloner_with(2, 10, 0, true).unwrap();
        assert!(!rep.passed());
        assert!(rep.checks.iter().any(|c| c.name == "comb normalization" && !c.passed));
    }

    #[test]
    fn checks() {
        assert!(Check::close("x", 1.0, 1.0 + 1e-12, 1e-9).passed);
        assert!(!Check::at_most("y", 2.0, 1.0).passed);
        let mut r = Report::new("t");
        r.check(Check::holds("z", false));
        assert_eq!(r.exit_code(), 1);
        assert!(r.render(Format::Text).contains("FAIL z"));
    }
}
