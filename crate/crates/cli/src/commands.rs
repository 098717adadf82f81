use idsense_core::capacity::{
    det_feedback_capacity, image_size_bound, rand_feedback_capacity, rate_of_code, shannon_capacity,
    tradeoff_curve, BoundParams, CapacityResult, CurvePoint, ImageSizeVariant, Maximizer, Mode, DEFAULT_TOLERANCE,
};
use idsense_core::coding::{build_id_code, CodeDescriptor, IdCodeParams, IdFeedbackCode};
use idsense_core::estimation::{optimal_estimator, table_distortion, DistortionProfile, EstimatorTable, SensingModel};
use idsense_core::sim::{
    brute_force_estimator_distortion, exact_distortion, exact_error_probabilities, identity_pairs, simulate_pair,
    SimReport, MIN_TRIALS,
};
use idsense_core::Error as CoreError;
use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_problem, parse_grid, ModeArg, Problem, Settings};
use crate::error::{CliError, CliResult, Context};
use crate::output::{opt_sig9, sig9, Artifact, Table};

/// Deviation above which the estimator and the exhaustive oracle disagree.
const ORACLE_TOLERANCE: f64 = 1e-12;

fn maximizer_text(m: &Maximizer) -> String {
    match m {
        Maximizer::Symbol(x) => format!("x={x}"),
        Maximizer::Distribution(p) => {
            let parts: Vec<String> = p.probs().iter().map(|&w| sig9(w)).collect();
            format!("P=({})", parts.join(";"))
        }
    }
}

#[derive(Serialize)]
struct CapacityReport {
    shannon: CapacityResult,
    det_f: CapacityResult,
    rand_f: CapacityResult,
}

pub fn capacity(settings: &Settings) -> CliResult<Artifact> {
    let problem = load_problem(settings)?;
    let avg = problem.channel.averaged();
    let report = CapacityReport {
        shannon: shannon_capacity(avg, DEFAULT_TOLERANCE).context("Shannon capacity")?,
        det_f: det_feedback_capacity(avg).context("deterministic feedback ID capacity")?,
        rand_f: rand_feedback_capacity(avg, DEFAULT_TOLERANCE).context("randomized feedback ID capacity")?,
    };
    let mut table = Table::new(vec!["quantity", "value", "optimality_gap", "maximizer"]);
    for (name, r) in [("shannon", &report.shannon), ("det_f", &report.det_f), ("rand_f", &report.rand_f)] {
        table.push(vec![
            name.into(),
            sig9(r.value),
            sig9(r.optimality_gap),
            maximizer_text(&r.maximizer),
        ]);
    }
    Artifact::new(report, vec![table])
}

#[derive(Serialize)]
struct CurveReport {
    grid: Vec<f64>,
    min_feasible: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    det: Option<Vec<CurvePoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rand: Option<Vec<CurvePoint>>,
}

pub fn tradeoff(settings: &Settings) -> CliResult<Artifact> {
    let problem = load_problem(settings)?;
    let grid = parse_grid(&Settings::require(&settings.grid, "grid")?)?;
    let mode = settings.mode.unwrap_or(ModeArg::Both);
    let profile = DistortionProfile::compute(&problem.channel, &problem.distortion).context("distortion profile")?;
    let avg = problem.channel.averaged();
    let curve = |mode| tradeoff_curve(avg, &profile, &grid, mode, DEFAULT_TOLERANCE).context("tradeoff curve");
    let mut report = CurveReport {
        grid: grid.clone(),
        min_feasible: profile.min(),
        det: None,
        rand: None,
    };
    for m in mode.modes() {
        match m {
            Mode::Deterministic => report.det = Some(curve(m)?),
            Mode::Randomized => report.rand = Some(curve(m)?),
        }
    }
    let mut header = vec!["D"];
    header.extend(report.det.as_ref().map(|_| "det"));
    header.extend(report.rand.as_ref().map(|_| "rand"));
    let mut table = Table::new(header);
    for (k, &d) in grid.iter().enumerate() {
        let mut row = vec![sig9(d)];
        for curve in [&report.det, &report.rand].into_iter().flatten() {
            row.push(opt_sig9(curve[k].value(), "infeasible"));
        }
        table.push(row);
    }
    Artifact::new(report, vec![table])
}

#[derive(Serialize)]
struct OracleCheck {
    checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_input: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped_because: Option<String>,
}

#[derive(Serialize)]
struct EstimateReport {
    estimator: Vec<Vec<usize>>,
    profile: Vec<f64>,
    min_feasible: f64,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feasible_inputs: Option<Vec<usize>>,
    oracle: OracleCheck,
}

/// `inject_fault` corrupts one estimator entry so the mismatch path can be exercised.
pub fn estimate(settings: &Settings, inject_fault: bool) -> CliResult<Artifact> {
    let Problem { channel, distortion } = load_problem(settings)?;
    let mut table = optimal_estimator(&channel, &distortion).context("optimal estimator")?;
    if inject_fault {
        let mut entries = table.entries().to_vec();
        entries[0] = (entries[0] + 1) % channel.state_size();
        table = EstimatorTable::new(channel.input_size(), channel.output_size(), entries).context("estimator")?;
    }
    let per_input = (0..channel.input_size())
        .map(|x| table_distortion(&channel, &distortion, &table, x))
        .collect::<idsense_core::Result<Vec<f64>>>()
        .context("estimator distortion")?;
    let profile = DistortionProfile::new(per_input.clone());
    let oracle = match brute_force_estimator_distortion(&channel, &distortion) {
        Ok(oracle) => {
            let deviation = per_input
                .iter()
                .zip(&oracle.per_input)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if deviation > ORACLE_TOLERANCE {
                let diff: Vec<String> = per_input
                    .iter()
                    .zip(&oracle.per_input)
                    .enumerate()
                    .filter(|(_, (a, b))| (*a - *b).abs() > ORACLE_TOLERANCE)
                    .map(|(x, (a, b))| format!("  x={x}: estimator {a:.12} vs oracle {b:.12}"))
                    .collect();
                return Err(CliError::OracleMismatch(diff.join("\n")));
            }
            OracleCheck {
                checked: true,
                per_input: Some(oracle.per_input),
                max_deviation: Some(deviation),
                skipped_because: None,
            }
        }
        Err(e @ CoreError::TooLargeToEnumerate { .. }) => OracleCheck {
            checked: false,
            per_input: None,
            max_deviation: None,
            skipped_because: Some(e.to_string()),
        },
        Err(e) => return Err(CliError::core("estimator oracle", e)),
    };
    let feasible_inputs = settings.budget.map(|d| profile.feasible_inputs(d));
    let report = EstimateReport {
        estimator: table.to_rows(),
        profile: per_input,
        min_feasible: profile.min(),
        budget: settings.budget,
        feasible_inputs,
        oracle,
    };
    let mut main = Table::new(vec!["x", "d_star", "feasible"]);
    for (x, &d) in report.profile.iter().enumerate() {
        let feasible = match &report.feasible_inputs {
            Some(set) => set.contains(&x).to_string(),
            None => String::new(),
        };
        main.push(vec![x.to_string(), sig9(d), feasible]);
    }
    let mut estimator = Table::named("estimator", vec!["x", "y", "s_hat"]);
    for (x, row) in report.estimator.iter().enumerate() {
        for (y, s) in row.iter().enumerate() {
            estimator.push(vec![x.to_string(), y.to_string(), s.to_string()]);
        }
    }
    Artifact::new(report, vec![main, estimator])
}

#[derive(Serialize)]
struct BoundsReport {
    n: usize,
    mu: f64,
    alpha: f64,
    beta: f64,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    budget: Option<f64>,
    log2_k1: f64,
    log2_k2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    log2_k3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log2_k4: Option<f64>,
}

fn bounds_report(problem: &Problem, n: usize, mu: f64, budget: Option<f64>) -> CliResult<BoundsReport> {
    let avg = problem.channel.averaged();
    let params = BoundParams::new(n, mu, avg.output_size()).context("bound parameters")?;
    let profile = DistortionProfile::compute(&problem.channel, &problem.distortion).context("distortion profile")?;
    let bound = |variant, constraint| image_size_bound(&params, avg, constraint, variant).context("image-size bound");
    let (log2_k3, log2_k4) = match budget {
        Some(d) => (
            Some(bound(ImageSizeVariant::K3, Some((&profile, d)))?),
            Some(bound(ImageSizeVariant::K4, Some((&profile, d)))?),
        ),
        None => (None, None),
    };
    Ok(BoundsReport {
        n,
        mu,
        alpha: params.alpha,
        beta: params.beta,
        budget,
        log2_k1: bound(ImageSizeVariant::K1, None)?,
        log2_k2: bound(ImageSizeVariant::K2, None)?,
        log2_k3,
        log2_k4,
    })
}

pub fn bounds(settings: &Settings) -> CliResult<Artifact> {
    let problem = load_problem(settings)?;
    let n = Settings::require(&settings.n, "n")?;
    let report = bounds_report(&problem, n, settings.mu()?, settings.budget)?;
    let mut table = Table::new(vec!["variant", "log2_bound"]);
    for (name, v) in [
        ("K1", Some(report.log2_k1)),
        ("K2", Some(report.log2_k2)),
        ("K3", report.log2_k3),
        ("K4", report.log2_k4),
    ] {
        if let Some(v) = v {
            table.push(vec![name.into(), sig9(v)]);
        }
    }
    Artifact::new(report, vec![table])
}

#[derive(Serialize)]
struct SimPair {
    i: String,
    iprime: String,
    trials: usize,
    accept_rate: f64,
    stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_accept: Option<f64>,
}

#[derive(Serialize)]
struct ExactSummary {
    lambda1: f64,
    lambda2: f64,
    d_t: Vec<f64>,
    d_bar: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    code: CodeDescriptor,
    #[serde(rename = "D")]
    budget: f64,
    rate: f64,
    pilot_distortion: f64,
    inner_max_error: f64,
    inner_error_exact: bool,
    image_size: BoundsReport,
    pairs: Vec<SimPair>,
    monte_carlo: SimReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactSummary>,
}

/// Runs every pair on the rayon pool; results come back in pair order, so the
/// reduction is identical to a sequential run.
fn run_pairs(
    code: &IdFeedbackCode,
    problem: &Problem,
    sensing: &SensingModel,
    pairs: &[(BigUint, BigUint)],
    trials: usize,
    seed: u64,
) -> CliResult<SimReport> {
    let stats = pairs
        .par_iter()
        .map(|(i, j)| simulate_pair(code, &problem.channel, sensing, i, j, trials, seed))
        .collect::<idsense_core::Result<Vec<_>>>()
        .context("simulation")?;
    SimReport::from_pairs(&stats).context("simulation report")
}

pub fn simulate(settings: &Settings) -> CliResult<Artifact> {
    let problem = load_problem(settings)?;
    let budget = settings.budget()?;
    let mode = match settings.mode.unwrap_or(ModeArg::Det) {
        ModeArg::Det => Mode::Deterministic,
        ModeArg::Rand => Mode::Randomized,
        ModeArg::Both => return Err(CliError::Config("simulate needs --mode det or --mode rand".into())),
    };
    let n = Settings::require(&settings.n, "n")?;
    let identities = settings.identities()?;
    let colors = Settings::require(&settings.colors, "colors")?;
    let eps = settings.eps()?;
    let trials = settings.trials.unwrap_or(10_000);
    if trials < MIN_TRIALS {
        return Err(CliError::Config(format!("--trials must be at least {MIN_TRIALS}")));
    }
    let seed = settings.seed.unwrap_or(0);
    let sensing = SensingModel::new(&problem.channel, problem.distortion.clone()).context("sensing model")?;
    let params = IdCodeParams::new(n, identities.clone(), colors, eps, mode, seed);
    let code = build_id_code(&problem.channel, &sensing.profile, budget, &params).context("code construction")?;
    let pairs = identity_pairs(&identities, settings.sample(&identities), seed).context("identity pairs")?;
    let mc = run_pairs(&code, &problem, &sensing, &pairs, trials, seed)?;

    let exact = if settings.exact {
        let report = exact_error_probabilities(&code, &problem.channel, &pairs).map_err(CliError::GuardBreach)?;
        let m = code.blocklength();
        let mut d_t = vec![0.0; m];
        for (i, _) in &pairs {
            let per = exact_distortion(&code, &problem.channel, &sensing.profile, i).map_err(CliError::GuardBreach)?;
            for (acc, d) in d_t.iter_mut().zip(per) {
                *acc += d / pairs.len() as f64;
            }
        }
        let d_bar = d_t.iter().sum::<f64>() / m as f64;
        let accepts: Vec<f64> = report.pairs.iter().map(|p| p.accept_probability).collect();
        Some((accepts, ExactSummary {
            lambda1: report.lambda1,
            lambda2: report.lambda2,
            d_t,
            d_bar,
        }))
    } else {
        None
    };

    let sim_pairs: Vec<SimPair> = mc
        .pairs
        .iter()
        .enumerate()
        .map(|(k, p)| SimPair {
            i: p.i.clone(),
            iprime: p.iprime.clone(),
            trials: p.trials,
            accept_rate: p.accept_rate,
            stderr: p.stderr,
            exact_accept: exact.as_ref().map(|(accepts, _)| accepts[k]),
        })
        .collect();
    let exact = exact.map(|(_, summary)| summary);

    let mut pair_table = Table::new(vec!["i", "iprime", "trials", "accept_rate", "stderr", "exact_accept"]);
    for p in &sim_pairs {
        pair_table.push(vec![
            p.i.clone(),
            p.iprime.clone(),
            p.trials.to_string(),
            sig9(p.accept_rate),
            sig9(p.stderr),
            opt_sig9(p.exact_accept, ""),
        ]);
    }
    let mut dist_table = Table::named("distortion", vec!["t", "d_t_hat", "stderr", "exact"]);
    for t in 0..mc.d_t_hat.len() {
        dist_table.push(vec![
            (t + 1).to_string(),
            sig9(mc.d_t_hat[t]),
            sig9(mc.d_t_stderr[t]),
            opt_sig9(exact.as_ref().map(|e| e.d_t[t]), ""),
        ]);
    }
    let mut summary = Table::named("summary", vec!["quantity", "estimate", "stderr", "exact"]);
    let e = exact.as_ref();
    for (name, est, se, ex) in [
        ("lambda1", mc.lambda1_hat, mc.lambda1_stderr, e.map(|e| e.lambda1)),
        ("lambda2", mc.lambda2_hat, mc.lambda2_stderr, e.map(|e| e.lambda2)),
        ("d_bar", mc.d_bar_hat, mc.d_bar_stderr, e.map(|e| e.d_bar)),
        ("rate", code.rate(), 0.0, None),
    ] {
        summary.push(vec![name.into(), sig9(est), sig9(se), opt_sig9(ex, "")]);
    }

    let (pilot_distortion, _) = code.distortion_envelope(&sensing.profile).context("distortion")?;
    let report = SimulateReport {
        code: code.descriptor(),
        budget,
        rate: rate_of_code(&identities, code.blocklength()).context("rate")?,
        pilot_distortion,
        inner_max_error: code.inner().max_error(),
        inner_error_exact: code.inner().errors_exact(),
        image_size: bounds_report(&problem, code.blocklength(), settings.mu()?, Some(budget))?,
        pairs: sim_pairs,
        monte_carlo: mc,
        exact,
    };
    Artifact::new(report, vec![pair_table, dist_table, summary])
}
