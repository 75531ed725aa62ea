//! Command implementations. Each one is a pure function of its config and
//! input files; identical inputs produce byte-identical outputs.

use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde_json::json;

use rbridge::baselines::{fit_enet, fit_ridge, fit_scad, CdOptions};
use rbridge::data::{load_csv, standardize_with, Dataset};
use rbridge::experiments::{
    consistency_experiment, example1_beta, example1_restriction, example1_scenario,
    example2_restriction, example2_scenario, example_arms, mse_formula_check,
    oracle_equivalence_check, run_replications, split_arms, split_evaluate, ArmSummary,
    LambdaRule, Prior, Scenario,
};
use rbridge::restriction::load_restriction;
use rbridge::selection::{cross_validate_bridge, default_lambda_grid, CvGrid, CvResult};
use rbridge::solver::{fit_bridge, fit_rbridge, FitResult, SolverOptions};
use rbridge::{Error as CoreError, PenaltySpec, Restriction};

use crate::config::{
    require_exists, AnalyzeConfig, CheckConfig, ConfigError, CvConfig, FitConfig, PriorEntry,
    SimulateConfig, SCHEMA_VERSION,
};
use crate::output::{fmt_f64, write_csv, write_json, write_text};

pub enum CmdError {
    Usage(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Usage(e.0)
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        CmdError::Core(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e)
    }
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 1,
            CmdError::Io(_) => 1,
            CmdError::Core(e) => match e {
                CoreError::InfeasibleRestriction { .. } => 3,
                CoreError::SingularSystem(_)
                | CoreError::RankDeficient(_)
                | CoreError::AllGridPointsFailed => 2,
                _ => 1,
            },
        }
    }

    pub fn message(&self) -> String {
        match self {
            CmdError::Usage(m) => m.clone(),
            CmdError::Core(e) => e.to_string(),
            CmdError::Io(e) => e.to_string(),
        }
    }
}

type CmdResult = Result<i32, CmdError>;

fn load_prepared(
    dataset: &Path,
    response: &str,
    standardize: bool,
    divisor: crate::config::ScaleDivisorConfig,
) -> Result<Dataset, CmdError> {
    require_exists(dataset, "dataset")?;
    let raw = load_csv(dataset, response)?;
    if standardize {
        let (std_data, _) = standardize_with(&raw, divisor.into())?;
        Ok(std_data)
    } else {
        Ok(raw)
    }
}

fn solver_options(eta: Option<f64>, max_iter: Option<usize>) -> SolverOptions {
    let mut opts = SolverOptions::default();
    if let Some(e) = eta {
        opts.eta = e;
    }
    if let Some(m) = max_iter {
        opts.max_iter = m;
    }
    opts
}

fn need(value: Option<f64>, name: &str, estimator: &str) -> Result<f64, CmdError> {
    value.ok_or_else(|| CmdError::Usage(format!("estimator '{estimator}' requires `{name}`")))
}

pub fn cmd_fit(config: &FitConfig, seed: u64, output_dir: &Path) -> CmdResult {
    let data = load_prepared(
        &config.dataset,
        &config.response,
        config.standardize,
        config.scale_divisor,
    )?;
    let restriction: Option<Restriction> = match &config.restriction {
        Some(path) => {
            require_exists(path, "restriction")?;
            Some(load_restriction(path)?)
        }
        None => None,
    };
    let opts = solver_options(config.eta, config.max_iter);
    let estimator = config.estimator.as_str();
    let fit: FitResult = match estimator {
        "bridge" => {
            let pen = PenaltySpec::bridge(
                need(config.q, "q", estimator)?,
                need(config.lambda, "lambda", estimator)?,
            )?;
            fit_bridge(&data, &pen, &opts)?
        }
        "rbridge" => {
            let rest = restriction.as_ref().ok_or_else(|| {
                CmdError::Usage("estimator 'rbridge' requires `restriction`".into())
            })?;
            let pen = PenaltySpec::bridge(
                need(config.q, "q", estimator)?,
                need(config.lambda, "lambda", estimator)?,
            )?;
            fit_rbridge(&data, &pen, rest, &opts)?
        }
        "ols" => {
            let pen = PenaltySpec::bridge(2.0, 0.0)?;
            fit_bridge(&data, &pen, &opts)?
        }
        "ridge" => fit_ridge(&data, need(config.lambda, "lambda", estimator)?)?,
        "lasso" => fit_enet(
            &data,
            need(config.lambda, "lambda", estimator)?,
            1.0,
            &CdOptions::default(),
        )?,
        "enet" => fit_enet(
            &data,
            need(config.lambda, "lambda", estimator)?,
            need(config.alpha, "alpha", estimator)?,
            &CdOptions::default(),
        )?,
        "scad" => fit_scad(
            &data,
            need(config.lambda, "lambda", estimator)?,
            config.a.unwrap_or(3.7),
            &opts,
        )?,
        other => {
            return Err(CmdError::Usage(format!(
                "unknown estimator '{other}' (expected bridge, rbridge, ridge, lasso, enet, scad or ols)"
            )))
        }
    };

    let mut value = fit.to_json();
    let obj = value.as_object_mut().expect("fit json object");
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("seed".into(), json!(seed));
    obj.insert("estimator".into(), json!(estimator));
    write_json(&output_dir.join(&config.output), &value)?;

    Ok(if fit.converged { 0 } else { 2 })
}

fn cv_result_json(res: &CvResult) -> serde_json::Value {
    let cve_rows: Vec<Vec<f64>> = (0..res.lambdas.len())
        .map(|i| (0..res.qs.len()).map(|j| res.cve[[i, j]]).collect())
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "seed": res.seed,
        "lambdas": res.lambdas,
        "qs": res.qs,
        "cve": cve_rows,
        "best_lambda": res.best_lambda,
        "best_q": res.best_q,
        "best_index": [res.best_index.0, res.best_index.1],
        "fold_assignments": res.fold_assignments,
        "tie_break": "largest lambda, then largest q",
    })
}

pub fn cmd_cv(config: &CvConfig, seed: u64, output_dir: &Path) -> CmdResult {
    let data = load_prepared(
        &config.dataset,
        &config.response,
        config.standardize,
        config.scale_divisor,
    )?;
    let restriction: Option<Restriction> = match &config.restriction {
        Some(path) => {
            require_exists(path, "restriction")?;
            Some(load_restriction(path)?)
        }
        None => None,
    };
    let lambdas = match &config.lambdas {
        Some(v) => v.clone(),
        None => default_lambda_grid(&data, config.n_lambda.unwrap_or(15))?,
    };
    let qs = config.qs.clone().unwrap_or_else(CvGrid::default_qs);
    let grid = CvGrid::new(lambdas, qs, config.k.unwrap_or(10))?;
    let opts = solver_options(config.eta, config.max_iter);
    let res = cross_validate_bridge(&data, &grid, restriction.as_ref(), &opts, seed)?;

    write_json(&output_dir.join(&config.result_output), &cv_result_json(&res))?;

    let rows: Vec<Vec<String>> = res
        .surface()
        .iter()
        .map(|r| vec![fmt_f64(r.q), fmt_f64(r.log_lambda), fmt_f64(r.cve)])
        .collect();
    write_csv(
        &output_dir.join(&config.surface_output),
        seed,
        &["q", "log_lambda", "cve"],
        &rows,
    )?;
    Ok(0)
}

fn summary_rows(summaries: &[ArmSummary]) -> Vec<Vec<String>> {
    summaries
        .iter()
        .map(|s| {
            vec![
                s.label.clone(),
                fmt_f64(s.summary.mme),
                fmt_f64(s.summary.c),
                fmt_f64(s.summary.ic),
                fmt_f64(s.summary.u_fit),
                fmt_f64(s.summary.c_fit),
                fmt_f64(s.summary.o_fit),
                s.summary.nreps.to_string(),
                s.summary.failures.to_string(),
            ]
        })
        .collect()
}

pub fn cmd_simulate(config: &SimulateConfig, seed: u64, output_dir: &Path) -> CmdResult {
    let tuning = config
        .tuning
        .as_ref()
        .map(|t| t.to_spec())
        .unwrap_or_default();
    let opts = SolverOptions::default();

    let (scenario, restrictions): (Scenario, Vec<(String, Restriction)>) =
        match config.scenario.as_str() {
            "example1" => {
                let n = config.n.ok_or_else(|| {
                    CmdError::Usage("scenario example1 requires `n` (40 or 60)".into())
                })?;
                let scenario = example1_scenario(1, n, config.sigma, config.rho)?;
                let restrictions = (1..=4)
                    .map(|case| Ok((format!("RBRIDGE{case}"), example1_restriction(case)?)))
                    .collect::<Result<Vec<_>, CoreError>>()?;
                (scenario, restrictions)
            }
            "example2" => {
                let p = config.p.ok_or_else(|| {
                    CmdError::Usage("scenario example2 requires `p` (100 or 200)".into())
                })?;
                let scenario = example2_scenario(1, p, config.sigma, config.rho)?;
                let restrictions = (1..=4)
                    .map(|case| Ok((format!("RBRIDGE{case}"), example2_restriction(case, p)?)))
                    .collect::<Result<Vec<_>, CoreError>>()?;
                (scenario, restrictions)
            }
            other => {
                return Err(CmdError::Usage(format!(
                    "unknown scenario '{other}' (expected example1 or example2)"
                )))
            }
        };

    let arms = example_arms(scenario.true_support(), restrictions, &tuning, &opts);
    let summaries = run_replications(&scenario, &arms, config.nreps, seed)?;

    write_csv(
        &output_dir.join(&config.output),
        seed,
        &["estimator", "mme", "c", "ic", "u_fit", "c_fit", "o_fit", "nreps", "failures"],
        &summary_rows(&summaries),
    )?;

    if config.raw_me {
        let mut rows = Vec::new();
        for s in &summaries {
            for (rep, me) in &s.raw_me {
                rows.push(vec![s.label.clone(), rep.to_string(), fmt_f64(*me)]);
            }
        }
        write_csv(
            &output_dir.join("raw_me.csv"),
            seed,
            &["estimator", "replication", "me"],
            &rows,
        )?;
    }
    Ok(0)
}

pub fn cmd_analyze(config: &AnalyzeConfig, seed: u64, output_dir: &Path) -> CmdResult {
    require_exists(&config.dataset, "dataset")?;
    require_exists(&config.priors, "priors")?;
    let raw = load_csv(&config.dataset, &config.response)?;
    let (data, _) = standardize_with(&raw, config.scale_divisor.into())?;

    let text = std::fs::read_to_string(&config.priors)?;
    let entries: Vec<PriorEntry> = serde_json::from_str(&text).map_err(CoreError::from)?;
    let mut priors = Vec::with_capacity(entries.len());
    for e in entries {
        let beta = Array1::from(e.beta);
        if beta.len() != data.p() {
            return Err(CmdError::Usage(format!(
                "prior '{}' has {} coefficients, dataset has {}",
                e.label,
                beta.len(),
                data.p()
            )));
        }
        priors.push(Prior {
            label: e.label,
            restriction: e.restriction.into_restriction()?,
            beta,
        });
    }

    let nreps = config.nreps.unwrap_or(if data.n() > data.p() { 500 } else { 100 });
    let tuning = config
        .tuning
        .as_ref()
        .map(|t| t.to_spec())
        .unwrap_or_default();
    let arms = split_arms(&priors, &tuning, &SolverOptions::default());
    let rows = split_evaluate(&data, &arms, &priors, nreps, seed)?;

    let mut header: Vec<String> = vec!["estimator".into(), "mse_y".into(), "rmse_y".into()];
    for (i, p) in priors.iter().enumerate() {
        let _ = p;
        header.push(format!("mse_beta0{}", i + 1));
        header.push(format!("rmse_beta0{}", i + 1));
    }
    header.push("n_vars".into());
    header.push("failures".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.label.clone(), fmt_f64(r.mse_y), fmt_f64(r.rmse_y)];
            for i in 0..priors.len() {
                row.push(fmt_f64(r.mse_beta0[i]));
                row.push(fmt_f64(r.rmse_beta0[i]));
            }
            row.push(fmt_f64(r.n_vars));
            row.push(r.failures.to_string());
            row
        })
        .collect();
    write_csv(&output_dir.join(&config.output), seed, &header_refs, &csv_rows)?;
    Ok(0)
}

fn parse_lambda_rule(spec: Option<&str>) -> Result<LambdaRule, CmdError> {
    match spec {
        None | Some("sqrt_n") => Ok(LambdaRule::SqrtN),
        Some("linear_n") => Ok(LambdaRule::LinearN),
        Some(other) => other
            .parse::<f64>()
            .map(LambdaRule::Fixed)
            .map_err(|_| CmdError::Usage(format!("unknown lambda rule '{other}'"))),
    }
}

pub fn cmd_check(config: &CheckConfig, seed: u64, output_dir: &Path) -> CmdResult {
    let mut report = String::new();
    report.push_str(&format!("# schema_version={SCHEMA_VERSION} seed={seed}\n"));
    let mut all_pass = true;

    match config.id.as_str() {
        "mse_formula" => {
            let draws = config.draws.unwrap_or(100_000);
            let sigmas = config.sigmas.clone().unwrap_or_else(|| vec![1.0, 3.0]);
            let tol = config.tol.unwrap_or(0.02);
            report.push_str(&format!(
                "check mse_formula: {draws} draws, tolerance {}\n",
                fmt_f64(tol)
            ));
            for check in mse_formula_check(draws, &sigmas, tol, seed)? {
                all_pass &= check.pass;
                report.push_str(&format!(
                    "sigma={} analytic={} empirical={} rel_gap={} {}\n",
                    fmt_f64(check.sigma),
                    fmt_f64(check.analytic),
                    fmt_f64(check.empirical),
                    fmt_f64(check.rel_gap),
                    if check.pass { "PASS" } else { "FAIL" }
                ));
            }
        }
        "consistency" => {
            let ns = config.ns.clone().unwrap_or_else(|| vec![40, 80, 160, 320]);
            let nreps = config.nreps.unwrap_or(500);
            let q = config.q.unwrap_or(1.0);
            let rule = parse_lambda_rule(config.lambda_rule.as_deref())?;
            let template = Scenario::new(
                "consistency-template",
                ns[0],
                example1_beta(),
                1.0,
                0.5,
                example1_restriction(1)?,
            )?;
            let rep = consistency_experiment(&ns, &rule, q, &template, nreps, seed)?;
            report.push_str(&format!(
                "check consistency: {} with q={}, {} reps\n",
                rule.describe(),
                fmt_f64(q),
                nreps
            ));
            if !rep.hypothesis_satisfied {
                report.push_str(
                    "WARNING: hypothesis violated: lambda_n is not o(n), consistency is not implied\n",
                );
            }
            for (i, n) in rep.ns.iter().enumerate() {
                report.push_str(&format!(
                    "n={n} lambda={} median_sq_error={}\n",
                    fmt_f64(rep.lambdas[i]),
                    fmt_f64(rep.medians[i])
                ));
            }
            let pass = rep.monotone && rep.hypothesis_satisfied;
            all_pass &= pass;
            report.push_str(&format!(
                "decreasing steps: {} of {} {}\n",
                rep.decreasing_steps,
                rep.ns.len() - 1,
                if pass { "PASS" } else { "FAIL" }
            ));
        }
        "oracle_equivalence" => {
            let instances = config.instances.unwrap_or(100);
            let tol = config.tol.unwrap_or(1e-8);
            let rep = oracle_equivalence_check(instances, tol, seed)?;
            all_pass &= rep.pass;
            report.push_str(&format!(
                "check oracle_equivalence: {} instances at q=2, tolerance {}\n",
                rep.instances,
                fmt_f64(tol)
            ));
            report.push_str(&format!(
                "max gap vs closed-form ridge: {}\nmax gap vs constrained ridge KKT: {}\n{}\n",
                fmt_f64(rep.max_gap_bridge),
                fmt_f64(rep.max_gap_rbridge),
                if rep.pass { "PASS" } else { "FAIL" }
            ));
        }
        other => {
            return Err(CmdError::Usage(format!(
                "unknown check '{other}' (expected mse_formula, consistency or oracle_equivalence)"
            )))
        }
    }

    report.push_str(&format!("overall: {}\n", if all_pass { "PASS" } else { "FAIL" }));
    write_text(&output_dir.join(&config.output), &report)?;
    print!("{report}");
    Ok(if all_pass { 0 } else { 2 })
}

pub fn resolve_output_dir(cli_dir: Option<PathBuf>, config_dir: Option<PathBuf>) -> PathBuf {
    cli_dir
        .or(config_dir)
        .unwrap_or_else(|| PathBuf::from("."))
}
