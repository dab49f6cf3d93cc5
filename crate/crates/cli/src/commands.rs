use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use liftlab::dynamics::{run_admm, run_gd};
use liftlab::experiments::{beta_hats, summarize, sweep, write_csv, Differencing, Family};
use liftlab::export::export_lifting_pair;
use liftlab::graphs::{factor_graph, GraphSpec};
use liftlab::lifting::{collapse, lazy_cycle_chain, lift_cycle_chain, mixing_time, verify_lifting};
use liftlab::operators::{build_t_a, build_t_g, AdmmParams, LiftingPair};
use liftlab::spectral::convergence_rate;
use liftlab::tuning::{tune_admm, tune_gd_closed_form, tune_gd_search, AdmmSearchSpec, TuneStatus};
use liftlab::{FactorGraphF64, GraphF64};
use nalgebra::DVector;
use serde_json::{json, Value};
use thiserror::Error;

use crate::args::{
    Alg, ExportArgs, FamilyArg, GdMethod, MixArgs, RateArgs, SearchArgs, SimulateArgs, SweepArgs, TuneArgs, VerifyArgs,
};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, graph specs or parameter values.
    #[error("{0}")]
    Usage(String),
    /// The computation itself failed.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

/// What a command prints: a JSON object with inputs and outputs, a human
/// summary, and whether the run counts as a success.
pub struct Report {
    pub json: Value,
    pub human: String,
    pub ok: bool,
    /// Print to stderr because stdout carries data (sweep CSV).
    pub to_stderr: bool,
}

impl Report {
    fn new(json: Value, human: String, ok: bool) -> Self {
        Report { json, human, ok, to_stderr: false }
    }
}

/// Six significant digits for human output.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return x.to_string();
    }
    let r: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    if (1e-4..1e6).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

fn load_graph(text: &str) -> Result<(GraphSpec, GraphF64), CliError> {
    let spec: GraphSpec = text.parse().map_err(usage)?;
    let g = spec.build::<f64>().map_err(|e| usage(format!("graph {text}: {e}")))?;
    Ok((spec, g))
}

fn uniform_params(fg: &FactorGraphF64, gamma: f64, rho: f64) -> Result<AdmmParams<f64>, CliError> {
    AdmmParams::uniform(gamma, rho, fg.num_ehat()).map_err(usage)
}

fn write_json_file(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path).map_err(domain)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(domain)?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(domain)
}

pub fn verify(a: &VerifyArgs) -> Result<Report, CliError> {
    let (spec, g) = load_graph(&a.graph.graph)?;
    let fg = factor_graph(&g);
    let params = uniform_params(&fg, a.gamma, a.rho)?;
    let pair = LiftingPair::build(&fg, &params, None, 1e-12).map_err(domain)?;
    let cert = verify_lifting(&pair, &fg, a.tol).map_err(domain)?;
    let record = cert.record(&spec.to_string(), g.n());
    if let Some(path) = &a.out {
        write_json_file(path, &record)?;
    }
    let mut human = String::new();
    let _ = writeln!(human, "graph {} (n = {}, |Ê| = {})", spec, g.n(), fg.num_ehat());
    let _ = writeln!(human, "gamma {}  rho {}  alpha {}", sig6(a.gamma), sig6(a.rho), sig6(record.alpha));
    let _ = writeln!(human, "residual_vec {}", sig6(record.residual_vec));
    let _ = writeln!(human, "residual_mat {}", sig6(record.residual_mat));
    let (r, c) = cert.min_entry_index;
    let _ = writeln!(human, "min entry of M_A {} at ({r}, {c})", sig6(record.min_entry));
    let _ = writeln!(human, "is_markov_lifting {}", record.is_markov_lifting);
    let _ = write!(human, "lifting identity {} (tol {})", if record.passed { "holds" } else { "VIOLATED" }, sig6(a.tol));
    let json = json!({
        "command": "verify",
        "inputs": { "graph": spec.to_string(), "gamma": a.gamma, "rho": a.rho, "tol": a.tol },
        "certificate": record,
    });
    Ok(Report::new(json, human, record.passed))
}

pub fn rate(a: &RateArgs) -> Result<Report, CliError> {
    let (spec, g) = load_graph(&a.graph.graph)?;
    let fg = factor_graph(&g);
    let (t, inputs) = match a.alg {
        Alg::Gd => {
            let alpha = a.alpha.ok_or_else(|| usage("--alg gd needs --alpha"))?;
            if !alpha.is_finite() {
                return Err(usage("--alpha must be finite"));
            }
            let t = build_t_g(&fg, fg.weights(), alpha).map_err(usage)?;
            (t, json!({ "graph": spec.to_string(), "alg": "gd", "alpha": alpha, "unit_tol": a.unit_tol }))
        }
        Alg::Admm => {
            let (gamma, rho) = a.gamma.zip(a.rho).ok_or_else(|| usage("--alg admm needs --gamma and --rho"))?;
            let t = build_t_a(&fg, fg.weights(), &uniform_params(&fg, gamma, rho)?).map_err(usage)?;
            (t, json!({ "graph": spec.to_string(), "alg": "admm", "gamma": gamma, "rho": rho, "unit_tol": a.unit_tol }))
        }
    };
    let report = convergence_rate(&t, a.unit_tol).map_err(domain)?;
    if report.unit_count > 1 {
        eprintln!(
            "warning: {} unit-modulus eigenvalues, more than the one-dimensional consensus space",
            report.unit_count
        );
    }
    let record = report.record();
    let mut human = String::new();
    let _ = writeln!(human, "graph {} ({}x{} matrix)", spec, t.nrows(), t.ncols());
    if report.diverged {
        let top = report.eigenvalues.first().map_or(f64::NAN, |z| z.norm());
        let _ = writeln!(human, "diverged: spectral radius {}", sig6(top));
    }
    if report.tau.is_nan() {
        let _ = writeln!(human, "tau undefined (no eigenvalue inside the unit circle)");
    } else {
        let _ = writeln!(human, "tau {}", sig6(report.tau));
    }
    if let Some(time) = report.convergence_time() {
        let _ = writeln!(human, "R {}", sig6(time.r));
        let _ = writeln!(human, "convergence time (C = 1) {} exact, {} approx", sig6(time.exact), sig6(time.approx));
    }
    let _ = writeln!(human, "unit eigenvalues {}", report.unit_count);
    let _ = write!(human, "leading eigenvalues:");
    for z in report.eigenvalues.iter().take(a.show) {
        let _ = write!(human, "\n  {} {} {}i  |{}|", sig6(z.re), if z.im < 0.0 { "-" } else { "+" }, sig6(z.im.abs()), sig6(z.norm()));
    }
    let json = json!({ "command": "rate", "inputs": inputs, "report": record });
    Ok(Report::new(json, human, !report.diverged))
}

fn search_spec(a: &SearchArgs) -> Result<AdmmSearchSpec, CliError> {
    let mut s = AdmmSearchSpec::default();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        s.apply_config(&text).map_err(usage)?;
    }
    if let Some(v) = a.gamma_min {
        s.gamma_min = v;
    }
    if let Some(v) = a.gamma_max {
        s.gamma_max = v;
    }
    if let Some(v) = a.gamma_points {
        s.gamma_points = v;
    }
    if let Some(v) = a.rho_min {
        s.rho_min = v;
    }
    if let Some(v) = a.rho_max {
        s.rho_max = v;
    }
    if let Some(v) = a.rho_points {
        s.rho_points = v;
    }
    if let Some(v) = a.refine_tol {
        s.refine_tol = v;
    }
    if let Some(v) = a.refine_budget {
        s.refine_budget = v;
    }
    s.validate().map_err(usage)?;
    Ok(s)
}

pub fn tune(a: &TuneArgs) -> Result<Report, CliError> {
    let (spec, g) = load_graph(&a.graph.graph)?;
    let fg = factor_graph(&g);
    let (result, inputs) = match a.alg {
        Alg::Gd => {
            let result = match a.method {
                GdMethod::Closed => tune_gd_closed_form(&fg, fg.weights()),
                GdMethod::Search => tune_gd_search(&fg, fg.weights(), a.tol, a.budget),
            }
            .map_err(domain)?;
            let method = if a.method == GdMethod::Closed { "closed" } else { "search" };
            (result, json!({ "graph": spec.to_string(), "alg": "gd", "method": method, "tol": a.tol, "budget": a.budget }))
        }
        Alg::Admm => {
            let search = search_spec(&a.search)?;
            let result = tune_admm(&fg, fg.weights(), &search).map_err(domain)?;
            (result, json!({ "graph": spec.to_string(), "alg": "admm", "search": search }))
        }
    };
    let mut human = String::new();
    let _ = writeln!(human, "graph {}", spec);
    match (result.alpha(), result.gamma_rho()) {
        (Some(alpha), _) => {
            let _ = writeln!(human, "alpha* {}", sig6(alpha));
        }
        (_, Some((gamma, rho))) => {
            let _ = writeln!(human, "gamma* {}  rho* {}", sig6(gamma), sig6(rho));
        }
        _ => {}
    }
    let _ = writeln!(human, "tau* {}", sig6(result.tau));
    let _ = writeln!(human, "R {}", sig6(result.r));
    let _ = writeln!(human, "evaluations {}  refinement iterations {}", result.evaluations, result.refinement_iterations);
    let _ = write!(human, "status {}", result.status);
    let ok = result.status != TuneStatus::Failed;
    let json = json!({ "command": "tune", "inputs": inputs, "result": result });
    Ok(Report::new(json, human, ok))
}

pub fn sweep_cmd(a: &SweepArgs) -> Result<Report, CliError> {
    let family = match a.family {
        FamilyArg::Cycle => Family::Cycle,
        FamilyArg::Torus => Family::Torus,
        FamilyArg::Barbell => Family::Barbell,
    };
    let indices: Vec<usize> = match (&a.indices, a.from, a.to) {
        (Some(list), _, _) => list.clone(),
        (None, Some(from), Some(to)) => {
            if a.step == 0 || from > to {
                return Err(usage("need --from <= --to and --step >= 1"));
            }
            (from..=to).step_by(a.step).collect()
        }
        _ => return Err(usage("give --from and --to, or --indices")),
    };
    if indices.is_empty() || indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("indices must be non-empty and strictly increasing"));
    }
    for &k in &indices {
        family.graph(k).map_err(|e| usage(format!("{family}:{k}: {e}")))?;
    }
    let search = search_spec(&a.search)?;
    let records = sweep(family, &indices, &search).map_err(domain)?;
    let differencing = if a.parity { Differencing::SameParity } else { Differencing::Consecutive };
    let betas = if records.len() >= 2 { Some(beta_hats(&records, differencing).map_err(domain)?) } else { None };
    match &a.out {
        Some(path) => {
            let file = BufWriter::new(File::create(path).map_err(domain)?);
            write_csv(file, &records, betas.as_ref()).map_err(domain)?;
        }
        None => write_csv(std::io::stdout().lock(), &records, betas.as_ref()).map_err(domain)?,
    }
    let summary = betas.as_ref().map(|b| summarize(family, b));
    if let (Some(path), Some(s)) = (&a.summary, &summary) {
        write_json_file(path, s)?;
    }
    let failed: Vec<usize> = records.iter().filter(|r| r.failed()).map(|r| r.index).collect();
    let not_dominated: Vec<usize> = records.iter().filter(|r| !r.failed() && !r.admm_dominates()).map(|r| r.index).collect();

    let mut human = String::new();
    let _ = writeln!(human, "{family}: {} records", records.len());
    for (i, r) in records.iter().enumerate() {
        let b1 = betas.as_ref().and_then(|b| b.beta1[i]).map_or("-".to_string(), sig6);
        let b2 = betas.as_ref().and_then(|b| b.beta2[i]).map_or("-".to_string(), sig6);
        let _ = writeln!(
            human,
            "  index {:>4}  n {:>5}  R_G {}  R_A {}  beta1 {}  beta2 {}  {}",
            r.index,
            r.n,
            sig6(r.r_g),
            sig6(r.r_a),
            b1,
            b2,
            r.admm_status
        );
    }
    if let Some(s) = &summary {
        let show = |v: Option<f64>| v.map_or("-".to_string(), sig6);
        let _ = writeln!(human, "beta1 last {}  beta2 last {}  max beta1 {}", show(s.beta1_last), show(s.beta2_last), show(s.max_beta1));
    }
    if !not_dominated.is_empty() {
        let _ = writeln!(human, "tau_A* > tau_G* at indices {not_dominated:?}");
    }
    if !failed.is_empty() {
        let _ = writeln!(human, "tuning failed at indices {failed:?}");
    }
    let json = json!({
        "command": "sweep",
        "inputs": {
            "family": family,
            "indices": indices,
            "parity": a.parity,
            "out": a.out.as_ref().map(|p| p.display().to_string()),
            "search": search,
        },
        "summary": summary,
        "records": records.len(),
        "failed": failed,
        "not_dominated": not_dominated,
    });
    let mut report = Report::new(json, human.trim_end().to_string(), failed.is_empty());
    report.to_stderr = a.out.is_none();
    Ok(report)
}

fn initial_values(text: &str, n: usize) -> Result<DVector<f64>, CliError> {
    if let Some(i) = text.strip_prefix("e:") {
        let i: usize = i.parse().map_err(|_| usage(format!("bad unit vector index in {text:?}")))?;
        if i >= n {
            return Err(usage(format!("unit vector index {i} out of range for {n} vertices")));
        }
        let mut z = DVector::zeros(n);
        z[i] = 1.0;
        return Ok(z);
    }
    if text == "random" {
        use rand::{Rng, SeedableRng};
        let seed = match std::env::var("LIFTLAB_SEED") {
            Ok(s) => s.parse().map_err(|_| usage(format!("LIFTLAB_SEED must be an integer, got {s:?}")))?,
            Err(_) => 0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        return Ok(DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)));
    }
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("bad value {v:?} in --z0"))))
        .collect::<Result<_, _>>()?;
    if values.len() != n {
        return Err(usage(format!("--z0 has {} values, the graph has {n} vertices", values.len())));
    }
    Ok(DVector::from_vec(values))
}

pub fn simulate(a: &SimulateArgs) -> Result<Report, CliError> {
    let (spec, g) = load_graph(&a.graph.graph)?;
    let fg = factor_graph(&g);
    let z0 = initial_values(&a.z0, g.n())?;
    let mut human = String::new();
    let _ = writeln!(human, "graph {}  steps {}", spec, a.steps);
    let (inputs, outputs, ok) = match a.alg {
        Alg::Admm => {
            let params = uniform_params(&fg, a.gamma, a.rho)?;
            let traj = run_admm(&fg, fg.weights(), &params, &z0, a.steps).map_err(domain)?;
            let deviation = if a.check_linear {
                let t_a = build_t_a(&fg, fg.weights(), &params).map_err(domain)?;
                let mut linear = traj.states[0].n.clone();
                let mut worst: f64 = 0.0;
                for state in &traj.states[1..] {
                    linear = &t_a * linear;
                    worst = worst.max((&state.n - &linear).amax());
                }
                Some(worst)
            } else {
                None
            };
            if let Some(path) = &a.out {
                traj.write_csv(BufWriter::new(File::create(path).map_err(domain)?), a.with_state).map_err(domain)?;
            }
            let last = *traj.residuals.last().expect("trajectory holds the initial state");
            let _ = writeln!(human, "final residual {}", sig6(last));
            let _ = writeln!(human, "relation residual {}", sig6(traj.relation_residual));
            let _ = writeln!(human, "reconstruction error {}", sig6(traj.reconstruction_error));
            if let Some(d) = deviation {
                let verdict = if d < a.tol { "ok" } else { "FAILED" };
                let _ = writeln!(human, "max deviation from T_A^t n0 {} (< {}: {verdict})", sig6(d), sig6(a.tol));
            }
            let ok = !traj.diverged && deviation.is_none_or(|d| d < a.tol);
            let outputs = json!({
                "steps_run": traj.states.len() - 1,
                "diverged": traj.diverged,
                "final_residual": last,
                "relation_residual": traj.relation_residual,
                "reconstruction_error": traj.reconstruction_error,
                "max_linear_deviation": deviation,
            });
            if traj.diverged {
                let _ = writeln!(human, "diverged after {} steps", traj.states.len() - 1);
            }
            let inputs = json!({
                "graph": spec.to_string(), "alg": "admm", "gamma": a.gamma, "rho": a.rho,
                "steps": a.steps, "z0": a.z0, "check_linear": a.check_linear, "tol": a.tol,
            });
            (inputs, outputs, ok)
        }
        Alg::Gd => {
            let alpha = a.alpha.ok_or_else(|| usage("--alg gd needs --alpha"))?;
            if a.check_linear {
                return Err(usage("--check-linear applies to ADMM only"));
            }
            let traj = run_gd(&fg, fg.weights(), alpha, &z0, a.steps).map_err(usage)?;
            if let Some(path) = &a.out {
                traj.write_csv(BufWriter::new(File::create(path).map_err(domain)?), a.with_state).map_err(domain)?;
            }
            let last = *traj.residuals.last().expect("trajectory holds the initial state");
            let _ = writeln!(human, "final residual {}", sig6(last));
            if traj.diverged {
                let _ = writeln!(human, "diverged after {} steps", traj.states.len() - 1);
            }
            let outputs = json!({
                "steps_run": traj.states.len() - 1,
                "diverged": traj.diverged,
                "final_residual": last,
                "mean": traj.last().mean(),
            });
            let inputs = json!({ "graph": spec.to_string(), "alg": "gd", "alpha": alpha, "steps": a.steps, "z0": a.z0 });
            (inputs, outputs, !traj.diverged)
        }
    };
    let json = json!({ "command": "simulate", "inputs": inputs, "outputs": outputs });
    Ok(Report::new(json, human.trim_end().to_string(), ok))
}

pub fn mix(a: &MixArgs) -> Result<Report, CliError> {
    let (kind, size) = a.chain.split_once(':').ok_or_else(|| usage("--chain must be lifted-cycle:N or lazy-cycle:N"))?;
    let n: usize = size.parse().map_err(|_| usage(format!("bad size in {:?}", a.chain)))?;
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(usage("--eps must lie in (0, 1)"));
    }
    let mut human = String::new();
    let (inputs, outputs) = match kind {
        "lifted-cycle" => {
            let p = a.switch_prob.unwrap_or(1.0 / n.max(1) as f64);
            let (chain, s) = lift_cycle_chain(n, p).map_err(usage)?;
            let base = collapse(&chain, &s).map_err(domain)?;
            let t_lifted = mixing_time(&chain, a.eps, a.t_max).map_err(domain)?;
            let t_base = mixing_time(&base, a.eps, a.t_max).map_err(domain)?;
            let _ = writeln!(human, "chain lifted-cycle:{n} (switch {}, {} states)", sig6(p), chain.states());
            let _ = writeln!(human, "mixing_time {t_lifted}");
            let _ = write!(human, "collapsed_mixing_time {t_base}");
            (
                json!({ "chain": a.chain, "switch": p, "eps": a.eps, "t_max": a.t_max }),
                json!({ "mixing_time": t_lifted, "states": chain.states(), "collapsed_mixing_time": t_base }),
            )
        }
        "lazy-cycle" => {
            let chain = lazy_cycle_chain(n, a.hold).map_err(usage)?;
            let t = mixing_time(&chain, a.eps, a.t_max).map_err(domain)?;
            let _ = writeln!(human, "chain lazy-cycle:{n} (hold {}, {} states)", sig6(a.hold), chain.states());
            let _ = write!(human, "mixing_time {t}");
            (
                json!({ "chain": a.chain, "hold": a.hold, "eps": a.eps, "t_max": a.t_max }),
                json!({ "mixing_time": t, "states": chain.states() }),
            )
        }
        other => return Err(usage(format!("unknown chain kind {other:?}"))),
    };
    let json = json!({ "command": "mix", "inputs": inputs, "outputs": outputs });
    Ok(Report::new(json, human, true))
}

pub fn export(a: &ExportArgs) -> Result<Report, CliError> {
    let (spec, g) = load_graph(&a.graph.graph)?;
    let fg = factor_graph(&g);
    let params = uniform_params(&fg, a.gamma, a.rho)?;
    let pair = LiftingPair::build(&fg, &params, None, 1e-12).map_err(domain)?;
    let manifest = export_lifting_pair(&a.out, &spec.to_string(), &fg, &pair).map_err(domain)?;
    let mut human = String::new();
    let _ = writeln!(human, "wrote {} matrices for {} to {}", manifest.matrices.len(), spec, a.out.display());
    for (name, m) in &manifest.matrices {
        let _ = writeln!(human, "  {name}: {} ({}x{})", m.file, m.rows, m.cols);
    }
    let _ = write!(human, "  manifest: pair.json");
    let json = json!({
        "command": "export-matrices",
        "inputs": { "graph": spec.to_string(), "gamma": a.gamma, "rho": a.rho, "out": a.out.display().to_string() },
        "manifest": manifest,
    });
    Ok(Report::new(json, human, true))
}
