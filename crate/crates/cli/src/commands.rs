//! The four verification subcommands.

use blochscan_core::bloch::{BasisFamily, DensityOperator, MeasBasis};
use blochscan_core::dense::{DenseProjector, DenseState, HARD_CAP};
use blochscan_core::measurement::{
    entanglement_fidelity, p_yes, prop1_classify, CollectiveMeasurement, LayerSide,
};
use blochscan_core::scanner::{run_protocol, AxisEstimate, ScanConfig, ScanResult};
use blochscan_core::types::{lemma1_check, required_n, SearchMode, TypicalSetSpec};
use rand::Rng;
use serde::Serialize;

use crate::config::{self, Cli, Command};
use crate::output::{num, opt, Format, Sink, SCHEMA_VERSION};
use crate::sampling::{random_bloch_ball, rng_for, sub_seed};
use crate::CliError;

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Prop1(args) => {
            let r = args.resolve()?;
            cmd_prop1(r.params, Sink::open(r.out.as_ref())?, r.format)
        }
        Command::Scan(args) => {
            let r = args.resolve()?;
            cmd_scan(r.params, Sink::open(r.out.as_ref())?, r.format)
        }
        Command::Oracle(args) => {
            let r = args.resolve()?;
            cmd_oracle(r.params, Sink::open(r.out.as_ref())?, r.format)
        }
        Command::Lemma1(args) => {
            let r = args.resolve()?;
            cmd_lemma1(r.params, Sink::open(r.out.as_ref())?, r.format)
        }
    }
}

// ---------------------------------------------------------------------------
// prop1
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Prop1Row {
    n: u64,
    p_yes_in: f64,
    p_yes_out: f64,
    bound_out: f64,
    fidelity_in: f64,
    fidelity_out: f64,
}

#[derive(Serialize)]
struct Prop1Report {
    schema_version: u32,
    params: config::Prop1Params,
    required_n_inside: u64,
    required_n_outside: u64,
    rows: Vec<Prop1Row>,
}

fn cmd_prop1(p: config::Prop1Params, mut sink: Sink, format: Format) -> Result<(), CliError> {
    if p.n_step == 0 || p.n_start == 0 || p.n_stop < p.n_start {
        return Err(CliError::Usage(format!(
            "bad n grid: start {} stop {} step {}",
            p.n_start, p.n_stop, p.n_step
        )));
    }
    let inside = DensityOperator::from_bloch(p.inside)?;
    let outside = DensityOperator::from_bloch(p.outside)?;
    let basis = MeasBasis::new(p.family, p.angle);
    if basis.layer_distance(&inside) > p.eps {
        return Err(CliError::Usage(format!(
            "inside state has layer distance {} > eps = {}",
            basis.layer_distance(&inside),
            p.eps
        )));
    }
    if basis.layer_distance(&outside) <= p.eps {
        return Err(CliError::Usage(format!(
            "outside state has layer distance {} <= eps = {}",
            basis.layer_distance(&outside),
            p.eps
        )));
    }

    let required_n_inside = required_n(
        p.eps,
        p.delta,
        &basis.project(&inside),
        SearchMode::ExactTail,
    )?;
    let required_n_outside = required_n(
        p.eps,
        p.delta,
        &basis.project(&outside),
        SearchMode::ExactTail,
    )?;

    let mut rows = Vec::new();
    for n in (p.n_start..=p.n_stop).step_by(p.n_step as usize) {
        let m = CollectiveMeasurement::new(basis, n, p.eps)?;
        let p_in = p_yes(&inside, &m);
        let cls_out = prop1_classify(&outside, &m);
        let p_out = cls_out.stats.p_yes;
        let bound_out = cls_out.stats.exponent_bound;
        if cls_out.stats.side != LayerSide::Outside {
            return Err(CliError::Assertion(format!(
                "outside state classified inside at n = {n}"
            )));
        }
        if bound_out < p_out - 1e-12 {
            return Err(CliError::Assertion(format!(
                "tail bound {bound_out} below exact mass {p_out} at n = {n}"
            )));
        }
        rows.push(Prop1Row {
            n,
            p_yes_in: p_in,
            p_yes_out: p_out,
            bound_out,
            fidelity_in: entanglement_fidelity(p_in),
            fidelity_out: entanglement_fidelity(p_out),
        });
    }

    eprintln!("required_n_inside={required_n_inside} required_n_outside={required_n_outside}");
    match format {
        Format::Csv => {
            sink.line("n,p_yes_in,p_yes_out,bound_out,fidelity_in,fidelity_out")?;
            for r in &rows {
                sink.line(&format!(
                    "{},{},{},{},{},{}",
                    r.n,
                    num(r.p_yes_in),
                    num(r.p_yes_out),
                    num(r.bound_out),
                    num(r.fidelity_in),
                    num(r.fidelity_out)
                ))?;
            }
        }
        Format::Json => sink.json(&Prop1Report {
            schema_version: SCHEMA_VERSION,
            params: p,
            required_n_inside,
            required_n_outside,
            rows,
        })?,
    }
    sink.finish()
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ScanTrial {
    trial: u64,
    seed: u64,
    bloch: [f64; 3],
    result: ScanResult,
}

#[derive(Serialize)]
struct ScanSummary {
    trials: u64,
    resolved: u64,
    degenerate: u64,
    median_angular_error: Option<f64>,
    q25_angular_error: Option<f64>,
    q75_angular_error: Option<f64>,
    mean_steps: f64,
}

#[derive(Serialize)]
struct ScanReport {
    schema_version: u32,
    params: config::ScanParams,
    trials: Vec<ScanTrial>,
    summary: ScanSummary,
}

fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

fn cmd_scan(p: config::ScanParams, mut sink: Sink, format: Format) -> Result<(), CliError> {
    if p.trials == 0 {
        return Err(CliError::Usage("trials must be >= 1".into()));
    }
    if p.mode == blochscan_core::scanner::ScanMode::DenseExact && p.n as usize > p.dense_cap {
        return Err(CliError::Capacity(format!(
            "n = {} exceeds the dense cap {}",
            p.n, p.dense_cap
        )));
    }
    let base_cfg = ScanConfig::new(p.eps, p.n, p.mode, 0)?
        .with_refine(p.refine)
        .with_dense_cap(p.dense_cap)?;

    let mut trials = Vec::new();
    for trial in 0..p.trials {
        let trial_seed = sub_seed(p.seed, 2 * trial);
        let rho = match p.bloch {
            Some(b) => DensityOperator::from_bloch(b)?,
            None => random_bloch_ball(&mut rng_for(p.seed, 2 * trial + 1)),
        };
        let cfg = ScanConfig {
            seed: trial_seed,
            ..base_cfg
        };
        let result = run_protocol(&rho, &cfg)?;
        trials.push(ScanTrial {
            trial,
            seed: trial_seed,
            bloch: rho.bloch(),
            result,
        });
    }

    let mut errors: Vec<f64> = trials
        .iter()
        .filter_map(|t| t.result.angular_error)
        .collect();
    errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let resolved = trials
        .iter()
        .filter(|t| matches!(t.result.axis, AxisEstimate::Resolved(_)))
        .count() as u64;
    let summary = ScanSummary {
        trials: p.trials,
        resolved,
        degenerate: p.trials - resolved,
        median_angular_error: quantile(&errors, 0.5),
        q25_angular_error: quantile(&errors, 0.25),
        q75_angular_error: quantile(&errors, 0.75),
        mean_steps: trials
            .iter()
            .map(|t| t.result.transcript.len() as f64)
            .sum::<f64>()
            / p.trials as f64,
    };
    eprintln!(
        "trials={} resolved={} median_error={}",
        p.trials,
        resolved,
        summary
            .median_angular_error
            .map(|e| format!("{e:.6}"))
            .unwrap_or_else(|| "n/a".into())
    );

    match format {
        Format::Csv => {
            sink.line(
                "trial,seed,phi_star,theta_star,steps,angular_error,final_fidelity_product",
            )?;
            for t in &trials {
                let fid = t
                    .result
                    .fidelity_ledger
                    .last()
                    .map(|l| l.cumulative_fidelity_product)
                    .unwrap_or(1.0);
                sink.line(&format!(
                    "{},{},{},{},{},{},{}",
                    t.trial,
                    t.seed,
                    opt(t.result.phi_star),
                    opt(t.result.theta_star),
                    t.result.transcript.len(),
                    opt(t.result.angular_error),
                    num(fid)
                ))?;
            }
        }
        Format::Json => sink.json(&ScanReport {
            schema_version: SCHEMA_VERSION,
            params: p,
            trials,
            summary,
        })?,
    }
    sink.finish()
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct OracleRow {
    case: u64,
    n: usize,
    family: BasisFamily,
    angle: f64,
    eps: f64,
    p_analytic: f64,
    p_dense: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct OracleReport {
    schema_version: u32,
    params: config::OracleParams,
    max_deviation: f64,
    rows: Vec<OracleRow>,
}

fn cmd_oracle(p: config::OracleParams, mut sink: Sink, format: Format) -> Result<(), CliError> {
    if p.n_max == 0 {
        return Err(CliError::Usage("n_max must be >= 1".into()));
    }
    if p.n_max > HARD_CAP {
        return Err(CliError::Capacity(format!(
            "n_max = {} exceeds the dense ceiling {HARD_CAP}",
            p.n_max
        )));
    }
    let mut rows = Vec::new();
    let mut max_dev = 0.0f64;
    for case in 0..p.cases {
        let mut rng = rng_for(p.seed, case);
        let rho = random_bloch_ball(&mut rng);
        let family = if rng.random::<bool>() {
            BasisFamily::Phi
        } else {
            BasisFamily::Theta
        };
        let angle = rng.random::<f64>() * std::f64::consts::PI;
        let eps = 0.05 + 1.95 * rng.random::<f64>();
        for n in 1..=p.n_max {
            let m = CollectiveMeasurement::new(MeasBasis::new(family, angle), n as u64, eps)?;
            let analytic = p_yes(&rho, &m);
            let proj = DenseProjector::build_with_cap(&m, p.n_max.max(1))?;
            let state = DenseState::product_state_with_cap(&rho, n, p.n_max.max(1))?;
            let dense = proj.matrix().product_trace(state.matrix()).re;
            let deviation = (analytic - dense).abs();
            max_dev = max_dev.max(deviation);
            rows.push(OracleRow {
                case,
                n,
                family,
                angle,
                eps,
                p_analytic: analytic,
                p_dense: dense,
                deviation,
            });
        }
    }
    eprintln!("cases={} n_max={} max_deviation={max_dev:.3e}", p.cases, p.n_max);

    match format {
        Format::Csv => {
            sink.line("case,n,family,angle,eps,p_analytic,p_dense,deviation")?;
            for r in &rows {
                sink.line(&format!(
                    "{},{},{:?},{},{},{},{},{}",
                    r.case,
                    r.n,
                    r.family,
                    num(r.angle),
                    num(r.eps),
                    num(r.p_analytic),
                    num(r.p_dense),
                    num(r.deviation)
                ))?;
            }
        }
        Format::Json => sink.json(&OracleReport {
            schema_version: SCHEMA_VERSION,
            params: p.clone(),
            max_deviation: max_dev,
            rows,
        })?,
    }
    sink.finish()?;
    if max_dev > p.tolerance {
        return Err(CliError::Assertion(format!(
            "max analytic/dense deviation {max_dev:.3e} exceeds {:.3e}",
            p.tolerance
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// lemma1
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Lemma1Row {
    n: u64,
    q_prime: f64,
    eps_prime: f64,
    mass: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct Lemma1Report {
    schema_version: u32,
    params: config::Lemma1Params,
    nesting_verified_to: u64,
    rows: Vec<Lemma1Row>,
}

fn cmd_lemma1(p: config::Lemma1Params, mut sink: Sink, format: Format) -> Result<(), CliError> {
    if p.n_step == 0 || p.n_start == 0 || p.n_stop < p.n_start {
        return Err(CliError::Usage(format!(
            "bad n grid: start {} stop {} step {}",
            p.n_start, p.n_stop, p.n_step
        )));
    }
    for &qp in &p.q_primes {
        if (qp - p.q).abs() > p.eps / 2.0 + 1e-12 {
            return Err(CliError::Usage(format!(
                "q' = {qp} outside the window around q = {} (eps/2 = {})",
                p.q,
                p.eps / 2.0
            )));
        }
    }

    // Exhaustive nesting verification: every count accepted by the nested
    // window (n, eps', q') must be accepted by (n, eps, q).
    for n in 1..=p.nesting_n_max {
        let outer = TypicalSetSpec::new(n, p.eps, p.q)?;
        for &qp in &p.q_primes {
            let eps_prime = p.eps - 2.0 * (qp - p.q).abs();
            if eps_prime <= 0.0 {
                continue;
            }
            let inner = TypicalSetSpec::new(n, eps_prime, qp)?;
            for k in 0..=n {
                if inner.contains(k)? && !outer.contains(k)? {
                    return Err(CliError::Assertion(format!(
                        "nesting violated at n = {n}, k = {k}, q' = {qp}"
                    )));
                }
            }
        }
    }

    let mut rows = Vec::new();
    for n in (p.n_start..=p.n_stop).step_by(p.n_step as usize) {
        let spec = TypicalSetSpec::new(n, p.eps, p.q)?;
        for &qp in &p.q_primes {
            let report = lemma1_check(&spec, qp, p.delta)?;
            rows.push(Lemma1Row {
                n,
                q_prime: qp,
                eps_prime: report.eps_prime,
                mass: report.mass,
                satisfied: report.satisfied,
            });
        }
    }
    eprintln!(
        "nesting verified exhaustively to n = {}; {} mass rows",
        p.nesting_n_max,
        rows.len()
    );

    match format {
        Format::Csv => {
            sink.line("n,q_prime,eps_prime,mass,satisfied")?;
            for r in &rows {
                sink.line(&format!(
                    "{},{},{},{},{}",
                    r.n,
                    num(r.q_prime),
                    num(r.eps_prime),
                    num(r.mass),
                    r.satisfied
                ))?;
            }
        }
        Format::Json => {
            let nesting_verified_to = p.nesting_n_max;
            sink.json(&Lemma1Report {
                schema_version: SCHEMA_VERSION,
                params: p,
                nesting_verified_to,
                rows,
            })?
        }
    }
    sink.finish()
}
