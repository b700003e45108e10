//! Subcommand bodies. Each returns the report (JSON value and CSV text) and a
//! one-line summary.

use std::fmt::Write as _;

use fbmclt::cltlab::{
    clt_limit_variance, rate_probe, run_experiment, winding_experiment, ExperimentConfig, McReport, RatePoint,
    RateResult, WindingReport,
};
use fbmclt::quad::{contraction_norm_q2, lemma41_integral, sigma2_squared, sigmaq_squared, variance_oracle, OracleOptions};
use fbmclt::{Error, QuadResult, Result, TimeGrid};
use serde::Serialize;
use serde_json::{json, Value};

use crate::params::Params;

/// Schema identifiers, one per report shape.
pub mod schema {
    pub const QUAD_RESULT: &str = "fbmclt.quad_result.v1";
    pub const CLT_REPORT: &str = "fbmclt.clt_report.v1";
    pub const LEMMA41: &str = "fbmclt.lemma41.v1";
    pub const CONTRACTION: &str = "fbmclt.contraction.v1";
    pub const WINDING: &str = "fbmclt.winding_report.v1";
}

pub struct Output {
    pub json: Value,
    pub csv: String,
    pub summary: String,
}

const DEFAULT_SAMPLES: u64 = 1_000_000;
const DEFAULT_REPS: u64 = 1000;

fn with_schema<T: Serialize>(schema: &str, body: &T) -> Value {
    let mut v = serde_json::to_value(body).expect("report serializes");
    match &mut v {
        Value::Object(map) => {
            map.insert("schema".into(), Value::from(schema));
            v
        }
        _ => json!({ "schema": schema, "results": v }),
    }
}

fn quad_csv(rows: &[(f64, &QuadResult)], label: &str) -> String {
    let mut s = format!("{label},value,error,n_evals,method\n");
    for (x, r) in rows {
        let method = serde_json::to_value(r.method).expect("method serializes");
        let _ = writeln!(s, "{x},{},{},{},{}", r.value, r.error_estimate, r.n_evals, method.as_str().unwrap_or(""));
    }
    s
}

fn single_quad(schema: &str, r: &QuadResult, summary: String) -> Output {
    let mut csv = String::from("value,error,n_evals,method\n");
    let method = serde_json::to_value(r.method).expect("method serializes");
    let _ = writeln!(csv, "{},{},{},{}", r.value, r.error_estimate, r.n_evals, method.as_str().unwrap_or(""));
    Output { json: with_schema(schema, r), csv, summary }
}

pub fn sigma(p: &Params) -> Result<Output> {
    let (q, h) = (p.q()?, p.hurst()?);
    let r = if q == 2 {
        sigma2_squared(h, p.get("tol", 1e-8)?)?
    } else {
        sigmaq_squared(q, h, p.positive("samples", DEFAULT_SAMPLES)?, p.get("seed", 0u64)?)?
    };
    let summary = format!(
        "sigma_{q}^2(H={}) = {:.10} ± {:.2e} ({} evaluations)",
        h.value(),
        r.value,
        r.error_estimate,
        r.n_evals
    );
    Ok(single_quad(schema::QUAD_RESULT, &r, summary))
}

pub fn oracle(p: &Params) -> Result<Output> {
    let (q, h) = (p.q()?, p.hurst()?);
    let k = p.get("k", 1000.0)?;
    let t = p.get("t", 1.0)?;
    let s = p.get("s", t)?;
    let opts = OracleOptions {
        rel_tol: p.get("tol", 1e-8)?,
        n_samples: p.positive("samples", DEFAULT_SAMPLES)?,
        seed: p.get("seed", 0u64)?,
    };
    let r = variance_oracle(q, h, k, s, t, &opts)?;
    let summary = format!(
        "E[Y_(k^s) Y_(k^t)] (q={q}, H={}, k={k}, s={s}, t={t}) = {:.8} ± {:.2e}; per log k {:.6}",
        h.value(),
        r.value,
        r.error_estimate,
        r.value / k.ln()
    );
    Ok(single_quad(schema::QUAD_RESULT, &r, summary))
}

fn experiment(p: &Params, default_k: &[f64]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(
        p.q()?,
        p.hurst()?,
        p.list("k", default_k)?,
        p.list("t", &[1.0])?,
        p.positive("reps", DEFAULT_REPS)? as usize,
        p.get("seed", 0u64)?,
    );
    cfg.scheme = p.scheme()?;
    cfg.resolution = p.get("resolution", TimeGrid::DEFAULT_RESOLUTION)?;
    cfg.validate()?;
    Ok(cfg)
}

fn report_csv(report: &McReport) -> Result<String> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

pub fn simulate(p: &Params) -> Result<Output> {
    let cfg = experiment(p, &[1000.0])?;
    let report = run_experiment(&cfg)?;
    let last = report.entries.last().and_then(|e| e.points.last().map(|pt| (e.k, pt)));
    let summary = match last {
        Some((k, pt)) => format!(
            "{} replications; k={k}, t={}: Var X = {:.4} ± {:.4}, mean {:+.4} ± {:.4}",
            cfg.reps, pt.t, pt.sample_var, pt.var_se, pt.sample_mean, pt.mean_se
        ),
        None => "no points simulated".to_owned(),
    };
    Ok(Output { json: serde_json::to_value(&report).expect("report serializes"), csv: report_csv(&report)?, summary })
}

#[derive(Serialize)]
struct CltReport {
    limit_variance: f64,
    /// Rate fit at the last checkpoint; absent with fewer than 3 usable `k`.
    rate: Option<RateResult>,
    report: McReport,
}

pub fn clt(p: &Params) -> Result<Output> {
    let cfg = experiment(p, &[100.0, 1000.0, 10000.0])?;
    let report = run_experiment(&cfg)?;
    let limit = clt_limit_variance(cfg.q, cfg.hurst, p.positive("samples", DEFAULT_SAMPLES)?, cfg.seed)?;
    let t = *cfg.t_list.last().expect("validated t list");
    let rate = match rate_probe(&RatePoint::from_report(&report, t), limit) {
        Ok(r) => Some(r),
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    let mut csv = String::from("k,t,bound,clamped,slope\n");
    if let Some(r) = &rate {
        for ((k, b), c) in r.bounds.iter().zip(&r.clamped) {
            let _ = writeln!(csv, "{k},{t},{b},{c},{}", r.slope);
        }
    }
    let summary = match &rate {
        Some(r) => format!("limit variance {limit:.6}; distance bound exponent in log k {:.3}", r.slope),
        None => format!("limit variance {limit:.6}; too few k values for a rate fit"),
    };
    let body = CltReport { limit_variance: limit, rate, report };
    Ok(Output { json: with_schema(schema::CLT_REPORT, &body), csv, summary })
}

pub fn lemma41(p: &Params) -> Result<Output> {
    let h = p.hurst()?;
    let (n, seed) = (p.positive("samples", DEFAULT_SAMPLES)?, p.get("seed", 0u64)?);
    let ts = p.list("k", &[1e2, 1e3, 1e4, 1e5])?;
    let results = ts.iter().map(|&t| lemma41_integral(t, h, n, seed)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<(f64, &QuadResult)> = ts.iter().copied().zip(&results).collect();
    let ratios: Vec<String> = rows.iter().map(|(t, r)| format!("{:.2}", r.value / t.ln())).collect();
    let summary = format!("four-point integral / log T at T = {ts:?}: {}", ratios.join(", "));
    Ok(Output { json: json!({ "schema": schema::LEMMA41, "results": results }), csv: quad_csv(&rows, "T"), summary })
}

pub fn contraction(p: &Params) -> Result<Output> {
    let h = p.hurst()?;
    let (n, seed) = (p.positive("samples", DEFAULT_SAMPLES)?, p.get("seed", 0u64)?);
    let ks = p.list("k", &[1e2, 1e3, 1e4])?;
    let mut results = Vec::new();
    let mut csv = String::from("k,unsymmetrized,unsymmetrized_error,symmetrized,symmetrized_error,n_evals\n");
    for &k in &ks {
        let (u, s) = contraction_norm_q2(k, h, n, seed)?;
        let _ = writeln!(csv, "{k},{},{},{},{},{}", u.value, u.error_estimate, s.value, s.error_estimate, s.n_evals);
        results.push(json!({ "k": k, "unsymmetrized": u, "symmetrized": s }));
    }
    let last = results.last().and_then(|r| r["symmetrized"]["value"].as_f64()).unwrap_or(f64::NAN);
    let k_last = ks.last().copied().unwrap_or(f64::NAN);
    let summary = format!("symmetrized contraction norm at k={k_last}: {last:.4} ({} values of k)", ks.len());
    Ok(Output { json: json!({ "schema": schema::CONTRACTION, "results": results }), csv, summary })
}

pub fn windings(p: &Params) -> Result<Output> {
    let h = p.hurst()?;
    let t_end = p.get("t", 1e4)?;
    let r: WindingReport = winding_experiment(
        h,
        t_end,
        p.positive("reps", DEFAULT_REPS)? as usize,
        p.get("seed", 0u64)?,
        p.scheme()?,
        p.get("resolution", TimeGrid::DEFAULT_RESOLUTION)?,
    )?;
    let csv = format!(
        "t_end,reps,var_z,var_z_se,var_z_prime,var_z_prime_se,term_covariance,term_covariance_se,var_difference_se\n\
         {},{},{},{},{},{},{},{},{}\n",
        r.t_end,
        r.reps,
        r.var_z,
        r.var_z_se,
        r.var_z_prime,
        r.var_z_prime_se,
        r.term_covariance,
        r.term_covariance_se,
        r.var_difference_se
    );
    let log_t = t_end.ln();
    let summary = format!(
        "t={t_end}: Var Z/log t = {:.4}, Var Z'/log t = {:.4} ± {:.4}",
        r.var_z / log_t,
        r.var_z_prime / log_t,
        r.var_z_prime_se / log_t
    );
    Ok(Output { json: with_schema(schema::WINDING, &r), csv, summary })
}
