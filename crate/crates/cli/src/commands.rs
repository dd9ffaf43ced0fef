use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use halfcert::certificate::{
    certify, estimate_moment_matrix, BandIndicator, CertificateMatrix, CertifyOutcome, MomentMatrix,
};
use halfcert::geometry::{dot, norm};
use halfcert::io;
use halfcert::learner::{run, RunOutcome, RunStatus};
use halfcert::oracle::Dataset;
use halfcert::polynomials::MonomialBasis;
use halfcert::rng::{derive_indexed, derive_seed};
use halfcert::stats::mean_se;
use halfcert::suites::{run_suite, SuiteReport};
use halfcert::{Halfspace, WeightVector};

use crate::config::{parse_vector, random_direction};
use crate::{CliError, ExperimentConfig, RawConfig, OUT_ENV};

pub type CliResult<T> = Result<T, CliError>;

/// Reads and validates a config file. A missing or unreadable file is an I/O
/// failure; bad contents are a usage failure.
pub fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

pub fn load_raw(path: &Path) -> CliResult<RawConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read config {}: {e}", path.display())))?;
    RawConfig::parse(&text)
}

/// `--out` flag, then `output.directory`, then `$HALFCERT_OUT`, then `out`.
pub fn output_dir(flag: Option<&Path>, cfg_dir: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = cfg_dir {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from("out"),
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

/// `v` as a `key,value` table.
fn write_key_values(path: &Path, entries: &[(String, String)]) -> CliResult<()> {
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|(k, v)| vec![k.clone(), v.clone()])
        .collect();
    io::write_rows(path, &["key", "value"], &rows)?;
    Ok(())
}

pub fn read_key_values(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let (_, rows) = io::read_rows(path)?;
    Ok(rows
        .into_iter()
        .filter(|r| r.len() == 2)
        .map(|r| (r[0].clone(), r[1].clone()))
        .collect())
}

/// Writes `n` examples from the configured oracle.
pub fn cmd_gen(cfg: &ExperimentConfig, n: usize, out: &Path) -> CliResult<Dataset> {
    if n == 0 {
        return Err(CliError::usage("--n: must be at least 1"));
    }
    let data = cfg.oracle()?.draw(n)?;
    ensure_parent(out)?;
    io::write_dataset(out, &data)?;
    let mut meta = cfg.describe();
    meta.push(("n".into(), n.to_string()));
    io::write_sidecar(out, &meta)?;
    Ok(data)
}

/// A candidate normal given as a vector literal or as a model file.
pub fn parse_candidate(text: &str, d: usize) -> CliResult<Halfspace> {
    let path = Path::new(text);
    let coords = if path.is_file() {
        io::read_model(path)?
    } else {
        parse_vector(text)?
    };
    if coords.len() != d {
        return Err(CliError::usage(format!(
            "--w: has {} coordinates, marginal.d is {d}",
            coords.len()
        )));
    }
    Halfspace::new(WeightVector::new(coords)?).map_err(|e| CliError::usage(format!("--w: {e}")))
}

/// The unit vector at angle `theta` from `target`, rotated toward a random
/// orthogonal direction.
pub fn candidate_at_angle(target: &Halfspace, theta: f64, seed: u64) -> CliResult<Halfspace> {
    let ws = target.normal().as_slice();
    let d = ws.len();
    for attempt in 0..16u64 {
        let r = random_direction(d, derive_indexed(seed, "candidate", attempt))?;
        let r = r.normal().as_slice();
        let proj = dot(r, ws);
        let u: Vec<f64> = r.iter().zip(ws).map(|(a, b)| a - proj * b).collect();
        let n = norm(&u);
        if n > 1e-6 {
            let w = ws
                .iter()
                .zip(&u)
                .map(|(a, b)| theta.cos() * a + theta.sin() * b / n)
                .collect();
            return Ok(Halfspace::from_coords(w)?);
        }
    }
    Err(CliError::runtime(
        "could not draw a direction orthogonal to the target",
    ))
}

#[derive(Debug, Clone)]
pub enum DataSource {
    /// `n` fitting and `n` held-out examples from the oracle, from streams
    /// indexed by `index`.
    Fresh { n: usize, index: u64 },
    /// A dataset file, split in half: fitting first, held-out second.
    File(PathBuf),
}

pub fn certify_candidate(
    cfg: &ExperimentConfig,
    w: &Halfspace,
    source: &DataSource,
    theta: Option<f64>,
) -> CliResult<CertifyOutcome> {
    let (fit, holdout) = match source {
        DataSource::Fresh { n, index } => {
            if *n == 0 {
                return Err(CliError::usage("--n: must be at least 1"));
            }
            let o = cfg.oracle()?;
            (
                o.draw_stream(*n, "certify-fit", *index)?,
                o.draw_stream(*n, "certify-holdout", *index)?,
            )
        }
        DataSource::File(path) => {
            let data = io::read_dataset(path)?;
            if data.len() < 2 {
                return Err(CliError::runtime(format!(
                    "{}: need at least 2 examples to split",
                    path.display()
                )));
            }
            data.split_at(data.len() / 2)?
        }
    };
    if fit.dim() != w.dim() {
        return Err(CliError::usage(format!(
            "data has dimension {}, candidate has {}",
            fit.dim(),
            w.dim()
        )));
    }
    let mut cc = cfg.learner.certify_config();
    if let Some(t) = theta {
        cc.theta = t;
    }
    Ok(certify(&fit, &holdout, w, &cc)?)
}

#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub outcome: CertifyOutcome,
    pub certificate_path: PathBuf,
    pub report_path: PathBuf,
}

impl CertifyReport {
    pub fn feasible(&self) -> bool {
        self.outcome.accepted
    }

    /// One-line summary: status, fitted objective, held-out objective ± se.
    pub fn line(&self) -> String {
        let o = &self.outcome;
        let (ho, se) = o
            .validation
            .as_ref()
            .map(|v| (v.objective_est.to_string(), v.se_or_nan().to_string()))
            .unwrap_or_else(|| ("NaN".into(), "NaN".into()));
        format!(
            "{} fit_objective={} holdout_objective={ho} +/- {se}",
            if o.accepted { "feasible" } else { "infeasible" },
            o.fit_objective
        )
    }
}

pub fn cmd_certify(
    cfg: &ExperimentConfig,
    w: &Halfspace,
    source: &DataSource,
    theta: Option<f64>,
    out_dir: &Path,
) -> CliResult<CertifyReport> {
    let outcome = certify_candidate(cfg, w, source, theta)?;
    ensure_dir(out_dir)?;
    let certificate_path = out_dir.join("certificate.csv");
    let report_path = out_dir.join("certify_report.csv");
    let cert = outcome.certificate.clone().unwrap_or_else(|| {
        CertificateMatrix::zero(
            MonomialBasis::new(w.dim(), cfg.learner.k).expect("basis was built by certify"),
            cfg.learner.q_bound,
        )
    });
    let mut meta = cfg.describe();
    meta.push(("candidate".into(), join(w.normal().as_slice())));
    meta.push(("band_theta".into(), outcome.band.theta().to_string()));
    io::write_certificate(&certificate_path, &cert, &meta)?;

    let v = outcome.validation.as_ref();
    let entries = vec![
        (
            "status".to_string(),
            if outcome.accepted {
                "feasible"
            } else {
                "infeasible"
            }
            .to_string(),
        ),
        ("basis_size".into(), outcome.basis_size.to_string()),
        ("fit_objective".into(), outcome.fit_objective.to_string()),
        ("fit_feasible".into(), outcome.fit_feasible.to_string()),
        (
            "holdout_objective".into(),
            v.map(|v| v.objective_est.to_string()).unwrap_or_default(),
        ),
        (
            "holdout_se".into(),
            v.and_then(|v| v.std_err)
                .map(|s| s.to_string())
                .unwrap_or_default(),
        ),
        (
            "holdout_n".into(),
            v.map(|v| v.n.to_string()).unwrap_or_default(),
        ),
        ("band_upper".into(), outcome.band.upper().to_string()),
    ];
    write_key_values(&report_path, &entries)?;
    io::write_sidecar(&report_path, &meta)?;
    Ok(CertifyReport {
        outcome,
        certificate_path,
        report_path,
    })
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone)]
pub struct LearnReport {
    pub outcome: RunOutcome,
    pub final_angle: f64,
    pub summary: Vec<(String, String)>,
}

/// Runs the learner; model, trace and summary are written even when the run
/// ends in an error, which is then returned as a runtime failure.
pub fn cmd_learn(cfg: &ExperimentConfig, out_dir: &Path) -> CliResult<LearnReport> {
    let oracle = cfg.oracle()?;
    let outcome = run(&cfg.learner, &oracle)?;
    let final_angle = outcome.angle_to(&cfg.target)?;
    ensure_dir(out_dir)?;
    let t = &outcome.trace;
    let summary = vec![
        ("status".to_string(), t.status.as_str().to_string()),
        ("final_angle".into(), final_angle.to_string()),
        ("iterations".into(), t.records.len().to_string()),
        ("returned_t".into(), t.returned_t.to_string()),
        ("fallback_used".into(), t.fallback_used.to_string()),
        ("lambda".into(), outcome.lambda.to_string()),
        ("w_hat".into(), join(outcome.w_hat.as_slice())),
    ];
    let mut meta = cfg.describe();
    meta.extend(summary.iter().cloned());
    io::write_trace(&out_dir.join("trace.csv"), &t.records)?;
    io::write_model(&out_dir.join("model.csv"), outcome.w_hat.as_slice(), &meta)?;
    let summary_path = out_dir.join("summary.csv");
    write_key_values(&summary_path, &summary)?;
    io::write_sidecar(&summary_path, &cfg.describe())?;
    if let RunStatus::Error(msg) = &t.status {
        return Err(CliError::runtime(format!(
            "learner stopped with an error: {msg}"
        )));
    }
    Ok(LearnReport {
        outcome,
        final_angle,
        summary,
    })
}

/// Runs one suite and writes one CSV row per check.
pub fn cmd_verify(suite: &str, seed: u64, out_dir: &Path) -> CliResult<SuiteReport> {
    let report = run_suite(suite, seed)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join(format!("verify_{suite}.csv"));
    io::write_checks(&path, &report.checks)?;
    io::write_sidecar(
        &path,
        &[
            ("suite".into(), suite.into()),
            ("seed".into(), seed.to_string()),
            ("passed".into(), report.passed().to_string()),
            ("library_version".into(), halfcert::VERSION.into()),
        ],
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Certify,
    Learn,
    Moments,
}

impl Experiment {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "certify" => Ok(Self::Certify),
            "learn" => Ok(Self::Learn),
            "moments" => Ok(Self::Moments),
            other => Err(CliError::usage(format!(
                "--experiment: unknown `{other}` (certify, learn, moments)"
            ))),
        }
    }

    pub fn metrics(self) -> &'static [&'static str] {
        match self {
            Self::Certify => &[
                "basis_size",
                "fit_objective",
                "holdout_objective",
                "holdout_se",
                "accepted",
            ],
            Self::Learn => &["final_angle", "iterations", "accepted", "returned_t"],
            Self::Moments => &["n", "band_count", "moment_error"],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<String>,
    pub experiment: Experiment,
    pub replicates: usize,
    /// Candidate for certify and moments sweeps; defaults to a direction at
    /// angle `learner.eps` from the target.
    pub w: Option<String>,
    /// Sample size of the reference moment matrix.
    pub reference_n: usize,
}

pub fn parse_values(text: &str) -> CliResult<Vec<String>> {
    let values: Vec<String> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if values.is_empty() {
        return Err(CliError::usage("--values: empty list"));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub replicate: usize,
    pub metrics: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub metric_names: Vec<String>,
    pub results_path: PathBuf,
    pub plot_paths: Vec<PathBuf>,
}

fn sweep_candidate(cfg: &ExperimentConfig, spec: &SweepSpec) -> CliResult<Halfspace> {
    match &spec.w {
        Some(text) => parse_candidate(text, cfg.marginal.dim()),
        None => candidate_at_angle(&cfg.target, cfg.learner.eps, derive_seed(cfg.seed, "sweep")),
    }
}

fn run_replicate(
    cfg: &ExperimentConfig,
    spec: &SweepSpec,
    r: usize,
    reference: Option<&MomentMatrix>,
) -> CliResult<Vec<f64>> {
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    match spec.experiment {
        Experiment::Certify => {
            let w = sweep_candidate(cfg, spec)?;
            let o = certify_candidate(
                cfg,
                &w,
                &DataSource::Fresh {
                    n: cfg.learner.n_per_iter,
                    index: r as u64,
                },
                None,
            )?;
            let v = o.validation.as_ref();
            Ok(vec![
                o.basis_size as f64,
                o.fit_objective,
                v.map(|v| v.objective_est).unwrap_or(f64::NAN),
                v.map(|v| v.se_or_nan()).unwrap_or(f64::NAN),
                flag(o.accepted),
            ])
        }
        Experiment::Learn => {
            let mut lc = cfg.learner.clone();
            lc.seed = derive_indexed(lc.seed, "replicate", r as u64);
            let out = run(&lc, &cfg.oracle()?)?;
            Ok(vec![
                out.angle_to(&cfg.target)?,
                out.trace.records.len() as f64,
                flag(out.trace.status == RunStatus::CertificateFailedAccept),
                out.trace.returned_t as f64,
            ])
        }
        Experiment::Moments => {
            let reference = reference.expect("moments sweeps build a reference");
            let n = cfg.learner.n_per_iter;
            let data = cfg.oracle()?.draw_stream(n, "sweep-moments", r as u64)?;
            let m = estimate_moment_matrix(&data, &reference.band, &reference.basis)?;
            let count = (0..data.len())
                .filter(|i| {
                    reference
                        .band
                        .contains_margin(reference.band.w().margin(data.x(*i)))
                })
                .count();
            Ok(vec![
                n as f64,
                count as f64,
                (m.entries - &reference.entries).norm(),
            ])
        }
    }
}

fn build_reference(cfg: &ExperimentConfig, spec: &SweepSpec) -> CliResult<MomentMatrix> {
    let w = sweep_candidate(cfg, spec)?;
    let band = BandIndicator::new(w.clone(), cfg.learner.eps, cfg.bounds.r_rad)?;
    let basis = MonomialBasis::new(w.dim(), cfg.learner.k)?;
    let data = cfg
        .oracle()?
        .draw_stream(spec.reference_n, "sweep-reference", 0)?;
    Ok(estimate_moment_matrix(&data, &band, &basis)?)
}

/// One row per (value, replicate) plus one `x,mean,stderr` plot file per
/// metric.
pub fn cmd_sweep(raw: &RawConfig, spec: &SweepSpec, out_dir: &Path) -> CliResult<SweepReport> {
    if spec.values.is_empty() {
        return Err(CliError::usage("--values: empty list"));
    }
    if spec.replicates == 0 {
        return Err(CliError::usage("--replicates: must be at least 1"));
    }
    // Validate every value before running anything.
    let mut configs = Vec::with_capacity(spec.values.len());
    for v in &spec.values {
        let mut r = raw.clone();
        r.set_scalar(&spec.param, v)?;
        let cfg = ExperimentConfig::from_raw(r)
            .map_err(|e| CliError::usage(format!("{}={v}: {}", spec.param, e.message)))?;
        configs.push(cfg);
    }
    let mut rows = Vec::new();
    for (v, cfg) in spec.values.iter().zip(&configs) {
        let reference = match spec.experiment {
            Experiment::Moments => Some(build_reference(cfg, spec)?),
            _ => None,
        };
        for r in 0..spec.replicates {
            rows.push(SweepRow {
                value: v.clone(),
                replicate: r,
                metrics: run_replicate(cfg, spec, r, reference.as_ref())?,
            });
        }
    }

    ensure_dir(out_dir)?;
    let metric_names: Vec<String> = spec
        .experiment
        .metrics()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut header = vec!["param", "value", "replicate"];
    header.extend(spec.experiment.metrics());
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut out = vec![
                spec.param.clone(),
                row.value.clone(),
                row.replicate.to_string(),
            ];
            out.extend(row.metrics.iter().map(|m| m.to_string()));
            out
        })
        .collect();
    let results_path = out_dir.join("sweep_results.csv");
    io::write_rows(&results_path, &header, &table)?;
    let mut meta: Vec<(String, String)> = raw
        .iter()
        .map(|(k, v)| (format!("config.{k}"), v.to_string()))
        .collect();
    meta.push(("param".into(), spec.param.clone()));
    meta.push(("values".into(), spec.values.join(";")));
    meta.push(("replicates".into(), spec.replicates.to_string()));
    meta.push(("library_version".into(), halfcert::VERSION.into()));
    io::write_sidecar(&results_path, &meta)?;

    let mut plot_paths = Vec::new();
    for (j, name) in metric_names.iter().enumerate() {
        let plot: Vec<Vec<String>> = spec
            .values
            .iter()
            .map(|v| {
                let s = mean_se(rows.iter().filter(|r| &r.value == v).map(|r| r.metrics[j]));
                vec![
                    v.clone(),
                    s.mean.to_string(),
                    s.std_err.map(|e| e.to_string()).unwrap_or_default(),
                ]
            })
            .collect();
        let path = out_dir.join(format!("sweep_{name}.csv"));
        io::write_rows(&path, &["x", "mean", "stderr"], &plot)?;
        plot_paths.push(path);
    }
    Ok(SweepReport {
        rows,
        metric_names,
        results_path,
        plot_paths,
    })
}
