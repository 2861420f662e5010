//! Wall-clock benchmarking over thread counts, dataset filtering and
//! CSV/JSON reports.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{OscmError, Result};
use crate::graph::{count_crossings, generate_random_instance, parse_instance, BipartiteInstance};
use crate::limits::{default_memory_budget, Deadline};
use crate::solver::{check_capacity, choose_algorithm, solve, Algorithm, SolverConfig};
use crate::subexpo::characterize_instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

/// A random instance described by its generator arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub n_free: usize,
    pub n_fixed: usize,
    pub p: f64,
    pub seed: u64,
}

impl GeneratedInstance {
    pub fn id(&self) -> String {
        format!("gen-n{}-m{}-p{}-s{}", self.n_free, self.n_fixed, self.p, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(with = "algorithm_name")]
    pub algorithm: Algorithm,
    pub threads: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub warmup: usize,
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    #[serde(default)]
    pub generated: Vec<GeneratedInstance>,
    /// Seconds allowed per run; none means unlimited.
    #[serde(default)]
    pub timeout_secs: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
    #[serde(default)]
    pub max_k: Option<u64>,
    #[serde(default)]
    pub width_cap: Option<usize>,
    #[serde(default)]
    pub mem_budget: Option<u64>,
}

fn default_repetitions() -> usize {
    3
}

mod algorithm_name {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::solver::Algorithm;

    pub fn serialize<S: Serializer>(a: &Algorithm, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(a.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Algorithm, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl BenchConfig {
    pub fn new(algorithm: Algorithm, threads: Vec<usize>) -> Self {
        BenchConfig {
            algorithm,
            threads,
            repetitions: default_repetitions(),
            warmup: 0,
            instances: Vec::new(),
            generated: Vec::new(),
            timeout_secs: None,
            output: None,
            format: ReportFormat::Csv,
            max_k: None,
            width_cap: None,
            mem_budget: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(text)
            .map_err(|e| OscmError::InvalidInstance(format!("bench config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(OscmError::InvalidInstance(format!("bench config: {msg}")));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.threads.first() != Some(&1) {
            return bad("thread counts must start with 1");
        }
        if self.threads.windows(2).any(|w| w[0] >= w[1]) {
            return bad("thread counts must be strictly ascending");
        }
        if self.timeout_secs.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return bad("timeout_secs must be positive");
        }
        Ok(())
    }

    fn solver_config(&self, threads: usize, deadline: Deadline) -> SolverConfig {
        let base = SolverConfig::default();
        SolverConfig {
            threads,
            max_k: self.max_k.unwrap_or(base.max_k),
            width_cap: self.width_cap.unwrap_or(base.width_cap),
            mem_budget: self.mem_budget.unwrap_or_else(default_memory_budget),
            deadline,
            ..base
        }
    }

    fn deadline(&self) -> Deadline {
        match self.timeout_secs {
            Some(t) => Deadline::after(Duration::from_secs_f64(t)),
            None => Deadline::none(),
        }
    }

    /// Parses the listed files and generates the listed random instances.
    pub fn load_instances(&self) -> Result<Vec<NamedInstance>> {
        let mut out = Vec::with_capacity(self.instances.len() + self.generated.len());
        for path in &self.instances {
            out.push(NamedInstance::load(path)?);
        }
        for g in &self.generated {
            out.push(NamedInstance {
                id: g.id(),
                instance: generate_random_instance(g.n_free, g.n_fixed, g.p, g.seed),
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub id: String,
    pub instance: BipartiteInstance,
}

impl NamedInstance {
    pub fn load(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        Ok(NamedInstance {
            id: path.display().to_string(),
            instance: parse_instance(reader)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchStatus {
    Ok,
    Timeout,
    CapacityError,
    /// Crossings disagree with the recount or with another thread count.
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: String,
    pub algo: String,
    pub n: usize,
    pub m: usize,
    pub edges: usize,
    pub threads: usize,
    /// Median wall time over the timed repetitions.
    pub time_ns: Option<u64>,
    pub crossings: Option<u64>,
    pub speedup: Option<f64>,
    pub status: BenchStatus,
}

/// Median of the samples; the mean of the two middle ones for even counts.
pub fn median_ns(samples: &[u64]) -> u64 {
    assert!(!samples.is_empty(), "median of no samples");
    let mut s = samples.to_vec();
    s.sort_unstable();
    let mid = s.len() / 2;
    if s.len() % 2 == 1 {
        s[mid]
    } else {
        ((u128::from(s[mid - 1]) + u128::from(s[mid])) / 2) as u64
    }
}

enum RunOutcome {
    Done { time_ns: u64, crossings: u64 },
    Timeout,
    Capacity,
    Mismatch,
}

fn run_once(inst: &BipartiteInstance, algo: Algorithm, cfg: &SolverConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let res = solve(inst, algo, cfg);
    let time_ns = start.elapsed().as_nanos() as u64;
    match res {
        Ok(r) => {
            if count_crossings(inst, &r.permutation)? != r.crossings {
                return Ok(RunOutcome::Mismatch);
            }
            Ok(RunOutcome::Done {
                time_ns,
                crossings: r.crossings,
            })
        }
        Err(OscmError::Timeout) => Ok(RunOutcome::Timeout),
        Err(
            OscmError::Capacity { .. } | OscmError::WindowTooWide { .. } | OscmError::NotFound { .. },
        ) => Ok(RunOutcome::Capacity),
        Err(e) => Err(e),
    }
}

/// Runs one (instance, threads) point: warmups, then timed repetitions.
fn measure(
    inst: &BipartiteInstance,
    algo: Algorithm,
    cfg: &BenchConfig,
    threads: usize,
) -> Result<(BenchStatus, Option<u64>, Option<u64>)> {
    let mut times = Vec::with_capacity(cfg.repetitions);
    let mut crossings = None;
    for run in 0..cfg.warmup + cfg.repetitions {
        let solver_cfg = cfg.solver_config(threads, cfg.deadline());
        match run_once(inst, algo, &solver_cfg)? {
            RunOutcome::Done { time_ns, crossings: c } => {
                if crossings.is_some_and(|prev| prev != c) {
                    return Ok((BenchStatus::Mismatch, None, Some(c)));
                }
                crossings = Some(c);
                if run >= cfg.warmup {
                    times.push(time_ns);
                }
            }
            RunOutcome::Timeout => return Ok((BenchStatus::Timeout, None, None)),
            RunOutcome::Capacity => return Ok((BenchStatus::CapacityError, None, None)),
            RunOutcome::Mismatch => return Ok((BenchStatus::Mismatch, None, None)),
        }
    }
    Ok((BenchStatus::Ok, Some(median_ns(&times)), crossings))
}

/// Benchmarks every instance at every thread count. Each record is passed to
/// `sink` as soon as it is known.
pub fn run_benchmark_on(
    cfg: &BenchConfig,
    instances: &[NamedInstance],
    mut sink: impl FnMut(&BenchRecord) -> Result<()>,
) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let mut records = Vec::new();
    for named in instances {
        let inst = &named.instance;
        let probe = cfg.solver_config(1, Deadline::none());
        let algo = match cfg.algorithm {
            Algorithm::Auto => choose_algorithm(inst, &probe),
            a => a,
        };
        let fits = check_capacity(inst, algo, &probe).is_ok();
        let mut base: Option<(u64, u64)> = None;
        let mut agreed: Option<u64> = None;
        for &threads in &cfg.threads {
            let (mut status, time_ns, crossings) = if fits {
                measure(inst, algo, cfg, threads)?
            } else {
                (BenchStatus::CapacityError, None, None)
            };
            if status == BenchStatus::Ok {
                let c = crossings.expect("ok run has crossings");
                match agreed {
                    Some(prev) if prev != c => status = BenchStatus::Mismatch,
                    _ => agreed = Some(c),
                }
            }
            let speedup = match (status, time_ns) {
                (BenchStatus::Ok, Some(t)) if threads == 1 => {
                    base = Some((t, crossings.unwrap()));
                    Some(1.0)
                }
                (BenchStatus::Ok, Some(t)) => base.map(|(t1, _)| t1 as f64 / t.max(1) as f64),
                _ => None,
            };
            let record = BenchRecord {
                instance: named.id.clone(),
                algo: algo.name().to_string(),
                n: inst.n_free(),
                m: inst.n_fixed(),
                edges: inst.edge_count(),
                threads,
                time_ns,
                crossings,
                speedup,
                status,
            };
            sink(&record)?;
            records.push(record);
        }
    }
    Ok(records)
}

/// Loads the configured instances and benchmarks them, writing the report to
/// `cfg.output` after every record when set.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let instances = cfg.load_instances()?;
    match &cfg.output {
        None => run_benchmark_on(cfg, &instances, |_| Ok(())),
        Some(path) => {
            let mut writer = ReportWriter::create(path, cfg.format)?;
            run_benchmark_on(cfg, &instances, |r| writer.push(r))
        }
    }
}

pub fn has_mismatch(records: &[BenchRecord]) -> bool {
    records.iter().any(|r| r.status == BenchStatus::Mismatch)
}

/// Writes a report incrementally: CSV rows are appended and flushed, JSON is
/// rewritten whole so the file always parses.
pub struct ReportWriter {
    path: PathBuf,
    format: ReportFormat,
    csv: Option<csv::Writer<File>>,
    records: Vec<BenchRecord>,
}

impl ReportWriter {
    pub fn create(path: &Path, format: ReportFormat) -> Result<Self> {
        let mut writer = ReportWriter {
            path: path.to_path_buf(),
            format,
            csv: None,
            records: Vec::new(),
        };
        match format {
            ReportFormat::Csv => {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
                w.write_record(CSV_COLUMNS).map_err(csv_err)?;
                w.flush()?;
                writer.csv = Some(w);
            }
            ReportFormat::Json => writer.rewrite_json()?,
        }
        Ok(writer)
    }

    pub fn push(&mut self, record: &BenchRecord) -> Result<()> {
        match &mut self.csv {
            Some(w) => {
                w.serialize(record).map_err(csv_err)?;
                w.flush()?;
            }
            None => {
                self.records.push(record.clone());
                self.rewrite_json()?;
            }
        }
        Ok(())
    }

    fn rewrite_json(&self) -> Result<()> {
        debug_assert_eq!(self.format, ReportFormat::Json);
        emit_report(&self.records, ReportFormat::Json, &self.path)
    }
}

pub const CSV_COLUMNS: [&str; 10] = [
    "instance", "algo", "n", "m", "edges", "threads", "time_ns", "crossings", "speedup", "status",
];

fn csv_err(e: csv::Error) -> OscmError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => OscmError::Io(e),
        other => OscmError::Io(io::Error::other(format!("{other:?}"))),
    }
}

pub fn render_report(records: &[BenchRecord], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for r in records {
                w.serialize(r).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| OscmError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(records).map_err(io::Error::other)?;
            text.push('\n');
            Ok(text)
        }
    }
}

pub fn emit_report(records: &[BenchRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(records, format)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn parse_json_report(text: &str) -> Result<Vec<BenchRecord>> {
    serde_json::from_str(text).map_err(|e| OscmError::Io(io::Error::other(e)))
}

pub fn parse_csv_report(text: &str) -> Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCriteria {
    pub max_width: Option<usize>,
    pub max_free: Option<usize>,
    pub max_edges: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceCharacteristics {
    pub instance: String,
    pub n_free: usize,
    pub n_fixed: usize,
    pub edges: usize,
    pub max_width: usize,
    pub kept: bool,
}

/// Keeps the instances meeting every criterion and reports what was measured
/// for each input.
pub fn filter_dataset(
    instances: Vec<NamedInstance>,
    criteria: &FilterCriteria,
) -> (Vec<NamedInstance>, Vec<InstanceCharacteristics>) {
    let within = |limit: Option<usize>, v: usize| limit.is_none_or(|l| v <= l);
    let mut kept = Vec::new();
    let mut report = Vec::with_capacity(instances.len());
    for named in instances {
        let inst = &named.instance;
        let max_width = characterize_instance(inst).max_width;
        let ok = within(criteria.max_width, max_width)
            && within(criteria.max_free, inst.n_free())
            && within(criteria.max_edges, inst.edge_count());
        report.push(InstanceCharacteristics {
            instance: named.id.clone(),
            n_free: inst.n_free(),
            n_fixed: inst.n_fixed(),
            edges: inst.edge_count(),
            max_width,
            kept: ok,
        });
        if ok {
            kept.push(named);
        }
    }
    (kept, report)
}
