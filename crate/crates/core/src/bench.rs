//! Instance directories, recovery reports and dimension sweeps for the `tucker-bench` CLI.
//!
//! An instance directory holds `X.dtf`, `A1.dtf` … `AN.dtf`, `Y.dtf` (DTF-1) and an
//! `instance.json` sidecar. Sweep output is CSV with a fixed column order:
//!
//! * accuracy: `schema_version,J,I,method,replicates,status,frob_err_mean,frob_err_std,support_f1_mean`
//! * timing:   `schema_version,J,I,method,replicates,status,time_mean_s,time_std_s`
//!
//! Rows are ordered by ascending `J`, then method name. Accuracy columns are a
//! pure function of the seed, so that file is byte-stable across runs; timing
//! goes to its own file unless the caller asks for a combined table.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RecoveryConfig;
use crate::dtf::{load_matrix, load_tensor, save_matrix, save_tensor};
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::fista::StageStats;
use crate::metrics::{frobenius_error, support_scores, SupportScores};
use crate::pipeline::{recover, Method};
use crate::support::SupportSet;
use crate::synthetic::{run_experiment, ExperimentSpec, Instance};
use crate::tensor::DenseTensor;

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA: &str = "tucker-recover-report/1";
pub const SIDECAR_NAME: &str = "instance.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFiles {
    pub core: String,
    pub factors: Vec<String>,
    pub observation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub format: String,
    pub seed: u64,
    pub replicate: u64,
    pub spec: ExperimentSpec,
    /// True support as multi-indices (0-based, mode 0 first).
    pub true_support: Vec<Vec<usize>>,
    pub files: InstanceFiles,
}

/// Writes an instance directory; returns the paths written, sidecar last.
pub fn write_instance(dir: &Path, spec: &ExperimentSpec, inst: &Instance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let files = InstanceFiles {
        core: "X.dtf".into(),
        factors: (1..=inst.factors.order()).map(|n| format!("A{n}.dtf")).collect(),
        observation: "Y.dtf".into(),
    };
    let mut written = Vec::new();
    let core = dir.join(&files.core);
    save_tensor(&core, &inst.x_true)?;
    written.push(core);
    for (name, a) in files.factors.iter().zip(inst.factors.factors()) {
        let p = dir.join(name);
        save_matrix(&p, a)?;
        written.push(p);
    }
    let obs = dir.join(&files.observation);
    save_tensor(&obs, &inst.y)?;
    written.push(obs);
    let sidecar = InstanceSidecar {
        format: "DTF-1".into(),
        seed: spec.seed,
        replicate: inst.replicate,
        spec: spec.clone(),
        true_support: inst.support.tuples().collect(),
        files,
    };
    let side = dir.join(SIDECAR_NAME);
    fs::write(&side, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    written.push(side);
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub y: DenseTensor,
    pub factors: FactorSet,
    pub x_true: Option<DenseTensor>,
    pub support: Option<SupportSet>,
    pub sidecar: InstanceSidecar,
}

pub fn read_instance(dir: &Path) -> Result<LoadedInstance> {
    let sidecar: InstanceSidecar = serde_json::from_str(&fs::read_to_string(dir.join(SIDECAR_NAME))?)?;
    let y = load_tensor(dir.join(&sidecar.files.observation))?;
    let factors = sidecar
        .files
        .factors
        .iter()
        .map(|name| load_matrix(dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    let factors = FactorSet::new(factors)?;
    let core_path = dir.join(&sidecar.files.core);
    let x_true = if core_path.exists() {
        Some(load_tensor(core_path)?)
    } else {
        None
    };
    let shape = factors.core_shape();
    let support = SupportSet::from_tuples(&shape, sidecar.true_support.iter().map(Vec::as_slice))?;
    Ok(LoadedInstance {
        y,
        factors,
        x_true,
        support: Some(support),
        sidecar,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverReport {
    pub schema: String,
    pub method: Method,
    pub config: RecoveryConfig,
    /// Absent when the instance carries no ground-truth core.
    pub frob_error: Option<f64>,
    pub support_precision: Option<f64>,
    pub support_recall: Option<f64>,
    pub support_f1: Option<f64>,
    pub support_size: usize,
    pub stages: Vec<StageStats>,
    pub wall_time_s: f64,
}

pub fn recover_instance(inst: &LoadedInstance, cfg: &RecoveryConfig, method: Method) -> Result<(RecoverReport, DenseTensor)> {
    let res = recover(&inst.y, &inst.factors, cfg, method)?;
    let frob_error = inst
        .x_true
        .as_ref()
        .map(|x| frobenius_error(x, &res.estimate))
        .transpose()?;
    let scores: Option<SupportScores> = inst.support.as_ref().map(|s| support_scores(s, &res.support));
    let report = RecoverReport {
        schema: REPORT_SCHEMA.into(),
        method,
        config: cfg.clone(),
        frob_error,
        support_precision: scores.map(|s| s.precision),
        support_recall: scores.map(|s| s.recall),
        support_f1: scores.map(|s| s.f1),
        support_size: res.support.len(),
        wall_time_s: res.total_seconds(),
        stages: res.stages,
    };
    Ok((report, res.estimate))
}

/// `I = round(ratio · J)`, clamped to `[1, J]`.
pub fn observed_dim(j: usize, ratio: f64) -> usize {
    ((ratio * j as f64).round() as usize).clamp(1, j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub j_list: Vec<usize>,
    pub ratio: f64,
    /// Overrides `round(ratio · J)` for every cell.
    pub observed: Option<usize>,
    pub order: usize,
    pub methods: Vec<Method>,
    /// Supplies support size, spreads, convention, seed and replicate count.
    pub template: ExperimentSpec,
}

impl BenchPlan {
    pub fn cell_spec(&self, j: usize) -> ExperimentSpec {
        let i = self.observed.unwrap_or_else(|| observed_dim(j, self.ratio));
        ExperimentSpec {
            core_shape: vec![j; self.order],
            observed_shape: vec![i; self.order],
            ..self.template.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    SizeGuard,
}

impl CellStatus {
    fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::SizeGuard => "size_guard",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub j: usize,
    pub i: usize,
    pub method: Method,
    pub replicates: usize,
    pub status: CellStatus,
    pub frob_err_mean: f64,
    pub frob_err_std: f64,
    pub support_f1_mean: f64,
    pub time_mean_s: f64,
    pub time_std_s: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

fn num(v: f64, status: CellStatus) -> String {
    match status {
        CellStatus::Ok => format!("{v}"),
        CellStatus::SizeGuard => String::new(),
    }
}

pub const ACCURACY_HEADER: &str =
    "schema_version,J,I,method,replicates,status,frob_err_mean,frob_err_std,support_f1_mean";
pub const TIMING_HEADER: &str = "schema_version,J,I,method,replicates,status,time_mean_s,time_std_s";
pub const COMBINED_HEADER: &str = "schema_version,J,I,method,replicates,status,frob_err_mean,frob_err_std,support_f1_mean,time_mean_s,time_std_s";

impl BenchRow {
    fn key(&self) -> String {
        format!(
            "{CSV_SCHEMA_VERSION},{},{},{},{},{}",
            self.j,
            self.i,
            self.method,
            self.replicates,
            self.status.as_str()
        )
    }

    fn accuracy_fields(&self) -> String {
        format!(
            "{},{},{}",
            num(self.frob_err_mean, self.status),
            num(self.frob_err_std, self.status),
            num(self.support_f1_mean, self.status)
        )
    }

    fn timing_fields(&self) -> String {
        format!(
            "{},{}",
            num(self.time_mean_s, self.status),
            num(self.time_std_s, self.status)
        )
    }

    pub fn accuracy_csv(&self) -> String {
        format!("{},{}", self.key(), self.accuracy_fields())
    }

    pub fn timing_csv(&self) -> String {
        format!("{},{}", self.key(), self.timing_fields())
    }

    pub fn combined_csv(&self) -> String {
        format!("{},{},{}", self.key(), self.accuracy_fields(), self.timing_fields())
    }
}

/// Where sweep rows go as each `J` cell completes.
pub enum BenchSink<'a> {
    /// Accuracy table plus a separate timing table.
    Split {
        accuracy: &'a mut dyn Write,
        timing: &'a mut dyn Write,
    },
    Combined(&'a mut dyn Write),
}

impl BenchSink<'_> {
    fn header(&mut self) -> Result<()> {
        match self {
            BenchSink::Split { accuracy, timing } => {
                writeln!(accuracy, "{ACCURACY_HEADER}")?;
                writeln!(timing, "{TIMING_HEADER}")?;
            }
            BenchSink::Combined(w) => writeln!(w, "{COMBINED_HEADER}")?,
        }
        Ok(())
    }

    fn rows(&mut self, rows: &[BenchRow]) -> Result<()> {
        match self {
            BenchSink::Split { accuracy, timing } => {
                for r in rows {
                    writeln!(accuracy, "{}", r.accuracy_csv())?;
                    writeln!(timing, "{}", r.timing_csv())?;
                }
                accuracy.flush()?;
                timing.flush()?;
            }
            BenchSink::Combined(w) => {
                for r in rows {
                    writeln!(w, "{}", r.combined_csv())?;
                }
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// Runs the sweep, emitting each `J` cell's rows as soon as it finishes.
pub fn run_bench(
    plan: &BenchPlan,
    cfg: &RecoveryConfig,
    threads: usize,
    sink: &mut BenchSink<'_>,
) -> Result<Vec<BenchRow>> {
    if plan.j_list.is_empty() || plan.methods.is_empty() || plan.order == 0 {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    if !(plan.ratio > 0.0 && plan.ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!("ratio must lie in (0, 1], got {}", plan.ratio)));
    }
    let mut js = plan.j_list.clone();
    js.sort_unstable();
    js.dedup();
    let mut methods = plan.methods.clone();
    methods.sort_by_key(|m| m.name());
    methods.dedup();

    sink.header()?;
    let mut all = Vec::new();
    for j in js {
        let spec = plan.cell_spec(j);
        spec.validate()?;
        let i = spec.observed_shape[0];
        let guard_entries: u128 = spec
            .core_shape
            .iter()
            .zip(&spec.observed_shape)
            .map(|(&a, &b)| (a * b) as u128)
            .product();
        let (runnable, refused): (Vec<Method>, Vec<Method>) = methods
            .iter()
            .partition(|&&m| m != Method::FistaMvpp || guard_entries <= cfg.kron_guard);
        let metrics = if runnable.is_empty() {
            Vec::new()
        } else {
            run_experiment(&spec, &runnable, cfg, threads)?
        };
        let mut rows = Vec::new();
        for &m in &methods {
            if refused.contains(&m) {
                rows.push(BenchRow {
                    j,
                    i,
                    method: m,
                    replicates: spec.replicates,
                    status: CellStatus::SizeGuard,
                    frob_err_mean: f64::NAN,
                    frob_err_std: f64::NAN,
                    support_f1_mean: f64::NAN,
                    time_mean_s: f64::NAN,
                    time_std_s: f64::NAN,
                });
                continue;
            }
            let mine: Vec<_> = metrics.iter().filter(|r| r.method == m).collect();
            let errs: Vec<f64> = mine.iter().map(|r| r.frob_error).collect();
            let times: Vec<f64> = mine.iter().map(|r| r.wall_time_s).collect();
            let f1s: Vec<f64> = mine.iter().map(|r| r.support_f1).collect();
            let (frob_err_mean, frob_err_std) = mean_std(&errs);
            let (time_mean_s, time_std_s) = mean_std(&times);
            rows.push(BenchRow {
                j,
                i,
                method: m,
                replicates: mine.len(),
                status: CellStatus::Ok,
                frob_err_mean,
                frob_err_std,
                support_f1_mean: mean_std(&f1s).0,
                time_mean_s,
                time_std_s,
            });
        }
        sink.rows(&rows)?;
        all.extend(rows);
    }
    Ok(all)
}
