//! The four-stage recovery and the three comparison methods.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augment::{augment, Augmentation};
use crate::config::RecoveryConfig;
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::fista::{effective_support, fista_recover, RecoveryResult, Stage, StageStats};
use crate::kron::check_guard;
use crate::postprocess::{iterative_postprocess, kronecker_least_squares};
use crate::projected::{fista_with_projection, fista_with_projection_from, ProjectedOutcome};
use crate::tensor::DenseTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Stage I alone.
    Fista,
    /// Stage I, then the Kronecker least-squares baseline on its support.
    FistaMvpp,
    /// Stage I, then iterative postprocessing on its support.
    FistaPp,
    /// Stages I–IV.
    FourStage,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Fista, Method::FistaMvpp, Method::FistaPp, Method::FourStage];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fista => "fista",
            Method::FistaMvpp => "fista_mvpp",
            Method::FistaPp => "fista_pp",
            Method::FourStage => "four_stage",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Intermediate products of a four-stage run.
#[derive(Debug, Clone)]
pub struct FourStageTrace {
    pub stage1: RecoveryResult,
    pub augmentation: Augmentation,
    pub stage3: ProjectedOutcome,
    pub result: RecoveryResult,
}

/// Stage I → II → III → IV; Stage IV runs on Stage III's final working support.
pub fn four_stage_trace(y: &DenseTensor, f: &FactorSet, cfg: &RecoveryConfig) -> Result<FourStageTrace> {
    let stage1 = fista_recover(y, f, cfg)?;

    let clock = Instant::now();
    let augmentation = augment(&stage1.estimate, cfg)?;
    let augment_stats = StageStats {
        stage: Stage::Augment,
        iterations: 1,
        seconds: clock.elapsed().as_secs_f64(),
    };

    let stage3 = if cfg.warm_start_from_augmented {
        fista_with_projection_from(y, f, &augmentation.support, augmentation.estimate.clone(), cfg)?
    } else {
        fista_with_projection(y, f, &augmentation.support, cfg)?
    };

    let clock = Instant::now();
    let pp = iterative_postprocess(y, f, &stage3.result.estimate, &stage3.working_support, cfg)?;
    let pp_stats = StageStats {
        stage: Stage::Postprocess,
        iterations: pp.iterations,
        seconds: clock.elapsed().as_secs_f64(),
    };

    let mut stages = stage1.stages.clone();
    stages.push(augment_stats);
    stages.extend(stage3.result.stages.iter().cloned());
    stages.push(pp_stats);
    let mut objective_trace = stage1.objective_trace.clone();
    objective_trace.extend_from_slice(&stage3.result.objective_trace);
    let result = RecoveryResult {
        support: effective_support(&pp.estimate, cfg.tol),
        estimate: pp.estimate,
        stages,
        objective_trace,
    };
    Ok(FourStageTrace {
        stage1,
        augmentation,
        stage3,
        result,
    })
}

pub fn four_stage_recover(y: &DenseTensor, f: &FactorSet, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    Ok(four_stage_trace(y, f, cfg)?.result)
}

/// Dispatches one of the four compared methods.
pub fn recover(y: &DenseTensor, f: &FactorSet, cfg: &RecoveryConfig, method: Method) -> Result<RecoveryResult> {
    match method {
        Method::Fista => fista_recover(y, f, cfg),
        Method::FourStage => four_stage_recover(y, f, cfg),
        Method::FistaPp => {
            let mut res = fista_recover(y, f, cfg)?;
            let clock = Instant::now();
            let pp = iterative_postprocess(y, f, &res.estimate, &res.support, cfg)?;
            res.stages.push(StageStats {
                stage: Stage::Postprocess,
                iterations: pp.iterations,
                seconds: clock.elapsed().as_secs_f64(),
            });
            res.support = effective_support(&pp.estimate, cfg.tol);
            res.estimate = pp.estimate;
            Ok(res)
        }
        Method::FistaMvpp => {
            check_guard(f, cfg.kron_guard)?;
            let mut res = fista_recover(y, f, cfg)?;
            let clock = Instant::now();
            let ls = kronecker_least_squares(y, f, &res.support, cfg.kron_guard)?;
            res.stages.push(StageStats {
                stage: Stage::KroneckerLeastSquares,
                iterations: 1,
                seconds: clock.elapsed().as_secs_f64(),
            });
            let tol = cfg.tol;
            res.estimate = ls.estimate.map(|v| if v.abs() > tol { v } else { 0.0 });
            res.support = effective_support(&res.estimate, tol);
            Ok(res)
        }
    }
}
