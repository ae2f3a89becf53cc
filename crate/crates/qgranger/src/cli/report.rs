use serde::{Deserialize, Serialize};

use super::config::{AnalysisConfig, Mode};
use crate::bounds::{DepthMargin, HighResBound, MidTreadBound, SBounds};
use crate::causality::{CausalityMatrix, Verdict};
use crate::moments::LaggedMoments;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BoundDetail {
    Nonuniform { s: SBounds },
    Midtread { per_q: Vec<MidTreadBound> },
    /// The decision uses the explicit series bounds, not the big-O formula.
    Highres { per_q: Vec<HighResBound>, explicit: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub tool_version: String,
    pub mode: Mode,
    pub verdict: Verdict,
    pub m: usize,
    pub sample_count: usize,
    /// Binary mode: `sigma_min` of `R(m, m)` and the threshold it was compared to.
    pub sigma_min: Option<f64>,
    pub theta: Option<f64>,
    /// Sufficient-condition modes: one entry per depth.
    pub depths: Vec<DepthMargin>,
    pub bounds: Option<BoundDetail>,
    pub moments: LaggedMoments,
    pub matrices: Option<Vec<CausalityMatrix>>,
    pub config: AnalysisConfig,
}

impl DecisionReport {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Causal | Verdict::NonCausal => 0,
            Verdict::NotDecided => 2,
        }
    }
}
