//! One feasibility verdict from counting, properness, outer bounds, mixed
//! volume and the leakage probe.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{bell_number, cooperative_check, BoundReport, MAX_COOPERATIVE_USERS};
use crate::geometry::{mixed_volume, select_square_subsystem, SubsetStrategy};
use crate::leakage::{minimize, MinimizeOptions, FEASIBLE_THRESHOLD};
use crate::linalg::random_channels;
use crate::model::{count_equations, count_variables, SystemSpec};
use crate::polysys::build_supports;
use crate::proper::{classify, ProperVerdict};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest polynomial system handed to the mixed-volume stage.
pub const MIXED_VOLUME_MAX_VARIABLES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Feasible,
    Infeasible,
    ProperButUndetermined,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Feasible => 0,
            Verdict::Infeasible => 1,
            Verdict::ProperButUndetermined => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub equations: usize,
    pub variables: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedVolumeSummary {
    pub value: u64,
    pub method: String,
    pub cells: usize,
    pub equations_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericSummary {
    pub max_p: f64,
    pub mean_p: f64,
    pub percentages: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    /// Wall-clock time; the only field that differs between identical runs.
    pub runtime_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub schema_version: u32,
    pub system: SystemSpec,
    pub counts: Counts,
    pub proper: ProperVerdict,
    pub bounds: Option<BoundReport>,
    pub mixed_volume: Option<MixedVolumeSummary>,
    pub numeric: Option<NumericSummary>,
    pub verdict: Verdict,
    /// Stages that were skipped and why.
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl FeasibilityReport {
    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzeOptions {
    pub bounds: bool,
    pub mixed_volume: bool,
    pub numeric: bool,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            bounds: false,
            mixed_volume: false,
            numeric: false,
            seed: 0,
            max_iters: 5000,
        }
    }
}

/// Applies the verdict ladder to the collected evidence.
pub fn decide(
    sys: &SystemSpec,
    proper: &ProperVerdict,
    bounds: Option<&BoundReport>,
    mv: Option<&MixedVolumeSummary>,
    numeric: Option<&NumericSummary>,
) -> Verdict {
    if !proper.is_proper() || bounds.is_some_and(|b| !b.passes()) {
        return Verdict::Infeasible;
    }
    if sys.single_beam() && mv.is_some_and(|m| m.value > 0) {
        return Verdict::Feasible;
    }
    if numeric.is_some_and(|n| n.max_p < FEASIBLE_THRESHOLD) {
        return Verdict::Feasible;
    }
    Verdict::ProperButUndetermined
}

pub fn analyze(sys: &SystemSpec, opts: &AnalyzeOptions) -> FeasibilityReport {
    let start = Instant::now();
    let mut notes = Vec::new();
    let counts = Counts {
        equations: count_equations(sys),
        variables: count_variables(sys),
    };
    let proper = classify(sys);

    let bounds = if opts.bounds {
        match cooperative_check(sys, bell_number(MAX_COOPERATIVE_USERS)) {
            Ok(r) => Some(r),
            Err(e) => {
                notes.push(format!("bounds skipped: {e}"));
                None
            }
        }
    } else {
        None
    };

    let mixed = if opts.mixed_volume {
        let ps = build_supports(sys);
        if ps.num_variables() > MIXED_VOLUME_MAX_VARIABLES {
            notes.push(format!(
                "mixed volume skipped: {} variables exceeds the limit of {}",
                ps.num_variables(),
                MIXED_VOLUME_MAX_VARIABLES
            ));
            None
        } else {
            match select_square_subsystem(&ps, SubsetStrategy::CanonicalPrefix)
                .and_then(|sq| mixed_volume(&sq.supports, opts.seed).map(|r| (sq.num_equations(), r)))
            {
                Ok((used, r)) => {
                    if !sys.single_beam() {
                        notes.push("mixed volume is not conclusive for multi-beam systems".into());
                    }
                    Some(MixedVolumeSummary {
                        value: r.mixed_volume,
                        method: "mixed-cells".into(),
                        cells: r.cells.len(),
                        equations_used: used,
                    })
                }
                Err(e) => {
                    notes.push(format!("mixed volume skipped: {e}"));
                    None
                }
            }
        }
    } else {
        None
    };

    let numeric = if opts.numeric {
        let ch = random_channels(sys, opts.seed);
        let mopts = MinimizeOptions {
            seed: opts.seed,
            max_iters: opts.max_iters,
            ..Default::default()
        };
        match minimize(sys, &ch, &mopts) {
            Ok((_, trace)) => Some(NumericSummary {
                max_p: trace.max_percentage(),
                mean_p: trace.mean_percentage(),
                percentages: trace.percentages.clone(),
                iterations: trace.iterations,
                converged: trace.converged,
            }),
            Err(e) => {
                notes.push(format!("numeric probe skipped: {e}"));
                None
            }
        }
    } else {
        None
    };

    let verdict = decide(sys, &proper, bounds.as_ref(), mixed.as_ref(), numeric.as_ref());
    FeasibilityReport {
        schema_version: SCHEMA_VERSION,
        system: sys.clone(),
        counts,
        proper,
        bounds,
        mixed_volume: mixed,
        numeric,
        verdict,
        notes,
        provenance: Provenance {
            seed: opts.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            runtime_ms: Some(start.elapsed().as_millis() as u64),
        },
    }
}
