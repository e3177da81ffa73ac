//! Report types for the command-line frontend.
//!
//! Every report renders to a human-readable text form and, via serde, to
//! JSON. Both forms are deterministic functions of the inputs and recorded
//! configuration — no timestamps, no environment, no absolute paths — so
//! identical invocations produce byte-identical bytes. Text output prints
//! floats with 17 significant digits; JSON uses the shortest representation
//! that parses back to the same value.

use std::fmt::Write as _;

use serde::Serialize;

use crate::channels::KrausChannel;
use crate::entropy::{ssa_equality_structure, von_neumann_entropy, TripartiteState};
use crate::io::{self, Document, MatrixData};
use crate::linalg::DensityMatrix;
use crate::sufficiency::{
    extract_structure, pull_back_structure, SufficiencyConfig, SufficiencyReport,
};
use crate::Result;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, scientific notation.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn float_list(values: &[f64]) -> String {
    let entries: Vec<String> = values.iter().map(|&x| sig17(x)).collect();
    format!("[{}]", entries.join(", "))
}

pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub version: String,
    pub command: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus_terms: usize,
    pub sufficient: bool,
    pub ns_max_deviation: f64,
    pub recovery_deviation_1: f64,
    pub recovery_deviation_2: f64,
    pub tol: f64,
    pub t_grid: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CheckReport {
    /// Assembles the report for a finished sufficiency check.
    pub fn from_run(
        command: &str,
        channel: &KrausChannel,
        rep: &SufficiencyReport,
        seed: Option<u64>,
    ) -> CheckReport {
        CheckReport {
            version: TOOL_VERSION.into(),
            command: command.into(),
            in_dim: channel.in_dim(),
            out_dim: channel.out_dim(),
            kraus_terms: channel.coefficients().len(),
            sufficient: rep.verdict,
            ns_max_deviation: rep.ns_max_deviation,
            recovery_deviation_1: rep.recovery_deviation_1,
            recovery_deviation_2: rep.recovery_deviation_2,
            tol: rep.tol,
            t_grid: rep.t_grid.clone(),
            seed,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "petz {} {}", self.version, self.command);
        let _ = writeln!(
            out,
            "channel: {} -> {}, kraus terms: {}",
            self.in_dim, self.out_dim, self.kraus_terms
        );
        let _ = writeln!(
            out,
            "verdict: {}",
            if self.sufficient { "sufficient" } else { "not sufficient" }
        );
        let _ = writeln!(out, "ns_max_deviation: {}", sig17(self.ns_max_deviation));
        let _ = writeln!(out, "recovery_deviation_1: {}", sig17(self.recovery_deviation_1));
        let _ = writeln!(out, "recovery_deviation_2: {}", sig17(self.recovery_deviation_2));
        let _ = writeln!(out, "tol: {}", sig17(self.tol));
        let _ = writeln!(out, "t_grid: {}", float_list(&self.t_grid));
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed: {seed}");
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockRow {
    pub p: usize,
    pub dimension: usize,
    pub multiplicity: usize,
    pub lambda_1: f64,
    pub lambda_2: f64,
}

/// Per-block factor matrices, each a `state` document.
#[derive(Clone, Debug, Serialize)]
pub struct BlockFactors {
    pub p: usize,
    pub s_1: Document,
    pub s_2: Document,
    pub r: Document,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub version: String,
    pub command: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus_terms: usize,
    pub sufficient: bool,
    pub ns_max_deviation: f64,
    pub recovery_deviation_1: f64,
    pub recovery_deviation_2: f64,
    pub space_dim: usize,
    pub blocks: Vec<BlockRow>,
    pub output_residual_1: f64,
    pub output_residual_2: f64,
    pub pullback_commutator_max: f64,
    pub input_residual_1: f64,
    pub input_residual_2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<BlockFactors>>,
    pub tol: f64,
    pub t_grid: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl StructureReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "petz {} {}", self.version, self.command);
        let _ = writeln!(
            out,
            "channel: {} -> {}, kraus terms: {}",
            self.in_dim, self.out_dim, self.kraus_terms
        );
        let _ = writeln!(out, "verdict: sufficient");
        let _ = writeln!(out, "ns_max_deviation: {}", sig17(self.ns_max_deviation));
        let _ = writeln!(out, "recovery_deviation_1: {}", sig17(self.recovery_deviation_1));
        let _ = writeln!(out, "recovery_deviation_2: {}", sig17(self.recovery_deviation_2));
        let _ = writeln!(out, "space_dim: {}", self.space_dim);
        let _ = writeln!(out, "blocks (p, d, m, lambda_1, lambda_2):");
        for b in &self.blocks {
            let _ = writeln!(
                out,
                "  {}  {}  {}  {}  {}",
                b.p,
                b.dimension,
                b.multiplicity,
                sig17(b.lambda_1),
                sig17(b.lambda_2)
            );
        }
        let _ = writeln!(out, "output_residual_1: {}", sig17(self.output_residual_1));
        let _ = writeln!(out, "output_residual_2: {}", sig17(self.output_residual_2));
        let _ = writeln!(
            out,
            "pullback_commutator_max: {}",
            sig17(self.pullback_commutator_max)
        );
        let _ = writeln!(out, "input_residual_1: {}", sig17(self.input_residual_1));
        let _ = writeln!(out, "input_residual_2: {}", sig17(self.input_residual_2));
        if self.factors.is_some() {
            let _ = writeln!(out, "factors: embedded in JSON form (--json)");
        }
        let _ = writeln!(out, "tol: {}", sig17(self.tol));
        let _ = writeln!(out, "t_grid: {}", float_list(&self.t_grid));
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed: {seed}");
        }
        out
    }
}

/// Extracts the block decomposition of a sufficient instance, pulls it back
/// through the recovery map, and assembles the full report. The sufficiency
/// check must already have returned a positive verdict.
pub fn structure_report(
    channel: &KrausChannel,
    d1: &DensityMatrix,
    d2: &DensityMatrix,
    cfg: &SufficiencyConfig,
    rep: &SufficiencyReport,
    emit_factors: bool,
    seed: Option<u64>,
) -> Result<StructureReport> {
    let decomposition = extract_structure(channel, d1, d2, cfg)?;
    let pulled = pull_back_structure(channel, &decomposition, d1)?;

    let td1 = channel.apply_to_state(d1)?;
    let td2 = channel.apply_to_state(d2)?;
    let commutator_max = pulled
        .blocks
        .iter()
        .flat_map(|b| [b.s_1.commutator(&b.r).hs_norm(), b.s_2.commutator(&b.r).hs_norm()])
        .fold(0.0, f64::max);
    let factors = emit_factors.then(|| {
        decomposition
            .blocks
            .iter()
            .enumerate()
            .map(|(p, b)| BlockFactors {
                p,
                s_1: Document::state_with_dims(&b.s_1, vec![b.dimension]),
                s_2: Document::state_with_dims(&b.s_2, vec![b.dimension]),
                r: Document::state_with_dims(&b.r, vec![b.multiplicity]),
            })
            .collect()
    });
    Ok(StructureReport {
        version: TOOL_VERSION.into(),
        command: "structure".into(),
        in_dim: channel.in_dim(),
        out_dim: channel.out_dim(),
        kraus_terms: channel.coefficients().len(),
        sufficient: true,
        ns_max_deviation: rep.ns_max_deviation,
        recovery_deviation_1: rep.recovery_deviation_1,
        recovery_deviation_2: rep.recovery_deviation_2,
        space_dim: decomposition.space_dim,
        blocks: decomposition
            .blocks
            .iter()
            .enumerate()
            .map(|(p, b)| BlockRow {
                p,
                dimension: b.dimension,
                multiplicity: b.multiplicity,
                lambda_1: b.lambda_1,
                lambda_2: b.lambda_2,
            })
            .collect(),
        output_residual_1: decomposition.reassemble(1).hs_distance(td1.matrix()),
        output_residual_2: decomposition.reassemble(2).hs_distance(td2.matrix()),
        pullback_commutator_max: commutator_max,
        input_residual_1: pulled.reassemble(1).hs_distance(d1.matrix()),
        input_residual_2: pulled.reassemble(2).hs_distance(d2.matrix()),
        factors,
        tol: rep.tol,
        t_grid: rep.t_grid.clone(),
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MarkovTermReport {
    pub term: usize,
    pub left_split: usize,
    pub right_split: usize,
    pub weight: f64,
    pub left: Document,
    pub right: Document,
    pub middle_isometry: MatrixData,
}

#[derive(Clone, Debug, Serialize)]
pub struct SsaReport {
    pub version: String,
    pub command: String,
    pub dims: Vec<usize>,
    /// `"nats"` or `"bits"`; applies to the four entropies and the gap.
    pub units: String,
    pub entropy_abc: f64,
    pub entropy_ab: f64,
    pub entropy_bc: f64,
    pub entropy_b: f64,
    pub gap: f64,
    pub equality: bool,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<Vec<MarkovTermReport>>,
}

impl SsaReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "petz {} {}", self.version, self.command);
        let _ = writeln!(
            out,
            "dims: A={}, B={}, C={}",
            self.dims[0], self.dims[1], self.dims[2]
        );
        let _ = writeln!(out, "units: {}", self.units);
        let _ = writeln!(out, "S_ABC: {}", sig17(self.entropy_abc));
        let _ = writeln!(out, "S_AB: {}", sig17(self.entropy_ab));
        let _ = writeln!(out, "S_BC: {}", sig17(self.entropy_bc));
        let _ = writeln!(out, "S_B: {}", sig17(self.entropy_b));
        let _ = writeln!(out, "gap: {}", sig17(self.gap));
        let _ = writeln!(
            out,
            "verdict: {}",
            if self.equality { "equality" } else { "strict inequality" }
        );
        let _ = writeln!(out, "tol: {}", sig17(self.tol));
        if let Some(terms) = &self.structure {
            let _ = writeln!(out, "markov terms (i, L, R, weight):");
            for t in terms {
                let _ = writeln!(
                    out,
                    "  {}  {}  {}  {}",
                    t.term,
                    t.left_split,
                    t.right_split,
                    sig17(t.weight)
                );
            }
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed: {seed}");
        }
        out
    }
}

/// Computes the strong-subadditivity gap of a tripartite state and, when the
/// gap vanishes below `tol` and `with_structure` is set, the Markov
/// decomposition. `bits` rescales the displayed entropies and gap only; the
/// tolerance and the verdict stay in nats.
pub fn ssa_report(
    state: &TripartiteState,
    tol: f64,
    with_structure: bool,
    bits: bool,
    seed: Option<u64>,
) -> Result<SsaReport> {
    let s_abc = von_neumann_entropy(state.density());
    let s_ab = von_neumann_entropy(&state.reduced(&[0, 1])?);
    let s_bc = von_neumann_entropy(&state.reduced(&[1, 2])?);
    let s_b = von_neumann_entropy(&state.reduced(&[1])?);
    let gap = s_ab + s_bc - s_abc - s_b;
    let equality = gap < tol;

    let structure = if equality && with_structure {
        let decomposition = ssa_equality_structure(state, tol)?;
        Some(
            decomposition
                .terms
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let (l, r) = t.split(decomposition.dim_a, decomposition.dim_c);
                    MarkovTermReport {
                        term: i,
                        left_split: l,
                        right_split: r,
                        weight: t.weight,
                        left: Document::state_with_dims(
                            t.left.matrix(),
                            vec![decomposition.dim_a, l],
                        ),
                        right: Document::state_with_dims(
                            t.right.matrix(),
                            vec![r, decomposition.dim_c],
                        ),
                        middle_isometry: io::matrix_to_data(&t.middle_isometry),
                    }
                })
                .collect(),
        )
    } else {
        None
    };

    let conv = if bits { std::f64::consts::LN_2.recip() } else { 1.0 };
    Ok(SsaReport {
        version: TOOL_VERSION.into(),
        command: "ssa".into(),
        dims: state.dims().dims().to_vec(),
        units: if bits { "bits".into() } else { "nats".into() },
        entropy_abc: s_abc * conv,
        entropy_ab: s_ab * conv,
        entropy_bc: s_bc * conv,
        entropy_b: s_b * conv,
        gap: gap * conv,
        equality,
        tol,
        seed,
        structure,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GenReport {
    pub version: String,
    pub command: String,
    pub family: String,
    pub seed: u64,
    pub files: Vec<String>,
}

impl GenReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "petz {} {} {}", self.version, self.command, self.family);
        let _ = writeln!(out, "seed: {}", self.seed);
        for f in &self.files {
            let _ = writeln!(out, "wrote: {f}");
        }
        out
    }
}
