//! Secure state-encoding synthesis.
//!
//! For each candidate width `n` (starting at ⌈log₂|S|⌉) and each security
//! budget, an ILP minimizing switching activity is assembled from the
//! distinctness rows, the per-transition Hamming guard band and the
//! direction rows of the selected fault model. The first feasible tier wins.

mod audit;
mod model;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use audit::{audit_encoding, switching_activity, EncodingViolation};
pub use model::EncodingModel;

use crate::code::Code;
use crate::fsm::FsmSpec;
use crate::ilp::{self, IlpError};
use crate::rational::{format_rational, parse_rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("code width must be positive")]
    ZeroWidth,
    #[error("guard band needs {needed} security bits but only {available} are available")]
    StructuralInfeasible { needed: usize, available: usize },
    #[error("no feasible encoding with at most {max_n} bits")]
    SynthesisExhausted { max_n: usize },
    #[error("laser count must be at least 1")]
    InvalidLaserCount,
    #[error(transparent)]
    Ilp(#[from] IlpError),
    #[error("malformed encoding document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelVariant {
    #[serde(rename = "bitflip")]
    BitFlip,
    /// Authorized transitions raise security bits (0→1).
    #[serde(rename = "reset")]
    ResetModel,
    /// Authorized transitions clear security bits (1→0).
    #[serde(rename = "set")]
    SetModel,
    /// Right block follows the reset model, left block the set model.
    #[serde(rename = "setreset")]
    SetAndReset,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::BitFlip,
        ModelVariant::ResetModel,
        ModelVariant::SetModel,
        ModelVariant::SetAndReset,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::BitFlip => "bitflip",
            ModelVariant::ResetModel => "reset",
            ModelVariant::SetModel => "set",
            ModelVariant::SetAndReset => "setreset",
        }
    }

    pub fn is_bit_flip(self) -> bool {
        self == ModelVariant::BitFlip
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                format!("unknown variant `{s}` (expected bitflip, reset, set or setreset)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    Left,
    Right,
}

impl Block {
    fn as_str(self) -> &'static str {
        match self {
            Block::Left => "left",
            Block::Right => "right",
        }
    }
}

/// How an authorized transition is allowed to move its security bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Any change (bit-flip model).
    Any,
    /// 0→1 only on the source's zeros.
    Rising,
    /// 1→0 only on the source's ones.
    Falling,
}

/// Security block of one authorized transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guard {
    pub block: Block,
    pub positions: Vec<usize>,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub n: usize,
    /// Indexed by state.
    pub codes: Vec<Code>,
    pub m_right: usize,
    pub m_left: usize,
    pub variant: ModelVariant,
    pub x: usize,
    pub objective: BigRational,
    /// Block protecting each authorized transition, in FSM order.
    pub at_blocks: Vec<Block>,
}

impl Encoding {
    pub fn block_positions(&self, block: Block) -> Vec<usize> {
        match block {
            Block::Left => (0..self.m_left).collect(),
            Block::Right => (self.n - self.m_right..self.n).collect(),
        }
    }

    /// Bit positions mapped to secure flip-flops.
    pub fn security_positions(&self) -> Vec<usize> {
        let mut out = self.block_positions(Block::Left);
        out.extend(self.block_positions(Block::Right));
        out
    }

    pub fn guard(&self, at_index: usize) -> Guard {
        let block = self.at_blocks[at_index];
        let direction = match (self.variant, block) {
            (ModelVariant::BitFlip, _) => Direction::Any,
            (ModelVariant::ResetModel, _) => Direction::Rising,
            (ModelVariant::SetModel, _) => Direction::Falling,
            (ModelVariant::SetAndReset, Block::Right) => Direction::Rising,
            (ModelVariant::SetAndReset, Block::Left) => Direction::Falling,
        };
        Guard {
            block,
            positions: self.block_positions(block),
            direction,
        }
    }

    pub fn to_json(&self, fsm: &FsmSpec) -> Value {
        let codes: BTreeMap<&str, String> = self
            .codes
            .iter()
            .enumerate()
            .map(|(i, c)| (fsm.state_name(i), c.to_string()))
            .collect();
        json!({
            "n": self.n,
            "m_right": self.m_right,
            "m_left": self.m_left,
            "variant": self.variant.as_str(),
            "x": self.x,
            "objective": format_rational(&self.objective),
            "codes": codes,
            "at_blocks": self.at_blocks.iter().map(|b| b.as_str()).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self, fsm: &FsmSpec) -> String {
        serde_json::to_string_pretty(&self.to_json(fsm)).expect("json value serializes")
    }

    /// Reads an encoding document. `at_blocks` may be omitted, in which case
    /// every transition is assumed to be guarded by the right block unless only
    /// the left block satisfies its direction rows.
    pub fn from_json(fsm: &FsmSpec, text: &str) -> Result<Self, EncodeError> {
        let bad = |m: String| EncodeError::Malformed(m);
        let doc: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let uint = |k: &str| {
            doc.get(k)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or_else(|| bad(format!("missing or non-integer `{k}`")))
        };
        let n = uint("n")?;
        let m_right = uint("m_right")?;
        let m_left = uint("m_left")?;
        let x = uint("x")?;
        if m_left + m_right > n {
            return Err(bad(format!(
                "m_left + m_right = {} exceeds n = {n}",
                m_left + m_right
            )));
        }
        let variant: ModelVariant = doc
            .get("variant")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing `variant`".into()))?
            .parse()
            .map_err(bad)?;
        let objective = match doc.get("objective") {
            Some(Value::String(s)) => parse_rational(s),
            Some(Value::Number(v)) => parse_rational(&v.to_string()),
            _ => None,
        }
        .ok_or_else(|| bad("missing or invalid `objective`".into()))?;
        let code_map = doc
            .get("codes")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("missing `codes`".into()))?;
        let mut codes = Vec::with_capacity(fsm.num_states());
        for s in fsm.states() {
            let text = code_map
                .get(s)
                .and_then(Value::as_str)
                .ok_or_else(|| bad(format!("no code for state `{s}`")))?;
            let code: Code = text.parse().map_err(|e| bad(format!("state `{s}`: {e}")))?;
            if code.len() != n {
                return Err(bad(format!(
                    "state `{s}` code has {} bits, expected {n}",
                    code.len()
                )));
            }
            codes.push(code);
        }
        if code_map.len() != fsm.num_states() {
            return Err(bad("codes mention states not in the FSM".into()));
        }
        let mut enc = Encoding {
            n,
            codes,
            m_right,
            m_left,
            variant,
            x,
            objective,
            at_blocks: Vec::new(),
        };
        enc.at_blocks = match doc.get("at_blocks").and_then(Value::as_array) {
            Some(arr) => {
                if arr.len() != fsm.authorized().len() {
                    return Err(bad(
                        "`at_blocks` length differs from authorized transitions".into(),
                    ));
                }
                arr.iter()
                    .map(|b| match b.as_str() {
                        Some("left") => Ok(Block::Left),
                        Some("right") => Ok(Block::Right),
                        _ => Err(bad(format!("invalid block {b}"))),
                    })
                    .collect::<Result<_, _>>()?
            }
            None => infer_blocks(fsm, &enc),
        };
        Ok(enc)
    }
}

fn infer_blocks(fsm: &FsmSpec, enc: &Encoding) -> Vec<Block> {
    fsm.authorized()
        .iter()
        .enumerate()
        .map(|(k, _)| {
            if enc.variant != ModelVariant::SetAndReset || enc.m_left == 0 {
                return Block::Right;
            }
            let mut probe = enc.clone();
            probe.at_blocks = vec![Block::Right; fsm.authorized().len()];
            if audit::guard_holds(fsm, &probe, k) {
                Block::Right
            } else {
                Block::Left
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderOptions {
    /// Largest code width tried; `None` means ⌈log₂|S|⌉ + 8.
    pub max_n: Option<usize>,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        Self { max_n: None }
    }
}

/// One point of the search: width, block sizes and per-transition block choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub n: usize,
    pub m_right: usize,
    pub m_left: usize,
    pub at_blocks: Vec<Block>,
}

pub fn min_width(num_states: usize) -> usize {
    let mut n = 0;
    while (1usize << n) < num_states {
        n += 1;
    }
    n.max(1)
}

fn add_guard_rows(
    model: &mut EncodingModel<'_>,
    fsm: &FsmSpec,
    variant: ModelVariant,
    x: usize,
    config: &Configuration,
) -> Result<(), EncodeError> {
    let right: Vec<usize> = (config.n - config.m_right..config.n).collect();
    let left: Vec<usize> = (0..config.m_left).collect();
    let (mut right_ats, mut left_ats) = (Vec::new(), Vec::new());
    for (&at, &block) in fsm.authorized().iter().zip(&config.at_blocks) {
        match block {
            Block::Right => right_ats.push(at),
            Block::Left => left_ats.push(at),
        }
    }
    model.add_hd_at_constraints(&right_ats, x, &right)?;
    model.add_hd_at_constraints(&left_ats, x, &left)?;
    match variant {
        ModelVariant::BitFlip => {}
        ModelVariant::ResetModel => model.add_reset_model_constraints(&right_ats, x, &right)?,
        ModelVariant::SetModel => model.add_set_model_constraints(&right_ats, x, &right)?,
        ModelVariant::SetAndReset => {
            model.add_reset_model_constraints(&right_ats, x, &right)?;
            model.add_set_model_constraints(&left_ats, x, &left)?;
        }
    }
    Ok(())
}

/// Columns whose complement maps feasible encodings to feasible encodings
/// of equal cost.
fn complementable_columns(variant: ModelVariant, config: &Configuration) -> Vec<usize> {
    if variant == ModelVariant::BitFlip {
        return (0..config.n).collect();
    }
    let mut directed = vec![false; config.n];
    for &block in &config.at_blocks {
        let range = match block {
            Block::Left => 0..config.m_left,
            Block::Right => config.n - config.m_right..config.n,
        };
        for l in range {
            directed[l] = true;
        }
    }
    (0..config.n).filter(|&l| !directed[l]).collect()
}

/// Builds the complete ILP for `config`.
///
/// Two symmetry-breaking families are added, both satisfied by the
/// lexicographically smallest optimum so the returned encoding is unaffected:
/// complementable columns of the first state are fixed to 0, and columns
/// within each interchangeable group (left block, normal bits, right block)
/// are ordered.
pub fn build_model<'a>(
    fsm: &'a FsmSpec,
    variant: ModelVariant,
    x: usize,
    config: &Configuration,
) -> Result<EncodingModel<'a>, EncodeError> {
    let mut model = EncodingModel::new(fsm, config.n)?;
    model.build_objective()?;
    add_guard_rows(&mut model, fsm, variant, x, config)?;
    model.add_distinctness_constraints()?;
    for l in complementable_columns(variant, config) {
        model.fix_bit(0, l, false)?;
    }
    let left: Vec<usize> = (0..config.m_left).collect();
    let normal: Vec<usize> = (config.m_left..config.n - config.m_right).collect();
    let right: Vec<usize> = (config.n - config.m_right..config.n).collect();
    for group in [left, normal, right] {
        model.order_columns(&group)?;
    }
    Ok(model)
}

/// Feasibility of the guard rows restricted to the sensitive states, plus
/// their mutual distinctness. A necessary condition for the full model.
pub fn guard_relaxation_feasible(
    fsm: &FsmSpec,
    variant: ModelVariant,
    x: usize,
    config: &Configuration,
) -> Result<bool, EncodeError> {
    let mut states: Vec<usize> = Vec::new();
    for &(a, p) in fsm.authorized() {
        for s in [a, p] {
            if !states.contains(&s) {
                states.push(s);
            }
        }
    }
    if states.is_empty() {
        return Ok(true);
    }
    let mut model = EncodingModel::with_states(fsm, config.n, &states)?;
    match add_guard_rows(&mut model, fsm, variant, x, config) {
        Ok(()) => {}
        Err(EncodeError::StructuralInfeasible { .. }) => return Ok(false),
        Err(e) => return Err(e),
    }
    model.add_distinctness_among(&states)?;
    Ok(ilp::solve(&model.problem)?.is_optimal())
}

/// Solves one configuration; `Ok(None)` when it is infeasible.
pub fn solve_configuration(
    fsm: &FsmSpec,
    variant: ModelVariant,
    x: usize,
    config: &Configuration,
) -> Result<Option<Encoding>, EncodeError> {
    if !guard_relaxation_feasible(fsm, variant, x, config)? {
        return Ok(None);
    }
    let model = match build_model(fsm, variant, x, config) {
        Ok(m) => m,
        Err(EncodeError::StructuralInfeasible { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let solution = ilp::solve(&model.problem)?;
    if !solution.is_optimal() {
        return Ok(None);
    }
    Ok(Some(Encoding {
        n: config.n,
        codes: model.decode(&solution.values),
        m_right: config.m_right,
        m_left: config.m_left,
        variant,
        x,
        objective: solution.objective_value,
        at_blocks: config.at_blocks.clone(),
    }))
}

/// Candidate configurations for width `n` grouped by total security budget,
/// smallest budget first.
pub fn configuration_tiers(
    fsm: &FsmSpec,
    variant: ModelVariant,
    x: usize,
    n: usize,
) -> Vec<Vec<Configuration>> {
    let k = fsm.authorized().len();
    if k == 0 {
        return vec![vec![Configuration {
            n,
            m_right: 0,
            m_left: 0,
            at_blocks: Vec::new(),
        }]];
    }
    let mut tiers = Vec::new();
    for total in x + 1..=n {
        let mut tier = vec![Configuration {
            n,
            m_right: total,
            m_left: 0,
            at_blocks: vec![Block::Right; k],
        }];
        if variant == ModelVariant::SetAndReset && k > 1 {
            for m_left in x + 1..=total.saturating_sub(x + 1) {
                // masks using both blocks; bit k-1-i set puts transition i on the left
                for mask in 1..(1u32 << k) - 1 {
                    let at_blocks = (0..k)
                        .map(|i| {
                            if mask >> (k - 1 - i) & 1 == 1 {
                                Block::Left
                            } else {
                                Block::Right
                            }
                        })
                        .collect();
                    tier.push(Configuration {
                        n,
                        m_right: total - m_left,
                        m_left,
                        at_blocks,
                    });
                }
            }
        }
        tiers.push(tier);
    }
    tiers
}

/// Smallest width, then smallest security budget, then minimal switching
/// activity. Ties keep the earliest configuration in enumeration order.
pub fn synthesize_encoding(
    fsm: &FsmSpec,
    variant: ModelVariant,
    x: usize,
    options: &EncoderOptions,
) -> Result<Encoding, EncodeError> {
    if x == 0 {
        return Err(EncodeError::InvalidLaserCount);
    }
    let start = min_width(fsm.num_states());
    let max_n = options.max_n.unwrap_or(start + 8);
    for n in start..=max_n {
        for tier in configuration_tiers(fsm, variant, x, n) {
            let mut best: Option<Encoding> = None;
            for config in &tier {
                if let Some(enc) = solve_configuration(fsm, variant, x, config)? {
                    if best.as_ref().is_none_or(|b| enc.objective < b.objective) {
                        best = Some(enc);
                    }
                }
            }
            if let Some(enc) = best {
                return Ok(enc);
            }
        }
    }
    Err(EncodeError::SynthesisExhausted { max_n })
}
