//! Encode, place and verify in one pass.
//!
//! Verification re-reads the serialized artifacts, audits them and sweeps the
//! placement from scratch; nothing computed by the earlier stages is reused.

use thiserror::Error;

use crate::encoder::{
    audit_encoding, build_model, synthesize_encoding, Configuration, EncodeError, EncoderOptions,
    Encoding, EncodingViolation, ModelVariant,
};
use crate::floorplan::{
    build_placement_problem, check_placement, default_height_bound, optimize_floorplan,
    requirement_for_encoding, FfGeometry, FloorplanError, FloorplanOptions, Placement,
    PlacementViolation,
};
use crate::fsm::FsmSpec;
use crate::laser::{AttackerModel, LaserError};
use crate::metrics::{analyze, MetricsError, VulnerabilityReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{name} of {value} µm is not a positive multiple of the {unit} µm grid")]
    BadLength {
        name: &'static str,
        value: f64,
        unit: f64,
    },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Floorplan(#[from] FloorplanError),
    #[error(transparent)]
    Laser(#[from] LaserError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Physical length in grid units, rounded half-up. Zero is rejected.
pub fn to_grid(name: &'static str, um: f64, unit_um: f64) -> Result<i64, PipelineError> {
    let bad = || PipelineError::BadLength {
        name,
        value: um,
        unit: unit_um,
    };
    if !(um.is_finite() && unit_um.is_finite() && unit_um > 0.0) {
        return Err(bad());
    }
    // 1e-9 absorbs binary noise such as 0.3 / 0.1 = 2.9999999999999996
    let units = (um / unit_um + 0.5 + 1e-9).floor();
    if units < 1.0 || units > i64::MAX as f64 {
        return Err(bad());
    }
    Ok(units as i64)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub variant: ModelVariant,
    pub attacker: AttackerModel,
    pub geometry: FfGeometry,
    pub grid_unit_um: f64,
    pub max_n: Option<usize>,
    pub widths: Option<Vec<i64>>,
    pub height_bound: Option<i64>,
    /// Worker count for the laser sweep.
    pub partitions: usize,
}

impl PipelineConfig {
    /// One laser of 1 µm on a 0.1 µm grid swept at 0.1 µm.
    pub fn new(variant: ModelVariant, x: usize) -> Result<Self, PipelineError> {
        Ok(Self {
            variant,
            attacker: AttackerModel::new(x, 10, 1)?,
            geometry: FfGeometry::default(),
            grid_unit_um: 0.1,
            max_n: None,
            widths: None,
            height_bound: None,
            partitions: 1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Secure,
    /// The sweep found spatially vulnerable transitions.
    Vulnerable,
    /// No vulnerable transition, but an artifact fails its audit.
    Invalid,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Secure => 0,
            Verdict::Vulnerable => 2,
            Verdict::Invalid => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub report: VulnerabilityReport,
    pub encoding_violations: Vec<EncodingViolation>,
    pub placement_violations: Vec<PlacementViolation>,
}

impl Verification {
    pub fn verdict(&self) -> Verdict {
        if !self.report.is_secure() {
            Verdict::Vulnerable
        } else if self.encoding_violations.is_empty() && self.placement_violations.is_empty() {
            Verdict::Secure
        } else {
            Verdict::Invalid
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub encoding: Encoding,
    pub placement: Placement,
    pub verification: Verification,
}

impl PipelineOutcome {
    pub fn verdict(&self) -> Verdict {
        self.verification.verdict()
    }
}

pub fn encode(fsm: &FsmSpec, config: &PipelineConfig) -> Result<Encoding, PipelineError> {
    Ok(synthesize_encoding(
        fsm,
        config.variant,
        config.attacker.x,
        &EncoderOptions {
            max_n: config.max_n,
        },
    )?)
}

pub fn place(encoding: &Encoding, config: &PipelineConfig) -> Result<Placement, PipelineError> {
    let (entries, req) =
        requirement_for_encoding(encoding, config.geometry, config.attacker.diameter);
    let options = FloorplanOptions {
        widths: config.widths.clone(),
        height_bound: config.height_bound,
        grid_unit_um: Some(config.grid_unit_um),
    };
    Ok(optimize_floorplan(&entries, &req, &options)?)
}

/// Audits both artifacts and sweeps the placement.
pub fn verify(
    fsm: &FsmSpec,
    encoding: &Encoding,
    placement: &Placement,
    attacker: &AttackerModel,
    partitions: usize,
) -> Result<Verification, PipelineError> {
    let (_, req) = requirement_for_encoding(encoding, FfGeometry::default(), attacker.diameter);
    Ok(Verification {
        report: analyze(fsm, encoding, placement, attacker, partitions)?,
        encoding_violations: audit_encoding(fsm, encoding),
        placement_violations: check_placement(placement, &req),
    })
}

pub fn run_pipeline(
    fsm: &FsmSpec,
    config: &PipelineConfig,
) -> Result<PipelineOutcome, PipelineError> {
    let encoding = encode(fsm, config)?;
    let placement = place(&encoding, config)?;
    let reread_encoding = Encoding::from_json(fsm, &encoding.to_json_string(fsm))?;
    let reread_placement = Placement::from_json(&placement.to_json_string())?;
    let verification = verify(
        fsm,
        &reread_encoding,
        &reread_placement,
        &config.attacker,
        config.partitions,
    )?;
    Ok(PipelineOutcome {
        encoding,
        placement,
        verification,
    })
}

/// LP text of the encoding model for the configuration the encoding uses.
pub fn encoding_lp(fsm: &FsmSpec, encoding: &Encoding) -> Result<String, PipelineError> {
    let config = Configuration {
        n: encoding.n,
        m_right: encoding.m_right,
        m_left: encoding.m_left,
        at_blocks: encoding.at_blocks.clone(),
    };
    Ok(build_model(fsm, encoding.variant, encoding.x, &config)?
        .problem
        .to_lp_string())
}

/// LP text of the placement model at the placement's width.
pub fn placement_lp(
    encoding: &Encoding,
    placement: &Placement,
    config: &PipelineConfig,
) -> Result<String, PipelineError> {
    let (entries, req) =
        requirement_for_encoding(encoding, config.geometry, config.attacker.diameter);
    let bound = config
        .height_bound
        .unwrap_or_else(|| default_height_bound(&entries, req.min_distance));
    Ok(
        build_placement_problem(&entries, &req, placement.width, bound)?
            .problem
            .to_lp_string(),
    )
}
