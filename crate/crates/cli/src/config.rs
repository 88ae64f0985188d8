//! Run settings from an optional TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lfiguard::encoder::ModelVariant;
use lfiguard::floorplan::FfGeometry;
use lfiguard::laser::AttackerModel;
use lfiguard::pipeline::{to_grid, PipelineConfig};
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub fsm: Option<PathBuf>,
    pub variant: Option<String>,
    pub lasers: Option<usize>,
    pub diameter_um: Option<f64>,
    pub step_um: Option<f64>,
    pub grid_unit_um: Option<f64>,
    pub max_n: Option<usize>,
    pub widths: Option<Vec<i64>>,
    pub height_bound: Option<i64>,
    pub out_dir: Option<PathBuf>,
    pub partitions: Option<usize>,
    pub dump_lp: Option<bool>,
    pub geometry: Option<GeometryConfig>,
}

/// Cell size and sensitive-point offsets in grid units.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub w: Option<i64>,
    pub h: Option<i64>,
    pub reset_offset: Option<(i64, i64)>,
    pub set_offset: Option<(i64, i64)>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with defaults for any of these flags
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// FSM description (JSON)
    #[arg(long, value_name = "FILE")]
    pub fsm: Option<PathBuf>,
    /// Fault model: bitflip, reset, set or setreset
    #[arg(long)]
    pub variant: Option<String>,
    /// Number of simultaneous lasers
    #[arg(long, value_name = "X")]
    pub lasers: Option<usize>,
    /// Beam diameter in µm [default: 1.0]
    #[arg(long, value_name = "UM")]
    pub diameter_um: Option<f64>,
    /// Sweep step in µm [default: one grid unit]
    #[arg(long, value_name = "UM")]
    pub step_um: Option<f64>,
    /// Grid unit in µm [default: 0.1]
    #[arg(long, value_name = "UM")]
    pub grid_um: Option<f64>,
    /// Largest code width the encoder may try
    #[arg(long, value_name = "N")]
    pub max_n: Option<usize>,
    /// Comma-separated floorplan width candidates in grid units
    #[arg(long, value_delimiter = ',', value_name = "W,...")]
    pub widths: Option<Vec<i64>>,
    /// Directory receiving the JSON artifacts [default: .]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for the laser sweep [default: 1]
    #[arg(long, value_name = "K")]
    pub partitions: Option<usize>,
    /// Also write the ILP models in LP format
    #[arg(long)]
    pub dump_lp: bool,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub fsm: Option<PathBuf>,
    pub variant: Option<ModelVariant>,
    pub lasers: Option<usize>,
    pub pipeline: PartialPipeline,
    pub out_dir: PathBuf,
    pub dump_lp: bool,
}

/// Everything but the variant and laser count, which may come from an
/// encoding document.
#[derive(Debug, Clone)]
pub struct PartialPipeline {
    pub diameter: i64,
    pub sweep_step: i64,
    pub grid_unit_um: f64,
    pub geometry: FfGeometry,
    pub max_n: Option<usize>,
    pub widths: Option<Vec<i64>>,
    pub height_bound: Option<i64>,
    pub partitions: usize,
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => load(path)?,
            None => FileConfig::default(),
        };
        let grid_unit_um = args.grid_um.or(file.grid_unit_um).unwrap_or(0.1);
        let diameter = to_grid(
            "diameter",
            args.diameter_um.or(file.diameter_um).unwrap_or(1.0),
            grid_unit_um,
        )?;
        let sweep_step = to_grid(
            "sweep step",
            args.step_um.or(file.step_um).unwrap_or(grid_unit_um),
            grid_unit_um,
        )?;
        let variant = args
            .variant
            .clone()
            .or(file.variant)
            .map(|v| v.parse::<ModelVariant>().map_err(anyhow::Error::msg))
            .transpose()?;
        let lasers = args.lasers.or(file.lasers);
        if lasers == Some(0) {
            bail!("--lasers must be at least 1");
        }
        let partitions = args.partitions.or(file.partitions).unwrap_or(1);
        if partitions == 0 {
            bail!("--partitions must be at least 1");
        }
        let g = file.geometry.unwrap_or_default();
        let base = FfGeometry::default();
        let (w, h) = (g.w.unwrap_or(base.w), g.h.unwrap_or(base.h));
        let mut geometry = FfGeometry::with_default_offsets(w, h)?;
        geometry.reset_offset = g.reset_offset.unwrap_or(geometry.reset_offset);
        geometry.set_offset = g.set_offset.unwrap_or(geometry.set_offset);
        geometry.validate()?;
        Ok(Self {
            fsm: args.fsm.clone().or(file.fsm),
            variant,
            lasers,
            pipeline: PartialPipeline {
                diameter,
                sweep_step,
                grid_unit_um,
                geometry,
                max_n: args.max_n.or(file.max_n),
                widths: args.widths.clone().or(file.widths),
                height_bound: file.height_bound,
                partitions,
            },
            out_dir: args
                .out_dir
                .clone()
                .or(file.out_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            dump_lp: args.dump_lp || file.dump_lp.unwrap_or(false),
        })
    }

    pub fn fsm_path(&self) -> Result<&Path> {
        self.fsm
            .as_deref()
            .context("no FSM given (use --fsm or `fsm` in the config file)")
    }

    pub fn attacker(&self, x: usize) -> Result<AttackerModel> {
        Ok(AttackerModel::new(
            x,
            self.pipeline.diameter,
            self.pipeline.sweep_step,
        )?)
    }

    pub fn pipeline_config(&self, variant: ModelVariant, x: usize) -> Result<PipelineConfig> {
        let p = &self.pipeline;
        Ok(PipelineConfig {
            variant,
            attacker: self.attacker(x)?,
            geometry: p.geometry,
            grid_unit_um: p.grid_unit_um,
            max_n: p.max_n,
            widths: p.widths.clone(),
            height_bound: p.height_bound,
            partitions: p.partitions,
        })
    }

    /// Variant and laser count required for synthesis.
    pub fn synthesis_config(&self) -> Result<PipelineConfig> {
        let variant = self
            .variant
            .context("no fault model given (use --variant)")?;
        self.pipeline_config(variant, self.lasers.unwrap_or(1))
    }
}

fn load(path: &Path) -> Result<FileConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
