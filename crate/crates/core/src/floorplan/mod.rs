//! Minimum-area placement of state flip-flops with sensitive-point separation.

mod check;
mod model;
mod search;

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

pub use check::{check_placement, PlacementViolation};
pub use model::{build_placement_problem, PlacementModel};

use crate::encoder::{Block, Encoding, ModelVariant};
use crate::ilp::IlpError;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FloorplanError {
    #[error("invalid flip-flop geometry: {0}")]
    InvalidGeometry(String),
    #[error("floorplan bound {bound} is smaller than the largest flip-flop ({needed})")]
    BoundTooSmall { bound: i64, needed: i64 },
    #[error("separation distance must be at least 1 grid unit")]
    InvalidDistance,
    #[error("separation pair ({0}, {1}) is not a pair of distinct flip-flops")]
    InvalidPair(usize, usize),
    #[error("no width candidate admits a feasible placement")]
    PlacementExhausted,
    #[error("malformed placement document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Ilp(#[from] IlpError),
}

/// Rectangle size and sensitive-point offsets from the lower-left corner,
/// all in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FfGeometry {
    pub w: i64,
    pub h: i64,
    pub reset_offset: (i64, i64),
    pub set_offset: (i64, i64),
}

impl FfGeometry {
    /// Reset point at the middle of the left edge, set point at the middle of
    /// the bottom edge.
    pub fn with_default_offsets(w: i64, h: i64) -> Result<Self, FloorplanError> {
        let g = Self {
            w,
            h,
            reset_offset: (0, h / 2),
            set_offset: (w / 2, 0),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), FloorplanError> {
        let bad = |m: String| Err(FloorplanError::InvalidGeometry(m));
        if self.w <= 0 || self.h <= 0 {
            return bad(format!("size {}x{} must be positive", self.w, self.h));
        }
        if self.w % 2 != 0 || self.h % 2 != 0 {
            return bad(format!("size {}x{} must be even", self.w, self.h));
        }
        for (name, (dy, dz)) in [("reset", self.reset_offset), ("set", self.set_offset)] {
            if !(0..=self.w).contains(&dy) || !(0..=self.h).contains(&dz) {
                return bad(format!("{name} offset ({dy}, {dz}) lies outside the cell"));
            }
        }
        Ok(())
    }
}

impl Default for FfGeometry {
    fn default() -> Self {
        Self {
            w: 20,
            h: 10,
            reset_offset: (0, 5),
            set_offset: (10, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FfTag {
    Sff,
    Nff,
}

impl FfTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FfTag::Sff => "SFF",
            FfTag::Nff => "NFF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FfSpec {
    pub geometry: FfGeometry,
    pub tag: FfTag,
}

/// Which part of a flip-flop pair must be kept apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeparationRegion {
    Reset,
    Set,
    /// Reset points apart and set points apart.
    Both,
    /// Whole rectangles apart.
    Body,
}

impl SeparationRegion {
    pub fn as_str(self) -> &'static str {
        match self {
            SeparationRegion::Reset => "reset",
            SeparationRegion::Set => "set",
            SeparationRegion::Both => "both",
            SeparationRegion::Body => "body",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationRequirement {
    /// `(i, j, region)` with `i < j`.
    pub pairs: Vec<(usize, usize, SeparationRegion)>,
    /// Minimum distance D in grid units.
    pub min_distance: i64,
}

impl SeparationRequirement {
    pub fn none(min_distance: i64) -> Self {
        Self {
            pairs: Vec::new(),
            min_distance,
        }
    }

    pub fn region(&self, i: usize, j: usize) -> Option<SeparationRegion> {
        let (a, b) = (i.min(j), i.max(j));
        self.pairs
            .iter()
            .find(|(p, q, _)| (*p, *q) == (a, b))
            .map(|(_, _, r)| *r)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedFf {
    pub index: usize,
    pub bit_position: usize,
    pub tag: FfTag,
    pub y: i64,
    pub z: i64,
    pub geometry: FfGeometry,
}

impl PlacedFf {
    pub fn reset_point(&self) -> (i64, i64) {
        sensitive_points(self).0
    }

    pub fn set_point(&self) -> (i64, i64) {
        sensitive_points(self).1
    }
}

/// `(reset point, set point)` of a placed flip-flop.
pub fn sensitive_points(ff: &PlacedFf) -> ((i64, i64), (i64, i64)) {
    let g = &ff.geometry;
    (
        (ff.y + g.reset_offset.0, ff.z + g.reset_offset.1),
        (ff.y + g.set_offset.0, ff.z + g.set_offset.1),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub ffs: Vec<PlacedFf>,
    pub width: i64,
    pub height: i64,
    pub grid_unit_um: f64,
}

pub const DEFAULT_GRID_UNIT_UM: f64 = 0.1;

impl Placement {
    pub fn area(&self) -> i64 {
        self.width * self.height
    }

    pub fn to_json(&self) -> Value {
        let ffs: Vec<Value> = self
            .ffs
            .iter()
            .map(|f| {
                let (r, s) = sensitive_points(f);
                json!({
                    "index": f.index,
                    "bit_position": f.bit_position,
                    "tag": f.tag.as_str(),
                    "y": f.y,
                    "z": f.z,
                    "w": f.geometry.w,
                    "h": f.geometry.h,
                    "reset_point": [r.0, r.1],
                    "set_point": [s.0, s.1],
                })
            })
            .collect();
        json!({ "grid_unit_um": self.grid_unit_um, "W": self.width, "Y": self.height, "ffs": ffs })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json value serializes")
    }

    /// Reads a placement document; sensitive offsets are recovered from the
    /// stored points.
    pub fn from_json(text: &str) -> Result<Self, FloorplanError> {
        let bad = |m: String| FloorplanError::Malformed(m);
        let doc: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let int = |v: &Value, k: &str| {
            v.get(k)
                .and_then(Value::as_i64)
                .ok_or_else(|| bad(format!("missing integer `{k}`")))
        };
        let point = |v: &Value, k: &str| -> Result<(i64, i64), FloorplanError> {
            let arr = v.get(k).and_then(Value::as_array).filter(|a| a.len() == 2);
            match arr.map(|a| (a[0].as_i64(), a[1].as_i64())) {
                Some((Some(y), Some(z))) => Ok((y, z)),
                _ => Err(bad(format!("`{k}` must be a pair of integers"))),
            }
        };
        let width = int(&doc, "W")?;
        let height = int(&doc, "Y")?;
        let grid_unit_um = doc
            .get("grid_unit_um")
            .and_then(Value::as_f64)
            .ok_or_else(|| bad("missing `grid_unit_um`".into()))?;
        let arr = doc
            .get("ffs")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing `ffs`".into()))?;
        let mut ffs = Vec::with_capacity(arr.len());
        for f in arr {
            let index = int(f, "index")? as usize;
            let bit_position = int(f, "bit_position")? as usize;
            let tag = match f.get("tag").and_then(Value::as_str) {
                Some("SFF") => FfTag::Sff,
                Some("NFF") => FfTag::Nff,
                _ => return Err(bad(format!("ff {index}: tag must be SFF or NFF"))),
            };
            let (y, z) = (int(f, "y")?, int(f, "z")?);
            let (rp, sp) = (point(f, "reset_point")?, point(f, "set_point")?);
            let geometry = FfGeometry {
                w: int(f, "w")?,
                h: int(f, "h")?,
                reset_offset: (rp.0 - y, rp.1 - z),
                set_offset: (sp.0 - y, sp.1 - z),
            };
            geometry.validate()?;
            ffs.push(PlacedFf {
                index,
                bit_position,
                tag,
                y,
                z,
                geometry,
            });
        }
        for (k, f) in ffs.iter().enumerate() {
            if f.index != k {
                return Err(bad(format!(
                    "ff entries must be listed by index; found {} at {k}",
                    f.index
                )));
            }
        }
        Ok(Self {
            ffs,
            width,
            height,
            grid_unit_um,
        })
    }
}

/// Flip-flop list and separation pairs implied by an encoding: one FF per
/// bit, security bits tagged SFF, and pairs within each guarded block.
pub fn requirement_for_encoding(
    encoding: &Encoding,
    geometry: FfGeometry,
    min_distance: i64,
) -> (Vec<FfSpec>, SeparationRequirement) {
    let secure = encoding.security_positions();
    let ffs = (0..encoding.n)
        .map(|l| FfSpec {
            geometry,
            tag: if secure.contains(&l) {
                FfTag::Sff
            } else {
                FfTag::Nff
            },
        })
        .collect();
    let mut pairs = Vec::new();
    let mut push_block = |positions: Vec<usize>, region: SeparationRegion| {
        for (k, &i) in positions.iter().enumerate() {
            for &j in &positions[k + 1..] {
                pairs.push((i, j, region));
            }
        }
    };
    match encoding.variant {
        ModelVariant::BitFlip => push_block(secure.clone(), SeparationRegion::Body),
        // faults forging a rising guard must set bits, a falling one must reset them
        ModelVariant::ResetModel => push_block(
            encoding.block_positions(Block::Right),
            SeparationRegion::Set,
        ),
        ModelVariant::SetModel => push_block(
            encoding.block_positions(Block::Right),
            SeparationRegion::Reset,
        ),
        ModelVariant::SetAndReset => {
            push_block(
                encoding.block_positions(Block::Left),
                SeparationRegion::Reset,
            );
            push_block(
                encoding.block_positions(Block::Right),
                SeparationRegion::Set,
            );
        }
    }
    pairs.sort();
    (
        ffs,
        SeparationRequirement {
            pairs,
            min_distance,
        },
    )
}

/// Multiples of the widest flip-flop from the widest up to the total width.
pub fn default_width_candidates(entries: &[FfSpec]) -> Vec<i64> {
    let widest = entries.iter().map(|e| e.geometry.w).max().unwrap_or(0);
    let total: i64 = entries.iter().map(|e| e.geometry.w).sum();
    if widest == 0 {
        return Vec::new();
    }
    (1..)
        .map(|k| k * widest)
        .take_while(|&w| w <= total)
        .collect()
}

/// Height bound used when none is given: the stacked height plus one
/// separation gap per secure flip-flop.
pub fn default_height_bound(entries: &[FfSpec], min_distance: i64) -> i64 {
    let stacked: i64 = entries.iter().map(|e| e.geometry.h).sum();
    let secure = entries.iter().filter(|e| e.tag == FfTag::Sff).count() as i64;
    stacked + min_distance * secure
}

#[derive(Debug, Clone, Default)]
pub struct FloorplanOptions {
    pub widths: Option<Vec<i64>>,
    pub height_bound: Option<i64>,
    pub grid_unit_um: Option<f64>,
}

fn validate(entries: &[FfSpec], req: &SeparationRequirement) -> Result<(), FloorplanError> {
    for e in entries {
        e.geometry.validate()?;
    }
    if req.min_distance < 1 {
        return Err(FloorplanError::InvalidDistance);
    }
    for &(i, j, _) in &req.pairs {
        if i >= j || j >= entries.len() {
            return Err(FloorplanError::InvalidPair(i, j));
        }
    }
    Ok(())
}

/// Minimum-height placement for one width; `Ok(None)` when infeasible.
pub fn place_with_width(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    width: i64,
    height_bound: i64,
    grid_unit_um: f64,
) -> Result<Option<Placement>, FloorplanError> {
    model::check_bounds(entries, req, width, height_bound)?;
    Ok(
        search::min_height(entries, req, width, height_bound).map(|(height, coords)| {
            let ffs = entries
                .iter()
                .zip(coords)
                .enumerate()
                .map(|(i, (e, (y, z)))| PlacedFf {
                    index: i,
                    bit_position: i,
                    tag: e.tag,
                    y,
                    z,
                    geometry: e.geometry,
                })
                .collect();
            Placement {
                ffs,
                width,
                height,
                grid_unit_um,
            }
        }),
    )
}

/// Minimum-area placement over the width candidates, ties broken by the
/// smaller width. Candidates are solved on separate threads.
pub fn optimize_floorplan(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    options: &FloorplanOptions,
) -> Result<Placement, FloorplanError> {
    validate(entries, req)?;
    let grid_unit_um = options.grid_unit_um.unwrap_or(DEFAULT_GRID_UNIT_UM);
    if entries.is_empty() {
        return Ok(Placement {
            ffs: Vec::new(),
            width: 0,
            height: 0,
            grid_unit_um,
        });
    }
    let mut widths = options
        .widths
        .clone()
        .unwrap_or_else(|| default_width_candidates(entries));
    widths.sort_unstable();
    widths.dedup();
    let height_bound = options
        .height_bound
        .unwrap_or_else(|| default_height_bound(entries, req.min_distance));
    let widest = entries.iter().map(|e| e.geometry.w).max().unwrap_or(0);
    widths.retain(|&w| w >= widest);
    let results: Vec<Result<Option<Placement>, FloorplanError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = widths
            .iter()
            .map(|&w| {
                scope.spawn(move || place_with_width(entries, req, w, height_bound, grid_unit_um))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("placement worker panicked"))
            .collect()
    });
    let mut best: Option<Placement> = None;
    for r in results {
        if let Some(p) = r? {
            if best.as_ref().is_none_or(|b| p.area() < b.area()) {
                best = Some(p);
            }
        }
    }
    best.ok_or(FloorplanError::PlacementExhausted)
}

/// Index → (y, z) summary, convenient for comparisons.
pub fn coordinates(p: &Placement) -> BTreeMap<usize, (i64, i64)> {
    p.ffs.iter().map(|f| (f.index, (f.y, f.z))).collect()
}

#[cfg(test)]
mod tests;
