//! Laser coverage over a placement, the family of achievable fault sets, and
//! fault application on state vectors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::code::Code;
use crate::encoder::ModelVariant;
use crate::floorplan::{PlacedFf, Placement};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LaserError {
    #[error("attacker model invalid: {0}")]
    InvalidAttacker(String),
    #[error("{0} flip-flops exceed the {max} supported by the atom encoding", max = MAX_FFS)]
    TooManyFlipFlops(usize),
    #[error("flip-flop {0} receives both a set and a reset atom")]
    ConflictingAtoms(usize),
    #[error("flip-flop {0} has no bit position")]
    UnknownFf(usize),
    #[error("{mode} atoms cannot be applied under {expected} analysis")]
    WrongMode {
        mode: &'static str,
        expected: &'static str,
    },
}

/// Flip-flops addressable by an [`AtomSet`].
pub const MAX_FFS: usize = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackerModel {
    /// Simultaneous lasers.
    pub x: usize,
    /// Beam diameter in grid units.
    pub diameter: i64,
    /// Distance between swept laser centers in grid units.
    pub sweep_step: i64,
}

impl AttackerModel {
    pub fn new(x: usize, diameter: i64, sweep_step: i64) -> Result<Self, LaserError> {
        if x < 1 {
            return Err(LaserError::InvalidAttacker(
                "at least one laser is required".into(),
            ));
        }
        if diameter < 1 {
            return Err(LaserError::InvalidAttacker(
                "beam diameter must be at least one grid unit".into(),
            ));
        }
        if sweep_step < 1 {
            return Err(LaserError::InvalidAttacker(
                "sweep step must be at least one grid unit".into(),
            ));
        }
        Ok(Self {
            x,
            diameter,
            sweep_step,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Reset,
    Set,
    Flip,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Reset => "reset",
            Region::Set => "set",
            Region::Flip => "flip",
        }
    }

    fn offset(self) -> usize {
        match self {
            Region::Reset => 0,
            Region::Set => 1,
            Region::Flip => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaultAtom {
    pub ff: usize,
    pub region: Region,
}

impl FaultAtom {
    pub fn new(ff: usize, region: Region) -> Self {
        Self { ff, region }
    }

    fn index(self) -> usize {
        self.ff * 3 + self.region.offset()
    }
}

impl fmt::Display for FaultAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.region {
            Region::Reset => write!(f, "<FF{}", self.ff),
            Region::Set => write!(f, "FF{}>", self.ff),
            Region::Flip => write!(f, "~FF{}", self.ff),
        }
    }
}

/// Set of fault atoms packed into a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AtomSet(u128);

impl AtomSet {
    pub fn new() -> Self {
        Self(0)
    }

    pub fn from_atoms<I: IntoIterator<Item = FaultAtom>>(atoms: I) -> Self {
        let mut s = Self::new();
        for a in atoms {
            s.insert(a);
        }
        s
    }

    /// Panics if the flip-flop index is not addressable.
    pub fn insert(&mut self, atom: FaultAtom) {
        assert!(
            atom.ff < MAX_FFS,
            "flip-flop index {} out of range",
            atom.ff
        );
        self.0 |= 1u128 << atom.index();
    }

    pub fn contains(&self, atom: FaultAtom) -> bool {
        atom.ff < MAX_FFS && self.0 & (1u128 << atom.index()) != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn atoms(&self) -> Vec<FaultAtom> {
        let regions = [Region::Reset, Region::Set, Region::Flip];
        (0..128)
            .filter(|k| self.0 & (1u128 << k) != 0)
            .map(|k| FaultAtom::new(k / 3, regions[k % 3]))
            .collect()
    }

    /// Flip-flops touched by at least one atom.
    pub fn support(&self) -> BTreeSet<usize> {
        self.atoms().into_iter().map(|a| a.ff).collect()
    }
}

impl fmt::Display for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atoms: Vec<String> = self.atoms().iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", atoms.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SweepMode {
    /// Separate reset and set points per flip-flop.
    SetReset,
    /// Any hit on the cell body inverts it.
    BitFlip,
}

impl SweepMode {
    pub fn for_variant(variant: ModelVariant) -> Self {
        if variant.is_bit_flip() {
            SweepMode::BitFlip
        } else {
            SweepMode::SetReset
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::SetReset => "set-reset",
            SweepMode::BitFlip => "bit-flip",
        }
    }
}

type Point = (i64, i64);

fn point_covered(l: Point, p: Point, d: i64) -> bool {
    let (dy, dz) = (l.0 - p.0, l.1 - p.1);
    4 * (dy * dy + dz * dz) < d * d
}

fn body_covered(l: Point, ff: &PlacedFf, d: i64) -> bool {
    let g = &ff.geometry;
    let dy = (ff.y - l.0).max(l.0 - (ff.y + g.w)).max(0);
    let dz = (ff.z - l.1).max(l.1 - (ff.z + g.h)).max(0);
    4 * (dy * dy + dz * dz) < d * d
}

/// Atoms triggered by one laser centered at `l`.
pub fn cover_set(
    l: Point,
    diameter: i64,
    placement: &Placement,
    mode: SweepMode,
) -> BTreeSet<FaultAtom> {
    let mut out = BTreeSet::new();
    for ff in &placement.ffs {
        match mode {
            SweepMode::SetReset => {
                if point_covered(l, ff.reset_point(), diameter) {
                    out.insert(FaultAtom::new(ff.index, Region::Reset));
                }
                if point_covered(l, ff.set_point(), diameter) {
                    out.insert(FaultAtom::new(ff.index, Region::Set));
                }
            }
            SweepMode::BitFlip => {
                if body_covered(l, ff, diameter) {
                    out.insert(FaultAtom::new(ff.index, Region::Flip));
                }
            }
        }
    }
    out
}

/// Laser centers visited by the sweep, in row-major order of `(y, z)`.
pub fn sweep_positions(placement: &Placement, attacker: &AttackerModel) -> Vec<Point> {
    let margin = (attacker.diameter + 1) / 2;
    let step = attacker.sweep_step as usize;
    let ys: Vec<i64> = (-margin..=placement.width + margin).step_by(step).collect();
    let zs: Vec<i64> = (-margin..=placement.height + margin)
        .step_by(step)
        .collect();
    ys.iter()
        .flat_map(|&y| zs.iter().map(move |&z| (y, z)))
        .collect()
}

/// Distinct non-empty cover sets, each with its first center in sweep order.
fn sweep(
    placement: &Placement,
    diameter: i64,
    mode: SweepMode,
    positions: &[Point],
) -> BTreeMap<AtomSet, Point> {
    let mut out: BTreeMap<AtomSet, Point> = BTreeMap::new();
    for &l in positions {
        let set = AtomSet::from_atoms(cover_set(l, diameter, placement, mode));
        if set.is_empty() {
            continue;
        }
        out.entry(set).and_modify(|w| *w = (*w).min(l)).or_insert(l);
    }
    out
}

/// Fault sets reachable with up to `x` simultaneous lasers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VulnerableSets {
    pub x: usize,
    pub mode: SweepMode,
    /// Each member with the fewest laser centers producing it.
    family: BTreeMap<AtomSet, Vec<Point>>,
    /// Single-laser cover sets.
    covers: BTreeMap<AtomSet, Point>,
}

impl VulnerableSets {
    /// Closes `covers` under unions of at most `x` members.
    pub fn from_covers(covers: BTreeMap<AtomSet, Point>, x: usize, mode: SweepMode) -> Self {
        let mut family: BTreeMap<AtomSet, Vec<Point>> =
            covers.iter().map(|(&s, &p)| (s, vec![p])).collect();
        let mut frontier = family.clone();
        for _ in 2..=x {
            let mut next: BTreeMap<AtomSet, Vec<Point>> = BTreeMap::new();
            for (a, wa) in &frontier {
                for (c, pc) in &covers {
                    let u = a.union(*c);
                    if family.contains_key(&u) {
                        continue;
                    }
                    let mut w = wa.clone();
                    w.push(*pc);
                    w.sort_unstable();
                    next.entry(u)
                        .and_modify(|old| *old = old.clone().min(w.clone()))
                        .or_insert(w);
                }
            }
            if next.is_empty() {
                break;
            }
            family.extend(next.iter().map(|(k, v)| (*k, v.clone())));
            frontier = next;
        }
        Self {
            x,
            mode,
            family,
            covers,
        }
    }

    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    pub fn contains(&self, set: &AtomSet) -> bool {
        self.family.contains_key(set)
    }

    pub fn members(&self) -> impl Iterator<Item = (&AtomSet, &[Point])> {
        self.family.iter().map(|(s, w)| (s, w.as_slice()))
    }

    pub fn sets(&self) -> BTreeSet<AtomSet> {
        self.family.keys().copied().collect()
    }

    pub fn covers(&self) -> &BTreeMap<AtomSet, Point> {
        &self.covers
    }

    pub fn witness(&self, set: &AtomSet) -> Option<&[Point]> {
        self.family.get(set).map(Vec::as_slice)
    }

    /// Members grouped by the flip-flops they touch, listing for each
    /// flip-flop every region some member of the group reaches. This is the
    /// per-FF capability view where `<FF` marks reset and `FF>` marks set.
    pub fn capabilities(&self) -> BTreeMap<BTreeSet<usize>, BTreeMap<usize, BTreeSet<Region>>> {
        let mut out: BTreeMap<BTreeSet<usize>, BTreeMap<usize, BTreeSet<Region>>> = BTreeMap::new();
        for set in self.family.keys() {
            let entry = out.entry(set.support()).or_default();
            for a in set.atoms() {
                entry.entry(a.ff).or_default().insert(a.region);
            }
        }
        out
    }
}

/// Sweeps the placement and closes the cover sets under unions of up to `x`.
/// The sweep is split into `partitions` contiguous chunks run on separate
/// threads; the result does not depend on the split.
pub fn enumerate_vulnerable_sets(
    placement: &Placement,
    attacker: &AttackerModel,
    mode: SweepMode,
    partitions: usize,
) -> Result<VulnerableSets, LaserError> {
    if placement.ffs.len() > MAX_FFS {
        return Err(LaserError::TooManyFlipFlops(placement.ffs.len()));
    }
    let positions = sweep_positions(placement, attacker);
    let chunk = positions.len().div_ceil(partitions.max(1)).max(1);
    let parts: Vec<BTreeMap<AtomSet, Point>> = std::thread::scope(|scope| {
        let handles: Vec<_> = positions
            .chunks(chunk)
            .map(|c| scope.spawn(move || sweep(placement, attacker.diameter, mode, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut covers: BTreeMap<AtomSet, Point> = BTreeMap::new();
    for part in parts {
        for (s, p) in part {
            covers
                .entry(s)
                .and_modify(|w| *w = (*w).min(p))
                .or_insert(p);
        }
    }
    Ok(VulnerableSets::from_covers(covers, attacker.x, mode))
}

fn bit_of(bit_map: &BTreeMap<usize, usize>, ff: usize, len: usize) -> Result<usize, LaserError> {
    bit_map
        .get(&ff)
        .copied()
        .filter(|&b| b < len)
        .ok_or(LaserError::UnknownFf(ff))
}

/// Applies every atom to `state`; returns the new vector and the number of
/// bits that changed. A reset and a set atom on the same flip-flop is an
/// error here; see [`apply_resolved`].
pub fn apply_fault(
    state: &Code,
    atoms: &BTreeSet<FaultAtom>,
    bit_map: &BTreeMap<usize, usize>,
) -> Result<(Code, usize), LaserError> {
    let mut regions: BTreeMap<usize, BTreeSet<Region>> = BTreeMap::new();
    for a in atoms {
        regions.entry(a.ff).or_default().insert(a.region);
    }
    if let Some((&ff, _)) = regions
        .iter()
        .find(|(_, r)| r.contains(&Region::Reset) && r.contains(&Region::Set))
    {
        return Err(LaserError::ConflictingAtoms(ff));
    }
    apply_resolved(state, atoms, bit_map)
}

/// Like [`apply_fault`], but a flip-flop hit in both regions takes the one
/// its current value allows, since only that one can change it.
pub fn apply_resolved(
    state: &Code,
    atoms: &BTreeSet<FaultAtom>,
    bit_map: &BTreeMap<usize, usize>,
) -> Result<(Code, usize), LaserError> {
    let mut next = state.clone();
    let mut touched: BTreeMap<usize, BTreeSet<Region>> = BTreeMap::new();
    for a in atoms {
        touched.entry(a.ff).or_default().insert(a.region);
    }
    let mut changed = 0;
    for (ff, regions) in touched {
        let b = bit_of(bit_map, ff, state.len())?;
        let v = state.bit(b);
        let flips = regions.iter().filter(|r| **r == Region::Flip).count();
        let forced = if regions.contains(&Region::Reset) && v {
            Some(false)
        } else if regions.contains(&Region::Set) && !v {
            Some(true)
        } else {
            None
        };
        let new = match (flips, forced) {
            (0, Some(f)) => f,
            (0, None) => v,
            (_, None) => !v,
            (_, Some(_)) => {
                return Err(LaserError::WrongMode {
                    mode: "flip",
                    expected: "set-reset",
                });
            }
        };
        if new != v {
            changed += 1;
        }
        next.set(b, new);
    }
    Ok((next, changed))
}

/// [`apply_resolved`] over a packed set.
pub fn apply_set(
    state: &Code,
    set: &AtomSet,
    bit_map: &BTreeMap<usize, usize>,
) -> Result<(Code, usize), LaserError> {
    apply_resolved(state, &set.atoms().into_iter().collect(), bit_map)
}

pub fn bit_map(placement: &Placement) -> BTreeMap<usize, usize> {
    placement
        .ffs
        .iter()
        .map(|f| (f.index, f.bit_position))
        .collect()
}
