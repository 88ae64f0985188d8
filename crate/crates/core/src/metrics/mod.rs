//! Vulnerability metrics over an encoding and, for the spatial ones, the
//! fault sets a placement admits.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use crate::code::{full_distance, hamming_distance, Code};
use crate::encoder::{Encoding, ModelVariant};
use crate::floorplan::Placement;
use crate::fsm::{FsmSpec, StateClasses};
use crate::laser::{
    apply_set, bit_map, enumerate_vulnerable_sets, AtomSet, AttackerModel, FaultAtom, LaserError,
    Region, SweepMode, VulnerableSets,
};
use crate::rational::{ratio, to_f64};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("the FSM has no transitions")]
    NoTransitions,
    #[error("fault sets were built in {found} mode, {expected} needed")]
    ModeMismatch {
        found: &'static str,
        expected: &'static str,
    },
    #[error("placement has {placed} flip-flops but the encoding has {bits} bits")]
    SizeMismatch { placed: usize, bits: usize },
    #[error("bit positions in the placement do not cover every bit exactly once")]
    BadBitMap,
    #[error(transparent)]
    Laser(#[from] LaserError),
}

/// One spatially vulnerable move: a state, the fault set applied to it, and
/// the authorized transition whose guard it erodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SvtEntry {
    pub source: usize,
    /// Index into the FSM's authorized transitions.
    pub at: usize,
    pub result: Code,
    pub atoms: AtomSet,
    /// Laser centers producing `atoms`; empty for layout-free analysis.
    pub lasers: Vec<(i64, i64)>,
}

/// States of `NS` within Hamming distance `x` of some sensitive state, over all
/// states.
pub fn compute_vm(encoding: &Encoding, classes: &StateClasses, x: usize) -> BigRational {
    let total = encoding.codes.len();
    if total == 0 {
        return ratio(0, 1);
    }
    let hits = classes
        .ns
        .iter()
        .filter(|&&s| {
            classes.ss.iter().any(|&t| {
                full_distance(&encoding.codes[s], &encoding.codes[t]).is_ok_and(|d| d <= x)
            })
        })
        .count();
    ratio(hits, total)
}

fn guard_data(encoding: &Encoding, fsm: &FsmSpec) -> Vec<(usize, Vec<usize>, Code)> {
    fsm.authorized()
        .iter()
        .enumerate()
        .map(|(k, &(_, p))| {
            let positions = encoding.guard(k).positions;
            let target = encoding.codes[p].restrict(&positions);
            (k, positions, target)
        })
        .collect()
}

/// Moves among `family` that bring a state within `x` of a protected pattern
/// and strictly closer to it, counted only for guards the family can break
/// outright from the authorized source.
fn vulnerable_moves(
    encoding: &Encoding,
    fsm: &FsmSpec,
    family: &[(AtomSet, &[(i64, i64)])],
    x: usize,
    bits: &BTreeMap<usize, usize>,
) -> Result<Vec<SvtEntry>, MetricsError> {
    let guards = guard_data(encoding, fsm);
    let mut breached = Vec::new();
    for (k, positions, target) in &guards {
        let (au, _) = fsm.authorized()[*k];
        let mut broken = false;
        for (set, _) in family {
            let (t, _) = apply_set(&encoding.codes[au], set, bits)?;
            if t.restrict(positions) == *target {
                broken = true;
                break;
            }
        }
        if broken {
            breached.push((*k, positions, &encoding.codes[fsm.authorized()[*k].1]));
        }
    }
    let mut found: BTreeMap<(usize, usize, Code), SvtEntry> = BTreeMap::new();
    if breached.is_empty() {
        return Ok(Vec::new());
    }
    for (s, code) in encoding.codes.iter().enumerate() {
        for &(set, lasers) in family {
            let (t, _) = apply_set(code, &set, bits)?;
            for &(k, positions, protected) in &breached {
                let after =
                    hamming_distance(&t, protected, positions).expect("codes share a width");
                let before =
                    hamming_distance(code, protected, positions).expect("codes share a width");
                if after <= x && after < before {
                    found
                        .entry((s, k, t.restrict(positions)))
                        .or_insert_with(|| SvtEntry {
                            source: s,
                            at: k,
                            result: t.clone(),
                            atoms: set,
                            lasers: lasers.to_vec(),
                        });
                }
            }
        }
    }
    Ok(found.into_values().collect())
}

fn expected_mode(variant: ModelVariant) -> SweepMode {
    SweepMode::for_variant(variant)
}

fn check_mode(vuln: &VulnerableSets, expected: SweepMode) -> Result<(), MetricsError> {
    if vuln.mode != expected {
        return Err(MetricsError::ModeMismatch {
            found: vuln.mode.as_str(),
            expected: expected.as_str(),
        });
    }
    Ok(())
}

/// Spatially vulnerable transitions under the placement's fault sets.
pub fn compute_svt(
    encoding: &Encoding,
    fsm: &FsmSpec,
    vuln: &VulnerableSets,
    bits: &BTreeMap<usize, usize>,
) -> Result<Vec<SvtEntry>, MetricsError> {
    check_mode(vuln, expected_mode(encoding.variant))?;
    let family: Vec<_> = vuln.members().map(|(s, w)| (*s, w)).collect();
    vulnerable_moves(encoding, fsm, &family, vuln.x, bits)
}

pub fn compute_stvm(svt: &[SvtEntry], fsm: &FsmSpec) -> Result<BigRational, MetricsError> {
    if fsm.transitions().is_empty() {
        return Err(MetricsError::NoTransitions);
    }
    Ok(ratio(svt.len(), fsm.transitions().len()))
}

/// States that some bit-flip fault set turns into the code of a different
/// sensitive state, over all states.
pub fn compute_svm(
    encoding: &Encoding,
    classes: &StateClasses,
    vuln: &VulnerableSets,
    bits: &BTreeMap<usize, usize>,
) -> Result<BigRational, MetricsError> {
    check_mode(vuln, SweepMode::BitFlip)?;
    let total = encoding.codes.len();
    if total == 0 {
        return Ok(ratio(0, 1));
    }
    let mut hits = 0;
    for (s, code) in encoding.codes.iter().enumerate() {
        let mut hit = false;
        for (set, _) in vuln.members() {
            let (t, _) = apply_set(code, set, bits)?;
            if classes.ss.iter().any(|&p| p != s && encoding.codes[p] == t) {
                hit = true;
                break;
            }
        }
        hits += usize::from(hit);
    }
    Ok(ratio(hits, total))
}

/// Every set of at most `x` atoms on distinct flip-flops, with flips for the
/// bit-flip variant and a set or reset choice per flip-flop otherwise.
pub fn worst_case_family(n: usize, x: usize, variant: ModelVariant) -> BTreeSet<AtomSet> {
    let regions: &[Region] = if variant.is_bit_flip() {
        &[Region::Flip]
    } else {
        &[Region::Reset, Region::Set]
    };
    let mut out = BTreeSet::new();
    let mut level = vec![(AtomSet::new(), 0usize)];
    for _ in 0..x {
        let mut next = Vec::new();
        for (set, from) in &level {
            for ff in *from..n {
                for &r in regions {
                    let mut s = *set;
                    s.insert(FaultAtom::new(ff, r));
                    out.insert(s);
                    next.push((s, ff + 1));
                }
            }
        }
        level = next;
    }
    out
}

/// Layout-free counterpart of the spatial analysis: the same rule over the
/// worst-case family, bit `i` held by flip-flop `i`.
pub fn compute_tvm_entries(
    encoding: &Encoding,
    fsm: &FsmSpec,
    x: usize,
) -> Result<Vec<SvtEntry>, MetricsError> {
    let family = worst_case_family(encoding.n, x, encoding.variant);
    let bits: BTreeMap<usize, usize> = (0..encoding.n).map(|i| (i, i)).collect();
    let family: Vec<_> = family.iter().map(|s| (*s, &[][..])).collect();
    vulnerable_moves(encoding, fsm, &family, x, &bits)
}

pub fn compute_tvm(
    encoding: &Encoding,
    fsm: &FsmSpec,
    x: usize,
) -> Result<BigRational, MetricsError> {
    let entries = compute_tvm_entries(encoding, fsm, x)?;
    compute_stvm(&entries, fsm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VulnerabilityReport {
    pub variant: ModelVariant,
    pub attacker: AttackerModel,
    pub vm: BigRational,
    pub svm: BigRational,
    pub tvm: BigRational,
    pub stvm: BigRational,
    pub svt: Vec<SvtEntry>,
    pub grid_unit_um: f64,
}

impl VulnerabilityReport {
    pub fn is_secure(&self) -> bool {
        self.svt.is_empty()
    }

    pub fn to_json(&self, fsm: &FsmSpec, encoding: &Encoding) -> Value {
        let um = |v: i64| (v as f64 * self.grid_unit_um * 1e6).round() / 1e6;
        let svt: Vec<Value> = self
            .svt
            .iter()
            .map(|e| {
                let (au, p) = fsm.authorized()[e.at];
                json!({
                    "source": fsm.state_name(e.source),
                    "source_code": encoding.codes[e.source].to_string(),
                    "result": e.result.to_string(),
                    "authorized_transition": { "from": fsm.state_name(au), "to": fsm.state_name(p) },
                    "atoms": e.atoms.atoms().iter().map(|a| json!({ "ff": a.ff, "region": a.region.as_str() })).collect::<Vec<_>>(),
                    "lasers": e.lasers.iter().map(|&(y, z)| json!({ "y": y, "z": z, "y_um": um(y), "z_um": um(z) })).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "fsm": fsm.name(),
            "variant": self.variant.as_str(),
            "lasers": self.attacker.x,
            "diameter": self.attacker.diameter,
            "sweep_step": self.attacker.sweep_step,
            "grid_unit_um": self.grid_unit_um,
            "vm": metric_json(&self.vm),
            "svm": metric_json(&self.svm),
            "tvm": metric_json(&self.tvm),
            "stvm": metric_json(&self.stvm),
            "secure": self.is_secure(),
            "svt": svt,
        })
    }

    pub fn to_json_string(&self, fsm: &FsmSpec, encoding: &Encoding) -> String {
        serde_json::to_string_pretty(&self.to_json(fsm, encoding)).expect("json value serializes")
    }
}

/// A metric as its exact fraction and a decimal approximation.
pub fn metric_json(v: &BigRational) -> Value {
    json!({ "fraction": v.to_string(), "decimal": to_f64(v) })
}

/// Bit position of every flip-flop, checked to be a permutation of the bits.
pub fn checked_bit_map(
    encoding: &Encoding,
    placement: &Placement,
) -> Result<BTreeMap<usize, usize>, MetricsError> {
    if placement.ffs.len() != encoding.n {
        return Err(MetricsError::SizeMismatch {
            placed: placement.ffs.len(),
            bits: encoding.n,
        });
    }
    let map = bit_map(placement);
    let bits: BTreeSet<usize> = map.values().copied().collect();
    if map.len() != encoding.n || bits.len() != encoding.n || bits.iter().any(|&b| b >= encoding.n)
    {
        return Err(MetricsError::BadBitMap);
    }
    Ok(map)
}

/// Sweeps the placement and computes every metric for the encoding.
pub fn analyze(
    fsm: &FsmSpec,
    encoding: &Encoding,
    placement: &Placement,
    attacker: &AttackerModel,
    partitions: usize,
) -> Result<VulnerabilityReport, MetricsError> {
    let bits = checked_bit_map(encoding, placement)?;
    let classes = fsm.classify();
    let mode = expected_mode(encoding.variant);
    let spatial = enumerate_vulnerable_sets(placement, attacker, mode, partitions)?;
    let flips = if mode == SweepMode::BitFlip {
        spatial.clone()
    } else {
        enumerate_vulnerable_sets(placement, attacker, SweepMode::BitFlip, partitions)?
    };
    let svt = compute_svt(encoding, fsm, &spatial, &bits)?;
    Ok(VulnerabilityReport {
        variant: encoding.variant,
        attacker: *attacker,
        vm: compute_vm(encoding, &classes, attacker.x),
        svm: compute_svm(encoding, &classes, &flips, &bits)?,
        tvm: compute_tvm(encoding, fsm, attacker.x)?,
        stvm: compute_stvm(&svt, fsm)?,
        svt,
        grid_unit_um: placement.grid_unit_um,
    })
}
