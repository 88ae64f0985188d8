//! Independent geometric checks on a finished placement.

use super::{sensitive_points, Placement, SeparationRegion, SeparationRequirement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementViolation {
    OutOfBounds {
        index: usize,
    },
    Overlap {
        a: usize,
        b: usize,
    },
    TooClose {
        a: usize,
        b: usize,
        region: SeparationRegion,
    },
    UnknownFf {
        index: usize,
    },
}

fn dist2(p: (i64, i64), q: (i64, i64)) -> i64 {
    (p.0 - q.0).pow(2) + (p.1 - q.1).pow(2)
}

/// Squared Euclidean distance between two closed axis-aligned rectangles.
fn rect_dist2(a: (i64, i64, i64, i64), b: (i64, i64, i64, i64)) -> i64 {
    let gap = |lo1: i64, hi1: i64, lo2: i64, hi2: i64| (lo2 - hi1).max(lo1 - hi2).max(0);
    let dy = gap(a.0, a.0 + a.2, b.0, b.0 + b.2);
    let dz = gap(a.1, a.1 + a.3, b.1, b.1 + b.3);
    dy * dy + dz * dz
}

pub fn check_placement(p: &Placement, req: &SeparationRequirement) -> Vec<PlacementViolation> {
    let mut out = Vec::new();
    for f in &p.ffs {
        let g = &f.geometry;
        if f.y < 0 || f.z < 0 || f.y + g.w > p.width || f.z + g.h > p.height {
            out.push(PlacementViolation::OutOfBounds { index: f.index });
        }
    }
    for (k, a) in p.ffs.iter().enumerate() {
        for b in &p.ffs[k + 1..] {
            let apart = a.y + a.geometry.w <= b.y
                || b.y + b.geometry.w <= a.y
                || a.z + a.geometry.h <= b.z
                || b.z + b.geometry.h <= a.z;
            if !apart {
                out.push(PlacementViolation::Overlap {
                    a: a.index,
                    b: b.index,
                });
            }
        }
    }
    let d2 = req.min_distance * req.min_distance;
    for &(i, j, region) in &req.pairs {
        let (Some(a), Some(b)) = (p.ffs.get(i), p.ffs.get(j)) else {
            out.push(PlacementViolation::UnknownFf { index: i.max(j) });
            continue;
        };
        let ((ar, as_), (br, bs)) = (sensitive_points(a), sensitive_points(b));
        let ok = match region {
            SeparationRegion::Reset => dist2(ar, br) >= d2,
            SeparationRegion::Set => dist2(as_, bs) >= d2,
            SeparationRegion::Both => dist2(ar, br) >= d2 && dist2(as_, bs) >= d2,
            SeparationRegion::Body => {
                let ra = (a.y, a.z, a.geometry.w, a.geometry.h);
                let rb = (b.y, b.z, b.geometry.w, b.geometry.h);
                rect_dist2(ra, rb) >= d2
            }
        };
        if !ok {
            out.push(PlacementViolation::TooClose { a: i, b: j, region });
        }
    }
    out
}
