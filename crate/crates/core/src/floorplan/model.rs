//! Placement ILP for one width bound.

use crate::ilp::{IlpProblem, Relation, VarId};

use super::{FfSpec, FloorplanError, PlacedFf, Placement, SeparationRegion, SeparationRequirement};

pub struct PlacementModel {
    pub problem: IlpProblem,
    pub y: Vec<VarId>,
    pub z: Vec<VarId>,
    pub height: VarId,
    pub width: i64,
    /// Valid lower bound on `Y` implied by the packing cuts.
    pub height_cut: i64,
}

impl PlacementModel {
    pub fn decode(&self, entries: &[FfSpec], values: &[i64], grid_unit_um: f64) -> Placement {
        let ffs = entries
            .iter()
            .enumerate()
            .map(|(i, e)| PlacedFf {
                index: i,
                bit_position: i,
                tag: e.tag,
                y: values[self.y[i].0],
                z: values[self.z[i].0],
                geometry: e.geometry,
            })
            .collect();
        Placement {
            ffs,
            width: self.width,
            height: values[self.height.0],
            grid_unit_um,
        }
    }
}

/// Four alternatives for a pair, selected by two binaries:
/// `y_j − y_i ≥ c[0]`, `y_i − y_j ≥ c[1]`, `z_j − z_i ≥ c[2]`, `z_i − z_j ≥ c[3]`.
struct Disjunction {
    i: usize,
    j: usize,
    c: [i64; 4],
    sel: (VarId, VarId),
}

/// Every separation demand between two cells as four alternative difference
/// constraints, labelled `p` for the bodies and `qr`/`qs` for the points.
pub(super) fn pair_disjunctions(
    entries: &[FfSpec],
    req: &SeparationRequirement,
) -> Vec<(usize, usize, &'static str, [i64; 4])> {
    let d = req.min_distance;
    let mut out = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let region = req.region(i, j);
            let gap = if region == Some(SeparationRegion::Body) {
                d
            } else {
                0
            };
            let (a, b) = (&entries[i].geometry, &entries[j].geometry);
            out.push((i, j, "p", [a.w + gap, b.w + gap, a.h + gap, b.h + gap]));
            if matches!(
                region,
                Some(SeparationRegion::Reset | SeparationRegion::Both)
            ) {
                let (oi, oj) = (a.reset_offset, b.reset_offset);
                out.push((
                    i,
                    j,
                    "qr",
                    [
                        d + oi.0 - oj.0,
                        d + oj.0 - oi.0,
                        d + oi.1 - oj.1,
                        d + oj.1 - oi.1,
                    ],
                ));
            }
            if matches!(region, Some(SeparationRegion::Set | SeparationRegion::Both)) {
                let (oi, oj) = (a.set_offset, b.set_offset);
                out.push((
                    i,
                    j,
                    "qs",
                    [
                        d + oi.0 - oj.0,
                        d + oj.0 - oi.0,
                        d + oi.1 - oj.1,
                        d + oj.1 - oi.1,
                    ],
                ));
            }
        }
    }
    out
}

/// Lower bound on the height from total area, column count, the tallest cell
/// and mutually body-separated cells.
pub(super) fn packing_cut(entries: &[FfSpec], req: &SeparationRequirement, width: i64) -> i64 {
    let area: i64 = entries.iter().map(|e| e.geometry.w * e.geometry.h).sum();
    let total_w: i64 = entries.iter().map(|e| e.geometry.w).sum();
    let h_min = entries.iter().map(|e| e.geometry.h).min().unwrap_or(0);
    let tallest = entries.iter().map(|e| e.geometry.h).max().unwrap_or(0);
    ((area + width - 1) / width)
        .max(h_min * ((total_w + width - 1) / width))
        .max(tallest)
        .max(body_clique_cut(entries, req, width))
}

/// Pairs `(i, j)` of interchangeable cells, each cell linked to the next one
/// like it; such pairs can be kept in row-major order.
pub(super) fn ordered_pairs(
    entries: &[FfSpec],
    req: &SeparationRequirement,
) -> Vec<(usize, usize)> {
    let g = entries.len();
    (0..g)
        .filter_map(|i| {
            (i + 1..g)
                .find(|&j| interchangeable(entries, req, i, j))
                .map(|j| (i, j))
        })
        .collect()
}

fn interchangeable(entries: &[FfSpec], req: &SeparationRequirement, i: usize, j: usize) -> bool {
    entries[i] == entries[j]
        && (0..entries.len())
            .filter(|&k| k != i && k != j)
            .all(|k| req.region(i, k) == req.region(j, k))
}

pub(super) fn check_bounds(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    width: i64,
    height_bound: i64,
) -> Result<(), FloorplanError> {
    if req.min_distance < 1 {
        return Err(FloorplanError::InvalidDistance);
    }
    let widest = entries.iter().map(|e| e.geometry.w).max().unwrap_or(0);
    let tallest = entries.iter().map(|e| e.geometry.h).max().unwrap_or(0);
    if width < widest {
        return Err(FloorplanError::BoundTooSmall {
            bound: width,
            needed: widest,
        });
    }
    if height_bound < tallest {
        return Err(FloorplanError::BoundTooSmall {
            bound: height_bound,
            needed: tallest,
        });
    }
    Ok(())
}

/// Builds the placement problem: pair binaries first, then coordinates, then
/// the minimized height `Y`.
pub fn build_placement_problem(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    width: i64,
    height_bound: i64,
) -> Result<PlacementModel, FloorplanError> {
    check_bounds(entries, req, width, height_bound)?;
    let tallest = entries.iter().map(|e| e.geometry.h).max().unwrap_or(0);
    let g = entries.len();
    let mut problem = IlpProblem::new();
    let mut disjunctions = Vec::new();

    for (i, j, label, c) in pair_disjunctions(entries, req) {
        let u = problem.add_binary(format!("{label}_{i}_{j}_0"));
        let v = problem.add_binary(format!("{label}_{i}_{j}_1"));
        disjunctions.push(Disjunction {
            i,
            j,
            c,
            sel: (u, v),
        });
    }

    let mut y = Vec::with_capacity(g);
    let mut z = Vec::with_capacity(g);
    for (i, e) in entries.iter().enumerate() {
        y.push(problem.add_integer(format!("y_{i}"), 0, width - e.geometry.w));
        z.push(problem.add_integer(format!("z_{i}"), 0, height_bound - e.geometry.h));
    }
    let height = problem.add_integer("Y", tallest, height_bound);
    problem.add_objective_term(height, crate::ilp::int(1))?;

    for (i, e) in entries.iter().enumerate() {
        problem.add_int_constraint(&[(y[i], 1)], Relation::Le, width - e.geometry.w)?;
        problem.add_int_constraint(&[(z[i], 1), (height, -1)], Relation::Le, -e.geometry.h)?;
    }

    for dj in &disjunctions {
        let (u, v) = dj.sel;
        let (i, j) = (dj.i, dj.j);
        // (α, β, γ): the row is relaxed by M·(α u + β v + γ)
        let cases = [(1, 1, 0), (1, -1, 1), (-1, 1, 1), (-1, -1, 2)];
        for (k, &(al, be, ga)) in cases.iter().enumerate() {
            let (lo, hi, span) = match k {
                0 => (y[i], y[j], width),
                1 => (y[j], y[i], width),
                2 => (z[i], z[j], height_bound),
                _ => (z[j], z[i], height_bound),
            };
            let c = dj.c[k];
            let m = span + c.max(0);
            // hi − lo ≥ c − M·(α u + β v + γ)
            problem.add_int_constraint(
                &[(lo, 1), (hi, -1), (u, -m * al), (v, -m * be)],
                Relation::Le,
                -c + m * ga,
            )?;
        }
    }

    let cut = packing_cut(entries, req, width);
    if g > 0 {
        problem.add_int_constraint(&[(height, 1)], Relation::Ge, cut)?;
    }

    // interchangeable cells appear in row-major order
    let k = width + 1;
    for (i, j) in ordered_pairs(entries, req) {
        problem.add_int_constraint(
            &[(z[i], k), (y[i], 1), (z[j], -k), (y[j], -1)],
            Relation::Le,
            -1,
        )?;
    }

    Ok(PlacementModel {
        problem,
        y,
        z,
        height,
        width,
        height_cut: cut,
    })
}

/// Cells that are pairwise body-separated behave like cells grown by D/2 on
/// every side, packed into a box grown the same way.
fn body_clique_cut(entries: &[FfSpec], req: &SeparationRequirement, width: i64) -> i64 {
    let d = req.min_distance;
    let mut best = 0;
    for start in 0..entries.len() {
        let mut clique = vec![start];
        for i in start + 1..entries.len() {
            if clique
                .iter()
                .all(|&k| req.region(k, i) == Some(SeparationRegion::Body))
            {
                clique.push(i);
            }
        }
        if clique.len() < 2 {
            continue;
        }
        let total: i64 = clique.iter().map(|&i| entries[i].geometry.w + d).sum();
        let h = clique
            .iter()
            .map(|&i| entries[i].geometry.h)
            .min()
            .unwrap_or(0)
            + d;
        let rows = (total + width + d - 1) / (width + d);
        best = best.max(h * rows - d);
        // a horizontal line meets at most `per_row` grown cells
        let w = clique
            .iter()
            .map(|&i| entries[i].geometry.w)
            .min()
            .unwrap_or(0)
            + d;
        let per_row = (width + d) / w;
        if per_row > 0 {
            let stacked: i64 = clique.iter().map(|&i| entries[i].geometry.h + d).sum();
            best = best.max((stacked + per_row - 1) / per_row - d);
        }
    }
    best
}
