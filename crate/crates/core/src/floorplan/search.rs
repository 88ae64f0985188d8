//! Exact minimum-height search for one width.
//!
//! Any feasible placement can be compacted downwards and leftwards until each
//! coordinate is zero or sits exactly one separation constant past another
//! cell's coordinate. Coordinates are therefore drawn from the closure of
//! `{0}` under those constants, and heights are tried in increasing order, so
//! the first feasible height is optimal.

use super::model::{ordered_pairs, packing_cut, pair_disjunctions};
use super::{FfSpec, SeparationRequirement};

/// Values reachable from 0 by adding constants, kept inside `0..=limit`.
fn closure(constants: &[i64], limit: i64) -> Vec<i64> {
    if limit < 0 {
        return Vec::new();
    }
    let mut seen = vec![false; limit as usize + 1];
    let mut stack = vec![0i64];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &c in constants {
            let t = v + c;
            if (0..=limit).contains(&t) && !seen[t as usize] {
                seen[t as usize] = true;
                stack.push(t);
            }
        }
    }
    (0..=limit).filter(|&v| seen[v as usize]).collect()
}

struct Instance<'a> {
    entries: &'a [FfSpec],
    width: i64,
    /// `rules[j]`: disjunctions `(i, c)` with `i < j`.
    rules: Vec<Vec<(usize, [i64; 4])>>,
    /// Interchangeable predecessor that must come earlier in row-major order.
    pred: Vec<Option<usize>>,
    ys: Vec<i64>,
    zs: Vec<i64>,
    suffix_area: Vec<i64>,
}

impl Instance<'_> {
    fn fits(&self, j: usize, pos: (i64, i64), placed: &[(i64, i64)]) -> bool {
        self.rules[j].iter().all(|&(i, c)| {
            let (yi, zi) = placed[i];
            let (yj, zj) = pos;
            yj - yi >= c[0] || yi - yj >= c[1] || zj - zi >= c[2] || zi - zj >= c[3]
        })
    }

    fn place(&self, j: usize, height: i64, used_area: i64, placed: &mut Vec<(i64, i64)>) -> bool {
        if j == self.entries.len() {
            return true;
        }
        if used_area + self.suffix_area[j] > self.width * height {
            return false;
        }
        let g = &self.entries[j].geometry;
        let after = self.pred[j].map(|i| placed[i]);
        for &z in self.zs.iter().take_while(|&&z| z + g.h <= height) {
            if after.is_some_and(|(_, pz)| z < pz) {
                continue;
            }
            for &y in self.ys.iter().take_while(|&&y| y + g.w <= self.width) {
                if after.is_some_and(|(py, pz)| z == pz && y <= py) {
                    continue;
                }
                if !self.fits(j, (y, z), placed) {
                    continue;
                }
                placed.push((y, z));
                if self.place(j + 1, height, used_area + g.w * g.h, placed) {
                    return true;
                }
                placed.pop();
            }
        }
        false
    }
}

/// Lowest height with a feasible placement, and the `(y, z)` of every cell.
pub(super) fn min_height(
    entries: &[FfSpec],
    req: &SeparationRequirement,
    width: i64,
    height_bound: i64,
) -> Option<(i64, Vec<(i64, i64)>)> {
    let g = entries.len();
    let mut rules = vec![Vec::new(); g];
    let mut cy = Vec::new();
    let mut cz = Vec::new();
    for (i, j, _, c) in pair_disjunctions(entries, req) {
        rules[j].push((i, c));
        cy.extend([c[0], c[1]]);
        cz.extend([c[2], c[3]]);
    }
    for v in [&mut cy, &mut cz] {
        v.sort_unstable();
        v.dedup();
    }
    let mut pred = vec![None; g];
    for (i, j) in ordered_pairs(entries, req) {
        pred[j] = Some(i);
    }
    let w_min = entries.iter().map(|e| e.geometry.w).min().unwrap_or(0);
    let h_min = entries.iter().map(|e| e.geometry.h).min().unwrap_or(0);
    let mut suffix_area = vec![0; g + 1];
    for j in (0..g).rev() {
        suffix_area[j] = suffix_area[j + 1] + entries[j].geometry.w * entries[j].geometry.h;
    }
    let inst = Instance {
        entries,
        width,
        rules,
        pred,
        ys: closure(&cy, width - w_min),
        zs: closure(&cz, height_bound - h_min),
        suffix_area,
    };

    let cut = packing_cut(entries, req, width);
    let mut heights: Vec<i64> = inst
        .zs
        .iter()
        .flat_map(|&z| entries.iter().map(move |e| z + e.geometry.h))
        .filter(|&t| t >= cut && t <= height_bound)
        .collect();
    heights.sort_unstable();
    heights.dedup();
    for height in heights {
        let mut placed = Vec::with_capacity(g);
        if inst.place(0, height, 0, &mut placed) {
            return Some((height, placed));
        }
    }
    None
}
