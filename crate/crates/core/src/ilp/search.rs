//! Depth-first branch-and-bound with interval propagation.
//!
//! Branching always picks the first unfixed variable in declaration order and
//! tries its lowest value first, and the incumbent is only replaced on strict
//! improvement. Together these make the returned optimum the lexicographically
//! smallest optimal assignment.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{lcm_of_denominators, IlpError, IlpProblem, IlpSolution, Relation, SolveStatus};

/// `Σ coefs·x ≤ rhs` over integers.
struct Row {
    vars: Vec<usize>,
    coefs: Vec<i128>,
    rhs: i128,
}

/// A row of the form `Σ a·x ≥ demand` (all `a > 0`) whose variables carry
/// non-negative objective cost and appear in no other covering row.
struct Cover {
    /// (var, a, cost) sorted by cost/a ascending.
    items: Vec<(usize, i128, i128)>,
    demand: i128,
}

fn to_i128(v: &BigInt) -> Result<i128, IlpError> {
    v.to_i128().ok_or(IlpError::Overflow)
}

fn scaled(values: &[&BigRational]) -> Result<Vec<i128>, IlpError> {
    let l = BigRational::from_integer(lcm_of_denominators(values.iter().copied()));
    values
        .iter()
        .map(|v| to_i128(&(*v * &l).to_integer()))
        .collect()
}

struct Search {
    rows: Vec<Row>,
    watch: Vec<Vec<usize>>,
    covers: Vec<Cover>,
    cost: Vec<i128>,
    lb: Vec<i64>,
    ub: Vec<i64>,
    trail: Vec<(usize, i64, i64)>,
    queue: Vec<usize>,
    queued: Vec<bool>,
    best: Option<(i128, Vec<i64>)>,
    nodes: u64,
}

impl Search {
    fn set_bounds(&mut self, v: usize, lo: i64, hi: i64) {
        if lo == self.lb[v] && hi == self.ub[v] {
            return;
        }
        self.trail.push((v, self.lb[v], self.ub[v]));
        self.lb[v] = lo;
        self.ub[v] = hi;
        for &r in &self.watch[v] {
            if !self.queued[r] {
                self.queued[r] = true;
                self.queue.push(r);
            }
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, lo, hi) = self.trail.pop().expect("trail entry");
            self.lb[v] = lo;
            self.ub[v] = hi;
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r] = false;
        }
    }

    /// Runs propagation to a fixpoint; false on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            self.queued[r] = false;
            let row = &self.rows[r];
            let mut minact: i128 = 0;
            for (&v, &a) in row.vars.iter().zip(&row.coefs) {
                minact += if a > 0 {
                    a * self.lb[v] as i128
                } else {
                    a * self.ub[v] as i128
                };
            }
            if minact > row.rhs {
                self.clear_queue();
                return false;
            }
            let slack = row.rhs - minact;
            let mut tightened: Vec<(usize, i64, i64)> = Vec::new();
            for (&v, &a) in row.vars.iter().zip(&row.coefs) {
                let (lo, hi) = (self.lb[v], self.ub[v]);
                let width = (hi - lo) as i128 * a.abs();
                if width <= slack {
                    continue;
                }
                let step = (slack / a.abs()) as i64;
                if a > 0 {
                    tightened.push((v, lo, lo + step));
                } else {
                    tightened.push((v, hi - step, hi));
                }
            }
            for (v, lo, hi) in tightened {
                let lo = lo.max(self.lb[v]);
                let hi = hi.min(self.ub[v]);
                self.set_bounds(v, lo, hi);
            }
        }
        true
    }

    fn lower_bound(&self) -> i128 {
        let mut total: i128 = 0;
        for (v, &c) in self.cost.iter().enumerate() {
            if c != 0 {
                total += if c > 0 {
                    c * self.lb[v] as i128
                } else {
                    c * self.ub[v] as i128
                };
            }
        }
        for cover in &self.covers {
            let mut need = cover.demand;
            for &(v, a, _) in &cover.items {
                need -= a * self.lb[v] as i128;
            }
            if need <= 0 {
                continue;
            }
            for &(v, a, c) in &cover.items {
                let cap = (self.ub[v] - self.lb[v]) as i128 * a;
                if cap == 0 {
                    continue;
                }
                if cap >= need {
                    total += (c * need + a - 1).div_euclid(a);
                    break;
                }
                total += c * (self.ub[v] - self.lb[v]) as i128;
                need -= cap;
            }
        }
        total
    }

    fn first_unfixed(&self) -> Option<usize> {
        (0..self.lb.len()).find(|&v| self.lb[v] < self.ub[v])
    }

    fn node(&mut self) -> Option<usize> {
        self.nodes += 1;
        if !self.propagate() {
            return None;
        }
        let bound = self.lower_bound();
        if let Some((best, _)) = &self.best {
            if bound >= *best {
                return None;
            }
        }
        match self.first_unfixed() {
            Some(v) => Some(v),
            None => {
                self.best = Some((bound, self.lb.clone()));
                None
            }
        }
    }

    fn run(&mut self) {
        // (trail mark, var, branched value, second branch taken)
        let mut stack: Vec<(usize, usize, i64, bool)> = Vec::new();
        let mut branch = self.node();
        loop {
            if let Some(v) = branch {
                let mark = self.trail.len();
                let lo = self.lb[v];
                stack.push((mark, v, lo, false));
                self.set_bounds(v, lo, lo);
                branch = self.node();
                continue;
            }
            loop {
                let Some(top) = stack.last_mut() else { return };
                let (mark, v, lo, second) = *top;
                self.clear_queue();
                self.undo(mark);
                if second {
                    stack.pop();
                    continue;
                }
                top.3 = true;
                let hi = self.ub[v];
                self.set_bounds(v, lo + 1, hi);
                break;
            }
            branch = self.node();
        }
    }
}

/// Solves `problem` to proven optimality.
pub fn solve(problem: &IlpProblem) -> Result<IlpSolution, IlpError> {
    let nvars = problem.variables.len();
    let mut lb = Vec::with_capacity(nvars);
    let mut ub = Vec::with_capacity(nvars);
    for v in &problem.variables {
        let (Some(lo), Some(hi)) = (v.lower, v.upper) else {
            return Err(IlpError::UnboundedVariable(v.name.clone()));
        };
        if lo > hi {
            return Err(IlpError::InvalidBounds {
                name: v.name.clone(),
                lower: lo,
                upper: hi,
            });
        }
        lb.push(lo);
        ub.push(hi);
    }

    let mut rows = Vec::new();
    for c in &problem.constraints {
        let mut refs: Vec<&BigRational> = c.terms.iter().map(|(_, k)| k).collect();
        refs.push(&c.rhs);
        let ints = scaled(&refs)?;
        let (coefs, rhs) = ints.split_at(c.terms.len());
        let vars: Vec<usize> = c.terms.iter().map(|(v, _)| v.0).collect();
        let le = || Row {
            vars: vars.clone(),
            coefs: coefs.to_vec(),
            rhs: rhs[0],
        };
        let ge = || Row {
            vars: vars.clone(),
            coefs: coefs.iter().map(|a| -a).collect(),
            rhs: -rhs[0],
        };
        match c.relation {
            Relation::Le => rows.push(le()),
            Relation::Ge => rows.push(ge()),
            Relation::Eq => {
                rows.push(le());
                rows.push(ge());
            }
        }
    }

    let obj_refs: Vec<&BigRational> = problem.objective.iter().collect();
    let obj_scale = lcm_of_denominators(problem.objective.iter());
    let cost = scaled(&obj_refs)?;

    let mut watch = vec![Vec::new(); nvars];
    for (r, row) in rows.iter().enumerate() {
        for &v in &row.vars {
            watch[v].push(r);
        }
    }

    let mut used = vec![false; nvars];
    let mut covers = Vec::new();
    for row in &rows {
        let eligible = !row.vars.is_empty()
            && row.coefs.iter().all(|&a| a < 0)
            && row
                .vars
                .iter()
                .all(|&v| cost[v] >= 0 && !used[v] && lb[v] >= 0)
            && row.vars.iter().any(|&v| cost[v] > 0);
        if !eligible {
            continue;
        }
        let mut items: Vec<(usize, i128, i128)> = row
            .vars
            .iter()
            .zip(&row.coefs)
            .map(|(&v, &a)| (v, -a, cost[v]))
            .collect();
        items.sort_by(|x, y| (x.2 * y.1).cmp(&(y.2 * x.1)).then(x.0.cmp(&y.0)));
        for &v in &row.vars {
            used[v] = true;
        }
        covers.push(Cover {
            items,
            demand: -row.rhs,
        });
    }

    let nrows = rows.len();
    let mut search = Search {
        rows,
        watch,
        covers,
        cost,
        lb,
        ub,
        trail: Vec::new(),
        queue: (0..nrows).rev().collect(),
        queued: vec![true; nrows],
        best: None,
        nodes: 0,
    };
    search.run();

    Ok(match search.best.take() {
        Some((value, values)) => {
            let objective_value = BigRational::new(BigInt::from(value), obj_scale);
            debug_assert!(problem.is_feasible(&values));
            debug_assert_eq!(problem.evaluate(&values), objective_value);
            IlpSolution {
                status: SolveStatus::Optimal,
                values,
                objective_value,
                nodes: search.nodes,
            }
        }
        None => IlpSolution {
            status: SolveStatus::Infeasible,
            values: Vec::new(),
            objective_value: BigRational::zero(),
            nodes: search.nodes,
        },
    })
}
