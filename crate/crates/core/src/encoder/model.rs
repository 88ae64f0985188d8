//! ILP construction for one encoding configuration.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Signed;

use super::EncodeError;
use crate::fsm::FsmSpec;
use crate::ilp::{IlpProblem, Relation, VarId};

fn pair(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

/// Code variables `r[state][bit]` plus lazily created XOR gadgets.
pub struct EncodingModel<'a> {
    fsm: &'a FsmSpec,
    n: usize,
    pub problem: IlpProblem,
    r: Vec<Vec<VarId>>,
    xor: BTreeMap<(usize, usize, usize), VarId>,
    guarded: BTreeSet<(usize, usize)>,
}

impl<'a> EncodingModel<'a> {
    /// Declares `r_{s,l}` for every state (declaration order) and bit.
    pub fn new(fsm: &'a FsmSpec, n: usize) -> Result<Self, EncodeError> {
        let all: Vec<usize> = (0..fsm.num_states()).collect();
        Self::with_states(fsm, n, &all)
    }

    /// Declares code variables only for `states`, in the given order. Rows
    /// may then only mention those states.
    pub fn with_states(fsm: &'a FsmSpec, n: usize, states: &[usize]) -> Result<Self, EncodeError> {
        if n == 0 {
            return Err(EncodeError::ZeroWidth);
        }
        let mut problem = IlpProblem::new();
        let mut r = vec![Vec::new(); fsm.num_states()];
        for &s in states {
            let name = fsm.state_name(s);
            r[s] = (0..n)
                .map(|l| problem.add_binary(format!("r_{name}_{l}")))
                .collect();
        }
        Ok(Self {
            fsm,
            n,
            problem,
            r,
            xor: BTreeMap::new(),
            guarded: BTreeSet::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn code_var(&self, state: usize, bit: usize) -> VarId {
        self.r[state][bit]
    }

    /// `d_{ijl} = r_{il} XOR r_{jl}`, created on first use.
    pub fn xor(&mut self, i: usize, j: usize, l: usize) -> VarId {
        let key = (i.min(j), i.max(j), l);
        if let Some(&d) = self.xor.get(&key) {
            return d;
        }
        let d = self
            .problem
            .linearize_xor(self.r[key.0][l], self.r[key.1][l])
            .expect("code variables are binary");
        self.xor.insert(key, d);
        d
    }

    /// Switching-activity objective: Σ_{i<j} p_ij · HD(r_i, r_j).
    pub fn build_objective(&mut self) -> Result<(), EncodeError> {
        let g = self.fsm.num_states();
        for i in 0..g {
            for j in i + 1..g {
                let p = self.fsm.pair_probability(i, j).expect("distinct states");
                if !p.is_positive() {
                    continue;
                }
                for l in 0..self.n {
                    let d = self.xor(i, j, l);
                    self.problem
                        .add_objective_term(d, p.clone())
                        .expect("declared");
                }
            }
        }
        Ok(())
    }

    /// Σ_{l∈bits} d_{a,p,l} ≥ x+1 for each listed authorized transition.
    pub fn add_hd_at_constraints(
        &mut self,
        ats: &[(usize, usize)],
        x: usize,
        bits: &[usize],
    ) -> Result<(), EncodeError> {
        if ats.is_empty() {
            return Ok(());
        }
        if bits.len() < x + 1 {
            return Err(EncodeError::StructuralInfeasible {
                needed: x + 1,
                available: bits.len(),
            });
        }
        for &(a, p) in ats {
            let terms: Vec<(VarId, i64)> = bits.iter().map(|&l| (self.xor(a, p, l), 1)).collect();
            self.problem
                .add_int_constraint(&terms, Relation::Ge, x as i64 + 1)?;
            self.guarded.insert(pair(a, p));
        }
        Ok(())
    }

    /// Every unordered pair not guarded by an AT constraint differs in ≥ 1 bit.
    pub fn add_distinctness_constraints(&mut self) -> Result<(), EncodeError> {
        let all: Vec<usize> = (0..self.fsm.num_states()).collect();
        self.add_distinctness_among(&all)
    }

    /// Distinctness restricted to pairs drawn from `states`.
    pub fn add_distinctness_among(&mut self, states: &[usize]) -> Result<(), EncodeError> {
        let mut sorted = states.to_vec();
        sorted.sort_unstable();
        for (k, &i) in sorted.iter().enumerate() {
            for &j in &sorted[k + 1..] {
                if self.guarded.contains(&(i, j)) {
                    continue;
                }
                let terms: Vec<(VarId, i64)> =
                    (0..self.n).map(|l| (self.xor(i, j, l), 1)).collect();
                self.problem.add_int_constraint(&terms, Relation::Ge, 1)?;
            }
        }
        Ok(())
    }

    /// Block of `bits` where the authorized transition only raises bits:
    /// the source has ≥ x+1 zeros there and every zero becomes a one.
    pub fn add_reset_model_constraints(
        &mut self,
        ats: &[(usize, usize)],
        x: usize,
        bits: &[usize],
    ) -> Result<(), EncodeError> {
        let m = bits.len();
        if ats.is_empty() {
            return Ok(());
        }
        if m < x + 1 {
            return Err(EncodeError::StructuralInfeasible {
                needed: x + 1,
                available: m,
            });
        }
        for &(a, p) in ats {
            let terms: Vec<(VarId, i64)> = bits.iter().map(|&l| (self.r[a][l], 1)).collect();
            self.problem
                .add_int_constraint(&terms, Relation::Le, (m - (x + 1)) as i64)?;
            for &l in bits {
                // r_p ≥ 1 − r_a
                self.problem.add_int_constraint(
                    &[(self.r[p][l], 1), (self.r[a][l], 1)],
                    Relation::Ge,
                    1,
                )?;
            }
        }
        Ok(())
    }

    /// Mirror image of the reset block: the source has ≥ x+1 ones and every
    /// one becomes a zero.
    pub fn add_set_model_constraints(
        &mut self,
        ats: &[(usize, usize)],
        x: usize,
        bits: &[usize],
    ) -> Result<(), EncodeError> {
        let m = bits.len();
        if ats.is_empty() {
            return Ok(());
        }
        if m < x + 1 {
            return Err(EncodeError::StructuralInfeasible {
                needed: x + 1,
                available: m,
            });
        }
        for &(a, p) in ats {
            // Σ (1 − r_a) ≤ m − (x+1)  ⇔  Σ r_a ≥ x+1
            let terms: Vec<(VarId, i64)> = bits.iter().map(|&l| (self.r[a][l], 1)).collect();
            self.problem
                .add_int_constraint(&terms, Relation::Ge, x as i64 + 1)?;
            for &l in bits {
                // r_p ≤ 1 − r_a
                self.problem.add_int_constraint(
                    &[(self.r[p][l], 1), (self.r[a][l], 1)],
                    Relation::Le,
                    1,
                )?;
            }
        }
        Ok(())
    }

    /// Requires column `l` ≤ column `l + 1` for consecutive positions in
    /// `columns`, each column read as a binary number with the first state
    /// most significant.
    pub fn order_columns(&mut self, columns: &[usize]) -> Result<(), EncodeError> {
        let g = self.fsm.num_states();
        if g > 62 {
            return Ok(());
        }
        for w in columns.windows(2) {
            let mut terms = Vec::with_capacity(2 * g);
            for s in 0..g {
                let weight = 1i64 << (g - 1 - s);
                terms.push((self.r[s][w[0]], weight));
                terms.push((self.r[s][w[1]], -weight));
            }
            self.problem.add_int_constraint(&terms, Relation::Le, 0)?;
        }
        Ok(())
    }

    /// Fixes bit `l` of `state` to `value`.
    pub fn fix_bit(&mut self, state: usize, l: usize, value: bool) -> Result<(), EncodeError> {
        self.problem.add_int_constraint(
            &[(self.r[state][l], 1)],
            Relation::Eq,
            i64::from(value),
        )?;
        Ok(())
    }

    /// Reads the code of every state out of a solved assignment.
    pub fn decode(&self, values: &[i64]) -> Vec<crate::code::Code> {
        self.r
            .iter()
            .map(|vars| crate::code::Code::new(vars.iter().map(|v| values[v.0] == 1).collect()))
            .collect()
    }
}
