//! Small exact 0-1 / bounded-integer linear programs.
//!
//! Problems are stated with rational coefficients and solved exactly: every
//! constraint row is scaled to integers before search, so no floating point
//! is involved in any feasibility decision.

mod lp_format;
mod search;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

pub use search::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn holds(self, lhs: &BigRational, rhs: &BigRational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<i64>,
    pub upper: Option<i64>,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.lower == Some(0) && self.upper == Some(1)
    }
}

/// A sparse row; variables not listed have coefficient zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(VarId, BigRational)>,
    pub relation: Relation,
    pub rhs: BigRational,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IlpError {
    #[error("variable `{0}` has no finite bound")]
    UnboundedVariable(String),
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvalidBounds {
        name: String,
        lower: i64,
        upper: i64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("variable `{0}` is not binary")]
    NotBinary(String),
    #[error("scaled coefficients overflow 128-bit integers")]
    Overflow,
}

/// Minimization problem over integer variables with finite bounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IlpProblem {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<BigRational>,
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

impl IlpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[BigRational] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: Option<i64>,
        upper: Option<i64>,
    ) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(BigRational::zero());
        VarId(self.variables.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, Some(0), Some(1))
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> VarId {
        self.add_var(name, Some(lower), Some(upper))
    }

    pub fn is_binary(&self, id: VarId) -> bool {
        self.variables.get(id.0).is_some_and(Variable::is_binary)
    }

    fn check_var(&self, id: VarId) -> Result<(), IlpError> {
        if id.0 < self.variables.len() {
            Ok(())
        } else {
            Err(IlpError::DimensionMismatch(format!(
                "{id} referenced but only {} variables declared",
                self.variables.len()
            )))
        }
    }

    /// Adds `Σ coef·var (rel) rhs`; repeated variables are merged.
    pub fn add_constraint(
        &mut self,
        terms: Vec<(VarId, BigRational)>,
        relation: Relation,
        rhs: BigRational,
    ) -> Result<(), IlpError> {
        let mut merged: BTreeMap<VarId, BigRational> = BTreeMap::new();
        for (v, c) in terms {
            self.check_var(v)?;
            *merged.entry(v).or_insert_with(BigRational::zero) += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Integer-coefficient convenience form of [`add_constraint`](Self::add_constraint).
    pub fn add_int_constraint(
        &mut self,
        terms: &[(VarId, i64)],
        relation: Relation,
        rhs: i64,
    ) -> Result<(), IlpError> {
        self.add_constraint(
            terms.iter().map(|&(v, c)| (v, int(c))).collect(),
            relation,
            int(rhs),
        )
    }

    /// Dense form: one coefficient per declared variable.
    pub fn add_dense_constraint(
        &mut self,
        coeffs: Vec<BigRational>,
        relation: Relation,
        rhs: BigRational,
    ) -> Result<(), IlpError> {
        if coeffs.len() != self.variables.len() {
            return Err(IlpError::DimensionMismatch(format!(
                "constraint has {} coefficients for {} variables",
                coeffs.len(),
                self.variables.len()
            )));
        }
        let terms = coeffs
            .into_iter()
            .enumerate()
            .map(|(i, c)| (VarId(i), c))
            .collect();
        self.add_constraint(terms, relation, rhs)
    }

    pub fn set_objective(&mut self, coeffs: Vec<BigRational>) -> Result<(), IlpError> {
        if coeffs.len() != self.variables.len() {
            return Err(IlpError::DimensionMismatch(format!(
                "objective has {} coefficients for {} variables",
                coeffs.len(),
                self.variables.len()
            )));
        }
        self.objective = coeffs;
        Ok(())
    }

    pub fn add_objective_term(&mut self, var: VarId, coeff: BigRational) -> Result<(), IlpError> {
        self.check_var(var)?;
        self.objective[var.0] += coeff;
        Ok(())
    }

    /// Multiplies every objective coefficient by `factor`.
    pub fn scale_objective(&mut self, factor: &BigRational) {
        for c in &mut self.objective {
            *c *= factor;
        }
    }

    /// Adds a fresh binary `d` with `d = a XOR b` in every feasible assignment.
    pub fn linearize_xor(&mut self, a: VarId, b: VarId) -> Result<VarId, IlpError> {
        for v in [a, b] {
            self.check_var(v)?;
            if !self.is_binary(v) {
                return Err(IlpError::NotBinary(self.variables[v.0].name.clone()));
            }
        }
        let name = format!(
            "xor_{}_{}",
            self.variables[a.0].name, self.variables[b.0].name
        );
        let d = self.add_binary(name);
        // d >= a - b, d >= b - a, d <= a + b, d <= 2 - a - b
        self.add_int_constraint(&[(d, 1), (a, -1), (b, 1)], Relation::Ge, 0)?;
        self.add_int_constraint(&[(d, 1), (a, 1), (b, -1)], Relation::Ge, 0)?;
        self.add_int_constraint(&[(d, 1), (a, -1), (b, -1)], Relation::Le, 0)?;
        self.add_int_constraint(&[(d, 1), (a, 1), (b, 1)], Relation::Le, 2)?;
        Ok(d)
    }

    pub fn evaluate(&self, values: &[i64]) -> BigRational {
        self.objective
            .iter()
            .zip(values)
            .filter(|(c, _)| !c.is_zero())
            .fold(BigRational::zero(), |acc, (c, &v)| acc + c * int(v))
    }

    /// Indices of constraints violated by `values`, plus any out-of-bounds variable
    /// reported as a `DimensionMismatch`-free bound check.
    pub fn violations(&self, values: &[i64]) -> Vec<String> {
        let mut out = Vec::new();
        if values.len() != self.variables.len() {
            out.push(format!(
                "assignment has {} values for {} variables",
                values.len(),
                self.variables.len()
            ));
            return out;
        }
        for (v, &x) in self.variables.iter().zip(values) {
            if v.lower.is_some_and(|l| x < l) || v.upper.is_some_and(|u| x > u) {
                out.push(format!("{} = {x} outside bounds", v.name));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let lhs = c.terms.iter().fold(BigRational::zero(), |acc, (v, k)| {
                acc + k * int(values[v.0])
            });
            if !c.relation.holds(&lhs, &c.rhs) {
                out.push(format!(
                    "c{i}: {lhs} {} {} violated",
                    c.relation.symbol(),
                    c.rhs
                ));
            }
        }
        out
    }

    pub fn is_feasible(&self, values: &[i64]) -> bool {
        self.violations(values).is_empty()
    }

    /// CPLEX-LP text with each row scaled to integer coefficients.
    pub fn to_lp_string(&self) -> String {
        lp_format::write_lp(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpSolution {
    pub status: SolveStatus,
    /// Indexed by [`VarId`]; empty when infeasible.
    pub values: Vec<i64>,
    pub objective_value: BigRational,
    pub nodes: u64,
}

impl IlpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> i64 {
        self.values[v.0]
    }

    /// Variable name → value.
    pub fn assignment(&self, problem: &IlpProblem) -> BTreeMap<String, i64> {
        problem
            .variables
            .iter()
            .zip(&self.values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect()
    }
}

pub(crate) fn lcm_of_denominators<'a>(values: impl Iterator<Item = &'a BigRational>) -> BigInt {
    use num_integer::Integer;
    values.fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}
