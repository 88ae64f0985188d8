use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A state code. Index 0 is the leftmost bit and maps to flip-flop 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Code(Vec<bool>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid bit character `{0}`")]
    InvalidChar(char),
    #[error("bit vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("bit position {0} out of range for length {1}")]
    OutOfRange(usize, usize),
}

impl Code {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// `n`-bit code of `value`, most significant bit leftmost.
    pub fn from_value(value: u64, n: usize) -> Self {
        Self((0..n).map(|i| (value >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn restrict(&self, positions: &[usize]) -> Code {
        Code(positions.iter().map(|&p| self.0[p]).collect())
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Code {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CodeError::InvalidChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Code)
    }
}

/// Number of `positions` where `a` and `b` differ.
pub fn hamming_distance(a: &Code, b: &Code, positions: &[usize]) -> Result<usize, CodeError> {
    if a.len() != b.len() {
        return Err(CodeError::LengthMismatch(a.len(), b.len()));
    }
    let mut d = 0;
    for &p in positions {
        if p >= a.len() {
            return Err(CodeError::OutOfRange(p, a.len()));
        }
        d += usize::from(a.0[p] != b.0[p]);
    }
    Ok(d)
}

/// Hamming distance over every position.
pub fn full_distance(a: &Code, b: &Code) -> Result<usize, CodeError> {
    let all: Vec<usize> = (0..a.len()).collect();
    hamming_distance(a, b, &all)
}
