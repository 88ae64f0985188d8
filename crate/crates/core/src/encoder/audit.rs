//! Checks an encoding directly against its codes, without the ILP.

use num_rational::BigRational;
use num_traits::Zero;

use super::{Direction, Encoding};
use crate::code::{full_distance, hamming_distance};
use crate::fsm::FsmSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncodingViolation {
    WrongStateCount {
        expected: usize,
        found: usize,
    },
    WrongWidth {
        state: String,
        width: usize,
    },
    BlocksTooWide,
    DuplicateCode {
        a: String,
        b: String,
    },
    GuardTooNarrow {
        from: String,
        to: String,
        distance: usize,
    },
    DirectionBroken {
        from: String,
        to: String,
    },
    ObjectiveMismatch {
        claimed: BigRational,
        actual: BigRational,
    },
}

/// Switching activity of `enc` recomputed from the codes.
pub fn switching_activity(fsm: &FsmSpec, enc: &Encoding) -> BigRational {
    let g = fsm.num_states();
    let mut total = BigRational::zero();
    for i in 0..g {
        for j in i + 1..g {
            let p = fsm.pair_probability(i, j).expect("distinct states");
            let hd = full_distance(&enc.codes[i], &enc.codes[j]).expect("equal widths");
            total += p * BigRational::from_integer(hd.into());
        }
    }
    total
}

pub(super) fn guard_holds(fsm: &FsmSpec, enc: &Encoding, k: usize) -> bool {
    let (a, p) = fsm.authorized()[k];
    let guard = enc.guard(k);
    let (ca, cp) = (&enc.codes[a], &enc.codes[p]);
    let x = enc.x;
    if guard.positions.len() < x + 1 {
        return false;
    }
    if hamming_distance(ca, cp, &guard.positions).expect("in range") < x + 1 {
        return false;
    }
    let zeros = guard.positions.iter().filter(|&&l| !ca.bit(l)).count();
    let ones = guard.positions.len() - zeros;
    match guard.direction {
        Direction::Any => true,
        Direction::Rising => {
            zeros >= x + 1 && guard.positions.iter().all(|&l| ca.bit(l) || cp.bit(l))
        }
        Direction::Falling => {
            ones >= x + 1 && guard.positions.iter().all(|&l| !(ca.bit(l) && cp.bit(l)))
        }
    }
}

/// Every way `enc` fails to be a valid secure encoding of `fsm`.
pub fn audit_encoding(fsm: &FsmSpec, enc: &Encoding) -> Vec<EncodingViolation> {
    let mut out = Vec::new();
    if enc.codes.len() != fsm.num_states() || enc.at_blocks.len() != fsm.authorized().len() {
        out.push(EncodingViolation::WrongStateCount {
            expected: fsm.num_states(),
            found: enc.codes.len(),
        });
        return out;
    }
    let mut widths_ok = true;
    for (i, c) in enc.codes.iter().enumerate() {
        if c.len() != enc.n {
            widths_ok = false;
            out.push(EncodingViolation::WrongWidth {
                state: fsm.state_name(i).to_string(),
                width: c.len(),
            });
        }
    }
    if enc.m_left + enc.m_right > enc.n {
        out.push(EncodingViolation::BlocksTooWide);
        return out;
    }
    if !widths_ok {
        return out;
    }
    let g = fsm.num_states();
    for i in 0..g {
        for j in i + 1..g {
            if enc.codes[i] == enc.codes[j] {
                out.push(EncodingViolation::DuplicateCode {
                    a: fsm.state_name(i).to_string(),
                    b: fsm.state_name(j).to_string(),
                });
            }
        }
    }
    for (k, &(a, p)) in fsm.authorized().iter().enumerate() {
        if guard_holds(fsm, enc, k) {
            continue;
        }
        let guard = enc.guard(k);
        let distance =
            hamming_distance(&enc.codes[a], &enc.codes[p], &guard.positions).expect("in range");
        let (from, to) = (fsm.state_name(a).to_string(), fsm.state_name(p).to_string());
        if distance < enc.x + 1 {
            out.push(EncodingViolation::GuardTooNarrow { from, to, distance });
        } else {
            out.push(EncodingViolation::DirectionBroken { from, to });
        }
    }
    let actual = switching_activity(fsm, enc);
    if actual != enc.objective {
        out.push(EncodingViolation::ObjectiveMismatch {
            claimed: enc.objective.clone(),
            actual,
        });
    }
    out
}
