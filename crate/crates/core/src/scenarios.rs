//! Small hand-built layouts with known vulnerabilities, used by the tests and
//! shipped as CLI fixtures.
//!
//! All four share one cell shape whose reset and set points sit at opposite
//! ends, and a 12-unit beam, so that a single laser can reach two cells'
//! points of one kind without reaching the other kind.

use num_rational::BigRational;

use crate::code::Code;
use crate::encoder::{switching_activity, Block, Encoding, ModelVariant};
use crate::floorplan::{FfGeometry, FfTag, PlacedFf, Placement};
use crate::fsm::FsmSpec;
use crate::laser::AttackerModel;
use crate::rational::ratio;

pub const BEAM: i64 = 12;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub fsm: FsmSpec,
    pub encoding: Encoding,
    pub placement: Placement,
    pub attacker: AttackerModel,
}

/// Reset point on the left edge, set point on the right edge.
pub fn cell() -> FfGeometry {
    FfGeometry {
        w: 20,
        h: 10,
        reset_offset: (2, 5),
        set_offset: (18, 5),
    }
}

/// [`cell`] mirrored left to right.
pub fn mirrored_cell() -> FfGeometry {
    FfGeometry {
        w: 20,
        h: 10,
        reset_offset: (18, 5),
        set_offset: (2, 5),
    }
}

fn ff(index: usize, tag: FfTag, y: i64, z: i64, geometry: FfGeometry) -> PlacedFf {
    PlacedFf {
        index,
        bit_position: index,
        tag,
        y,
        z,
        geometry,
    }
}

fn placement(ffs: Vec<PlacedFf>) -> Placement {
    let width = ffs.iter().map(|f| f.y + f.geometry.w).max().unwrap_or(0);
    let height = ffs.iter().map(|f| f.z + f.geometry.h).max().unwrap_or(0);
    Placement {
        ffs,
        width,
        height,
        grid_unit_um: 0.1,
    }
}

fn codes(list: &[&str]) -> Vec<Code> {
    list.iter()
        .map(|c| c.parse().expect("literal code"))
        .collect()
}

fn encoding(fsm: &FsmSpec, codes: Vec<Code>, variant: ModelVariant, m_right: usize) -> Encoding {
    let mut e = Encoding {
        n: codes[0].len(),
        codes,
        m_right,
        m_left: 0,
        variant,
        x: 1,
        objective: BigRational::from_integer(0.into()),
        at_blocks: vec![Block::Right; fsm.authorized().len()],
    };
    e.objective = switching_activity(fsm, &e);
    e
}

/// Four states on a four-bit code with nine transitions; `AU -> P` is the
/// authorized one. The two right bits are the only security bits.
fn four_state_fsm(name: &str) -> FsmSpec {
    let edges = [
        ("AU", "P", 12),
        ("AU", "B", 11),
        ("AU", "C", 11),
        ("B", "AU", 11),
        ("B", "C", 11),
        ("C", "B", 11),
        ("C", "P", 11),
        ("P", "AU", 11),
        ("P", "B", 11),
    ];
    FsmSpec::new(
        name,
        ["AU", "B", "C", "P"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        "AU",
        edges
            .iter()
            .map(|(f, t, p)| (f.to_string(), t.to_string(), ratio(*p, 100)))
            .collect(),
        vec![("AU".into(), "P".into())],
    )
    .expect("valid scenario FSM")
}

/// FF0 and FF1 stacked so one beam reaches any pair of their like points;
/// FF2 and FF3 with their reset points one beam apart and everything else
/// out of reach. The authorized move `xx11 -> xx00` needs two resets.
pub fn reset_pair() -> Scenario {
    let fsm = four_state_fsm("reset_pair");
    let encoding = encoding(
        &fsm,
        codes(&["0011", "0110", "1001", "1100"]),
        ModelVariant::SetModel,
        2,
    );
    let placement = placement(vec![
        ff(0, FfTag::Nff, 0, 0, cell()),
        ff(1, FfTag::Nff, 0, 10, cell()),
        ff(2, FfTag::Sff, 80, 0, cell()),
        ff(3, FfTag::Sff, 64, 10, mirrored_cell()),
    ]);
    let attacker = AttackerModel::new(1, BEAM, 1).expect("valid attacker");
    Scenario {
        name: "reset_pair",
        fsm,
        encoding,
        placement,
        attacker,
    }
}

/// Like [`reset_pair`], but FF2 and FF3 share a beam on their set points and
/// the authorized move is `xx00 -> xx11`.
pub fn set_pair() -> Scenario {
    let fsm = four_state_fsm("set_pair");
    let encoding = encoding(
        &fsm,
        codes(&["1100", "0110", "1001", "0011"]),
        ModelVariant::ResetModel,
        2,
    );
    let placement = placement(vec![
        ff(0, FfTag::Nff, 0, 0, cell()),
        ff(1, FfTag::Nff, 0, 10, cell()),
        ff(2, FfTag::Sff, 80, 0, cell()),
        ff(3, FfTag::Sff, 96, 10, mirrored_cell()),
    ]);
    let attacker = AttackerModel::new(1, BEAM, 1).expect("valid attacker");
    Scenario {
        name: "set_pair",
        fsm,
        encoding,
        placement,
        attacker,
    }
}

fn two_state_fsm(name: &str) -> FsmSpec {
    FsmSpec::new(
        name,
        vec!["AU".into(), "P".into()],
        "AU",
        vec![
            ("AU".into(), "P".into(), ratio(1, 2)),
            ("P".into(), "AU".into(), ratio(1, 2)),
        ],
        vec![("AU".into(), "P".into())],
    )
    .expect("valid scenario FSM")
}

/// `00 -> 11` on two touching cells whose reset points share a beam. A flip
/// of both bits forges the move, but no laser can set both bits.
pub fn shared_reset_beam() -> Scenario {
    let fsm = two_state_fsm("shared_reset_beam");
    let encoding = encoding(&fsm, codes(&["00", "11"]), ModelVariant::ResetModel, 2);
    let placement = placement(vec![
        ff(0, FfTag::Sff, 16, 0, cell()),
        ff(1, FfTag::Sff, 0, 10, mirrored_cell()),
    ]);
    let attacker = AttackerModel::new(1, BEAM, 1).expect("valid attacker");
    Scenario {
        name: "shared_reset_beam",
        fsm,
        encoding,
        placement,
        attacker,
    }
}

/// `01 -> 11` on two touching cells whose set points share a beam. Setting
/// both bits reaches `11`; flipping both gives `10`.
pub fn shared_set_beam() -> Scenario {
    let fsm = two_state_fsm("shared_set_beam");
    let encoding = encoding(&fsm, codes(&["01", "11"]), ModelVariant::ResetModel, 2);
    let placement = placement(vec![
        ff(0, FfTag::Sff, 0, 0, cell()),
        ff(1, FfTag::Sff, 16, 10, mirrored_cell()),
    ]);
    let attacker = AttackerModel::new(1, BEAM, 1).expect("valid attacker");
    Scenario {
        name: "shared_set_beam",
        fsm,
        encoding,
        placement,
        attacker,
    }
}

pub fn all() -> Vec<Scenario> {
    vec![
        reset_pair(),
        set_pair(),
        shared_reset_beam(),
        shared_set_beam(),
    ]
}
