//! Laser-fault-injection resilient FSM encoding, secure flip-flop placement
//! and layout-aware vulnerability analysis.

pub mod benchmarks;
pub mod code;
pub mod encoder;
pub mod floorplan;
pub mod fsm;
pub mod ilp;
pub mod laser;
pub mod metrics;
pub mod pipeline;
pub mod rational;
pub mod scenarios;
