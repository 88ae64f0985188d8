//! Controller-shaped FSMs used by the acceptance suite, benches and CLI tests.

use crate::fsm::{parse_fsm_spec, FsmSpec};

const SOURCES: [(&str, &str); 5] = [
    ("aes", include_str!("../../../fixtures/aes.json")),
    ("sha256", include_str!("../../../fixtures/sha256.json")),
    (
        "fsm_controller",
        include_str!("../../../fixtures/fsm_controller.json"),
    ),
    (
        "power_sequencer",
        include_str!("../../../fixtures/power_sequencer.json"),
    ),
    ("viirf", include_str!("../../../fixtures/viirf.json")),
];

pub fn benchmark_names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

pub fn benchmark_source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn benchmark(name: &str) -> Option<FsmSpec> {
    benchmark_source(name).map(|s| parse_fsm_spec(s).expect("bundled fixture is valid"))
}

pub fn benchmark_suite() -> Vec<FsmSpec> {
    benchmark_names().filter_map(benchmark).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let shapes: Vec<(usize, usize, usize, usize)> = benchmark_suite()
            .iter()
            .map(|f| {
                let c = f.classify();
                (
                    f.num_states(),
                    f.transitions().len(),
                    c.ss.len(),
                    f.authorized().len(),
                )
            })
            .collect();
        assert_eq!(
            shapes,
            vec![
                (5, 10, 3, 2),
                (7, 11, 3, 2),
                (7, 9, 4, 2),
                (9, 11, 4, 3),
                (12, 13, 6, 3)
            ]
        );
    }
}
