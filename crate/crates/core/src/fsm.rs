//! FSM description, the JSON interchange format, and sensitive-state classes.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::rational::{format_rational, parse_rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FsmError {
    #[error("malformed FSM document: {0}")]
    Malformed(String),
    #[error("unknown state `{state}` referenced in {context}")]
    UnknownState { state: String, context: String },
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("duplicate transition `{0}` -> `{1}`")]
    DuplicateTransition(String, String),
    #[error("authorized transition on `{0}` is a self-loop")]
    SelfLoopAuthorized(String),
    #[error("authorized transition `{0}` -> `{1}` does not appear in transitions")]
    AuthorizedNotInTransitions(String, String),
    #[error("duplicate authorized transition `{0}` -> `{1}`")]
    DuplicateAuthorized(String, String),
    #[error("negative probability {prob} on transition `{from}` -> `{to}`")]
    NegativeProbability {
        from: String,
        to: String,
        prob: String,
    },
    #[error("state pair must name two distinct states, got `{0}` twice")]
    SamePair(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub prob: BigRational,
}

/// A validated FSM. States are addressed by their declaration index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsmSpec {
    name: String,
    states: Vec<String>,
    reset_state: usize,
    transitions: Vec<Transition>,
    authorized: Vec<(usize, usize)>,
}

impl FsmSpec {
    /// Builds and validates an FSM from names. Transitions are `(from, to, prob)`.
    pub fn new(
        name: impl Into<String>,
        states: Vec<String>,
        reset_state: &str,
        transitions: Vec<(String, String, BigRational)>,
        authorized: Vec<(String, String)>,
    ) -> Result<Self, FsmError> {
        let mut index = HashMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(FsmError::DuplicateState(s.clone()));
            }
        }
        let lookup = |s: &str, context: &str| {
            index.get(s).copied().ok_or_else(|| FsmError::UnknownState {
                state: s.to_string(),
                context: context.to_string(),
            })
        };
        let reset = lookup(reset_state, "reset_state")?;

        let mut seen = HashSet::new();
        let mut resolved = Vec::with_capacity(transitions.len());
        for (from, to, prob) in &transitions {
            let f = lookup(from, "transitions")?;
            let t = lookup(to, "transitions")?;
            if prob.is_negative() {
                return Err(FsmError::NegativeProbability {
                    from: from.clone(),
                    to: to.clone(),
                    prob: format_rational(prob),
                });
            }
            if !seen.insert((f, t)) {
                return Err(FsmError::DuplicateTransition(from.clone(), to.clone()));
            }
            resolved.push(Transition {
                from: f,
                to: t,
                prob: prob.clone(),
            });
        }

        let mut at_seen = HashSet::new();
        let mut at = Vec::with_capacity(authorized.len());
        for (from, to) in &authorized {
            let f = lookup(from, "authorized_transitions")?;
            let t = lookup(to, "authorized_transitions")?;
            if f == t {
                return Err(FsmError::SelfLoopAuthorized(from.clone()));
            }
            if !seen.contains(&(f, t)) {
                return Err(FsmError::AuthorizedNotInTransitions(
                    from.clone(),
                    to.clone(),
                ));
            }
            if !at_seen.insert((f, t)) {
                return Err(FsmError::DuplicateAuthorized(from.clone(), to.clone()));
            }
            at.push((f, t));
        }

        Ok(Self {
            name: name.into(),
            states,
            reset_state: reset,
            transitions: resolved,
            authorized: at,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.states[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn reset_state(&self) -> usize {
        self.reset_state
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn authorized(&self) -> &[(usize, usize)] {
        &self.authorized
    }

    /// Returns a copy with every probability multiplied by `factor`.
    pub fn scaled(&self, factor: &BigRational) -> Self {
        let mut out = self.clone();
        for t in &mut out.transitions {
            t.prob = &t.prob * factor;
        }
        out
    }

    /// Replaces the authorized-transition set (validated against the transitions).
    pub fn with_authorized(&self, authorized: Vec<(usize, usize)>) -> Result<Self, FsmError> {
        let names = authorized
            .iter()
            .map(|&(a, b)| (self.states[a].clone(), self.states[b].clone()))
            .collect();
        let transitions = self
            .transitions
            .iter()
            .map(|t| {
                (
                    self.states[t.from].clone(),
                    self.states[t.to].clone(),
                    t.prob.clone(),
                )
            })
            .collect();
        Self::new(
            self.name.clone(),
            self.states.clone(),
            &self.states[self.reset_state],
            transitions,
            names,
        )
    }

    /// prob(i→j) + prob(j→i); absent edges count as zero.
    pub fn pair_probability(&self, i: usize, j: usize) -> Result<BigRational, FsmError> {
        if i == j {
            return Err(FsmError::SamePair(self.states[i].clone()));
        }
        Ok(self
            .transitions
            .iter()
            .filter(|t| (t.from == i && t.to == j) || (t.from == j && t.to == i))
            .fold(BigRational::zero(), |acc, t| acc + &t.prob))
    }

    pub fn classify(&self) -> StateClasses {
        classify_states(self)
    }

    /// Canonical JSON value (keys sorted, probabilities as canonical strings).
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "states": self.states,
            "reset_state": self.states[self.reset_state],
            "transitions": self.transitions.iter().map(|t| json!({
                "from": self.states[t.from],
                "to": self.states[t.to],
                "prob": format_rational(&t.prob),
            })).collect::<Vec<_>>(),
            "authorized_transitions": self.authorized.iter()
                .map(|&(a, p)| json!([self.states[a], self.states[p]]))
                .collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json value serializes")
    }
}

/// Authorized, protected, sensitive and normal state sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StateClasses {
    pub au: BTreeSet<usize>,
    pub p: BTreeSet<usize>,
    pub ss: BTreeSet<usize>,
    pub ns: BTreeSet<usize>,
}

pub fn classify_states(fsm: &FsmSpec) -> StateClasses {
    let au: BTreeSet<usize> = fsm.authorized.iter().map(|&(a, _)| a).collect();
    let p: BTreeSet<usize> = fsm.authorized.iter().map(|&(_, b)| b).collect();
    let ss: BTreeSet<usize> = au.union(&p).copied().collect();
    let ns = (0..fsm.num_states()).filter(|s| !ss.contains(s)).collect();
    StateClasses { au, p, ss, ns }
}

fn malformed(msg: impl Into<String>) -> FsmError {
    FsmError::Malformed(msg.into())
}

fn parse_prob(v: &Value, context: &str) -> Result<BigRational, FsmError> {
    let text = match v {
        Value::String(s) => s.clone(),
        // serde_json prints the shortest round-trip form, so "0.1" stays 1/10.
        Value::Number(n) => n.to_string(),
        _ => {
            return Err(malformed(format!(
                "{context}: `prob` must be a number or string"
            )))
        }
    };
    parse_rational(&text).ok_or_else(|| malformed(format!("{context}: cannot parse prob `{text}`")))
}

fn as_str<'a>(v: &'a Value, context: &str) -> Result<&'a str, FsmError> {
    v.as_str()
        .ok_or_else(|| malformed(format!("{context} must be a string")))
}

/// Parses and validates an FSM interchange document.
pub fn parse_fsm_spec(text: &str) -> Result<FsmSpec, FsmError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| malformed("top level must be an object"))?;
    let field = |k: &str| {
        obj.get(k)
            .ok_or_else(|| malformed(format!("missing key `{k}`")))
    };

    let name = as_str(field("name")?, "`name`")?.to_string();
    let states = field("states")?
        .as_array()
        .ok_or_else(|| malformed("`states` must be an array"))?
        .iter()
        .enumerate()
        .map(|(i, s)| as_str(s, &format!("states[{i}]")).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    let reset = as_str(field("reset_state")?, "`reset_state`")?;

    let mut transitions = Vec::new();
    let tarr = field("transitions")?
        .as_array()
        .ok_or_else(|| malformed("`transitions` must be an array"))?;
    for (i, t) in tarr.iter().enumerate() {
        let ctx = format!("transitions[{i}]");
        let t = t
            .as_object()
            .ok_or_else(|| malformed(format!("{ctx} must be an object")))?;
        let get = |k: &str| {
            t.get(k)
                .ok_or_else(|| malformed(format!("{ctx}: missing `{k}`")))
        };
        let from = as_str(get("from")?, &format!("{ctx}.from"))?.to_string();
        let to = as_str(get("to")?, &format!("{ctx}.to"))?.to_string();
        let prob = parse_prob(get("prob")?, &ctx)?;
        transitions.push((from, to, prob));
    }

    let mut authorized = Vec::new();
    let aarr = match obj.get("authorized_transitions") {
        Some(v) => v
            .as_array()
            .ok_or_else(|| malformed("`authorized_transitions` must be an array"))?
            .clone(),
        None => Vec::new(),
    };
    for (i, pair) in aarr.iter().enumerate() {
        let ctx = format!("authorized_transitions[{i}]");
        let pair = pair
            .as_array()
            .filter(|p| p.len() == 2)
            .ok_or_else(|| malformed(format!("{ctx} must be a two-element array")))?;
        authorized.push((
            as_str(&pair[0], &ctx)?.to_string(),
            as_str(&pair[1], &ctx)?.to_string(),
        ));
    }

    FsmSpec::new(name, states, reset, transitions, authorized)
}
