//! JSON form of a [`TabularMdp`].
//!
//! ```json
//! {"num_states": 2, "num_actions": 1, "gamma": 9.0000000000000002e-1, "start": 0,
//!  "terminals": [1], "rewards": [[1.0000000000000000e0], [0.0000000000000000e0]],
//!  "transitions": [{"s": 0, "a": 0, "rows": [[1, 1.0000000000000000e0]]}, ...]}
//! ```
//!
//! Reals are written with 17 significant digits so a save/load cycle restores
//! every probability bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::TabularMdp;
use crate::error::{QPolicyError, Result};

/// Formats a float with 17 significant digits as a JSON number.
pub(crate) fn format_f64(x: f64) -> String {
    // print negative zero as 0
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn raw(x: f64) -> Box<RawValue> {
    // `{:e}` output of a finite float is always a valid JSON number
    RawValue::from_string(format_f64(x)).expect("formatted float is valid JSON")
}

fn parse(raw: &RawValue) -> Result<f64> {
    raw.get()
        .trim()
        .parse::<f64>()
        .map_err(|e| QPolicyError::Serialization(format!("bad number `{}`: {e}", raw.get())))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    s: usize,
    a: usize,
    rows: Vec<(usize, Box<RawValue>)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDoc {
    num_states: usize,
    num_actions: usize,
    gamma: Box<RawValue>,
    start: usize,
    terminals: Vec<usize>,
    rewards: Vec<Vec<Box<RawValue>>>,
    transitions: Vec<TransitionDoc>,
}

pub fn mdp_to_json(mdp: &TabularMdp) -> String {
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let doc = MdpDoc {
        num_states: ns,
        num_actions: na,
        gamma: raw(mdp.gamma()),
        start: mdp.start(),
        terminals: mdp.terminals().iter().copied().collect(),
        rewards: (0..ns)
            .map(|s| (0..na).map(|a| raw(mdp.reward(s, a))).collect())
            .collect(),
        transitions: (0..ns)
            .flat_map(|s| (0..na).map(move |a| (s, a)))
            .map(|(s, a)| TransitionDoc {
                s,
                a,
                rows: mdp.successors(s, a).iter().map(|&(n, p)| (n, raw(p))).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("MDP document serializes")
}

pub fn mdp_from_json(text: &str) -> Result<TabularMdp> {
    let doc: MdpDoc =
        serde_json::from_str(text).map_err(|e| QPolicyError::Serialization(e.to_string()))?;
    let (ns, na) = (doc.num_states, doc.num_actions);
    if doc.rewards.len() != ns || doc.rewards.iter().any(|r| r.len() != na) {
        return Err(QPolicyError::Serialization(format!(
            "rewards must be a {ns}x{na} matrix"
        )));
    }
    let mut rewards = Vec::with_capacity(ns * na);
    for row in &doc.rewards {
        for r in row {
            rewards.push(parse(r)?);
        }
    }
    let mut transitions: Vec<Option<Vec<(usize, f64)>>> = vec![None; ns * na];
    for t in &doc.transitions {
        if t.s >= ns || t.a >= na {
            return Err(QPolicyError::Serialization(format!(
                "transition entry ({}, {}) out of range",
                t.s, t.a
            )));
        }
        let slot = &mut transitions[t.s * na + t.a];
        if slot.is_some() {
            return Err(QPolicyError::Serialization(format!(
                "duplicate transition entry ({}, {})",
                t.s, t.a
            )));
        }
        let row = t
            .rows
            .iter()
            .map(|(n, p)| parse(p).map(|p| (*n, p)))
            .collect::<Result<Vec<_>>>()?;
        *slot = Some(row);
    }
    let transitions = transitions
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.ok_or_else(|| {
                QPolicyError::Serialization(format!("missing transition entry ({}, {})", i / na, i % na))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TabularMdp::new(
        ns,
        na,
        transitions,
        rewards,
        parse(&doc.gamma)?,
        doc.terminals.into_iter().collect(),
        doc.start,
    )
}

pub fn save_mdp(mdp: &TabularMdp, path: &Path) -> std::io::Result<()> {
    crate::output::write_atomic(path, mdp_to_json(mdp).as_bytes())
}

pub fn load_mdp(path: &Path) -> Result<TabularMdp> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QPolicyError::Serialization(format!("{}: {e}", path.display())))?;
    mdp_from_json(&text)
}
