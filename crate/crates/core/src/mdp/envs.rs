use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::TabularMdp;
use crate::error::{invalid_arg, Result};

/// How the slip mass of a GridWorld move is spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlipMode {
    /// Slip picks one of the four moves uniformly, the intended one included.
    #[default]
    UniformAll,
    /// Slip picks one of the three non-intended moves uniformly.
    UniformOthers,
}

/// GridWorld parameters. Actions are `0 = up, 1 = down, 2 = left, 3 = right`;
/// cell `(x, y)` is state `y * width + x` with `y = 0` the top row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub slip_prob: f64,
    pub goal: (usize, usize),
    pub gamma: f64,
    #[serde(default)]
    pub slip_mode: SlipMode,
}

const GRID_MOVES: [(i64, i64); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

impl GridWorld {
    pub fn new(width: usize, height: usize, slip_prob: f64, goal: (usize, usize), gamma: f64) -> Self {
        Self {
            width,
            height,
            slip_prob,
            goal,
            gamma,
            slip_mode: SlipMode::UniformAll,
        }
    }

    pub fn with_slip_mode(mut self, mode: SlipMode) -> Self {
        self.slip_mode = mode;
        self
    }

    pub fn state(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn build(&self) -> Result<TabularMdp> {
        let (w, h) = (self.width, self.height);
        if w == 0 || h == 0 {
            return Err(invalid_arg("grid dimensions must be positive"));
        }
        if w * h < 2 {
            return Err(invalid_arg("grid needs at least two cells"));
        }
        if self.goal.0 >= w || self.goal.1 >= h {
            return Err(invalid_arg(format!("goal {:?} outside a {w}x{h} grid", self.goal)));
        }
        if !(0.0..=1.0).contains(&self.slip_prob) {
            return Err(invalid_arg(format!("slip probability {} not in [0, 1]", self.slip_prob)));
        }
        let goal = self.state(self.goal.0, self.goal.1);
        let step = |s: usize, m: usize| -> usize {
            let (x, y) = ((s % w) as i64, (s / w) as i64);
            let (nx, ny) = (x + GRID_MOVES[m].0, y + GRID_MOVES[m].1);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                s
            } else {
                ny as usize * w + nx as usize
            }
        };

        let mut transitions = Vec::with_capacity(w * h * 4);
        let mut rewards = Vec::with_capacity(w * h * 4);
        for s in 0..w * h {
            for a in 0..4 {
                if s == goal {
                    transitions.push(vec![(s, 1.0)]);
                    rewards.push(0.0);
                    continue;
                }
                let move_probs: [f64; 4] = std::array::from_fn(|m| match self.slip_mode {
                    SlipMode::UniformAll => {
                        self.slip_prob / 4.0 + if m == a { 1.0 - self.slip_prob } else { 0.0 }
                    }
                    SlipMode::UniformOthers => {
                        if m == a {
                            1.0 - self.slip_prob
                        } else {
                            self.slip_prob / 3.0
                        }
                    }
                });
                let row: Vec<(usize, f64)> = move_probs
                    .iter()
                    .enumerate()
                    .map(|(m, &p)| (step(s, m), p))
                    .collect();
                rewards.push(row.iter().filter(|&&(n, _)| n == goal).map(|&(_, p)| p).sum());
                transitions.push(row);
            }
        }
        TabularMdp::new(w * h, 4, transitions, rewards, self.gamma, BTreeSet::from([goal]), 0)
    }
}

/// `w x h` GridWorld with uniform-over-all-moves slip.
pub fn build_gridworld(
    width: usize,
    height: usize,
    slip_prob: f64,
    goal: (usize, usize),
    gamma: f64,
) -> Result<TabularMdp> {
    GridWorld::new(width, height, slip_prob, goal, gamma).build()
}

const FROZENLAKE_4: [&str; 4] = ["SFFF", "FHFH", "FFFH", "HFFG"];

const FROZENLAKE_8: [&str; 8] = [
    "SFFFFFFF", "FFFFFFFF", "FFFHFFFF", "FFFFFHFF", "FFFHFFFF", "FHHFFFHF", "FHFFHFHF",
    "FFFHFFFG",
];

// No canonical 10x10 layout exists; this one keeps a hole density close to the
// 8x8 map and leaves a safe corridor along row 1 and the last column.
const FROZENLAKE_10: [&str; 10] = [
    "SFFFFFFHFF", "FFFFFFFFFF", "FFFHFFFFHF", "FFFFFHFFFF", "FHFFFFFFFF", "FFFFHFFHFF",
    "FFHFFFFFFF", "FFFFFFHFFF", "HFFFHFFFHF", "FFFFFFFFFG",
];

/// Map rows for a supported FrozenLake size.
pub fn frozenlake_map(size: usize) -> Result<&'static [&'static str]> {
    match size {
        4 => Ok(&FROZENLAKE_4),
        8 => Ok(&FROZENLAKE_8),
        10 => Ok(&FROZENLAKE_10),
        _ => Err(invalid_arg(format!("unsupported FrozenLake size {size}; use 4, 8 or 10"))),
    }
}

/// FrozenLake with the classic action order `0 = left, 1 = down, 2 = right, 3 = up`.
///
/// Holes and the goal are terminal; entering the goal pays +1. When slippery,
/// the intended move and the two perpendicular moves each get probability 1/3.
pub fn build_frozenlake(size: usize, slippery: bool, gamma: f64) -> Result<TabularMdp> {
    const MOVES: [(i64, i64); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
    let map = frozenlake_map(size)?;
    let n = size;
    let cell = |s: usize| map[s / n].as_bytes()[s % n];
    let step = |s: usize, m: usize| -> usize {
        let (x, y) = ((s % n) as i64, (s / n) as i64);
        let nx = (x + MOVES[m].0).clamp(0, n as i64 - 1);
        let ny = (y + MOVES[m].1).clamp(0, n as i64 - 1);
        ny as usize * n + nx as usize
    };

    let terminals: BTreeSet<usize> = (0..n * n).filter(|&s| matches!(cell(s), b'H' | b'G')).collect();
    let start = (0..n * n).find(|&s| cell(s) == b'S').unwrap_or(0);

    let mut transitions = Vec::with_capacity(n * n * 4);
    let mut rewards = Vec::with_capacity(n * n * 4);
    for s in 0..n * n {
        for a in 0..4 {
            if terminals.contains(&s) {
                transitions.push(vec![(s, 1.0)]);
                rewards.push(0.0);
                continue;
            }
            let row: Vec<(usize, f64)> = if slippery {
                [(a + 3) % 4, a, (a + 1) % 4]
                    .iter()
                    .map(|&m| (step(s, m), 1.0 / 3.0))
                    .collect()
            } else {
                vec![(step(s, a), 1.0)]
            };
            rewards.push(row.iter().filter(|&&(t, _)| cell(t) == b'G').map(|&(_, p)| p).sum());
            transitions.push(row);
        }
    }
    TabularMdp::new(n * n, 4, transitions, rewards, gamma, terminals, start)
}
