use crate::emulator::{amplitude_encode, shift_for_encoding, StateVector};
use crate::error::Result;
use crate::mdp::QTable;

/// The bijection `idx(s, a) = s * num_actions + a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    num_states: usize,
    num_actions: usize,
}

impl IndexMap {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
        }
    }

    pub fn for_table(q: &QTable) -> Self {
        Self::new(q.num_states(), q.num_actions())
    }

    pub fn len(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, s: usize, a: usize) -> usize {
        debug_assert!(s < self.num_states && a < self.num_actions);
        s * self.num_actions + a
    }

    pub fn pair(&self, index: usize) -> Option<(usize, usize)> {
        (index < self.len()).then(|| (index / self.num_actions, index % self.num_actions))
    }

    /// Qubits needed to address every pair.
    pub fn num_qubits(&self) -> usize {
        self.len().next_power_of_two().trailing_zeros() as usize
    }
}

/// A Q-table written into a register, or kept classical when it is constant.
#[derive(Debug, Clone, PartialEq)]
pub enum EncodedTable {
    Prepared {
        state: StateVector,
        scale: f64,
        offset: f64,
        index_map: IndexMap,
    },
    /// Every entry equals `offset`; no state is prepared and no query is spent.
    Constant { offset: f64, index_map: IndexMap },
}

impl EncodedTable {
    pub fn offset(&self) -> f64 {
        match self {
            EncodedTable::Prepared { offset, .. } | EncodedTable::Constant { offset, .. } => *offset,
        }
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            EncodedTable::Prepared { state, .. } => state.num_qubits(),
            EncodedTable::Constant { index_map, .. } => index_map.num_qubits(),
        }
    }

    pub fn decode(&self) -> QTable {
        let (map, values) = match self {
            EncodedTable::Prepared {
                state,
                scale,
                offset,
                index_map,
            } => (
                index_map,
                state.amplitudes()[..index_map.len()]
                    .iter()
                    .map(|a| a.re * scale + offset)
                    .collect(),
            ),
            EncodedTable::Constant { offset, index_map } => (index_map, vec![*offset; index_map.len()]),
        };
        QTable::from_vec(map.num_states, map.num_actions, values).expect("decoded table is finite")
    }
}

/// Flattens by `idx`, subtracts the global minimum and amplitude-encodes.
pub fn encode_qtable(q: &QTable, index_map: &IndexMap) -> Result<EncodedTable> {
    let flat: Vec<f64> = (0..index_map.len())
        .map(|i| {
            let (s, a) = index_map.pair(i).expect("index in range");
            q.get(s, a)
        })
        .collect();
    let (shifted, offset) = shift_for_encoding(&flat)?;
    if shifted.iter().all(|&v| v == 0.0) {
        return Ok(EncodedTable::Constant {
            offset,
            index_map: *index_map,
        });
    }
    let enc = amplitude_encode(&shifted)?;
    Ok(EncodedTable::Prepared {
        state: enc.state,
        scale: enc.scale,
        offset,
        index_map: *index_map,
    })
}
