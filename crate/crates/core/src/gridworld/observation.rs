use serde::{Deserialize, Serialize};

use crate::Real;

use super::objects::{ObjectKind, Task};
use super::state::GridState;

/// Side of the egocentric window.
pub const VIEW: usize = 5;
pub const VIEW_CELLS: usize = VIEW * VIEW;

/// Dense one-hot observation.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// `25 * C` entries, row-major over the window then channel.
    pub grid_view: Vec<f32>,
    /// `C + 1` entries; the last slot means "carrying nothing".
    pub inventory_view: Vec<f32>,
}

/// Compact observation: per window cell `0` for empty or `channel + 1`;
/// inventory holds the channel index, or `C` when empty. Expands losslessly
/// into [`Observation`] and is what the replay buffer stores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObsCode {
    pub cells: [u8; VIEW_CELLS],
    pub inventory: u8,
}

impl ObsCode {
    /// Writes the grid one-hot into `out` (length `25 * c`), overwriting it.
    pub fn write_grid<T: Real>(&self, c: usize, out: &mut [T]) {
        assert_eq!(out.len(), VIEW_CELLS * c);
        out.fill(T::zero());
        for (i, code) in self.cells.iter().enumerate() {
            if *code > 0 {
                out[i * c + (*code as usize - 1)] = T::one();
            }
        }
    }

    /// Writes the inventory one-hot into `out` (length `c + 1`).
    pub fn write_inventory<T: Real>(&self, c: usize, out: &mut [T]) {
        assert_eq!(out.len(), c + 1);
        out.fill(T::zero());
        out[(self.inventory as usize).min(c)] = T::one();
    }

    pub fn expand(&self, c: usize) -> Observation {
        let mut grid_view = vec![0.0f32; VIEW_CELLS * c];
        let mut inventory_view = vec![0.0f32; c + 1];
        self.write_grid(c, &mut grid_view);
        self.write_inventory(c, &mut inventory_view);
        Observation { grid_view, inventory_view }
    }
}

fn code_for(task: Task, kind: ObjectKind) -> u8 {
    task.channel_of(kind).map_or(0, |c| c as u8 + 1)
}

/// 5x5 window centred on the agent. Out-of-bounds cells read as Wall.
/// Objects outside the task's channel list read as empty.
pub fn encode_observation(state: &GridState, task: Task) -> ObsCode {
    let wall = code_for(task, ObjectKind::Wall);
    let half = (VIEW / 2) as i32;
    let agent = state.agent_pos();
    let mut cells = [0u8; VIEW_CELLS];
    for dy in -half..=half {
        for dx in -half..=half {
            let i = ((dy + half) as usize) * VIEW + (dx + half) as usize;
            cells[i] = match state.offset(agent, dx, dy) {
                Some(p) => code_for(task, state.cell(p)),
                None => wall,
            };
        }
    }
    let c = task.n_channels() as u8;
    let inventory = state.inventory().and_then(|k| task.channel_of(k)).map_or(c, |ch| ch as u8);
    ObsCode { cells, inventory }
}
