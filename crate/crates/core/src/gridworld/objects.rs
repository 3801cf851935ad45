use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Everything that can occupy a grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectKind {
    Empty,
    Wall,
    Axe,
    DeerHard,
    DeerEasy,
    Food,
    Predator,
    Lettuce,
    Carrot,
    Salad,
    Wood,
    Metal,
    WorkerWood,
    WorkerMetal,
}

impl ObjectKind {
    /// Objects the agent can lift into its inventory.
    pub fn is_pickable(self) -> bool {
        matches!(self, Self::Axe | Self::Lettuce | Self::Carrot | Self::Wood | Self::Metal)
    }

    /// Entities advanced by the world phase.
    pub fn is_mobile(self) -> bool {
        matches!(self, Self::DeerHard | Self::DeerEasy | Self::Predator | Self::WorkerWood | Self::WorkerMetal)
    }

    pub fn is_deer(self) -> bool {
        matches!(self, Self::DeerHard | Self::DeerEasy)
    }

    pub fn is_worker(self) -> bool {
        matches!(self, Self::WorkerWood | Self::WorkerMetal)
    }

    /// Resource a worker hands out.
    pub fn worker_resource(self) -> Option<ObjectKind> {
        match self {
            Self::WorkerWood => Some(Self::Wood),
            Self::WorkerMetal => Some(Self::Metal),
            _ => None,
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

/// Recipe table: dropping `carried` onto `on_cell`.
pub fn combine(carried: ObjectKind, on_cell: ObjectKind) -> Option<ObjectKind> {
    use ObjectKind::*;
    match (carried, on_cell) {
        (Lettuce, Carrot) | (Carrot, Lettuce) => Some(Salad),
        (Wood, Metal) | (Metal, Wood) => Some(Axe),
        _ => None,
    }
}

/// Small set of object kinds (used for one-time reward flags).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KindSet(u16);

impl KindSet {
    pub fn contains(self, kind: ObjectKind) -> bool {
        self.0 & kind.bit() != 0
    }

    /// Inserts `kind`; returns true when it was not present before.
    pub fn insert(&mut self, kind: ObjectKind) -> bool {
        let fresh = !self.contains(kind);
        self.0 |= kind.bit();
        fresh
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// The grid tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Hunting,
    Scavenging,
    SaladMaking,
    Factory,
    FactoryWalls,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Hunting, Task::Scavenging, Task::SaladMaking, Task::Factory, Task::FactoryWalls];

    /// Observation channels, in frozen order. `Empty` never has a channel.
    pub fn channels(self) -> &'static [ObjectKind] {
        use ObjectKind::*;
        match self {
            Task::Hunting => &[Wall, Axe, DeerHard, DeerEasy],
            Task::Scavenging => &[Wall, Food, Predator],
            Task::SaladMaking => &[Wall, Lettuce, Carrot, Salad],
            Task::Factory | Task::FactoryWalls => &[Wall, Wood, Metal, Axe, WorkerWood, WorkerMetal],
        }
    }

    pub fn n_channels(self) -> usize {
        self.channels().len()
    }

    pub fn channel_of(self, kind: ObjectKind) -> Option<usize> {
        self.channels().iter().position(|k| *k == kind)
    }

    /// Stable numeric id used in checkpoint headers.
    pub fn id(self) -> u8 {
        match self {
            Task::Hunting => 0,
            Task::Scavenging => 1,
            Task::SaladMaking => 2,
            Task::Factory => 3,
            Task::FactoryWalls => 4,
        }
    }

    pub fn from_id(id: u8) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Hunting => "hunting",
            Task::Scavenging => "scavenging",
            Task::SaladMaking => "salad_making",
            Task::Factory => "factory",
            Task::FactoryWalls => "factory_walls",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTask(pub String);

impl fmt::Display for UnknownTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let valid: Vec<_> = Task::ALL.iter().map(|t| t.name()).collect();
        write!(f, "unknown task `{}` (valid tasks: {})", self.0, valid.join(", "))
    }
}

impl std::error::Error for UnknownTask {}

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        Task::ALL
            .into_iter()
            .find(|t| t.name().replace('_', "") == norm)
            .ok_or_else(|| UnknownTask(s.to_string()))
    }
}

/// Agent actions. The index order is the Q-network output order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    PickUp,
    Drop,
}

pub const N_ACTIONS: usize = 6;

impl Action {
    pub const ALL: [Action; N_ACTIONS] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::PickUp, Action::Drop];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// Grid displacement; `y` grows downward.
    pub fn delta(self) -> Option<(i32, i32)> {
        match self {
            Action::Up => Some((0, -1)),
            Action::Down => Some((0, 1)),
            Action::Left => Some((-1, 0)),
            Action::Right => Some((1, 0)),
            Action::PickUp | Action::Drop => None,
        }
    }
}
