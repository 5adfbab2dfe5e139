//! Agents, tasks, maps and scenarios.

mod grid;
mod scenario;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{parse_grid_map, parse_movingai_map, Cell, GridMap, GridParseError};
pub use scenario::{emit_scenario, load_scenario, parse_scenario, parse_scenario_at, ScenarioError};
pub use validate::{validate_scenario, Rule, Violation};

/// Ground an agent can traverse, ordered `Fixed < Flat < Uneven`. An agent
/// rated for a level also handles every lower level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TerrainLevel {
    Fixed,
    Flat,
    Uneven,
}

impl TerrainLevel {
    pub const ALL: [TerrainLevel; 3] = [TerrainLevel::Fixed, TerrainLevel::Flat, TerrainLevel::Uneven];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn from_ordinal(ordinal: u8) -> Option<Self> {
        Self::ALL.get(ordinal as usize).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            TerrainLevel::Fixed => "Fixed",
            TerrainLevel::Flat => "Flat",
            TerrainLevel::Uneven => "Uneven",
        }
    }
}

impl fmt::Display for TerrainLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown terrain label {0:?}")]
pub struct UnknownTerrain(pub String);

impl FromStr for TerrainLevel {
    type Err = UnknownTerrain;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownTerrain(s.to_string()))
    }
}

/// Unit symbol such as `kg` or `m`. Which symbols are accepted is decided by a [`UnitTable`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Unit(String);

impl Unit {
    pub fn new(symbol: impl Into<String>) -> Self {
        Unit(symbol.into())
    }

    pub fn kg() -> Self {
        Unit::new("kg")
    }

    pub fn m() -> Self {
        Unit::new("m")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The set of unit symbols a scenario may use: `kg` and `m`, plus any extras from config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitTable {
    units: BTreeSet<Unit>,
}

impl Default for UnitTable {
    fn default() -> Self {
        UnitTable {
            units: [Unit::kg(), Unit::m()].into_iter().collect(),
        }
    }
}

impl UnitTable {
    pub fn with_extra<'a>(extra: impl IntoIterator<Item = &'a str>) -> Self {
        let mut table = UnitTable::default();
        table.units.extend(extra.into_iter().map(Unit::new));
        table
    }

    pub fn contains(&self, unit: &Unit) -> bool {
        self.units.contains(unit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Quantity { value, unit }
    }

    pub fn kg(value: f64) -> Self {
        Quantity::new(value, Unit::kg())
    }

    pub fn m(value: f64) -> Self {
        Quantity::new(value, Unit::m())
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

/// What a task demands along one dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum RequirementKind {
    /// Capability must be at least this quantity (same unit).
    NumericMin(Quantity),
    /// Capability must be at least this terrain level.
    OrderedMin(TerrainLevel),
    /// The named tool must appear in the agent's tool list.
    ToolRequired(String),
    /// Not machine-comparable; always scored by the adjudicator.
    FreeText(String),
}

impl RequirementKind {
    pub fn is_structured(&self) -> bool {
        !matches!(self, RequirementKind::FreeText(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RequirementKind::NumericMin(_) => "numeric-min",
            RequirementKind::OrderedMin(_) => "ordered-min",
            RequirementKind::ToolRequired(_) => "tool-required",
            RequirementKind::FreeText(_) => "free-text",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    pub dimension: String,
    pub kind: RequirementKind,
}

impl Requirement {
    pub fn new(dimension: impl Into<String>, kind: RequirementKind) -> Self {
        Requirement {
            dimension: dimension.into(),
            kind,
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RequirementKind::NumericMin(q) => write!(f, "{}: at least {}", self.dimension, q),
            RequirementKind::OrderedMin(t) => write!(f, "{}: at least {}", self.dimension, t),
            RequirementKind::ToolRequired(tool) => write!(f, "{}: requires tool {}", self.dimension, tool),
            RequirementKind::FreeText(text) => write!(f, "{}: {}", self.dimension, text),
        }
    }
}

/// One entry of a capability profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapabilityValue {
    Quantity(Quantity),
    Terrain(TerrainLevel),
    Tools(Vec<String>),
    Notes(String),
}

impl fmt::Display for CapabilityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapabilityValue::Quantity(q) => write!(f, "{q}"),
            CapabilityValue::Terrain(t) => write!(f, "{t}"),
            CapabilityValue::Tools(tools) => write!(f, "tools [{}]", tools.join(", ")),
            CapabilityValue::Notes(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapabilityProfile {
    pub agent_id: String,
    pub entries: BTreeMap<String, CapabilityValue>,
    pub start: Cell,
}

impl CapabilityProfile {
    pub fn new(agent_id: impl Into<String>, start: Cell) -> Self {
        CapabilityProfile {
            agent_id: agent_id.into(),
            entries: BTreeMap::new(),
            start,
        }
    }

    pub fn with(mut self, dimension: impl Into<String>, value: CapabilityValue) -> Self {
        self.entries.insert(dimension.into(), value);
        self
    }

    pub fn get(&self, dimension: &str) -> Option<&CapabilityValue> {
        self.entries.get(dimension)
    }

    /// Plain-text rendering, one entry per line in dimension order.
    pub fn digest(&self) -> String {
        let mut out = format!("Agent {}\n", self.agent_id);
        for (dim, value) in &self.entries {
            out.push_str(&format!("- {dim}: {value}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDescription {
    pub task_id: String,
    pub requirements: Vec<Requirement>,
    pub goal: Cell,
}

impl TaskDescription {
    pub fn new(task_id: impl Into<String>, goal: Cell) -> Self {
        TaskDescription {
            task_id: task_id.into(),
            requirements: Vec::new(),
            goal,
        }
    }

    pub fn with(mut self, requirement: Requirement) -> Self {
        self.requirements.push(requirement);
        self
    }

    pub fn digest(&self) -> String {
        let mut out = format!("Task {}\n", self.task_id);
        for r in &self.requirements {
            out.push_str(&format!("- {r}\n"));
        }
        out
    }
}

/// Optional per-scenario parameters. Unset fields fall back to the pipeline defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approval_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecbs_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_factor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi_round: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_limit: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ct_nodes: Option<usize>,
    /// Extra unit symbols accepted in addition to `kg` and `m`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<String>,
    /// Per-dimension aggregation weights (default 1).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dimension_weights: BTreeMap<String, f64>,
    /// Canned replies for the offline adjudicator, keyed by request key or
    /// by `agent/task/dimension`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub adjudicator_fixtures: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: GridMap,
    pub agents: Vec<CapabilityProfile>,
    pub tasks: Vec<TaskDescription>,
    pub config: ConfigOverrides,
    /// Pre-computed task → agent assignment, used when planning without voting.
    pub assignment: Option<BTreeMap<String, String>>,
}

impl Scenario {
    pub fn new(map: GridMap, agents: Vec<CapabilityProfile>, tasks: Vec<TaskDescription>) -> Self {
        Scenario {
            map,
            agents,
            tasks,
            config: ConfigOverrides::default(),
            assignment: None,
        }
    }

    pub fn agent(&self, id: &str) -> Option<&CapabilityProfile> {
        self.agents.iter().find(|a| a.agent_id == id)
    }

    pub fn task(&self, id: &str) -> Option<&TaskDescription> {
        self.tasks.iter().find(|t| t.task_id == id)
    }

    pub fn unit_table(&self) -> UnitTable {
        UnitTable::with_extra(self.config.units.iter().map(String::as_str))
    }
}
