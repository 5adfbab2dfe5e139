//! JSON scenario files.
//!
//! ```json
//! {
//!   "map": "....\n.@..",            // or {"path": "site.map"} (movingai format)
//!   "agents": [
//!     {"id": "A", "start": [0, 0],
//!      "capabilities": {"payload": {"quantity": {"value": 500, "unit": "kg"}},
//!                       "terrain": {"terrain": "Flat"},
//!                       "tools":   {"tools": ["gripper"]},
//!                       "notes":   {"notes": "tracked base"}}}
//!   ],
//!   "tasks": [
//!     {"id": "T1", "goal": [3, 1],
//!      "requirements": [
//!        {"dimension": "payload", "kind": "numeric-min", "value": {"value": 400, "unit": "kg"}},
//!        {"dimension": "terrain", "kind": "ordered-min", "value": "Flat"},
//!        {"dimension": "tools", "kind": "tool-required", "value": "gripper"},
//!        {"dimension": "anchoring", "kind": "free-text", "value": "hold modules in high wind"}]}
//!   ],
//!   "config": {"approval_threshold": 0.7},
//!   "assignment": {"T1": "A"}
//! }
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{
    parse_grid_map, parse_movingai_map, CapabilityProfile, CapabilityValue, Cell, ConfigOverrides,
    GridParseError, Quantity, Requirement, RequirementKind, Scenario, TaskDescription, TerrainLevel,
    UnitTable,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid map: {0}")]
    Map(#[from] GridParseError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("duplicate dimension {dimension:?} in task {task}")]
    DuplicateDimension { task: String, dimension: String },
    #[error("unknown unit {unit:?} in {owner}")]
    UnknownUnit { owner: String, unit: String },
    #[error("unknown terrain label {label:?} in {owner}")]
    UnknownTerrain { owner: String, label: String },
    #[error("unknown requirement kind {kind:?} in task {task}")]
    UnknownKind { task: String, kind: String },
    #[error("invalid value for {owner}/{dimension}: {detail}")]
    InvalidValue {
        owner: String,
        dimension: String,
        detail: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MapDoc {
    Inline(String),
    File { path: PathBuf },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: String,
    start: Cell,
    #[serde(default)]
    capabilities: BTreeMap<String, CapabilityValue>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequirementDoc {
    dimension: String,
    kind: String,
    value: Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    id: String,
    goal: Cell,
    #[serde(default)]
    requirements: Vec<RequirementDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    map: MapDoc,
    agents: Vec<AgentDoc>,
    #[serde(default)]
    tasks: Vec<TaskDoc>,
    #[serde(default)]
    config: ConfigOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assignment: Option<BTreeMap<String, String>>,
}

/// Parses a scenario document whose map is inline (or referenced relative to the working directory).
pub fn parse_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    parse_scenario_at(document, None)
}

/// Parses a scenario document, resolving a referenced `.map` file against `base_dir`.
pub fn parse_scenario_at(document: &str, base_dir: Option<&Path>) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(document)?;
    let units = UnitTable::with_extra(doc.config.units.iter().map(String::as_str));

    let map = match &doc.map {
        MapDoc::Inline(text) => parse_grid_map(text)?,
        MapDoc::File { path } => {
            let full = match base_dir {
                Some(base) if path.is_relative() => base.join(path),
                _ => path.clone(),
            };
            let text = std::fs::read_to_string(&full).map_err(|source| ScenarioError::Io {
                path: full.clone(),
                source,
            })?;
            parse_movingai_map(&text)?
        }
    };

    let mut seen = HashSet::new();
    let mut agents = Vec::with_capacity(doc.agents.len());
    for a in doc.agents {
        if !seen.insert(a.id.clone()) {
            return Err(ScenarioError::DuplicateId { kind: "agent", id: a.id });
        }
        for (dim, value) in &a.capabilities {
            check_capability(&a.id, dim, value, &units)?;
        }
        agents.push(CapabilityProfile {
            agent_id: a.id,
            entries: a.capabilities,
            start: a.start,
        });
    }

    let mut seen = HashSet::new();
    let mut tasks = Vec::with_capacity(doc.tasks.len());
    for t in doc.tasks {
        if !seen.insert(t.id.clone()) {
            return Err(ScenarioError::DuplicateId { kind: "task", id: t.id });
        }
        let mut dims = HashSet::new();
        let mut requirements = Vec::with_capacity(t.requirements.len());
        for r in t.requirements {
            if !dims.insert(r.dimension.clone()) {
                return Err(ScenarioError::DuplicateDimension {
                    task: t.id,
                    dimension: r.dimension,
                });
            }
            requirements.push(requirement_from_doc(&t.id, r, &units)?);
        }
        tasks.push(TaskDescription {
            task_id: t.id,
            requirements,
            goal: t.goal,
        });
    }

    Ok(Scenario {
        map,
        agents,
        tasks,
        config: doc.config,
        assignment: doc.assignment,
    })
}

/// Reads and parses a scenario file from disk.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_at(&text, path.parent())
}

fn check_quantity(owner: &str, dimension: &str, q: &Quantity, units: &UnitTable) -> Result<(), ScenarioError> {
    if !units.contains(&q.unit) {
        return Err(ScenarioError::UnknownUnit {
            owner: owner.to_string(),
            unit: q.unit.to_string(),
        });
    }
    if !(q.value.is_finite() && q.value >= 0.0) {
        return Err(ScenarioError::InvalidValue {
            owner: owner.to_string(),
            dimension: dimension.to_string(),
            detail: format!("quantity must be finite and non-negative, got {}", q.value),
        });
    }
    Ok(())
}

fn check_capability(
    agent: &str,
    dimension: &str,
    value: &CapabilityValue,
    units: &UnitTable,
) -> Result<(), ScenarioError> {
    match value {
        CapabilityValue::Quantity(q) => check_quantity(agent, dimension, q, units),
        _ => Ok(()),
    }
}

fn requirement_from_doc(task: &str, doc: RequirementDoc, units: &UnitTable) -> Result<Requirement, ScenarioError> {
    let invalid = |detail: String| ScenarioError::InvalidValue {
        owner: task.to_string(),
        dimension: doc.dimension.clone(),
        detail,
    };
    let kind = match doc.kind.as_str() {
        "numeric-min" => {
            let q: Quantity = serde_json::from_value(doc.value.clone()).map_err(|e| invalid(e.to_string()))?;
            check_quantity(task, &doc.dimension, &q, units)?;
            RequirementKind::NumericMin(q)
        }
        "ordered-min" => {
            let label = doc
                .value
                .as_str()
                .ok_or_else(|| invalid("expected a terrain label string".into()))?;
            let level = label.parse::<TerrainLevel>().map_err(|_| ScenarioError::UnknownTerrain {
                owner: task.to_string(),
                label: label.to_string(),
            })?;
            RequirementKind::OrderedMin(level)
        }
        "tool-required" => {
            let tool = doc
                .value
                .as_str()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| invalid("expected a non-empty tool name".into()))?;
            RequirementKind::ToolRequired(tool.to_string())
        }
        "free-text" => {
            let text = doc
                .value
                .as_str()
                .filter(|s| !s.trim().is_empty())
                .ok_or_else(|| invalid("free-text requirement must be a non-empty string".into()))?;
            RequirementKind::FreeText(text.to_string())
        }
        other => {
            return Err(ScenarioError::UnknownKind {
                task: task.to_string(),
                kind: other.to_string(),
            })
        }
    };
    Ok(Requirement {
        dimension: doc.dimension,
        kind,
    })
}

fn requirement_to_doc(r: &Requirement) -> RequirementDoc {
    let value = match &r.kind {
        RequirementKind::NumericMin(q) => serde_json::to_value(q).expect("quantity serializes"),
        RequirementKind::OrderedMin(t) => Value::String(t.label().to_string()),
        RequirementKind::ToolRequired(s) | RequirementKind::FreeText(s) => Value::String(s.clone()),
    };
    RequirementDoc {
        dimension: r.dimension.clone(),
        kind: r.kind.kind_name().to_string(),
        value,
    }
}

/// Serializes a scenario to the JSON file format, with the map inlined.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let doc = ScenarioDoc {
        map: MapDoc::Inline(scenario.map.to_text()),
        agents: scenario
            .agents
            .iter()
            .map(|a| AgentDoc {
                id: a.agent_id.clone(),
                start: a.start,
                capabilities: a.entries.clone(),
            })
            .collect(),
        tasks: scenario
            .tasks
            .iter()
            .map(|t| TaskDoc {
                id: t.task_id.clone(),
                goal: t.goal,
                requirements: t.requirements.iter().map(requirement_to_doc).collect(),
            })
            .collect(),
        config: scenario.config.clone(),
        assignment: scenario.assignment.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("scenario serializes")
}
