use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{CapabilityValue, RequirementKind, Scenario};

/// The invariant a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    DuplicateAgentId,
    DuplicateTaskId,
    DuplicateDimension,
    StartOutOfBounds,
    StartBlocked,
    StartCollision,
    GoalOutOfBounds,
    GoalBlocked,
    GoalCollision,
    UnknownUnit,
    InvalidQuantity,
    EmptyFreeText,
    KindMismatch,
    UnitMismatch,
    UnknownAssignmentTask,
    UnknownAssignmentAgent,
    AssignmentNotInjective,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::DuplicateAgentId => "duplicate-agent-id",
            Rule::DuplicateTaskId => "duplicate-task-id",
            Rule::DuplicateDimension => "duplicate-dimension",
            Rule::StartOutOfBounds => "start-out-of-bounds",
            Rule::StartBlocked => "start-blocked",
            Rule::StartCollision => "start-collision",
            Rule::GoalOutOfBounds => "goal-out-of-bounds",
            Rule::GoalBlocked => "goal-blocked",
            Rule::GoalCollision => "goal-collision",
            Rule::UnknownUnit => "unknown-unit",
            Rule::InvalidQuantity => "invalid-quantity",
            Rule::EmptyFreeText => "empty-free-text",
            Rule::KindMismatch => "kind-mismatch",
            Rule::UnitMismatch => "unit-mismatch",
            Rule::UnknownAssignmentTask => "unknown-assignment-task",
            Rule::UnknownAssignmentAgent => "unknown-assignment-agent",
            Rule::AssignmentNotInjective => "assignment-not-injective",
        }
    }
}

/// A broken invariant, attributed to a single agent or task id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.entity, self.rule.name(), self.detail)
    }
}

/// Checks every scenario invariant. An empty result means the pipeline will accept the scenario.
pub fn validate_scenario(scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entity: &str, rule: Rule, detail: String| {
        out.push(Violation {
            entity: entity.to_string(),
            rule,
            detail,
        })
    };
    let map = &scenario.map;
    let units = scenario.unit_table();

    let mut agent_ids = HashSet::new();
    let mut starts: HashMap<_, &str> = HashMap::new();
    for a in &scenario.agents {
        let id = a.agent_id.as_str();
        if !agent_ids.insert(id) {
            push(id, Rule::DuplicateAgentId, "agent id appears more than once".into());
        }
        if !map.in_bounds(a.start) {
            push(id, Rule::StartOutOfBounds, format!("start {} outside map", a.start));
        } else if map.is_blocked(a.start) {
            push(id, Rule::StartBlocked, format!("start {} is an obstacle", a.start));
        }
        if let Some(other) = starts.insert(a.start, id) {
            push(id, Rule::StartCollision, format!("start {} shared with agent {other}", a.start));
            starts.insert(a.start, other);
        }
        for (dim, value) in &a.entries {
            if let CapabilityValue::Quantity(q) = value {
                if !units.contains(&q.unit) {
                    push(id, Rule::UnknownUnit, format!("{dim}: unit {}", q.unit));
                }
                if !(q.value.is_finite() && q.value >= 0.0) {
                    push(id, Rule::InvalidQuantity, format!("{dim}: value {}", q.value));
                }
            }
        }
    }

    let mut task_ids = HashSet::new();
    let mut goals: HashMap<_, &str> = HashMap::new();
    for t in &scenario.tasks {
        let id = t.task_id.as_str();
        if !task_ids.insert(id) {
            push(id, Rule::DuplicateTaskId, "task id appears more than once".into());
        }
        if !map.in_bounds(t.goal) {
            push(id, Rule::GoalOutOfBounds, format!("goal {} outside map", t.goal));
        } else if map.is_blocked(t.goal) {
            push(id, Rule::GoalBlocked, format!("goal {} is an obstacle", t.goal));
        }
        if let Some(other) = goals.insert(t.goal, id) {
            push(id, Rule::GoalCollision, format!("goal {} shared with task {other}", t.goal));
            goals.insert(t.goal, other);
        }
        let mut dims = HashSet::new();
        for r in &t.requirements {
            if !dims.insert(r.dimension.as_str()) {
                push(id, Rule::DuplicateDimension, r.dimension.clone());
            }
            match &r.kind {
                RequirementKind::NumericMin(q) => {
                    if !units.contains(&q.unit) {
                        push(id, Rule::UnknownUnit, format!("{}: unit {}", r.dimension, q.unit));
                    }
                    if !(q.value.is_finite() && q.value >= 0.0) {
                        push(id, Rule::InvalidQuantity, format!("{}: value {}", r.dimension, q.value));
                    }
                }
                RequirementKind::FreeText(text) if text.trim().is_empty() => {
                    push(id, Rule::EmptyFreeText, r.dimension.clone());
                }
                _ => {}
            }
        }
    }

    // Requirement/capability compatibility is reported against the agent.
    for a in &scenario.agents {
        for t in &scenario.tasks {
            for r in &t.requirements {
                let Some(cap) = a.get(&r.dimension) else { continue };
                match (&r.kind, cap) {
                    (RequirementKind::NumericMin(req), CapabilityValue::Quantity(have)) => {
                        if req.unit != have.unit {
                            push(
                                &a.agent_id,
                                Rule::UnitMismatch,
                                format!("{}: task {} wants {}, agent has {}", r.dimension, t.task_id, req.unit, have.unit),
                            );
                        }
                    }
                    (RequirementKind::OrderedMin(_), CapabilityValue::Terrain(_))
                    | (RequirementKind::ToolRequired(_), CapabilityValue::Tools(_))
                    | (RequirementKind::FreeText(_), _) => {}
                    (kind, _) => push(
                        &a.agent_id,
                        Rule::KindMismatch,
                        format!("{}: task {} has a {} requirement", r.dimension, t.task_id, kind.kind_name()),
                    ),
                }
            }
        }
    }

    if let Some(assignment) = &scenario.assignment {
        let mut used = HashMap::new();
        for (task, agent) in assignment {
            if scenario.task(task).is_none() {
                push(task, Rule::UnknownAssignmentTask, format!("assigned to {agent}"));
            }
            if scenario.agent(agent).is_none() {
                push(agent, Rule::UnknownAssignmentAgent, format!("assigned task {task}"));
            }
            if let Some(prev) = used.insert(agent.as_str(), task.as_str()) {
                push(agent, Rule::AssignmentNotInjective, format!("holds both {prev} and {task}"));
            }
        }
    }

    out
}
