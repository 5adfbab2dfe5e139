//! Capability-aware multi-agent task allocation.
//!
//! Agents carry capability profiles and tasks carry requirement lists. The
//! [`suitability`] module turns them into a score matrix (asking the
//! [`adjudicator`] about requirements that rules cannot compare), [`voting`]
//! runs a committee of six voting methods over the matrix to produce a
//! conflict-free assignment, and [`mapf`] plans collision-free paths to the
//! assigned task sites with Conflict-Based Search. [`pipeline`] ties the stages
//! together and produces reports.

pub mod adjudicator;
pub mod domain;
pub mod mapf;
pub mod pipeline;
pub mod suitability;
pub mod voting;
