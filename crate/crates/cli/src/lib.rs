//! Scenario runner: loads a TOML scenario, runs the requested stages and
//! writes a JSON report plus CSV series.

pub mod pipeline;
pub mod report;
pub mod scenario;
