use std::path::Path;

use super::io::write_atomic;
use crate::error::Result;
use crate::search::SelectionPlan;

pub fn encode_plan(plan: &SelectionPlan) -> Result<String> {
    let mut s = serde_json::to_string_pretty(plan)?;
    s.push('\n');
    Ok(s)
}

/// Parses and validates a plan, against `grid` when given.
pub fn decode_plan(text: &str, grid: Option<&[i16]>) -> Result<SelectionPlan> {
    let plan: SelectionPlan = serde_json::from_str(text)?;
    plan.validate(grid)?;
    Ok(plan)
}

pub fn save_plan(path: &Path, plan: &SelectionPlan) -> Result<()> {
    plan.validate(None)?;
    write_atomic(path, encode_plan(plan)?.as_bytes())
}

pub fn load_plan(path: &Path, grid: Option<&[i16]>) -> Result<SelectionPlan> {
    decode_plan(&std::fs::read_to_string(path)?, grid)
}
