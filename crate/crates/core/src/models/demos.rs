//! Recipes shipped with the library.

use super::ModelRecipe;
use crate::error::{Error, Result};
use crate::model::Model;

pub const DEMO_NAMES: [&str; 5] = [
    "demo_eq3",
    "demo_eq5",
    "demo_eq5_malus",
    "demo_timetag",
    "saturating_mixture",
];

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "demo_eq3" => include_str!("../../recipes/demo_eq3.json"),
        "demo_eq5" => include_str!("../../recipes/demo_eq5.json"),
        "demo_eq5_malus" => include_str!("../../recipes/demo_eq5_malus.json"),
        "demo_timetag" => include_str!("../../recipes/demo_timetag.json"),
        "saturating_mixture" => include_str!("../../recipes/saturating_mixture.json"),
        _ => return None,
    })
}

pub fn demo_recipe(name: &str) -> Result<ModelRecipe> {
    let text = source(name).ok_or_else(|| {
        Error::invalid(
            "model",
            format!("unknown demo `{name}`; known: {}", DEMO_NAMES.join(", ")),
        )
    })?;
    ModelRecipe::from_json_str(text)
}

pub fn demo_model(name: &str) -> Result<Model> {
    demo_recipe(name)?.build()
}
