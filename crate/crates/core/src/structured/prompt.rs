use serde::{Deserialize, Serialize};

use super::AugmentError;
use crate::sub_seed;

/// Text prompt template with color and material vocabularies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptGrammar {
    pub colors: Vec<String>,
    pub materials: Vec<String>,
    pub template: String,
}

impl Default for PromptGrammar {
    fn default() -> Self {
        Self {
            colors: ["red", "orange", "yellow"].map(String::from).to_vec(),
            materials: ["glass", "marble", "wood"].map(String::from).to_vec(),
            template: "a {color} {material} {noun}".into(),
        }
    }
}

impl PromptGrammar {
    pub fn check(&self) -> Result<(), AugmentError> {
        if self.colors.is_empty() || self.materials.is_empty() {
            return Err(AugmentError::Config("prompt grammar needs at least one color and one material".into()));
        }
        if !self.template.contains("{noun}") {
            return Err(AugmentError::Config("prompt template lacks the {noun} slot".into()));
        }
        Ok(())
    }
}

/// Seeded index into a list of `len` entries.
pub(crate) fn seeded_index(seed: u64, len: usize) -> usize {
    (seed % len as u64) as usize
}

/// Fills the template with one seeded color and one seeded material.
pub fn sample_prompt(grammar: &PromptGrammar, noun: &str, seed: u64) -> String {
    let color = &grammar.colors[seeded_index(sub_seed(seed, "color"), grammar.colors.len())];
    let material = &grammar.materials[seeded_index(sub_seed(seed, "material"), grammar.materials.len())];
    grammar
        .template
        .replace("{color}", color)
        .replace("{material}", material)
        .replace("{noun}", noun)
}

/// Drops a leading article from a label: "a box" → "box".
pub fn bare_noun(label: &str) -> &str {
    let t = label.trim();
    for article in ["a ", "an ", "the ", "A ", "An ", "The "] {
        if let Some(rest) = t.strip_prefix(article) {
            return rest.trim_start();
        }
    }
    t
}
