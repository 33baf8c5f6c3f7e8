use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::prompt::{bare_noun, sample_prompt, seeded_index, PromptGrammar};
use super::AugmentError;
use crate::data::{Episode, MeshCatalog, Role};
use crate::pipeline::derive_seed;
use crate::{mix64, unit_f64};

/// Resampling budget when no component gets selected.
pub const MAX_PLAN_ATTEMPTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    TableBackground,
    ObjectTexture,
    ObjectShape,
    Distractors,
    ReceptacleTexture,
    ReceptacleShape,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::TableBackground,
        Component::ObjectTexture,
        Component::ObjectShape,
        Component::Distractors,
        Component::ReceptacleTexture,
        Component::ReceptacleShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::TableBackground => "table_background",
            Component::ObjectTexture => "object_texture",
            Component::ObjectShape => "object_shape",
            Component::Distractors => "distractors",
            Component::ReceptacleTexture => "receptacle_texture",
            Component::ReceptacleShape => "receptacle_shape",
        }
    }

    /// Components that change scene geometry (and therefore depth).
    pub fn changes_geometry(self) -> bool {
        matches!(self, Component::ObjectShape | Component::ReceptacleShape | Component::Distractors)
    }
}

/// Independent inclusion probability per component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentProbabilities {
    pub p_table: f64,
    pub p_object_texture: f64,
    pub p_object_shape: f64,
    pub p_receptacle_texture: f64,
    pub p_receptacle_shape: f64,
    pub p_distractors: f64,
}

impl Default for ComponentProbabilities {
    fn default() -> Self {
        Self::uniform(0.5)
    }
}

impl ComponentProbabilities {
    pub fn uniform(p: f64) -> Self {
        Self {
            p_table: p,
            p_object_texture: p,
            p_object_shape: p,
            p_receptacle_texture: p,
            p_receptacle_shape: p,
            p_distractors: p,
        }
    }

    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::TableBackground => self.p_table,
            Component::ObjectTexture => self.p_object_texture,
            Component::ObjectShape => self.p_object_shape,
            Component::Distractors => self.p_distractors,
            Component::ReceptacleTexture => self.p_receptacle_texture,
            Component::ReceptacleShape => self.p_receptacle_shape,
        }
    }

    pub fn check(&self) -> Result<(), AugmentError> {
        for c in Component::ALL {
            let p = self.get(c);
            if !(0.0..=1.0).contains(&p) {
                return Err(AugmentError::Config(format!("probability for {} is {p}, not in [0, 1]", c.name())));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSettings {
    pub probabilities: ComponentProbabilities,
    pub max_distractors: u32,
    pub grammar: PromptGrammar,
    /// Noun used for background prompts.
    pub background_noun: String,
}

impl Default for PlanSettings {
    fn default() -> Self {
        Self {
            probabilities: ComponentProbabilities::default(),
            max_distractors: 3,
            grammar: PromptGrammar::default(),
            background_noun: "table".into(),
        }
    }
}

/// Which components change for one augmented item, with all prompts and seeds fixed up front.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationPlan {
    pub components: BTreeSet<Component>,
    pub object_prompt: String,
    pub receptacle_prompt: String,
    pub background_prompt: String,
    pub replacement_object: Option<String>,
    pub replacement_receptacle: Option<String>,
    pub distractor_count: u32,
    pub seeds: BTreeMap<String, u64>,
}

impl AugmentationPlan {
    pub fn has(&self, c: Component) -> bool {
        self.components.contains(&c)
    }

    pub fn seed(&self, tag: &str) -> u64 {
        self.seeds.get(tag).copied().unwrap_or_else(|| panic!("plan carries no seed {tag:?}"))
    }

    /// True when no selected component changes geometry.
    pub fn texture_only(&self) -> bool {
        !self.components.iter().any(|c| c.changes_geometry())
    }
}

/// Samples the components, replacement meshes, prompts and seeds of augmentation `aug_index`.
///
/// Components whose asset pool in `catalog` is empty are never selected.
pub fn plan_augmentation(
    settings: &PlanSettings,
    catalog: &MeshCatalog,
    episode: &Episode,
    aug_index: u64,
    global_seed: u64,
) -> Result<AugmentationPlan, AugmentError> {
    settings.probabilities.check()?;
    settings.grammar.check()?;
    if episode.object_mask.is_none()
        || episode.receptacle_mask.is_none()
        || episode.object_label.trim().is_empty()
        || episode.receptacle_label.trim().is_empty()
    {
        return Err(AugmentError::MissingAnnotations(episode.id.clone()));
    }
    let seed = |tag: &str| derive_seed(global_seed, &episode.id, aug_index, 0, tag);
    let objects = catalog.with_role(Role::Object);
    let receptacles = catalog.with_role(Role::Receptacle);
    let distractors = catalog.with_role(Role::Distractor);
    let available = |c: Component| match c {
        Component::ObjectShape => !objects.is_empty(),
        Component::ReceptacleShape => !receptacles.is_empty(),
        Component::Distractors => !distractors.is_empty() && settings.max_distractors > 0,
        _ => true,
    };

    let mut components = BTreeSet::new();
    for attempt in 0..MAX_PLAN_ATTEMPTS {
        components = Component::ALL
            .into_iter()
            .filter(|&c| available(c))
            .filter(|&c| {
                let u = unit_f64(mix64(seed(&format!("plan/{attempt}/{}", c.name()))));
                u < settings.probabilities.get(c)
            })
            .collect();
        if !components.is_empty() {
            break;
        }
    }
    if components.is_empty() {
        return Err(AugmentError::EmptyPlan(MAX_PLAN_ATTEMPTS));
    }

    let mut seeds = BTreeMap::new();
    for tag in Component::ALL.iter().map(|c| c.name()).chain([
        "object_prompt",
        "receptacle_prompt",
        "background_prompt",
        "object_asset",
        "receptacle_asset",
        "distractor_count",
    ]) {
        seeds.insert(tag.to_string(), seed(tag));
    }

    let pick = |pool: &[&crate::data::MeshAsset], tag: &str| {
        pool[seeded_index(mix64(seeds[tag]), pool.len())].clone()
    };
    let replacement_object = components.contains(&Component::ObjectShape).then(|| pick(&objects, "object_asset"));
    let replacement_receptacle =
        components.contains(&Component::ReceptacleShape).then(|| pick(&receptacles, "receptacle_asset"));

    let object_noun = replacement_object.as_ref().map_or(bare_noun(&episode.object_label), |a| bare_noun(&a.prompt_noun));
    let receptacle_noun = replacement_receptacle
        .as_ref()
        .map_or(bare_noun(&episode.receptacle_label), |a| bare_noun(&a.prompt_noun));
    let distractor_count = if components.contains(&Component::Distractors) {
        1 + (mix64(seeds["distractor_count"]) % settings.max_distractors as u64) as u32
    } else {
        0
    };

    Ok(AugmentationPlan {
        object_prompt: sample_prompt(&settings.grammar, object_noun, seeds["object_prompt"]),
        receptacle_prompt: sample_prompt(&settings.grammar, receptacle_noun, seeds["receptacle_prompt"]),
        background_prompt: sample_prompt(&settings.grammar, &settings.background_noun, seeds["background_prompt"]),
        replacement_object: replacement_object.map(|a| a.name),
        replacement_receptacle: replacement_receptacle.map(|a| a.name),
        distractor_count,
        components,
        seeds,
    })
}
