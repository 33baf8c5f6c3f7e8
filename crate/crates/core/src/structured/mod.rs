//! RGBD scene editing on the annotated observation frame.
//!
//! A plan ([`AugmentationPlan`]) lists which scene components change. [`apply_plan`] runs the
//! component editors on frame 0 of an episode: object and receptacle shape replacement with
//! depth compositing, distractor placement, texture edits, background replacement, and the
//! matching rewrite of the task text. Actions, joints and gripper values are copied unchanged.

mod apply;
mod baseline;
mod distractors;
mod edit;
mod language;
mod plan;
mod prompt;

use thiserror::Error;

pub use apply::{apply_plan, StructuredContext, StructuredOutput};
pub use baseline::{baseline_augment, load_patch_library, BaselineMasks, BaselineMode, BaselineOptions, Patch};
pub use distractors::{place_distractors, PlacedDistractor, DISTRACTOR_RETRIES};
pub use edit::{
    augment_background, augment_cross_category, augment_in_category, backfill_depth, place_replacement,
    CrossCategoryOutput, Placement, EDIT_DILATION,
};
pub use language::{rewrite_language, Rewrite};
pub use plan::{plan_augmentation, AugmentationPlan, Component, ComponentProbabilities, PlanSettings, MAX_PLAN_ATTEMPTS};
pub use prompt::{bare_noun, sample_prompt, PromptGrammar};

use crate::backends::BackendError;
use crate::data::DataError;
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("frame {frame}: backend failure: {source}")]
    Backend {
        frame: usize,
        #[source]
        source: BackendError,
    },
    #[error("episode {0} lacks object/receptacle masks or labels")]
    MissingAnnotations(String),
    #[error("frame {0} has no depth map")]
    MissingDepth(usize),
    #[error("{0} mask is empty")]
    EmptyMask(&'static str),
    #[error("replacement mesh {0} projects off-screen")]
    OffScreen(String),
    #[error("cannot backfill depth: {0}")]
    BackfillImpossible(String),
    #[error("empty plan unreachable: no component selected after {0} attempts")]
    EmptyPlan(usize),
    #[error("mesh asset {0:?} not found")]
    MissingAsset(String),
    #[error("patch library is empty")]
    EmptyLibrary,
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Data(#[from] DataError),
}
