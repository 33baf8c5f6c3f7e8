use super::distractors::place_distractors;
use super::edit::{augment_background, augment_cross_category, augment_in_category, EDIT_DILATION};
use super::language::rewrite_language;
use super::plan::{AugmentationPlan, Component};
use super::prompt::{bare_noun, PromptGrammar};
use super::AugmentError;
use crate::backends::Backend;
use crate::data::{Episode, Mask, MeshCatalog, Role};
use crate::geometry::Workspace;

/// Everything an augmentation needs besides the episode and its plan.
#[derive(Clone, Copy, Debug)]
pub struct StructuredContext<'a> {
    pub catalog: &'a MeshCatalog,
    pub workspace: &'a Workspace,
    pub grammar: &'a PromptGrammar,
    pub backend: &'a Backend,
}

#[derive(Clone, Debug)]
pub struct StructuredOutput {
    pub episode: Episode,
    pub warnings: Vec<String>,
    /// Asset names of the distractors that found a collision-free spot.
    pub distractors: Vec<String>,
    /// Union of the regions each editor was allowed to touch on the primary view.
    pub edit_region: Mask,
}

/// Swaps the noun of `label` for `noun`, keeping a leading article ("a box" + plate → "a plate").
fn relabel(label: &str, noun: &str) -> String {
    let noun = bare_noun(noun);
    let t = label.trim();
    let article = t.len() - bare_noun(t).len();
    let head = t[..article].trim_end();
    match head.to_ascii_lowercase().as_str() {
        "" => noun.to_string(),
        "a" | "an" => {
            let vowel = noun.chars().next().is_some_and(|c| "aeiouAEIOU".contains(c));
            let a = if vowel { "an" } else { "a" };
            let a = if head.starts_with('A') { if vowel { "An" } else { "A" } } else { a };
            format!("{a} {noun}")
        }
        _ => format!("{head} {noun}"),
    }
}

/// Runs every editor selected by `plan` on frame 0 of `episode`.
///
/// Order: receptacle shape, object shape, distractors, object texture, receptacle texture,
/// background. Each editor is fenced off from the masks of the others, so later edits never
/// paint over earlier ones. Frames after the first are copied unchanged.
pub fn apply_plan(
    episode: &Episode,
    plan: &AugmentationPlan,
    ctx: &StructuredContext<'_>,
) -> Result<StructuredOutput, AugmentError> {
    let missing = || AugmentError::MissingAnnotations(episode.id.clone());
    let mut obj = episode.object_mask.clone().ok_or_else(missing)?;
    let mut rec = episode.receptacle_mask.clone().ok_or_else(missing)?;
    let camera = &episode.primary_camera().model;
    let mut frame = episode.frames.first().ok_or_else(missing)?.clone();
    let (w, h) = frame.rgb().dims();
    let mut edit_region = Mask::empty(w, h);
    let mut warnings = Vec::new();
    let mut out = episode.clone();

    let asset = |name: &Option<String>| {
        let name = name.as_deref().ok_or_else(|| AugmentError::Config("shape component without a replacement mesh".into()))?;
        ctx.catalog.get(name).ok_or_else(|| AugmentError::MissingAsset(name.to_string()))
    };

    if plan.has(Component::ReceptacleShape) {
        let a = asset(&plan.replacement_receptacle)?;
        let r = augment_cross_category(
            &frame,
            &rec,
            &obj,
            a,
            &plan.receptacle_prompt,
            plan.seed(Component::ReceptacleShape.name()),
            camera,
            ctx.backend,
        )?;
        edit_region = edit_region.union(&rec.union(&r.mask).dilate(EDIT_DILATION).difference(&obj));
        frame = r.frame;
        rec = r.mask;
        let label = relabel(&out.receptacle_label, &a.prompt_noun);
        let rw = rewrite_language(&out.task_text, &out.receptacle_label, &label);
        warnings.extend(rw.warning);
        out.task_text = rw.text;
        out.receptacle_label = label;
    }
    if plan.has(Component::ObjectShape) {
        let a = asset(&plan.replacement_object)?;
        let none = Mask::empty(w, h);
        let r = augment_cross_category(
            &frame,
            &obj,
            &none,
            a,
            &plan.object_prompt,
            plan.seed(Component::ObjectShape.name()),
            camera,
            ctx.backend,
        )?;
        edit_region = edit_region.union(&obj.union(&r.mask).dilate(EDIT_DILATION));
        frame = r.frame;
        obj = r.mask;
        // The new object may stand in front of part of the receptacle.
        rec = rec.difference(&obj);
        let label = relabel(&out.object_label, &a.prompt_noun);
        let rw = rewrite_language(&out.task_text, &out.object_label, &label);
        warnings.extend(rw.warning);
        out.task_text = rw.text;
        out.object_label = label;
    }
    let mut distractor_union = Mask::empty(w, h);
    let mut distractors = Vec::new();
    if plan.has(Component::Distractors) {
        let pool = ctx.catalog.with_role(Role::Distractor);
        let (f, placed) = place_distractors(
            &frame,
            &[&obj, &rec],
            &pool,
            plan.distractor_count,
            plan.seed(Component::Distractors.name()),
            camera,
            ctx.workspace,
            ctx.grammar,
            ctx.backend,
        )?;
        if (placed.len() as u32) < plan.distractor_count {
            warnings.push(format!("placed {} of {} distractors", placed.len(), plan.distractor_count));
        }
        for p in &placed {
            distractor_union = distractor_union.union(&p.mask);
            edit_region = edit_region.union(&p.mask.dilate(EDIT_DILATION));
            distractors.push(p.asset.clone());
        }
        frame = f;
    }
    if plan.has(Component::ObjectTexture) {
        let keep = rec.union(&distractor_union);
        frame = augment_in_category(&frame, &obj, &keep, &plan.object_prompt, plan.seed(Component::ObjectTexture.name()), ctx.backend)?;
        edit_region = edit_region.union(&obj.dilate(EDIT_DILATION).difference(&keep));
    }
    if plan.has(Component::ReceptacleTexture) {
        let keep = obj.union(&distractor_union);
        frame = augment_in_category(
            &frame,
            &rec,
            &keep,
            &plan.receptacle_prompt,
            plan.seed(Component::ReceptacleTexture.name()),
            ctx.backend,
        )?;
        edit_region = edit_region.union(&rec.dilate(EDIT_DILATION).difference(&keep));
    }
    if plan.has(Component::TableBackground) {
        let protected = [&obj, &rec, &distractor_union];
        frame = augment_background(
            &frame,
            &protected,
            &plan.background_prompt,
            plan.seed(Component::TableBackground.name()),
            ctx.backend,
        )?;
        edit_region = edit_region.union(&obj.union(&rec).union(&distractor_union).complement());
    }

    out.frames[0] = frame;
    out.object_mask = Some(obj);
    out.receptacle_mask = Some(rec);
    Ok(StructuredOutput { episode: out, warnings, distractors, edit_region })
}

#[cfg(test)]
mod tests {
    use super::relabel;

    #[test]
    fn relabel_keeps_articles() {
        assert_eq!(relabel("a box", "plate"), "a plate");
        assert_eq!(relabel("a box", "apple"), "an apple");
        assert_eq!(relabel("the apple", "a pear"), "the pear");
        assert_eq!(relabel("bowl", "cup"), "cup");
    }
}
