//! Randomized drivers shared by the property tests and the acceptance target. Each returns the
//! number of violations it found together with how many cases it checked.

use augforge_core::backends::Backend;
use augforge_core::data::{Episode, Mask, MeshCatalog, Role};
use augforge_core::geometry::{bboxes_overlap, render_mesh_depth, CameraModel, Rect, Workspace};
use augforge_core::structured::{
    apply_plan, augment_background, augment_cross_category, place_distractors, plan_augmentation, rewrite_language,
    AugmentationPlan, ComponentProbabilities, PlanSettings, PromptGrammar, StructuredContext,
    StructuredOutput,
};
use augforge_core::synthetic::{mesh_catalog, tabletop_episode, toy_workspace};

use super::Rng;

pub struct Outcome {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checked: 0, violations: Vec::new() }
    }

    fn fail(&mut self, msg: String) {
        if self.violations.len() < 20 {
            eprintln!("violation: {msg}");
        }
        self.violations.push(msg);
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.checked > 0
    }
}

pub struct Bench {
    pub catalog: MeshCatalog,
    pub episodes: Vec<Episode>,
    pub backend: Backend,
    pub workspace: Workspace,
    pub grammar: PromptGrammar,
}

impl Bench {
    pub fn new(episodes: usize, frames: usize, size: u32, seed: u64) -> Self {
        Bench {
            catalog: mesh_catalog(seed),
            episodes: (0..episodes)
                .map(|i| tabletop_episode(&format!("ep{i:03}"), frames, size, size, seed.wrapping_add(i as u64 * 7919)))
                .collect(),
            backend: Backend::mock(),
            workspace: toy_workspace(),
            grammar: PromptGrammar::default(),
        }
    }

    pub fn ctx(&self) -> StructuredContext<'_> {
        StructuredContext { catalog: &self.catalog, workspace: &self.workspace, grammar: &self.grammar, backend: &self.backend }
    }

    /// Plans and applies augmentation `k` of episode `e` under `probabilities`.
    pub fn run(
        &self,
        e: usize,
        k: u64,
        probabilities: ComponentProbabilities,
        seed: u64,
    ) -> Result<(AugmentationPlan, StructuredOutput), String> {
        let settings = PlanSettings { probabilities, ..PlanSettings::default() };
        let ep = &self.episodes[e];
        let plan = plan_augmentation(&settings, &self.catalog, ep, k, seed).map_err(|e| e.to_string())?;
        let out = apply_plan(ep, &plan, &self.ctx()).map_err(|e| format!("{}: {e}", ep.id))?;
        Ok((plan, out))
    }
}

fn random_probabilities(rng: &mut Rng) -> ComponentProbabilities {
    ComponentProbabilities {
        p_table: rng.f64(),
        p_object_texture: rng.f64(),
        p_object_shape: rng.f64(),
        p_receptacle_texture: rng.f64(),
        p_receptacle_shape: rng.f64(),
        p_distractors: rng.f64(),
    }
}

fn texture_only(rng: &mut Rng) -> ComponentProbabilities {
    ComponentProbabilities { p_object_shape: 0.0, p_receptacle_shape: 0.0, p_distractors: 0.0, ..random_probabilities(rng) }
}

/// Actions, joints and gripper values of every frame stay bit-identical under random plans.
pub fn payload_invariance(bench: &Bench, trials: usize, seed: u64) -> Outcome {
    let mut rng = Rng(seed);
    let mut out = Outcome::new();
    for t in 0..trials {
        let e = t % bench.episodes.len();
        let src = &bench.episodes[e];
        match bench.run(e, t as u64, random_probabilities(&mut rng), seed) {
            Err(err) => out.fail(format!("trial {t}: {err}")),
            Ok((_, o)) => {
                let aug = &o.episode;
                if aug.frames.len() != src.frames.len() {
                    out.fail(format!("trial {t}: frame count {} vs {}", aug.frames.len(), src.frames.len()));
                }
                for (i, (a, b)) in aug.frames.iter().zip(&src.frames).enumerate() {
                    if !a.same_payload(b) {
                        out.fail(format!("trial {t}: payload of frame {i} changed"));
                    }
                    if i > 0 && a != b {
                        out.fail(format!("trial {t}: frame {i} changed"));
                    }
                }
                if aug.cameras != src.cameras || aug.chain_ref != src.chain_ref {
                    out.fail(format!("trial {t}: cameras or chain changed"));
                }
            }
        }
        out.checked += 1;
    }
    out
}

/// Plans without shape or distractor components leave every depth map bit-identical.
pub fn texture_depth_preservation(bench: &Bench, trials: usize, seed: u64) -> Outcome {
    let mut rng = Rng(seed);
    let mut out = Outcome::new();
    for t in 0..trials {
        let e = t % bench.episodes.len();
        match bench.run(e, t as u64, texture_only(&mut rng), seed) {
            Err(err) => out.fail(format!("trial {t}: {err}")),
            Ok((plan, o)) => {
                if !plan.texture_only() {
                    out.fail(format!("trial {t}: plan selected a geometric component"));
                }
                for (i, (a, b)) in o.episode.frames.iter().zip(&bench.episodes[e].frames).enumerate() {
                    let same = match (a.depth(), b.depth()) {
                        (Some(x), Some(y)) => x.bit_eq(y),
                        (None, None) => true,
                        _ => false,
                    };
                    if !same {
                        out.fail(format!("trial {t}: depth of frame {i} changed"));
                    }
                }
            }
        }
        out.checked += 1;
    }
    out
}

/// No RGB or depth pixel changes outside the reported edit region.
pub fn edits_stay_in_region(bench: &Bench, trials: usize, seed: u64) -> Outcome {
    let mut rng = Rng(seed);
    let mut out = Outcome::new();
    for t in 0..trials {
        let e = t % bench.episodes.len();
        let src = &bench.episodes[e].frames[0];
        match bench.run(e, t as u64, random_probabilities(&mut rng), seed) {
            Err(err) => out.fail(format!("trial {t}: {err}")),
            Ok((_, o)) => {
                let aug = &o.episode.frames[0];
                let (w, h) = src.rgb().dims();
                let mut stray = 0;
                for y in 0..h {
                    for x in 0..w {
                        if o.edit_region.get(x, y) {
                            continue;
                        }
                        let depth_moved = match (aug.depth(), src.depth()) {
                            (Some(a), Some(b)) => a.get(x, y).to_bits() != b.get(x, y).to_bits(),
                            _ => false,
                        };
                        if aug.rgb().pixel(x, y) != src.rgb().pixel(x, y) || depth_moved {
                            stray += 1;
                        }
                    }
                }
                if stray > 0 {
                    out.fail(format!("trial {t}: {stray} pixels changed outside the edit region"));
                }
            }
        }
        out.checked += 1;
    }
    out
}

/// Cross-category swaps: depth inside the new visible footprint equals the rasterized mesh,
/// depth away from both footprints is untouched, and the new width is within 25% of the old.
pub fn cross_category_consistency(bench: &Bench, trials: usize, seed: u64) -> Outcome {
    let mut rng = Rng(seed);
    let mut out = Outcome::new();
    let objects = bench.catalog.with_role(Role::Object);
    let receptacles = bench.catalog.with_role(Role::Receptacle);
    for t in 0..trials {
        let ep = &bench.episodes[t % bench.episodes.len()];
        let frame = &ep.frames[0];
        let camera = &ep.primary_camera().model;
        let obj = ep.object_mask.as_ref().unwrap();
        let rec = ep.receptacle_mask.as_ref().unwrap();
        let (w, h) = obj.dims();
        let (old, occluders, asset) = if t % 2 == 0 {
            (obj, Mask::empty(w, h), objects[(rng.next_u64() % objects.len() as u64) as usize])
        } else {
            (rec, obj.clone(), receptacles[(rng.next_u64() % receptacles.len() as u64) as usize])
        };
        let r = match augment_cross_category(frame, old, &occluders, asset, "a red thing", rng.next_u64(), camera, &bench.backend) {
            Ok(r) => r,
            Err(err) => {
                out.fail(format!("trial {t}: {err}"));
                continue;
            }
        };
        out.checked += 1;
        let (rendered, _) = render_mesh_depth(&r.placement.mesh, &r.placement.pose, camera, w, h);
        let depth = r.frame.depth().unwrap();
        let before = frame.depth().unwrap();
        let touched = old.union(&r.mask);
        for y in 0..h {
            for x in 0..w {
                if r.mask.get(x, y) && depth.get(x, y).to_bits() != rendered.get(x, y).to_bits() {
                    out.fail(format!("trial {t}: depth at ({x},{y}) differs from the rasterizer"));
                    break;
                }
                if !touched.get(x, y) && depth.get(x, y).to_bits() != before.get(x, y).to_bits() {
                    out.fail(format!("trial {t}: depth at ({x},{y}) changed outside the footprints"));
                    break;
                }
            }
        }
        let old_w = old.difference(&occluders).bbox().unwrap().width() as f64;
        let new_w = r.placement.mask.bbox().unwrap().width() as f64;
        if !(0.75..=1.25).contains(&(new_w / old_w)) {
            out.fail(format!("trial {t}: width {new_w} vs old {old_w}"));
        }
    }
    out
}

/// Re-checks every accepted distractor against protected bboxes and every other distractor
/// with an independent all-pairs test. Returns the outcome with `checked` = placements seen.
pub fn distractor_safety(bench: &Bench, placements: usize, seed: u64) -> Outcome {
    let overlap = |a: &Rect, b: &Rect| !(a.x1 < b.x0 || b.x1 < a.x0 || a.y1 < b.y0 || b.y1 < a.y0);
    let mut rng = Rng(seed);
    let mut out = Outcome::new();
    let pool = bench.catalog.with_role(Role::Distractor);
    let mut call = 0u64;
    while out.checked < placements {
        let ep = &bench.episodes[call as usize % bench.episodes.len()];
        call += 1;
        let obj = ep.object_mask.as_ref().unwrap();
        let rec = ep.receptacle_mask.as_ref().unwrap();
        let camera: &CameraModel = &ep.primary_camera().model;
        let count = 1 + (rng.next_u64() % 6) as u32;
        let (frame, placed) = match place_distractors(
            &ep.frames[0],
            &[obj, rec],
            &pool,
            count,
            rng.next_u64(),
            camera,
            &bench.workspace,
            &bench.grammar,
            &bench.backend,
        ) {
            Ok(r) => r,
            Err(err) => {
                out.fail(format!("call {call}: {err}"));
                break;
            }
        };
        let protected = [obj.bbox().unwrap(), rec.bbox().unwrap()];
        for (i, d) in placed.iter().enumerate() {
            let b = d.mask.bbox().unwrap();
            for p in &protected {
                if overlap(&b, p) || bboxes_overlap(&b, p) {
                    out.fail(format!("call {call}: distractor {i} bbox {b:?} touches protected {p:?}"));
                }
            }
            for (j, o) in placed.iter().enumerate().skip(i + 1) {
                if overlap(&b, &o.mask.bbox().unwrap()) {
                    out.fail(format!("call {call}: distractors {i} and {j} overlap"));
                }
            }
            if d.mask.intersects(obj) || d.mask.intersects(rec) {
                out.fail(format!("call {call}: distractor {i} covers protected pixels"));
            }
        }
        // Protected pixels keep their color and depth.
        let src = &ep.frames[0];
        for m in [obj, rec] {
            for i in (0..m.bits().len()).filter(|&i| m.at(i)) {
                if frame.rgb().at(i) != src.rgb().at(i) || frame.depth().unwrap().values()[i] != src.depth().unwrap().values()[i] {
                    out.fail(format!("call {call}: protected pixel {i} changed"));
                    break;
                }
            }
        }
        out.checked += placed.len();
    }
    out
}

/// Background edits never touch the protected masks.
pub fn background_protection(bench: &Bench, trials: usize, seed: u64) -> Outcome {
    let mut rng = Rng(seed);
    let mut out = Outcome::new();
    for t in 0..trials {
        let ep = &bench.episodes[t % bench.episodes.len()];
        let src = &ep.frames[0];
        let obj = ep.object_mask.as_ref().unwrap();
        let rec = ep.receptacle_mask.as_ref().unwrap();
        let f = match augment_background(src, &[obj, rec], "a wooden table", rng.next_u64(), &bench.backend) {
            Ok(f) => f,
            Err(err) => {
                out.fail(format!("trial {t}: {err}"));
                continue;
            }
        };
        let protected = obj.union(rec);
        let changed = (0..protected.bits().len()).filter(|&i| f.rgb().at(i) != src.rgb().at(i)).collect::<Vec<_>>();
        if changed.iter().any(|&i| protected.at(i)) {
            out.fail(format!("trial {t}: protected pixel repainted"));
        }
        if changed.is_empty() {
            out.fail(format!("trial {t}: background unchanged"));
        }
        out.checked += 1;
    }
    out
}

/// Label substitution on templated task descriptions, plus the canonical example.
pub fn language_cases() -> Outcome {
    let mut out = Outcome::new();
    let mut check = |text: &str, old: &str, new: &str, want: &str| {
        let got = rewrite_language(text, old, new);
        if got.text != want || got.warning.is_some() {
            out.fail(format!("{text:?} {old:?}->{new:?}: got {:?}", got.text));
        }
        out.checked += 1;
    };
    check("Put the apple in a box", "box", "plate", "Put the apple in a plate");

    let verbs = ["Put", "Place", "Move", "Drop", "Set"];
    let objects = ["apple", "banana", "red mug", "block", "toy car"];
    let receptacles = ["box", "plate", "bowl", "tray", "basket"];
    let swaps = [("apple", "pear"), ("box", "crate"), ("bowl", "pan"), ("block", "cube"), ("tray", "dish")];
    let mut n = 0;
    'outer: for (i, v) in verbs.iter().enumerate() {
        for (j, o) in objects.iter().enumerate() {
            for r in receptacles.iter().skip((i + j) % 3).take(2) {
                let text = format!("{v} the {o} in the {r}");
                let (old, new) = if n % 2 == 0 { (*o, "cup") } else { (*r, "bin") };
                let want = text.replacen(&format!(" {old} "), &format!(" {new} "), 1);
                let want = if want == text { text.replacen(&format!(" {old}"), &format!(" {new}"), 1) } else { want };
                check(&text, old, new, &want);
                n += 1;
                if n == 40 {
                    break 'outer;
                }
            }
        }
    }
    for (old, new) in swaps {
        // Whole-word and case-insensitive.
        let text = format!("Pick up the {} and then drop it", old.to_uppercase());
        check(&text, old, new, &format!("Pick up the {new} and then drop it"));
        let text = format!("{old}s are not the {old}");
        check(&text, old, new, &format!("{old}s are not the {new}"));
    }
    out
}

/// Result of one synthetic trajectory run through the video regime.
pub struct VideoReport {
    pub min_truth_iou: f64,
    pub min_step_iou: f64,
    pub fill_consistent: bool,
    pub robot_preserved: bool,
    pub payload_preserved: bool,
    pub frames: usize,
}

/// Runs augment_trajectory with both components on a synthetic trajectory and scores it.
pub fn video_trajectory(frames: usize, size: u32, seed: u64) -> Result<VideoReport, String> {
    use augforge_core::backends::{mock_fill_color, BackendSet};
    use augforge_core::structured::Component;
    use augforge_core::synthetic::{toy_chain, video_episode};
    use augforge_core::video::{augment_trajectory, plan_video, VideoPlan};

    let (ep, truth) = video_episode("traj", frames, size, size, seed);
    let chain = toy_chain();
    let backends = BackendSet::mock();
    let base = plan_video(&PlanSettings::default(), &ep, 0, seed).map_err(|e| e.to_string())?;
    let plan = VideoPlan {
        components: [Component::ObjectTexture, Component::TableBackground].into_iter().collect(),
        ..base
    };
    let out = augment_trajectory(&ep, &chain, &plan, &backends).map_err(|e| e.to_string())?;
    let m = &out.masks[0];
    let mut report = VideoReport {
        min_truth_iou: 1.0,
        min_step_iou: 1.0,
        fill_consistent: true,
        robot_preserved: true,
        payload_preserved: true,
        frames: ep.frames.len(),
    };
    let fill = mock_fill_color(&plan.object_prompt, plan.object_seed);
    let dark = fill.map(|c| c.saturating_sub(32));
    for t in 0..ep.frames.len() {
        let object = m.object[t].difference(&m.robot[t]);
        report.min_truth_iou = report.min_truth_iou.min(object.iou(&truth.object[t]));
        if t > 0 {
            report.min_step_iou = report.min_step_iou.min(m.object[t].iou(&m.object[t - 1]));
        }
        let (src, aug) = (&ep.frames[t], &out.episode.frames[t]);
        let w = src.rgb().width() as usize;
        for i in (0..object.bits().len()).filter(|&i| object.at(i)) {
            let want = if ((i % w) + (i / w)) % 2 == 0 { dark } else { fill };
            if aug.rgb().at(i) != want {
                report.fill_consistent = false;
            }
        }
        for r in [&m.robot[t], &truth.robot[t]] {
            if (0..r.bits().len()).any(|i| r.at(i) && aug.rgb().at(i) != src.rgb().at(i)) {
                report.robot_preserved = false;
            }
        }
        if !aug.same_payload(src) || aug.depth().map(|d| d.values().to_vec()) != src.depth().map(|d| d.values().to_vec()) {
            report.payload_preserved = false;
        }
    }
    Ok(report)
}

/// Convexity and weight normalization of temporal aggregation over random chunk sets.
pub fn aggregation_invariants(sets: usize, seed: u64) -> Outcome {
    use augforge_core::policy::{aggregation_weights, temporal_aggregate, ActionChunk};
    let mut rng = Rng(seed);
    let mut out = Outcome::new();
    for s in 0..sets {
        let width = 1 + (rng.next_u64() % 7) as usize;
        let horizon = 1 + rng.next_u64() % 12;
        let n = 1 + (rng.next_u64() % 8) as usize;
        let chunks: Vec<ActionChunk> = (0..n)
            .map(|_| {
                let issued = rng.next_u64() % 20;
                let actions = (0..horizon).map(|_| (0..width).map(|_| rng.range(-5.0, 5.0)).collect()).collect();
                ActionChunk::new(issued, actions).unwrap()
            })
            .collect();
        let t = rng.next_u64() % 32;
        let m = match s % 4 {
            0 => 0.0,
            1 => rng.range(0.0, 2.0),
            2 => rng.range(-2.0, 0.0),
            _ => rng.range(-60.0, 60.0),
        };
        let covering: Vec<(u64, &[f64])> = chunks.iter().filter_map(|c| c.at(t).map(|a| (t - c.issued_at, a))).collect();
        match temporal_aggregate(&chunks, t, m) {
            Err(_) if covering.is_empty() => {}
            Err(e) => out.fail(format!("set {s}: {e}")),
            Ok(_) if covering.is_empty() => out.fail(format!("set {s}: uncovered step aggregated")),
            Ok(a) => {
                let ages: Vec<u64> = covering.iter().map(|(k, _)| *k).collect();
                let w = aggregation_weights(&ages, m);
                if (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 || w.iter().any(|x| !(*x >= 0.0)) {
                    out.fail(format!("set {s}: weights {w:?}"));
                }
                for (i, v) in a.iter().enumerate() {
                    let lo = covering.iter().map(|(_, p)| p[i]).fold(f64::INFINITY, f64::min);
                    let hi = covering.iter().map(|(_, p)| p[i]).fold(f64::NEG_INFINITY, f64::max);
                    if !(lo <= *v && *v <= hi) {
                        out.fail(format!("set {s}: component {i} = {v} outside [{lo}, {hi}]"));
                    }
                }
                if covering.iter().all(|(_, p)| *p == covering[0].1) && a != covering[0].1 {
                    out.fail(format!("set {s}: equal predictions not reproduced"));
                }
            }
        }
        out.checked += 1;
    }
    out
}
