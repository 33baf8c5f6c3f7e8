use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::record::{AugmentationRecord, BackendStamp, ItemFailure, RecordPlan};
use super::{derive_seed, PipelineConfig, PipelineError};
use crate::backends::{BackendError, BackendSet};
use crate::data::{
    load_episode, load_manifest, load_mesh_catalog, save_episode, save_manifest, validate_episode, DataError,
    DatasetManifest, Episode, EpisodeEntry, Mask, MeshCatalog,
};
use crate::geometry::{load_chain, KinematicChain};
use crate::structured::{
    apply_plan, baseline_augment, load_patch_library, plan_augmentation, AugmentError, BaselineMasks, BaselineMode,
    BaselineOptions, StructuredContext,
};
use crate::video::{augment_trajectory, plan_video};
use crate::ENGINE_VERSION;

/// A loaded input dataset.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub episodes: Vec<Episode>,
    pub chains: BTreeMap<String, KinematicChain>,
}

/// Loads every episode and referenced chain under `root`, collecting validation problems
/// instead of stopping at the first one.
pub fn load_dataset(root: &Path) -> Result<(Dataset, Vec<String>), PipelineError> {
    let manifest = load_manifest(root)?;
    let mut problems = manifest.verify(root);
    let loaded: Vec<Result<Episode, DataError>> =
        manifest.episodes.par_iter().map(|e| load_episode(root, &e.id)).collect();
    let mut episodes = Vec::with_capacity(loaded.len());
    for (entry, r) in manifest.episodes.iter().zip(loaded) {
        match r {
            Ok(e) => episodes.push(e),
            Err(err) => problems.push(format!("episode {}: {err}", entry.id)),
        }
    }
    let mut chains = BTreeMap::new();
    for e in &episodes {
        if chains.contains_key(&e.chain_ref) {
            continue;
        }
        match load_chain(&root.join("chains").join(format!("{}.json", e.chain_ref))) {
            Ok(c) => {
                chains.insert(e.chain_ref.clone(), c);
            }
            Err(err) => problems.push(format!("episode {}: chain {:?}: {err}", e.id, e.chain_ref)),
        }
    }
    for e in &episodes {
        let violations = match chains.get(&e.chain_ref) {
            Some(c) => validate_episode(e, c),
            None => e.check_invariants(),
        };
        problems.extend(violations.into_iter().map(|v| format!("episode {}: {v}", e.id)));
    }
    Ok((Dataset { manifest, episodes, chains }, problems))
}

/// Validation problems of the dataset at `root`; empty when it is valid.
pub fn validate_dataset(root: &Path) -> Result<Vec<String>, PipelineError> {
    Ok(load_dataset(root)?.1)
}

fn load_valid(root: &Path) -> Result<Dataset, PipelineError> {
    let (ds, problems) = load_dataset(root)?;
    if !problems.is_empty() {
        return Err(PipelineError::Validation(problems));
    }
    Ok(ds)
}

/// Outcome of a run. The manifest has already been written.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub manifest: DatasetManifest,
    pub total: usize,
    pub failed: usize,
}

fn stamps(backends: &BackendSet, roles: &[&str]) -> Result<Vec<BackendStamp>, BackendError> {
    roles
        .iter()
        .map(|&role| {
            let b = match role {
                "inpaint" => &backends.inpaint,
                "segment" => &backends.segment,
                _ => &backends.track,
            };
            let info = b.health()?;
            Ok(BackendStamp { role: role.into(), name: info.name, version: info.version })
        })
        .collect()
}

type ItemResult = Result<(Episode, AugmentationRecord), String>;

fn write_item(output: &Path, episode: &Episode, record: &AugmentationRecord) -> Result<(), DataError> {
    save_episode(output, episode)?;
    let path = crate::data::episode_dir(output, &episode.id).join("record.json");
    let json = serde_json::to_string_pretty(record).expect("record serialises");
    std::fs::write(&path, json).map_err(crate::data::io_err(&path))
}

/// Runs `work` over every (episode, aug_index) pair on a pool of `cfg.workers` threads and
/// writes outputs, records and the manifest. Results never depend on the worker count.
fn run_items(
    cfg: &PipelineConfig,
    ds: &Dataset,
    output: &Path,
    dataset_id: String,
    work: impl Fn(&Episode, u64) -> ItemResult + Sync,
) -> Result<RunSummary, PipelineError> {
    std::fs::create_dir_all(output).map_err(crate::data::io_err(output))?;
    let items: Vec<(usize, u64)> = (0..ds.episodes.len())
        .flat_map(|i| (0..cfg.num_augmentations as u64).map(move |k| (i, k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<(EpisodeEntry, AugmentationRecord), ItemFailure>> = pool.install(|| {
        items
            .par_iter()
            .map(|&(i, k)| {
                let src = &ds.episodes[i];
                let fail = |error: String| ItemFailure { source_episode: src.id.clone(), aug_index: k, error };
                let (episode, record) = work(src, k).map_err(fail)?;
                write_item(output, &episode, &record).map_err(|e| fail(e.to_string()))?;
                Ok((EpisodeEntry { id: episode.id.clone(), frames: episode.frames.len() }, record))
            })
            .collect()
    });

    let mut manifest = DatasetManifest::new(dataset_id);
    if cfg.include_originals {
        for e in &ds.episodes {
            save_episode(output, e)?;
            manifest.episodes.push(EpisodeEntry { id: e.id.clone(), frames: e.frames.len() });
        }
    }
    for r in results {
        match r {
            Ok((entry, record)) => {
                manifest.episodes.push(entry);
                manifest.records.push(record);
            }
            Err(f) => {
                log::warn!("{} aug {} failed: {}", f.source_episode, f.aug_index, f.error);
                manifest.failures.push(f);
            }
        }
    }
    manifest.episodes.sort_by(|a, b| a.id.cmp(&b.id));
    manifest.records.sort_by(|a, b| a.output_episode.cmp(&b.output_episode));
    copy_chains_for(ds, output)?;
    save_manifest(output, &manifest)?;

    let (total, failed) = (items.len(), manifest.failures.len());
    if total > 0 && failed as f64 > cfg.failure_budget * total as f64 {
        return Err(PipelineError::FailureBudget { failed, total, first: manifest.failures[0].error.clone() });
    }
    Ok(RunSummary { manifest, total, failed })
}

fn copy_chains_for(ds: &Dataset, output: &Path) -> Result<(), PipelineError> {
    let dst = output.join("chains");
    std::fs::create_dir_all(&dst).map_err(crate::data::io_err(&dst))?;
    for (name, chain) in &ds.chains {
        let p = dst.join(format!("{name}.json"));
        std::fs::write(&p, chain.to_json()).map_err(crate::data::io_err(&p))?;
    }
    Ok(())
}

fn load_catalog(cfg: &PipelineConfig, input: &Path) -> Result<MeshCatalog, PipelineError> {
    let path = cfg.catalog_path(input);
    if !path.exists() {
        log::warn!("no mesh catalog at {}; shape and distractor components are disabled", path.display());
        return Ok(MeshCatalog::default());
    }
    Ok(load_mesh_catalog(&path)?)
}

/// Structured augmentation of the observation frame, `num_augmentations` times per episode.
pub fn run_structured(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<RunSummary, PipelineError> {
    cfg.check()?;
    let backends = BackendSet::connect(&cfg.backends)?;
    run_structured_with(cfg, input, output, &backends)
}

/// [`run_structured`] with caller-supplied backends.
pub fn run_structured_with(
    cfg: &PipelineConfig,
    input: &Path,
    output: &Path,
    backends: &BackendSet,
) -> Result<RunSummary, PipelineError> {
    cfg.check()?;
    let ds = load_valid(input)?;
    let catalog = load_catalog(cfg, input)?;
    let stamps = stamps(backends, &["inpaint"])?;
    let settings = cfg.plan_settings();
    let dataset_id = format!("{}+structured", ds.manifest.dataset_id);
    run_items(cfg, &ds, output, dataset_id, |src, k| {
        let plan = plan_augmentation(&settings, &catalog, src, k, cfg.global_seed).map_err(|e| e.to_string())?;
        let episode = replay_structured(src, &plan, k, &catalog, cfg, backends).map_err(|e| e.to_string())?;
        let record = AugmentationRecord {
            output_episode: episode.0.id.clone(),
            source_episode: src.id.clone(),
            aug_index: k,
            global_seed: cfg.global_seed,
            seeds: plan.seeds.clone(),
            plan: RecordPlan::Structured(plan),
            backends: stamps.clone(),
            warnings: episode.1,
            events: Vec::new(),
            engine_version: ENGINE_VERSION.into(),
        };
        Ok((episode.0, record))
    })
}

/// Regenerates one structured item from its plan. Returns the episode and its warnings.
pub fn replay_structured(
    source: &Episode,
    plan: &crate::structured::AugmentationPlan,
    aug_index: u64,
    catalog: &MeshCatalog,
    cfg: &PipelineConfig,
    backends: &BackendSet,
) -> Result<(Episode, Vec<String>), AugmentError> {
    let ctx = StructuredContext {
        catalog,
        workspace: &cfg.workspace,
        grammar: &cfg.grammar,
        backend: &backends.inpaint,
    };
    let out = apply_plan(source, plan, &ctx)?;
    let mut episode = out.episode;
    episode.id = format!("{}__aug{aug_index}", source.id);
    Ok((episode, out.warnings))
}

/// Video augmentation of every frame and view, `num_augmentations` times per trajectory.
pub fn run_video(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<RunSummary, PipelineError> {
    cfg.check()?;
    let backends = BackendSet::connect(&cfg.backends)?;
    run_video_with(cfg, input, output, &backends)
}

pub fn run_video_with(
    cfg: &PipelineConfig,
    input: &Path,
    output: &Path,
    backends: &BackendSet,
) -> Result<RunSummary, PipelineError> {
    cfg.check()?;
    let ds = load_valid(input)?;
    let stamps = stamps(backends, &["inpaint", "segment", "track"])?;
    let settings = cfg.plan_settings();
    let dataset_id = format!("{}+video", ds.manifest.dataset_id);
    run_items(cfg, &ds, output, dataset_id, |src, k| {
        let chain = ds.chains.get(&src.chain_ref).ok_or_else(|| format!("chain {:?} not loaded", src.chain_ref))?;
        let plan = plan_video(&settings, src, k, cfg.global_seed).map_err(|e| e.to_string())?;
        let out = augment_trajectory(src, chain, &plan, backends).map_err(|e| e.to_string())?;
        let mut episode = out.episode;
        episode.id = format!("{}__aug{k}", src.id);
        let mut seeds = BTreeMap::from([("object".to_string(), plan.object_seed)]);
        for (t, s) in plan.background_seeds.iter().enumerate() {
            seeds.insert(format!("background/{t:06}"), *s);
        }
        let record = AugmentationRecord {
            output_episode: episode.id.clone(),
            source_episode: src.id.clone(),
            aug_index: k,
            global_seed: cfg.global_seed,
            plan: RecordPlan::Video(plan),
            backends: stamps.clone(),
            seeds,
            warnings: Vec::new(),
            events: out.events,
            engine_version: ENGINE_VERSION.into(),
        };
        Ok((episode, record))
    })
}

/// One baseline augmentation of the observation frame per episode and augmentation index.
pub fn run_baseline(
    cfg: &PipelineConfig,
    input: &Path,
    output: &Path,
    mode: BaselineMode,
    patches: &Path,
) -> Result<RunSummary, PipelineError> {
    cfg.check()?;
    let ds = load_valid(input)?;
    let library = load_patch_library(patches)?;
    if library.is_empty() && mode != BaselineMode::Spatial {
        return Err(AugmentError::EmptyLibrary.into());
    }
    let options: BaselineOptions = cfg.baseline;
    let tag = serde_json::to_value(mode).expect("mode serialises");
    let tag = tag.as_str().expect("mode is a string").to_string();
    let dataset_id = format!("{}+{tag}", ds.manifest.dataset_id);
    run_items(cfg, &ds, output, dataset_id, |src, k| {
        let seed = derive_seed(cfg.global_seed, &src.id, k, 0, &format!("baseline/{tag}"));
        let (w, h) = src.frames[0].rgb().dims();
        let masks = BaselineMasks {
            object: src.object_mask.clone().unwrap_or_else(|| Mask::empty(w, h)),
            receptacle: src.receptacle_mask.clone().unwrap_or_else(|| Mask::empty(w, h)),
        };
        let frame = baseline_augment(&src.frames[0], mode, &library, &masks, &options, seed).map_err(|e| e.to_string())?;
        let mut episode = src.clone();
        episode.frames[0] = frame;
        episode.id = format!("{}__{tag}{k}", src.id);
        let record = AugmentationRecord {
            output_episode: episode.id.clone(),
            source_episode: src.id.clone(),
            aug_index: k,
            global_seed: cfg.global_seed,
            plan: RecordPlan::Baseline { mode, seed },
            backends: Vec::new(),
            seeds: BTreeMap::from([(tag.clone(), seed)]),
            warnings: Vec::new(),
            events: Vec::new(),
            engine_version: ENGINE_VERSION.into(),
        };
        Ok((episode, record))
    })
}
