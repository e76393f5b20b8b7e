//! The self-supervision loop: crawl to the next reward, group paths by
//! macro, evaluate the shortest groups on development variations, accept
//! one (or a merged pair), extend, and repeat until every surviving
//! training variation is won.

pub mod checkpoint;
mod config;
mod selection;
pub mod sweep;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::crawler::{crawl_many, CrawlConfig, CrawlError, CrawlJob};
use crate::engine::{Action, EngineError, EpisodeSpec, Game, Split};
use crate::evaluator::{evaluate_records, EvalError, EvalReport};
use crate::macros::{group_paths, select_k_shortest, variabilize, variabilize_actions};
use crate::policy::{emit_training_records, CorruptGroup, PromptRecord};
use crate::score::Score;
use crate::trajectory::{ReplayError, Trajectory};
use crate::content_hash;

pub use checkpoint::Checkpoint;
pub use config::{MergeChoice, PipelineConfig};
pub use selection::{merge_pair, MergeInput, MergedSelection, Selection, SelectionMember};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("segment {segment}: no group or merged pair reached the threshold (best: {})",
        best.as_ref().map(|r| format!("{} = {}", r.group_key, r.mean_score)).unwrap_or_else(|| "none".into()))]
    NoAcceptance { segment: usize, best: Option<Box<EvalReport>>, manifest: Box<Manifest> },
    #[error("training variations were not all won after {segments} segments")]
    Unfinished { segments: usize, manifest: Box<Manifest> },
    #[error("stitched trajectory for {spec} replays to {score}, not a win")]
    Stitch { spec: String, score: Score },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Corrupt(#[from] CorruptGroup),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// A single group scored on development variations.
    Group,
    /// A group retrained on its own development rollouts and scored on the
    /// training variations (splits swapped).
    Flipped,
    /// A merged pair scored on development variations.
    Merged,
}

/// One evaluation, in the order it was performed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationEntry {
    pub segment: usize,
    pub phase: Phase,
    pub group_key: String,
    pub split_evaluated: String,
    /// Splits the training records were drawn from.
    pub training_splits: Vec<Split>,
    pub training_variations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_score: Option<Score>,
    /// Development mean divided by the selection's own training mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_score: Option<Score>,
    pub cache_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub segment_index: usize,
    pub crawled_variations: usize,
    pub paths: usize,
    pub groups: usize,
    pub accepted_key: String,
    pub constituents: Vec<String>,
    pub dev_score: Score,
    pub accepted_score: Score,
    /// Training variation -> constituent key that supplied it.
    pub provenance: BTreeMap<u32, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Running,
    Complete { won_variations: usize, records: usize },
    NoAcceptance { segment: usize, best_key: Option<String>, best_score: Option<Score> },
    Unfinished { segments: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// The configuration as supplied by the caller.
    pub config: serde_json::Value,
    pub game: Game,
    pub master_seed: u64,
    pub evaluations: Vec<EvaluationEntry>,
    pub segments: Vec<SegmentSummary>,
    pub accepted_keys: Vec<String>,
    pub outcome: Outcome,
}

impl Manifest {
    pub fn entries(&self, segment: usize, phase: Phase) -> impl Iterator<Item = &EvaluationEntry> {
        self.evaluations.iter().filter(move |e| e.segment == segment && e.phase == phase)
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SegmentResult {
    pub segment_index: usize,
    /// Every report produced in this segment, in evaluation order.
    pub evaluated: Vec<EvalReport>,
    pub accepted: Selection,
    pub accepted_report: EvalReport,
    /// Relative development score of the accepted selection.
    pub accepted_score: Score,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub records: Vec<PromptRecord>,
    /// Stitched winning trajectories in record order.
    pub trajectories: Vec<Trajectory>,
    pub segments: Vec<SegmentResult>,
    pub reports: Vec<EvalReport>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Checkpoint directory; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    /// Echoed into the manifest; defaults to the serialized config.
    pub config_echo: Option<serde_json::Value>,
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Output of one crawl stage.
#[derive(Debug, Clone)]
pub struct CrawlStage {
    pub key: String,
    pub paths: Vec<Trajectory>,
    pub cache_hit: bool,
}

#[derive(Serialize)]
struct CrawlKey<'a> {
    game: Option<Game>,
    master_seed: Option<u64>,
    crawl: &'a CrawlConfig,
    jobs: Vec<(String, u64, &'a [Action])>,
}

pub fn crawl_key(cfg: &CrawlConfig, jobs: &[CrawlJob]) -> String {
    let key = CrawlKey {
        game: jobs.first().map(|j| j.spec.game),
        master_seed: jobs.first().map(|j| j.spec.master_seed),
        crawl: cfg,
        jobs: jobs.iter().map(|j| (j.spec.tag(), j.spec.seed, j.prefix.as_slice())).collect(),
    };
    content_hash(&serde_json::to_vec(&key).expect("crawl key serializes"))
}

/// The segment-0 crawl jobs: every training variation from its start.
pub fn initial_jobs(cfg: &PipelineConfig) -> Result<Vec<CrawlJob>, PipelineError> {
    Ok(EpisodeSpec::range(cfg.game, Split::Train, cfg.train_variations, cfg.master_seed)?
        .into_iter()
        .map(|spec| CrawlJob { spec, prefix: Vec::new() })
        .collect())
}

/// Crawls every job, reusing a cached result when the checkpoint has one.
/// A job that exhausts its node budget contributes its partial paths.
pub fn crawl_stage(
    cfg: &CrawlConfig,
    jobs: &[CrawlJob],
    checkpoint: Option<&Checkpoint>,
) -> Result<CrawlStage, PipelineError> {
    let key = crawl_key(cfg, jobs);
    if let Some(cp) = checkpoint {
        if let Some(paths) = cp.load_crawl(&key)? {
            tracing::info!(key = %key, paths = paths.len(), "crawl cache hit");
            return Ok(CrawlStage { key, paths, cache_hit: true });
        }
    }
    let mut paths = Vec::new();
    for (spec, result) in crawl_many(jobs, cfg) {
        match result {
            Ok(found) => paths.extend(found),
            Err(CrawlError::BudgetExhausted { partial, max_nodes, .. }) => {
                tracing::warn!(spec = %spec.tag(), max_nodes, "crawl budget exhausted; keeping partial paths");
                paths.extend(partial);
            }
            Err(e) => tracing::warn!(spec = %spec.tag(), error = %e, "crawl failed; variation skipped"),
        }
    }
    if let Some(cp) = checkpoint {
        cp.store_crawl(&key, &paths)?;
    }
    Ok(CrawlStage { key, paths, cache_hit: false })
}

#[derive(Serialize)]
struct EvalKey<'a> {
    evaluator: &'a crate::evaluator::EvaluatorBinding,
    group_key: &'a str,
    label: &'a str,
    specs: &'a [EpisodeSpec],
    records: String,
}

/// Cache key of one evaluation.
pub fn eval_key(
    binding: &crate::evaluator::EvaluatorBinding,
    group_key: &str,
    records: &[PromptRecord],
    specs: &[EpisodeSpec],
    label: &str,
) -> String {
    let records = content_hash(&serde_json::to_vec(records).expect("records serialize"));
    let key = EvalKey { evaluator: binding, group_key, label, specs, records };
    content_hash(&serde_json::to_vec(&key).expect("eval key serializes"))
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Incremental driver; [`run_full`] loops it to completion.
pub struct Pipeline {
    cfg: PipelineConfig,
    checkpoint: Option<Checkpoint>,
    manifest: Manifest,
    reports: Vec<EvalReport>,
    train_specs: Vec<EpisodeSpec>,
    dev_specs: Vec<EpisodeSpec>,
    /// Training variation -> current concrete path, plus the (segment,
    /// constituent) that produced it, for record ordering.
    current: BTreeMap<u32, (Trajectory, (usize, usize))>,
    segments: Vec<SegmentResult>,
}

struct Scored {
    selection: Selection,
    report: EvalReport,
    relative: Score,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, opts: RunOptions) -> Result<Pipeline, PipelineError> {
        cfg.validate().map_err(PipelineError::Config)?;
        let checkpoint = opts.out_dir.map(Checkpoint::open).transpose()?;
        let config = match opts.config_echo {
            Some(v) => v,
            None => serde_json::to_value(&cfg).map_err(|e| PipelineError::Config(e.to_string()))?,
        };
        let manifest = Manifest {
            config,
            game: cfg.game,
            master_seed: cfg.master_seed,
            evaluations: Vec::new(),
            segments: Vec::new(),
            accepted_keys: Vec::new(),
            outcome: Outcome::Running,
        };
        Ok(Pipeline {
            train_specs: EpisodeSpec::range(cfg.game, Split::Train, cfg.train_variations, cfg.master_seed)?,
            dev_specs: EpisodeSpec::range(cfg.game, Split::Dev, cfg.dev_variations, cfg.master_seed)?,
            cfg,
            checkpoint,
            manifest,
            reports: Vec::new(),
            current: BTreeMap::new(),
            segments: Vec::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn reports(&self) -> &[EvalReport] {
        &self.reports
    }

    pub fn segments(&self) -> &[SegmentResult] {
        &self.segments
    }

    /// Current concrete path per surviving training variation.
    pub fn current(&self) -> impl Iterator<Item = &Trajectory> {
        self.current.values().map(|(t, _)| t)
    }

    pub fn is_complete(&self) -> bool {
        !self.segments.is_empty() && self.current.values().all(|(t, _)| t.final_score == Score::ONE)
    }

    fn save(&self) -> Result<(), PipelineError> {
        if let Some(cp) = &self.checkpoint {
            cp.write_manifest(&self.manifest)?;
        }
        Ok(())
    }

    fn save_all(&self) -> Result<(), PipelineError> {
        if let Some(cp) = &self.checkpoint {
            cp.write_reports(&self.reports)?;
        }
        self.save()
    }

    /// Trains on `sel` and scores the result on `specs`, through the cache.
    /// Evaluator failures are recorded and yield `None`.
    fn evaluate(
        &mut self,
        segment: usize,
        phase: Phase,
        sel: &Selection,
        specs: &[EpisodeSpec],
        label: &str,
    ) -> Result<Option<EvalReport>, PipelineError> {
        let records = sel.records()?;
        let key = eval_key(&self.cfg.evaluator, &sel.key(), &records, specs, label);
        let mut entry = EvaluationEntry {
            segment,
            phase,
            group_key: sel.key(),
            split_evaluated: label.to_string(),
            training_splits: sel.source_splits().into_iter().collect(),
            training_variations: sel.members.len(),
            mean_score: None,
            relative_score: None,
            cache_key: key.clone(),
            error: None,
        };
        let cached = match &self.checkpoint {
            Some(cp) => cp.load_eval(&key)?,
            None => None,
        };
        let report = match cached {
            Some(r) => Some(r),
            None => match evaluate_records(&self.cfg.evaluator, &sel.key(), &records, specs, label) {
                Ok(r) => {
                    if let Some(cp) = &self.checkpoint {
                        cp.store_eval(&key, &r)?;
                    }
                    Some(r)
                }
                Err(e @ (EvalError::EvaluatorFailure { .. } | EvalError::Protocol(_))) => {
                    tracing::warn!(group = %sel.key(), error = %e, "evaluation failed; group skipped");
                    entry.error = Some(e.to_string());
                    None
                }
                Err(e) => return Err(e.into()),
            },
        };
        if let Some(r) = &report {
            entry.mean_score = Some(r.mean_score);
            if phase != Phase::Flipped {
                entry.relative_score = Some(r.mean_score.ratio_capped(sel.train_mean()));
            }
            tracing::info!(
                segment,
                phase = ?phase,
                group = %r.group_key,
                split = label,
                mean = %r.mean_score,
                "evaluated"
            );
            self.reports.push(r.clone());
        }
        self.manifest.evaluations.push(entry);
        self.save()?;
        Ok(report)
    }

    fn jobs(&self) -> Result<Vec<CrawlJob>, PipelineError> {
        if self.segments.is_empty() {
            return initial_jobs(&self.cfg);
        }
        Ok(self
            .current
            .values()
            .filter(|(t, _)| t.final_score != Score::ONE)
            .map(|(t, _)| CrawlJob { spec: t.spec, prefix: t.full_actions() })
            .collect())
    }

    /// Crawls, groups and evaluates the next reward segment, accepting the
    /// first group (or best merged pair) whose relative development score
    /// reaches the threshold.
    pub fn run_segment(&mut self) -> Result<&SegmentResult, PipelineError> {
        let segment = self.segments.len();
        let jobs = self.jobs()?;
        if jobs.is_empty() {
            return Err(PipelineError::Domain("every training variation is already won".into()));
        }
        let stage = crawl_stage(&self.cfg.crawl, &jobs, self.checkpoint.as_ref())?;
        let paths = stage.paths.len();
        let groups = group_paths(stage.paths, segment);
        let n_groups = groups.len();
        tracing::info!(segment, variations = jobs.len(), paths, groups = n_groups, "grouped");
        let threshold = self.cfg.threshold;
        let first_report = self.reports.len();

        let mut candidates: Vec<Scored> = Vec::new();
        let mut accepted: Option<Scored> = None;
        for group in select_k_shortest(&groups, self.cfg.k) {
            let selection = Selection::from_group(group);
            let dev_specs = self.dev_specs.clone();
            let Some(report) = self.evaluate(segment, Phase::Group, &selection, &dev_specs, "dev")? else {
                continue;
            };
            let relative = report.mean_score.ratio_capped(selection.train_mean());
            let scored = Scored { selection, report, relative };
            if relative >= threshold {
                accepted = Some(scored);
                break;
            }
            candidates.push(scored);
        }
        drop(groups);

        let mut best: Option<Scored> = None;
        if accepted.is_none() {
            let merged = self.merge_groups(segment, &candidates)?;
            match merged {
                Some(m) if m.relative >= threshold => accepted = Some(m),
                Some(m) => best = Some(m),
                None => {}
            }
            for c in candidates {
                if best.as_ref().is_none_or(|b| (c.relative, c.report.mean_score) > (b.relative, b.report.mean_score)) {
                    best = Some(c);
                }
            }
        }

        let Some(acc) = accepted else {
            let best_report = best.map(|b| Box::new(b.report));
            self.manifest.outcome = Outcome::NoAcceptance {
                segment,
                best_key: best_report.as_ref().map(|r| r.group_key.clone()),
                best_score: best_report.as_ref().map(|r| r.mean_score),
            };
            self.save_all()?;
            return Err(PipelineError::NoAcceptance {
                segment,
                best: best_report,
                manifest: Box::new(self.manifest.clone()),
            });
        };

        tracing::info!(segment, key = %acc.selection.key(), relative = %acc.relative, "accepted");
        let mut next: BTreeMap<u32, (Trajectory, (usize, usize))> =
            std::mem::take(&mut self.current).into_iter().filter(|(_, (t, _))| t.final_score == Score::ONE).collect();
        for m in &acc.selection.members {
            next.insert(m.variation, (m.trajectory.clone(), (segment, m.constituent)));
        }
        self.current = next;
        self.manifest.accepted_keys.push(acc.selection.key());
        self.manifest.segments.push(SegmentSummary {
            segment_index: segment,
            crawled_variations: jobs.len(),
            paths,
            groups: n_groups,
            accepted_key: acc.selection.key(),
            constituents: acc.selection.constituents.clone(),
            dev_score: acc.report.mean_score,
            accepted_score: acc.relative,
            provenance: acc.selection.provenance(),
        });
        self.save()?;
        self.segments.push(SegmentResult {
            segment_index: segment,
            evaluated: self.reports[first_report..].to_vec(),
            accepted: acc.selection,
            accepted_report: acc.report,
            accepted_score: acc.relative,
        });
        Ok(self.segments.last().expect("just pushed"))
    }

    /// Pairs the top `merge_top` evaluated groups. Each pair's training set
    /// takes, per training variation, the trajectory of the constituent that
    /// did better on that episode; every pair is then scored on development
    /// variations. Returns the best pair, or `None` with fewer than two
    /// groups.
    fn merge_groups(&mut self, segment: usize, candidates: &[Scored]) -> Result<Option<Scored>, PipelineError> {
        let top = rank_for_merge(candidates, self.cfg.merge_top);
        if top.len() < 2 {
            tracing::warn!(segment, available = top.len(), "too few evaluated groups to merge");
            return Ok(None);
        }
        let mut inputs = Vec::with_capacity(top.len());
        for &i in &top {
            let c = &candidates[i];
            let per_variation = if self.cfg.flip_on_merge {
                self.flipped_scores(segment, c)?
            } else {
                c.report.per_episode.iter().map(|(v, e)| (*v, e.score)).collect()
            };
            inputs.push(MergeInput { selection: &c.selection, per_variation, mean: c.report.mean_score });
        }
        let mut best: Option<Scored> = None;
        for i in 0..inputs.len() {
            for j in i + 1..inputs.len() {
                let merged = merge_pair(&inputs[i], &inputs[j], self.cfg.merge_choice);
                let dev_specs = self.dev_specs.clone();
                let Some(report) = self.evaluate(segment, Phase::Merged, &merged, &dev_specs, "dev")? else {
                    continue;
                };
                let relative = report.mean_score.ratio_capped(merged.train_mean());
                let better = best
                    .as_ref()
                    .is_none_or(|b| (relative, report.mean_score) > (b.relative, b.report.mean_score));
                if better {
                    best = Some(Scored { selection: merged, report, relative });
                }
            }
        }
        Ok(best)
    }

    /// Scores a group with the splits swapped: the evaluator is trained on
    /// the group's own successful development rollouts and played on the
    /// training variations.
    fn flipped_scores(&mut self, segment: usize, c: &Scored) -> Result<BTreeMap<u32, Score>, PipelineError> {
        let rollouts = successful_rollouts(&c.selection, &c.report, &self.dev_specs)?;
        if rollouts.is_empty() {
            tracing::info!(group = %c.selection.key(), "no development rollout matches the macro; flipped scores are zero");
            return Ok(BTreeMap::new());
        }
        let flipped = Selection {
            constituents: c.selection.constituents.clone(),
            members: rollouts
                .into_iter()
                .map(|t| SelectionMember { variation: t.spec.variation, constituent: 0, trajectory: t })
                .collect(),
        };
        let train_specs = self.train_specs.clone();
        let report = self.evaluate(segment, Phase::Flipped, &flipped, &train_specs, "train-flipped")?;
        Ok(report.map(|r| r.per_episode.iter().map(|(v, e)| (*v, e.score)).collect()).unwrap_or_default())
    }

    /// Stitches the per-variation paths, emits the final records and writes
    /// every artifact.
    pub fn finish(mut self) -> Result<PipelineOutput, PipelineError> {
        if !self.is_complete() {
            let segments = self.segments.len();
            self.manifest.outcome = Outcome::Unfinished { segments };
            self.save_all()?;
            return Err(PipelineError::Unfinished { segments, manifest: Box::new(self.manifest) });
        }
        let mut order: Vec<((usize, usize), u32, Trajectory)> =
            std::mem::take(&mut self.current).into_iter().map(|(v, (t, o))| (o, v, t)).collect();
        order.sort_by_key(|(o, v, _)| (*o, *v));
        let trajectories: Vec<Trajectory> = order.into_iter().map(|(_, _, t)| t).collect();
        for t in &trajectories {
            let steps = t.replay()?;
            let score: Score = steps.iter().map(|s| s.reward).sum();
            if score != Score::ONE {
                return Err(PipelineError::Stitch { spec: t.spec.tag(), score });
            }
        }
        let records = emit_training_records(&trajectories)?;
        self.manifest.outcome = Outcome::Complete { won_variations: trajectories.len(), records: records.len() };
        if let Some(cp) = &self.checkpoint {
            cp.write_training_data(&records)?;
        }
        self.save_all()?;
        Ok(PipelineOutput {
            records,
            trajectories,
            segments: self.segments,
            reports: self.reports,
            manifest: self.manifest,
        })
    }
}

/// Indices of up to `n` candidates by development mean, preferring groups
/// whose per-episode score profiles differ from those already chosen.
fn rank_for_merge(candidates: &[Scored], n: usize) -> Vec<usize> {
    let mut by_score: Vec<usize> = (0..candidates.len()).collect();
    by_score.sort_by(|&a, &b| candidates[b].report.mean_score.cmp(&candidates[a].report.mean_score));
    let mut seen: BTreeSet<Vec<Score>> = BTreeSet::new();
    let (mut distinct, mut repeats) = (Vec::new(), Vec::new());
    for i in by_score {
        if seen.insert(candidates[i].report.episode_scores()) {
            distinct.push(i);
        } else {
            repeats.push(i);
        }
    }
    distinct.into_iter().chain(repeats).take(n).collect()
}

/// Development episodes a group's policy solved in the group's own shape:
/// the rollout, cut after its last reward, must have the group's macro.
fn successful_rollouts(
    sel: &Selection,
    report: &EvalReport,
    dev_specs: &[EpisodeSpec],
) -> Result<Vec<Trajectory>, PipelineError> {
    let Some(first) = sel.members.first() else {
        return Ok(Vec::new());
    };
    let target = variabilize(&first.trajectory);
    let mut out = Vec::new();
    for spec in dev_specs {
        let Some(ep) = report.per_episode.get(&spec.variation) else { continue };
        if !ep.score.is_positive() {
            continue;
        }
        let full = Trajectory::record(spec, &[], &ep.actions)?;
        let Some(last) = full.rewards.iter().rposition(Score::is_positive) else { continue };
        let cut = &ep.actions[..=last];
        if variabilize_actions(cut).0 == target {
            out.push(Trajectory::record(spec, &[], cut)?);
        }
    }
    Ok(out)
}

/// Runs segments until every surviving training variation is won.
pub fn run_full(cfg: PipelineConfig, opts: RunOptions) -> Result<PipelineOutput, PipelineError> {
    let mut p = Pipeline::new(cfg, opts)?;
    while !p.is_complete() && p.segments.len() < p.cfg.max_segments {
        p.run_segment()?;
    }
    p.finish()
}

#[cfg(test)]
mod tests;
