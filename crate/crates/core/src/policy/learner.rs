//! Rule induction over prompt records and macro replay with re-binding.

use serde::{Deserialize, Serialize};

use super::features::{episode_fingerprint, BindContext, Feature, REGISTRY};
use super::records::{episodes, AgentView, PromptRecord};
use crate::engine::{Action, Lexicon, Verb};
use crate::macros::{variabilize_actions, MacroAction, MacroSequence, Slot};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    /// Feature families to leave out of induction (by registry name).
    #[serde(default)]
    pub disabled_features: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("no training records")]
    Empty,
    #[error("unknown feature family {0:?}")]
    UnknownFeature(String),
}

/// Binding rules for one macro sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InducedPolicy {
    #[serde(rename = "macro")]
    pub macro_seq: MacroSequence,
    /// Per slot, the consistent features in rank order; always ends with
    /// memorized `ExactName` entries.
    pub slot_rules: Vec<Vec<Feature>>,
    /// Number of training episodes the rules were induced from.
    pub episodes: usize,
}

/// One or more induced policies sharing an executed-action history. A single
/// group trains a one-constituent policy; a merged selection trains several.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub constituents: Vec<InducedPolicy>,
}

struct TrainingEpisode {
    views: Vec<AgentView>,
    bindings: Vec<String>,
    fingerprint: u64,
}

/// Candidate arguments for position `pos` of a macro step: the arguments of
/// valid actions whose verb matches and whose already-bound slots agree.
/// Names bound to other slots are excluded (bindings are injective).
fn candidates<'v>(
    valid: &'v [Action],
    step: &MacroAction,
    pos: usize,
    bindings: &[Option<String>],
) -> Vec<&'v str> {
    let mut out: Vec<&str> = Vec::new();
    'actions: for a in valid.iter().filter(|a| a.verb == step.verb) {
        let args: Vec<&str> = a.args().collect();
        for (q, slot) in step.slots.iter().enumerate() {
            if let Some(Some(bound)) = bindings.get(slot.0 as usize) {
                if args[q] != bound {
                    continue 'actions;
                }
            }
        }
        let c = args[pos];
        let taken_elsewhere = bindings
            .iter()
            .enumerate()
            .any(|(s, b)| s != step.slots[pos].0 as usize && b.as_deref() == Some(c));
        if !taken_elsewhere && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase).collect()
}

fn unigram_overlap(a: &str, task_tokens: &[String]) -> usize {
    let mut seen: Vec<String> = Vec::new();
    for t in tokens(a) {
        if task_tokens.contains(&t) && !seen.contains(&t) {
            seen.push(t);
        }
    }
    seen.len()
}

// ---------------------------------------------------------------------------
// Induction
// ---------------------------------------------------------------------------

fn induce_macro(
    macro_seq: MacroSequence,
    eps: &[TrainingEpisode],
    cfg: &LearnerConfig,
    lexicon: &Lexicon,
) -> InducedPolicy {
    let n_slots = macro_seq.slot_count();
    let mut slot_rules = Vec::with_capacity(n_slots);
    for s in 0..n_slots {
        let slot = Slot(s as u8);
        let (k, pos) = macro_seq
            .actions
            .iter()
            .enumerate()
            .find_map(|(k, a)| a.slots.iter().position(|x| *x == slot).map(|p| (k, p)))
            .expect("dense slots");
        let step = &macro_seq.actions[k];
        // Slots bound before this one: those first seen at earlier steps, or
        // earlier in this step.
        let contexts: Vec<(Vec<Option<String>>, Vec<&str>, Option<usize>)> = eps
            .iter()
            .map(|ep| {
                let bindings: Vec<Option<String>> =
                    (0..n_slots).map(|o| (o < s).then(|| ep.bindings[o].clone())).collect();
                let cands = candidates(&ep.views[k].valid_actions, step, pos, &bindings);
                let target = cands.iter().position(|c| *c == ep.bindings[s]);
                (bindings, cands, target)
            })
            .collect();

        let mut rules: Vec<Feature> = REGISTRY
            .iter()
            .filter(|f| !cfg.disabled_features.iter().any(|d| d == f.name))
            .flat_map(|f| (f.instantiate)(slot, n_slots))
            .filter(|feature| {
                eps.iter().zip(&contexts).all(|(ep, (bindings, cands, target))| {
                    let Some(target) = *target else { return false };
                    let ctx = BindContext {
                        history: &ep.views[..=k],
                        bindings,
                        fingerprint: ep.fingerprint,
                        lexicon,
                    };
                    feature.select(&ctx, cands) == Some(vec![target])
                })
            })
            .collect();
        rules.sort_by_key(Feature::rank);
        for ep in eps {
            let f = Feature::ExactName { episode: ep.fingerprint, name: ep.bindings[s].clone() };
            if !rules.contains(&f) {
                rules.push(f);
            }
        }
        slot_rules.push(rules);
    }
    InducedPolicy { macro_seq, slot_rules, episodes: eps.len() }
}

/// Trains a policy from prompt records alone. Episodes are grouped by their
/// macro sequence; constituents keep the order of first appearance.
pub fn induce(records: &[PromptRecord], cfg: &LearnerConfig) -> Result<Policy, LearnError> {
    if records.is_empty() {
        return Err(LearnError::Empty);
    }
    for d in &cfg.disabled_features {
        if !REGISTRY.iter().any(|f| f.name == d) {
            return Err(LearnError::UnknownFeature(d.clone()));
        }
    }
    let lexicon = Lexicon::bundled();
    let mut by_macro: Vec<(MacroSequence, Vec<TrainingEpisode>)> = Vec::new();
    for ep in episodes(records) {
        let actions: Vec<Action> = ep.iter().map(|r| r.target_action.clone()).collect();
        let (m, names) = variabilize_actions(&actions);
        let views: Vec<AgentView> = ep.iter().map(|r| r.view.clone()).collect();
        let te = TrainingEpisode { fingerprint: episode_fingerprint(&views[0]), views, bindings: names };
        match by_macro.iter_mut().find(|(k, _)| *k == m) {
            Some((_, list)) => list.push(te),
            None => by_macro.push((m, vec![te])),
        }
    }
    let constituents = by_macro.into_iter().map(|(m, eps)| induce_macro(m, &eps, cfg, lexicon)).collect();
    Ok(Policy { constituents })
}

// ---------------------------------------------------------------------------
// Acting
// ---------------------------------------------------------------------------

impl InducedPolicy {
    fn choose(&self, slot: Slot, ctx: &BindContext<'_>, cands: &[&str]) -> Option<usize> {
        let mut fallback: Option<Vec<usize>> = None;
        for f in &self.slot_rules[slot.0 as usize] {
            match f.select(ctx, cands) {
                Some(sel) if sel.len() == 1 => return Some(sel[0]),
                Some(sel) if sel.len() > 1 && fallback.is_none() => fallback = Some(sel),
                _ => {}
            }
        }
        let sel = fallback?;
        // Tie-break by unigram overlap between the candidate and the task
        // description; remaining ties keep canonical order.
        let task = tokens(&ctx.history.last()?.task_description);
        let score = |i: usize| unigram_overlap(cands[i], &task);
        let best = sel.iter().map(|&i| score(i)).max()?;
        sel.into_iter().find(|&i| score(i) == best)
    }

    /// Instantiates macro step `k` with the given bindings, or `None` when
    /// no valid action fits.
    fn instantiate(&self, k: usize, bindings: &mut Vec<Option<String>>, history: &[AgentView], fp: u64) -> Option<Action> {
        let step = &self.macro_seq.actions[k];
        let view = history.last()?;
        let lexicon = Lexicon::bundled();
        let mut args: Vec<String> = Vec::with_capacity(step.slots.len());
        for (pos, slot) in step.slots.iter().enumerate() {
            let name = match bindings[slot.0 as usize].clone() {
                Some(bound) => bound,
                None => {
                    let cands = candidates(&view.valid_actions, step, pos, bindings);
                    if cands.is_empty() {
                        return None;
                    }
                    let ctx = BindContext { history, bindings, fingerprint: fp, lexicon };
                    let i = self.choose(*slot, &ctx, &cands)?;
                    let name = cands[i].to_string();
                    bindings[slot.0 as usize] = Some(name.clone());
                    name
                }
            };
            args.push(name);
        }
        let mut it = args.into_iter();
        let action = Action::new(step.verb, it.next(), it.next()).ok()?;
        view.valid_actions.contains(&action).then_some(action)
    }
}

impl Policy {
    pub fn single(p: InducedPolicy) -> Policy {
        Policy { constituents: vec![p] }
    }

    pub fn macro_keys(&self) -> Vec<String> {
        self.constituents.iter().map(|c| c.macro_seq.key()).collect()
    }

    pub fn start_episode(&self) -> EpisodeRunner<'_> {
        EpisodeRunner { policy: self, views: Vec::new(), executed: Vec::new(), fingerprint: 0 }
    }
}

/// Per-episode acting state: the views seen and the macro steps executed.
pub struct EpisodeRunner<'p> {
    policy: &'p Policy,
    views: Vec<AgentView>,
    executed: Vec<Action>,
    fingerprint: u64,
}

impl EpisodeRunner<'_> {
    /// Picks the next action. The first constituent whose macro agrees with
    /// the executed history and whose next step binds to a valid action
    /// drives; otherwise the policy looks around without advancing.
    pub fn act(&mut self, view: AgentView) -> Action {
        if self.views.is_empty() {
            self.fingerprint = episode_fingerprint(&view);
        }
        self.views.push(view);
        for c in &self.policy.constituents {
            let k = self.executed.len();
            if k >= c.macro_seq.len() {
                continue;
            }
            let Some(bound) = c.macro_seq.unify(&self.executed) else { continue };
            let mut bindings: Vec<Option<String>> =
                bound.into_iter().map(|b| (!b.is_empty()).then_some(b)).collect();
            if let Some(action) = c.instantiate(k, &mut bindings, &self.views, self.fingerprint) {
                self.executed.push(action.clone());
                return action;
            }
        }
        Action::new(Verb::LookAround, None, None).expect("nullary")
    }

    pub fn executed(&self) -> &[Action] {
        &self.executed
    }
}
