use serde::{Deserialize, Serialize};

use crate::engine::{Action, EpisodeSpec, Observation};
use crate::trajectory::{ReplayError, Trajectory};

/// What an agent sees at one step: the six prompt components plus the list
/// of valid actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentView {
    pub task_description: String,
    pub obs: String,
    pub inventory: String,
    pub look: String,
    /// Empty at the first step.
    pub prev_action: String,
    /// Empty at the first step.
    pub prev_obs: String,
    pub valid_actions: Vec<Action>,
}

impl AgentView {
    pub fn new(obs: &Observation, prev: Option<(&Action, &Observation)>) -> AgentView {
        let (prev_action, prev_obs) = match prev {
            Some((a, o)) => (a.to_string(), o.obs_text.clone()),
            None => (String::new(), String::new()),
        };
        AgentView {
            task_description: obs.task_description.clone(),
            obs: obs.obs_text.clone(),
            inventory: obs.inventory_text.clone(),
            look: obs.look_text.clone(),
            prev_action,
            prev_obs,
            valid_actions: obs.valid_actions.clone(),
        }
    }

    /// The behavior-cloning prompt string with the six components in order.
    pub fn render_prompt(&self) -> String {
        format!(
            "{} </s> OBS {} </s> INV {} </s> LOOK {} </s> <extra_id_0> </s> PACT {} </s> POBS {} </s>",
            self.task_description, self.obs, self.inventory, self.look, self.prev_action, self.prev_obs
        )
    }
}

/// One supervised example: the view at a step and the action taken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    /// Episode the record was generated from.
    pub source: EpisodeSpec,
    /// Step index within the episode; 0 starts a new episode.
    pub step: u32,
    #[serde(flatten)]
    pub view: AgentView,
    pub target_action: Action,
}

impl PromptRecord {
    pub fn render_prompt(&self) -> String {
        self.view.render_prompt()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("corrupt training selection: {0}")]
pub struct CorruptGroup(#[from] pub ReplayError);

/// One record per step of each trajectory's full path (prefix included).
pub fn emit_training_records<'a, I>(trajectories: I) -> Result<Vec<PromptRecord>, CorruptGroup>
where
    I: IntoIterator<Item = &'a Trajectory>,
{
    let mut out = Vec::new();
    for t in trajectories {
        let steps = t.replay()?;
        for (k, step) in steps.iter().enumerate() {
            let prev = k.checked_sub(1).map(|j| (&steps[j].action, &steps[j].before));
            out.push(PromptRecord {
                source: t.spec,
                step: k as u32,
                view: AgentView::new(&step.before, prev),
                target_action: step.action.clone(),
            });
        }
    }
    Ok(out)
}

/// Splits records into episodes at every `step == 0`.
pub fn episodes(records: &[PromptRecord]) -> Vec<&[PromptRecord]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=records.len() {
        if i == records.len() || records[i].step == 0 {
            if i > start {
                out.push(&records[start..i]);
            }
            start = i;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Game, Split};

    #[test]
    fn twc_gold_records() {
        let spec = (0..100)
            .map(|v| EpisodeSpec::new(Game::Twc, Split::Train, v, 0).unwrap())
            .find(|s| Trajectory::gold(s).unwrap().len() == 3)
            .unwrap();
        let t = Trajectory::gold(&spec).unwrap();
        let recs = emit_training_records([&t]).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].view.prev_action, "");
        assert_eq!(recs[0].view.prev_obs, "");
        assert_eq!(recs[1].view.prev_action, t.actions[0].to_string());
        assert_eq!(recs[1].view.prev_obs, recs[0].view.obs);
        let prompt = recs[1].render_prompt();
        for field in ["OBS ", "INV ", "LOOK ", "<extra_id_0>", "PACT ", "POBS "] {
            assert!(prompt.contains(field), "{field}");
        }
        let line = serde_json::to_string(&recs[2]).unwrap();
        assert_eq!(serde_json::from_str::<PromptRecord>(&line).unwrap(), recs[2]);
    }

    #[test]
    fn episodes_split_on_step_zero() {
        let ts: Vec<Trajectory> = (0..3)
            .map(|v| Trajectory::gold(&EpisodeSpec::new(Game::Arithmetic, Split::Train, v, 0).unwrap()).unwrap())
            .collect();
        let recs = emit_training_records(&ts).unwrap();
        let eps = episodes(&recs);
        assert_eq!(eps.len(), 3);
        assert!(eps.iter().all(|e| e.len() == 4));
    }
}
