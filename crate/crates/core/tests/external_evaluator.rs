use std::collections::BTreeMap;

use pathcrawl::engine::{EpisodeSpec, Game, Split};
use pathcrawl::evaluator::{evaluate_records, EvalError, EvaluatorBinding};
use pathcrawl::pipeline::{Phase, Pipeline, PipelineConfig, PipelineError, RunOptions};
use pathcrawl::policy::{emit_training_records, PromptRecord};
use pathcrawl::trajectory::Trajectory;
use pathcrawl::Score;

const EVALUATOR: &str = env!("CARGO_BIN_EXE_pathcrawl-evaluator");

fn external(args: &[&str], timeout_secs: u64) -> EvaluatorBinding {
    let mut command = vec![EVALUATOR.to_string()];
    command.extend(args.iter().map(|s| s.to_string()));
    EvaluatorBinding::ExternalProcess { command, config: serde_json::Value::Null, timeout_secs }
}

fn gold_records(game: Game, n: u32) -> Vec<PromptRecord> {
    let ts: Vec<Trajectory> = EpisodeSpec::range(game, Split::Train, n, 0)
        .unwrap()
        .iter()
        .map(|s| Trajectory::gold(s).unwrap())
        .collect();
    emit_training_records(&ts).unwrap()
}

fn dev(game: Game, n: u32) -> Vec<EpisodeSpec> {
    EpisodeSpec::range(game, Split::Dev, n, 0).unwrap()
}

#[test]
fn reference_process_matches_in_process_builtin() {
    for game in Game::ALL {
        let recs = gold_records(game, 15);
        let specs = dev(game, 15);
        let a = evaluate_records(&EvaluatorBinding::default(), "gold", &recs, &specs, "dev").unwrap();
        let b = evaluate_records(&external(&[], 30), "gold", &recs, &specs, "dev").unwrap();
        assert_eq!(a, b, "{game}");
    }
}

#[test]
fn invalid_and_malformed_answers_abort_single_episodes() {
    let recs = gold_records(Game::Sorting, 5);
    let specs = dev(Game::Sorting, 4);
    for mode in ["invalid-action", "malformed"] {
        let r = evaluate_records(&external(&["--misbehave", mode, "--after", "3"], 30), "g", &recs, &specs, "dev")
            .unwrap();
        assert_eq!(r.per_episode.len(), 4, "{mode}");
        // The first three answers are normal, then every episode aborts.
        assert!(r.per_episode.values().all(|e| e.aborted), "{mode}");
        assert_eq!(r.per_episode[&0].steps, 3, "{mode}");
        assert!(r.per_episode.values().skip(1).all(|e| e.steps == 0), "{mode}");
        assert!(r.is_consistent());
    }
}

#[test]
fn crash_and_hang_fail_with_partial_results() {
    let recs = gold_records(Game::Twc, 5);
    let specs = dev(Game::Twc, 5);
    for (mode, timeout) in [("crash", 30), ("hang", 1)] {
        let r = evaluate_records(&external(&["--misbehave", mode, "--after", "5"], timeout), "g", &recs, &specs, "dev");
        match r {
            Err(EvalError::EvaluatorFailure { partial, .. }) => {
                assert!(!partial.is_empty(), "{mode}");
                assert!(partial.len() < 5, "{mode}");
            }
            other => panic!("{mode}: unexpected {other:?}"),
        }
    }
}

#[test]
fn scripted_evaluator_replays_fixed_actions() {
    let dir = tempfile::tempdir().unwrap();
    let spec = EpisodeSpec::new(Game::Twc, Split::Dev, 0, 0).unwrap();
    let gold = Trajectory::gold(&spec).unwrap();
    let mut script = BTreeMap::new();
    script.insert(spec.tag(), gold.actions.iter().map(|a| a.to_string()).collect::<Vec<_>>());
    let path = dir.path().join("script.json");
    std::fs::write(&path, serde_json::to_vec(&script).unwrap()).unwrap();
    let recs = gold_records(Game::Twc, 2);
    let binding = external(&["--script", path.to_str().unwrap()], 30);
    let r = evaluate_records(&binding, "scripted", &recs, &dev(Game::Twc, 2), "dev").unwrap();
    assert_eq!(r.per_episode[&0].score, Score::ONE);
    // Unscripted episodes only look around.
    assert_eq!(r.per_episode[&1].score, Score::ZERO);
    assert_eq!(r.per_episode[&1].steps, 50);
}

#[test]
fn crashing_evaluator_does_not_crash_the_pipeline() {
    let mut cfg = PipelineConfig::for_game(Game::Sorting);
    cfg.train_variations = 10;
    cfg.dev_variations = 5;
    cfg.evaluator = external(&["--misbehave", "crash", "--after", "2"], 30);
    let mut p = Pipeline::new(cfg, RunOptions::default()).unwrap();
    match p.run_segment() {
        Err(PipelineError::NoAcceptance { manifest, .. }) => {
            let groups: Vec<_> = manifest.entries(0, Phase::Group).collect();
            assert_eq!(groups.len(), 10);
            assert!(groups.iter().all(|e| e.error.is_some() && e.mean_score.is_none()));
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("a crashing evaluator cannot accept"),
    }
}
