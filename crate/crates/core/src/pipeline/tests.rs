use super::*;
use crate::engine::Game;

fn small(game: Game, train: u32, dev: u32) -> PipelineConfig {
    let mut cfg = PipelineConfig::for_game(game);
    cfg.train_variations = train;
    cfg.dev_variations = dev;
    cfg
}

#[test]
fn sorting_first_segment_accepts_take_put() {
    let mut p = Pipeline::new(small(Game::Sorting, 30, 30), RunOptions::default()).unwrap();
    let seg = p.run_segment().unwrap();
    assert_eq!(seg.accepted.key(), "Take(X) Put(X,Y)");
    assert!(seg.accepted_score >= Score::HALF);
    // Accepted first: exactly one evaluation, nothing after it.
    assert_eq!(p.manifest().evaluations.len(), 1);
}

#[test]
fn k1_stops_after_one_evaluation() {
    let mut cfg = small(Game::Sorting, 20, 20);
    cfg.k = 1;
    cfg.merge_top = 1;
    let mut p = Pipeline::new(cfg, RunOptions::default()).unwrap();
    p.run_segment().unwrap();
    assert_eq!(p.manifest().evaluations.len(), 1);
}

#[test]
fn arithmetic_rejects_readless_then_accepts_read() {
    let mut p = Pipeline::new(small(Game::Arithmetic, 30, 30), RunOptions::default()).unwrap();
    let seg = p.run_segment().unwrap();
    assert_eq!(seg.accepted.key(), "Take(X) Read(X)");
    let groups: Vec<&EvaluationEntry> = p.manifest().entries(0, Phase::Group).collect();
    assert_eq!(groups.last().unwrap().group_key, "Take(X) Read(X)");
    let readless = groups.iter().find(|e| e.group_key == "Take(X) Put(X,Y)").unwrap();
    assert!(readless.relative_score.unwrap() < p.config().threshold);
}

#[test]
fn arithmetic_full_run_is_deterministic_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out_dir: Some(dir.path().to_path_buf()), config_echo: None };
    let cfg = small(Game::Arithmetic, 25, 25);
    let a = run_full(cfg.clone(), opts.clone()).unwrap();
    let bytes_a = std::fs::read(dir.path().join(checkpoint::MANIFEST_FILE)).unwrap();
    let evals = std::fs::read_dir(dir.path().join("evals")).unwrap().count();

    let b = run_full(cfg.clone(), opts).unwrap();
    let bytes_b = std::fs::read(dir.path().join(checkpoint::MANIFEST_FILE)).unwrap();
    assert_eq!(bytes_a, bytes_b);
    assert_eq!(evals, std::fs::read_dir(dir.path().join("evals")).unwrap().count());
    assert_eq!(a.records, b.records);

    // Without a checkpoint the manifest is the same too.
    let c = run_full(cfg, RunOptions::default()).unwrap();
    assert_eq!(c.manifest, a.manifest);

    assert!(a.manifest.accepted_keys.iter().any(|k| k == "Take(X) Read(X) Take(Y) Put(Y,Z)"));
    for t in &a.trajectories {
        assert_eq!(t.final_score, Score::ONE);
        assert!(t.prefix.is_empty() || t.replay().is_ok());
    }
    let on_disk: Vec<PromptRecord> = checkpoint::read_jsonl(&dir.path().join(checkpoint::TRAINING_DATA_FILE)).unwrap();
    assert_eq!(on_disk, a.records);
}

#[test]
fn too_few_groups_to_merge_halts_with_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Game::Arithmetic, 15, 15);
    cfg.k = 1;
    cfg.merge_top = 1;
    let opts = RunOptions { out_dir: Some(dir.path().to_path_buf()), config_echo: None };
    match run_full(cfg, opts) {
        Err(PipelineError::NoAcceptance { segment: 0, best, manifest }) => {
            assert_eq!(best.unwrap().group_key, "Take(X) Put(X,Y)");
            assert!(matches!(manifest.outcome, Outcome::NoAcceptance { .. }));
        }
        other => panic!("unexpected {:?}", other.map(|o| o.manifest)),
    }
    let m: Manifest = checkpoint::read_json(&dir.path().join(checkpoint::MANIFEST_FILE)).unwrap();
    assert_eq!(m.evaluations.len(), 1);
    assert!(dir.path().join(checkpoint::REPORTS_FILE).exists());
    assert!(!dir.path().join(checkpoint::TRAINING_DATA_FILE).exists());
}

#[test]
fn twc_second_segment_needs_a_merge() {
    let mut p = Pipeline::new(small(Game::Twc, 40, 40), RunOptions::default()).unwrap();
    let seg0 = p.run_segment().unwrap();
    assert_eq!(seg0.accepted.key(), "Take(X)");
    let seg1 = p.run_segment().unwrap();
    assert!(seg1.accepted.is_merged(), "accepted {}", seg1.accepted.key());
    let keys = &seg1.accepted.constituents;
    assert!(keys.contains(&"Take(X) Put(X,Y)".to_string()), "{keys:?}");
    assert!(keys.contains(&"Take(X) Open(Y) Put(X,Y)".to_string()), "{keys:?}");
    let m = p.manifest();
    assert_eq!(m.entries(1, Phase::Merged).count(), 10);
    for e in m.entries(1, Phase::Group) {
        assert!(e.relative_score.unwrap() < Score::new(19, 20));
    }
    for e in m.evaluations.iter().filter(|e| e.phase != Phase::Group) {
        let scored = if e.split_evaluated == "dev" { Split::Dev } else { Split::Train };
        assert!(!e.training_splits.contains(&scored));
    }
    assert!(p.is_complete());
}
