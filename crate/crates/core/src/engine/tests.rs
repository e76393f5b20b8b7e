use super::*;
use crate::score::Score;

fn spec(game: Game, split: Split, v: u32) -> EpisodeSpec {
    EpisodeSpec::new(game, split, v, 7).unwrap()
}

fn play(state: &GameState, actions: &[Action]) -> (GameState, Vec<Observation>) {
    let mut s = state.clone();
    let mut obs = Vec::new();
    for a in actions {
        let (next, o) = s.step(a).unwrap_or_else(|e| panic!("{a}: {e}"));
        obs.push(o);
        s = next;
    }
    (s, obs)
}

#[test]
fn gold_solves_a_sample_of_each_game() {
    for game in Game::ALL {
        for v in 0..10 {
            let s0 = generate_episode(&spec(game, Split::Train, v)).unwrap();
            let (end, _) = play(&s0, &gold_actions(&s0));
            assert_eq!(end.score(), Score::ONE, "{game} {v}");
            assert!(end.is_done() && !end.is_failed());
        }
    }
}

#[test]
fn forced_arithmetic_problem_has_operator_distractors() {
    let opts = GenerationOptions {
        forced_problem: Some(ArithmeticProblem::new(Operator::Add, 42, 9)),
        ..GenerationOptions::default()
    };
    let s0 = generate_episode_with(&spec(Game::Arithmetic, Split::Train, 0), &opts).unwrap();
    let mags: Vec<u32> = s0.objects().iter().filter_map(|o| o.quantity.map(|q| q.magnitude)).collect();
    assert_eq!(mags.len(), 6);
    for v in [51, 33, 378, 4] {
        assert!(mags.contains(&v), "{v} missing from {mags:?}");
    }
    let look = &s0.observation().look_text;
    assert!(look.contains("51 "), "{look}");
}

#[test]
fn arithmetic_scoring_and_failure_freeze() {
    let opts = GenerationOptions {
        forced_problem: Some(ArithmeticProblem::new(Operator::Add, 42, 9)),
        ..GenerationOptions::default()
    };
    let s0 = generate_episode_with(&spec(Game::Arithmetic, Split::Train, 0), &opts).unwrap();
    let names: Vec<String> = s0.objects().into_iter().map(|o| o.name).collect();
    let wrong = names.iter().find(|n| n.starts_with("33 ")).unwrap().clone();

    let (s1, o) = play(&s0, &[Action::take(MATH_PROBLEM)]);
    assert!(o[0].valid_actions.contains(&Action::read(MATH_PROBLEM)));
    let (s2, o) = play(&s1, &[Action::read(MATH_PROBLEM)]);
    assert_eq!(o[0].reward_delta, Score::HALF);
    assert!(o[0].obs_text.contains("add 42 and 9"));
    let (s3, o) = play(&s2, &[Action::take(&*wrong), Action::put(&*wrong, ANSWER_BOX)]);
    assert!(o[1].failed && o[1].done);
    assert_eq!(s3.score(), Score::HALF);
    assert!(s3.valid_actions().is_empty());
}

#[test]
fn twc_closed_container_blocks_put_until_opened() {
    let found = (0..100).find_map(|v| {
        let s0 = generate_episode(&spec(Game::Twc, Split::Train, v)).unwrap();
        let gold = gold_actions(&s0);
        (gold.len() == 3).then_some((s0, gold))
    });
    let (s0, gold) = found.expect("some TWC episode needs an open");
    let (s1, o) = play(&s0, &gold[..1]);
    assert_eq!(o[0].reward_delta, Score::HALF);
    let container = gold[1].arg1.clone().unwrap();
    assert!(!s1.valid_actions().iter().any(|a| a.verb == Verb::Put && a.arg2.as_deref() == Some(&*container)));
    assert!(s0.observation().look_text.contains(&format!("{container} that is closed")));
}

#[test]
fn sorting_rewards_each_correct_placement() {
    let s0 = generate_episode(&spec(Game::Sorting, Split::Dev, 3)).unwrap();
    let gold = gold_actions(&s0);
    let n = gold.len() as i64 / 2;
    let (_, obs) = play(&s0, &gold);
    for (k, o) in obs.iter().enumerate() {
        let expected = if k % 2 == 1 { Score::new(1, n) } else { Score::ZERO };
        assert_eq!(o.reward_delta, expected);
    }
}

#[test]
fn action_text_round_trips() {
    for game in Game::ALL {
        let s0 = generate_episode(&spec(game, Split::Test, 5)).unwrap();
        let (_, obs) = play(&s0, &gold_actions(&s0)[..1]);
        for a in s0.valid_actions().iter().chain(&obs[0].valid_actions) {
            assert_eq!(Action::parse(&a.to_string()).unwrap(), *a);
        }
    }
}

#[test]
fn step_limit_ends_the_episode() {
    let mut s = generate_episode(&spec(Game::Sorting, Split::Train, 1)).unwrap();
    for _ in 0..STEP_LIMIT {
        assert!(!s.is_done());
        s = s.step(&Action::look_around()).unwrap().0;
    }
    assert!(s.is_done());
    assert_eq!(s.steps(), STEP_LIMIT);
}
