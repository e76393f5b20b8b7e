use pathcrawl::engine::{generate_episode, Action, EpisodeSpec, Game, Split, STEP_LIMIT};
use pathcrawl::evaluator::protocol::{decode, encode, Response};
use pathcrawl::macros::{variabilize_actions, MacroSequence};
use pathcrawl::policy::{emit_training_records, episodes};
use pathcrawl::trajectory::Trajectory;
use pathcrawl::Score;
use proptest::prelude::*;

fn game() -> impl Strategy<Value = Game> {
    prop_oneof![Just(Game::Arithmetic), Just(Game::Sorting), Just(Game::Twc)]
}

fn split() -> impl Strategy<Value = Split> {
    prop_oneof![Just(Split::Train), Just(Split::Dev), Just(Split::Test)]
}

/// Plays `choices` as indices into the valid-action list.
fn random_walk(spec: &EpisodeSpec, choices: &[usize]) -> Vec<Action> {
    let mut s = generate_episode(spec).unwrap();
    let mut acts = Vec::new();
    for &c in choices {
        let valid = s.valid_actions();
        if valid.is_empty() {
            break;
        }
        let a = valid[c % valid.len()].clone();
        s = s.step(&a).unwrap().0;
        acts.push(a);
    }
    acts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scores_never_decrease_and_freeze_after_failure(
        g in game(), sp in split(), v in 0u32..100, choices in prop::collection::vec(any::<usize>(), 0..70)
    ) {
        let spec = EpisodeSpec::new(g, sp, v, 7).unwrap();
        let mut s = generate_episode(&spec).unwrap();
        let mut last = s.score();
        for c in choices {
            let valid = s.valid_actions();
            if s.is_done() {
                prop_assert!(valid.is_empty());
                break;
            }
            let (next, obs) = s.step(&valid[c % valid.len()]).unwrap();
            prop_assert!(next.score() >= last);
            prop_assert_eq!(obs.score, next.score());
            prop_assert!(next.steps() <= STEP_LIMIT);
            if next.is_failed() {
                prop_assert!(next.is_done());
                prop_assert_eq!(next.score(), last);
            }
            last = next.score();
            s = next;
        }
        prop_assert!(s.score() >= Score::ZERO && s.score() <= Score::ONE);
    }

    #[test]
    fn generation_is_deterministic(g in game(), sp in split(), v in 0u32..100, seed in any::<u64>()) {
        let spec = EpisodeSpec::new(g, sp, v, seed).unwrap();
        let a = generate_episode(&spec).unwrap();
        let b = generate_episode(&spec).unwrap();
        prop_assert_eq!(a.canonical_bytes(), b.canonical_bytes());
        prop_assert_eq!(a.observation(), b.observation());
    }

    #[test]
    fn variabilized_paths_unify_with_their_bindings(
        g in game(), v in 0u32..100, choices in prop::collection::vec(any::<usize>(), 1..8)
    ) {
        let spec = EpisodeSpec::new(g, Split::Train, v, 0).unwrap();
        let acts = random_walk(&spec, &choices);
        let (m, binding) = variabilize_actions(&acts);
        prop_assert_eq!(m.len(), acts.len());
        prop_assert_eq!(m.unify(&acts), Some(binding.clone()));
        // Distinct slots bind distinct objects.
        let mut sorted = binding.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), binding.len());
        let parsed: MacroSequence = m.key().parse().unwrap();
        prop_assert_eq!(parsed, m);
    }

    #[test]
    fn records_cover_every_step_once(
        g in game(), v in 0u32..100, choices in prop::collection::vec(any::<usize>(), 1..12)
    ) {
        let spec = EpisodeSpec::new(g, Split::Train, v, 0).unwrap();
        let acts = random_walk(&spec, &choices);
        let t = Trajectory::record(&spec, &[], &acts).unwrap();
        let recs = emit_training_records([&t]).unwrap();
        prop_assert_eq!(recs.len(), acts.len());
        let eps = episodes(&recs);
        prop_assert_eq!(eps.len(), 1);
        for (k, r) in recs.iter().enumerate() {
            prop_assert_eq!(r.step as usize, k);
            prop_assert_eq!(&r.target_action, &acts[k]);
            prop_assert!(r.view.valid_actions.contains(&acts[k]));
        }
    }

    #[test]
    fn exact_means_stay_in_range(nums in prop::collection::vec((0i64..=20, 1i64..=20), 1..30)) {
        let scores: Vec<Score> = nums.iter().map(|&(n, d)| Score::new(n.min(d), d)).collect();
        let m = Score::mean(scores.iter().copied());
        prop_assert!(m >= *scores.iter().min().unwrap());
        prop_assert!(m <= *scores.iter().max().unwrap());
        let r = m.ratio_capped(scores[0]);
        prop_assert!(r >= Score::ZERO && r <= Score::ONE);
        let back: Score = m.to_string().parse().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn protocol_messages_round_trip(episode in "[a-z]{1,8}-[0-9]{1,2}", action in "[a-z ]{0,20}") {
        let msg = Response::Act { episode, action };
        let line = encode(&msg);
        prop_assert!(!line.contains('\n'));
        prop_assert_eq!(decode::<Response>(&line).unwrap(), msg);
    }
}
