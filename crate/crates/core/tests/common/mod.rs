//! Randomized micro-games and a brute-force path oracle.
#![allow(dead_code)]

use pathcrawl::crawler::{Simulator, Transition};
use pathcrawl::Score;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    pub to: u8,
    pub reward: Score,
    pub done: bool,
    pub failed: bool,
}

/// A small explicit graph: state = node id, moves = outgoing edge indices.
#[derive(Debug, Clone)]
pub struct MicroGame {
    pub edges: Vec<Vec<Edge>>,
}

impl MicroGame {
    pub fn random(seed: u64) -> MicroGame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=7usize);
        let edges = (0..n)
            .map(|_| {
                let b = rng.random_range(0..=4usize);
                (0..b)
                    .map(|_| {
                        let reward = match rng.random_range(0..10) {
                            0 | 1 => Score::ONE,
                            2 => Score::HALF,
                            _ => Score::ZERO,
                        };
                        let r = rng.random_range(0..10);
                        Edge { to: rng.random_range(0..n) as u8, reward, done: r == 0, failed: r == 1 }
                    })
                    .collect()
            })
            .collect();
        MicroGame { edges }
    }
}

impl Simulator for MicroGame {
    type State = u8;
    type Move = u8;

    fn moves(&self, state: &u8, out: &mut Vec<u8>) {
        out.extend(0..self.edges[*state as usize].len() as u8);
    }

    fn apply(&self, state: &u8, mv: u8) -> Transition<u8> {
        let e = self.edges[*state as usize][mv as usize];
        Transition { state: e.to, reward: e.reward, done: e.done, failed: e.failed }
    }

    fn key(&self, state: &u8) -> u64 {
        *state as u64
    }
}

/// Every move sequence of length 1..=horizon, enumerated independently of
/// the search order, filtered by the crawl contract: only the last step is
/// rewarded, no earlier step ends or fails the game, and with `dedup` no
/// intermediate state repeats the root or an earlier state.
pub fn brute_force(game: &MicroGame, root: u8, horizon: usize, dedup: bool) -> Vec<(Vec<u8>, Score)> {
    let mut out = Vec::new();
    for len in 1..=horizon {
        let total = 4usize.pow(len as u32);
        'seq: for code in 0..total {
            let seq: Vec<u8> = (0..len).map(|i| ((code / 4usize.pow((len - 1 - i) as u32)) % 4) as u8).collect();
            let mut state = root;
            let mut seen = vec![root];
            for (i, &mv) in seq.iter().enumerate() {
                let Some(e) = game.edges[state as usize].get(mv as usize) else { continue 'seq };
                let last = i + 1 == len;
                if last {
                    if e.reward > Score::ZERO {
                        out.push((seq.clone(), e.reward));
                    }
                    continue 'seq;
                }
                if e.reward > Score::ZERO || e.done || e.failed {
                    continue 'seq;
                }
                if dedup && seen.contains(&e.to) {
                    continue 'seq;
                }
                seen.push(e.to);
                state = e.to;
            }
        }
    }
    out.sort();
    out
}
