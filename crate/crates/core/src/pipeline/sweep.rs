//! Data-quantity and data-quality sweeps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::crawler::crawl_to_reward;
use crate::engine::{EpisodeSpec, Split, STEP_LIMIT};
use crate::evaluator::evaluate_records;
use crate::hash::fnv1a;
use crate::policy::emit_training_records;
use crate::score::Score;
use crate::trajectory::Trajectory;

/// Repetitions per noise fraction.
pub const NOISE_REPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub size: u32,
    pub mean_score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub gold_fraction: Score,
    pub mean: f64,
    /// Sample standard deviation over the repetitions.
    pub std_dev: f64,
    pub runs: Vec<Score>,
}

/// The gold agent's trajectories for the first `count` training variations.
pub fn gold_trajectories(cfg: &PipelineConfig, count: u32) -> Result<Vec<Trajectory>, PipelineError> {
    EpisodeSpec::range(cfg.game, Split::Train, count, cfg.master_seed)?
        .par_iter()
        .map(|s| Trajectory::gold(s).map_err(PipelineError::from))
        .collect()
}

fn dev_mean(cfg: &PipelineConfig, label: &str, trajectories: &[&Trajectory]) -> Result<Score, PipelineError> {
    let records = emit_training_records(trajectories.iter().copied())?;
    let specs = EpisodeSpec::range(cfg.game, Split::Dev, cfg.dev_variations, cfg.master_seed)?;
    Ok(evaluate_records(&cfg.evaluator, label, &records, &specs, "dev")?.mean_score)
}

/// Trains on the trajectories of the first `n` distinct variations of
/// `source` (in variation order) for each `n`, scoring on development.
pub fn sweep_training_size(
    cfg: &PipelineConfig,
    source: &[Trajectory],
    sizes: &[u32],
) -> Result<Vec<SizeRow>, PipelineError> {
    let mut by_var: BTreeMap<u32, Vec<&Trajectory>> = BTreeMap::new();
    for t in source {
        by_var.entry(t.spec.variation).or_default().push(t);
    }
    let available = by_var.len() as u32;
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if n == 0 || n > available {
            return Err(PipelineError::Domain(format!("size {n} is outside 1..={available} available variations")));
        }
        let chosen: Vec<&Trajectory> = by_var.values().take(n as usize).flatten().copied().collect();
        let mean_score = dev_mean(cfg, &format!("size-{n}"), &chosen)?;
        tracing::info!(size = n, mean = %mean_score, "training-size point");
        rows.push(SizeRow { size: n, mean_score });
    }
    Ok(rows)
}

fn sub_seed(master: u64, what: &str, rep: usize) -> u64 {
    fnv1a(format!("{master}/{what}/{rep}").as_bytes())
}

/// A random winning trajectory: from the start, repeatedly pick a uniformly
/// random crawled path to the next reward until the game is won.
pub fn random_winning_trajectory(
    cfg: &PipelineConfig,
    spec: &EpisodeSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Trajectory>, PipelineError> {
    let mut prefix = Vec::new();
    loop {
        let found = match crawl_to_reward(spec, &prefix, &cfg.crawl) {
            Ok(f) => f,
            Err(crate::crawler::CrawlError::BudgetExhausted { partial, .. }) => partial,
            Err(e) => return Err(PipelineError::Domain(e.to_string())),
        };
        let Some(pick) = found.choose(rng) else {
            return Ok(None);
        };
        let full = pick.full_actions();
        if pick.final_score == Score::ONE {
            return Ok(Some(Trajectory::record(spec, &[], &full)?));
        }
        if full.len() as u32 >= STEP_LIMIT {
            return Ok(None);
        }
        prefix = full;
    }
}

/// One random winning trajectory per training variation that has one.
pub fn random_pool(cfg: &PipelineConfig, rep: usize) -> Result<BTreeMap<u32, Trajectory>, PipelineError> {
    let specs = EpisodeSpec::range(cfg.game, Split::Train, cfg.train_variations, cfg.master_seed)?;
    let found: Vec<(u32, Option<Trajectory>)> = specs
        .par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.master_seed, &format!("pool-{}", s.variation), rep));
            Ok((s.variation, random_winning_trajectory(cfg, s, &mut rng)?))
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(found.into_iter().filter_map(|(v, t)| t.map(|t| (v, t))).collect())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mixes gold and random winning trajectories. In each repetition a random
/// order of the training variations is drawn; at fraction `f` the first
/// `round(f * n)` variations use gold and the rest use the random pool, so
/// larger fractions strictly add gold within a repetition.
pub fn sweep_noise(cfg: &PipelineConfig, fractions: &[Score], reps: usize) -> Result<Vec<NoiseRow>, PipelineError> {
    if reps == 0 {
        return Err(PipelineError::Domain("at least one repetition is required".into()));
    }
    for f in fractions {
        if *f < Score::ZERO || *f > Score::ONE {
            return Err(PipelineError::Domain(format!("gold fraction {f} is outside [0, 1]")));
        }
    }
    let gold = gold_trajectories(cfg, cfg.train_variations)?;
    let mut runs: Vec<Vec<Score>> = vec![Vec::with_capacity(reps); fractions.len()];
    for rep in 0..reps {
        let pool = random_pool(cfg, rep)?;
        if pool.is_empty() {
            return Err(PipelineError::Domain("random pool is empty".into()));
        }
        let mut order: Vec<u32> = (0..cfg.train_variations).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(sub_seed(cfg.master_seed, "order", rep)));
        for (fi, f) in fractions.iter().enumerate() {
            let n = cfg.train_variations as i64;
            // round(f * n), half up, in exact arithmetic.
            let (p, q) = (f.numer(), f.denom());
            let n_gold = (2 * n * p + q) / (2 * q);
            let gold_set: Vec<u32> = order[..n_gold as usize].to_vec();
            let chosen: Vec<&Trajectory> = (0..cfg.train_variations)
                .filter_map(|v| {
                    if gold_set.contains(&v) {
                        Some(&gold[v as usize])
                    } else {
                        pool.get(&v)
                    }
                })
                .collect();
            let mean = dev_mean(cfg, &format!("noise-{f}-rep{rep}"), &chosen)?;
            tracing::info!(fraction = %f, rep, mean = %mean, "noise point");
            runs[fi].push(mean);
        }
    }
    Ok(fractions
        .iter()
        .zip(runs)
        .map(|(f, runs)| {
            let vals: Vec<f64> = runs.iter().map(|s| s.to_f64()).collect();
            let (mean, std_dev) = mean_std(&vals);
            NoiseRow { gold_fraction: *f, mean, std_dev, runs }
        })
        .collect())
}

/// Tab-separated table with a header row.
pub fn size_table(rows: &[SizeRow]) -> String {
    let mut out = String::from("size\tmean_score\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{:.6}", r.size, r.mean_score.to_f64());
    }
    out
}

/// Tab-separated table with a header row.
pub fn noise_table(rows: &[NoiseRow]) -> String {
    let mut out = String::from("gold_fraction\tmean_score\tstd_dev\truns\n");
    for r in rows {
        let _ = writeln!(out, "{:.6}\t{:.6}\t{:.6}\t{}", r.gold_fraction.to_f64(), r.mean, r.std_dev, r.runs.len());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Game;

    #[test]
    fn std_is_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-12);
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
    }

    #[test]
    fn random_trajectories_win() {
        let cfg = PipelineConfig::for_game(Game::Sorting);
        let spec = EpisodeSpec::new(Game::Sorting, Split::Train, 3, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = random_winning_trajectory(&cfg, &spec, &mut rng).unwrap().unwrap();
        assert_eq!(t.final_score, Score::ONE);
        t.replay().unwrap();
    }

    #[test]
    fn size_sweep_rows_and_domain() {
        let mut cfg = PipelineConfig::for_game(Game::Twc);
        cfg.dev_variations = 20;
        let gold = gold_trajectories(&cfg, 10).unwrap();
        let rows = sweep_training_size(&cfg, &gold, &[1, 10]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].mean_score <= rows[1].mean_score);
        assert!(sweep_training_size(&cfg, &gold, &[11]).is_err());
        let table = size_table(&rows);
        assert_eq!(table.lines().count(), 3);
        assert!(table.starts_with("size\tmean_score\n"));
    }
}
