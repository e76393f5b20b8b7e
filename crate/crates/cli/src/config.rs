//! The run configuration file (TOML).
//!
//! Only `game` is required; every other field falls back to that game's
//! preset. Unknown keys are rejected at every level.
//!
//! ```toml
//! game = "twc"                 # arithmetic | sorting | twc
//! master_seed = 0
//! out_dir = "runs/twc"         # all artifacts land here
//! workers = 4                  # 0 = one per core
//! log = "info"                 # error | warn | info | debug | trace
//! k = 10
//! threshold = 0.95             # decimal or "19/20"
//! merge_top = 5
//! flip_on_merge = true
//! merge_choice = "per-episode" # or "aggregate"
//! train_variations = 100
//! dev_variations = 100
//! max_segments = 12
//!
//! [crawl]
//! horizon = 6
//! dedup = true
//! max_nodes = 5000000
//!
//! [evaluator]
//! kind = "builtin-rule-induction"
//! # kind = "external-process"
//! # command = ["pathcrawl-evaluator"]
//! # timeout_secs = 60
//!
//! [sweep]
//! sizes = [1, 5, 10, 25, 50, 100]
//! fractions = [0.0, 0.25, 0.5, 0.75, 1.0]
//! reps = 5
//! source = "gold"              # or "pipeline" (training-size sweep only)
//! ```

use std::path::{Path, PathBuf};

use pathcrawl::engine::Game;
use pathcrawl::evaluator::EvaluatorBinding;
use pathcrawl::pipeline::{sweep::NOISE_REPS, MergeChoice, PipelineConfig};
use pathcrawl::Score;
use serde::Deserialize;

/// A rational written either as a TOML number or a string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Rational {
    Number(f64),
    Text(String),
}

impl Rational {
    fn to_score(&self) -> Result<Score, String> {
        let text = match self {
            Rational::Number(x) => x.to_string(),
            Rational::Text(s) => s.clone(),
        };
        text.parse::<Score>()
            .ok()
            .or_else(|| Score::from_decimal_str(&text))
            .ok_or_else(|| format!("not a rational number: {text:?}"))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrawlSection {
    pub horizon: Option<usize>,
    pub dedup: Option<bool>,
    pub max_nodes: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSource {
    #[default]
    Gold,
    Pipeline,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sizes: Option<Vec<u32>>,
    pub fractions: Option<Vec<Rational>>,
    pub reps: Option<usize>,
    #[serde(default)]
    pub source: SweepSource,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub game: Game,
    pub master_seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub log: Option<String>,
    pub k: Option<usize>,
    pub threshold: Option<Rational>,
    pub merge_top: Option<usize>,
    pub flip_on_merge: Option<bool>,
    pub merge_choice: Option<MergeChoice>,
    pub train_variations: Option<u32>,
    pub dev_variations: Option<u32>,
    pub max_segments: Option<usize>,
    #[serde(default)]
    pub crawl: CrawlSection,
    pub evaluator: Option<EvaluatorBinding>,
    #[serde(default)]
    pub sweep: SweepSection,
}

/// A loaded configuration: the parsed file, the resolved pipeline config
/// and the raw document for echoing into the manifest.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub file: RunConfigFile,
    pub pipeline: PipelineConfig,
    pub echo: serde_json::Value,
    pub out_dir: PathBuf,
}

impl Loaded {
    pub fn sizes(&self) -> Vec<u32> {
        self.file.sweep.sizes.clone().unwrap_or_else(|| {
            [1, 5, 10, 25, 50, 100].into_iter().filter(|&n| n <= self.pipeline.train_variations).collect()
        })
    }

    pub fn fractions(&self) -> Result<Vec<Score>, String> {
        match &self.file.sweep.fractions {
            Some(fs) => fs.iter().map(Rational::to_score).collect(),
            None => Ok(["0", "0.25", "0.5", "0.75", "1"].iter().map(|s| Score::from_decimal_str(s).unwrap()).collect()),
        }
    }

    pub fn reps(&self) -> usize {
        self.file.sweep.reps.unwrap_or(NOISE_REPS)
    }
}

pub fn load(path: &Path) -> Result<Loaded, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses a config document. A relative `out_dir` resolves against `base`.
pub fn parse(text: &str, base: &Path) -> Result<Loaded, String> {
    let raw: toml::Value = toml::from_str(text).map_err(|e| e.to_string())?;
    let file: RunConfigFile = raw.clone().try_into().map_err(|e: toml::de::Error| e.to_string())?;
    let echo = serde_json::to_value(&raw).map_err(|e| e.to_string())?;

    let mut cfg = PipelineConfig::for_game(file.game);
    if let Some(v) = file.master_seed {
        cfg.master_seed = v;
    }
    if let Some(v) = file.k {
        cfg.k = v;
    }
    if let Some(v) = &file.threshold {
        cfg.threshold = v.to_score()?;
    }
    if let Some(v) = file.merge_top {
        cfg.merge_top = v;
    }
    if let Some(v) = file.flip_on_merge {
        cfg.flip_on_merge = v;
    }
    if let Some(v) = file.merge_choice {
        cfg.merge_choice = v;
    }
    if let Some(v) = file.train_variations {
        cfg.train_variations = v;
    }
    if let Some(v) = file.dev_variations {
        cfg.dev_variations = v;
    }
    if let Some(v) = file.max_segments {
        cfg.max_segments = v;
    }
    if let Some(v) = file.crawl.horizon {
        cfg.crawl.horizon = v;
    }
    if let Some(v) = file.crawl.dedup {
        cfg.crawl.dedup = v;
    }
    if let Some(v) = file.crawl.max_nodes {
        cfg.crawl.max_nodes = v;
    }
    if let Some(v) = &file.evaluator {
        cfg.evaluator = v.clone();
    }
    cfg.validate()?;
    if let Some(level) = &file.log {
        level.parse::<tracing::Level>().map_err(|_| format!("unknown log level {level:?}"))?;
    }
    let out_dir = match &file.out_dir {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => base.join(p),
        None => base.join(format!("pathcrawl-{}", file.game)),
    };
    let loaded = Loaded { file, pipeline: cfg, echo, out_dir };
    loaded.fractions()?;
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_come_from_the_game_preset() {
        let l = parse("game = \"sorting\"\n[crawl]\nmax_nodes = 1000\n", Path::new("/tmp")).unwrap();
        assert_eq!(l.pipeline.threshold, Score::new(1, 2));
        assert_eq!(l.pipeline.crawl.horizon, 4);
        assert_eq!(l.pipeline.crawl.max_nodes, 1000);
        assert_eq!(l.out_dir, Path::new("/tmp/pathcrawl-sorting"));
        assert_eq!(l.echo["crawl"]["max_nodes"], 1000);
    }

    #[test]
    fn thresholds_parse_exactly() {
        let a = parse("game = \"twc\"\nthreshold = 0.95\n", Path::new(".")).unwrap();
        let b = parse("game = \"twc\"\nthreshold = \"19/20\"\n", Path::new(".")).unwrap();
        assert_eq!(a.pipeline.threshold, Score::new(19, 20));
        assert_eq!(b.pipeline.threshold, Score::new(19, 20));
    }

    #[test]
    fn bad_documents_are_rejected() {
        for doc in [
            "game = \"chess\"",
            "game = \"twc\"\nbogus = 1",
            "game = \"twc\"\n[crawl]\ndepth = 3",
            "game = \"twc\"\nthreshold = 1.5",
            "game = \"twc\"\nmerge_top = 20",
            "game = \"twc\"\nlog = \"loud\"",
            "game = \"twc\"\n[evaluator]\nkind = \"oracle\"",
        ] {
            assert!(parse(doc, Path::new(".")).is_err(), "{doc}");
        }
    }
}
