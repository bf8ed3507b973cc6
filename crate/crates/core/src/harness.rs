//! Pairwise evaluation over a gold-standard network: sample node pairs,
//! generate mixed datasets on an `(m, n)` grid, score and predict, and
//! summarize the errors as CSV tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discovery::{HypothesisSet, ModelAverage, PairHypothesis, ParameterPrior};
use crate::error::{Error, Result};
use crate::evalmetrics::{gold_pair, mperr_against, operr_against, GoldPair};
use crate::inference::Evidence;
use crate::model::{CausalNetwork, ConfounderRule, NetworkStructure, PairClass, VarId};
use crate::netio::read_network_file;
use crate::sampler::{derive_seed, generate_mix, MixSpec};

const PAIR_STREAM: u64 = 0x7061_6972;

fn default_sample_size() -> usize {
    100
}

fn default_grid() -> Vec<usize> {
    vec![0, 50, 100, 300, 500]
}

fn default_replications() -> usize {
    1
}

/// Experiment settings, usually read from a TOML file:
///
/// ```toml
/// network = "alarm.cbn"
/// pair_sample_size = 100
/// m_grid = [0, 50, 100, 300, 500]
/// n_grid = [0, 50, 100, 300, 500]
/// replications = 3
/// seed = 7
/// output_dir = "tables"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: PathBuf,
    /// Pairs drawn uniformly from all pairs; only the unconfounded ones are
    /// evaluated.
    #[serde(default = "default_sample_size")]
    pub pair_sample_size: usize,
    /// When set, draw this many pairs from each unconfounded category
    /// instead of using `pair_sample_size`.
    #[serde(default)]
    pub pairs_per_category: Option<usize>,
    #[serde(default = "default_grid")]
    pub m_grid: Vec<usize>,
    #[serde(default = "default_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub confounder_rule: ConfounderRule,
}

impl ExperimentConfig {
    pub fn new(network: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            network: network.into(),
            pair_sample_size: default_sample_size(),
            pairs_per_category: None,
            m_grid: default_grid(),
            n_grid: default_grid(),
            replications: default_replications(),
            seed: 0,
            output_dir: output_dir.into(),
            confounder_rule: ConfounderRule::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Relative `network` and `output_dir` paths are
    /// resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.network.is_relative() {
            cfg.network = base.join(&cfg.network);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() || self.n_grid.is_empty() {
            return Err(Error::Config("m and n grids must be nonempty".into()));
        }
        if let Some(m) = self.m_grid.iter().find(|m| *m % 2 != 0) {
            return Err(Error::Config(format!("m grid value {m} is odd")));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        Ok(())
    }
}

/// The unconfounded pair categories that are scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairCategory {
    RelatedUnconfounded,
    UnrelatedUnconfounded,
}

impl PairCategory {
    pub const ALL: [PairCategory; 2] = [Self::RelatedUnconfounded, Self::UnrelatedUnconfounded];

    pub fn name(self) -> &'static str {
        match self {
            Self::RelatedUnconfounded => "related_unconfounded",
            Self::UnrelatedUnconfounded => "unrelated_unconfounded",
        }
    }

    pub fn of(class: PairClass) -> Option<Self> {
        match (class.causally_related, class.confounded) {
            (true, false) => Some(Self::RelatedUnconfounded),
            (false, false) => Some(Self::UnrelatedUnconfounded),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Serr,
    Operr,
    Mperr,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Self::Serr, Self::Operr, Self::Mperr];

    pub fn name(self) -> &'static str {
        match self {
            Self::Serr => "serr",
            Self::Operr => "operr",
            Self::Mperr => "mperr",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampledPair {
    pub x: VarId,
    pub y: VarId,
    pub class: PairClass,
    /// Ground-truth hypothesis over `(x, y)`; `None` for confounded pairs.
    pub truth: Option<PairHypothesis>,
}

impl SampledPair {
    pub fn category(&self) -> Option<PairCategory> {
        PairCategory::of(self.class)
    }
}

fn annotate(s: &NetworkStructure, x: VarId, y: VarId, rule: ConfounderRule) -> Result<SampledPair> {
    let class = s.classify_pair(x, y, rule)?;
    let truth = match PairCategory::of(class) {
        None => None,
        Some(PairCategory::UnrelatedUnconfounded) => Some(PairHypothesis::Unrelated),
        Some(PairCategory::RelatedUnconfounded) => Some(if s.ancestors(y)?.contains(&x) {
            PairHypothesis::XCausesY
        } else {
            PairHypothesis::YCausesX
        }),
    };
    Ok(SampledPair { x, y, class, truth })
}

/// All unordered pairs `(x, y)` with `x < y`.
pub fn all_pairs(s: &NetworkStructure) -> Vec<(VarId, VarId)> {
    let n = s.len();
    (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect()
}

/// Uniform sample of `count` distinct pairs, each classified.
pub fn sample_pairs<R: Rng + ?Sized>(
    s: &NetworkStructure,
    count: usize,
    rng: &mut R,
    rule: ConfounderRule,
) -> Result<Vec<SampledPair>> {
    let pairs = all_pairs(s);
    if count > pairs.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {count} pairs from {}",
            pairs.len()
        )));
    }
    let mut picked = index::sample(rng, pairs.len(), count).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .map(|i| annotate(s, pairs[i].0, pairs[i].1, rule))
        .collect()
}

/// Uniform sample of `count` pairs from a single category.
pub fn sample_category_pairs<R: Rng + ?Sized>(
    s: &NetworkStructure,
    category: PairCategory,
    count: usize,
    rng: &mut R,
    rule: ConfounderRule,
) -> Result<Vec<SampledPair>> {
    let pool = all_pairs(s)
        .into_iter()
        .map(|(x, y)| annotate(s, x, y, rule))
        .filter(|p| p.as_ref().map_or(true, |p| p.category() == Some(category)))
        .collect::<Result<Vec<_>>>()?;
    if count > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {count} {} pairs from {}",
            category.name(),
            pool.len()
        )));
    }
    let mut picked = index::sample(rng, pool.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i]).collect())
}

/// Pair counts in the related/unrelated by confounded/unconfounded table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairTypeCounts {
    pub related_confounded: usize,
    pub related_unconfounded: usize,
    pub unrelated_confounded: usize,
    pub unrelated_unconfounded: usize,
}

impl PairTypeCounts {
    pub fn related(&self) -> usize {
        self.related_confounded + self.related_unconfounded
    }

    pub fn unrelated(&self) -> usize {
        self.unrelated_confounded + self.unrelated_unconfounded
    }

    pub fn confounded(&self) -> usize {
        self.related_confounded + self.unrelated_confounded
    }

    pub fn unconfounded(&self) -> usize {
        self.related_unconfounded + self.unrelated_unconfounded
    }

    pub fn total(&self) -> usize {
        self.related() + self.unrelated()
    }
}

pub fn count_pair_types(s: &NetworkStructure, rule: ConfounderRule) -> Result<PairTypeCounts> {
    let mut c = PairTypeCounts::default();
    for (x, y) in all_pairs(s) {
        let class = s.classify_pair(x, y, rule)?;
        *match (class.causally_related, class.confounded) {
            (true, true) => &mut c.related_confounded,
            (true, false) => &mut c.related_unconfounded,
            (false, true) => &mut c.unrelated_confounded,
            (false, false) => &mut c.unrelated_unconfounded,
        } += 1;
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableCell {
    pub m: usize,
    pub n: usize,
    pub metric: Metric,
    pub category: PairCategory,
    /// Mean over replications of the per-category mean over pairs.
    pub mean: f64,
    /// Sample standard deviation of that mean across replications.
    pub std_dev: f64,
}

/// Errors for one pair on one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairErrors {
    pub serr: f64,
    pub operr: f64,
    pub mperr: f64,
}

impl PairErrors {
    fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Serr => self.serr,
            Metric::Operr => self.operr,
            Metric::Mperr => self.mperr,
        }
    }
}

/// Generates one mixed dataset for `pair` and scores it against the gold network.
pub fn evaluate_pair(
    net: &CausalNetwork,
    pair: &SampledPair,
    gold: &GoldPair,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<PairErrors> {
    let truth = pair
        .truth
        .ok_or_else(|| Error::InvalidArgument("confounded pairs have no ground truth".into()))?;
    let s = net.structure();
    let d = generate_mix(
        net,
        &MixSpec {
            x: pair.x,
            y: pair.y,
            m,
            n,
            seed,
        },
    )?;
    let hyp = HypothesisSet::pairwise(s.variable(pair.x).clone(), s.variable(pair.y).clone())?;
    let avg = ModelAverage::fit(&d, &hyp, ParameterPrior::default())?;
    let serr = (1.0 - avg.posterior.probability(truth.index())).clamp(0.0, 1.0);
    let operr = operr_against(gold, |k| avg.predict(1, Evidence::observed(0, k)))?;
    let mperr = mperr_against(gold, |k| avg.predict(1, Evidence::manipulated(0, k)))?;
    Ok(PairErrors { serr, operr, mperr })
}

/// Pairs evaluated by [`run_grid_on`] for this config.
pub fn select_pairs(net: &CausalNetwork, cfg: &ExperimentConfig) -> Result<Vec<SampledPair>> {
    let s = net.structure();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, PAIR_STREAM]));
    let pairs = match cfg.pairs_per_category {
        Some(k) => {
            let mut out = Vec::new();
            for cat in PairCategory::ALL {
                out.extend(sample_category_pairs(s, cat, k, &mut rng, cfg.confounder_rule)?);
            }
            out
        }
        None => sample_pairs(s, cfg.pair_sample_size, &mut rng, cfg.confounder_rule)?,
    };
    Ok(pairs.into_iter().filter(|p| p.truth.is_some()).collect())
}

pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<TableCell>> {
    let net = read_network_file(&cfg.network)?;
    run_grid_on(&net, cfg)
}

/// Runs the full grid on an already loaded gold network.
pub fn run_grid_on(net: &CausalNetwork, cfg: &ExperimentConfig) -> Result<Vec<TableCell>> {
    cfg.validate()?;
    let pairs = select_pairs(net, cfg)?;
    let golds = pairs
        .par_iter()
        .map(|p| gold_pair(net, p.x, p.y))
        .collect::<Result<Vec<_>>>()?;

    let mut tasks = Vec::new();
    for (pi, _) in pairs.iter().enumerate() {
        for &m in &cfg.m_grid {
            for &n in &cfg.n_grid {
                for rep in 0..cfg.replications {
                    tasks.push((pi, m, n, rep));
                }
            }
        }
    }
    let results = tasks
        .par_iter()
        .map(|&(pi, m, n, rep)| {
            let p = &pairs[pi];
            let seed = derive_seed(&[cfg.seed, p.x as u64, p.y as u64, m as u64, n as u64, rep as u64]);
            evaluate_pair(net, p, &golds[pi], m, n, seed)
        })
        .collect::<Result<Vec<_>>>()?;

    // (category, m, n, rep) -> per-pair errors
    let mut groups: BTreeMap<(PairCategory, usize, usize, usize), Vec<PairErrors>> = BTreeMap::new();
    for (&(pi, m, n, rep), e) in tasks.iter().zip(results) {
        if let Some(cat) = pairs[pi].category() {
            groups.entry((cat, m, n, rep)).or_default().push(e);
        }
    }

    let mut cells = Vec::new();
    for metric in Metric::ALL {
        for cat in PairCategory::ALL {
            for &m in &cfg.m_grid {
                for &n in &cfg.n_grid {
                    let per_rep: Vec<f64> = (0..cfg.replications)
                        .filter_map(|rep| groups.get(&(cat, m, n, rep)))
                        .map(|es| es.iter().map(|e| e.get(metric)).sum::<f64>() / es.len() as f64)
                        .collect();
                    if per_rep.is_empty() {
                        continue;
                    }
                    let (mean, std_dev) = mean_and_std(&per_rep);
                    cells.push(TableCell {
                        m,
                        n,
                        metric,
                        category: cat,
                        mean,
                        std_dev,
                    });
                }
            }
        }
    }
    Ok(cells)
}

fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

/// Renders each `(metric, category)` table as CSV text, keyed by file name.
pub fn render_tables(cells: &[TableCell]) -> Result<BTreeMap<String, String>> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument("no table cells to emit".into()));
    }
    let mut tables: BTreeMap<(Metric, PairCategory), BTreeMap<(usize, usize), &TableCell>> = BTreeMap::new();
    for c in cells {
        tables.entry((c.metric, c.category)).or_default().insert((c.n, c.m), c);
    }
    let mut out = BTreeMap::new();
    for ((metric, cat), table) in tables {
        let mut ms: Vec<usize> = table.keys().map(|&(_, m)| m).collect();
        ms.sort_unstable();
        ms.dedup();
        let mut ns: Vec<usize> = table.keys().map(|&(n, _)| n).collect();
        ns.dedup();
        let mut text = String::from("n\\m");
        for m in &ms {
            write!(text, ",{m}").unwrap();
        }
        text.push('\n');
        for n in ns {
            write!(text, "{n}").unwrap();
            for &m in &ms {
                match table.get(&(n, m)) {
                    Some(c) => write!(text, ",{:.6} ({:.6})", c.mean, c.std_dev).unwrap(),
                    None => text.push(','),
                }
            }
            text.push('\n');
        }
        out.insert(format!("{}_{}.csv", metric.name(), cat.name()), text);
    }
    Ok(out)
}

/// Writes one CSV per `(metric, category)` into `dir` and returns the paths.
pub fn emit_tables(cells: &[TableCell], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let tables = render_tables(cells)?;
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, text) in tables {
        let path = dir.join(name);
        fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}
