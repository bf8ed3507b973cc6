//! Manipulation-aware Dirichlet scoring.
//!
//! A case contributes to the counts of node `i` only when `i` was passively
//! observed in that case; a manipulated node's own factor is replaced by 1.
//! Parent states are counted no matter how the parents got them. With those
//! counts, the marginal likelihood of a structure keeps the usual
//! Dirichlet-multinomial closed form:
//!
//! ```text
//! ln P(D | S) = sum_i sum_j [ lnG(a_ij) - lnG(a_ij + N_ij)
//!                             + sum_k ( lnG(a_ijk + N_ijk) - lnG(a_ijk) ) ]
//! ```
//!
//! All scores are natural logs. Linear values underflow after roughly a
//! hundred cases.

use statrs::function::gamma::ln_gamma;

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::model::{CausalNetwork, Cpt, NetworkStructure, VarId};

/// Per-node table with one row per parent joint state and one column per state.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeTable<T> {
    rows: usize,
    cardinality: usize,
    values: Vec<T>,
}

impl<T: Copy> NodeTable<T> {
    fn filled(rows: usize, cardinality: usize, value: T) -> Self {
        Self {
            rows,
            cardinality,
            values: vec![value; rows * cardinality],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.values[j * self.cardinality..(j + 1) * self.cardinality]
    }

    pub fn get(&self, j: usize, k: usize) -> T {
        self.values[j * self.cardinality + k]
    }

    fn row_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.values[j * self.cardinality..(j + 1) * self.cardinality]
    }
}

/// `N_ijk` for every node.
#[derive(Clone, Debug, PartialEq)]
pub struct SufficientStats {
    nodes: Vec<NodeTable<u64>>,
}

impl SufficientStats {
    pub fn zeros(s: &NetworkStructure) -> Self {
        Self {
            nodes: (0..s.len())
                .map(|i| NodeTable::filled(s.parent_configs(i), s.cardinality(i), 0))
                .collect(),
        }
    }

    pub fn node(&self, i: VarId) -> &NodeTable<u64> {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[NodeTable<u64>] {
        &self.nodes
    }

    pub fn count(&self, i: VarId, j: usize, k: usize) -> u64 {
        self.nodes[i].get(j, k)
    }

    /// `N_ij`.
    pub fn row_total(&self, i: VarId, j: usize) -> u64 {
        self.nodes[i].row(j).iter().sum()
    }

    /// Number of cases in which node `i` was counted.
    pub fn node_total(&self, i: VarId) -> u64 {
        self.nodes[i].values.iter().sum()
    }
}

/// Dirichlet hyperparameters `a_ijk > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletPrior {
    nodes: Vec<NodeTable<f64>>,
}

impl DirichletPrior {
    /// From explicit per-node tables, each laid out row-major (`q_i` rows of `r_i`).
    pub fn new(s: &NetworkStructure, alphas: Vec<Vec<f64>>) -> Result<Self> {
        if alphas.len() != s.len() {
            return Err(Error::Schema(format!(
                "{} prior tables for {} nodes",
                alphas.len(),
                s.len()
            )));
        }
        let mut nodes = Vec::with_capacity(s.len());
        for (i, values) in alphas.into_iter().enumerate() {
            let (q, r) = (s.parent_configs(i), s.cardinality(i));
            if values.len() != q * r {
                return Err(Error::Schema(format!(
                    "prior for `{}` has {} entries, expected {}",
                    s.variable(i).name(),
                    values.len(),
                    q * r
                )));
            }
            if let Some(a) = values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
                return Err(Error::InvalidArgument(format!(
                    "Dirichlet parameter {a} for `{}` is not positive",
                    s.variable(i).name()
                )));
            }
            nodes.push(NodeTable {
                rows: q,
                cardinality: r,
                values,
            });
        }
        Ok(Self { nodes })
    }

    /// `a_ijk = ess / (q_i r_i)`.
    pub fn bdeu(s: &NetworkStructure, ess: f64) -> Result<Self> {
        if !(ess > 0.0 && ess.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "equivalent sample size {ess} is not positive"
            )));
        }
        Ok(Self {
            nodes: (0..s.len())
                .map(|i| {
                    let (q, r) = (s.parent_configs(i), s.cardinality(i));
                    NodeTable::filled(q, r, ess / (q * r) as f64)
                })
                .collect(),
        })
    }

    pub fn node(&self, i: VarId) -> &NodeTable<f64> {
        &self.nodes[i]
    }

    pub fn alpha(&self, i: VarId, j: usize, k: usize) -> f64 {
        self.nodes[i].get(j, k)
    }

    /// `a_ij`.
    pub fn row_total(&self, i: VarId, j: usize) -> f64 {
        self.nodes[i].row(j).iter().sum()
    }
}

/// The weak default prior `a_ijk = 1 / (q_i r_i)`, so `a_ij = 1 / q_i`.
pub fn default_prior(s: &NetworkStructure) -> DirichletPrior {
    DirichletPrior::bdeu(s, 1.0).expect("unit sample size is valid")
}

/// Dataset column holding each structure variable, matched by name and states.
pub(crate) fn column_map(d: &Dataset, s: &NetworkStructure) -> Result<Vec<usize>> {
    s.variables()
        .iter()
        .map(|v| {
            let c = d.column(v.name()).map_err(|_| {
                Error::Schema(format!("dataset has no column `{}`", v.name()))
            })?;
            if d.variables()[c] != *v {
                return Err(Error::Schema(format!(
                    "column `{}` has states {:?}, structure expects {:?}",
                    v.name(),
                    d.variables()[c].states(),
                    v.states()
                )));
            }
            Ok(c)
        })
        .collect()
}

pub fn tally_counts(d: &Dataset, s: &NetworkStructure) -> Result<SufficientStats> {
    let cols = column_map(d, s)?;
    let mut stats = SufficientStats::zeros(s);
    let mut values = vec![0; s.len()];
    for case in d.cases() {
        for (v, &c) in values.iter_mut().zip(&cols) {
            *v = case.values[c];
        }
        for i in 0..s.len() {
            if case.manipulated[cols[i]] {
                continue;
            }
            let j = s.row_of(i, &values);
            stats.nodes[i].row_mut(j)[values[i]] += 1;
        }
    }
    Ok(stats)
}

fn check_shapes(stats: &SufficientStats, prior: &DirichletPrior) -> Result<()> {
    let same = stats.nodes.len() == prior.nodes.len()
        && stats
            .nodes
            .iter()
            .zip(&prior.nodes)
            .all(|(a, b)| a.rows == b.rows && a.cardinality == b.cardinality);
    if same {
        Ok(())
    } else {
        Err(Error::Schema(
            "counts and prior index different (i, j, k) spaces".into(),
        ))
    }
}

pub fn log_marginal_likelihood(stats: &SufficientStats, prior: &DirichletPrior) -> Result<f64> {
    check_shapes(stats, prior)?;
    let mut total = 0.0;
    for (counts, alphas) in stats.nodes.iter().zip(&prior.nodes) {
        for j in 0..counts.rows {
            let n_row = counts.row(j);
            let a_row = alphas.row(j);
            let n_ij: u64 = n_row.iter().sum();
            if n_ij == 0 {
                continue;
            }
            let a_ij: f64 = a_row.iter().sum();
            total += ln_gamma(a_ij) - ln_gamma(a_ij + n_ij as f64);
            for (&n, &a) in n_row.iter().zip(a_row) {
                if n > 0 {
                    total += ln_gamma(a + n as f64) - ln_gamma(a);
                }
            }
        }
    }
    Ok(total)
}

/// A structure's prior, marginal likelihood and their sum (all natural logs).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureScore {
    pub log_prior: f64,
    pub log_marginal: f64,
    pub log_joint: f64,
}

pub fn log_joint_score(structure_log_prior: f64, log_marginal: f64) -> StructureScore {
    StructureScore {
        log_prior: structure_log_prior,
        log_marginal,
        log_joint: structure_log_prior + log_marginal,
    }
}

/// Posterior-mean parameters `(a_ijk + N_ijk) / (a_ij + N_ij)`.
pub fn posterior_params(
    stats: &SufficientStats,
    prior: &DirichletPrior,
    s: &NetworkStructure,
) -> Result<CausalNetwork> {
    check_shapes(stats, prior)?;
    if stats.nodes.len() != s.len()
        || (0..s.len()).any(|i| {
            stats.nodes[i].rows != s.parent_configs(i)
                || stats.nodes[i].cardinality != s.cardinality(i)
        })
    {
        return Err(Error::Schema("counts do not match the structure".into()));
    }
    let cpts = stats
        .nodes
        .iter()
        .zip(&prior.nodes)
        .map(|(counts, alphas)| {
            let mut values = Vec::with_capacity(counts.values.len());
            for j in 0..counts.rows {
                let denom: f64 = counts
                    .row(j)
                    .iter()
                    .zip(alphas.row(j))
                    .map(|(&n, &a)| a + n as f64)
                    .sum();
                values.extend(
                    counts
                        .row(j)
                        .iter()
                        .zip(alphas.row(j))
                        .map(|(&n, &a)| (a + n as f64) / denom),
                );
            }
            Cpt::from_flat(counts.cardinality, values)
        })
        .collect();
    CausalNetwork::new(s.clone(), cpts)
}

/// Sum of one-step-ahead log predictive probabilities, processing cases in
/// order and skipping manipulated nodes. Equal to
/// [`log_marginal_likelihood`] by the chain rule; kept as an independent
/// check of it.
pub fn prequential_log_score(d: &Dataset, s: &NetworkStructure, prior: &DirichletPrior) -> Result<f64> {
    let cols = column_map(d, s)?;
    let mut stats = SufficientStats::zeros(s);
    check_shapes(&stats, prior)?;
    let mut total = 0.0;
    let mut values = vec![0; s.len()];
    for case in d.cases() {
        for (v, &c) in values.iter_mut().zip(&cols) {
            *v = case.values[c];
        }
        for i in 0..s.len() {
            if case.manipulated[cols[i]] {
                continue;
            }
            let j = s.row_of(i, &values);
            let k = values[i];
            let n_ij: u64 = stats.nodes[i].row(j).iter().sum();
            let a_ij = prior.row_total(i, j);
            let p = (prior.alpha(i, j, k) + stats.nodes[i].get(j, k) as f64) / (a_ij + n_ij as f64);
            total += p.ln();
            stats.nodes[i].row_mut(j)[k] += 1;
        }
    }
    Ok(total)
}
