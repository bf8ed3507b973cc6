//! Posterior inference over an enumerated set of causal structures.
//!
//! The pairwise family used throughout is `H1: X -> Y`, `H2: Y -> X`,
//! `H3: X  Y`. A causal path of any length between the two variables is
//! represented by a single arc: datasets are projected onto the pair, so a
//! direct arc parameterizes any dependence a longer path would induce.

use crate::dataio::{CaseRecord, Dataset};
use crate::error::{Error, Result};
use crate::inference::{self, Evidence};
use crate::model::{CausalNetwork, NetworkStructure, VarId, Variable};
use crate::scoring::{
    column_map, log_joint_score, log_marginal_likelihood, posterior_params, tally_counts, DirichletPrior,
    StructureScore,
};

/// The three unconfounded pairwise hypotheses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairHypothesis {
    /// `X -> Y`
    XCausesY,
    /// `Y -> X`
    YCausesX,
    /// No causal connection.
    Unrelated,
}

impl PairHypothesis {
    pub const ALL: [PairHypothesis; 3] = [Self::XCausesY, Self::YCausesX, Self::Unrelated];

    /// Position in [`HypothesisSet::pairwise`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::XCausesY => "H1",
            Self::YCausesX => "H2",
            Self::Unrelated => "H3",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    pub label: String,
    pub structure: NetworkStructure,
    pub log_prior: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisSet {
    hypotheses: Vec<Hypothesis>,
}

impl HypothesisSet {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        let first = hypotheses
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty hypothesis set".into()))?;
        let vars = first.structure.variables();
        let mut mass = 0.0;
        for (i, h) in hypotheses.iter().enumerate() {
            if h.structure.variables() != vars {
                return Err(Error::Schema(format!(
                    "hypothesis `{}` ranges over different variables",
                    h.label
                )));
            }
            if !h.log_prior.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "hypothesis `{}` needs a nonzero finite prior",
                    h.label
                )));
            }
            if hypotheses[..i].iter().any(|o| o.structure == h.structure) {
                return Err(Error::InvalidArgument(format!(
                    "hypothesis `{}` repeats an earlier structure",
                    h.label
                )));
            }
            mass += h.log_prior.exp();
        }
        if mass > 1.0 + 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "structure priors sum to {mass} > 1"
            )));
        }
        Ok(Self { hypotheses })
    }

    /// Every structure with prior `1 / len`.
    pub fn uniform(structures: Vec<NetworkStructure>) -> Result<Self> {
        let lp = -(structures.len() as f64).ln();
        Self::new(
            structures
                .into_iter()
                .enumerate()
                .map(|(i, structure)| Hypothesis {
                    label: format!("S{i}"),
                    structure,
                    log_prior: lp,
                })
                .collect(),
        )
    }

    /// `H1`, `H2`, `H3` over `(x, y)` with uniform prior 1/3.
    pub fn pairwise(x: Variable, y: Variable) -> Result<Self> {
        let vars = vec![x, y];
        let lp = -(3f64.ln());
        let mk = |label: PairHypothesis, parents: Vec<Vec<VarId>>| -> Result<Hypothesis> {
            Ok(Hypothesis {
                label: label.label().to_string(),
                structure: NetworkStructure::new(vars.clone(), parents)?,
                log_prior: lp,
            })
        };
        Self::new(vec![
            mk(PairHypothesis::XCausesY, vec![vec![], vec![0]])?,
            mk(PairHypothesis::YCausesX, vec![vec![1], vec![]])?,
            mk(PairHypothesis::Unrelated, vec![vec![], vec![]])?,
        ])
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        self.hypotheses[0].structure.variables()
    }

    /// Adds an intent variable for `target` to every structure.
    pub fn augment_intent(&self, target: &str) -> Result<Self> {
        let hypotheses = self
            .hypotheses
            .iter()
            .map(|h| {
                let id = h.structure.id(target)?;
                Ok(Hypothesis {
                    label: h.label.clone(),
                    structure: augment_intent(&h.structure, id)?,
                    log_prior: h.log_prior,
                })
            })
            .collect::<Result<_>>()?;
        Self::new(hypotheses)
    }
}

/// How Dirichlet parameter priors are assigned to each structure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParameterPrior {
    /// `a_ijk = ess / (q_i r_i)`.
    Bdeu { ess: f64 },
}

impl Default for ParameterPrior {
    fn default() -> Self {
        Self::Bdeu { ess: 1.0 }
    }
}

impl ParameterPrior {
    pub fn for_structure(&self, s: &NetworkStructure) -> Result<DirichletPrior> {
        match *self {
            Self::Bdeu { ess } => DirichletPrior::bdeu(s, ess),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisPosterior {
    pub scores: Vec<StructureScore>,
    pub probabilities: Vec<f64>,
}

impl HypothesisPosterior {
    pub fn probability(&self, i: usize) -> f64 {
        self.probabilities[i]
    }
}

/// Softmax of log weights via log-sum-exp.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn structure_posterior(
    d: &Dataset,
    hyp: &HypothesisSet,
    prior_rule: ParameterPrior,
) -> Result<HypothesisPosterior> {
    let scores = hyp
        .hypotheses
        .iter()
        .map(|h| {
            let stats = tally_counts(d, &h.structure)?;
            let prior = prior_rule.for_structure(&h.structure)?;
            Ok(log_joint_score(h.log_prior, log_marginal_likelihood(&stats, &prior)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let probabilities = normalize_log_weights(&scores.iter().map(|s| s.log_joint).collect::<Vec<_>>());
    Ok(HypothesisPosterior {
        scores,
        probabilities,
    })
}

/// Posterior mass of the structures containing the arc `from -> to`.
pub fn arc_probability(posterior: &HypothesisPosterior, hyp: &HypothesisSet, from: VarId, to: VarId) -> f64 {
    hyp.hypotheses
        .iter()
        .zip(&posterior.probabilities)
        .filter(|(h, _)| h.structure.has_arc(from, to))
        .map(|(_, p)| p)
        .sum()
}

/// Structure posterior plus the posterior-mean parameterization of every
/// structure, ready for model-averaged prediction.
#[derive(Clone, Debug)]
pub struct ModelAverage {
    pub posterior: HypothesisPosterior,
    networks: Vec<CausalNetwork>,
}

impl ModelAverage {
    pub fn fit(d: &Dataset, hyp: &HypothesisSet, prior_rule: ParameterPrior) -> Result<Self> {
        let posterior = structure_posterior(d, hyp, prior_rule)?;
        let networks = hyp
            .hypotheses
            .iter()
            .map(|h| {
                let stats = tally_counts(d, &h.structure)?;
                let prior = prior_rule.for_structure(&h.structure)?;
                posterior_params(&stats, &prior, &h.structure)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            posterior,
            networks,
        })
    }

    pub fn networks(&self) -> &[CausalNetwork] {
        &self.networks
    }

    /// `P(target | given, D, S)` for each structure `S`.
    pub fn per_structure(&self, target: VarId, given: Evidence) -> Result<Vec<Vec<f64>>> {
        if target == given.variable {
            return Err(Error::InvalidArgument(
                "target and conditioning variable coincide".into(),
            ));
        }
        self.networks
            .iter()
            .map(|net| inference::conditional(net, target, &[given]))
            .collect()
    }

    /// Posterior-weighted mixture of the per-structure predictions.
    pub fn predict(&self, target: VarId, given: Evidence) -> Result<Vec<f64>> {
        let per = self.per_structure(target, given)?;
        let mut out = vec![0.0; per[0].len()];
        for (dist, &w) in per.iter().zip(&self.posterior.probabilities) {
            for (o, p) in out.iter_mut().zip(dist) {
                *o += w * p;
            }
        }
        Ok(out)
    }
}

pub fn averaged_predict(
    d: &Dataset,
    hyp: &HypothesisSet,
    prior_rule: ParameterPrior,
    target: VarId,
    given: Evidence,
) -> Result<Vec<f64>> {
    ModelAverage::fit(d, hyp, prior_rule)?.predict(target, given)
}

/// Every DAG over `variables` (at most 5).
pub fn enumerate_dags(variables: &[Variable]) -> Result<Vec<NetworkStructure>> {
    let n = variables.len();
    if n > 5 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive enumeration supports at most 5 variables, got {n}"
        )));
    }
    // Each node picks a parent subset of the other n-1 nodes; a combined
    // index enumerates all n(n-1)-bit digraphs.
    let bits = n * n.saturating_sub(1);
    let mut out = Vec::new();
    let mut masks = vec![0u32; n];
    for code in 0u64..(1u64 << bits) {
        let mut c = code;
        for (i, m) in masks.iter_mut().enumerate() {
            let sub = (c & ((1 << (n - 1)) - 1)) as u32;
            c >>= n - 1;
            // Expand the (n-1)-bit subset to n bits, skipping position i.
            let low = sub & ((1 << i) - 1);
            let high = (sub >> i) << (i + 1);
            *m = low | high;
        }
        if !is_acyclic(&masks) {
            continue;
        }
        let parents = masks
            .iter()
            .map(|&m| (0..n).filter(|&p| m & (1 << p) != 0).collect())
            .collect();
        out.push(NetworkStructure::new(variables.to_vec(), parents)?);
    }
    Ok(out)
}

fn is_acyclic(parent_masks: &[u32]) -> bool {
    let n = parent_masks.len();
    let mut placed = 0u32;
    for _ in 0..n {
        let ready = (0..n).find(|&i| placed & (1 << i) == 0 && parent_masks[i] & !placed == 0);
        match ready {
            Some(i) => placed |= 1 << i,
            None => return false,
        }
    }
    true
}

/// Name of the intent variable added for `target`.
pub fn intent_name(target: &str) -> String {
    format!("M_{target}")
}

/// Add an intent variable `M_target` with states `0..=r` (0 = observe only,
/// `k` = the experimenter asked for the `k`-th state) as an extra parent of
/// `target`.
pub fn augment_intent(s: &NetworkStructure, target: VarId) -> Result<NetworkStructure> {
    s.check_id(target)?;
    let tvar = s.variable(target);
    let name = intent_name(tvar.name());
    if s.id(&name).is_ok() {
        return Err(Error::InvalidArgument(format!("variable `{name}` already exists")));
    }
    let intent = Variable::new(name, (0..=tvar.cardinality()).map(|k| k.to_string()))?;
    let mut variables = s.variables().to_vec();
    variables.push(intent);
    let mut parents: Vec<Vec<VarId>> = (0..s.len()).map(|i| s.parents(i).to_vec()).collect();
    parents.push(Vec::new());
    parents[target].push(s.len());
    NetworkStructure::new(variables, parents)
}

/// Re-encode the manipulation flags of `target` as an observed intent column:
/// the new `M_target` cell is 0 where `target` was observed and `k + 1` where
/// it was manipulated to state `k`; `target` itself becomes observed.
pub fn intent_dataset(d: &Dataset, target: &str) -> Result<Dataset> {
    let col = d.column(target)?;
    let tvar = &d.variables()[col];
    let name = intent_name(target);
    if d.column(&name).is_ok() {
        return Err(Error::InvalidArgument(format!("column `{name}` already exists")));
    }
    let intent = Variable::new(name, (0..=tvar.cardinality()).map(|k| k.to_string()))?;
    let mut variables = d.variables().to_vec();
    variables.push(intent);
    let cases = d
        .cases()
        .iter()
        .map(|c| {
            let mut values = c.values.clone();
            let mut manipulated = c.manipulated.clone();
            values.push(if c.manipulated[col] { c.values[col] + 1 } else { 0 });
            manipulated[col] = false;
            manipulated.push(false);
            CaseRecord {
                values,
                manipulated,
            }
        })
        .collect();
    Dataset::new(variables, cases)
}

/// Fails unless `d` has a matching column for every hypothesis variable.
pub fn check_schema(d: &Dataset, hyp: &HypothesisSet) -> Result<()> {
    column_map(d, &hyp.hypotheses[0].structure).map(|_| ())
}
