//! Exact inference by variable elimination.
//!
//! Manipulated evidence is applied by graph surgery before anything else;
//! observed evidence then conditions the surgically modified network.
//! Nodes that are not ancestors of a target or evidence variable sum out to
//! one and are dropped up front.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{CausalNetwork, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EvidenceMode {
    Observed,
    Manipulated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Evidence {
    pub variable: VarId,
    pub state: usize,
    pub mode: EvidenceMode,
}

impl Evidence {
    pub fn observed(variable: VarId, state: usize) -> Self {
        Self {
            variable,
            state,
            mode: EvidenceMode::Observed,
        }
    }

    pub fn manipulated(variable: VarId, state: usize) -> Self {
        Self {
            variable,
            state,
            mode: EvidenceMode::Manipulated,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Query {
    pub targets: Vec<VarId>,
    pub evidence: Vec<Evidence>,
}

impl Query {
    pub fn new(targets: Vec<VarId>, evidence: Vec<Evidence>) -> Self {
        Self { targets, evidence }
    }
}

/// Joint distribution over `variables`, first variable slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub variables: Vec<VarId>,
    pub cardinalities: Vec<usize>,
    pub probs: Vec<f64>,
}

impl Distribution {
    /// Probability of a joint state given in `variables` order.
    pub fn prob(&self, states: &[usize]) -> f64 {
        let idx = states
            .iter()
            .zip(&self.cardinalities)
            .fold(0, |acc, (&s, &r)| acc * r + s);
        self.probs[idx]
    }
}

/// Table factor; `vars` sorted ascending, last variable fastest.
#[derive(Clone, Debug)]
struct Factor {
    vars: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    fn from_cpt(net: &CausalNetwork, node: VarId) -> Self {
        let s = net.structure();
        let mut vars: Vec<VarId> = s.parents(node).to_vec();
        vars.push(node);
        vars.sort_unstable();
        let cards: Vec<usize> = vars.iter().map(|&v| s.cardinality(v)).collect();
        let size = cards.iter().product();
        let mut f = Factor {
            vars,
            cards,
            values: vec![0.0; size],
        };
        let mut assignment = vec![0; s.len()];
        for idx in 0..size {
            f.decode(idx, &mut assignment);
            let j = s.row_of(node, &assignment);
            f.values[idx] = net.prob(node, j, assignment[node]);
        }
        f
    }

    /// Writes the factor's variables' states for flat index `idx` into `out`.
    fn decode(&self, mut idx: usize, out: &mut [usize]) {
        for i in (0..self.vars.len()).rev() {
            out[self.vars[i]] = idx % self.cards[i];
            idx /= self.cards[i];
        }
    }

    fn reduce(&self, var: VarId, state: usize) -> Self {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let size: usize = cards.iter().product();
        let (outer, inner) = (strides[pos] * self.cards[pos], strides[pos]);
        let mut values = Vec::with_capacity(size);
        for block in self.values.chunks(outer) {
            values.extend_from_slice(&block[state * inner..(state + 1) * inner]);
        }
        Factor { vars, cards, values }
    }

    fn sum_out(&self, var: VarId) -> Self {
        let pos = self.vars.iter().position(|&v| v == var).expect("var in scope");
        let strides = self.strides();
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let (r, inner) = (self.cards[pos], strides[pos]);
        let mut values = Vec::with_capacity(self.values.len() / r);
        for block in self.values.chunks(r * inner) {
            for t in 0..inner {
                values.push((0..r).map(|k| block[k * inner + t]).sum());
            }
        }
        Factor { vars, cards, values }
    }

    fn product(&self, other: &Factor) -> Self {
        let mut vars: Vec<VarId> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let card_of = |v: VarId| {
            self.vars
                .iter()
                .position(|&u| u == v)
                .map(|p| self.cards[p])
                .or_else(|| other.vars.iter().position(|&u| u == v).map(|p| other.cards[p]))
                .unwrap()
        };
        let cards: Vec<usize> = vars.iter().map(|&v| card_of(v)).collect();
        let size: usize = cards.iter().product();
        // Stride of each output position within each operand (0 if absent).
        let operand_strides = |f: &Factor| -> Vec<usize> {
            let st = f.strides();
            vars.iter()
                .map(|v| f.vars.iter().position(|u| u == v).map_or(0, |p| st[p]))
                .collect()
        };
        let (sa, sb) = (operand_strides(self), operand_strides(other));
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            for d in (0..vars.len()).rev() {
                counter[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if counter[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                counter[d] = 0;
            }
        }
        Factor { vars, cards, values }
    }
}

fn validate_query(net: &CausalNetwork, q: &Query) -> Result<()> {
    let s = net.structure();
    if q.targets.is_empty() {
        return Err(Error::InvalidArgument("query has no targets".into()));
    }
    let mut seen = BTreeSet::new();
    for &t in &q.targets {
        s.check_id(t)?;
        if !seen.insert(t) {
            return Err(Error::InvalidArgument(format!(
                "target `{}` listed twice",
                s.variable(t).name()
            )));
        }
    }
    for e in &q.evidence {
        s.check_id(e.variable)?;
        if !seen.insert(e.variable) {
            return Err(Error::InvalidArgument(format!(
                "`{}` appears twice among targets and evidence",
                s.variable(e.variable).name()
            )));
        }
        let r = s.cardinality(e.variable);
        if e.state >= r {
            return Err(Error::StateOutOfRange {
                variable: s.variable(e.variable).name().to_string(),
                state: e.state,
                cardinality: r,
            });
        }
    }
    Ok(())
}

/// `P(targets | evidence)` with manipulated evidence interpreted by surgery.
pub fn query(net: &CausalNetwork, q: &Query) -> Result<Distribution> {
    validate_query(net, q)?;
    let manipulations: Vec<(VarId, usize)> = q
        .evidence
        .iter()
        .filter(|e| e.mode == EvidenceMode::Manipulated)
        .map(|e| (e.variable, e.state))
        .collect();
    let net = if manipulations.is_empty() {
        std::borrow::Cow::Borrowed(net)
    } else {
        std::borrow::Cow::Owned(net.surgery(&manipulations)?)
    };
    let s = net.structure();

    let mut relevant: BTreeSet<VarId> = BTreeSet::new();
    for v in q.targets.iter().copied().chain(q.evidence.iter().map(|e| e.variable)) {
        relevant.insert(v);
        relevant.extend(s.ancestors(v)?);
    }

    let mut factors: Vec<Factor> = relevant
        .iter()
        .map(|&v| {
            let mut f = Factor::from_cpt(&net, v);
            for e in &q.evidence {
                f = f.reduce(e.variable, e.state);
            }
            f
        })
        .collect();

    let targets: BTreeSet<VarId> = q.targets.iter().copied().collect();
    let evidence: BTreeSet<VarId> = q.evidence.iter().map(|e| e.variable).collect();
    let mut hidden: BTreeSet<VarId> = relevant
        .into_iter()
        .filter(|v| !targets.contains(v) && !evidence.contains(v))
        .collect();

    while !hidden.is_empty() {
        // Min-degree: eliminate the variable with the fewest neighbours.
        let var = *hidden
            .iter()
            .min_by_key(|&&v| {
                let mut nb = BTreeSet::new();
                for f in factors.iter().filter(|f| f.vars.contains(&v)) {
                    nb.extend(f.vars.iter().copied());
                }
                (nb.len(), v)
            })
            .unwrap();
        hidden.remove(&var);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        if let Some(prod) = touching.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(prod.sum_out(var));
        }
    }

    let joint = factors
        .into_iter()
        .reduce(|a, b| a.product(&b))
        .expect("at least one target factor");
    debug_assert_eq!(joint.vars, targets.iter().copied().collect::<Vec<_>>());

    let total: f64 = joint.values.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroProbabilityEvidence);
    }

    // Reorder from ascending ids to the caller's target order.
    let cardinalities: Vec<usize> = q.targets.iter().map(|&t| s.cardinality(t)).collect();
    let size: usize = cardinalities.iter().product();
    let pos_in_joint: Vec<usize> = q
        .targets
        .iter()
        .map(|t| joint.vars.iter().position(|v| v == t).unwrap())
        .collect();
    let jstrides = joint.strides();
    let mut probs = vec![0.0; size];
    let mut states = vec![0; q.targets.len()];
    for (idx, p) in probs.iter_mut().enumerate() {
        let mut rem = idx;
        for d in (0..states.len()).rev() {
            states[d] = rem % cardinalities[d];
            rem /= cardinalities[d];
        }
        let src: usize = states
            .iter()
            .zip(&pos_in_joint)
            .map(|(&st, &pos)| st * jstrides[pos])
            .sum();
        *p = joint.values[src] / total;
    }
    Ok(Distribution {
        variables: q.targets.clone(),
        cardinalities,
        probs,
    })
}

pub fn marginal(net: &CausalNetwork, variable: VarId) -> Result<Vec<f64>> {
    Ok(query(net, &Query::new(vec![variable], Vec::new()))?.probs)
}

/// `P(target | evidence)` as a vector over the target's states.
pub fn conditional(net: &CausalNetwork, target: VarId, evidence: &[Evidence]) -> Result<Vec<f64>> {
    Ok(query(net, &Query::new(vec![target], evidence.to_vec()))?.probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;

    fn chain(px: f64, py_given_t: f64, py_given_f: f64) -> CausalNetwork {
        CausalNetwork::from_rows(
            vec![Variable::binary("X"), Variable::binary("Y")],
            vec![vec![], vec![0]],
            vec![
                vec![vec![1.0 - px, px]],
                vec![
                    vec![1.0 - py_given_f, py_given_f],
                    vec![1.0 - py_given_t, py_given_t],
                ],
            ],
        )
        .unwrap()
    }

    #[test]
    fn manipulated_parent_gives_cpt_row() {
        let net = chain(0.3, 0.8, 0.2);
        let p = conditional(&net, 1, &[Evidence::manipulated(0, 1)]).unwrap();
        assert!((p[0] - 0.2).abs() < 1e-12 && (p[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn manipulated_child_leaves_parent_marginal() {
        let net = chain(0.3, 0.8, 0.2);
        let p = conditional(&net, 0, &[Evidence::manipulated(1, 0)]).unwrap();
        assert!((p[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn manipulated_target_is_point_mass_via_surgery() {
        let net = chain(0.3, 0.8, 0.2).surgery(&[(1, 0)]).unwrap();
        assert_eq!(marginal(&net, 1).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn marginal_by_hand() {
        let net = chain(0.5, 0.8, 0.2);
        let p = marginal(&net, 1).unwrap();
        assert!((p[1] - 0.5).abs() < 1e-12);
        assert_eq!(marginal(&net, 0).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn observed_evidence_uses_bayes() {
        // P(X=T | Y=T) = 0.3*0.8 / (0.3*0.8 + 0.7*0.2)
        let net = chain(0.3, 0.8, 0.2);
        let p = conditional(&net, 0, &[Evidence::observed(1, 1)]).unwrap();
        assert!((p[1] - 0.24 / 0.38).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_evidence_is_an_error() {
        let net = chain(0.0, 0.8, 0.2);
        let r = conditional(&net, 1, &[Evidence::observed(0, 1)]);
        assert!(matches!(r, Err(Error::ZeroProbabilityEvidence)));
    }

    #[test]
    fn invalid_queries() {
        let net = chain(0.3, 0.8, 0.2);
        assert!(conditional(&net, 0, &[Evidence::observed(0, 1)]).is_err());
        assert!(conditional(&net, 0, &[Evidence::observed(1, 2)]).is_err());
        assert!(conditional(&net, 5, &[]).is_err());
        assert!(query(&net, &Query::default()).is_err());
    }

    #[test]
    fn joint_target_order_follows_query() {
        let net = chain(0.3, 0.8, 0.2);
        let xy = query(&net, &Query::new(vec![0, 1], vec![])).unwrap();
        let yx = query(&net, &Query::new(vec![1, 0], vec![])).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((xy.prob(&[x, y]) - yx.prob(&[y, x])).abs() < 1e-15);
                assert!((xy.prob(&[x, y]) - net.joint_probability(&[x, y])).abs() < 1e-15);
            }
        }
    }
}
