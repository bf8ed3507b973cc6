//! Structure and prediction error metrics against a gold-standard network.

use crate::discovery::HypothesisPosterior;
use crate::error::{Error, Result};
use crate::inference::{self, Evidence};
use crate::model::{CausalNetwork, VarId};

/// `1 - P(h_true | D)`.
pub fn serr(posterior: &HypothesisPosterior, h_true: usize) -> Result<f64> {
    posterior
        .probabilities
        .get(h_true)
        .map(|p| (1.0 - p).clamp(0.0, 1.0))
        .ok_or_else(|| Error::InvalidArgument(format!("no hypothesis #{h_true}")))
}

/// Gold-standard quantities for one ordered pair `(x, y)`, computed once by
/// exact inference on the gold network.
#[derive(Clone, Debug, PartialEq)]
pub struct GoldPair {
    pub marginal_x: Vec<f64>,
    /// `P(Y | X = x)`; `None` when `P(X = x) = 0`.
    pub observed: Vec<Option<Vec<f64>>>,
    /// `P(Y | manip(X = x))`.
    pub manipulated: Vec<Vec<f64>>,
}

pub fn gold_pair(gold: &CausalNetwork, x: VarId, y: VarId) -> Result<GoldPair> {
    if x == y {
        return Err(Error::InvalidArgument("pair needs two distinct variables".into()));
    }
    let marginal_x = inference::marginal(gold, x)?;
    let rx = marginal_x.len();
    let observed = (0..rx)
        .map(|k| {
            if marginal_x[k] > 0.0 {
                inference::conditional(gold, y, &[Evidence::observed(x, k)]).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let manipulated = (0..rx)
        .map(|k| inference::conditional(gold, y, &[Evidence::manipulated(x, k)]))
        .collect::<Result<_>>()?;
    Ok(GoldPair {
        marginal_x,
        observed,
        manipulated,
    })
}

fn mean_abs_diff(gold: &[f64], estimate: &[f64]) -> Result<f64> {
    if gold.len() != estimate.len() {
        return Err(Error::Schema(format!(
            "prediction has {} states, expected {}",
            estimate.len(),
            gold.len()
        )));
    }
    let total: f64 = gold.iter().zip(estimate).map(|(a, e)| (a - e).abs()).sum();
    Ok(total / gold.len() as f64)
}

/// Observational prediction error, weighting each state of `X` by its gold
/// marginal. `estimate(k)` must return the predicted `P(Y | X = k)`.
pub fn operr_against(
    gold: &GoldPair,
    mut estimate: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<f64> {
    let mut total = 0.0;
    for (k, (&w, truth)) in gold.marginal_x.iter().zip(&gold.observed).enumerate() {
        if let Some(truth) = truth {
            total += w * mean_abs_diff(truth, &estimate(k)?)?;
        }
    }
    Ok(total)
}

/// Manipulation prediction error with every state of `X` equally likely to
/// be chosen. `estimate(k)` must return the predicted `P(Y | manip(X = k))`.
pub fn mperr_against(
    gold: &GoldPair,
    mut estimate: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<f64> {
    let rx = gold.manipulated.len() as f64;
    let mut total = 0.0;
    for (k, truth) in gold.manipulated.iter().enumerate() {
        total += mean_abs_diff(truth, &estimate(k)?)? / rx;
    }
    Ok(total)
}

pub fn operr(
    gold: &CausalNetwork,
    x: VarId,
    y: VarId,
    estimate: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<f64> {
    operr_against(&gold_pair(gold, x, y)?, estimate)
}

pub fn mperr(
    gold: &CausalNetwork,
    x: VarId,
    y: VarId,
    estimate: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<f64> {
    mperr_against(&gold_pair(gold, x, y)?, estimate)
}

/// Arithmetic mean over pairs.
pub fn aggregate(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot aggregate zero pairs".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;
    use crate::scoring::log_joint_score;

    fn posterior(p: &[f64]) -> HypothesisPosterior {
        HypothesisPosterior {
            scores: p.iter().map(|&x| log_joint_score(0.0, x.ln())).collect(),
            probabilities: p.to_vec(),
        }
    }

    fn gold() -> CausalNetwork {
        CausalNetwork::from_rows(
            vec![Variable::binary("X"), Variable::binary("Y")],
            vec![vec![], vec![0]],
            vec![
                vec![vec![0.4, 0.6]],
                vec![vec![0.2, 0.8], vec![0.2, 0.8]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn serr_examples() {
        let u = posterior(&[1.0 / 3.0; 3]);
        assert!((serr(&u, 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(serr(&posterior(&[0.0, 1.0, 0.0]), 1).unwrap(), 0.0);
        assert!((serr(&posterior(&[0.2, 0.5, 0.3]), 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(serr(&u, 3).is_err());
    }

    #[test]
    fn exact_predictions_have_zero_error() {
        let g = gold();
        let gp = gold_pair(&g, 0, 1).unwrap();
        let op = operr(&g, 0, 1, |k| Ok(gp.observed[k].clone().unwrap())).unwrap();
        let mp = mperr(&g, 0, 1, |k| Ok(gp.manipulated[k].clone())).unwrap();
        assert_eq!((op, mp), (0.0, 0.0));
    }

    #[test]
    fn hand_computed_two_by_two() {
        // P_A(Y=T|x) = 0.8 for both x, P_E = 0.6: |diff| = 0.2 on both Y states.
        let g = gold();
        let op = operr(&g, 0, 1, |_| Ok(vec![0.4, 0.6])).unwrap();
        assert!((op - 0.2).abs() < 1e-12);
        let mp = mperr(&g, 0, 1, |_| Ok(vec![0.4, 0.6])).unwrap();
        assert!((mp - 0.2).abs() < 1e-12);
    }

    #[test]
    fn errors_are_bounded() {
        let g = gold();
        let op = operr(&g, 0, 1, |_| Ok(vec![1.0, 0.0])).unwrap();
        assert!(op <= 1.0);
        assert!(operr(&g, 0, 1, |_| Ok(vec![1.0])).is_err());
        assert!(gold_pair(&g, 0, 0).is_err());
    }

    #[test]
    fn zero_probability_gold_state_is_skipped() {
        let g = CausalNetwork::from_rows(
            vec![Variable::binary("X"), Variable::binary("Y")],
            vec![vec![], vec![0]],
            vec![vec![vec![1.0, 0.0]], vec![vec![0.5, 0.5], vec![0.1, 0.9]]],
        )
        .unwrap();
        let op = operr(&g, 0, 1, |k| {
            assert_eq!(k, 0);
            Ok(vec![0.5, 0.5])
        })
        .unwrap();
        assert_eq!(op, 0.0);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[0.5]).unwrap(), 0.5);
        assert_eq!(aggregate(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(aggregate(&[]).is_err());
    }
}
