//! Seeded forward (logic) sampling and the mixed experimental/observational
//! dataset generator.
//!
//! Each generated case draws from its own ChaCha8 stream, seeded with
//! `derive_seed(&[seed, case_index])`, so datasets do not depend on how case
//! generation is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataio::{CaseRecord, Dataset};
use crate::error::{Error, Result};
use crate::model::{CausalNetwork, VarId};

/// SplitMix64 finalizer folded over `parts`.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &p in parts {
        h = h.wrapping_add(p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[seed, index]))
}

fn draw_state<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the last cumulative sum.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Ancestral sampling of `order` (parents-first) in an already-surgered network.
fn sample_into<R: Rng + ?Sized>(net: &CausalNetwork, order: &[VarId], values: &mut [usize], rng: &mut R) {
    let s = net.structure();
    for &v in order {
        let j = s.row_of(v, values);
        values[v] = draw_state(net.cpt(v).row(j), rng);
    }
}

/// One full case from the network after surgery on `manipulations`.
pub fn draw_case<R: Rng + ?Sized>(
    net: &CausalNetwork,
    manipulations: &[(VarId, usize)],
    rng: &mut R,
) -> Result<CaseRecord> {
    let cut = net.surgery(manipulations)?;
    let mut values = vec![0; net.len()];
    sample_into(&cut, cut.structure().topological_order(), &mut values, rng);
    let mut manipulated = vec![false; net.len()];
    for &(v, _) in manipulations {
        manipulated[v] = true;
    }
    Ok(CaseRecord {
        values,
        manipulated,
    })
}

/// Manipulate `target` to a uniformly drawn state, then sample the rest.
pub fn draw_manipulated_case<R: Rng + ?Sized>(
    net: &CausalNetwork,
    target: VarId,
    rng: &mut R,
) -> Result<CaseRecord> {
    net.structure().check_id(target)?;
    let state = rng.random_range(0..net.structure().cardinality(target));
    draw_case(net, &[(target, state)], rng)
}

/// Composition of a mixed dataset over the pair `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MixSpec {
    pub x: VarId,
    pub y: VarId,
    /// Experimental cases; half manipulate `x`, half manipulate `y`.
    pub m: usize,
    /// Observational cases.
    pub n: usize,
    pub seed: u64,
}

/// `m/2` cases with `x` manipulated, then `m/2` with `y` manipulated, then
/// `n` purely observational cases, projected onto the columns `(x, y)`.
pub fn generate_mix(net: &CausalNetwork, spec: &MixSpec) -> Result<Dataset> {
    let s = net.structure();
    s.check_id(spec.x)?;
    s.check_id(spec.y)?;
    if spec.x == spec.y {
        return Err(Error::InvalidArgument("mix needs two distinct variables".into()));
    }
    if !spec.m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "experimental case count {} is odd",
            spec.m
        )));
    }

    // Only ancestors of x and y influence the projected columns; surgery can
    // only shrink that set, so sampling it is exact for every case kind.
    let mut keep = s.ancestors(spec.x)?;
    keep.extend(s.ancestors(spec.y)?);
    keep.insert(spec.x);
    keep.insert(spec.y);
    let order: Vec<VarId> = s
        .topological_order()
        .iter()
        .copied()
        .filter(|v| keep.contains(v))
        .collect();

    let (rx, ry) = (s.cardinality(spec.x), s.cardinality(spec.y));
    // Surgered networks for every possible manipulation, built once.
    let cut_x = (0..rx)
        .map(|k| net.surgery(&[(spec.x, k)]))
        .collect::<Result<Vec<_>>>()?;
    let cut_y = (0..ry)
        .map(|k| net.surgery(&[(spec.y, k)]))
        .collect::<Result<Vec<_>>>()?;

    let half = spec.m / 2;
    let total = spec.m + spec.n;
    let cases: Vec<CaseRecord> = (0..total)
        .into_par_iter()
        .map(|h| {
            let mut rng = case_rng(spec.seed, h as u64);
            let mut values = vec![0; s.len()];
            let (model, flags) = if h < half {
                (&cut_x[rng.random_range(0..rx)], [true, false])
            } else if h < spec.m {
                (&cut_y[rng.random_range(0..ry)], [false, true])
            } else {
                (net, [false, false])
            };
            sample_into(model, &order, &mut values, &mut rng);
            CaseRecord {
                values: vec![values[spec.x], values[spec.y]],
                manipulated: flags.to_vec(),
            }
        })
        .collect();
    Dataset::new(
        vec![s.variable(spec.x).clone(), s.variable(spec.y).clone()],
        cases,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;

    fn coin(p_true: f64) -> CausalNetwork {
        CausalNetwork::from_rows(
            vec![Variable::binary("X"), Variable::binary("Y")],
            vec![vec![], vec![0]],
            vec![vec![vec![1.0 - p_true, p_true]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_network() {
        let net = coin(1.0);
        let mut rng = case_rng(1, 0);
        for _ in 0..20 {
            let c = draw_case(&net, &[], &mut rng).unwrap();
            assert_eq!(c, CaseRecord::observed(vec![1, 1]));
        }
    }

    #[test]
    fn manipulation_is_flagged() {
        let net = coin(1.0);
        let mut rng = case_rng(1, 0);
        let c = draw_case(&net, &[(0, 0)], &mut rng).unwrap();
        assert_eq!(c.values, vec![0, 0]);
        assert_eq!(c.manipulated, vec![true, false]);
        let c = draw_manipulated_case(&net, 1, &mut rng).unwrap();
        assert_eq!(c.manipulated.iter().filter(|&&m| m).count(), 1);
        assert!(draw_case(&net, &[(0, 2)], &mut rng).is_err());
    }

    #[test]
    fn root_frequency() {
        // 99% binomial half-width at n = 10_000, p = 0.7 is ~0.012.
        let net = coin(0.7);
        let mut rng = case_rng(42, 0);
        let hits = (0..10_000)
            .filter(|_| draw_case(&net, &[], &mut rng).unwrap().values[0] == 1)
            .count();
        assert!((hits as f64 / 10_000.0 - 0.7).abs() < 0.02);
    }

    #[test]
    fn mix_composition() {
        let net = coin(0.5);
        let empty = generate_mix(&net, &MixSpec { x: 0, y: 1, m: 0, n: 0, seed: 3 }).unwrap();
        assert!(empty.is_empty());

        let spec = MixSpec { x: 0, y: 1, m: 4, n: 3, seed: 3 };
        let d = generate_mix(&net, &spec).unwrap();
        assert_eq!(d.len(), 7);
        let flags: Vec<Vec<bool>> = d.cases().iter().map(|c| c.manipulated.clone()).collect();
        assert_eq!(
            flags,
            vec![
                vec![true, false],
                vec![true, false],
                vec![false, true],
                vec![false, true],
                vec![false, false],
                vec![false, false],
                vec![false, false],
            ]
        );
        assert_eq!(generate_mix(&net, &spec).unwrap(), d);
    }

    #[test]
    fn mix_errors() {
        let net = coin(0.5);
        assert!(generate_mix(&net, &MixSpec { x: 0, y: 1, m: 3, n: 0, seed: 0 }).is_err());
        assert!(generate_mix(&net, &MixSpec { x: 1, y: 1, m: 2, n: 0, seed: 0 }).is_err());
    }

    #[test]
    fn derive_seed_separates_inputs() {
        assert_ne!(derive_seed(&[1, 2]), derive_seed(&[2, 1]));
        assert_ne!(derive_seed(&[0]), derive_seed(&[0, 0]));
    }
}
