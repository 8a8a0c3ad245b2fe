//! Stochastic baseline strategies: URS, RWS, RS, TS and SUS.
//!
//! All of them except URS fill an [`IntermediatePopulation`] of exactly
//! `2T` slots at the start of a generation, which is then consumed two
//! slots at a time. Members are referred to by their index in the
//! population.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ranks_by;
use crate::error::{Error, Result};
use crate::problem::Direction;

const SHIFT_EPSILON: f64 = 1e-9;

/// Proportional selection weights, one per population member.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionWeights {
    weights: Vec<f64>,
}

impl SelectionWeights {
    /// Normalizes arbitrary positive weights.
    pub fn from_positive(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Selection("no weights".into()));
        }
        if raw.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Selection("weights must be finite and positive".into()));
        }
        let total: f64 = raw.iter().sum();
        Ok(Self {
            weights: raw.iter().map(|w| w / total).collect(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut cum: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        cum
    }
}

/// Fitness-proportional weights from raw objectives.
///
/// Maximization uses the objectives directly, shifted to be positive when
/// any is `<= 0`. Minimization uses reciprocals, which requires strictly
/// positive objectives.
pub fn selection_weights(objectives: &[f64], direction: Direction) -> Result<SelectionWeights> {
    if objectives.iter().any(|o| !o.is_finite()) {
        return Err(Error::Selection("non-finite objective".into()));
    }
    let raw: Vec<f64> = match direction {
        Direction::Maximize => {
            let min = objectives.iter().copied().fold(f64::INFINITY, f64::min);
            if min <= 0.0 {
                objectives.iter().map(|o| o - min + SHIFT_EPSILON).collect()
            } else {
                objectives.to_vec()
            }
        }
        Direction::Minimize => {
            if objectives.iter().any(|o| *o <= 0.0) {
                return Err(Error::Selection(
                    "proportional weights under minimization need positive objectives".into(),
                ));
            }
            objectives.iter().map(|o| 1.0 / o).collect()
        }
    };
    SelectionWeights::from_positive(&raw)
}

/// Two distinct members drawn uniformly, the unordered pair uniform too.
pub fn urs_pair<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<(usize, usize)> {
    if len < 2 {
        return Err(Error::Selection("uniform pair needs at least two members".into()));
    }
    let a = rng.random_range(0..len);
    let mut b = rng.random_range(0..len - 1);
    if b >= a {
        b += 1;
    }
    Ok((a, b))
}

/// Selected member indices, consumed pairwise after a one-time shuffle.
#[derive(Debug, Clone)]
pub struct IntermediatePopulation {
    slots: Vec<usize>,
    cursor: usize,
}

impl IntermediatePopulation {
    /// Shuffles the slots once; pairs are then read sequentially.
    pub fn new<R: Rng + ?Sized>(mut slots: Vec<usize>, rng: &mut R) -> Self {
        slots.shuffle(rng);
        Self { slots, cursor: 0 }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.slots.len() - self.cursor
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    /// Per-member number of slots holding it.
    pub fn counts(&self, population_len: usize) -> Vec<usize> {
        let mut counts = vec![0; population_len];
        for &s in &self.slots {
            counts[s] += 1;
        }
        counts
    }

    pub fn next_pair(&mut self) -> Result<(usize, usize)> {
        if self.cursor + 2 > self.slots.len() {
            return Err(Error::Selection("intermediate population exhausted".into()));
        }
        let pair = (self.slots[self.cursor], self.slots[self.cursor + 1]);
        self.cursor += 2;
        Ok(pair)
    }
}

fn wheel_draw<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let x: f64 = rng.random();
    cumulative
        .partition_point(|&c| c <= x)
        .min(cumulative.len() - 1)
}

/// Roulette wheel: `slots` independent draws with replacement.
pub fn rws_build_intermediate<R: Rng + ?Sized>(
    weights: &SelectionWeights,
    slots: usize,
    rng: &mut R,
) -> IntermediatePopulation {
    let cum = weights.cumulative();
    let picks = (0..slots).map(|_| wheel_draw(&cum, rng)).collect();
    IntermediatePopulation::new(picks, rng)
}

/// Linear ranking weights `rank_i / sum(ranks)`, best member ranked `|P|`.
pub fn rank_weights(objectives: &[f64], ids: &[u64], direction: Direction) -> Result<SelectionWeights> {
    let ranks = ranks_by(ids, |a, b| direction.best_first(objectives[a], objectives[b]));
    let raw: Vec<f64> = ranks.iter().map(|&r| r as f64).collect();
    SelectionWeights::from_positive(&raw)
}

/// Ranking selection: proportional draws on rank weights.
pub fn rs_build_intermediate<R: Rng + ?Sized>(
    objectives: &[f64],
    ids: &[u64],
    direction: Direction,
    slots: usize,
    rng: &mut R,
) -> Result<IntermediatePopulation> {
    let weights = rank_weights(objectives, ids, direction)?;
    Ok(rws_build_intermediate(&weights, slots, rng))
}

/// Binary tournament with distinct entrants, decided by the higher reward
/// (ties to the lower id).
pub fn ts_build_intermediate<R: Rng + ?Sized>(
    rewards: &[f64],
    ids: &[u64],
    slots: usize,
    rng: &mut R,
) -> Result<IntermediatePopulation> {
    if rewards.len() < 2 {
        return Err(Error::Selection("tournament needs at least two members".into()));
    }
    let mut picks = Vec::with_capacity(slots);
    for _ in 0..slots {
        let (a, b) = urs_pair(rewards.len(), rng)?;
        let a_wins = rewards[a] > rewards[b] || (rewards[a] == rewards[b] && ids[a] < ids[b]);
        picks.push(if a_wins { a } else { b });
    }
    Ok(IntermediatePopulation::new(picks, rng))
}

/// Stochastic universal sampling: one offset in `[0, 1/slots)` and
/// `slots` equidistant pointers over the cumulative weights.
pub fn sus_build_intermediate<R: Rng + ?Sized>(
    weights: &SelectionWeights,
    slots: usize,
    rng: &mut R,
) -> IntermediatePopulation {
    let picks = sus_picks(weights, slots, rng.random::<f64>());
    IntermediatePopulation::new(picks, rng)
}

/// Deterministic pointer sweep for a unit offset fraction `u` in `[0, 1)`.
pub(crate) fn sus_picks(weights: &SelectionWeights, slots: usize, u: f64) -> Vec<usize> {
    if slots == 0 {
        return Vec::new();
    }
    // Pointer k sits at (u + k) / slots; comparing u against the scaled
    // boundary minus k keeps integral expectations exact for u near 1.
    let bounds: Vec<f64> = weights.cumulative().iter().map(|c| c * slots as f64).collect();
    let mut picks = Vec::with_capacity(slots);
    let mut member = 0;
    for k in 0..slots {
        while member + 1 < bounds.len() && u >= bounds[member] - k as f64 {
            member += 1;
        }
        picks.push(member);
    }
    picks
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn maximization_weights_normalize_directly() {
        let w = selection_weights(&[1.0, 3.0], Direction::Maximize).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
    }

    #[test]
    fn minimization_weights_use_reciprocals() {
        let w = selection_weights(&[1.0, 3.0], Direction::Minimize).unwrap();
        assert!((w.as_slice()[0] - 0.75).abs() < 1e-15);
        assert!((w.as_slice()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_member_wheel() {
        let w = selection_weights(&[42.0], Direction::Maximize).unwrap();
        assert_eq!(w.as_slice(), &[1.0]);
        let ip = rws_build_intermediate(&w, 6, &mut rng());
        assert!(ip.slots().iter().all(|&s| s == 0));
        let ip = sus_build_intermediate(&w, 6, &mut rng());
        assert!(ip.slots().iter().all(|&s| s == 0));
    }

    #[test]
    fn non_positive_maximization_objectives_are_shifted() {
        let w = selection_weights(&[-2.0, 0.0, 2.0], Direction::Maximize).unwrap();
        assert!(w.as_slice().iter().all(|&x| x > 0.0));
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.as_slice()[2] > w.as_slice()[1]);
    }

    #[test]
    fn invalid_objectives_are_rejected() {
        assert!(selection_weights(&[1.0, f64::NAN], Direction::Maximize).is_err());
        assert!(selection_weights(&[0.0, 3.0], Direction::Minimize).is_err());
    }

    #[test]
    fn urs_pair_is_distinct() {
        let mut r = rng();
        assert_eq!(urs_pair(2, &mut r).map(|(a, b)| a + b).unwrap(), 1);
        for _ in 0..1000 {
            let (a, b) = urs_pair(5, &mut r).unwrap();
            assert_ne!(a, b);
        }
        assert!(urs_pair(1, &mut r).is_err());
    }

    #[test]
    fn urs_pairs_are_uniform() {
        let mut r = rng();
        let mut counts = [0usize; 3];
        let draws = 30_000;
        for _ in 0..draws {
            let (a, b) = urs_pair(3, &mut r).unwrap();
            counts[a + b - 1] += 1; // {0,1}->0, {0,2}->1, {1,2}->2
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn rws_balanced_and_skewed_counts() {
        let mut r = rng();
        let w = SelectionWeights::from_positive(&[0.5, 0.5]).unwrap();
        let c = rws_build_intermediate(&w, 10_000, &mut r).counts(2);
        assert!((c[0] as i64 - 5000).abs() <= 150, "{c:?}");
        let w = SelectionWeights::from_positive(&[0.9, 0.1]).unwrap();
        let c = rws_build_intermediate(&w, 10_000, &mut r).counts(2);
        assert!((c[0] as i64 - 9000).abs() <= 100, "{c:?}");
    }

    #[test]
    fn rs_favors_best_two_to_one() {
        let mut r = rng();
        let ip = rs_build_intermediate(&[5.0, 1.0], &[0, 1], Direction::Maximize, 10_000, &mut r).unwrap();
        let f = ip.counts(2)[0] as f64 / 10_000.0;
        assert!((f - 2.0 / 3.0).abs() < 0.02, "{f}");
        let ip = rs_build_intermediate(&[5.0], &[0], Direction::Maximize, 4, &mut r).unwrap();
        assert_eq!(ip.slots(), &[0, 0, 0, 0]);
    }

    #[test]
    fn rs_minimization_ranks_lowest_cost_best() {
        let w = rank_weights(&[30.0, 10.0, 20.0], &[0, 1, 2], Direction::Minimize).unwrap();
        assert_eq!(w.as_slice(), &[1.0 / 6.0, 3.0 / 6.0, 2.0 / 6.0]);
    }

    #[test]
    fn rs_ties_rank_by_id() {
        let w = rank_weights(&[1.0, 1.0], &[4, 2], Direction::Maximize).unwrap();
        // id 2 gets rank 2.
        assert!(w.as_slice()[1] > w.as_slice()[0]);
    }

    #[test]
    fn tournament_two_members() {
        let mut r = rng();
        let ip = ts_build_intermediate(&[1.9, 0.8], &[0, 1], 50, &mut r).unwrap();
        assert!(ip.slots().iter().all(|&s| s == 0));
        let ip = ts_build_intermediate(&[1.0, 1.0], &[3, 2], 50, &mut r).unwrap();
        assert!(ip.slots().iter().all(|&s| s == 1));
        assert!(ts_build_intermediate(&[1.0], &[0], 2, &mut r).is_err());
    }

    #[test]
    fn tournament_best_of_three_frequency() {
        let mut r = rng();
        let ip = ts_build_intermediate(&[0.3, 1.2, 0.7], &[0, 1, 2], 30_000, &mut r).unwrap();
        let f = ip.counts(3)[1] as f64 / 30_000.0;
        assert!((f - 2.0 / 3.0).abs() < 0.02, "{f}");
    }

    #[test]
    fn sus_integral_expectations_are_exact() {
        let mut r = rng();
        let w = SelectionWeights::from_positive(&[0.5, 0.3, 0.2]).unwrap();
        for _ in 0..200 {
            assert_eq!(sus_build_intermediate(&w, 10, &mut r).counts(3), vec![5, 3, 2]);
        }
        let w = SelectionWeights::from_positive(&[0.25, 0.75]).unwrap();
        for _ in 0..200 {
            assert_eq!(sus_build_intermediate(&w, 4, &mut r).counts(2), vec![1, 3]);
        }
    }

    #[test]
    fn sus_extreme_offsets() {
        let w = SelectionWeights::from_positive(&[0.5, 0.3, 0.2]).unwrap();
        let counts = |u: f64| {
            let mut c = [0; 3];
            for p in sus_picks(&w, 10, u) {
                c[p] += 1;
            }
            c
        };
        assert_eq!(counts(0.0), [5, 3, 2]);
        assert_eq!(counts(1.0 - f64::EPSILON), [5, 3, 2]);
    }

    #[test]
    fn pairs_are_consumed_without_reuse() {
        let mut r = rng();
        let mut ip = IntermediatePopulation::new(vec![3, 1], &mut r);
        let (a, b) = ip.next_pair().unwrap();
        assert_eq!(a + b, 4);
        assert!(ip.next_pair().is_err());

        let mut ip = IntermediatePopulation::new((0..20).collect(), &mut r);
        let mut seen = Vec::new();
        for _ in 0..10 {
            let (a, b) = ip.next_pair().unwrap();
            seen.push(a);
            seen.push(b);
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..20).collect::<Vec<_>>());
        assert_eq!(ip.remaining(), 0);
    }

    #[test]
    fn shuffle_is_reproducible() {
        let a = IntermediatePopulation::new((0..50).collect(), &mut ChaCha8Rng::seed_from_u64(5));
        let b = IntermediatePopulation::new((0..50).collect(), &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.slots(), b.slots());
    }
}
