//! Upper bound-based parent selection.
//!
//! Every population member is an arm. Within a generation (Phase I) the two
//! members with the largest upper bounds
//!
//! ```text
//! u_a = r_a + 2 * sqrt(2 * ln(m*T + t) / (N_a + 1))
//! ```
//!
//! are selected at each of the `T` steps, their counters `N_a` are bumped by
//! one and only their bounds are refreshed. Between generations (Phase II)
//! the counters of the new population are seeded from the old one,
//! weighted by similarity:
//!
//! ```text
//! N_b = sum_a Sim(a, b) * N_a / |P_old|
//! ```
//!
//! Rewards are the normalized objective in generation 0 and the rank-based
//! diversity fitness afterwards.

use std::io::Write;

use super::{ranks_by, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::problem::Direction;

/// The modified UCB1 index.
///
/// `step` is the log-argument step: `1` when bounds are initialized at the
/// start of a generation, `t + 1` after an update at selection step `t`.
pub fn upper_bound(reward: f64, counter: f64, generation: usize, horizon: usize, step: usize) -> f64 {
    let arg = (generation * horizon + step) as f64;
    reward + 2.0 * (2.0 * arg.ln() / (counter + 1.0)).sqrt()
}

/// Generation-0 rewards: objectives normalized so the best member gets 1.
///
/// Maximization uses `obj / max`, minimization `min / obj`. A zero maximum
/// under maximization gives a flat start with every reward at 1.
pub fn init_generation0_rewards(objectives: &[f64], direction: Direction) -> Result<Vec<f64>> {
    if objectives.iter().any(|o| !o.is_finite()) {
        return Err(Error::Selection("non-finite objective".into()));
    }
    match direction {
        Direction::Maximize => {
            let max = objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max <= 0.0 {
                return Ok(vec![1.0; objectives.len()]);
            }
            Ok(objectives.iter().map(|o| o / max).collect())
        }
        Direction::Minimize => {
            if objectives.iter().any(|o| *o <= 0.0) {
                return Err(Error::Selection(
                    "normalized rewards under minimization need positive objectives".into(),
                ));
            }
            let min = objectives.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(objectives.iter().map(|o| min / o).collect())
        }
    }
}

/// Mean similarity of each member to every *other* member.
pub fn mean_similarity(sim: &SimilarityMatrix) -> Vec<f64> {
    let n = sim.rows();
    if n <= 1 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let total: f64 = sim.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
            total / (n - 1) as f64
        })
        .collect()
}

/// Rank-based fitness from objectives and mean similarities:
///
/// `r_a = rank(obj_a)/|P| + (1 - n_elite/|P|) * rank(sim_a)/|P|`
///
/// The objective rank follows `direction`; for similarity, the *less*
/// similar (more diverse) member gets the higher rank.
pub fn fitness_from_scores(
    objectives: &[f64],
    mean_sim: &[f64],
    ids: &[u64],
    n_elite: usize,
    direction: Direction,
) -> Vec<f64> {
    let n = objectives.len();
    assert_eq!(mean_sim.len(), n);
    assert_eq!(ids.len(), n);
    let p = n as f64;
    let obj_rank = ranks_by(ids, |a, b| direction.best_first(objectives[a], objectives[b]));
    let sim_rank = ranks_by(ids, |a, b| mean_sim[a].total_cmp(&mean_sim[b]));
    let diversity_weight = 1.0 - n_elite as f64 / p;
    (0..n)
        .map(|a| obj_rank[a] as f64 / p + diversity_weight * sim_rank[a] as f64 / p)
        .collect()
}

/// Rank-based fitness computed from a within-population similarity matrix.
pub fn compute_fitness_rewards(
    objectives: &[f64],
    ids: &[u64],
    n_elite: usize,
    direction: Direction,
    sim: &SimilarityMatrix,
) -> Vec<f64> {
    fitness_from_scores(objectives, &mean_similarity(sim), ids, n_elite, direction)
}

/// The size-2 subset with the largest total bound: the two largest values,
/// ties to the lower id. Returns `(first, second)` in bound order.
pub fn select_top_pair(bounds: &[f64], ids: &[u64]) -> Result<(usize, usize)> {
    if bounds.len() < 2 {
        return Err(Error::Selection("bandit selection needs at least two members".into()));
    }
    let beats = |a: usize, b: usize| bounds[a] > bounds[b] || (bounds[a] == bounds[b] && ids[a] < ids[b]);
    let (mut first, mut second) = if beats(1, 0) { (1, 0) } else { (0, 1) };
    for i in 2..bounds.len() {
        if beats(i, first) {
            second = first;
            first = i;
        } else if beats(i, second) {
            second = i;
        }
    }
    Ok((first, second))
}

/// Similarity-weighted counters for a new population.
///
/// `cross[a][b]` is `Sim(old_a, new_b)`; the result has one entry per
/// column.
pub fn transfer_counters(prev_counters: &[f64], cross: &SimilarityMatrix) -> Vec<f64> {
    assert_eq!(cross.rows(), prev_counters.len());
    let p = prev_counters.len() as f64;
    (0..cross.cols())
        .map(|b| {
            let total: f64 = prev_counters
                .iter()
                .enumerate()
                .map(|(a, n)| cross.get(a, b) * n)
                .sum();
            total / p
        })
        .collect()
}

/// Bandit state for the current generation. Vectors are aligned with the
/// population's member order.
#[derive(Debug, Clone, PartialEq)]
pub struct UbsState {
    ids: Vec<u64>,
    rewards: Vec<f64>,
    counters: Vec<f64>,
    start_counters: Vec<f64>,
    bounds: Vec<f64>,
    step: usize,
    horizon: usize,
    generation: usize,
}

impl UbsState {
    /// Starts Phase I of `generation` and initializes every bound with
    /// step 1.
    pub fn begin_generation(
        ids: Vec<u64>,
        rewards: Vec<f64>,
        counters: Vec<f64>,
        generation: usize,
        horizon: usize,
    ) -> Result<Self> {
        let n = ids.len();
        if rewards.len() != n || counters.len() != n {
            return Err(Error::Selection("bandit state vectors differ in length".into()));
        }
        if counters.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Selection("selection counters must be non-negative".into()));
        }
        let mut state = Self {
            ids,
            rewards,
            start_counters: counters.clone(),
            counters,
            bounds: vec![0.0; n],
            step: 1,
            horizon,
            generation,
        };
        state.init_generation_bounds();
        Ok(state)
    }

    /// Recomputes all bounds for step 1 of the current generation.
    pub fn init_generation_bounds(&mut self) {
        self.step = 1;
        for a in 0..self.ids.len() {
            self.bounds[a] = upper_bound(self.rewards[a], self.counters[a], self.generation, self.horizon, 1);
        }
    }

    /// Current top-2 selection; does not mutate the state.
    pub fn select_pair(&self) -> Result<(usize, usize)> {
        if self.step > self.horizon {
            return Err(Error::Selection(format!(
                "all {} selection steps of generation {} are used",
                self.horizon, self.generation
            )));
        }
        select_top_pair(&self.bounds, &self.ids)
    }

    /// Adds one to both selected counters.
    pub fn increment_counters(&mut self, selected: (usize, usize)) {
        debug_assert_ne!(selected.0, selected.1);
        self.counters[selected.0] += 1.0;
        self.counters[selected.1] += 1.0;
    }

    /// Refreshes the bounds of the selected members for `step + 1` and
    /// advances the step. Counters must already be incremented.
    pub fn update_upper_bounds(&mut self, selected: (usize, usize)) {
        let next = self.step + 1;
        for a in [selected.0, selected.1] {
            self.bounds[a] = upper_bound(self.rewards[a], self.counters[a], self.generation, self.horizon, next);
        }
        self.step = next;
    }

    /// One complete selection step.
    pub fn select_and_update(&mut self) -> Result<(usize, usize)> {
        let pair = self.select_pair()?;
        self.increment_counters(pair);
        self.update_upper_bounds(pair);
        Ok(pair)
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn counters(&self) -> &[f64] {
        &self.counters
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Next selection step, in `1..=T+1`.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    /// Counter increase since the generation started; always `2 * (step - 1)`.
    pub fn counter_growth(&self) -> f64 {
        self.counters.iter().zip(&self.start_counters).map(|(n, s)| n - s).sum()
    }

    pub const CSV_HEADER: &'static str = "generation,step,id,reward,counter,bound";

    /// Appends one CSV row per member.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for a in 0..self.ids.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                self.generation, self.step, self.ids[a], self.rewards[a], self.counters[a], self.bounds[a]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_hand_value() {
        let u = upper_bound(0.5, 3.0, 1, 10, 5);
        let expected = 0.5 + 2.0 * (2.0 * 15f64.ln() / 4.0).sqrt();
        assert!((u - expected).abs() < 1e-12);
        assert!((u - 2.827_25).abs() < 1e-5, "{u}");
    }

    #[test]
    fn bound_is_pure_reward_at_first_step() {
        assert_eq!(upper_bound(0.37, 0.0, 0, 25, 1), 0.37);
        assert!((upper_bound(1.0, 1e12, 3, 10, 4) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn generation0_rewards() {
        assert_eq!(init_generation0_rewards(&[50.0, 100.0], Direction::Maximize).unwrap(), vec![0.5, 1.0]);
        assert_eq!(init_generation0_rewards(&[80.0, 100.0], Direction::Minimize).unwrap(), vec![1.0, 0.8]);
        assert_eq!(init_generation0_rewards(&[7.0, 7.0, 7.0], Direction::Minimize).unwrap(), vec![1.0; 3]);
        assert_eq!(init_generation0_rewards(&[0.0, 0.0], Direction::Maximize).unwrap(), vec![1.0, 1.0]);
        assert!(init_generation0_rewards(&[0.0, 4.0], Direction::Minimize).is_err());
    }

    #[test]
    fn fitness_hand_value() {
        let r = fitness_from_scores(
            &[10.0, 20.0, 30.0, 40.0],
            &[0.9, 0.5, 0.7, 0.2],
            &[0, 1, 2, 3],
            1,
            Direction::Maximize,
        );
        assert_eq!(r[3], 1.75);
        // obj rank 1, sim rank 1 (most similar)
        assert_eq!(r[0], 0.25 + 0.75 * 0.25);
    }

    #[test]
    fn fitness_single_member() {
        let sim = SimilarityMatrix::symmetric(1, |_, _| unreachable!());
        assert_eq!(compute_fitness_rewards(&[3.0], &[9], 0, Direction::Minimize, &sim), vec![2.0]);
    }

    #[test]
    fn mean_similarity_excludes_self() {
        let sim = SimilarityMatrix::from_rows(vec![
            vec![1.0, 0.2, 0.4],
            vec![0.2, 1.0, 0.6],
            vec![0.4, 0.6, 1.0],
        ]);
        let m = mean_similarity(&sim);
        assert!((m[0] - 0.3).abs() < 1e-15);
        assert!((m[1] - 0.4).abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn top_pair_examples() {
        assert_eq!(select_top_pair(&[0.9, 0.3, 0.7], &[0, 1, 2]).unwrap(), (0, 2));
        assert_eq!(select_top_pair(&[0.5, 0.5, 0.5], &[0, 1, 2]).unwrap(), (0, 1));
        assert_eq!(select_top_pair(&[0.5, 0.5, 0.5], &[9, 4, 6]).unwrap(), (1, 2));
        assert!(select_top_pair(&[1.0], &[0]).is_err());
    }

    #[test]
    fn counter_transfer_hand_value() {
        let cross = SimilarityMatrix::from_rows(vec![vec![1.0], vec![0.5]]);
        assert_eq!(transfer_counters(&[4.0, 2.0], &cross), vec![2.5]);
        let zero = SimilarityMatrix::from_rows(vec![vec![0.0], vec![0.0]]);
        assert_eq!(transfer_counters(&[4.0, 2.0], &zero), vec![0.0]);
        let ones = SimilarityMatrix::from_rows(vec![vec![1.0], vec![1.0], vec![1.0]]);
        assert_eq!(transfer_counters(&[3.0, 6.0, 9.0], &ones), vec![6.0]);
    }

    #[test]
    fn counters_and_bounds_evolve_per_selection() {
        let mut s = UbsState::begin_generation(vec![0, 1, 2], vec![1.0, 0.5, 0.9], vec![0.0, 2.5, 0.0], 0, 4).unwrap();
        assert_eq!(s.bounds(), &[1.0, 0.5, 0.9]);
        let pair = s.select_and_update().unwrap();
        assert_eq!(pair, (0, 2));
        assert_eq!(s.counters(), &[1.0, 2.5, 1.0]);
        assert_eq!(s.bounds()[1], 0.5);
        assert_eq!(s.bounds()[0], upper_bound(1.0, 1.0, 0, 4, 2));
        assert_eq!(s.step(), 2);
        assert_eq!(s.counter_growth(), 2.0);
    }

    #[test]
    fn fractional_counter_increments_by_one() {
        let mut s = UbsState::begin_generation(vec![0, 1], vec![0.2, 0.1], vec![2.5, 0.0], 1, 10).unwrap();
        let expected = 0.2 + 2.0 * (2.0 * 11f64.ln() / 3.5).sqrt();
        assert!((s.bounds()[0] - expected).abs() < 1e-12);
        s.increment_counters((0, 1));
        assert_eq!(s.counters(), &[3.5, 1.0]);
    }

    #[test]
    fn selection_stops_at_horizon() {
        let mut s = UbsState::begin_generation(vec![0, 1], vec![0.2, 0.1], vec![0.0, 0.0], 0, 2).unwrap();
        s.select_and_update().unwrap();
        s.select_and_update().unwrap();
        assert!(s.select_pair().is_err());
    }

    #[test]
    fn state_dump_has_one_row_per_member() {
        let s = UbsState::begin_generation(vec![5, 6], vec![0.2, 0.1], vec![0.0, 0.0], 0, 2).unwrap();
        let mut buf = Vec::new();
        s.write_csv_rows(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("0,1,5,0.2,0,0.2"));
    }
}
