//! Parent selection strategies.
//!
//! The five stochastic baselines live in [`traditional`]; the deterministic
//! upper-bound strategy lives in [`ubs`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub mod traditional;
pub mod ubs;

/// Identifier of a parent-selection strategy, as used on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyId {
    /// Upper bound-based selection (modified UCB1).
    Ubs,
    /// Uniform random selection.
    Urs,
    /// Roulette wheel selection.
    Rws,
    /// Ranking selection (reported as "RBS" in result tables).
    #[serde(alias = "rbs")]
    Rs,
    /// Binary tournament selection on the rank-based fitness.
    Ts,
    /// Stochastic universal sampling.
    Sus,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::Ubs,
        StrategyId::Urs,
        StrategyId::Rws,
        StrategyId::Rs,
        StrategyId::Ts,
        StrategyId::Sus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::Ubs => "ubs",
            StrategyId::Urs => "urs",
            StrategyId::Rws => "rws",
            StrategyId::Rs => "rs",
            StrategyId::Ts => "ts",
            StrategyId::Sus => "sus",
        }
    }

    /// Strategies that fill an intermediate population before pairing.
    pub fn uses_intermediate_population(self) -> bool {
        !matches!(self, StrategyId::Ubs | StrategyId::Urs)
    }

    /// Strategies whose reward is the rank-based diversity fitness.
    pub fn uses_fitness_rewards(self) -> bool {
        matches!(self, StrategyId::Ubs | StrategyId::Ts)
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ubs" => Ok(StrategyId::Ubs),
            "urs" => Ok(StrategyId::Urs),
            "rws" => Ok(StrategyId::Rws),
            "rs" | "rbs" => Ok(StrategyId::Rs),
            "ts" => Ok(StrategyId::Ts),
            "sus" => Ok(StrategyId::Sus),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Ranks `1..=n` where rank `n` goes to the best element.
///
/// `better_first(a, b)` must order `a` before `b` when `a` is better. Equal
/// elements are ranked by id: the lower id receives the higher rank.
pub fn ranks_by<F>(ids: &[u64], better_first: F) -> Vec<usize>
where
    F: Fn(usize, usize) -> Ordering,
{
    let mut order: Vec<usize> = (0..ids.len()).collect();
    // Worst first; among ties the higher id comes first so the lower id
    // lands on the larger rank.
    order.sort_by(|&a, &b| better_first(b, a).then_with(|| ids[b].cmp(&ids[a])));
    let mut ranks = vec![0; ids.len()];
    for (pos, &idx) in order.iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}

/// Dense rows x cols matrix of similarity values.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn from_fn<F>(rows: usize, cols: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Symmetric square matrix with a unit diagonal; `f` is evaluated once
    /// per unordered pair.
    pub fn symmetric<F>(n: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut data = vec![1.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { rows: n, cols: n, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged similarity rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_ids_parse_and_print() {
        for s in StrategyId::ALL {
            assert_eq!(s.as_str().parse::<StrategyId>().unwrap(), s);
        }
        assert_eq!("RBS".parse::<StrategyId>().unwrap(), StrategyId::Rs);
        assert!("boltzmann".parse::<StrategyId>().is_err());
    }

    #[test]
    fn ranks_give_best_the_top_rank_and_break_ties_by_id() {
        let values: [f64; 4] = [10.0, 40.0, 20.0, 40.0];
        let ids = [0, 1, 2, 3];
        let r = ranks_by(&ids, |a, b| values[b].total_cmp(&values[a]));
        // 40 (id 1) beats 40 (id 3) on the id tie rule.
        assert_eq!(r, vec![1, 4, 2, 3]);
    }

    #[test]
    fn equal_values_rank_by_id_order() {
        let ids = [7, 3, 5];
        let r = ranks_by(&ids, |_, _| Ordering::Equal);
        assert_eq!(r, vec![1, 3, 2]);
    }
}
