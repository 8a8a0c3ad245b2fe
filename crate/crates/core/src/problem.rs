//! The interface a combinatorial problem exposes to the GA engine.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;

use crate::error::Result;

/// Optimization direction of a problem's objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// `true` if `a` is strictly better than `b`.
    pub fn is_better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }

    /// Orders `a` before `b` when `a` is better.
    pub fn best_first(self, a: f64, b: f64) -> Ordering {
        match self {
            Direction::Maximize => b.total_cmp(&a),
            Direction::Minimize => a.total_cmp(&b),
        }
    }

    /// The better of the two values.
    pub fn best(self, a: f64, b: f64) -> f64 {
        if self.is_better(b, a) {
            b
        } else {
            a
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Maximize => "maximize",
            Direction::Minimize => "minimize",
        })
    }
}

/// A problem model: representation, objective, feasibility and variation
/// operators, plus the similarity measure used by the bandit selection.
///
/// `Signature` is the per-chromosome representation similarity is computed
/// on; it is derived once per generation so the O(|P|^2) similarity passes
/// do not rebuild it for every pair.
pub trait Problem: Sync {
    type Genotype: Clone + fmt::Debug + PartialEq + Send + Sync;
    type Signature: Send + Sync;

    fn direction(&self) -> Direction;

    fn objective(&self, genotype: &Self::Genotype) -> f64;

    fn is_feasible(&self, genotype: &Self::Genotype) -> bool;

    fn random_solution<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self::Genotype>;

    fn recombine<R: Rng + ?Sized>(
        &self,
        a: &Self::Genotype,
        b: &Self::Genotype,
        rng: &mut R,
    ) -> Result<(Self::Genotype, Self::Genotype)>;

    fn mutate<R: Rng + ?Sized>(&self, genotype: &Self::Genotype, rng: &mut R) -> Self::Genotype;

    fn signature(&self, genotype: &Self::Genotype, objective: f64) -> Self::Signature;

    /// Symmetric similarity in `[0, 1]` with `similarity(a, a) == 1`.
    fn similarity(&self, a: &Self::Signature, b: &Self::Signature) -> f64;
}
