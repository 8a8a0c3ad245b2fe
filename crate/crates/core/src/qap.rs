//! Quadratic assignment: permutation chromosomes, two-point crossover with
//! order-preserving repair, swap mutation, objective-ratio similarity.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::problem::{Direction, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct QapInstance {
    n: usize,
    flow: Vec<f64>,
    distance: Vec<f64>,
}

impl QapInstance {
    /// Row-major `n x n` flow and distance matrices.
    pub fn new(n: usize, flow: Vec<f64>, distance: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Instance("QAP size must be positive".into()));
        }
        if flow.len() != n * n || distance.len() != n * n {
            return Err(Error::Instance(format!(
                "expected two {n}x{n} matrices, got {} and {} entries",
                flow.len(),
                distance.len()
            )));
        }
        if flow.iter().chain(&distance).any(|v| !v.is_finite()) {
            return Err(Error::Instance("matrix entries must be finite".into()));
        }
        Ok(Self { n, flow, distance })
    }

    pub fn from_rows(flow: &[Vec<f64>], distance: &[Vec<f64>]) -> Result<Self> {
        let n = flow.len();
        if flow.iter().chain(distance).any(|r| r.len() != n) || distance.len() != n {
            return Err(Error::Instance("matrices must be square and of equal size".into()));
        }
        Self::new(n, flow.concat(), distance.concat())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn flow(&self, a: usize, b: usize) -> f64 {
        self.flow[a * self.n + b]
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance[i * self.n + j]
    }

    pub fn flow_matrix(&self) -> &[f64] {
        &self.flow
    }

    pub fn distance_matrix(&self) -> &[f64] {
        &self.distance
    }
}

/// Facility `a` is placed at location `perm[a]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QapSolution {
    pub perm: Vec<usize>,
}

impl QapSolution {
    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn is_permutation(&self) -> bool {
        is_permutation(&self.perm)
    }
}

pub fn is_permutation(values: &[usize]) -> bool {
    let mut seen = vec![false; values.len()];
    values
        .iter()
        .all(|&v| v < seen.len() && !std::mem::replace(&mut seen[v], true))
}

/// `sum_{a,b} f_ab * d_{perm(a), perm(b)}` over all ordered pairs, diagonal
/// included.
pub fn qap_objective(sol: &QapSolution, inst: &QapInstance) -> f64 {
    let n = inst.n;
    let mut total = 0.0;
    for a in 0..n {
        let flow_row = &inst.flow[a * n..(a + 1) * n];
        let dist_row = &inst.distance[sol.perm[a] * n..(sol.perm[a] + 1) * n];
        for (b, f) in flow_row.iter().enumerate() {
            total += f * dist_row[sol.perm[b]];
        }
    }
    total
}

/// Child keeping `keep[i..j)` in place, other positions filled left to right
/// with `fill`'s values in `fill`'s order, skipping values already present.
pub fn two_point_child(keep: &[usize], fill: &[usize], i: usize, j: usize) -> Vec<usize> {
    let n = keep.len();
    assert!(i <= j && j <= n && fill.len() == n);
    let max = keep.iter().chain(fill).copied().max().map_or(0, |m| m + 1);
    let mut present = vec![false; max];
    for &v in &keep[i..j] {
        present[v] = true;
    }
    let mut source = fill.iter().copied().filter(|&v| !present[v]);
    let mut child = Vec::with_capacity(n);
    for pos in 0..n {
        if (i..j).contains(&pos) {
            child.push(keep[pos]);
        } else {
            child.push(source.next().expect("fill parent is a permutation of the same values"));
        }
    }
    child
}

/// Two-point crossover over cuts `0 <= i < j <= n` drawn uniformly among
/// all such pairs.
pub fn qap_two_point_crossover<R: Rng + ?Sized>(
    p1: &QapSolution,
    p2: &QapSolution,
    rng: &mut R,
) -> (QapSolution, QapSolution) {
    let n = p1.perm.len();
    let (i, j) = random_cuts(n, rng);
    (
        QapSolution {
            perm: two_point_child(&p1.perm, &p2.perm, i, j),
        },
        QapSolution {
            perm: two_point_child(&p2.perm, &p1.perm, i, j),
        },
    )
}

/// Uniform over the `n(n+1)/2` pairs `0 <= i < j <= n`.
pub fn random_cuts<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let pairs = n * (n + 1) / 2;
    let mut k = rng.random_range(0..pairs);
    // Pairs with cut i come in a block of n - i entries.
    let mut i = 0;
    while k >= n - i {
        k -= n - i;
        i += 1;
    }
    (i, i + 1 + k)
}

/// Exchanges the values at two distinct uniformly chosen positions.
pub fn qap_swap_mutation<R: Rng + ?Sized>(sol: &QapSolution, rng: &mut R) -> QapSolution {
    let n = sol.perm.len();
    let mut out = sol.clone();
    if n < 2 {
        return out;
    }
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    out.perm.swap(a, b);
    out
}

/// `min / max` of the two objectives. Zero objectives: both zero gives 1,
/// a single zero is replaced by machine epsilon.
pub fn qap_similarity(obj_a: f64, obj_b: f64) -> f64 {
    let (a, b) = (obj_a.abs(), obj_b.abs());
    if a == 0.0 && b == 0.0 {
        return 1.0;
    }
    let (a, b) = (a.max(f64::EPSILON), b.max(f64::EPSILON));
    a.min(b) / a.max(b)
}

pub fn qap_random_solution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> QapSolution {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    QapSolution { perm }
}

impl Problem for QapInstance {
    type Genotype = QapSolution;
    type Signature = f64;

    fn direction(&self) -> Direction {
        Direction::Minimize
    }

    fn objective(&self, genotype: &QapSolution) -> f64 {
        qap_objective(genotype, self)
    }

    fn is_feasible(&self, genotype: &QapSolution) -> bool {
        genotype.perm.len() == self.n && genotype.is_permutation()
    }

    fn random_solution<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<QapSolution> {
        Ok(qap_random_solution(self.n, rng))
    }

    fn recombine<R: Rng + ?Sized>(&self, a: &QapSolution, b: &QapSolution, rng: &mut R) -> Result<(QapSolution, QapSolution)> {
        Ok(qap_two_point_crossover(a, b, rng))
    }

    fn mutate<R: Rng + ?Sized>(&self, genotype: &QapSolution, rng: &mut R) -> QapSolution {
        qap_swap_mutation(genotype, rng)
    }

    fn signature(&self, _genotype: &QapSolution, objective: f64) -> f64 {
        objective
    }

    fn similarity(&self, a: &f64, b: &f64) -> f64 {
        qap_similarity(*a, *b)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn two_by_two_hand_value() {
        let inst = QapInstance::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]], &[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        assert_eq!(qap_objective(&QapSolution::identity(2), &inst), 20.0);
    }

    #[test]
    fn zero_flow_costs_nothing() {
        let inst = QapInstance::new(3, vec![0.0; 9], (0..9).map(f64::from).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(qap_objective(&qap_random_solution(3, &mut rng), &inst), 0.0);
        }
    }

    #[test]
    fn diagonal_terms_count() {
        let inst = QapInstance::from_rows(&[vec![3.0, 0.0], vec![0.0, 0.0]], &[vec![7.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(qap_objective(&QapSolution { perm: vec![0, 1] }, &inst), 21.0);
        assert_eq!(qap_objective(&QapSolution { perm: vec![1, 0] }, &inst), 3.0);
    }

    #[test]
    fn crossover_repair_trace() {
        assert_eq!(two_point_child(&[1, 2, 3, 4, 5], &[5, 4, 3, 2, 1], 1, 3), vec![5, 2, 3, 4, 1]);
        assert_eq!(two_point_child(&[5, 4, 3, 2, 1], &[1, 2, 3, 4, 5], 1, 3), vec![1, 4, 3, 2, 5]);
        assert_eq!(two_point_child(&[1, 2, 3], &[3, 2, 1], 0, 3), vec![1, 2, 3]);
    }

    #[test]
    fn identical_parents_reproduce() {
        let p = QapSolution { perm: vec![2, 0, 3, 1] };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (a, b) = qap_two_point_crossover(&p, &p, &mut rng);
            assert_eq!(a, p);
            assert_eq!(b, p);
        }
    }

    #[test]
    fn cuts_cover_every_pair_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 4;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..20_000 {
            let (i, j) = random_cuts(n, &mut rng);
            assert!(i < j && j <= n);
            *counts.entry((i, j)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 10);
        for c in counts.values() {
            assert!((*c as f64 / 20_000.0 - 0.1).abs() < 0.015);
        }
    }

    #[test]
    fn swap_mutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let two = QapSolution { perm: vec![0, 1] };
        assert_eq!(qap_swap_mutation(&two, &mut rng).perm, vec![1, 0]);
        let three = QapSolution { perm: vec![0, 1, 2] };
        let m = qap_swap_mutation(&three, &mut rng);
        assert!(m.is_permutation());
        assert_eq!(m.perm.iter().zip(&three.perm).filter(|(a, b)| a != b).count(), 2);
    }

    #[test]
    fn similarity_ratio() {
        assert_eq!(qap_similarity(80.0, 100.0), 0.8);
        assert_eq!(qap_similarity(100.0, 80.0), 0.8);
        assert_eq!(qap_similarity(5.0, 5.0), 1.0);
        assert_eq!(qap_similarity(0.0, 0.0), 1.0);
        assert!(qap_similarity(0.0, 1.0) < 1e-12);
    }

    #[test]
    fn random_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(qap_random_solution(1, &mut rng).perm, vec![0]);
        let mut counts = std::collections::HashMap::new();
        let draws = 60_000;
        for _ in 0..draws {
            *counts.entry(qap_random_solution(3, &mut rng).perm).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for c in counts.values() {
            assert!((*c as f64 / draws as f64 - 1.0 / 6.0).abs() < 0.01);
        }
    }

    #[test]
    fn instance_validation() {
        assert!(QapInstance::new(2, vec![0.0; 4], vec![0.0; 3]).is_err());
        assert!(QapInstance::new(1, vec![f64::NAN], vec![0.0]).is_err());
        assert!(QapInstance::from_rows(&[vec![0.0, 1.0]], &[vec![0.0]]).is_err());
    }
}
