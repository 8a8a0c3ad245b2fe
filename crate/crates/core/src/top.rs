//! Team orienteering: `h` paths from a start to an end vertex, each within a
//! travel budget `Tmax`, collecting the scores of distinct visited
//! vertices.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::problem::{Direction, Problem};

/// Slack for floating-point path lengths compared against `Tmax`.
pub const FEASIBILITY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopInstance {
    vertices: Vec<Vertex>,
    start: usize,
    end: usize,
    paths: usize,
    tmax: f64,
    dist: Vec<f64>,
}

impl TopInstance {
    pub fn new(vertices: Vec<Vertex>, start: usize, end: usize, paths: usize, tmax: f64) -> Result<Self> {
        let n = vertices.len();
        if n < 2 {
            return Err(Error::Instance("need at least a start and an end vertex".into()));
        }
        if start >= n || end >= n || start == end {
            return Err(Error::Instance(format!("bad start/end vertices {start}/{end} for {n} vertices")));
        }
        if paths == 0 {
            return Err(Error::Instance("path count must be at least 1".into()));
        }
        if !(tmax.is_finite() && tmax > 0.0) {
            return Err(Error::Instance(format!("Tmax must be positive, got {tmax}")));
        }
        if let Some(v) = vertices
            .iter()
            .find(|v| !(v.x.is_finite() && v.y.is_finite() && v.score.is_finite() && v.score >= 0.0))
        {
            return Err(Error::Instance(format!("invalid vertex {v:?}")));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = (vertices[i].x - vertices[j].x).hypot(vertices[i].y - vertices[j].y);
            }
        }
        Ok(Self {
            vertices,
            start,
            end,
            paths,
            tmax,
            dist,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn path_count(&self) -> usize {
        self.paths
    }

    pub fn tmax(&self) -> f64 {
        self.tmax
    }

    #[inline]
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.dist[u * self.vertices.len() + v]
    }

    pub fn path_length(&self, path: &[usize]) -> f64 {
        path.windows(2).map(|w| self.distance(w[0], w[1])).sum()
    }

    /// Score collected by one path's interior vertices.
    pub fn path_score(&self, path: &[usize]) -> f64 {
        interior(path).iter().map(|&v| self.vertices[v].score).sum()
    }

    fn is_terminal(&self, v: usize) -> bool {
        v == self.start || v == self.end
    }

    fn empty_path(&self) -> Vec<usize> {
        vec![self.start, self.end]
    }
}

fn interior(path: &[usize]) -> &[usize] {
    if path.len() <= 2 {
        &[]
    } else {
        &path[1..path.len() - 1]
    }
}

/// `h` vertex sequences, each starting at `s` and ending at `e`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopSolution {
    pub paths: Vec<Vec<usize>>,
}

impl TopSolution {
    pub fn empty(inst: &TopInstance) -> Self {
        Self {
            paths: vec![inst.empty_path(); inst.paths],
        }
    }

    /// Interior vertices of all paths, in path order.
    pub fn visited(&self) -> impl Iterator<Item = usize> + '_ {
        self.paths.iter().flat_map(|p| interior(p).iter().copied())
    }
}

/// Sum of scores over distinct visited vertices, terminals excluded.
pub fn top_objective(sol: &TopSolution, inst: &TopInstance) -> f64 {
    let mut seen = vec![false; inst.len()];
    let mut total = 0.0;
    for v in sol.visited() {
        if !inst.is_terminal(v) && !std::mem::replace(&mut seen[v], true) {
            total += inst.vertices[v].score;
        }
    }
    total
}

pub fn top_feasible(sol: &TopSolution, inst: &TopInstance) -> bool {
    if sol.paths.len() != inst.paths {
        return false;
    }
    let mut seen = vec![false; inst.len()];
    for path in &sol.paths {
        if path.len() < 2 || path[0] != inst.start || path[path.len() - 1] != inst.end {
            return false;
        }
        for &v in interior(path) {
            if v >= inst.len() || inst.is_terminal(v) || std::mem::replace(&mut seen[v], true) {
                return false;
            }
        }
        if inst.path_length(path) > inst.tmax + FEASIBILITY_EPS {
            return false;
        }
    }
    true
}

/// Index of the highest-scoring path, ties to the earlier path.
fn best_path_index(sol: &TopSolution, inst: &TopInstance) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, p) in sol.paths.iter().enumerate() {
        let s = inst.path_score(p);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Child of the best path of `donor` grafted onto all paths of `host`.
///
/// Vertices of the donor path are spliced out of the host paths (the
/// neighbours reconnect, which cannot lengthen a Euclidean path), then the
/// lowest-scoring host path is dropped until `h` paths remain.
fn graft(donor: &TopSolution, host: &TopSolution, inst: &TopInstance) -> TopSolution {
    let best = donor.paths[best_path_index(donor, inst)].clone();
    let mut taken = vec![false; inst.len()];
    for &v in interior(&best) {
        taken[v] = true;
    }
    let mut rest: Vec<Vec<usize>> = host
        .paths
        .iter()
        .map(|p| p.iter().copied().filter(|&v| inst.is_terminal(v) || !taken[v]).collect())
        .collect();
    while rest.len() + 1 > inst.paths {
        let mut drop = 0;
        let mut drop_score = f64::INFINITY;
        for (i, p) in rest.iter().enumerate() {
            let s = inst.path_score(p);
            if s < drop_score {
                drop = i;
                drop_score = s;
            }
        }
        rest.remove(drop);
    }
    let mut paths = Vec::with_capacity(inst.paths);
    paths.push(best);
    paths.extend(rest);
    TopSolution { paths }
}

/// Best-path-dominant recombination; `b1` carries `a1`'s best path and
/// `b2` carries `a2`'s.
pub fn top_recombine(a1: &TopSolution, a2: &TopSolution, inst: &TopInstance) -> (TopSolution, TopSolution) {
    (graft(a1, a2, inst), graft(a2, a1, inst))
}

/// One pass over the unused vertices in random order, each offered a single
/// insertion at a random position of a random path.
fn insertion_pass<R: Rng + ?Sized>(sol: &mut TopSolution, inst: &TopInstance, rng: &mut R) {
    let mut used = vec![false; inst.len()];
    for v in sol.visited() {
        used[v] = true;
    }
    let mut unused: Vec<usize> = (0..inst.len()).filter(|&v| !used[v] && !inst.is_terminal(v)).collect();
    unused.shuffle(rng);
    let mut lengths: Vec<f64> = sol.paths.iter().map(|p| inst.path_length(p)).collect();
    for v in unused {
        let p = rng.random_range(0..sol.paths.len());
        let path = &mut sol.paths[p];
        let pos = rng.random_range(1..path.len());
        let (a, b) = (path[pos - 1], path[pos]);
        let added = inst.distance(a, v) + inst.distance(v, b) - inst.distance(a, b);
        if lengths[p] + added <= inst.tmax {
            path.insert(pos, v);
            lengths[p] += added;
        }
    }
}

/// Deletes one random interior vertex, then refills with
/// [`insertion_pass`].
pub fn top_mutate<R: Rng + ?Sized>(sol: &TopSolution, inst: &TopInstance, rng: &mut R) -> TopSolution {
    let mut out = sol.clone();
    let non_empty: Vec<usize> = (0..out.paths.len()).filter(|&i| out.paths[i].len() > 2).collect();
    if let Some(&p) = non_empty.choose(rng) {
        let len = out.paths[p].len();
        let pos = rng.random_range(1..len - 1);
        out.paths[p].remove(pos);
    }
    insertion_pass(&mut out, inst, rng);
    out
}

/// `h` empty tours followed by one insertion pass.
pub fn top_random_solution<R: Rng + ?Sized>(inst: &TopInstance, rng: &mut R) -> Result<TopSolution> {
    if inst.distance(inst.start, inst.end) > inst.tmax + FEASIBILITY_EPS {
        return Err(Error::Instance(format!(
            "start-end distance {} exceeds Tmax {}",
            inst.distance(inst.start, inst.end),
            inst.tmax
        )));
    }
    let mut sol = TopSolution::empty(inst);
    insertion_pass(&mut sol, inst, rng);
    Ok(sol)
}

/// Node and undirected-edge sets of a solution's subgraph.
///
/// Nodes are a bitset over vertex ids (terminals included); edges are
/// sorted, deduplicated `min * n + max` codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopGraph {
    nodes: Vec<u64>,
    node_count: usize,
    edges: Vec<u64>,
}

impl TopGraph {
    pub fn from_solution(sol: &TopSolution, inst: &TopInstance) -> Self {
        let n = inst.len();
        let mut nodes = vec![0u64; n.div_ceil(64)];
        let mut edges = Vec::new();
        for path in &sol.paths {
            for &v in path {
                nodes[v / 64] |= 1 << (v % 64);
            }
            for w in path.windows(2) {
                let (a, b) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
                edges.push((a * n + b) as u64);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let node_count = nodes.iter().map(|w| w.count_ones() as usize).sum();
        Self { nodes, node_count, edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn size(&self) -> usize {
        self.node_count + self.edges.len()
    }
}

fn sorted_intersection(a: &[u64], b: &[u64]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

/// Normalized node-and-edge overlap,
/// `(|Va ∩ Vb| + |Ea ∩ Eb|) / max(|Va| + |Ea|, |Vb| + |Eb|)`.
pub fn top_similarity(a: &TopGraph, b: &TopGraph) -> f64 {
    let denom = a.size().max(b.size());
    if denom == 0 {
        return 1.0;
    }
    let common_nodes: usize = a.nodes.iter().zip(&b.nodes).map(|(x, y)| (x & y).count_ones() as usize).sum();
    let common_edges = sorted_intersection(&a.edges, &b.edges);
    (common_nodes + common_edges) as f64 / denom as f64
}

impl Problem for TopInstance {
    type Genotype = TopSolution;
    type Signature = TopGraph;

    fn direction(&self) -> Direction {
        Direction::Maximize
    }

    fn objective(&self, genotype: &TopSolution) -> f64 {
        top_objective(genotype, self)
    }

    fn is_feasible(&self, genotype: &TopSolution) -> bool {
        top_feasible(genotype, self)
    }

    fn random_solution<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TopSolution> {
        top_random_solution(self, rng)
    }

    fn recombine<R: Rng + ?Sized>(&self, a: &TopSolution, b: &TopSolution, _rng: &mut R) -> Result<(TopSolution, TopSolution)> {
        Ok(top_recombine(a, b, self))
    }

    fn mutate<R: Rng + ?Sized>(&self, genotype: &TopSolution, rng: &mut R) -> TopSolution {
        top_mutate(genotype, self, rng)
    }

    fn signature(&self, genotype: &TopSolution, _objective: f64) -> TopGraph {
        TopGraph::from_solution(genotype, self)
    }

    fn similarity(&self, a: &TopGraph, b: &TopGraph) -> f64 {
        top_similarity(a, b)
    }
}
