//! Generational GA engine.
//!
//! One generation: the strategy prepares its state for the current
//! population, the `n_elite` best members are copied over, and
//! `T = (|P| - n_elite) / 2` variation steps each turn a selected parent
//! pair into two offspring.
//!
//! All randomness comes from a single ChaCha8 generator seeded with
//! [`GaParams::seed`]. Draw order per generation:
//!
//! 1. strategy preparation (wheel/tournament draws, then the slot shuffle);
//! 2. per step: URS pair draws, the recombination gate, the problem's
//!    recombination draws, then for each child in turn the mutation gate
//!    and the problem's mutation draws.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{Direction, Problem};
use crate::selection::traditional::{
    rs_build_intermediate, rws_build_intermediate, selection_weights, sus_build_intermediate,
    ts_build_intermediate, urs_pair, IntermediatePopulation,
};
use crate::selection::ubs::{compute_fitness_rewards, init_generation0_rewards, transfer_counters, UbsState};
use crate::selection::{SimilarityMatrix, StrategyId};

/// Retries per population slot when building the initial population.
pub const INIT_ATTEMPTS_PER_SLOT: usize = 100;

pub type GaRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome<G> {
    pub id: u64,
    pub genotype: G,
    pub objective: f64,
    /// Strategy reward of the current generation. Populated by the
    /// fitness-based strategies (UBS, TS); zero otherwise.
    pub reward: f64,
    pub birth_generation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population<G> {
    pub members: Vec<Chromosome<G>>,
    pub generation: usize,
}

impl<G> Population<G> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.members.iter().map(|c| c.id).collect()
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.members.iter().map(|c| c.objective).collect()
    }

    /// Index of the best member, ties to the lower id.
    pub fn best_index(&self, direction: Direction) -> Option<usize> {
        (0..self.members.len()).min_by(|&a, &b| {
            let (ca, cb) = (&self.members[a], &self.members[b]);
            direction
                .best_first(ca.objective, cb.objective)
                .then(ca.id.cmp(&cb.id))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaParams {
    pub population_size: usize,
    pub recombination_probability: f64,
    pub mutation_probability: f64,
    pub elite_fraction: f64,
    pub time_limit: Duration,
    pub max_generations: Option<usize>,
    /// Stop as soon as the best objective reaches this value.
    pub target_objective: Option<f64>,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 100,
            recombination_probability: 0.8,
            mutation_probability: 1.0,
            elite_fraction: 0.10,
            time_limit: Duration::from_secs(300),
            max_generations: None,
            target_objective: None,
            seed: 0,
        }
    }
}

/// Elite count and selection steps derived from [`GaParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationLayout {
    pub n_elite: usize,
    pub steps: usize,
}

impl GenerationLayout {
    pub fn offspring(&self) -> usize {
        2 * self.steps
    }
}

impl GaParams {
    pub fn n_elite(&self) -> usize {
        (self.elite_fraction * self.population_size as f64).round() as usize
    }

    pub fn layout(&self) -> Result<GenerationLayout> {
        let p = self.population_size;
        if p < 2 {
            return Err(Error::Config("population size must be at least 2".into()));
        }
        for (name, v) in [
            ("recombination probability", self.recombination_probability),
            ("mutation probability", self.mutation_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} is outside [0, 1]")));
            }
        }
        if !(0.0..1.0).contains(&self.elite_fraction) {
            return Err(Error::Config(format!("elite fraction {} is outside [0, 1)", self.elite_fraction)));
        }
        if self.time_limit.is_zero() {
            return Err(Error::Config("time limit must be positive".into()));
        }
        let n_elite = self.n_elite();
        if n_elite >= p {
            return Err(Error::Config(format!("{n_elite} elites leave no room in a population of {p}")));
        }
        if (p - n_elite) % 2 != 0 {
            return Err(Error::Config(format!(
                "population {p} minus {n_elite} elites is odd; offspring come in pairs"
            )));
        }
        Ok(GenerationLayout {
            n_elite,
            steps: (p - n_elite) / 2,
        })
    }

    /// The elite fraction closest to `target` (rounded up when needed) that
    /// leaves an even number of non-elite slots in a population of `size`.
    pub fn even_elite_fraction(size: usize, target: f64) -> f64 {
        let mut n = (target * size as f64).round() as usize;
        if (size - n.min(size)) % 2 != 0 {
            n += 1;
        }
        n as f64 / size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub generation: usize,
    pub elapsed_seconds: f64,
    pub best_objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<G> {
    pub best: Chromosome<G>,
    pub trace: Vec<TracePoint>,
    pub generations_completed: usize,
    pub seed: u64,
}

/// Time source polled once per generation boundary.
pub trait Clock {
    fn elapsed(&mut self) -> Duration;
}

/// Wall-clock time since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        WallClock(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed(&mut self) -> Duration {
        self.0.elapsed()
    }
}

/// Replay clock: each poll advances time by a fixed tick, making the
/// recorded elapsed times a function of the generation count alone.
#[derive(Debug, Clone, Copy)]
pub struct VirtualClock {
    tick: Duration,
    polls: u32,
}

impl VirtualClock {
    pub fn new(tick: Duration) -> Self {
        Self { tick, polls: 0 }
    }
}

impl Clock for VirtualClock {
    fn elapsed(&mut self) -> Duration {
        let now = self.tick * self.polls;
        self.polls += 1;
        now
    }
}

/// Hook called once per generation, after all selection steps.
pub trait GenerationObserver<G> {
    fn on_generation(&mut self, _population: &Population<G>, _ubs: Option<&UbsState>) {}
}

impl<G> GenerationObserver<G> for () {}

/// Per-run strategy state.
pub struct Selector {
    strategy: StrategyId,
    pool: Option<IntermediatePopulation>,
    ubs: Option<UbsState>,
    /// Counters carried into the next generation by the similarity transfer.
    carried_counters: Option<Vec<f64>>,
}

impl Selector {
    pub fn new(strategy: StrategyId) -> Self {
        Self {
            strategy,
            pool: None,
            ubs: None,
            carried_counters: None,
        }
    }

    pub fn strategy(&self) -> StrategyId {
        self.strategy
    }

    pub fn ubs_state(&self) -> Option<&UbsState> {
        self.ubs.as_ref()
    }

    /// Prepares rewards and selection structures for `pop`.
    fn begin_generation<P: Problem>(
        &mut self,
        problem: &P,
        pop: &mut Population<P::Genotype>,
        layout: GenerationLayout,
        rng: &mut GaRng,
    ) -> Result<()> {
        let direction = problem.direction();
        let ids = pop.ids();
        let objectives = pop.objectives();
        let slots = layout.offspring();

        let needs_fitness = self.strategy == StrategyId::Ts || (self.strategy == StrategyId::Ubs && pop.generation > 0);
        let rewards = if needs_fitness {
            let sim = within_similarity(problem, pop);
            Some(compute_fitness_rewards(&objectives, &ids, layout.n_elite, direction, &sim))
        } else if self.strategy == StrategyId::Ubs {
            Some(init_generation0_rewards(&objectives, direction)?)
        } else {
            None
        };
        for (i, c) in pop.members.iter_mut().enumerate() {
            c.reward = rewards.as_ref().map_or(0.0, |r| r[i]);
        }

        self.pool = match self.strategy {
            StrategyId::Rws => Some(rws_build_intermediate(&selection_weights(&objectives, direction)?, slots, rng)),
            StrategyId::Sus => Some(sus_build_intermediate(&selection_weights(&objectives, direction)?, slots, rng)),
            StrategyId::Rs => Some(rs_build_intermediate(&objectives, &ids, direction, slots, rng)?),
            StrategyId::Ts => Some(ts_build_intermediate(rewards.as_deref().unwrap_or(&[]), &ids, slots, rng)?),
            StrategyId::Urs | StrategyId::Ubs => None,
        };

        if self.strategy == StrategyId::Ubs {
            let counters = self.carried_counters.take().unwrap_or_else(|| vec![0.0; pop.len()]);
            let rewards = rewards.expect("bandit rewards are always computed");
            self.ubs = Some(UbsState::begin_generation(ids, rewards, counters, pop.generation, layout.steps)?);
        }
        Ok(())
    }

    fn select_pair(&mut self, len: usize, rng: &mut GaRng) -> Result<(usize, usize)> {
        match self.strategy {
            StrategyId::Urs => urs_pair(len, rng),
            StrategyId::Ubs => self
                .ubs
                .as_mut()
                .ok_or_else(|| Error::Selection("bandit state not initialized".into()))?
                .select_and_update(),
            _ => self
                .pool
                .as_mut()
                .ok_or_else(|| Error::Selection("intermediate population not built".into()))?
                .next_pair(),
        }
    }

    /// Phase II: seeds the next generation's counters by similarity.
    fn end_generation<P: Problem>(
        &mut self,
        problem: &P,
        prev: &Population<P::Genotype>,
        next: &Population<P::Genotype>,
    ) {
        self.pool = None;
        if let Some(state) = &self.ubs {
            let cross = cross_similarity(problem, prev, next);
            self.carried_counters = Some(transfer_counters(state.counters(), &cross));
        }
    }
}

fn signatures<P: Problem>(problem: &P, pop: &Population<P::Genotype>) -> Vec<P::Signature> {
    pop.members
        .iter()
        .map(|c| problem.signature(&c.genotype, c.objective))
        .collect()
}

/// Pairwise similarity within a population.
pub fn within_similarity<P: Problem>(problem: &P, pop: &Population<P::Genotype>) -> SimilarityMatrix {
    let sig = signatures(problem, pop);
    SimilarityMatrix::symmetric(sig.len(), |i, j| problem.similarity(&sig[i], &sig[j]))
}

/// `Sim(prev_a, next_b)` for every old/new pair.
pub fn cross_similarity<P: Problem>(
    problem: &P,
    prev: &Population<P::Genotype>,
    next: &Population<P::Genotype>,
) -> SimilarityMatrix {
    let a = signatures(problem, prev);
    let b = signatures(problem, next);
    SimilarityMatrix::from_fn(a.len(), b.len(), |i, j| problem.similarity(&a[i], &b[j]))
}

/// Recombination with probability `p_r` (else copies), then independent
/// mutation of each child with probability `p_m`.
pub fn variation_step<P: Problem, R: Rng + ?Sized>(
    problem: &P,
    parents: (&P::Genotype, &P::Genotype),
    params: &GaParams,
    rng: &mut R,
) -> Result<(P::Genotype, P::Genotype)> {
    let (mut c1, mut c2) = if rng.random::<f64>() < params.recombination_probability {
        problem.recombine(parents.0, parents.1, rng)?
    } else {
        (parents.0.clone(), parents.1.clone())
    };
    if rng.random::<f64>() < params.mutation_probability {
        c1 = problem.mutate(&c1, rng);
    }
    if rng.random::<f64>() < params.mutation_probability {
        c2 = problem.mutate(&c2, rng);
    }
    Ok((c1, c2))
}

/// Hands out run-unique chromosome ids.
#[derive(Debug, Default)]
pub struct IdSource(u64);

impl IdSource {
    pub fn next_id(&mut self) -> u64 {
        let id = self.0;
        self.0 += 1;
        id
    }
}

fn make_chromosome<P: Problem>(problem: &P, genotype: P::Genotype, ids: &mut IdSource, generation: usize) -> Chromosome<P::Genotype> {
    debug_assert!(problem.is_feasible(&genotype));
    Chromosome {
        id: ids.next_id(),
        objective: problem.objective(&genotype),
        genotype,
        reward: 0.0,
        birth_generation: generation,
    }
}

/// Random feasible population of generation 0.
pub fn initial_population<P: Problem>(
    problem: &P,
    size: usize,
    ids: &mut IdSource,
    rng: &mut GaRng,
) -> Result<Population<P::Genotype>> {
    let mut members = Vec::with_capacity(size);
    for _ in 0..size {
        let mut built = None;
        let mut last_err = None;
        for _ in 0..INIT_ATTEMPTS_PER_SLOT {
            match problem.random_solution(rng) {
                Ok(g) if problem.is_feasible(&g) => {
                    built = Some(g);
                    break;
                }
                Ok(_) => {}
                Err(e @ Error::Instance(_)) => return Err(e),
                Err(e) => last_err = Some(e),
            }
        }
        match built {
            Some(g) => members.push(make_chromosome(problem, g, ids, 0)),
            None => {
                if let Some(e) = last_err {
                    log::debug!("last initialization error: {e}");
                }
                return Err(Error::Initialization {
                    attempts: INIT_ATTEMPTS_PER_SLOT,
                });
            }
        }
    }
    Ok(Population { members, generation: 0 })
}

/// Produces generation `m + 1` from generation `m`.
pub fn next_generation<P: Problem, O: GenerationObserver<P::Genotype> + ?Sized>(
    problem: &P,
    mut pop: Population<P::Genotype>,
    selector: &mut Selector,
    params: &GaParams,
    ids: &mut IdSource,
    rng: &mut GaRng,
    observer: &mut O,
) -> Result<Population<P::Genotype>> {
    let layout = params.layout()?;
    if pop.len() != params.population_size {
        return Err(Error::Config(format!(
            "population has {} members, expected {}",
            pop.len(),
            params.population_size
        )));
    }
    selector.begin_generation(problem, &mut pop, layout, rng)?;

    let direction = problem.direction();
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&pop.members[a], &pop.members[b]);
        direction.best_first(ca.objective, cb.objective).then(ca.id.cmp(&cb.id))
    });
    let mut members: Vec<_> = order[..layout.n_elite]
        .iter()
        .map(|&i| pop.members[i].clone())
        .collect();

    let child_generation = pop.generation + 1;
    for _ in 0..layout.steps {
        let (a, b) = selector.select_pair(pop.len(), rng)?;
        let (g1, g2) = variation_step(problem, (&pop.members[a].genotype, &pop.members[b].genotype), params, rng)?;
        members.push(make_chromosome(problem, g1, ids, child_generation));
        members.push(make_chromosome(problem, g2, ids, child_generation));
    }
    observer.on_generation(&pop, selector.ubs_state());

    let next = Population {
        members,
        generation: child_generation,
    };
    selector.end_generation(problem, &pop, &next);
    Ok(next)
}

/// Runs the GA under the wall clock.
pub fn run_ga<P: Problem>(problem: &P, params: &GaParams, strategy: StrategyId) -> Result<RunResult<P::Genotype>> {
    run_ga_with(problem, params, strategy, &mut WallClock::start(), &mut ())
}

/// Runs the GA with an explicit clock and observer.
pub fn run_ga_with<P, C, O>(
    problem: &P,
    params: &GaParams,
    strategy: StrategyId,
    clock: &mut C,
    observer: &mut O,
) -> Result<RunResult<P::Genotype>>
where
    P: Problem,
    C: Clock + ?Sized,
    O: GenerationObserver<P::Genotype> + ?Sized,
{
    params.layout()?;
    let direction = problem.direction();
    let mut rng = GaRng::seed_from_u64(params.seed);
    let mut ids = IdSource::default();
    let mut selector = Selector::new(strategy);

    let mut pop = initial_population(problem, params.population_size, &mut ids, &mut rng)?;
    let mut best = pop.members[pop.best_index(direction).expect("population is non-empty")].clone();
    let mut trace = vec![TracePoint {
        generation: 0,
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        best_objective: best.objective,
    }];
    let mut generations = 0;

    loop {
        let elapsed = trace.last().map_or(0.0, |t| t.elapsed_seconds);
        if elapsed >= params.time_limit.as_secs_f64()
            || params.max_generations.is_some_and(|g| generations >= g)
            || params.target_objective.is_some_and(|t| !direction.is_better(t, best.objective))
        {
            break;
        }
        pop = next_generation(problem, pop, &mut selector, params, &mut ids, &mut rng, observer)?;
        generations += 1;
        let idx = pop.best_index(direction).expect("population is non-empty");
        if direction.is_better(pop.members[idx].objective, best.objective) {
            best = pop.members[idx].clone();
        }
        trace.push(TracePoint {
            generation: pop.generation,
            elapsed_seconds: clock.elapsed().as_secs_f64(),
            best_objective: best.objective,
        });
    }

    Ok(RunResult {
        best,
        trace,
        generations_completed: generations,
        seed: params.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pop: usize, elite: f64) -> GaParams {
        GaParams {
            population_size: pop,
            elite_fraction: elite,
            ..GaParams::default()
        }
    }

    #[test]
    fn layout_arithmetic() {
        assert!(params(50, 0.1).layout().is_err());
        let l = params(50, 0.12).layout().unwrap();
        assert_eq!(l, GenerationLayout { n_elite: 6, steps: 22 });
        assert_eq!(l.offspring(), 44);
        assert_eq!(params(200, 0.1).layout().unwrap().steps, 90);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(params(1, 0.0).layout().is_err());
        assert!(params(10, 1.0).layout().is_err());
        let mut p = params(10, 0.0);
        p.recombination_probability = 1.5;
        assert!(p.layout().is_err());
        let mut p = params(10, 0.0);
        p.time_limit = Duration::ZERO;
        assert!(p.layout().is_err());
    }

    #[test]
    fn even_elite_fraction_fixes_parity() {
        for (size, expected) in [(50, 6), (100, 10), (150, 16), (200, 20)] {
            let f = GaParams::even_elite_fraction(size, 0.1);
            let p = params(size, f);
            assert_eq!(p.n_elite(), expected);
            assert!(p.layout().is_ok());
        }
    }

    #[test]
    fn virtual_clock_ticks_per_poll() {
        let mut c = VirtualClock::new(Duration::from_millis(250));
        assert_eq!(c.elapsed(), Duration::ZERO);
        assert_eq!(c.elapsed(), Duration::from_millis(250));
        assert_eq!(c.elapsed(), Duration::from_millis(500));
    }
}
