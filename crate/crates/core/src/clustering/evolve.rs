//! Locus-based adjacency genetic algorithm.
//!
//! A genome holds one gene per node: a neighbour of that node, or the node
//! itself when it has none. The decoded clusters are the connected components of the
//! links `v -> genome[v]`, so a genome can never join nodes that lie in
//! different components of the graph. Fitness is weighted modularity.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClusterError, Partition, SimilarityGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    pub elite_count: usize,
    /// Contestants per tournament when selecting parents.
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 30,
            crossover_rate: 0.8,
            mutation_rate: 0.2,
            elite_count: 2,
            tournament_size: 3,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), ClusterError> {
        let bad = |msg: String| Err(ClusterError::GaParams(msg));
        if self.population_size < 2 {
            return bad(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.elite_count >= self.population_size {
            return bad(format!(
                "elite_count ({}) must be below population_size ({})",
                self.elite_count, self.population_size
            ));
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad(format!("crossover_rate must be in [0, 1], got {}", self.crossover_rate));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation_rate must be in [0, 1], got {}", self.mutation_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    pub partition: Partition,
    pub fitness: f64,
    /// Best fitness of the initial population and of every generation.
    pub trace: Vec<f64>,
}

/// Clusters of a genome: connected components of `v -> genome[v]`.
pub fn decode_genome(genome: &[usize]) -> Partition {
    let mut parent: Vec<usize> = (0..genome.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (v, &g) in genome.iter().enumerate() {
        let (a, b) = (find(&mut parent, v), find(&mut parent, g));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let roots: Vec<usize> = (0..genome.len()).map(|v| find(&mut parent, v)).collect();
    Partition::from_labels(&roots)
}

/// Newman's modularity with edge weights. Zero for an edgeless graph.
pub fn weighted_modularity(graph: &SimilarityGraph, partition: &Partition) -> f64 {
    let total: f64 = graph.edges.iter().map(|e| e.w).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let labels = partition.labels();
    let mut inside = vec![0.0; partition.k()];
    let mut strength = vec![0.0; partition.k()];
    for e in &graph.edges {
        let (cu, cv) = (labels[e.u], labels[e.v]);
        if cu == cv {
            inside[cu] += e.w;
        }
        strength[cu] += e.w;
        strength[cv] += e.w;
    }
    inside
        .iter()
        .zip(&strength)
        .map(|(l, d)| l / total - (d / (2.0 * total)).powi(2))
        .sum()
}

struct Scored {
    genome: Vec<usize>,
    fitness: f64,
}

fn score(graph: &SimilarityGraph, genomes: Vec<Vec<usize>>) -> Vec<Scored> {
    genomes
        .into_par_iter()
        .map(|genome| {
            let fitness = weighted_modularity(graph, &decode_genome(&genome));
            Scored { genome, fitness }
        })
        .collect()
}

/// Indices sorted by descending fitness; stable, so ties keep population order.
fn ranking(population: &[Scored]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| population[b].fitness.total_cmp(&population[a].fitness));
    idx
}

fn tournament<'a>(population: &'a [Scored], size: usize, rng: &mut ChaCha8Rng) -> &'a Scored {
    let mut best = &population[rng.random_range(0..population.len())];
    for _ in 1..size {
        let other = &population[rng.random_range(0..population.len())];
        if other.fitness > best.fitness {
            best = other;
        }
    }
    best
}

pub fn evolve_partition(graph: &SimilarityGraph, params: &GaParams) -> Result<Evolved, ClusterError> {
    params.validate()?;
    let n = graph.n;
    if n == 0 {
        return Err(ClusterError::EmptyGraph);
    }
    let neighbours: Vec<Vec<usize>> = graph
        .adjacency()
        .into_iter()
        .map(|list| list.into_iter().map(|(v, _)| v).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let initial: Vec<Vec<usize>> = (0..params.population_size)
        .map(|_| {
            (0..n)
                .map(|v| neighbours[v].choose(&mut rng).copied().unwrap_or(v))
                .collect()
        })
        .collect();
    let mut population = score(graph, initial);
    let mut trace = Vec::with_capacity(params.generations + 1);
    trace.push(population[ranking(&population)[0]].fitness);

    for _ in 0..params.generations {
        let order = ranking(&population);
        let mut next: Vec<Vec<usize>> = order[..params.elite_count]
            .iter()
            .map(|&i| population[i].genome.clone())
            .collect();
        while next.len() < params.population_size {
            let first = tournament(&population, params.tournament_size, &mut rng);
            let second = tournament(&population, params.tournament_size, &mut rng);
            let mut child = if rng.random_bool(params.crossover_rate) {
                first
                    .genome
                    .iter()
                    .zip(&second.genome)
                    .map(|(&a, &b)| if rng.random_bool(0.5) { a } else { b })
                    .collect()
            } else {
                first.genome.clone()
            };
            for (v, gene) in child.iter_mut().enumerate() {
                if rng.random_bool(params.mutation_rate) {
                    if let Some(&u) = neighbours[v].choose(&mut rng) {
                        *gene = u;
                    }
                }
            }
            next.push(child);
        }
        population = score(graph, next);
        trace.push(population[ranking(&population)[0]].fitness);
    }

    let best = &population[ranking(&population)[0]];
    Ok(Evolved {
        partition: decode_genome(&best.genome),
        fitness: best.fitness,
        trace,
    })
}
