use super::AnalysisError;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub const POPULATION: usize = 16;
const TOURNAMENT: usize = 3;
const CROSSOVER: f64 = 0.5;
const SIGMA_FRACTION: f64 = 0.1;

/// Bounds of one decision variable. Discrete genes take integer values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gene {
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub discrete: bool,
}

impl Gene {
    pub fn continuous(lower: f64, upper: f64) -> Self {
        Gene { lower, upper, discrete: false }
    }

    pub fn discrete(lower: i64, upper: i64) -> Self {
        Gene { lower: lower as f64, upper: upper as f64, discrete: true }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.discrete {
            rng.random_range(self.lower.ceil() as i64..=self.upper.floor() as i64) as f64
        } else if self.upper > self.lower {
            rng.random_range(self.lower..=self.upper)
        } else {
            self.lower
        }
    }
}

/// How a batch of candidates is evaluated. Both modes produce identical
/// histories because results are gathered by candidate index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    pub evaluation: usize,
    pub generation: usize,
    pub genes: Vec<f64>,
    pub value: f64,
    pub best_so_far: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimization {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub history: Vec<HistoryEntry>,
}

fn evaluate_batch<F>(objective: &F, batch: &[Vec<f64>], exec: Execution) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let score = |g: &Vec<f64>| {
        let v = objective(g);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            batch.par_iter().map(score).collect()
        }
        _ => batch.iter().map(score).collect(),
    }
}

fn tournament<'a>(rng: &mut ChaCha8Rng, pop: &'a [(Vec<f64>, f64)]) -> &'a [f64] {
    let mut best: Option<&(Vec<f64>, f64)> = None;
    for _ in 0..TOURNAMENT {
        let c = pop.choose(rng).expect("population is never empty");
        if best.is_none_or(|b| c.1 < b.1) {
            best = Some(c);
        }
    }
    &best.expect("tournament size is positive").0
}

fn breed(rng: &mut ChaCha8Rng, genes: &[Gene], pop: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let a = tournament(rng, pop).to_vec();
    let b = tournament(rng, pop);
    let rate = 1.0 / genes.len() as f64;
    let mut child: Vec<f64> = a.iter().zip(b).map(|(x, y)| if rng.random_bool(CROSSOVER) { *y } else { *x }).collect();
    for (c, gene) in child.iter_mut().zip(genes) {
        if !rng.random_bool(rate) {
            continue;
        }
        if gene.discrete {
            *c = gene.sample(rng);
        } else {
            let width = gene.upper - gene.lower;
            if width > 0.0 {
                let step = Normal::new(0.0, SIGMA_FRACTION * width).expect("positive sigma").sample(rng);
                *c = (*c + step).clamp(gene.lower, gene.upper);
            }
        }
    }
    child
}

/// Elitist generational genetic algorithm minimizing `objective` over the
/// box `genes`, spending exactly `budget` evaluations. NaN objective values
/// count as `+∞`.
pub fn optimize_fn<F>(
    genes: &[Gene],
    objective: F,
    seed: u64,
    budget: usize,
    exec: Execution,
) -> Result<Optimization, AnalysisError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if genes.is_empty() {
        return Err(AnalysisError::Argument("no decision variables".into()));
    }
    for (i, g) in genes.iter().enumerate() {
        let ok = g.lower.is_finite() && g.upper.is_finite() && g.lower <= g.upper;
        if !ok || (g.discrete && g.lower.ceil() > g.upper.floor()) {
            return Err(AnalysisError::Argument(format!("gene {} has invalid bounds [{}, {}]", i + 1, g.lower, g.upper)));
        }
    }
    if budget < POPULATION {
        return Err(AnalysisError::Argument(format!("budget {budget} is below the population size {POPULATION}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history: Vec<HistoryEntry> = Vec::with_capacity(budget);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut record = |generation: usize, batch: Vec<Vec<f64>>, values: &[f64], history: &mut Vec<HistoryEntry>| {
        let mut scored = Vec::with_capacity(batch.len());
        for (g, &v) in batch.into_iter().zip(values) {
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((g.clone(), v));
            }
            let best_so_far = best.as_ref().map_or(v, |b| b.1);
            history.push(HistoryEntry { evaluation: history.len() + 1, generation, genes: g.clone(), value: v, best_so_far });
            scored.push((g, v));
        }
        scored
    };

    let initial: Vec<Vec<f64>> = (0..POPULATION).map(|_| genes.iter().map(|g| g.sample(&mut rng)).collect()).collect();
    let values = evaluate_batch(&objective, &initial, exec);
    let mut pop = record(0, initial, &values, &mut history);
    let mut generation = 0;
    while history.len() < budget {
        generation += 1;
        let children = (POPULATION - 1).min(budget - history.len());
        let elite = pop
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .cloned()
            .expect("population is never empty");
        let batch: Vec<Vec<f64>> = (0..children).map(|_| breed(&mut rng, genes, &pop)).collect();
        let values = evaluate_batch(&objective, &batch, exec);
        let mut next = vec![elite];
        next.extend(record(generation, batch, &values, &mut history));
        pop = next;
    }
    let (best, best_value) = best.expect("at least one evaluation");
    Ok(Optimization { best, best_value, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl(x: &[f64]) -> f64 {
        (x[0] - 0.3).powi(2)
    }

    #[test]
    fn finds_the_scalar_minimum() {
        let r = optimize_fn(&[Gene::continuous(0.0, 1.0)], bowl, 7, 800, Execution::Sequential).unwrap();
        assert!((r.best[0] - 0.3).abs() <= 0.01, "{:?}", r.best);
        assert_eq!(r.history.len(), 800);
    }

    #[test]
    fn single_generation_returns_best_initial() {
        let r = optimize_fn(&[Gene::continuous(0.0, 1.0)], bowl, 3, POPULATION, Execution::Sequential).unwrap();
        let min = r.history.iter().map(|h| h.value).fold(f64::INFINITY, f64::min);
        assert_eq!(r.history.len(), POPULATION);
        assert_eq!(r.best_value, min);
    }

    #[test]
    fn parallel_matches_sequential() {
        let genes = [Gene::continuous(-1.0, 1.0), Gene::discrete(0, 4)];
        let f = |x: &[f64]| (x[0] - 0.2).powi(2) + (x[1] - 3.0).abs();
        let a = optimize_fn(&genes, f, 11, 100, Execution::Sequential).unwrap();
        let b = optimize_fn(&genes, f, 11, 100, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.history.iter().all(|h| h.genes[1].fract() == 0.0));
    }

    #[test]
    fn nan_counts_as_infinite() {
        let r = optimize_fn(&[Gene::continuous(0.0, 1.0)], |_| f64::NAN, 1, 20, Execution::Sequential).unwrap();
        assert!(r.history.iter().all(|h| h.value == f64::INFINITY));
    }

    #[test]
    fn rejects_small_budget_and_bad_bounds() {
        assert!(optimize_fn(&[Gene::continuous(0.0, 1.0)], bowl, 1, 5, Execution::Sequential).is_err());
        assert!(optimize_fn(&[Gene::continuous(1.0, 0.0)], bowl, 1, 50, Execution::Sequential).is_err());
    }
}
