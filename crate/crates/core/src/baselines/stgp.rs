//! Koza-style tree GP: subtree crossover and subtree mutation on
//! [`ExprTree`]s, with offspring over the depth cap rejected in favour of
//! their first parent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::dataset::Dataset;
use crate::expr::{ramped_half_and_half, random_tree, ExprTree, GenMethod};
use crate::gsgp::{
    argmin, check_probabilities, check_selection, fitness, ranking, tournament_select,
    GenerationRecord,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StgpConfig {
    pub population_size: usize,
    pub generations: usize,
    pub max_depth: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    /// Depth of the `grow` trees inserted by subtree mutation.
    pub mutation_tree_depth: usize,
    pub init_min_depth: usize,
    pub init_max_depth: usize,
    pub rng_seed: u64,
}

impl Default for StgpConfig {
    fn default() -> Self {
        StgpConfig {
            population_size: 500,
            generations: 50,
            max_depth: 17,
            p_crossover: 0.9,
            p_mutation: 0.1,
            tournament_size: 4,
            elitism: 1,
            mutation_tree_depth: 4,
            init_min_depth: 2,
            init_max_depth: 6,
            rng_seed: 0,
        }
    }
}

impl StgpConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let check = || -> Result<(), String> {
            check_selection(self.population_size, self.tournament_size, self.elitism)?;
            check_probabilities(self.p_crossover, self.p_mutation)?;
            if self.init_min_depth < 1 || self.init_min_depth > self.init_max_depth {
                return Err("need 1 <= init_min_depth <= init_max_depth".into());
            }
            if self.init_max_depth > self.max_depth {
                return Err("init_max_depth exceeds max_depth".into());
            }
            if self.mutation_tree_depth < 1 {
                return Err("mutation_tree_depth must be at least 1".into());
            }
            Ok(())
        };
        check().map_err(BaselineError::InvalidParameter)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Member {
    tree: ExprTree,
    fitness: f64,
}

#[derive(Debug, Clone)]
pub struct StgpRun {
    pub config: StgpConfig,
    pub history: Vec<GenerationRecord>,
    pub best: ExprTree,
    pub best_train_fitness: f64,
    /// Best tree's outputs on the test rows.
    pub predictions: Vec<f64>,
    /// Largest tree depth seen in any generation.
    pub max_depth_seen: usize,
}

/// Offspring of subtree crossover: `first` with a uniformly chosen node
/// replaced by a uniformly chosen subtree of `second`.
pub fn subtree_crossover<R: Rng + ?Sized>(
    first: &ExprTree,
    second: &ExprTree,
    rng: &mut R,
) -> ExprTree {
    let at = rng.gen_range(0..first.size());
    let donor = rng.gen_range(0..second.size());
    let graft = second.subtree(donor).expect("index within size");
    first.with_subtree(at, graft)
}

/// Replaces a uniformly chosen node by a fresh `grow` tree.
pub fn subtree_mutation<R: Rng + ?Sized>(parent: &ExprTree, depth: usize, rng: &mut R) -> ExprTree {
    let at = rng.gen_range(0..parent.size());
    let graft = random_tree(rng, GenMethod::grow(depth));
    parent.with_subtree(at, &graft)
}

pub fn stgp_run(
    cfg: &StgpConfig,
    train: &Dataset,
    test: &Dataset,
) -> Result<StgpRun, BaselineError> {
    cfg.validate()?;
    let targets = train.targets().ok_or(BaselineError::MissingTargets)?;
    let test_targets = test.targets();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let score = |tree: ExprTree| {
        let fitness =
            fitness(&tree.eval_dataset(train), &targets).expect("sized to the training set");
        Member { tree, fitness }
    };
    let record = |generation: usize, best: &Member| {
        let test_fitness = test_targets
            .as_deref()
            .map(|t| fitness(&best.tree.eval_dataset(test), t).expect("sized to the test set"));
        GenerationRecord::new(
            generation,
            best.fitness,
            train.len(),
            test_fitness,
            test.len(),
        )
    };

    let mut population: Vec<Member> = ramped_half_and_half(
        &mut rng,
        cfg.population_size,
        cfg.init_min_depth,
        cfg.init_max_depth,
    )
    .into_iter()
    .map(score)
    .collect();
    let mut max_depth_seen = population.iter().map(|m| m.tree.depth()).max().unwrap_or(0);
    let mut fit: Vec<f64> = population.iter().map(|m| m.fitness).collect();
    let mut history = vec![record(0, &population[argmin(&fit)])];

    for generation in 1..=cfg.generations {
        let mut next: Vec<Member> = ranking(&fit)[..cfg.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < cfg.population_size {
            let draw = rng.gen::<f64>();
            let child = if draw < cfg.p_crossover {
                let a = tournament_select(&fit, cfg.tournament_size, &mut rng);
                let b = tournament_select(&fit, cfg.tournament_size, &mut rng);
                let tree = subtree_crossover(&population[a].tree, &population[b].tree, &mut rng);
                if tree.depth() > cfg.max_depth {
                    population[a].clone()
                } else {
                    score(tree)
                }
            } else if draw < cfg.p_crossover + cfg.p_mutation {
                let a = tournament_select(&fit, cfg.tournament_size, &mut rng);
                let tree = subtree_mutation(&population[a].tree, cfg.mutation_tree_depth, &mut rng);
                if tree.depth() > cfg.max_depth {
                    population[a].clone()
                } else {
                    score(tree)
                }
            } else {
                population[tournament_select(&fit, cfg.tournament_size, &mut rng)].clone()
            };
            next.push(child);
        }
        population = next;
        max_depth_seen =
            max_depth_seen.max(population.iter().map(|m| m.tree.depth()).max().unwrap_or(0));
        fit = population.iter().map(|m| m.fitness).collect();
        history.push(record(generation, &population[argmin(&fit)]));
    }

    let best = population.swap_remove(argmin(&fit));
    Ok(StgpRun {
        config: cfg.clone(),
        history,
        predictions: best.tree.eval_dataset(test),
        best_train_fitness: best.fitness,
        best: best.tree,
        max_depth_seen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{builtin_dataset, split, SplitSpec};

    fn small(seed: u64) -> StgpConfig {
        StgpConfig {
            population_size: 40,
            generations: 10,
            max_depth: 8,
            rng_seed: seed,
            ..Default::default()
        }
    }

    fn table_split() -> (Dataset, Dataset) {
        split(&builtin_dataset(), SplitSpec { n_train: 28 }).unwrap()
    }

    #[test]
    fn zero_generations_is_best_initial() {
        let (train, test) = table_split();
        let run = stgp_run(
            &StgpConfig {
                generations: 0,
                ..small(1)
            },
            &train,
            &test,
        )
        .unwrap();
        assert_eq!(run.history.len(), 1);
        assert!(run.best.depth() <= 6);
        assert_eq!(run.history[0].train_fitness, run.best_train_fitness);
    }

    #[test]
    fn deterministic_capped_and_elitist() {
        let (train, test) = table_split();
        let a = stgp_run(&small(7), &train, &test).unwrap();
        let b = stgp_run(&small(7), &train, &test).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.history, b.history);
        assert!(a.max_depth_seen <= 8);
        assert!(a.best.is_primitive());
        for w in a.history.windows(2) {
            assert!(w[1].train_fitness <= w[0].train_fitness);
        }
        let targets = train.targets().unwrap();
        assert_eq!(
            fitness(&a.best.eval_dataset(&train), &targets).unwrap(),
            a.best_train_fitness
        );
    }

    #[test]
    fn crossover_and_mutation_produce_valid_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p1 = random_tree(&mut rng, GenMethod::grow(5));
            let p2 = random_tree(&mut rng, GenMethod::full(3));
            let c = subtree_crossover(&p1, &p2, &mut rng);
            assert!(c.is_primitive());
            assert!(c.depth() <= p1.depth() + p2.depth());
            let m = subtree_mutation(&p1, 3, &mut rng);
            assert!(m.is_primitive());
            assert!(m.depth() <= p1.depth() + 3);
        }
    }

    #[test]
    fn invalid_config() {
        let (train, test) = table_split();
        let cfg = StgpConfig {
            init_max_depth: 20,
            ..small(0)
        };
        assert!(matches!(
            stgp_run(&cfg, &train, &test),
            Err(BaselineError::InvalidParameter(_))
        ));
    }
}
