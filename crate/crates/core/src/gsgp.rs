//! Geometric semantic GP on semantics vectors.
//!
//! An individual is stored as its outputs on the training and test rows plus
//! a reference into an append-only ancestry [`Archive`]. Crossover and
//! mutation act pointwise on those vectors, so offspring cost O(rows) no
//! matter how large the equivalent expression has grown. The symbolic form is
//! only rebuilt on request by [`reconstruct`].

use std::ops::Deref;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::expr::{logistic, ramped_half_and_half, random_tree, BinOp, ExprTree, GenMethod};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GsgpError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0} set has samples without a slump target")]
    MissingTargets(&'static str),
    #[error("length mismatch: {left} values vs {right} targets")]
    LengthMismatch { left: usize, right: usize },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
}

/// Program outputs over a fixed dataset, one entry per row in row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Semantics(pub Vec<f64>);

impl Deref for Semantics {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Semantics {
    fn from(v: Vec<f64>) -> Self {
        Semantics(v)
    }
}

/// Sum of absolute errors. Lower is better.
pub fn fitness(s: &[f64], targets: &[f64]) -> Result<f64, GsgpError> {
    if s.len() != targets.len() {
        return Err(GsgpError::LengthMismatch {
            left: s.len(),
            right: targets.len(),
        });
    }
    Ok(s.iter().zip(targets).map(|(v, c)| (v - c).abs()).sum())
}

pub fn semantics_of(tree: &ExprTree, ds: &Dataset) -> Semantics {
    Semantics(tree.eval_dataset(ds))
}

/// Pointwise crossover `weight * a + (1 - weight) * b`. The result is clamped
/// into `[min(a, b), max(a, b)]`, which only ever moves it by rounding error.
pub fn blend_semantics(a: &[f64], b: &[f64], weight: f64) -> Vec<f64> {
    let complement = BinOp::Sub.apply(1.0, weight);
    a.iter()
        .zip(b)
        .map(|(&a, &b)| {
            let v = BinOp::Add.apply(BinOp::Mul.apply(a, weight), BinOp::Mul.apply(complement, b));
            v.clamp(a.min(b), a.max(b))
        })
        .collect()
}

/// Pointwise mutation `parent + step * (s1 - s2)` where `s1`, `s2` are
/// already squashed into `[0, 1]`. A result whose computed displacement
/// exceeds `step` through rounding is pulled back toward the parent.
pub fn mutate_semantics(parent: &[f64], s1: &[f64], s2: &[f64], step: f64) -> Vec<f64> {
    parent
        .iter()
        .zip(s1.iter().zip(s2))
        .map(|(&p, (&r1, &r2))| {
            let mut v = BinOp::Add.apply(p, BinOp::Mul.apply(step, BinOp::Sub.apply(r1, r2)));
            while (v - p).abs() > step {
                v = if v > p { v.next_down() } else { v.next_up() };
            }
            v
        })
        .collect()
}

pub type RecordId = usize;
pub type TreeId = usize;

/// How an individual came to be. Ids refer to earlier entries of the owning
/// [`Archive`], so the record graph is acyclic by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Origin {
    Initial {
        tree: TreeId,
    },
    Crossover {
        first: RecordId,
        second: RecordId,
        weight: f64,
    },
    Mutation {
        parent: RecordId,
        first_tree: TreeId,
        second_tree: TreeId,
        step: f64,
    },
}

/// Append-only store of every tree drawn during a run (initial and
/// mutation trees) and of every ancestry record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    pub trees: Vec<ExprTree>,
    pub records: Vec<Origin>,
}

impl Archive {
    fn push_tree(&mut self, tree: ExprTree) -> TreeId {
        self.trees.push(tree);
        self.trees.len() - 1
    }

    fn push_record(&mut self, origin: Origin) -> RecordId {
        self.records.push(origin);
        self.records.len() - 1
    }

    /// Checks that every id points backwards to an existing entry.
    pub fn validate(&self) -> Result<(), GsgpError> {
        let bad = |msg: String| Err(GsgpError::CorruptModel(msg));
        for (id, origin) in self.records.iter().enumerate() {
            match *origin {
                Origin::Initial { tree } if tree >= self.trees.len() => {
                    return bad(format!("record {id} references missing tree {tree}"))
                }
                Origin::Crossover {
                    first,
                    second,
                    weight,
                } => {
                    if first >= id || second >= id {
                        return bad(format!("record {id} references a later or missing parent"));
                    }
                    if !(0.0..=1.0).contains(&weight) {
                        return bad(format!(
                            "record {id} has crossover weight {weight} outside [0, 1]"
                        ));
                    }
                }
                Origin::Mutation {
                    parent,
                    first_tree,
                    second_tree,
                    step,
                } => {
                    if parent >= id {
                        return bad(format!("record {id} references a later or missing parent"));
                    }
                    if first_tree >= self.trees.len() || second_tree >= self.trees.len() {
                        return bad(format!("record {id} references a missing tree"));
                    }
                    if !(step > 0.0 && step.is_finite()) {
                        return bad(format!("record {id} has invalid mutation step {step}"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Semantics of every record on `ds`, replayed in archive order.
    pub fn replay(&self, ds: &Dataset) -> Vec<Semantics> {
        let tree_sem: Vec<Option<Vec<f64>>> = {
            let mut needed = vec![false; self.trees.len()];
            for origin in &self.records {
                match *origin {
                    Origin::Initial { tree } => needed[tree] = true,
                    Origin::Mutation {
                        first_tree,
                        second_tree,
                        ..
                    } => {
                        needed[first_tree] = true;
                        needed[second_tree] = true;
                    }
                    Origin::Crossover { .. } => {}
                }
            }
            self.trees
                .iter()
                .zip(needed)
                .map(|(t, n)| n.then(|| t.eval_dataset(ds)))
                .collect()
        };
        let squashed = |id: TreeId| -> Vec<f64> {
            tree_sem[id]
                .as_ref()
                .expect("tree marked as needed")
                .iter()
                .map(|&v| logistic(v))
                .collect()
        };
        let mut out: Vec<Semantics> = Vec::with_capacity(self.records.len());
        for origin in &self.records {
            let s = match *origin {
                Origin::Initial { tree } => tree_sem[tree].clone().expect("tree marked as needed"),
                Origin::Crossover {
                    first,
                    second,
                    weight,
                } => blend_semantics(&out[first], &out[second], weight),
                Origin::Mutation {
                    parent,
                    first_tree,
                    second_tree,
                    step,
                } => mutate_semantics(
                    &out[parent],
                    &squashed(first_tree),
                    &squashed(second_tree),
                    step,
                ),
            };
            out.push(Semantics(s));
        }
        out
    }

    /// Copy holding only what `root` depends on, renumbered in the same
    /// relative order. Returns the new archive and the id of `root` in it.
    pub fn prune(&self, root: RecordId) -> (Archive, RecordId) {
        let mut keep = vec![false; self.records.len()];
        keep[root] = true;
        for id in (0..=root).rev() {
            if !keep[id] {
                continue;
            }
            match self.records[id] {
                Origin::Crossover { first, second, .. } => {
                    keep[first] = true;
                    keep[second] = true;
                }
                Origin::Mutation { parent, .. } => keep[parent] = true,
                Origin::Initial { .. } => {}
            }
        }
        let mut record_map = vec![usize::MAX; self.records.len()];
        let mut tree_map = vec![usize::MAX; self.trees.len()];
        let mut pruned = Archive::default();
        let mut map_tree = |pruned: &mut Archive, t: TreeId| {
            if tree_map[t] == usize::MAX {
                tree_map[t] = pruned.push_tree(self.trees[t].clone());
            }
            tree_map[t]
        };
        for id in 0..=root {
            if !keep[id] {
                continue;
            }
            let origin = match self.records[id] {
                Origin::Initial { tree } => Origin::Initial {
                    tree: map_tree(&mut pruned, tree),
                },
                Origin::Crossover {
                    first,
                    second,
                    weight,
                } => Origin::Crossover {
                    first: record_map[first],
                    second: record_map[second],
                    weight,
                },
                Origin::Mutation {
                    parent,
                    first_tree,
                    second_tree,
                    step,
                } => Origin::Mutation {
                    parent: record_map[parent],
                    first_tree: map_tree(&mut pruned, first_tree),
                    second_tree: map_tree(&mut pruned, second_tree),
                    step,
                },
            };
            record_map[id] = pruned.push_record(origin);
        }
        let new_root = record_map[root];
        (pruned, new_root)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub train_semantics: Semantics,
    pub test_semantics: Semantics,
    pub train_fitness: f64,
    pub record: RecordId,
}

/// Everything the operators need: the two datasets, the training targets and
/// the archive that offspring are recorded in.
#[derive(Debug, Clone)]
pub struct SemanticSpace<'a> {
    train: &'a Dataset,
    test: &'a Dataset,
    targets: Vec<f64>,
    pub archive: Archive,
}

impl<'a> SemanticSpace<'a> {
    pub fn new(train: &'a Dataset, test: &'a Dataset) -> Result<Self, GsgpError> {
        let targets = train
            .targets()
            .ok_or(GsgpError::MissingTargets("training"))?;
        Ok(SemanticSpace {
            train,
            test,
            targets,
            archive: Archive::default(),
        })
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn make(&mut self, train: Vec<f64>, test: Vec<f64>, origin: Origin) -> Individual {
        let train_fitness =
            fitness(&train, &self.targets).expect("semantics sized to the training set");
        Individual {
            train_semantics: Semantics(train),
            test_semantics: Semantics(test),
            train_fitness,
            record: self.archive.push_record(origin),
        }
    }

    pub fn initial(&mut self, tree: ExprTree) -> Individual {
        let train = tree.eval_dataset(self.train);
        let test = tree.eval_dataset(self.test);
        let id = self.archive.push_tree(tree);
        self.make(train, test, Origin::Initial { tree: id })
    }

    /// Crossover with a given weight in `[0, 1]`.
    pub fn crossover_with_weight(
        &mut self,
        p1: &Individual,
        p2: &Individual,
        weight: f64,
    ) -> Individual {
        assert!(
            (0.0..=1.0).contains(&weight),
            "crossover weight {weight} outside [0, 1]"
        );
        let train = blend_semantics(&p1.train_semantics, &p2.train_semantics, weight);
        let test = blend_semantics(&p1.test_semantics, &p2.test_semantics, weight);
        let origin = Origin::Crossover {
            first: p1.record,
            second: p2.record,
            weight,
        };
        self.make(train, test, origin)
    }

    /// Geometric crossover: one weight drawn uniformly from `[0, 1)`.
    pub fn crossover<R: Rng + ?Sized>(
        &mut self,
        p1: &Individual,
        p2: &Individual,
        rng: &mut R,
    ) -> Individual {
        let weight = rng.gen::<f64>();
        self.crossover_with_weight(p1, p2, weight)
    }

    /// Mutation with the two random trees given explicitly.
    pub fn mutation_with_trees(
        &mut self,
        parent: &Individual,
        first: ExprTree,
        second: ExprTree,
        step: f64,
    ) -> Individual {
        assert!(step > 0.0, "mutation step must be positive");
        let squash = |t: &ExprTree, ds: &Dataset| -> Vec<f64> {
            t.eval_dataset(ds).into_iter().map(logistic).collect()
        };
        let train = mutate_semantics(
            &parent.train_semantics,
            &squash(&first, self.train),
            &squash(&second, self.train),
            step,
        );
        let test = mutate_semantics(
            &parent.test_semantics,
            &squash(&first, self.test),
            &squash(&second, self.test),
            step,
        );
        let first_tree = self.archive.push_tree(first);
        let second_tree = self.archive.push_tree(second);
        let origin = Origin::Mutation {
            parent: parent.record,
            first_tree,
            second_tree,
            step,
        };
        self.make(train, test, origin)
    }

    /// Geometric mutation: two fresh `grow` trees of depth `tree_depth`.
    pub fn mutation<R: Rng + ?Sized>(
        &mut self,
        parent: &Individual,
        step: f64,
        tree_depth: usize,
        rng: &mut R,
    ) -> Individual {
        let first = random_tree(rng, GenMethod::grow(tree_depth));
        let second = random_tree(rng, GenMethod::grow(tree_depth));
        self.mutation_with_trees(parent, first, second, step)
    }
}

/// Samples `k` distinct indices uniformly and returns the one with the lowest
/// fitness; ties go to the lowest index.
pub fn tournament_select<R: Rng + ?Sized>(fitness: &[f64], k: usize, rng: &mut R) -> usize {
    assert!(
        k >= 1 && k <= fitness.len(),
        "tournament size {k} invalid for {} individuals",
        fitness.len()
    );
    sample(rng, fitness.len(), k)
        .into_iter()
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)))
        .expect("k >= 1")
}

/// Index of the lowest fitness, ties to the lowest index.
pub(crate) fn argmin(fitness: &[f64]) -> usize {
    (0..fitness.len())
        .min_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)))
        .expect("non-empty population")
}

/// Indices sorted best first, ties by index.
pub(crate) fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GsgpConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_step: f64,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    /// Depth of the `grow` trees drawn by mutation.
    pub random_tree_depth: usize,
    /// Depth range of the ramped half-and-half initial population.
    pub init_min_depth: usize,
    pub init_max_depth: usize,
    pub rng_seed: u64,
}

impl Default for GsgpConfig {
    fn default() -> Self {
        GsgpConfig {
            population_size: 500,
            generations: 50,
            mutation_step: 0.1,
            p_crossover: 0.7,
            p_mutation: 0.3,
            tournament_size: 4,
            elitism: 1,
            random_tree_depth: 4,
            init_min_depth: 2,
            init_max_depth: 6,
            rng_seed: 0,
        }
    }
}

pub(crate) fn check_probabilities(p_crossover: f64, p_mutation: f64) -> Result<(), String> {
    for (name, p) in [("p_crossover", p_crossover), ("p_mutation", p_mutation)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("{name} = {p} is not a probability"));
        }
    }
    if p_crossover + p_mutation > 1.0 + 1e-12 {
        return Err(format!(
            "p_crossover + p_mutation = {} exceeds 1",
            p_crossover + p_mutation
        ));
    }
    Ok(())
}

pub(crate) fn check_selection(
    population: usize,
    tournament: usize,
    elitism: usize,
) -> Result<(), String> {
    if tournament < 2 {
        return Err("tournament_size must be at least 2".into());
    }
    if tournament > population {
        return Err(format!(
            "tournament_size {tournament} exceeds population_size {population}"
        ));
    }
    if elitism < 1 || elitism > population {
        return Err(format!("elitism must lie in 1..={population}"));
    }
    Ok(())
}

impl GsgpConfig {
    pub fn validate(&self) -> Result<(), GsgpError> {
        let check = || -> Result<(), String> {
            check_selection(self.population_size, self.tournament_size, self.elitism)?;
            check_probabilities(self.p_crossover, self.p_mutation)?;
            if !(self.mutation_step > 0.0 && self.mutation_step.is_finite()) {
                return Err(format!(
                    "mutation_step = {} must be positive",
                    self.mutation_step
                ));
            }
            if self.random_tree_depth < 1 {
                return Err("random_tree_depth must be at least 1".into());
            }
            if self.init_min_depth < 1 || self.init_min_depth > self.init_max_depth {
                return Err("need 1 <= init_min_depth <= init_max_depth".into());
            }
            Ok(())
        };
        check().map_err(GsgpError::InvalidConfig)
    }
}

/// Best individual of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Sum of absolute errors over the training rows.
    pub train_fitness: f64,
    /// Same measure on the test rows; absent when test targets are unknown.
    pub test_fitness: Option<f64>,
    pub train_mean_abs_error: f64,
    pub test_mean_abs_error: Option<f64>,
}

impl GenerationRecord {
    pub(crate) fn new(
        generation: usize,
        train_fitness: f64,
        n_train: usize,
        test_fitness: Option<f64>,
        n_test: usize,
    ) -> Self {
        GenerationRecord {
            generation,
            train_fitness,
            test_fitness,
            train_mean_abs_error: train_fitness / n_train as f64,
            test_mean_abs_error: test_fitness.map(|f| f / n_test.max(1) as f64),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GsgpRun {
    pub config: GsgpConfig,
    /// One entry per generation, generation 0 included.
    pub history: Vec<GenerationRecord>,
    pub best: Individual,
    /// Best individual's outputs on the test rows.
    pub predictions: Semantics,
    pub archive: Archive,
}

impl GsgpRun {
    /// Self-contained model of the best individual.
    pub fn model(&self) -> GsgpModel {
        GsgpModel::from_archive(&self.archive, &self.best)
    }
}

/// Runs the generational loop. All randomness comes from one ChaCha8
/// generator seeded with `cfg.rng_seed`, consumed in population order, so a
/// run is a pure function of its inputs.
pub fn evolve(cfg: &GsgpConfig, train: &Dataset, test: &Dataset) -> Result<GsgpRun, GsgpError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut space = SemanticSpace::new(train, test)?;
    let test_targets = test.targets();

    let trees = ramped_half_and_half(
        &mut rng,
        cfg.population_size,
        cfg.init_min_depth,
        cfg.init_max_depth,
    );
    let mut population: Vec<Individual> = trees.into_iter().map(|t| space.initial(t)).collect();

    let record = |generation: usize, best: &Individual| {
        let test_fitness = test_targets.as_deref().map(|t| {
            fitness(&best.test_semantics, t).expect("test semantics sized to the test set")
        });
        GenerationRecord::new(
            generation,
            best.train_fitness,
            train.len(),
            test_fitness,
            test.len(),
        )
    };

    let scores = |pop: &[Individual]| pop.iter().map(|i| i.train_fitness).collect::<Vec<_>>();
    let mut fit = scores(&population);
    let mut history = vec![record(0, &population[argmin(&fit)])];

    for generation in 1..=cfg.generations {
        let mut next: Vec<Individual> = ranking(&fit)[..cfg.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < cfg.population_size {
            let draw = rng.gen::<f64>();
            let child = if draw < cfg.p_crossover {
                let a = tournament_select(&fit, cfg.tournament_size, &mut rng);
                let b = tournament_select(&fit, cfg.tournament_size, &mut rng);
                space.crossover(&population[a], &population[b], &mut rng)
            } else if draw < cfg.p_crossover + cfg.p_mutation {
                let a = tournament_select(&fit, cfg.tournament_size, &mut rng);
                space.mutation(
                    &population[a],
                    cfg.mutation_step,
                    cfg.random_tree_depth,
                    &mut rng,
                )
            } else {
                population[tournament_select(&fit, cfg.tournament_size, &mut rng)].clone()
            };
            next.push(child);
        }
        population = next;
        fit = scores(&population);
        history.push(record(generation, &population[argmin(&fit)]));
    }

    let best = population.swap_remove(argmin(&fit));
    Ok(GsgpRun {
        config: cfg.clone(),
        history,
        predictions: best.test_semantics.clone(),
        best,
        archive: space.archive,
    })
}

/// Node count of the expression an archive record stands for, computed for
/// every record up to and including `upto`. Saturates at `u128::MAX`.
fn record_sizes(archive: &Archive, upto: RecordId) -> Vec<u128> {
    let mut sizes: Vec<u128> = Vec::with_capacity(upto + 1);
    for origin in &archive.records[..=upto] {
        let size = match *origin {
            Origin::Initial { tree } => archive.trees[tree].size() as u128,
            // (T1 * Tr) + ((1 - Tr) * T2): three operators, a subtraction and
            // three constant leaves around the two parents.
            Origin::Crossover { first, second, .. } => sizes[first]
                .saturating_add(sizes[second])
                .saturating_add(CROSSOVER_OVERHEAD),
            // T + ms * (sig(R1) - sig(R2))
            Origin::Mutation {
                parent,
                first_tree,
                second_tree,
                ..
            } => sizes[parent]
                .saturating_add(archive.trees[first_tree].size() as u128)
                .saturating_add(archive.trees[second_tree].size() as u128)
                .saturating_add(MUTATION_OVERHEAD),
        };
        sizes.push(size);
    }
    sizes
}

/// Nodes added around the two parents by a crossover.
pub const CROSSOVER_OVERHEAD: u128 = 7;
/// Nodes added around the parent and the two random trees by a mutation.
pub const MUTATION_OVERHEAD: u128 = 6;

/// Size of the fully expanded expression of `ind`.
pub fn estimate_size(archive: &Archive, ind: &Individual) -> u128 {
    record_sizes(archive, ind.record)[ind.record]
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reconstruction {
    Tree(ExprTree),
    BudgetExceeded { estimate: u128 },
}

/// Expands an individual's ancestry into a literal tree, unless it would
/// have more than `node_budget` nodes.
pub fn reconstruct(archive: &Archive, ind: &Individual, node_budget: usize) -> Reconstruction {
    assert!(node_budget >= 1, "node budget must be at least 1");
    let estimate = estimate_size(archive, ind);
    if estimate > node_budget as u128 {
        return Reconstruction::BudgetExceeded { estimate };
    }
    Reconstruction::Tree(expand(archive, ind.record))
}

fn expand(archive: &Archive, id: RecordId) -> ExprTree {
    match archive.records[id] {
        Origin::Initial { tree } => archive.trees[tree].clone(),
        Origin::Crossover {
            first,
            second,
            weight,
        } => ExprTree::add(
            ExprTree::mul(expand(archive, first), ExprTree::Const(weight)),
            ExprTree::mul(
                ExprTree::sub(ExprTree::Const(1.0), ExprTree::Const(weight)),
                expand(archive, second),
            ),
        ),
        Origin::Mutation {
            parent,
            first_tree,
            second_tree,
            step,
        } => ExprTree::add(
            expand(archive, parent),
            ExprTree::mul(
                ExprTree::Const(step),
                ExprTree::sub(
                    ExprTree::logistic(archive.trees[first_tree].clone()),
                    ExprTree::logistic(archive.trees[second_tree].clone()),
                ),
            ),
        ),
    }
}

/// Persisted form of one evolved individual: the pruned ancestry archive.
/// Predictions on new data replay the archive, never an expanded tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsgpModel {
    pub schema_version: u32,
    /// Record id of the individual within `archive`.
    pub root: RecordId,
    pub train_fitness: f64,
    pub archive: Archive,
}

impl GsgpModel {
    pub fn from_archive(archive: &Archive, ind: &Individual) -> Self {
        let (archive, root) = archive.prune(ind.record);
        GsgpModel {
            schema_version: MODEL_SCHEMA_VERSION,
            root,
            train_fitness: ind.train_fitness,
            archive,
        }
    }

    pub fn validate(&self) -> Result<(), GsgpError> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(GsgpError::CorruptModel(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        if self.root >= self.archive.records.len() {
            return Err(GsgpError::CorruptModel(format!(
                "root record {} missing",
                self.root
            )));
        }
        self.archive.validate()
    }

    pub fn predict(&self, ds: &Dataset) -> Result<Semantics, GsgpError> {
        self.validate()?;
        Ok(self.archive.replay(ds).swap_remove(self.root))
    }
}
