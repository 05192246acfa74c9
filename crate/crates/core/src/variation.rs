//! Evolutionary operators over multi-tree individuals: index-aligned
//! crossover, subtree ("standard") mutation, and add/remove (arity) mutation.
//! All operators are pure: parents are never modified.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gp::{generate_tree, GenMethod, Individual, Node, Tree, MAX_DEPTH};

#[derive(Debug, Clone)]
pub struct VariationConfig {
    pub p_crossover: f64,
    pub p_standard_mut: f64,
    pub p_arity_mut: f64,
    pub max_depth: usize,
    pub t_max: usize,
    pub num_features: usize,
}

impl VariationConfig {
    pub fn new(t_max: usize, num_features: usize) -> VariationConfig {
        VariationConfig {
            p_crossover: 0.70,
            p_standard_mut: 0.15,
            p_arity_mut: 0.15,
            max_depth: MAX_DEPTH,
            t_max,
            num_features,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.p_crossover, self.p_standard_mut, self.p_arity_mut];
        if rates.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return Err(Error::InvalidConfig("operator rates must lie in [0,1]".into()));
        }
        let sum: f64 = rates.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("operator rates sum to {sum}, expected 1")));
        }
        if self.t_max < 2 {
            return Err(Error::InvalidConfig("t_max must be at least 2".into()));
        }
        if self.num_features < 1 {
            return Err(Error::InvalidConfig("need at least one feature".into()));
        }
        if self.max_depth < 2 {
            return Err(Error::InvalidConfig("max depth must be at least 2".into()));
        }
        Ok(())
    }
}

/// Subtree crossover between trees of the same index, over indices
/// 1..=min(|A|,|B|), one uniformly chosen crossover point per tree per pair.
/// A pair whose exchange would breach the depth cap is rolled back (that
/// index becomes a no-op). Tree counts are preserved.
pub fn crossover<R: Rng>(
    a: &Individual,
    b: &Individual,
    config: &VariationConfig,
    rng: &mut R,
) -> (Individual, Individual) {
    let shared = a.num_trees().min(b.num_trees());
    let mut a_trees: Vec<Tree> = a.trees().to_vec();
    let mut b_trees: Vec<Tree> = b.trees().to_vec();
    for j in 0..shared {
        let point_a = rng.gen_range(0..a_trees[j].node_count());
        let point_b = rng.gen_range(0..b_trees[j].node_count());
        let sub_a = a_trees[j].root().subtree(point_a).expect("point in range").clone();
        let sub_b = b_trees[j].root().subtree(point_b).expect("point in range").clone();
        let new_a = a_trees[j].root().with_subtree_replaced(point_a, &sub_b);
        let new_b = b_trees[j].root().with_subtree_replaced(point_b, &sub_a);
        if new_a.depth() <= config.max_depth && new_b.depth() <= config.max_depth {
            a_trees[j] = Tree::new(new_a).expect("depth checked, structure preserved");
            b_trees[j] = Tree::new(new_b).expect("depth checked, structure preserved");
        }
    }
    (
        Individual::new(a_trees).expect("tree count unchanged"),
        Individual::new(b_trees).expect("tree count unchanged"),
    )
}

/// Replaces a uniformly chosen subtree of a uniformly chosen tree with a
/// fresh full-method subtree. The replacement depth is drawn from
/// [2, min(6, remaining depth budget)]; a budget below 2 forces a bare
/// terminal, so the cap can never be breached.
pub fn mutate_standard<R: Rng>(ind: &Individual, config: &VariationConfig, rng: &mut R) -> Individual {
    let tree_index = rng.gen_range(0..ind.num_trees());
    let tree = &ind.trees()[tree_index];
    let point = rng.gen_range(0..tree.node_count());
    let level = tree.root().level_of(point).expect("point in range");
    let budget = config.max_depth - level + 1;
    let replacement = if budget < 2 {
        Node::terminal(rng.gen_range(0..config.num_features))
    } else {
        let depth = rng.gen_range(2..=budget.min(6));
        generate_tree(GenMethod::Full, depth, config.num_features, rng).root().clone()
    };
    let new_root = tree.root().with_subtree_replaced(point, &replacement);
    let mut trees = ind.trees().to_vec();
    trees[tree_index] = Tree::new(new_root).expect("replacement respects the depth budget");
    Individual::new(trees).expect("tree count unchanged")
}

/// Grows or shrinks the individual by exactly one tree, each direction with
/// probability 1/2; an infeasible direction (t=1 remove, t=t_max add) forces
/// the other. Growth appends a half-and-half tree of depth 2..=6 at the end;
/// shrinking drops the last (most local) tree.
pub fn mutate_arity<R: Rng>(ind: &Individual, config: &VariationConfig, rng: &mut R) -> Individual {
    let t = ind.num_trees();
    let add = if t <= 1 {
        true
    } else if t >= config.t_max {
        false
    } else {
        rng.gen_bool(0.5)
    };
    let mut trees = ind.trees().to_vec();
    if add {
        let depth = rng.gen_range(2..=6);
        let method = if rng.gen_bool(0.5) { GenMethod::Full } else { GenMethod::Grow };
        trees.push(generate_tree(method, depth, config.num_features, rng));
    } else {
        trees.pop();
    }
    Individual::new(trees).expect("arity mutation keeps at least one tree")
}

/// One offspring per variation event: exactly one operator fires, chosen by
/// the configured rates. Crossover contributes only its first child; the
/// mutations act on the first parent.
pub fn vary<R: Rng>(
    a: &Individual,
    b: &Individual,
    config: &VariationConfig,
    rng: &mut R,
) -> Individual {
    let u: f64 = rng.gen();
    if u < config.p_crossover {
        crossover(a, b, config, rng).0
    } else if u < config.p_crossover + config.p_standard_mut {
        mutate_standard(a, config, rng)
    } else {
        mutate_arity(a, config, rng)
    }
}
