//! Random tree and population construction.
//!
//! Draw order is part of the determinism contract: an individual draws its
//! tree count first, then builds trees left to right, each node drawing its
//! primitive before its children (and its feature index if terminal).

use rand::Rng;

use super::{Individual, Node, Primitive, Tree, FUNCTIONS, MAX_DEPTH, MIN_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMethod {
    /// All leaves at exactly the target depth.
    Full,
    /// Terminals may appear anywhere at or past the minimum depth.
    Grow,
}

fn random_function<R: Rng>(rng: &mut R) -> Primitive {
    FUNCTIONS[rng.gen_range(0..FUNCTIONS.len())]
}

fn random_terminal<R: Rng>(m: usize, rng: &mut R) -> Node {
    Node::terminal(rng.gen_range(0..m))
}

fn build<R: Rng>(method: GenMethod, level: usize, target: usize, m: usize, rng: &mut R) -> Node {
    if level == target {
        return random_terminal(m, rng);
    }
    let primitive = match method {
        GenMethod::Full => random_function(rng),
        GenMethod::Grow => {
            // Below the minimum depth only functions are eligible; afterwards
            // the terminal tag competes uniformly with the nine functions.
            if level < MIN_DEPTH {
                random_function(rng)
            } else {
                let tag = rng.gen_range(0..FUNCTIONS.len() + 1);
                if tag == FUNCTIONS.len() {
                    return random_terminal(m, rng);
                }
                FUNCTIONS[tag]
            }
        }
    };
    let children = (0..primitive.arity()).map(|_| build(method, level + 1, target, m, rng)).collect();
    Node { primitive, children }
}

/// Generates one tree with the given method and target depth over a terminal
/// set of `m` features.
pub fn generate_tree<R: Rng>(method: GenMethod, depth: usize, m: usize, rng: &mut R) -> Tree {
    assert!((MIN_DEPTH..=MAX_DEPTH).contains(&depth), "target depth out of range");
    assert!(m >= 1, "need at least one feature");
    Tree::new(build(method, 1, depth, m, rng)).expect("generated trees satisfy construction invariants")
}

/// Ramped half-and-half initialization: each individual draws its tree count
/// uniformly from 1..=t_max; across the whole population, consecutive trees
/// cycle the target depth through 2..=6 and alternate full/grow.
pub fn init_population<R: Rng>(pop_size: usize, t_max: usize, m: usize, rng: &mut R) -> Vec<Individual> {
    assert!(pop_size >= 1);
    assert!(t_max >= 1);
    let mut ramp = 0usize;
    (0..pop_size)
        .map(|_| {
            let t = rng.gen_range(1..=t_max);
            let trees = (0..t)
                .map(|_| {
                    let depth = MIN_DEPTH + ramp % 5;
                    let method = if ramp % 2 == 0 { GenMethod::Full } else { GenMethod::Grow };
                    ramp += 1;
                    generate_tree(method, depth, m, rng)
                })
                .collect();
            Individual::new(trees).expect("t >= 1")
        })
        .collect()
}
