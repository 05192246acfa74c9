//! Expression-tree representation: primitives, trees, and multi-tree
//! individuals. Each tree computes one embedding dimension.

mod generate;
mod text;

pub use generate::{generate_tree, init_population, GenMethod};
pub use text::{individual_to_dot, parse_individual, serialize_individual};

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveVector;

/// Hard cap on tree depth, counted in nodes along the longest root-to-leaf
/// path. Creation additionally requires depth >= MIN_DEPTH.
pub const MAX_DEPTH: usize = 14;
pub const MIN_DEPTH: usize = 2;

/// Smallest and largest tree counts an individual may hold for a dataset
/// with `m` features.
pub fn default_t_max(m: usize) -> usize {
    ((m + 1) / 2).max(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Primitive {
    Add5,
    Sub,
    Mul,
    DivProtected,
    Sigmoid,
    ReLU,
    Max,
    Min,
    If,
    Terminal(usize),
}

/// The nine function tags, in the fixed order used for uniform sampling.
pub const FUNCTIONS: [Primitive; 9] = [
    Primitive::Add5,
    Primitive::Sub,
    Primitive::Mul,
    Primitive::DivProtected,
    Primitive::Sigmoid,
    Primitive::ReLU,
    Primitive::Max,
    Primitive::Min,
    Primitive::If,
];

/// Sigmoid that saturates cleanly for large |a| by only ever exponentiating
/// a non-positive argument.
fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

impl Primitive {
    pub fn arity(&self) -> usize {
        match self {
            Primitive::Add5 => 5,
            Primitive::Sub | Primitive::Mul | Primitive::DivProtected | Primitive::Max | Primitive::Min => 2,
            Primitive::Sigmoid | Primitive::ReLU => 1,
            Primitive::If => 3,
            Primitive::Terminal(_) => 0,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Primitive::Add5 => "add5",
            Primitive::Sub => "sub",
            Primitive::Mul => "mul",
            Primitive::DivProtected => "div",
            Primitive::Sigmoid => "sigmoid",
            Primitive::ReLU => "relu",
            Primitive::Max => "max",
            Primitive::Min => "min",
            Primitive::If => "if",
            Primitive::Terminal(_) => "terminal",
        }
    }

    /// Applies the primitive to already-evaluated inputs. Terminals ignore
    /// `inputs` and read their feature from `instance`.
    pub fn eval(&self, inputs: &[f64], instance: &[f64]) -> Result<f64> {
        if inputs.len() != self.arity() {
            return Err(Error::ArityMismatch {
                primitive: self.tag().to_string(),
                expected: self.arity(),
                got: inputs.len(),
            });
        }
        Ok(match *self {
            Primitive::Add5 => inputs.iter().sum(),
            Primitive::Sub => inputs[0] - inputs[1],
            Primitive::Mul => inputs[0] * inputs[1],
            Primitive::DivProtected => {
                if inputs[1] == 0.0 {
                    1.0
                } else {
                    inputs[0] / inputs[1]
                }
            }
            Primitive::Sigmoid => sigmoid(inputs[0]),
            Primitive::ReLU => {
                if inputs[0] > 0.0 {
                    inputs[0]
                } else {
                    0.0
                }
            }
            Primitive::Max => inputs[0].max(inputs[1]),
            Primitive::Min => inputs[0].min(inputs[1]),
            Primitive::If => {
                if inputs[0] > 0.0 {
                    inputs[1]
                } else {
                    inputs[2]
                }
            }
            Primitive::Terminal(j) => *instance.get(j).ok_or(Error::FeatureIndexOutOfRange {
                index: j,
                num_features: instance.len(),
            })?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub primitive: Primitive,
    pub children: Vec<Node>,
}

impl Node {
    pub fn terminal(index: usize) -> Node {
        Node { primitive: Primitive::Terminal(index), children: Vec::new() }
    }

    pub fn new(primitive: Primitive, children: Vec<Node>) -> Result<Node> {
        if children.len() != primitive.arity() {
            return Err(Error::ArityMismatch {
                primitive: primitive.tag().to_string(),
                expected: primitive.arity(),
                got: children.len(),
            });
        }
        Ok(Node { primitive, children })
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Node::depth).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Node::node_count).sum::<usize>()
    }

    /// Recursive evaluation. Arity correctness is structural (enforced at
    /// construction), so no checks are repeated here.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.primitive {
            Primitive::Terminal(j) => x[j],
            Primitive::Add5 => self.children.iter().fold(0.0, |acc, c| acc + c.eval(x)),
            Primitive::Sub => self.children[0].eval(x) - self.children[1].eval(x),
            Primitive::Mul => self.children[0].eval(x) * self.children[1].eval(x),
            Primitive::DivProtected => {
                let b = self.children[1].eval(x);
                if b == 0.0 {
                    1.0
                } else {
                    self.children[0].eval(x) / b
                }
            }
            Primitive::Sigmoid => sigmoid(self.children[0].eval(x)),
            Primitive::ReLU => {
                let a = self.children[0].eval(x);
                if a > 0.0 {
                    a
                } else {
                    0.0
                }
            }
            Primitive::Max => self.children[0].eval(x).max(self.children[1].eval(x)),
            Primitive::Min => self.children[0].eval(x).min(self.children[1].eval(x)),
            Primitive::If => {
                if self.children[0].eval(x) > 0.0 {
                    self.children[1].eval(x)
                } else {
                    self.children[2].eval(x)
                }
            }
        }
    }

    fn validate(&self, max_feature: Option<usize>) -> Result<()> {
        if self.children.len() != self.primitive.arity() {
            return Err(Error::ArityMismatch {
                primitive: self.primitive.tag().to_string(),
                expected: self.primitive.arity(),
                got: self.children.len(),
            });
        }
        if let (Primitive::Terminal(j), Some(m)) = (self.primitive, max_feature) {
            if j >= m {
                return Err(Error::FeatureIndexOutOfRange { index: j, num_features: m });
            }
        }
        for child in &self.children {
            child.validate(max_feature)?;
        }
        Ok(())
    }

    fn collect_features(&self, out: &mut BTreeSet<usize>) {
        if let Primitive::Terminal(j) = self.primitive {
            out.insert(j);
        }
        for child in &self.children {
            child.collect_features(out);
        }
    }

    /// Preorder-indexed subtree access: index 0 is this node.
    pub fn subtree(&self, index: usize) -> Option<&Node> {
        fn walk<'a>(node: &'a Node, target: usize, counter: &mut usize) -> Option<&'a Node> {
            if *counter == target {
                return Some(node);
            }
            *counter += 1;
            for child in &node.children {
                if let Some(found) = walk(child, target, counter) {
                    return Some(found);
                }
            }
            None
        }
        let mut counter = 0;
        walk(self, index, &mut counter)
    }

    /// 1-based level (root = 1) of the node at the given preorder index.
    pub fn level_of(&self, index: usize) -> Option<usize> {
        fn walk(node: &Node, target: usize, counter: &mut usize, level: usize) -> Option<usize> {
            if *counter == target {
                return Some(level);
            }
            *counter += 1;
            for child in &node.children {
                if let Some(found) = walk(child, target, counter, level + 1) {
                    return Some(found);
                }
            }
            None
        }
        let mut counter = 0;
        walk(self, index, &mut counter, 1)
    }

    /// Returns a copy of this tree with the subtree at the given preorder
    /// index replaced.
    pub fn with_subtree_replaced(&self, index: usize, replacement: &Node) -> Node {
        fn walk(node: &Node, target: usize, counter: &mut usize, replacement: &Node) -> Node {
            let here = *counter;
            *counter += 1;
            if here == target {
                return replacement.clone();
            }
            let children = node.children.iter().map(|c| walk(c, target, counter, replacement)).collect();
            Node { primitive: node.primitive, children }
        }
        let mut counter = 0;
        walk(self, index, &mut counter, replacement)
    }
}

/// A single constructed feature. Construction checks arity correctness and
/// the depth cap; the minimum creation depth is the generator's contract.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    root: Node,
}

impl Tree {
    pub fn new(root: Node) -> Result<Tree> {
        root.validate(None)?;
        let depth = root.depth();
        if depth > MAX_DEPTH {
            return Err(Error::TreeTooDeep { depth, max: MAX_DEPTH });
        }
        Ok(Tree { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        let mut features = BTreeSet::new();
        self.root.collect_features(&mut features);
        features.into_iter().next_back()
    }
}

/// An ordered list of trees; tree j produces embedding column j.
#[derive(Debug, Clone)]
pub struct Individual {
    trees: Vec<Tree>,
    objectives: Option<ObjectiveVector>,
}

impl PartialEq for Individual {
    /// Structural equality; cached objectives are derived state and ignored.
    fn eq(&self, other: &Self) -> bool {
        self.trees == other.trees
    }
}

impl Individual {
    pub fn new(trees: Vec<Tree>) -> Result<Individual> {
        if trees.is_empty() {
            return Err(Error::EmptyIndividual);
        }
        Ok(Individual { trees, objectives: None })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn objectives(&self) -> Option<ObjectiveVector> {
        self.objectives
    }

    pub fn set_objectives(&mut self, objectives: ObjectiveVector) {
        self.objectives = Some(objectives);
    }

    /// Sorted set of feature indices referenced by any terminal.
    pub fn feature_usage(&self) -> BTreeSet<usize> {
        let mut features = BTreeSet::new();
        for tree in &self.trees {
            tree.root.collect_features(&mut features);
        }
        features
    }

    /// Evaluates every tree over every instance; column j is tree j.
    pub fn apply(&self, d: &Dataset) -> Result<Array2<f64>> {
        let m = d.num_features();
        for tree in &self.trees {
            if let Some(max) = tree.max_feature_index() {
                if max >= m {
                    return Err(Error::FeatureIndexOutOfRange { index: max, num_features: m });
                }
            }
        }
        let n = d.num_instances();
        let t = self.trees.len();
        let features = d.features();
        let mut embedding = Array2::zeros((n, t));
        for i in 0..n {
            let row = features.row(i);
            let x = row.as_slice().expect("row-major feature rows are contiguous");
            for (j, tree) in self.trees.iter().enumerate() {
                embedding[[i, j]] = tree.eval(x);
            }
        }
        Ok(embedding)
    }
}
