//! Textual serialization of individuals: nested prefix expressions, one tree
//! per line, plus DOT export for visualization.

use std::fmt::Write as _;

use super::{Individual, Node, Primitive, Tree};
use crate::error::{Error, Result};

fn write_node(node: &Node, out: &mut String) {
    match node.primitive {
        Primitive::Terminal(j) => {
            let _ = write!(out, "f{j}");
        }
        _ => {
            let _ = write!(out, "({}", node.primitive.tag());
            for child in &node.children {
                out.push(' ');
                write_node(child, out);
            }
            out.push(')');
        }
    }
}

/// Renders one tree per line, e.g. `(mul f0 (div f1 f2))`.
pub fn serialize_individual(ind: &Individual) -> String {
    let mut out = String::new();
    for tree in ind.trees() {
        write_node(tree.root(), &mut out);
        out.push('\n');
    }
    out
}

fn function_by_tag(tag: &str) -> Option<Primitive> {
    super::FUNCTIONS.iter().copied().find(|p| p.tag() == tag)
}

fn tokenize(line: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in line.chars() {
        match ch {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

struct Parser<'a> {
    tokens: &'a [String],
    at: usize,
    line: usize,
    m: usize,
}

impl<'a> Parser<'a> {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::TreeParse { line: self.line, message: message.into() }
    }

    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.at).map(String::as_str)
    }

    fn next(&mut self) -> Result<&'a str> {
        let token = self.tokens.get(self.at).ok_or_else(|| self.fail("unexpected end of input"))?;
        self.at += 1;
        Ok(token)
    }

    fn parse_terminal(&self, token: &str) -> Result<Node> {
        let index: usize = token
            .strip_prefix('f')
            .and_then(|digits| digits.parse().ok())
            .ok_or_else(|| self.fail(format!("unknown token {token:?}")))?;
        if index >= self.m {
            return Err(Error::FeatureIndexOutOfRange { index, num_features: self.m });
        }
        Ok(Node::terminal(index))
    }

    fn parse_expr(&mut self) -> Result<Node> {
        let token = self.next()?;
        if token == ")" {
            return Err(self.fail("unexpected ')'"));
        }
        if token != "(" {
            return self.parse_terminal(token);
        }
        let tag = self.next()?;
        let primitive =
            function_by_tag(tag).ok_or_else(|| self.fail(format!("unknown primitive {tag:?}")))?;
        let mut children = Vec::with_capacity(primitive.arity());
        for _ in 0..primitive.arity() {
            if self.peek() == Some(")") {
                break;
            }
            children.push(self.parse_expr()?);
        }
        let closer = self.next()?;
        if closer != ")" {
            return Err(self.fail(format!("{} takes {} arguments", primitive.tag(), primitive.arity())));
        }
        if children.len() != primitive.arity() {
            return Err(Error::ArityMismatch {
                primitive: primitive.tag().to_string(),
                expected: primitive.arity(),
                got: children.len(),
            });
        }
        Node::new(primitive, children)
    }
}

/// Parses the output of [`serialize_individual`]. `m` bounds terminal feature
/// indices. Blank lines are ignored; line numbers in errors are 1-based.
pub fn parse_individual(text: &str, m: usize) -> Result<Individual> {
    let mut trees = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let tokens = tokenize(raw);
        let mut parser = Parser { tokens: &tokens, at: 0, line, m };
        let root = parser.parse_expr()?;
        if parser.at != tokens.len() {
            return Err(parser.fail("trailing tokens after expression"));
        }
        trees.push(Tree::new(root)?);
    }
    Individual::new(trees)
}

fn dot_label(node: &Node, feature_names: &[String]) -> String {
    let raw = match node.primitive {
        Primitive::Terminal(j) => feature_names.get(j).cloned().unwrap_or_else(|| format!("f{j}")),
        _ => node.primitive.tag().to_string(),
    };
    raw.replace('\\', "\\\\").replace('"', "\\\"")
}

/// One `digraph` per tree, nodes labeled by primitive tag or feature name.
pub fn individual_to_dot(ind: &Individual, feature_names: &[String]) -> String {
    let mut out = String::new();
    for (t, tree) in ind.trees().iter().enumerate() {
        let _ = writeln!(out, "digraph tree_{} {{", t + 1);
        let mut next_id = 0usize;
        fn walk(node: &Node, names: &[String], next_id: &mut usize, out: &mut String) -> usize {
            let id = *next_id;
            *next_id += 1;
            let _ = writeln!(out, "  n{id} [label=\"{}\"];", dot_label(node, names));
            for child in &node.children {
                let child_id = walk(child, names, next_id, out);
                let _ = writeln!(out, "  n{id} -> n{child_id};");
            }
            id
        }
        walk(tree.root(), feature_names, &mut next_id, &mut out);
        out.push_str("}\n");
    }
    out
}
