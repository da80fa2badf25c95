//! Model representation: expression trees over state variables and shared
//! parameters, grouped into one genotype per system of difference equations.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod fixture;
mod json;
mod parse;

pub use fixture::{coupled_pair_genotype, coupled_pair_schema, mood_fixture_genotype, mood_fixture_schema};
pub use json::{ModelFile, TreeNode};
pub use parse::parse;

/// Binary operators allowed in equation trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub const ALL: [BinOp; 3] = [BinOp::Add, BinOp::Sub, BinOp::Mul];

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
        }
    }
}

/// Expression tree for a single state's difference equation.
///
/// Leaves reference either a state variable at the current time step or an
/// entry of the genotype-wide shared parameter pool. Node positions are
/// addressed by preorder index (root = 0); node depth counts from 1 at the
/// root, so a lone leaf has depth 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EquationTree {
    Op { op: BinOp, left: Box<EquationTree>, right: Box<EquationTree> },
    State(usize),
    Param(usize),
}

impl EquationTree {
    /// Depth of the tree; a single leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            EquationTree::Op { left, right, .. } => 1 + left.depth().max(right.depth()),
            _ => 1,
        }
    }

    /// Total number of nodes (internal and leaves).
    pub fn node_count(&self) -> usize {
        match self {
            EquationTree::Op { left, right, .. } => 1 + left.node_count() + right.node_count(),
            _ => 1,
        }
    }

    /// Evaluates the tree. `params` is indexed by raw parameter-pool index.
    pub fn eval(&self, state: &[f64], params: &[f64]) -> f64 {
        match self {
            EquationTree::Op { op, left, right } => {
                op.apply(left.eval(state, params), right.eval(state, params))
            }
            EquationTree::State(i) => state[*i],
            EquationTree::Param(i) => params[*i],
        }
    }

    /// Returns the subtree rooted at preorder index `idx`.
    ///
    /// Panics if `idx >= node_count()`.
    pub fn subtree(&self, idx: usize) -> &EquationTree {
        fn walk<'a>(node: &'a EquationTree, counter: &mut usize) -> Option<&'a EquationTree> {
            if *counter == 0 {
                return Some(node);
            }
            *counter -= 1;
            if let EquationTree::Op { left, right, .. } = node {
                if let Some(hit) = walk(left, counter) {
                    return Some(hit);
                }
                return walk(right, counter);
            }
            None
        }
        let mut counter = idx;
        walk(self, &mut counter).expect("node index out of range")
    }

    /// Depth (root = 1) of the node at preorder index `idx`.
    ///
    /// Panics if `idx >= node_count()`.
    pub fn depth_of_node(&self, idx: usize) -> usize {
        fn walk(node: &EquationTree, counter: &mut usize, depth: usize) -> Option<usize> {
            if *counter == 0 {
                return Some(depth);
            }
            *counter -= 1;
            if let EquationTree::Op { left, right, .. } = node {
                if let Some(d) = walk(left, counter, depth + 1) {
                    return Some(d);
                }
                return walk(right, counter, depth + 1);
            }
            None
        }
        let mut counter = idx;
        walk(self, &mut counter, 1).expect("node index out of range")
    }

    /// Returns a copy with the subtree at preorder index `idx` replaced.
    ///
    /// Panics if `idx >= node_count()`.
    pub fn replaced(&self, idx: usize, replacement: EquationTree) -> EquationTree {
        fn walk(
            node: &EquationTree,
            counter: &mut usize,
            repl: &mut Option<EquationTree>,
        ) -> EquationTree {
            if *counter == 0 && repl.is_some() {
                return repl.take().expect("checked above");
            }
            *counter = counter.wrapping_sub(1);
            match node {
                EquationTree::Op { op, left, right } => EquationTree::Op {
                    op: *op,
                    left: Box::new(walk(left, counter, repl)),
                    right: Box::new(walk(right, counter, repl)),
                },
                leaf => leaf.clone(),
            }
        }
        let mut counter = idx;
        let mut repl = Some(replacement);
        let out = walk(self, &mut counter, &mut repl);
        assert!(repl.is_none(), "node index out of range");
        out
    }

    /// Inserts every referenced parameter-pool index into `out`.
    pub fn collect_params(&self, out: &mut BTreeSet<usize>) {
        match self {
            EquationTree::Op { left, right, .. } => {
                left.collect_params(out);
                right.collect_params(out);
            }
            EquationTree::Param(i) => {
                out.insert(*i);
            }
            EquationTree::State(_) => {}
        }
    }

    fn fmt_infix(&self, names: &[String], out: &mut String) {
        match self {
            EquationTree::Op { op, left, right } => {
                out.push('(');
                left.fmt_infix(names, out);
                out.push(' ');
                out.push(op.symbol());
                out.push(' ');
                right.fmt_infix(names, out);
                out.push(')');
            }
            EquationTree::State(i) => {
                out.push_str(&names[*i]);
                out.push_str("(t)");
            }
            EquationTree::Param(i) => {
                out.push('g');
                out.push_str(&(i + 1).to_string());
            }
        }
    }

    fn push_key(&self, out: &mut String) {
        match self {
            EquationTree::Op { op, left, right } => {
                out.push(op.symbol());
                out.push('(');
                left.push_key(out);
                out.push(',');
                right.push_key(out);
                out.push(')');
            }
            EquationTree::State(i) => {
                out.push('s');
                out.push_str(&i.to_string());
            }
            EquationTree::Param(i) => {
                out.push('p');
                out.push_str(&i.to_string());
            }
        }
    }

    fn validate_refs(&self, states: usize, lambda_max: usize) -> Result<()> {
        match self {
            EquationTree::Op { left, right, .. } => {
                left.validate_refs(states, lambda_max)?;
                right.validate_refs(states, lambda_max)
            }
            EquationTree::State(i) if *i >= states => {
                Err(Error::Model(format!("state index {i} out of range ({states} states)")))
            }
            EquationTree::Param(i) if *i >= lambda_max => {
                Err(Error::ParamOutOfRange { index: *i, lambda_max })
            }
            _ => Ok(()),
        }
    }
}

/// Declares the observed state variables: names, raw measurement scales used
/// for normalization, and which states are forecasting targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSchema {
    names: Vec<String>,
    target_indices: Vec<usize>,
    raw_scale: Vec<(f64, f64)>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl StateSchema {
    pub fn new(
        names: Vec<String>,
        target_indices: Vec<usize>,
        raw_scale: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Schema("schema declares no states".into()));
        }
        for name in &names {
            if !is_identifier(name) {
                return Err(Error::Schema(format!(
                    "state name `{name}` is not an identifier"
                )));
            }
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Schema("duplicate state names".into()));
        }
        if target_indices.is_empty() {
            return Err(Error::Schema("schema declares no target states".into()));
        }
        let mut seen = BTreeSet::new();
        for &t in &target_indices {
            if t >= names.len() {
                return Err(Error::Schema(format!("target index {t} out of range")));
            }
            if !seen.insert(t) {
                return Err(Error::Schema(format!("duplicate target index {t}")));
            }
        }
        if raw_scale.len() != names.len() {
            return Err(Error::Schema("raw_scale length differs from state count".into()));
        }
        for (name, &(lo, hi)) in names.iter().zip(&raw_scale) {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Schema(format!(
                    "state `{name}` has invalid raw scale [{lo}, {hi}]"
                )));
            }
        }
        Ok(StateSchema { names, target_indices, raw_scale })
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn target_indices(&self) -> &[usize] {
        &self.target_indices
    }

    pub fn raw_scale(&self) -> &[(f64, f64)] {
        &self.raw_scale
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Maps a raw measurement onto [0, 1] via the state's declared scale.
    pub fn normalize(&self, state: usize, raw: f64) -> f64 {
        let (lo, hi) = self.raw_scale[state];
        (raw - lo) / (hi - lo)
    }

    /// Stable identity used to tie genotypes to the schema they were built for.
    pub fn key(&self) -> String {
        self.names.join(",")
    }
}

/// A candidate model: one equation tree per state plus the size of the shared
/// parameter pool the trees may reference.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModelGenotype {
    trees: Vec<EquationTree>,
    lambda_max: usize,
    schema_key: String,
}

impl ModelGenotype {
    pub fn new(trees: Vec<EquationTree>, lambda_max: usize, schema: &StateSchema) -> Result<Self> {
        Self::from_names(trees, lambda_max, schema.names())
    }

    pub fn from_names(
        trees: Vec<EquationTree>,
        lambda_max: usize,
        names: &[String],
    ) -> Result<Self> {
        if trees.len() != names.len() {
            return Err(Error::Model(format!(
                "genotype has {} trees but the schema declares {} states",
                trees.len(),
                names.len()
            )));
        }
        for tree in &trees {
            tree.validate_refs(names.len(), lambda_max)?;
        }
        Ok(ModelGenotype { trees, lambda_max, schema_key: names.join(",") })
    }

    pub fn trees(&self) -> &[EquationTree] {
        &self.trees
    }

    pub fn lambda_max(&self) -> usize {
        self.lambda_max
    }

    pub fn schema_key(&self) -> &str {
        &self.schema_key
    }

    pub fn state_count(&self) -> usize {
        self.trees.len()
    }

    /// Maximum depth over all trees.
    pub fn depth(&self) -> usize {
        self.trees.iter().map(EquationTree::depth).max().unwrap_or(0)
    }

    /// Ascending raw indices of the parameters actually referenced.
    pub fn param_indices(&self) -> Vec<usize> {
        let mut set = BTreeSet::new();
        for tree in &self.trees {
            tree.collect_params(&mut set);
        }
        set.into_iter().collect()
    }

    /// Number of distinct parameters referenced (k).
    pub fn distinct_params(&self) -> usize {
        self.param_indices().len()
    }

    /// Compact schema-independent encoding of the genotype structure; equal
    /// keys mean structurally identical genotypes under the same pool size.
    pub fn structure_key(&self) -> String {
        let mut out = String::with_capacity(16 * self.trees.len());
        out.push('L');
        out.push_str(&self.lambda_max.to_string());
        for tree in &self.trees {
            out.push(';');
            tree.push_key(&mut out);
        }
        out
    }

    /// Renders the system as one `name(t+1) = expr` line per state.
    pub fn render(&self, schema: &StateSchema) -> String {
        debug_assert_eq!(schema.key(), self.schema_key, "render with mismatched schema");
        self.render_with_names(schema.names())
    }

    pub fn render_with_names(&self, names: &[String]) -> String {
        assert_eq!(names.len(), self.trees.len(), "render with wrong state count");
        let mut out = String::new();
        for (name, tree) in names.iter().zip(&self.trees) {
            out.push_str(name);
            out.push_str("(t+1) = ");
            tree.fmt_infix(names, &mut out);
            out.push('\n');
        }
        out
    }
}

/// Draws a random tree with depth ≤ `max_depth`.
///
/// Internal nodes are produced with probability `p_op` while depth budget
/// remains; at budget 1 a terminal is forced. Terminals pick a state
/// reference or a parameter reference with equal probability (always a state
/// when `lambda_max` is 0), then a uniform index.
pub fn random_tree<R: Rng>(
    max_depth: usize,
    schema: &StateSchema,
    lambda_max: usize,
    p_op: f64,
    rng: &mut R,
) -> EquationTree {
    assert!(max_depth >= 1, "depth budget must be at least 1");
    gen_tree(max_depth, schema.state_count(), lambda_max, p_op, rng)
}

fn gen_tree<R: Rng>(
    budget: usize,
    states: usize,
    lambda_max: usize,
    p_op: f64,
    rng: &mut R,
) -> EquationTree {
    if budget > 1 && rng.gen::<f64>() < p_op {
        let op = BinOp::ALL[rng.gen_range(0..BinOp::ALL.len())];
        let left = gen_tree(budget - 1, states, lambda_max, p_op, rng);
        let right = gen_tree(budget - 1, states, lambda_max, p_op, rng);
        EquationTree::Op { op, left: Box::new(left), right: Box::new(right) }
    } else if lambda_max == 0 || rng.gen::<f64>() < 0.5 {
        EquationTree::State(rng.gen_range(0..states))
    } else {
        EquationTree::Param(rng.gen_range(0..lambda_max))
    }
}

/// Draws a full random genotype: one random tree per state.
pub fn random_genotype<R: Rng>(
    schema: &StateSchema,
    lambda_max: usize,
    max_depth: usize,
    p_op: f64,
    rng: &mut R,
) -> ModelGenotype {
    let trees = (0..schema.state_count())
        .map(|_| random_tree(max_depth, schema, lambda_max, p_op, rng))
        .collect();
    ModelGenotype::new(trees, lambda_max, schema).expect("generated refs are in range")
}
