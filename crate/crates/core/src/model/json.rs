//! Machine-readable model file format.
//!
//! A model file is a JSON object `{ "schema": [state names], "lambda_max":
//! int, "trees": [node, ...] }` where a node is either `{"op": "+"|"-"|"*",
//! "left": node, "right": node}`, `{"state": index}`, or `{"param": index}`.
//! An optional `"meta"` object carries provenance (command, seed, config) and
//! is ignored on load.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BinOp, EquationTree, ModelGenotype};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Op { op: String, left: Box<TreeNode>, right: Box<TreeNode> },
    State { state: usize },
    Param { param: usize },
}

impl TreeNode {
    fn from_tree(tree: &EquationTree) -> TreeNode {
        match tree {
            EquationTree::Op { op, left, right } => TreeNode::Op {
                op: op.symbol().to_string(),
                left: Box::new(TreeNode::from_tree(left)),
                right: Box::new(TreeNode::from_tree(right)),
            },
            EquationTree::State(i) => TreeNode::State { state: *i },
            EquationTree::Param(i) => TreeNode::Param { param: *i },
        }
    }

    fn to_tree(&self) -> Result<EquationTree> {
        match self {
            TreeNode::Op { op, left, right } => {
                let op = match op.as_str() {
                    "+" => BinOp::Add,
                    "-" => BinOp::Sub,
                    "*" => BinOp::Mul,
                    other => {
                        return Err(Error::Model(format!("unknown operator `{other}`")));
                    }
                };
                Ok(EquationTree::Op {
                    op,
                    left: Box::new(left.to_tree()?),
                    right: Box::new(right.to_tree()?),
                })
            }
            TreeNode::State { state } => Ok(EquationTree::State(*state)),
            TreeNode::Param { param } => Ok(EquationTree::Param(*param)),
        }
    }
}

/// Serialized form of a genotype plus the state names it was built against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
    pub schema: Vec<String>,
    pub lambda_max: usize,
    pub trees: Vec<TreeNode>,
}

impl ModelFile {
    pub fn from_genotype(genotype: &ModelGenotype, names: &[String]) -> ModelFile {
        assert_eq!(names.len(), genotype.state_count(), "schema/genotype mismatch");
        ModelFile {
            meta: None,
            schema: names.to_vec(),
            lambda_max: genotype.lambda_max(),
            trees: genotype.trees().iter().map(TreeNode::from_tree).collect(),
        }
    }

    /// Rebuilds the genotype, validating every reference against the embedded
    /// schema names and pool size.
    pub fn to_genotype(&self) -> Result<ModelGenotype> {
        let trees: Result<Vec<EquationTree>> = self.trees.iter().map(TreeNode::to_tree).collect();
        ModelGenotype::from_names(trees?, self.lambda_max, &self.schema)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        Ok(serde_json::from_str(text)?)
    }
}
