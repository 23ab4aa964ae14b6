//! Genealogies indexed by an incomplete binary tree.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{BranchingError, Result};

/// Which children of each kept individual are kept in the observed genealogy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum KeepRule {
    /// One child per division, chosen uniformly: a single lineage.
    MotherMachine,
    /// Every child.
    Full,
    /// Each child independently with probability `p`; a generation is never left empty.
    Bernoulli { p: f64 },
}

impl KeepRule {
    /// Growth exponent of generation sizes, `2^{ρn}`.
    pub fn growth_exponent(&self) -> f64 {
        match self {
            KeepRule::MotherMachine => 0.0,
            KeepRule::Full => 1.0,
            KeepRule::Bernoulli { p } => (2.0 * p).log2().max(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let KeepRule::Bernoulli { p } = self {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(BranchingError::param("keep.p", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineageNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub generation: u32,
    pub trait_at_birth: f64,
    pub birth_time: f64,
    /// Time from birth to division, when the life of the individual was simulated.
    pub lifetime: Option<f64>,
    /// Trait path sampled every `path_dt` from birth; the last sample is at division.
    pub path: Vec<f64>,
}

impl LineageNode {
    pub fn division_trait(&self) -> Option<f64> {
        self.lifetime.and(self.path.last().copied())
    }
}

/// Observed genealogy `U_n`; node ids are indices and parents precede their children.
#[derive(Debug, Clone, PartialEq)]
pub struct LineageTree {
    pub nodes: Vec<LineageNode>,
    pub growth_exponent: f64,
    pub path_dt: f64,
}

impl LineageTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn generations(&self) -> u32 {
        self.nodes.iter().map(|n| n.generation).max().unwrap_or(0)
    }

    /// `|U_n ∩ G_k|` for `k = 0..=n`.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.generations() as usize + 1];
        for node in &self.nodes {
            sizes[node.generation as usize] += 1;
        }
        sizes
    }

    /// Smallest and largest `2^{−ρk}·|U_n ∩ G_k|` over the simulated generations.
    pub fn regularity_range(&self) -> (f64, f64) {
        self.generation_sizes()
            .iter()
            .enumerate()
            .map(|(k, &size)| size as f64 * (-self.growth_exponent * k as f64).exp2())
            .fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    /// `(X_{u−}, X_u)` for every non-root node: parent and own trait at birth.
    pub fn transitions(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().filter_map(|n| n.parent.map(|p| (self.nodes[p].trait_at_birth, n.trait_at_birth))).collect()
    }

    pub fn traits(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.trait_at_birth).collect()
    }

    /// Checks that ids are indices and every parent is kept and precedes its child.
    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(BranchingError::Domain(format!("node {i} carries id {}", n.id)));
            }
            match n.parent {
                None if n.generation != 0 => {
                    return Err(BranchingError::Domain(format!("node {i} has no parent")));
                }
                Some(p) if p >= i || self.nodes[p].generation + 1 != n.generation => {
                    return Err(BranchingError::Domain(format!("node {i} has an invalid parent {p}")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// CSV with columns `id,parent_id,generation,birth_time,trait`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,parent_id,generation,birth_time,trait\n");
        for n in &self.nodes {
            let parent = n.parent.map_or(String::new(), |p| p.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", n.id, parent, n.generation, n.birth_time, n.trait_at_birth);
        }
        out
    }

    /// Parses the output of [`LineageTree::to_csv`]; path data is not carried.
    pub fn from_csv(text: &str, growth_exponent: f64) -> Result<Self> {
        let bad = |line: usize, what: &str| BranchingError::Domain(format!("line {}: {what}", line + 1));
        let mut nodes = Vec::new();
        for (line, row) in text.lines().enumerate().skip(1) {
            if row.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = row.split(',').collect();
            if cols.len() != 5 {
                return Err(bad(line, "expected 5 columns"));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(line, "bad number"));
            nodes.push(LineageNode {
                id: cols[0].trim().parse().map_err(|_| bad(line, "bad id"))?,
                parent: match cols[1].trim() {
                    "" => None,
                    p => Some(p.parse().map_err(|_| bad(line, "bad parent id"))?),
                },
                generation: cols[2].trim().parse().map_err(|_| bad(line, "bad generation"))?,
                birth_time: parse(cols[3])?,
                trait_at_birth: parse(cols[4])?,
                lifetime: None,
                path: Vec::new(),
            });
        }
        let tree = Self { nodes, growth_exponent, path_dt: 0.0 };
        tree.validate()?;
        Ok(tree)
    }
}
