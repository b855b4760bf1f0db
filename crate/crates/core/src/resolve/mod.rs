//! Author entity resolution.
//!
//! Distinct normalized names are grouped into blocks by
//! `first_initial|last`, scored pairwise inside each block, linked when the
//! final score reaches the threshold, and the connected components become
//! identity clusters.

mod name_parts;
mod scoring;
mod similarity;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use name_parts::{block_key, parse_name, NameParts};
pub use scoring::{score_pair, MatchContext, NameVariant, ScoringPolicy};
pub use similarity::{indel_distance, lcs_len, match_form, ratio, sort_tokens, token_sort_ratio};

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("cannot parse an empty name")]
    EmptyName,
    #[error("cannot pick a canonical name for an empty cluster")]
    EmptyCluster,
}

/// A set of name variants judged to be one researcher.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityCluster {
    pub cluster_id: String,
    pub canonical_name: String,
    /// Variant keys, sorted.
    pub members: Vec<String>,
}

/// Deterministic identifier for a member set.
pub fn cluster_id_for(members: &[String]) -> String {
    let mut sorted: Vec<&str> = members.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let digest = crate::util::sha256_hex(sorted.join("\n").as_bytes());
    format!("a{}", &digest[..15])
}

/// Prefer more name parts, then more characters, then the lexicographically
/// greatest spelling.
pub fn select_canonical<S: AsRef<str>>(names: &[S]) -> Result<String, ResolveError> {
    names
        .iter()
        .map(AsRef::as_ref)
        .max_by(|a, b| {
            let key = |s: &str| (s.split_whitespace().count(), s.chars().count());
            key(a).cmp(&key(b)).then_with(|| a.cmp(b))
        })
        .map(str::to_string)
        .ok_or(ResolveError::EmptyCluster)
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Group variants into blocks, keyed and ordered by [`block_key`].
pub fn blocks(variants: &[NameVariant]) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, v) in variants.iter().enumerate() {
        out.entry(block_key(&v.parts)).or_default().push(i);
    }
    out
}

/// Turn a list of groups of variant indices into sorted clusters.
pub fn clusters_from_groups(
    variants: &[NameVariant],
    groups: impl IntoIterator<Item = Vec<usize>>,
) -> Vec<IdentityCluster> {
    let mut clusters: Vec<IdentityCluster> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let mut members: Vec<String> = g.iter().map(|&i| variants[i].key.clone()).collect();
            members.sort_unstable();
            members.dedup();
            IdentityCluster {
                cluster_id: cluster_id_for(&members),
                canonical_name: select_canonical(&members).expect("non-empty group"),
                members,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        a.canonical_name
            .cmp(&b.canonical_name)
            .then_with(|| a.cluster_id.cmp(&b.cluster_id))
    });
    clusters
}

/// Cluster name variants. Duplicate keys in `variants` land in the same
/// cluster (they score 100) and appear once among its members. Output order and ids do not depend on input order.
pub fn resolve(
    variants: &[NameVariant],
    ctx: &MatchContext,
    policy: &ScoringPolicy,
) -> Vec<IdentityCluster> {
    let blocks = blocks(variants);
    let edges: Vec<(usize, usize)> = blocks
        .par_iter()
        .flat_map_iter(|(_, members)| {
            let mut local = Vec::new();
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    if score_pair(&variants[i], &variants[j], ctx, policy) >= policy.threshold {
                        local.push((i, j));
                    }
                }
            }
            local
        })
        .collect();

    let mut sets = DisjointSet::new(variants.len());
    for (i, j) in edges {
        sets.union(i, j);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..variants.len() {
        let root = sets.find(i);
        groups.entry(root).or_default().push(i);
    }
    clusters_from_groups(variants, groups.into_values())
}
