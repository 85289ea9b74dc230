//! Partition agreement scores and annotation redundancy.
//!
//! Partitions are plain label slices; label values only matter through
//! equality, so any relabeling gives the same scores.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::matrix::ClusterAssignment;

/// Terms annotating more nodes than this are dropped by default.
pub const DEFAULT_MAX_TERM_NODES: usize = 100;
/// Terms annotating this many nodes or fewer are dropped by default.
pub const DEFAULT_MIN_TERM_NODES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("partitions have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("partition is empty")]
    EmptyPartition,
    #[error("pair counting needs at least two nodes")]
    TooFewNodes,
    #[error("cluster has no members")]
    EmptyCluster,
    #[error("vocabulary of {0} terms is too small; need at least 2")]
    VocabularyTooSmall(usize),
    #[error("node {node} carries term {term}, outside a vocabulary of {vocabulary}")]
    TermOutOfRange { node: usize, term: usize, vocabulary: usize },
    #[error("node {node} is outside the {n} annotated nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("no cluster member carries an annotation")]
    NoAnnotations,
}

struct Contingency {
    table: Vec<Vec<u64>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    n: u64,
}

impl Contingency {
    fn build(clusters: &[usize], classes: &[usize]) -> Result<Self, EvalError> {
        if clusters.len() != classes.len() {
            return Err(EvalError::LengthMismatch { left: clusters.len(), right: classes.len() });
        }
        if clusters.is_empty() {
            return Err(EvalError::EmptyPartition);
        }
        let dense = |labels: &[usize]| {
            let mut ids = HashMap::new();
            let mapped: Vec<usize> = labels
                .iter()
                .map(|l| {
                    let next = ids.len();
                    *ids.entry(*l).or_insert(next)
                })
                .collect();
            (mapped, ids.len())
        };
        let (a, ra) = dense(clusters);
        let (b, rb) = dense(classes);
        let mut table = vec![vec![0u64; rb]; ra];
        for (&i, &j) in a.iter().zip(&b) {
            table[i][j] += 1;
        }
        let rows = table.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..rb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { table, rows, cols, n: clusters.len() as u64 })
    }

    /// Both partitions group the nodes identically.
    fn same_grouping(&self) -> bool {
        self.rows.len() == self.cols.len()
            && self.table.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
            && (0..self.cols.len()).all(|j| self.table.iter().filter(|r| r[j] > 0).count() == 1)
    }

    fn cells(&self) -> impl Iterator<Item = u64> + '_ {
        self.table.iter().flatten().copied()
    }
}

fn pairs(count: u64) -> f64 {
    (count * count.saturating_sub(1) / 2) as f64
}

fn entropy(counts: &[u64], n: u64) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Fraction of nodes that fall in their cluster's majority class.
/// Not symmetric in its arguments.
pub fn purity(clusters: &[usize], classes: &[usize]) -> Result<f64, EvalError> {
    let t = Contingency::build(clusters, classes)?;
    let hits: u64 = t.table.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / t.n as f64)
}

/// Mutual information over the mean of the two entropies, in bits. Two
/// single-block partitions score 1.
pub fn nmi(clusters: &[usize], classes: &[usize]) -> Result<f64, EvalError> {
    let t = Contingency::build(clusters, classes)?;
    let n = t.n as f64;
    // Summed in sorted order so swapping the arguments gives the same bits.
    let mut terms = Vec::new();
    for (i, row) in t.table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                terms.push(c / n * (n * c / (t.rows[i] as f64 * t.cols[j] as f64)).log2());
            }
        }
    }
    terms.sort_by(f64::total_cmp);
    let mutual: f64 = terms.iter().sum();
    let mean_entropy = (entropy(&t.rows, t.n) + entropy(&t.cols, t.n)) / 2.0;
    if mean_entropy == 0.0 {
        return Ok(if t.same_grouping() { 1.0 } else { 0.0 });
    }
    Ok((mutual / mean_entropy).clamp(0.0, 1.0))
}

/// Share of node pairs on which the partitions agree.
pub fn rand_index(clusters: &[usize], classes: &[usize]) -> Result<f64, EvalError> {
    let t = Contingency::build(clusters, classes)?;
    if t.n < 2 {
        return Err(EvalError::TooFewNodes);
    }
    let together_both: f64 = t.cells().map(pairs).sum();
    let together_a: f64 = t.rows.iter().copied().map(pairs).sum();
    let together_b: f64 = t.cols.iter().copied().map(pairs).sum();
    let total = pairs(t.n);
    let apart_both = total - together_a - together_b + together_both;
    Ok((together_both + apart_both) / total)
}

/// Chance-corrected Rand index; negative when agreement is below chance.
pub fn adjusted_rand_index(clusters: &[usize], classes: &[usize]) -> Result<f64, EvalError> {
    let t = Contingency::build(clusters, classes)?;
    if t.n < 2 {
        return Err(EvalError::TooFewNodes);
    }
    let index: f64 = t.cells().map(pairs).sum();
    let sum_a: f64 = t.rows.iter().copied().map(pairs).sum();
    let sum_b: f64 = t.cols.iter().copied().map(pairs).sum();
    let expected = sum_a * sum_b / pairs(t.n);
    let max = (sum_a + sum_b) / 2.0;
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(if t.same_grouping() { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// Term annotations per node over a vocabulary of `vocabulary_size` ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    per_node_terms: Vec<Vec<usize>>,
    vocabulary_size: usize,
}

impl AnnotationSet {
    /// Duplicate terms on one node are collapsed.
    pub fn new(mut per_node_terms: Vec<Vec<usize>>, vocabulary_size: usize) -> Result<Self, EvalError> {
        for (node, terms) in per_node_terms.iter_mut().enumerate() {
            terms.sort_unstable();
            terms.dedup();
            if let Some(&term) = terms.iter().find(|&&t| t >= vocabulary_size) {
                return Err(EvalError::TermOutOfRange { node, term, vocabulary: vocabulary_size });
            }
        }
        Ok(Self { per_node_terms, vocabulary_size })
    }

    pub fn node_count(&self) -> usize {
        self.per_node_terms.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary_size
    }

    pub fn terms(&self, node: usize) -> &[usize] {
        &self.per_node_terms[node]
    }

    /// Keeps terms annotating more than `min_nodes` and at most `max_nodes`
    /// nodes, renumbering survivors in their original order.
    pub fn filter_by_frequency(&self, max_nodes: usize, min_nodes: usize) -> AnnotationSet {
        let mut usage = vec![0usize; self.vocabulary_size];
        for terms in &self.per_node_terms {
            for &t in terms {
                usage[t] += 1;
            }
        }
        let mut remap = vec![None; self.vocabulary_size];
        let mut kept = 0;
        for (t, &u) in usage.iter().enumerate() {
            if u > min_nodes && u <= max_nodes {
                remap[t] = Some(kept);
                kept += 1;
            }
        }
        let per_node_terms = self
            .per_node_terms
            .iter()
            .map(|terms| terms.iter().filter_map(|&t| remap[t]).collect())
            .collect();
        AnnotationSet { per_node_terms, vocabulary_size: kept }
    }
}

/// One minus the normalized entropy of the term occurrences among
/// `members`: 1 when every occurrence is the same term, 0 when occurrences
/// spread evenly over the whole vocabulary.
pub fn redundancy(members: &[usize], annotations: &AnnotationSet) -> Result<f64, EvalError> {
    if members.is_empty() {
        return Err(EvalError::EmptyCluster);
    }
    let vocabulary = annotations.vocabulary_size();
    if vocabulary < 2 {
        return Err(EvalError::VocabularyTooSmall(vocabulary));
    }
    let n = annotations.node_count();
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for &node in members {
        if node >= n {
            return Err(EvalError::NodeOutOfRange { node, n });
        }
        for &t in annotations.terms(node) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(EvalError::NoAnnotations);
    }
    let counts: Vec<u64> = counts.into_values().collect();
    let value = 1.0 - entropy(&counts, total) / (vocabulary as f64).log2();
    Ok(value.clamp(0.0, 1.0))
}

/// Unweighted mean redundancy over clusters that have annotated members.
pub fn average_redundancy(assignment: &ClusterAssignment, annotations: &AnnotationSet) -> Result<f64, EvalError> {
    if assignment.len() != annotations.node_count() {
        return Err(EvalError::LengthMismatch { left: assignment.len(), right: annotations.node_count() });
    }
    let mut scores = Vec::new();
    for members in assignment.members().iter().filter(|m| !m.is_empty()) {
        match redundancy(members, annotations) {
            Ok(r) => scores.push(r),
            Err(EvalError::NoAnnotations) => {}
            Err(e) => return Err(e),
        }
    }
    if scores.is_empty() {
        return Err(EvalError::NoAnnotations);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
