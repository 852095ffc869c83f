//! Feature vectors over indexable columns and query-projected similarity.
//!
//! Queries, indexes and configurations all embed into the same space with
//! one dimension per workload column. Similarity between two index-side
//! vectors is always taken relative to a query: both are first projected by
//! elementwise multiplication with the query vector, then compared by cosine.

use crate::workload::{Configuration, Instance};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(dims: usize) -> Self {
        FeatureVector(vec![0.0; dims])
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Elementwise product, used to project index vectors onto a query.
    pub fn project(&self, onto: &FeatureVector) -> FeatureVector {
        FeatureVector(
            self.0
                .iter()
                .zip(&onto.0)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

/// Column weight by key position: the leading key dominates, later keys
/// decay geometrically, included columns count least.
fn key_position_weight(position: usize) -> f64 {
    if position == 0 {
        1.0
    } else {
        0.5f64.powi(position as i32)
    }
}

const INCLUDED_WEIGHT: f64 = 0.25;

/// Query embedding: a referenced column weighs its table size scaled by how
/// many of the query's candidates contain it; unreferenced columns are 0.
pub fn featurize_query(inst: &Instance, q: u32) -> FeatureVector {
    let dims = inst.workload.columns.len();
    let query = &inst.workload.queries[q as usize];
    let mut v = vec![0.0; dims];
    for col_id in query.referenced_columns.keys() {
        let d = inst.resolved.column_handle[col_id.as_str()] as usize;
        let mut containing = 0usize;
        for &z in inst.candidates_of(q) {
            let idx = &inst.workload.indexes[z as usize];
            if idx.key_columns.iter().any(|c| c == col_id)
                || idx.included_columns.contains(col_id)
            {
                containing += 1;
            }
        }
        v[d] = inst.workload.columns[d].table_size_weight * (1.0 + containing as f64);
    }
    FeatureVector(v)
}

pub fn featurize_index(inst: &Instance, z: u32) -> FeatureVector {
    let dims = inst.workload.columns.len();
    let idx = &inst.workload.indexes[z as usize];
    let mut v = vec![0.0; dims];
    for (pos, col_id) in idx.key_columns.iter().enumerate() {
        let d = inst.resolved.column_handle[col_id.as_str()] as usize;
        v[d] = key_position_weight(pos);
    }
    for col_id in &idx.included_columns {
        let d = inst.resolved.column_handle[col_id.as_str()] as usize;
        v[d] = INCLUDED_WEIGHT;
    }
    FeatureVector(v)
}

/// Configuration embedding: per-dimension maximum over the members. The
/// empty configuration is the zero vector.
pub fn featurize_configuration(inst: &Instance, config: &Configuration) -> FeatureVector {
    let dims = inst.workload.columns.len();
    let mut v = vec![0.0f64; dims];
    for z in config.iter() {
        let zv = featurize_index(inst, z);
        for (acc, x) in v.iter_mut().zip(zv.0) {
            if x > *acc {
                *acc = x;
            }
        }
    }
    FeatureVector(v)
}

/// Cosine similarity of `a` and `b` after projecting both onto `query`.
/// Zero projections have no direction and compare as 0.
pub fn similarity(a: &FeatureVector, b: &FeatureVector, query: &FeatureVector) -> f64 {
    let pa = a.project(query);
    let pb = b.project(query);
    let na = pa.norm();
    let nb = pb.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    pa.dot(&pb) / (na * nb)
}

/// Precomputed vectors for one instance; built once per tuning run.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub query_vectors: Vec<FeatureVector>,
    pub index_vectors: Vec<FeatureVector>,
}

impl FeatureSet {
    pub fn new(inst: &Instance) -> Self {
        FeatureSet {
            query_vectors: (0..inst.query_count() as u32)
                .map(|q| featurize_query(inst, q))
                .collect(),
            index_vectors: (0..inst.index_count() as u32)
                .map(|z| featurize_index(inst, z))
                .collect(),
        }
    }

    pub fn configuration_vector(&self, config: &Configuration) -> FeatureVector {
        let dims = self
            .index_vectors
            .first()
            .map_or_else(|| self.query_vectors[0].0.len(), |v| v.0.len());
        let mut v = vec![0.0f64; dims];
        for z in config.iter() {
            for (acc, &x) in v.iter_mut().zip(&self.index_vectors[z as usize].0) {
                if x > *acc {
                    *acc = x;
                }
            }
        }
        FeatureVector(v)
    }

    /// Similarity of two indexes in the context of query q.
    pub fn index_similarity(&self, q: u32, z1: u32, z2: u32) -> f64 {
        similarity(
            &self.index_vectors[z1 as usize],
            &self.index_vectors[z2 as usize],
            &self.query_vectors[q as usize],
        )
    }

    /// Similarity of an index to a whole configuration for query q.
    pub fn config_similarity(&self, q: u32, z: u32, config: &Configuration) -> f64 {
        if config.is_empty() {
            return 0.0;
        }
        let cv = self.configuration_vector(config);
        similarity(
            &self.index_vectors[z as usize],
            &cv,
            &self.query_vectors[q as usize],
        )
    }
}
