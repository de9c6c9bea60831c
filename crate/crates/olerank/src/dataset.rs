//! Query-grouped ranking datasets in the LETOR/SVMLight rank format.
//!
//! A dataset is a list of query groups; each group holds the documents of one
//! query as dense feature vectors with integer relevance labels. Documents are
//! additionally addressable by a global index (queries in order, documents in
//! input order within a query), which is how score and gradient vectors are
//! laid out everywhere else in the crate.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One query-document pair: a dense feature vector and a relevance grade.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub features: Vec<f64>,
    pub label: u32,
}

/// All documents of one query, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub query_id: u64,
    pub docs: Vec<Document>,
}

/// An immutable query-grouped ranking dataset.
///
/// Invariants established at construction: every group is non-empty, query ids
/// are unique, all feature vectors share `num_features` entries, and every
/// label is `<= max_label`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    queries: Vec<QueryGroup>,
    num_features: usize,
    max_label: u32,
    /// Global document index of the first document of each query, plus the
    /// total count as a final sentinel.
    offsets: Vec<usize>,
}

/// Summary counts in the shape of the usual dataset tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetStats {
    pub num_queries: usize,
    pub num_docs: usize,
    /// Total documents divided by total queries, rounded to nearest.
    pub docs_per_query: usize,
    pub num_features: usize,
    pub max_label: u32,
}

impl RankingDataset {
    /// Builds a dataset from query groups, validating the type invariants.
    pub fn new(queries: Vec<QueryGroup>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::Invalid("dataset has no queries".into()));
        }
        let num_features = queries
            .iter()
            .flat_map(|q| q.docs.iter())
            .map(|d| d.features.len())
            .max()
            .unwrap_or(0);
        let mut seen = HashMap::new();
        let mut max_label = 0u32;
        for (i, q) in queries.iter().enumerate() {
            if q.docs.is_empty() {
                return Err(Error::Invalid(format!("query {} has no documents", q.query_id)));
            }
            if let Some(prev) = seen.insert(q.query_id, i) {
                return Err(Error::Invalid(format!(
                    "duplicate query id {} (groups {} and {})",
                    q.query_id, prev, i
                )));
            }
            for d in &q.docs {
                if d.features.len() != num_features {
                    return Err(Error::Invalid(format!(
                        "query {}: feature vector length {} != {}",
                        q.query_id,
                        d.features.len(),
                        num_features
                    )));
                }
                max_label = max_label.max(d.label);
            }
        }
        let mut offsets = Vec::with_capacity(queries.len() + 1);
        let mut total = 0usize;
        for q in &queries {
            offsets.push(total);
            total += q.docs.len();
        }
        offsets.push(total);
        Ok(Self { queries, num_features, max_label, offsets })
    }

    pub fn queries(&self) -> &[QueryGroup] {
        &self.queries
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn num_docs(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Largest relevance grade present in the data (the K in labels 0..=K).
    pub fn max_label(&self) -> u32 {
        self.max_label
    }

    /// Global document index range of query `q`.
    pub fn doc_range(&self, q: usize) -> std::ops::Range<usize> {
        self.offsets[q]..self.offsets[q + 1]
    }

    /// Feature value of the document with global index `doc`.
    pub fn feature(&self, doc: usize, feat: usize) -> f64 {
        let (q, local) = self.locate(doc);
        self.queries[q].docs[local].features[feat]
    }

    pub fn document(&self, doc: usize) -> &Document {
        let (q, local) = self.locate(doc);
        &self.queries[q].docs[local]
    }

    /// Labels of all documents in global index order.
    pub fn labels(&self) -> Vec<u32> {
        self.queries
            .iter()
            .flat_map(|q| q.docs.iter().map(|d| d.label))
            .collect()
    }

    fn locate(&self, doc: usize) -> (usize, usize) {
        let q = match self.offsets.binary_search(&doc) {
            Ok(i) if i + 1 < self.offsets.len() => i,
            Ok(i) => i - 1,
            Err(i) => i - 1,
        };
        (q, doc - self.offsets[q])
    }

    /// Parses the LETOR/SVMLight rank text format.
    ///
    /// Each non-empty line is `<label> qid:<id> <idx>:<val> ...` with an
    /// optional `#` comment suffix. Sparse features are densified with 0.0
    /// fill; the dense width is one plus the largest feature index seen
    /// anywhere in the input (file indices are conventionally 1-based, so
    /// slot 0 usually stays zero). Lines sharing a qid are merged into one
    /// group in first-appearance order, preserving input order of documents.
    pub fn parse_letor(input: impl Read) -> Result<Self> {
        type SparseRow = (u64, u32, Vec<(usize, f64)>);
        let reader = BufReader::new(input);
        let mut rows: Vec<SparseRow> = Vec::new();
        let mut max_index = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let content = match line.find('#') {
                Some(pos) => &line[..pos],
                None => &line[..],
            };
            if content.trim().is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let label_tok = tokens.next().unwrap();
            let label: u32 = label_tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("label `{label_tok}` is not a non-negative integer"),
            })?;
            let qid_tok = tokens.next().ok_or_else(|| Error::Parse {
                line: lineno,
                message: "missing qid field".into(),
            })?;
            let qid: u64 = qid_tok
                .strip_prefix("qid:")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("expected qid:<id>, got `{qid_tok}`"),
                })?;
            let mut feats = Vec::new();
            for tok in tokens {
                let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("expected <index>:<value>, got `{tok}`"),
                })?;
                let idx: usize = idx.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("feature index `{idx}` is not an integer"),
                })?;
                let val: f64 = val.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("feature value `{val}` is not a number"),
                })?;
                max_index = max_index.max(idx);
                feats.push((idx, val));
            }
            rows.push((qid, label, feats));
        }
        if rows.is_empty() {
            return Err(Error::Invalid("empty input: no documents".into()));
        }
        let num_features = max_index + 1;
        let mut order: Vec<u64> = Vec::new();
        let mut groups: HashMap<u64, Vec<Document>> = HashMap::new();
        for (qid, label, feats) in rows {
            let mut dense = vec![0.0; num_features];
            for (idx, val) in feats {
                dense[idx] = val;
            }
            groups
                .entry(qid)
                .or_insert_with(|| {
                    order.push(qid);
                    Vec::new()
                })
                .push(Document { features: dense, label });
        }
        let queries = order
            .into_iter()
            .map(|qid| QueryGroup { query_id: qid, docs: groups.remove(&qid).unwrap() })
            .collect();
        Self::new(queries)
    }

    pub fn parse_letor_str(input: &str) -> Result<Self> {
        Self::parse_letor(input.as_bytes())
    }

    /// Serializes back to LETOR text. Feature slots from 1 upward are written
    /// densely (slot 0 only when non-zero) so that a re-parse reconstructs an
    /// identical dataset, including the dense width.
    pub fn to_letor(&self) -> String {
        let mut out = String::new();
        for q in &self.queries {
            for d in &q.docs {
                out.push_str(&format!("{} qid:{}", d.label, q.query_id));
                for (i, v) in d.features.iter().enumerate() {
                    if i == 0 && *v == 0.0 {
                        continue;
                    }
                    out.push_str(&format!(" {}:{}", i, v));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn stats(&self) -> DatasetStats {
        let num_queries = self.num_queries();
        let num_docs = self.num_docs();
        DatasetStats {
            num_queries,
            num_docs,
            docs_per_query: ((num_docs as f64) / (num_queries as f64)).round() as usize,
            num_features: self.num_features,
            max_label: self.max_label,
        }
    }

    /// Deterministic seeded split by query. `fractions` must sum to 1 (within
    /// 1e-9); each part receives a contiguous slice of a seeded shuffle of the
    /// query list, preserving original query order within each part.
    pub fn split_by_query(&self, fractions: &[f64], seed: u64) -> Result<Vec<RankingDataset>> {
        if fractions.is_empty() {
            return Err(Error::Config("split needs at least one fraction".into()));
        }
        if fractions.iter().any(|f| *f < 0.0) {
            return Err(Error::Config("split fractions must be non-negative".into()));
        }
        let total: f64 = fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split fractions sum to {total}, expected 1")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut indices: Vec<usize> = (0..self.queries.len()).collect();
        indices.shuffle(&mut rng);
        let n = indices.len();
        let mut parts = Vec::with_capacity(fractions.len());
        let mut start = 0usize;
        for (i, f) in fractions.iter().enumerate() {
            let end = if i + 1 == fractions.len() {
                n
            } else {
                (start + (f * n as f64).round() as usize).min(n)
            };
            let mut chosen: Vec<usize> = indices[start..end].to_vec();
            chosen.sort_unstable();
            if chosen.is_empty() {
                return Err(Error::Config(format!(
                    "split fraction {f} selects no queries (dataset has {n})"
                )));
            }
            let queries: Vec<QueryGroup> =
                chosen.iter().map(|&i| self.queries[i].clone()).collect();
            parts.push(RankingDataset::new(queries)?);
            start = end;
        }
        Ok(parts)
    }
}

/// Generates a synthetic ranking dataset with learnable structure: features
/// are uniform in [0,1] and labels quantize a noisy hidden linear score into
/// the grade range 0..=max_label.
pub fn synthetic_dataset(
    num_queries: usize,
    docs_per_query: usize,
    num_features: usize,
    max_label: u32,
    seed: u64,
) -> RankingDataset {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..num_features).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut queries = Vec::with_capacity(num_queries);
    for qi in 0..num_queries {
        let mut docs = Vec::with_capacity(docs_per_query);
        for _ in 0..docs_per_query {
            let features: Vec<f64> = (0..num_features).map(|_| rng.gen_range(0.0..1.0)).collect();
            let raw: f64 = features.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>()
                + rng.gen_range(-0.3..0.3);
            let squashed = 1.0 / (1.0 + (-2.0 * raw).exp());
            let label = ((squashed * (max_label as f64 + 1.0)) as u32).min(max_label);
            docs.push(Document { features, label });
        }
        queries.push(QueryGroup { query_id: qi as u64 + 1, docs });
    }
    RankingDataset::new(queries).expect("synthetic dataset is well-formed")
}
