//! Versioned, human-readable model files.
//!
//! The format is line-oriented and whitespace-tokenized so it stays diffable
//! and easy to re-implement elsewhere. Floats are written in Rust's shortest
//! round-trip decimal form, so a loaded model predicts bit-identically to the
//! in-memory one it was saved from.
//!
//! ```text
//! olerank model v1
//! objective mcrank
//! learning_rate 0.1
//! max_label 2
//! num_features 20
//! groups 3
//! trees_per_group 50
//! group 0
//! tree 0 nodes 19
//! internal <feature> <threshold> <left> <right>
//! leaf <output>
//! ...
//! end
//! ```

use std::fs;
use std::path::Path;

use crate::booster::Ensemble;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::tree::{Node, RegressionTree};

const MAGIC: &str = "olerank model v1";

pub fn to_string(ens: &Ensemble) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("objective {}\n", ens.objective().id()));
    out.push_str(&format!("learning_rate {}\n", ens.learning_rate()));
    out.push_str(&format!("max_label {}\n", ens.max_label()));
    out.push_str(&format!("num_features {}\n", ens.num_features()));
    out.push_str(&format!("groups {}\n", ens.groups().len()));
    out.push_str(&format!("trees_per_group {}\n", ens.num_iterations()));
    for (gi, trees) in ens.groups().iter().enumerate() {
        out.push_str(&format!("group {}\n", gi));
        for (ti, tree) in trees.iter().enumerate() {
            out.push_str(&format!("tree {} nodes {}\n", ti, tree.nodes().len()));
            for node in tree.nodes() {
                match node {
                    Node::Internal { feature, threshold, left, right } => {
                        out.push_str(&format!("internal {} {} {} {}\n", feature, threshold, left, right));
                    }
                    Node::Leaf { output } => {
                        out.push_str(&format!("leaf {}\n", output));
                    }
                }
            }
        }
    }
    out.push_str("end\n");
    out
}

pub fn save(ens: &Ensemble, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_string(ens))?;
    Ok(())
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.inner
            .next()
            .ok_or_else(|| Error::Model(format!("unexpected end of file at line {}", self.lineno)))
    }

    fn expect_field<T: std::str::FromStr>(&mut self, name: &str) -> Result<T> {
        let line = self.next()?;
        let rest = line
            .strip_prefix(name)
            .map(str::trim)
            .ok_or_else(|| self.bad(&format!("expected `{name} ...`, got `{line}`")))?;
        rest.parse().map_err(|_| self.bad(&format!("cannot parse `{rest}` in `{name}` field")))
    }

    fn bad(&self, msg: &str) -> Error {
        Error::Model(format!("line {}: {}", self.lineno, msg))
    }
}

pub fn from_str(text: &str) -> Result<Ensemble> {
    let mut lines = Lines { inner: text.lines(), lineno: 0 };
    let magic = lines.next()?;
    if magic != MAGIC {
        return Err(Error::Model(format!("unsupported model header `{magic}`")));
    }
    let objective = Objective::from_id(&lines.expect_field::<String>("objective")?)
        .map_err(|e| Error::Model(e.to_string()))?;
    let learning_rate: f64 = lines.expect_field("learning_rate")?;
    let max_label: u32 = lines.expect_field("max_label")?;
    let num_features: usize = lines.expect_field("num_features")?;
    let num_groups: usize = lines.expect_field("groups")?;
    let trees_per_group: usize = lines.expect_field("trees_per_group")?;

    let mut groups = Vec::with_capacity(num_groups);
    for gi in 0..num_groups {
        let header = lines.next()?;
        if header != format!("group {gi}") {
            return Err(lines.bad(&format!("expected `group {gi}`, got `{header}`")));
        }
        let mut trees = Vec::with_capacity(trees_per_group);
        for ti in 0..trees_per_group {
            let header = lines.next()?;
            let mut toks = header.split_whitespace();
            let ok = toks.next() == Some("tree")
                && toks.next() == Some(&ti.to_string())
                && toks.next() == Some("nodes");
            if !ok {
                return Err(lines.bad(&format!("expected `tree {ti} nodes <n>`, got `{header}`")));
            }
            let num_nodes: usize = toks
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| lines.bad("missing node count"))?;
            let mut nodes = Vec::with_capacity(num_nodes);
            for _ in 0..num_nodes {
                let line = lines.next()?;
                let mut toks = line.split_whitespace();
                match toks.next() {
                    Some("internal") => {
                        let vals: Vec<&str> = toks.collect();
                        if vals.len() != 4 {
                            return Err(lines.bad("internal node needs 4 fields"));
                        }
                        let feature: u32 =
                            vals[0].parse().map_err(|_| lines.bad("bad feature index"))?;
                        let threshold: f64 =
                            vals[1].parse().map_err(|_| lines.bad("bad threshold"))?;
                        let left: u32 = vals[2].parse().map_err(|_| lines.bad("bad child id"))?;
                        let right: u32 = vals[3].parse().map_err(|_| lines.bad("bad child id"))?;
                        nodes.push(Node::Internal { feature, threshold, left, right });
                    }
                    Some("leaf") => {
                        let output: f64 = toks
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| lines.bad("bad leaf output"))?;
                        nodes.push(Node::Leaf { output });
                    }
                    other => {
                        return Err(lines.bad(&format!("unknown node kind {other:?}")));
                    }
                }
            }
            trees.push(RegressionTree::from_nodes(nodes)?);
        }
        groups.push(trees);
    }
    let footer = lines.next()?;
    if footer != "end" {
        return Err(lines.bad(&format!("expected `end`, got `{footer}`")));
    }
    Ensemble::from_parts(objective, learning_rate, max_label, num_features, groups)
}

pub fn load(path: impl AsRef<Path>) -> Result<Ensemble> {
    from_str(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::booster::{train, TrainConfig};
    use crate::dataset::synthetic_dataset;
    use crate::split::Criterion;

    #[test]
    fn round_trip_predicts_bit_identically() {
        let ds = synthetic_dataset(20, 6, 5, 2, 42);
        for (objective, criterion) in [
            (Objective::Mart, Criterion::Se),
            (Objective::McRank, Criterion::Ole),
            (Objective::LambdaMart, Criterion::Ole),
        ] {
            let cfg = TrainConfig { objective, criterion, trees: 4, leaves: 6, ..TrainConfig::default() };
            let ens = train(&ds, &cfg, None).unwrap();
            let text = to_string(&ens);
            let loaded = from_str(&text).unwrap();
            let probe = synthetic_dataset(100, 10, 5, 2, 7);
            assert_eq!(
                ens.predict_scores(&probe).unwrap(),
                loaded.predict_scores(&probe).unwrap(),
                "{objective:?}"
            );
            assert_eq!(text, to_string(&loaded));
        }
    }

    #[test]
    fn empty_model_round_trips() {
        let ds = synthetic_dataset(4, 3, 3, 2, 1);
        let cfg = TrainConfig { trees: 0, ..TrainConfig::default() };
        let ens = train(&ds, &cfg, None).unwrap();
        let loaded = from_str(&to_string(&ens)).unwrap();
        assert_eq!(loaded.num_iterations(), 0);
        assert_eq!(loaded.num_features(), 3);
    }

    #[test]
    fn rejects_unknown_header() {
        assert!(from_str("some other format v9\n").is_err());
    }

    #[test]
    fn rejects_truncated_file() {
        let ds = synthetic_dataset(4, 3, 3, 2, 2);
        let cfg = TrainConfig { trees: 1, leaves: 3, ..TrainConfig::default() };
        let ens = train(&ds, &cfg, None).unwrap();
        let text = to_string(&ens);
        let cut = &text[..text.len() / 2];
        assert!(from_str(cut).is_err());
    }
}
