//! Plain-text dataset directory format.
//!
//! ```text
//! meta.json      {"num_nodes", "feature_dim", "class_count", "label_kind": "single"|"multi"}
//! edges.tsv      "<u>\t<v>" per line, zero-based, u < v
//! features.csv   N rows of D comma-separated reals
//! labels.txt     one class per line, or N rows of C comma-separated 0/1
//! mask.train     one node id per line (likewise mask.val, mask.test)
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_csr, GraphDataset, GraphError, Labels, Masks};
use crate::tensor::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub num_nodes: usize,
    pub feature_dim: usize,
    pub class_count: usize,
    pub label_kind: LabelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Single,
    Multi,
}

fn read(path: &Path) -> Result<String, GraphError> {
    if !path.exists() {
        return Err(GraphError::MissingFile(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(file: &str, line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse {
        file: file.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_usize(file: &str, line: usize, tok: &str) -> Result<usize, GraphError> {
    tok.trim()
        .parse()
        .map_err(|_| parse_err(file, line, format!("expected a node index, got {tok:?}")))
}

fn read_mask(dir: &Path, name: &'static str) -> Result<Vec<usize>, GraphError> {
    let file = format!("mask.{name}");
    let text = read(&dir.join(&file))?;
    lines(&text).map(|(ln, l)| parse_usize(&file, ln, l)).collect()
}

/// Reads and fully validates a dataset directory.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<GraphDataset, GraphError> {
    let dir = dir.as_ref();
    let meta_text = read(&dir.join("meta.json"))?;
    let meta: DatasetMeta =
        serde_json::from_str(&meta_text).map_err(|e| parse_err("meta.json", e.line(), e.to_string()))?;
    let n = meta.num_nodes;

    let mut edges = Vec::new();
    for (ln, l) in lines(&read(&dir.join("edges.tsv"))?) {
        let toks: Vec<&str> = l.split('\t').collect();
        match toks.len() {
            2 => {}
            3 => return Err(parse_err("edges.tsv", ln, "weighted edges are not supported")),
            _ => return Err(parse_err("edges.tsv", ln, "expected two tab-separated ids")),
        }
        let u = parse_usize("edges.tsv", ln, toks[0])?;
        let v = parse_usize("edges.tsv", ln, toks[1])?;
        if u >= v {
            return Err(parse_err(
                "edges.tsv",
                ln,
                format!("edge ({u}, {v}) not in canonical form u < v"),
            ));
        }
        if v >= n {
            return Err(GraphError::IndexOutOfRange { node: v, num_nodes: n });
        }
        edges.push((u, v));
    }
    let adjacency = build_csr(&edges, n)?;

    let mut feats = Vec::new();
    let mut feature_rows = 0;
    for (ln, l) in lines(&read(&dir.join("features.csv"))?) {
        let before = feats.len();
        for tok in l.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| parse_err("features.csv", ln, format!("bad real {tok:?}")))?;
            feats.push(v);
        }
        if feats.len() - before != meta.feature_dim {
            return Err(parse_err(
                "features.csv",
                ln,
                format!("row has {} values, expected {}", feats.len() - before, meta.feature_dim),
            ));
        }
        feature_rows += 1;
    }
    let features = DenseMatrix::from_vec(feature_rows, meta.feature_dim, feats)
        .map_err(|e| GraphError::InvalidParams(e.to_string()))?;

    let label_text = read(&dir.join("labels.txt"))?;
    let labels = match meta.label_kind {
        LabelKind::Single => Labels::Single(
            lines(&label_text)
                .map(|(ln, l)| {
                    l.trim()
                        .parse()
                        .map_err(|_| parse_err("labels.txt", ln, format!("bad class {l:?}")))
                })
                .collect::<Result<_, _>>()?,
        ),
        LabelKind::Multi => Labels::Multi(
            lines(&label_text)
                .map(|(ln, l)| {
                    l.split(',')
                        .map(|t| match t.trim() {
                            "0" => Ok(false),
                            "1" => Ok(true),
                            other => Err(parse_err("labels.txt", ln, format!("expected 0 or 1, got {other:?}"))),
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<_, _>>()?,
        ),
    };
    if features.rows() != labels.len() {
        return Err(GraphError::FeatureLabelMismatch {
            features: features.rows(),
            labels: labels.len(),
        });
    }

    let masks = Masks {
        train: read_mask(dir, "train")?,
        val: read_mask(dir, "val")?,
        test: read_mask(dir, "test")?,
    };
    GraphDataset::new(adjacency, features, labels, masks, meta.class_count)
}

fn write_file(path: PathBuf, body: &str) -> Result<(), GraphError> {
    let mut f = fs::File::create(&path).map_err(|source| GraphError::Io {
        path: path.clone(),
        source,
    })?;
    f.write_all(body.as_bytes())
        .map_err(|source| GraphError::Io { path, source })
}

/// Writes `dataset` into `dir` (created if needed). Reals are printed in
/// shortest round-trip form, so `load_dataset` reproduces the dataset exactly.
pub fn write_dataset(dataset: &GraphDataset, dir: impl AsRef<Path>) -> Result<(), GraphError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let meta = DatasetMeta {
        num_nodes: dataset.num_nodes(),
        feature_dim: dataset.feature_dim(),
        class_count: dataset.class_count(),
        label_kind: if dataset.labels().is_multi() {
            LabelKind::Multi
        } else {
            LabelKind::Single
        },
    };
    let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    write_file(dir.join("meta.json"), &(meta_json + "\n"))?;

    let mut edges = String::new();
    for (u, v) in dataset.adjacency().upper_edges() {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    write_file(dir.join("edges.tsv"), &edges)?;

    let mut feats = String::new();
    for i in 0..dataset.num_nodes() {
        let row: Vec<String> = dataset.features().row(i).iter().map(f64::to_string).collect();
        feats.push_str(&row.join(","));
        feats.push('\n');
    }
    write_file(dir.join("features.csv"), &feats)?;

    let mut labels = String::new();
    match dataset.labels() {
        Labels::Single(v) => {
            for c in v {
                labels.push_str(&format!("{c}\n"));
            }
        }
        Labels::Multi(rows) => {
            for r in rows {
                let row: Vec<&str> = r.iter().map(|&b| if b { "1" } else { "0" }).collect();
                labels.push_str(&row.join(","));
                labels.push('\n');
            }
        }
    }
    write_file(dir.join("labels.txt"), &labels)?;

    for (name, set) in [
        ("train", &dataset.masks().train),
        ("val", &dataset.masks().val),
        ("test", &dataset.masks().test),
    ] {
        let body: String = set.iter().map(|i| format!("{i}\n")).collect();
        write_file(dir.join(format!("mask.{name}")), &body)?;
    }
    Ok(())
}
