//! Stacked-model file format: a self-describing text document with seeds,
//! estimator counts, the decision threshold, each tree as a flat node array
//! and a 64-bit FNV-1a checksum trailer. Thresholds and probabilities are
//! written in shortest round-trip decimal, so a save/load cycle reproduces
//! predictions bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::forest::tree::{Tree, TreeNode};
use crate::forest::{ForestModel, StackedModel};

const FORMAT_HEADER: &str = "keyhunt-model 1";

pub fn save_model(path: &Path, model: &StackedModel) -> Result<()> {
    std::fs::write(path, render_model(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<StackedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::InvalidData => Error::CorruptModel("not utf-8".into()),
        _ => Error::Io(e),
    })?;
    parse_model(&text)
}

pub fn render_model(model: &StackedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER}");
    let _ = writeln!(out, "decision_threshold {}", model.decision_threshold);
    let _ = writeln!(out, "seed {}", model.seed);
    let _ = writeln!(out, "holdout_fraction {}", model.holdout_fraction);
    let _ = writeln!(out, "holdout_count {}", model.holdout_indices.len());
    for chunk in model.holdout_indices.chunks(512) {
        let _ = write!(out, "holdout_indices");
        for index in chunk {
            let _ = write!(out, " {index}");
        }
        out.push('\n');
    }
    render_forest(&mut out, "high_precision", &model.high_precision);
    render_forest(&mut out, "high_recall", &model.high_recall);
    render_forest(&mut out, "meta", &model.meta);
    let _ = writeln!(out, "checksum {:016x}", fnv1a64(out.as_bytes()));
    out
}

fn render_forest(out: &mut String, name: &str, forest: &ForestModel) {
    let _ = writeln!(out, "forest {name}");
    let _ = writeln!(out, "estimators {}", forest.n_estimators);
    let _ = writeln!(out, "features {}", forest.n_features);
    let _ = writeln!(out, "seed {}", forest.rng_seed);
    let _ = writeln!(out, "rows {}", forest.training_rows);
    let _ = writeln!(out, "positives {}", forest.training_positives);
    for (index, tree) in forest.trees.iter().enumerate() {
        let _ = writeln!(out, "tree {index} nodes {}", tree.nodes.len());
        for node in &tree.nodes {
            let _ = writeln!(
                out,
                "n {} {} {} {} {}",
                node.feature_index, node.threshold, node.left, node.right, node.leaf_probability
            );
        }
    }
}

pub fn parse_model(text: &str) -> Result<StackedModel> {
    let body_end = verify_checksum(text)?;
    let mut lines = text[..body_end].lines();
    let header = lines.next().ok_or_else(|| corrupt("empty file"))?;
    if header != FORMAT_HEADER {
        return Err(corrupt(format!("unsupported header {header:?}")));
    }
    let decision_threshold = field(lines.next(), "decision_threshold")?
        .parse::<f64>()
        .map_err(bad_number)?;
    let seed = field(lines.next(), "seed")?
        .parse::<u64>()
        .map_err(bad_number)?;
    let holdout_fraction = field(lines.next(), "holdout_fraction")?
        .parse::<f64>()
        .map_err(bad_number)?;
    let holdout_count = field(lines.next(), "holdout_count")?
        .parse::<usize>()
        .map_err(bad_number)?;
    let mut holdout_indices: Vec<u32> = Vec::with_capacity(holdout_count);
    let mut pending: Option<&str> = None;
    for line in lines.by_ref() {
        if let Some(rest) = line.strip_prefix("holdout_indices") {
            for token in rest.split_ascii_whitespace() {
                holdout_indices.push(token.parse().map_err(bad_number)?);
            }
        } else {
            pending = Some(line);
            break;
        }
    }
    if holdout_indices.len() != holdout_count {
        return Err(corrupt(format!(
            "expected {holdout_count} holdout indices, found {}",
            holdout_indices.len()
        )));
    }

    let mut lines = pending.into_iter().chain(lines);
    let high_precision = parse_forest(&mut lines, "high_precision")?;
    let high_recall = parse_forest(&mut lines, "high_recall")?;
    let meta = parse_forest(&mut lines, "meta")?;
    Ok(StackedModel {
        high_precision,
        high_recall,
        meta,
        decision_threshold,
        seed,
        holdout_fraction,
        holdout_indices,
    })
}

fn parse_forest<'a>(lines: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<ForestModel> {
    let header = lines
        .next()
        .ok_or_else(|| corrupt(format!("missing forest {name}")))?;
    if header != format!("forest {name}") {
        return Err(corrupt(format!("expected forest {name}, found {header:?}")));
    }
    let n_estimators = field(lines.next(), "estimators")?
        .parse::<usize>()
        .map_err(bad_number)?;
    let n_features = field(lines.next(), "features")?
        .parse::<usize>()
        .map_err(bad_number)?;
    let rng_seed = field(lines.next(), "seed")?
        .parse::<u64>()
        .map_err(bad_number)?;
    let training_rows = field(lines.next(), "rows")?
        .parse::<usize>()
        .map_err(bad_number)?;
    let training_positives = field(lines.next(), "positives")?
        .parse::<usize>()
        .map_err(bad_number)?;
    let mut trees = Vec::with_capacity(n_estimators);
    for index in 0..n_estimators {
        let header = lines
            .next()
            .ok_or_else(|| corrupt(format!("missing tree {index}")))?;
        let mut parts = header.split_ascii_whitespace();
        if parts.next() != Some("tree") {
            return Err(corrupt(format!("expected tree header, found {header:?}")));
        }
        let tree_index: usize = parts
            .next()
            .ok_or_else(|| corrupt("short tree header"))?
            .parse()
            .map_err(bad_number)?;
        if tree_index != index || parts.next() != Some("nodes") {
            return Err(corrupt(format!("bad tree header {header:?}")));
        }
        let node_count: usize = parts
            .next()
            .ok_or_else(|| corrupt("short tree header"))?
            .parse()
            .map_err(bad_number)?;
        let mut nodes = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            let line = lines.next().ok_or_else(|| corrupt("missing node line"))?;
            let mut parts = line.split_ascii_whitespace();
            if parts.next() != Some("n") {
                return Err(corrupt(format!("bad node line {line:?}")));
            }
            let mut next = || {
                parts
                    .next()
                    .ok_or_else(|| corrupt(format!("short node line {line:?}")))
            };
            let node = TreeNode {
                feature_index: next()?.parse().map_err(bad_number)?,
                threshold: next()?.parse().map_err(bad_number)?,
                left: next()?.parse().map_err(bad_number)?,
                right: next()?.parse().map_err(bad_number)?,
                leaf_probability: next()?.parse().map_err(bad_number)?,
            };
            if !node.is_leaf()
                && (node.left as usize >= node_count || node.right as usize >= node_count)
            {
                return Err(corrupt(format!("node child out of range in {line:?}")));
            }
            nodes.push(node);
        }
        if nodes.is_empty() {
            return Err(corrupt("tree with no nodes"));
        }
        trees.push(Tree { nodes });
    }
    Ok(ForestModel {
        trees,
        n_estimators,
        n_features,
        rng_seed,
        training_rows,
        training_positives,
    })
}

/// Validate the trailer and return the byte offset where it starts.
fn verify_checksum(text: &str) -> Result<usize> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let line_start = body.rfind('\n').map(|i| i + 1).unwrap_or(0);
    let trailer = &body[line_start..];
    let recorded = trailer
        .strip_prefix("checksum ")
        .ok_or_else(|| corrupt("missing checksum trailer"))?;
    let recorded =
        u64::from_str_radix(recorded.trim(), 16).map_err(|_| corrupt("unreadable checksum"))?;
    let computed = fnv1a64(&text.as_bytes()[..line_start]);
    if recorded != computed {
        return Err(corrupt(format!(
            "checksum mismatch: recorded {recorded:016x}, computed {computed:016x}"
        )));
    }
    Ok(line_start)
}

fn field<'a>(line: Option<&'a str>, name: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| corrupt(format!("missing field {name}")))?;
    line.strip_prefix(name)
        .map(str::trim)
        .ok_or_else(|| corrupt(format!("expected field {name}, found {line:?}")))
}

fn corrupt(reason: impl Into<String>) -> Error {
    Error::CorruptModel(reason.into())
}

fn bad_number<E: std::fmt::Display>(e: E) -> Error {
    corrupt(format!("bad number: {e}"))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
