//! Sparse binary bag-of-words text format.
//!
//! One example per line: `<label> <index>:1 <index>:1 …`, labels `0` or
//! `1`, word indices 1-based and strictly increasing. Blank lines are skipped.

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::LabeledDataset;
use crate::numerics::Matrix;

struct Parsed {
    labels: Vec<usize>,
    rows: Vec<Vec<usize>>,
}

fn parse(text: &str, vocab: usize) -> Result<Parsed> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = match tokens.next() {
            Some("0") => 0,
            Some("1") => 1,
            Some(other) => {
                return Err(Error::Format(format!(
                    "line {lineno}: label `{other}` is not 0 or 1"
                )))
            }
            None => unreachable!("line is non-empty"),
        };
        let mut words = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| {
                Error::Format(format!("line {lineno}: token `{tok}` is not index:value"))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::Format(format!("line {lineno}: bad index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| Error::Format(format!("line {lineno}: bad value `{val}`")))?;
            if idx == 0 || idx > vocab {
                return Err(Error::Format(format!(
                    "line {lineno}: index {idx} outside 1..={vocab}"
                )));
            }
            if idx <= prev {
                return Err(Error::Format(format!(
                    "line {lineno}: index {idx} does not increase after {prev}"
                )));
            }
            prev = idx;
            if val != 0.0 {
                words.push(idx - 1);
            }
        }
        labels.push(label);
        rows.push(words);
    }
    Ok(Parsed { labels, rows })
}

/// The `k` most frequent columns by document count, ties to the lower
/// index, returned in index order.
fn rank_by_frequency(freq: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..freq.len()).collect();
    order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    order.truncate(k.min(freq.len()));
    order.sort_unstable();
    order
}

fn top_columns(rows: &[Vec<usize>], vocab: usize, k: usize) -> Vec<usize> {
    let mut freq = vec![0usize; vocab];
    for r in rows {
        for &w in r {
            freq[w] += 1;
        }
    }
    rank_by_frequency(&freq, k)
}

/// Columns a top-`k` vocabulary cap keeps for binary features `x`. Lets a
/// cap chosen on training documents be applied to a separate test file.
pub fn frequent_columns(x: &Matrix, k: usize) -> Vec<usize> {
    let mut freq = vec![0usize; x.cols()];
    for row in x.iter_rows() {
        for (f, &v) in freq.iter_mut().zip(row) {
            *f += usize::from(v != 0.0);
        }
    }
    rank_by_frequency(&freq, k)
}

/// Parses bag-of-words text into binary features of width `vocab`, or of
/// width `top_k` when a vocabulary cap is given.
pub fn parse_bow(text: &str, vocab: usize, top_k: Option<usize>) -> Result<LabeledDataset> {
    let parsed = parse(text, vocab)?;
    let columns: Vec<Option<usize>> = match top_k {
        None => (0..vocab).map(Some).collect(),
        Some(k) => {
            let keep = top_columns(&parsed.rows, vocab, k);
            let mut map = vec![None; vocab];
            for (new, &old) in keep.iter().enumerate() {
                map[old] = Some(new);
            }
            map
        }
    };
    let width = columns.iter().flatten().count();
    let mut x = Matrix::zeros(parsed.rows.len(), width);
    for (i, words) in parsed.rows.iter().enumerate() {
        for &w in words {
            if let Some(c) = columns[w] {
                x.set(i, c, 1.0);
            }
        }
    }
    LabeledDataset::new(x, parsed.labels, 2)
}

pub fn load_bow(path: impl AsRef<Path>, vocab: usize, top_k: Option<usize>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    parse_bow(&text, vocab, top_k)
}

/// Writes binary features back to the text format.
pub fn format_bow(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    for (row, label) in ds.features.iter_rows().zip(&ds.labels) {
        out.push_str(&label.to_string());
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                out.push_str(&format!(" {}:1", j + 1));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line_trace() {
        let ds = parse_bow("1 3:1 7:1\n", 8, None).unwrap();
        assert_eq!(ds.features.row(0), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(ds.labels, vec![1]);
    }

    #[test]
    fn empty_feature_list() {
        let ds = parse_bow("0\n\n1 2:1\n", 4, None).unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.features.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let msg = parse_bow("1 2:1\n0 5:1 3:1\n", 8, None).unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
        let msg = parse_bow("1 9:1\n", 8, None).unwrap_err().to_string();
        assert!(msg.contains("line 1"), "{msg}");
        assert!(parse_bow("2 1:1\n", 8, None).is_err());
        assert!(parse_bow("1 0:1\n", 8, None).is_err());
        assert!(parse_bow("1 3\n", 8, None).is_err());
    }

    #[test]
    fn vocabulary_cap_keeps_frequent_words() {
        let text = "1 1:1 4:1\n0 4:1 5:1\n1 2:1 4:1 5:1\n";
        let ds = parse_bow(text, 5, Some(2)).unwrap();
        // Word 4 appears three times, word 5 twice.
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.features.row(0), &[1.0, 0.0]);
        assert_eq!(ds.features.row(1), &[1.0, 1.0]);

        let full = parse_bow(text, 5, None).unwrap();
        assert_eq!(frequent_columns(&full.features, 2), vec![3, 4]);
        assert_eq!(full.features.select_columns(&[3, 4]), ds.features);
    }

    #[test]
    fn text_round_trip() {
        let text = "1 3:1 7:1\n0\n0 1:1 8:1\n";
        let ds = parse_bow(text, 8, None).unwrap();
        assert_eq!(format_bow(&ds), text);
    }
}
