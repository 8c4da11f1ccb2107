use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::dense;
use crate::error::{Error, Result};
use crate::random;

/// Observations stored row-wise (`n x p`) with group indices `0..g`.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    x: DMatrix<f64>,
    y: Vec<usize>,
    groups: usize,
    /// Original label text of each group index.
    label_names: Vec<String>,
}

/// Where the labels of a CSV file live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelSource {
    ColumnName(String),
    ColumnIndex(usize),
    /// A separate file with one label per row.
    File(std::path::PathBuf),
}

impl LabeledDataset {
    /// Builds a dataset from group indices in `0..g`; every group must occur.
    pub fn new(x: DMatrix<f64>, y: Vec<usize>) -> Result<Self> {
        let groups = y.iter().max().map_or(0, |m| m + 1);
        let names = (1..=groups).map(|i| i.to_string()).collect();
        Self::with_names(x, y, names)
    }

    fn with_names(x: DMatrix<f64>, y: Vec<usize>, label_names: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "labels",
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if x.ncols() == 0 || x.nrows() == 0 {
            return Err(Error::Data("dataset has no observations or no variables".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        let groups = label_names.len();
        let mut counts = vec![0usize; groups];
        for &label in &y {
            if label >= groups {
                return Err(Error::Data(format!("label index {label} outside 0..{groups}")));
            }
            counts[label] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!("group {} has no observations", label_names[empty])));
        }
        Ok(Self { x, y, groups, label_names })
    }

    /// Builds a dataset from arbitrary label strings. Groups are ordered
    /// numerically when every label parses as a number, lexically otherwise.
    pub fn from_labels(x: DMatrix<f64>, labels: &[String]) -> Result<Self> {
        let numeric = labels.iter().all(|l| l.parse::<f64>().is_ok());
        let mut distinct: Vec<String> = labels.to_vec();
        if numeric {
            distinct.sort_by(|a, b| {
                let (fa, fb) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
                fa.total_cmp(&fb).then_with(|| a.cmp(b))
            });
        } else {
            distinct.sort();
        }
        distinct.dedup();
        let index: HashMap<&str, usize> = distinct.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let y = labels.iter().map(|l| index[l.as_str()]).collect();
        Self::with_names(x, y, distinct)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.groups];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    /// Rows `indices` in the given order. The number of groups is kept even
    /// if some group no longer occurs.
    pub fn select(&self, indices: &[usize]) -> Self {
        let x = self.x.select_rows(indices);
        let y = indices.iter().map(|&i| self.y[i]).collect();
        Self {
            x,
            y,
            groups: self.groups,
            label_names: self.label_names.clone(),
        }
    }

    /// Reads a CSV file. A header row is detected when one of its feature
    /// fields does not parse as a number; it is required for
    /// [`LabelSource::ColumnName`].
    pub fn read_csv(path: &Path, labels: &LabelSource) -> Result<Self> {
        let rows = read_records(path)?;
        if rows.is_empty() {
            return Err(Error::Data(format!("{} is empty", path.display())));
        }
        let width = rows[0].len();
        let label_col = match labels {
            LabelSource::ColumnName(name) => Some(
                rows[0]
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Data(format!("no column named '{name}' in {}", path.display())))?,
            ),
            LabelSource::ColumnIndex(i) if *i >= width => {
                return Err(Error::Data(format!("label column {i} outside the {width} columns")));
            }
            LabelSource::ColumnIndex(i) => Some(*i),
            LabelSource::File(_) => None,
        };
        let has_header = matches!(labels, LabelSource::ColumnName(_))
            || rows[0]
                .iter()
                .enumerate()
                .any(|(c, f)| Some(c) != label_col && f.parse::<f64>().is_err());
        let body = &rows[usize::from(has_header)..];
        let n = body.len();
        let p = width - usize::from(label_col.is_some());
        if n == 0 || p == 0 {
            return Err(Error::Data(format!("{} has no data rows or no feature columns", path.display())));
        }

        let mut x = DMatrix::zeros(n, p);
        let mut label_text = Vec::with_capacity(n);
        for (r, row) in body.iter().enumerate() {
            let mut c_out = 0;
            for (c, field) in row.iter().enumerate() {
                if Some(c) == label_col {
                    label_text.push(field.clone());
                    continue;
                }
                x[(r, c_out)] = field.parse::<f64>().map_err(|_| {
                    Error::Data(format!(
                        "row {}, column {}: '{field}' is not a number",
                        r + 1 + usize::from(has_header),
                        c + 1
                    ))
                })?;
                c_out += 1;
            }
        }

        if let LabelSource::File(label_path) = labels {
            let label_rows = read_records(label_path)?;
            if label_rows.iter().any(|r| r.len() != 1) {
                return Err(Error::Data(format!("{} must have exactly one column", label_path.display())));
            }
            let skip = match label_rows.len() {
                l if l == n => 0,
                l if l == n + 1 => 1,
                l => {
                    return Err(Error::DimensionMismatch {
                        context: "label file rows",
                        expected: n,
                        found: l,
                    })
                }
            };
            label_text = label_rows[skip..].iter().map(|r| r[0].clone()).collect();
        }
        Self::from_labels(x, &label_text)
    }
}

fn read_records(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

/// Gaussian groups `N(2 e_i, Sigma)` in dimension `g + q`, where `Sigma`
/// has unit diagonal, `0.1` off-diagonal entries among the first `g`
/// variables and identity on the remaining `q`. Returns `(train, test)`,
/// each sorted by group.
pub fn synth_ortner(
    g: usize,
    q: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if g < 2 || n_train == 0 || n_test == 0 {
        return Err(Error::InvalidConfig(format!(
            "synthetic data needs g >= 2 and non-empty samples, got g={g} n_train={n_train} n_test={n_test}"
        )));
    }
    let p = g + q;
    let sigma_g = DMatrix::from_fn(g, g, |i, j| if i == j { 1.0 } else { 0.1 });
    let l = dense::cholesky(&sigma_g)?;
    let mut rng = random::rng(seed);
    let mut draw = |per_group: usize| -> Result<LabeledDataset> {
        let n = per_group * g;
        let mut x = DMatrix::zeros(n, p);
        let mut y = Vec::with_capacity(n);
        for group in 0..g {
            for r in 0..per_group {
                let row = group * per_group + r;
                let z = DVector::from_fn(g, |_, _| StandardNormal.sample(&mut rng));
                let head = &l * z;
                for c in 0..g {
                    x[(row, c)] = head[c] + if c == group { 2.0 } else { 0.0 };
                }
                for c in g..p {
                    x[(row, c)] = StandardNormal.sample(&mut rng);
                }
                y.push(group);
            }
        }
        LabeledDataset::new(x, y)
    };
    let train = draw(n_train)?;
    let test = draw(n_test)?;
    Ok((train, test))
}
