use std::path::Path;

use numlab_deep_linear::DMatrix;

use crate::CliError;

/// Largest `|XX^T/N - I|_F` accepted as whitened.
pub const WHITENING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedDataset {
    /// `n x N`, one sample per column.
    pub inputs: DMatrix<f64>,
    /// `m x N`.
    pub targets: DMatrix<f64>,
    /// `(1/N) sum_i y_i x_i^T`.
    pub r: DMatrix<f64>,
}

/// Reads a CSV with header `x_0..x_{n-1},y_0..y_{m-1}` (one sample per row),
/// checks that the inputs are whitened and returns the reduced target.
pub fn load_whitened_dataset(path: &Path) -> Result<WhitenedDataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_whitened_dataset(file, path)
}

pub fn parse_whitened_dataset<R: std::io::Read>(reader: R, origin: &Path) -> Result<WhitenedDataset, CliError> {
    let parse_err = |reason: String| CliError::Parse {
        path: origin.to_path_buf(),
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    let mut x_cols = Vec::new();
    let mut y_cols = Vec::new();
    for (col, name) in header.iter().enumerate() {
        let (prefix, index) = name
            .split_once('_')
            .ok_or_else(|| parse_err(format!("column `{name}` is neither x_<i> nor y_<i>")))?;
        let index: usize = index
            .parse()
            .map_err(|_| parse_err(format!("column `{name}` has a non-numeric index")))?;
        match prefix {
            "x" => x_cols.push((index, col)),
            "y" => y_cols.push((index, col)),
            _ => return Err(parse_err(format!("column `{name}` is neither x_<i> nor y_<i>"))),
        }
    }
    for (cols, prefix) in [(&mut x_cols, "x"), (&mut y_cols, "y")] {
        cols.sort();
        if cols.is_empty() || cols.iter().enumerate().any(|(i, &(idx, _))| idx != i) {
            return Err(parse_err(format!("columns {prefix}_0..{prefix}_k must all be present")));
        }
    }

    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<Vec<f64>> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let field = |col: usize| -> Result<f64, CliError> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("row {}: `{raw}` is not a finite number", row + 2)))
        };
        xs.push(x_cols.iter().map(|&(_, c)| field(c)).collect::<Result<_, _>>()?);
        ys.push(y_cols.iter().map(|&(_, c)| field(c)).collect::<Result<_, _>>()?);
    }
    if xs.is_empty() {
        return Err(parse_err("no samples".into()));
    }

    let count = xs.len();
    let inputs = DMatrix::from_fn(x_cols.len(), count, |i, j| xs[j][i]);
    let targets = DMatrix::from_fn(y_cols.len(), count, |i, j| ys[j][i]);
    let n = count as f64;
    let second_moment = &inputs * inputs.transpose() / n;
    let deviation = (second_moment - DMatrix::identity(x_cols.len(), x_cols.len())).norm();
    if !(deviation <= WHITENING_TOL) {
        return Err(CliError::NotWhitened { deviation });
    }
    let r = &targets * inputs.transpose() / n;
    Ok(WhitenedDataset { inputs, targets, r })
}
