use super::{Feature, RegressError};

/// Stacked response and regressor columns. Rows are source-major: all target
/// columns of the first chosen source, then the next source, and so on.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    pub y: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub intercept: bool,
    /// `(source, target)` of every row.
    pub row_index: Vec<(usize, usize)>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    /// Number of coefficients, intercept included.
    pub fn n_params(&self) -> usize {
        self.columns.len() + usize::from(self.intercept)
    }

    /// Keeps only the listed regressor columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> DesignMatrix {
        DesignMatrix {
            y: self.y.clone(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            intercept: self.intercept,
            row_index: self.row_index.clone(),
        }
    }

    /// Keeps only the rows whose source is listed in `sources`.
    pub fn restrict_sources(&self, sources: &[usize]) -> DesignMatrix {
        let mut keep = std::collections::HashSet::with_capacity(sources.len());
        keep.extend(sources.iter().copied());
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&r| keep.contains(&self.row_index[r].0))
            .collect();
        DesignMatrix {
            y: rows.iter().map(|&r| self.y[r]).collect(),
            columns: self
                .columns
                .iter()
                .map(|col| rows.iter().map(|&r| col[r]).collect())
                .collect(),
            names: self.names.clone(),
            intercept: self.intercept,
            row_index: rows.iter().map(|&r| self.row_index[r]).collect(),
        }
    }
}

/// Builds the design for the chosen real sources. The hole source row never
/// enters; the hole target column is dropped when `drop_holes`.
pub fn assemble_design(
    target: &Feature,
    regressors: &[&Feature],
    sources: &[usize],
    intercept: bool,
    drop_holes: bool,
) -> Result<DesignMatrix, RegressError> {
    let shape = target.table.shape();
    for r in regressors {
        if r.table.shape() != shape {
            return Err(RegressError::ShapeMismatch {
                name: r.name.clone(),
                expected: shape,
                found: r.table.shape(),
            });
        }
    }
    let real = target.real_sources();
    let sources: Vec<usize> = sources.iter().copied().filter(|&s| s != real).collect();
    if sources.is_empty() {
        return Err(RegressError::EmptySubset);
    }
    if let Some(&bad) = sources.iter().find(|&&s| s > real) {
        return Err(RegressError::SourceOutOfRange { index: bad, count: real });
    }
    let width = if drop_holes { shape.1.saturating_sub(1) } else { shape.1 };
    let n = sources.len() * width;
    let row_index: Vec<(usize, usize)> = sources
        .iter()
        .flat_map(|&s| (0..width).map(move |t| (s, t)))
        .collect();
    let stack = |f: &Feature| -> Result<Vec<f64>, RegressError> {
        let mut out = vec![0.0; n];
        for (k, &s) in sources.iter().enumerate() {
            for (t, v) in f.table.row_iter(s) {
                if t < width {
                    out[k * width + t] = v;
                }
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite(f.name.clone()));
        }
        Ok(out)
    };
    Ok(DesignMatrix {
        y: stack(target)?,
        columns: regressors.iter().map(|r| stack(r)).collect::<Result<_, _>>()?,
        names: regressors.iter().map(|r| r.name.clone()).collect(),
        intercept,
        row_index,
    })
}
