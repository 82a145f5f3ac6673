use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::DesignMatrix;
use super::tdist::t_sf;
use super::RegressError;

/// Designs whose column-equilibrated condition number exceeds this are
/// rejected as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Regressor names, in coefficient order (intercept excluded).
    pub names: Vec<String>,
    pub intercept: bool,
    /// Coefficients, intercept first when present.
    pub beta: Vec<f64>,
    /// Standard errors, aligned with `beta`.
    pub std_errors: Vec<f64>,
    /// Two-sided p-values of the non-intercept coefficients.
    pub p_values: Vec<f64>,
    pub r2: f64,
    pub rss: f64,
    pub tss: f64,
    pub dof: usize,
    pub n_obs: usize,
    pub condition: f64,
}

impl FitResult {
    /// Non-intercept coefficients.
    pub fn slopes(&self) -> &[f64] {
        &self.beta[usize::from(self.intercept)..]
    }

    pub fn intercept_value(&self) -> Option<f64> {
        self.intercept.then(|| self.beta[0])
    }

    /// Fitted values on a design with the same columns.
    pub fn predict(&self, d: &DesignMatrix) -> Vec<f64> {
        assert_eq!(d.columns.len(), self.names.len(), "column count mismatch");
        let b0 = self.intercept_value().unwrap_or(0.0);
        let mut out = vec![b0; d.n_rows()];
        for (col, b) in d.columns.iter().zip(self.slopes()) {
            for (o, x) in out.iter_mut().zip(col) {
                *o += b * x;
            }
        }
        out
    }

    pub fn all_significant(&self, alpha: f64) -> bool {
        self.p_values.iter().all(|&p| p <= alpha)
    }
}

fn centered_ss(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

fn condition_of(r: &DMatrix<f64>) -> f64 {
    let sv = r.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Least-squares fit through a QR factorization of the column-equilibrated
/// design. `r2 = 1 - RSS/TSS` with TSS centered on the mean of `y`; when TSS
/// is zero `r2` is reported as 0.
pub fn ols(d: &DesignMatrix) -> Result<FitResult, RegressError> {
    let n = d.n_rows();
    let p = d.n_params();
    if n <= p {
        return Err(RegressError::Underdetermined { rows: n, cols: p });
    }
    let names_all: Vec<String> = d
        .intercept
        .then(|| "(intercept)".to_string())
        .into_iter()
        .chain(d.names.iter().cloned())
        .collect();
    let tss = centered_ss(&d.y);
    let y = DVector::from_column_slice(&d.y);

    if p == 0 {
        let rss = y.norm_squared();
        return Ok(FitResult {
            names: Vec::new(),
            intercept: false,
            beta: Vec::new(),
            std_errors: Vec::new(),
            p_values: Vec::new(),
            r2: r2_of(rss, tss),
            rss,
            tss,
            dof: n,
            n_obs: n,
            condition: 1.0,
        });
    }

    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut col = 0;
    if d.intercept {
        x.column_mut(0).fill(1.0);
        col = 1;
    }
    for c in &d.columns {
        x.column_mut(col).copy_from_slice(c);
        col += 1;
    }
    let scales: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    for (j, &s) in scales.iter().enumerate() {
        if s == 0.0 || !s.is_finite() {
            return Err(RegressError::Singular {
                column: j,
                name: names_all[j].clone(),
                condition: f64::INFINITY,
            });
        }
        x.column_mut(j).scale_mut(1.0 / s);
    }

    let qr = x.qr();
    let r = qr.r();
    let condition = condition_of(&r);
    if !(condition <= CONDITION_LIMIT) {
        let column = (1..=p)
            .find(|&k| !(condition_of(&r.view((0, 0), (k, k)).into_owned()) <= CONDITION_LIMIT))
            .unwrap_or(p)
            - 1;
        return Err(RegressError::Singular {
            column,
            name: names_all[column].clone(),
            condition,
        });
    }

    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty_head = qty.rows(0, p).into_owned();
    let scaled_beta = r
        .solve_upper_triangular(&qty_head)
        .expect("R is nonsingular after the condition check");
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .expect("R is nonsingular after the condition check");

    let beta: Vec<f64> = (0..p).map(|j| scaled_beta[j] / scales[j]).collect();
    let mut fitted = DVector::zeros(n);
    let x_orig = {
        let mut m = DMatrix::<f64>::zeros(n, p);
        let mut col = 0;
        if d.intercept {
            m.column_mut(0).fill(1.0);
            col = 1;
        }
        for c in &d.columns {
            m.column_mut(col).copy_from_slice(c);
            col += 1;
        }
        m
    };
    x_orig.mul_to(&DVector::from_column_slice(&beta), &mut fitted);
    // the intercept-only fit is the mean, whose RSS is the TSS exactly
    let rss = if d.columns.is_empty() { tss } else { (&y - &fitted).norm_squared() };
    let dof = n - p;
    let sigma2 = rss / dof as f64;
    let std_errors: Vec<f64> = (0..p)
        .map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt() / scales[j])
        .collect();
    let first_slope = usize::from(d.intercept);
    let p_values = (first_slope..p)
        .map(|j| {
            let (b, se) = (beta[j], std_errors[j]);
            if se > 0.0 {
                t_sf(b / se, dof as f64)
            } else if b != 0.0 {
                0.0
            } else {
                1.0
            }
        })
        .collect();
    Ok(FitResult {
        names: d.names.clone(),
        intercept: d.intercept,
        beta,
        std_errors,
        p_values,
        r2: r2_of(rss, tss),
        rss,
        tss,
        dof,
        n_obs: n,
        condition,
    })
}

fn r2_of(rss: f64, tss: f64) -> f64 {
    if tss > 0.0 {
        1.0 - rss / tss
    } else {
        0.0
    }
}
