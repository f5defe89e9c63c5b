use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::matrix::{Feature, NormalizedMatrix, FEATURE_COUNT};
use super::split::TrainTestSplit;
use super::ModelError;
use crate::ingest::LabelSet;
use crate::tsv;

/// Ridge added to the normal equations so rank-deficient designs stay solvable.
pub const RIDGE: f64 = 1e-8;
pub const INTERCEPT_NAME: &str = "__intercept__";
/// Language whose row represents an entity during training and evaluation.
pub const PREFERRED_LANGUAGE: &str = "en";

/// Linear scoring model over the normalized features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub weights: [f64; FEATURE_COUNT],
    pub intercept: f64,
}

impl Default for WeightVector {
    fn default() -> Self {
        WeightVector {
            weights: [0.0; FEATURE_COUNT],
            intercept: 0.0,
        }
    }
}

impl WeightVector {
    pub fn weight(&self, feature: Feature) -> f64 {
        self.weights[feature.index()]
    }

    /// `feature_name  weight` rows followed by the intercept.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for f in Feature::ALL {
            let _ = writeln!(out, "{}\t{}", f, tsv::fmt_real(self.weights[f.index()]));
        }
        let _ = writeln!(out, "{INTERCEPT_NAME}\t{}", tsv::fmt_real(self.intercept));
        out
    }
}

pub fn parse_weights(text: &str) -> Result<WeightVector, ModelError> {
    let mut weights = [f64::NAN; FEATURE_COUNT];
    let mut intercept = f64::NAN;
    for line in tsv::data_lines(text) {
        let err = |message: String| ModelError::Parse {
            line: line.number,
            message,
        };
        let [name, value] = line.fields.as_slice() else {
            return Err(err("expected 2 columns".into()));
        };
        let value = value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("bad weight {value:?}")))?;
        if *name == INTERCEPT_NAME {
            intercept = value;
        } else {
            weights[name.parse::<Feature>().map_err(err)?.index()] = value;
        }
    }
    if intercept.is_nan() || weights.iter().any(|w| w.is_nan()) {
        return Err(ModelError::Parse {
            line: 0,
            message: "weights file is missing entries".into(),
        });
    }
    Ok(WeightVector { weights, intercept })
}

/// `intercept + Σ w_k · f̂_k`, accumulated in feature order.
pub fn score(weights: &WeightVector, row: &[f64; FEATURE_COUNT]) -> f64 {
    let mut s = weights.intercept;
    for (w, f) in weights.weights.iter().zip(row) {
        s += w * f;
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Ordinary least squares with intercept.
///
/// Solves the centered normal equations `(XcᵀXc + λI) w = Xcᵀ yc` by
/// Cholesky factorization, then sets `intercept = ȳ − w·x̄`. The ridge term
/// does not touch the intercept.
pub fn least_squares(rows: &[Vec<f64>], targets: &[f64], ridge: f64) -> Result<LeastSquaresFit, ModelError> {
    let n = rows.len();
    if n == 0 || n != targets.len() {
        return Err(ModelError::Singular(format!(
            "{n} design rows for {} targets",
            targets.len()
        )));
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(ModelError::Singular("ragged design matrix".into()));
    }

    let inv_n = 1.0 / n as f64;
    let mut mean_x = vec![0.0; p];
    for r in rows {
        for (m, x) in mean_x.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean_x.iter_mut().for_each(|m| *m *= inv_n);
    let mean_y = targets.iter().sum::<f64>() * inv_n;

    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut centered = vec![0.0; p];
    for (r, y) in rows.iter().zip(targets) {
        for k in 0..p {
            centered[k] = r[k] - mean_x[k];
        }
        let yc = y - mean_y;
        for i in 0..p {
            rhs[i] += centered[i] * yc;
            for j in 0..=i {
                gram[i][j] += centered[i] * centered[j];
            }
        }
    }
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += ridge;
    }

    let coefficients = cholesky_solve(&mut gram, &rhs)?;
    let intercept = mean_y - coefficients.iter().zip(&mean_x).map(|(w, m)| w * m).sum::<f64>();
    if !intercept.is_finite() {
        return Err(ModelError::Singular("non-finite intercept".into()));
    }
    Ok(LeastSquaresFit {
        coefficients,
        intercept,
    })
}

/// Solve `A x = b` for symmetric positive definite `A`, using only its lower
/// triangle. `a` is overwritten by the factor.
fn cholesky_solve(a: &mut [Vec<f64>], b: &[f64]) -> Result<Vec<f64>, ModelError> {
    let p = b.len();
    for j in 0..p {
        let mut d = a[j][j];
        for x in &a[j][..j] {
            d -= x * x;
        }
        if d.is_nan() || d <= 0.0 || d.is_infinite() {
            return Err(ModelError::Singular(format!("pivot {j} is {d:e}")));
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..p {
            let mut s = a[i][j];
            for (x, y) in a[i][..j].iter().zip(&a[j][..j]) {
                s -= x * y;
            }
            a[i][j] = s / d;
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| a[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / a[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| a[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / a[i][i];
    }
    Ok(x)
}

/// Row index representing each entity: its preferred-language row when it
/// has one, else the row with the most non-zero features (ties go to the
/// smaller language code).
pub fn training_rows(matrix: &NormalizedMatrix) -> BTreeMap<&str, usize> {
    let mut chosen: BTreeMap<&str, usize> = BTreeMap::new();
    let rank = |i: usize| {
        let r = &matrix.rows[i];
        let preferred = r.language.as_str() == PREFERRED_LANGUAGE;
        let nonzero = r.values.iter().filter(|v| **v != 0.0).count();
        (preferred, nonzero, std::cmp::Reverse(&r.language))
    };
    for (i, row) in matrix.rows.iter().enumerate() {
        chosen
            .entry(row.kb_id.as_str())
            .and_modify(|best| {
                if rank(i) > rank(*best) {
                    *best = i;
                }
            })
            .or_insert(i);
    }
    chosen
}

/// Fit a model restricted to `features` on the entities `ids`; weights of
/// the other features are 0.
pub fn train_on(
    matrix: &NormalizedMatrix,
    labels: &LabelSet,
    ids: &[String],
    features: &[Feature],
) -> Result<WeightVector, ModelError> {
    let rows_of = training_rows(matrix);
    let mut design = Vec::with_capacity(ids.len());
    let mut targets = Vec::with_capacity(ids.len());
    for id in ids {
        let &i = rows_of
            .get(id.as_str())
            .ok_or_else(|| ModelError::MissingRow(id.clone()))?;
        let label = labels
            .get(id)
            .ok_or_else(|| ModelError::MissingLabel(id.clone()))?;
        let values = &matrix.rows[i].values;
        design.push(features.iter().map(|f| values[f.index()]).collect());
        targets.push(f64::from(label));
    }
    let fit = least_squares(&design, &targets, RIDGE)?;
    let mut weights = WeightVector {
        intercept: fit.intercept,
        ..WeightVector::default()
    };
    for (f, w) in features.iter().zip(fit.coefficients) {
        weights.weights[f.index()] = w;
    }
    Ok(weights)
}

/// Fit the all-features model on the training side of `split`.
pub fn train(matrix: &NormalizedMatrix, labels: &LabelSet, split: &TrainTestSplit) -> Result<WeightVector, ModelError> {
    train_on(matrix, labels, &split.train, &Feature::ALL)
}
