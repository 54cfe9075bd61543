use serde::{Deserialize, Serialize};

use super::linalg::{mat_vec, solve};
use super::BaselineError;
use crate::dataset::{Dataset, ScaleParams, N_FEATURES};

pub const DEFAULT_GAMMA: f64 = 100.0;
pub const DEFAULT_SIGMA_SQ: f64 = 8.0;
pub const GRID_GAMMA: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
pub const GRID_SIGMA_SQ: [f64; 3] = [1.0, 8.0, 64.0];

/// `exp(-‖a - b‖² / σ²)`.
pub fn rbf_kernel(a: &[f64; N_FEATURES], b: &[f64; N_FEATURES], sigma_sq: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-d2 / sigma_sq).exp()
}

/// Row-major Gram matrix of `xs`.
pub fn kernel_matrix(xs: &[[f64; N_FEATURES]], sigma_sq: f64) -> Vec<f64> {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf_kernel(&xs[i], &xs[j], sigma_sq);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Least-squares SVM regressor with an RBF kernel over min-max scaled
/// features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LssvmModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub sigma_sq: f64,
    pub gamma: f64,
    /// Scaled training features, one per `alpha` entry.
    pub support: Vec<[f64; N_FEATURES]>,
    pub scale: ScaleParams,
}

impl LssvmModel {
    pub fn predict(&self, x: &[f64; N_FEATURES]) -> f64 {
        lssvm_predict(self, x)
    }
}

/// The bordered dual system `[[0, 1ᵀ], [1, K + I/γ]]`, row-major, size n+1.
pub fn dual_system(support: &[[f64; N_FEATURES]], gamma: f64, sigma_sq: f64) -> Vec<f64> {
    let n = support.len();
    let m = n + 1;
    let k = kernel_matrix(support, sigma_sq);
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        a[i + 1] = 1.0;
        a[(i + 1) * m] = 1.0;
        for j in 0..n {
            a[(i + 1) * m + j + 1] = k[i * n + j];
        }
        a[(i + 1) * m + i + 1] += 1.0 / gamma;
    }
    a
}

pub fn lssvm_fit(train: &Dataset, gamma: f64, sigma_sq: f64) -> Result<LssvmModel, BaselineError> {
    if !(gamma > 0.0 && gamma.is_finite()) || !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(BaselineError::InvalidParameter(format!(
            "LS-SVM needs gamma > 0 and sigma^2 > 0, got {gamma} and {sigma_sq}"
        )));
    }
    let targets = train.targets().ok_or(BaselineError::MissingTargets)?;
    let scale = ScaleParams::fit(train)?;
    let support: Vec<[f64; N_FEATURES]> = train
        .samples()
        .iter()
        .map(|s| scale.apply_features(&s.features))
        .collect();
    let a = dual_system(&support, gamma, sigma_sq);
    let mut rhs = vec![0.0];
    rhs.extend_from_slice(&targets);
    let sol = solve(&a, support.len() + 1, &rhs)?;
    Ok(LssvmModel {
        bias: sol[0],
        alpha: sol[1..].to_vec(),
        sigma_sq,
        gamma,
        support,
        scale,
    })
}

/// `Σ αᵢ K(xᵢ, x) + b`, with `x` scaled by the training parameters.
pub fn lssvm_predict(m: &LssvmModel, x: &[f64; N_FEATURES]) -> f64 {
    let z = m.scale.apply_features(x);
    m.bias
        + m.alpha
            .iter()
            .zip(&m.support)
            .map(|(a, s)| a * rbf_kernel(s, &z, m.sigma_sq))
            .sum::<f64>()
}

/// Max-norm residual of the dual system at the fitted solution.
pub fn dual_residual(m: &LssvmModel, targets: &[f64]) -> f64 {
    let a = dual_system(&m.support, m.gamma, m.sigma_sq);
    let mut x = vec![m.bias];
    x.extend_from_slice(&m.alpha);
    let ax = mat_vec(&a, x.len(), &x);
    let mut rhs = vec![0.0];
    rhs.extend_from_slice(targets);
    ax.iter()
        .zip(&rhs)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub gamma: f64,
    pub sigma_sq: f64,
    /// Leave-one-out RMSE of the chosen pair.
    pub loo_rmse: f64,
    /// Every pair tried, in grid order, with its leave-one-out RMSE.
    pub scores: Vec<(f64, f64, f64)>,
}

/// Leave-one-out RMSE of an LS-SVM with the given hyperparameters, by
/// refitting once per held-out row.
pub fn loo_rmse(train: &Dataset, gamma: f64, sigma_sq: f64) -> Result<f64, BaselineError> {
    let n = train.len();
    if n < 2 {
        return Err(BaselineError::TooFewRows { needed: 2, got: n });
    }
    let mut sse = 0.0;
    for held in 0..n {
        let rest = Dataset::new(
            train
                .samples()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != held)
                .map(|(_, s)| s.clone())
                .collect(),
        );
        let m = lssvm_fit(&rest, gamma, sigma_sq)?;
        let s = &train.samples()[held];
        let e = lssvm_predict(&m, &s.features) - s.slump.ok_or(BaselineError::MissingTargets)?;
        sse += e * e;
    }
    Ok((sse / n as f64).sqrt())
}

/// Picks `(γ, σ²)` from the fixed grid by leave-one-out RMSE; the first pair
/// in grid order wins ties.
pub fn grid_search(train: &Dataset) -> Result<GridSearchResult, BaselineError> {
    let mut scores = Vec::new();
    for &gamma in &GRID_GAMMA {
        for &sigma_sq in &GRID_SIGMA_SQ {
            scores.push((gamma, sigma_sq, loo_rmse(train, gamma, sigma_sq)?));
        }
    }
    let best = scores
        .iter()
        .copied()
        .reduce(|a, b| if b.2 < a.2 { b } else { a })
        .expect("non-empty grid");
    Ok(GridSearchResult {
        gamma: best.0,
        sigma_sq: best.1,
        loo_rmse: best.2,
        scores,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::dataset::{builtin_dataset, split, Sample, SplitSpec};

    // Dense solve of the same bordered system in 50-digit mpmath.
    const BUILTIN_28_BIAS: f64 = 117.40831361524350022;
    const BUILTIN_28_ALPHA: [f64; 28] = [
        -36.677780828326291851,
        -435.36162303734741966,
        -338.93800458314765291,
        -1477.514491845369532,
        -6.5917779876878573418,
        483.35241835091894201,
        -263.64269997328164131,
        227.85943700294401049,
        713.33039432469057396,
        334.58560091842967833,
        84.562178359370165867,
        7.2488696643538762909,
        -220.76113793035659083,
        -117.40147069468107069,
        44.483174014731417633,
        150.62556151274959765,
        248.62606451726827196,
        523.90864550342014705,
        235.83101269162931751,
        -101.63206591061017956,
        12.536832197934516744,
        -271.17816313045972397,
        754.1700820937374631,
        -230.20764232567237959,
        -609.19691982890426482,
        -120.02817951135173702,
        5.6692466827924075566,
        402.34243975222595541,
    ];
    const BUILTIN_TEST_PREDICTIONS: [f64; 6] = [
        132.15462788541498115,
        118.83416140095004401,
        124.76806037319942711,
        144.71338110933152795,
        124.11604497156602172,
        122.64883004148558528,
    ];

    fn table_split() -> (Dataset, Dataset) {
        split(&builtin_dataset(), SplitSpec { n_train: 28 }).unwrap()
    }

    #[test]
    fn builtin_matches_dense_solve_oracle() {
        let (train, test) = table_split();
        let m = lssvm_fit(&train, DEFAULT_GAMMA, DEFAULT_SIGMA_SQ).unwrap();
        assert!((m.bias - BUILTIN_28_BIAS).abs() < 1e-6, "{}", m.bias);
        for (a, e) in m.alpha.iter().zip(BUILTIN_28_ALPHA) {
            assert!((a - e).abs() < 1e-6 * e.abs().max(1.0), "{a} vs {e}");
        }
        for (s, e) in test.samples().iter().zip(BUILTIN_TEST_PREDICTIONS) {
            assert!((lssvm_predict(&m, &s.features) - e).abs() < 1e-8);
        }
        assert!(dual_residual(&m, &train.targets().unwrap()) < 1e-8);
    }

    #[test]
    fn single_point_is_interpolated() {
        let s = Sample {
            features: [1.0; 8],
            slump: Some(42.0),
        };
        let m = lssvm_fit(&Dataset::new(vec![s.clone()]), 10.0, 1.0).unwrap();
        assert!((lssvm_predict(&m, &s.features) - 42.0).abs() < 1e-12);
    }

    #[test]
    fn training_residual_is_alpha_over_gamma() {
        let (train, _) = table_split();
        for gamma in [1.0, 100.0, 1e6] {
            let m = lssvm_fit(&train, gamma, DEFAULT_SIGMA_SQ).unwrap();
            for (s, a) in train.samples().iter().zip(&m.alpha) {
                let e = s.slump.unwrap() - lssvm_predict(&m, &s.features);
                assert!((e - a / gamma).abs() < 1e-6, "{e} vs {}", a / gamma);
            }
        }
    }

    #[test]
    fn kernel_limits_and_symmetry() {
        let (train, _) = table_split();
        let scale = ScaleParams::fit(&train).unwrap();
        let xs: Vec<_> = train
            .samples()
            .iter()
            .map(|s| scale.apply_features(&s.features))
            .collect();
        let k = kernel_matrix(&xs, DEFAULT_SIGMA_SQ);
        let n = xs.len();
        for i in 0..n {
            assert_eq!(k[i * n + i], 1.0);
            for j in 0..n {
                assert_eq!(k[i * n + j], k[j * n + i]);
                assert!(k[i * n + j] > 0.0 && k[i * n + j] <= 1.0);
            }
        }
        let wide = kernel_matrix(&xs, 1e300);
        assert!(wide.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn zero_alpha_predicts_bias() {
        let (train, _) = table_split();
        let mut m = lssvm_fit(&train, 10.0, 8.0).unwrap();
        m.alpha.iter_mut().for_each(|a| *a = 0.0);
        assert_eq!(lssvm_predict(&m, &train.samples()[3].features), m.bias);
    }

    #[test]
    fn invalid_hyperparameters() {
        let (train, _) = table_split();
        assert!(lssvm_fit(&train, 0.0, 8.0).is_err());
        assert!(lssvm_fit(&train, 10.0, -1.0).is_err());
    }

    #[test]
    fn grid_search_scores_every_pair() {
        let (train, _) = table_split();
        let g = grid_search(&train).unwrap();
        assert_eq!(g.scores.len(), 12);
        let min = g.scores.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
        assert_eq!(g.loo_rmse, min);
        assert!(GRID_GAMMA.contains(&g.gamma) && GRID_SIGMA_SQ.contains(&g.sigma_sq));
    }
}
