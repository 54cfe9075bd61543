use serde::{Deserialize, Serialize};

use super::linalg::{solve_refined, DoubleDouble};
use super::BaselineError;
use crate::dataset::{Dataset, N_FEATURES};

/// Diagonal jitter added to the normal equations. The total-mass column is
/// almost a linear combination of the others on the slump table.
pub const RIDGE_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: [f64; N_FEATURES],
}

impl LinearModel {
    pub fn predict(&self, x: &[f64; N_FEATURES]) -> f64 {
        ols_predict(self, x)
    }
}

/// Least-squares fit of slump on an intercept and the eight features, by the
/// normal equations `(AᵀA + λI) β = Aᵀy` with `λ = RIDGE_JITTER`.
///
/// The Gram matrix of the slump table has a condition number near 1e13, so
/// it is accumulated in double-double and the f64 solution refined against
/// double-double residuals.
pub fn ols_fit(train: &Dataset) -> Result<LinearModel, BaselineError> {
    const P: usize = N_FEATURES + 1;
    if train.len() <= P {
        return Err(BaselineError::TooFewRows {
            needed: P + 1,
            got: train.len(),
        });
    }
    let targets = train.targets().ok_or(BaselineError::MissingTargets)?;
    let mut gram = vec![DoubleDouble::default(); P * P];
    let mut rhs = vec![DoubleDouble::default(); P];
    for (s, &y) in train.samples().iter().zip(&targets) {
        let mut row = [1.0; P];
        row[1..].copy_from_slice(&s.features);
        for i in 0..P {
            rhs[i] = rhs[i] + DoubleDouble::product(row[i], y);
            for j in 0..P {
                gram[i * P + j] = gram[i * P + j] + DoubleDouble::product(row[i], row[j]);
            }
        }
    }
    for i in 0..P {
        gram[i * P + i] = gram[i * P + i] + DoubleDouble::from_f64(RIDGE_JITTER);
    }
    let beta = solve_refined(&gram, P, &rhs)?;
    Ok(LinearModel {
        intercept: beta[0],
        coefficients: std::array::from_fn(|k| beta[k + 1]),
    })
}

pub fn ols_predict(m: &LinearModel, x: &[f64; N_FEATURES]) -> f64 {
    m.intercept
        + m.coefficients
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::dataset::{builtin_dataset, split, Sample, SplitSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Solution of the jittered normal equations on rows 1-28, computed with
    /// 60-digit mpmath arithmetic on the same binary inputs.
    pub(crate) const BUILTIN_28_BETA: [f64; 9] = [
        -2480.1324872276436538,
        0.16489241212784282483,
        0.026487956245045094258,
        -7.4970367953411999849,
        -12.931521625121467767,
        1.8921901164550768118,
        -155.22999581590726453,
        1.8786835174918655069,
        5.4564385941958902012,
    ];
    pub(crate) const BUILTIN_ROW29_PREDICTION: f64 = 130.00002600722670899;

    fn random_linear(rng: &mut ChaCha8Rng, rows: usize, noise: f64) -> Dataset {
        Dataset::new(
            (0..rows)
                .map(|_| {
                    let features: [f64; 8] = std::array::from_fn(|_| rng.gen_range(0.0..10.0));
                    let y = 50.0
                        + features
                            .iter()
                            .enumerate()
                            .map(|(k, v)| (k as f64 - 3.0) * v)
                            .sum::<f64>()
                        + rng.gen_range(-noise..=noise);
                    Sample {
                        features,
                        slump: Some(y),
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn exact_linear_data() {
        let samples = (0..12)
            .map(|i| {
                let mut features = [0.0; 8];
                features[0] = i as f64;
                Sample {
                    features,
                    slump: Some(2.0 * i as f64 + 1.0),
                }
            })
            .collect();
        // the seven zero columns are held at 0 by the jitter
        let m = ols_fit(&Dataset::new(samples)).unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-6, "{m:?}");
        assert!((m.coefficients[0] - 2.0).abs() < 1e-6);
        assert!(m.coefficients[1..].iter().all(|c| c.abs() < 1e-9));
    }

    #[test]
    fn builtin_matches_high_precision_oracle() {
        let (train, test) = split(&builtin_dataset(), SplitSpec { n_train: 28 }).unwrap();
        let m = ols_fit(&train).unwrap();
        assert!(
            (m.intercept - BUILTIN_28_BETA[0]).abs() < 1e-6,
            "{}",
            m.intercept
        );
        for k in 0..8 {
            assert!(
                (m.coefficients[k] - BUILTIN_28_BETA[k + 1]).abs() < 1e-6,
                "coef {k}"
            );
        }
        let p = ols_predict(&m, &test.samples()[0].features);
        assert!((p - BUILTIN_ROW29_PREDICTION).abs() < 1e-6, "{p}");
    }

    #[test]
    fn builtin_residuals_orthogonal_to_features() {
        let (train, _) = split(&builtin_dataset(), SplitSpec { n_train: 28 }).unwrap();
        let m = ols_fit(&train).unwrap();
        let residuals: Vec<f64> = train
            .samples()
            .iter()
            .map(|s| s.slump.unwrap() - ols_predict(&m, &s.features))
            .collect();
        assert!(residuals.iter().sum::<f64>().abs() < 1e-4);
        for k in 0..8 {
            let dot: f64 = residuals
                .iter()
                .zip(train.samples())
                .map(|(r, s)| r * s.features[k])
                .sum();
            assert!(dot.abs() < 1e-4, "feature {k}: {dot}");
        }
    }

    #[test]
    fn prediction_examples() {
        let zero = LinearModel {
            intercept: 0.0,
            coefficients: [0.0; 8],
        };
        assert_eq!(ols_predict(&zero, &[3.0; 8]), 0.0);
        let constant = LinearModel {
            intercept: 7.5,
            coefficients: [0.0; 8],
        };
        assert_eq!(ols_predict(&constant, &[100.0; 8]), 7.5);
    }

    #[test]
    fn duplicated_rows_and_refit_on_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ds = random_linear(&mut rng, 30, 1.0);
        let m = ols_fit(&ds).unwrap();

        let doubled: Vec<Sample> = ds.samples().iter().chain(ds.samples()).cloned().collect();
        let m2 = ols_fit(&Dataset::new(doubled)).unwrap();
        // doubling the rows halves the jitter's relative weight, a shift of
        // order λ·(AᵀA)⁻¹β ≈ 4e-7 on this data
        assert!(
            (m.intercept - m2.intercept).abs() < 1e-5,
            "{} {}",
            m.intercept,
            m2.intercept
        );
        for k in 0..8 {
            assert!((m.coefficients[k] - m2.coefficients[k]).abs() < 1e-6);
        }

        let own: Vec<Sample> = ds
            .samples()
            .iter()
            .map(|s| Sample {
                features: s.features,
                slump: Some(ols_predict(&m, &s.features)),
            })
            .collect();
        let m3 = ols_fit(&Dataset::new(own)).unwrap();
        assert!((m.intercept - m3.intercept).abs() < 1e-5);
        for k in 0..8 {
            assert!((m.coefficients[k] - m3.coefficients[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn too_few_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ds = random_linear(&mut rng, 9, 0.0);
        assert!(matches!(
            ols_fit(&ds),
            Err(BaselineError::TooFewRows { .. })
        ));
    }
}
