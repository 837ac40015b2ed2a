//! JSON layouts for Gaussians and mixtures.
//!
//! The wire format is `{"weights":[...],"means":[[...]],"covariances":[[[...]]]}`;
//! a diagonal covariance may be given as a flat vector and is expanded on
//! load. Serialization always emits full matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Gaussian, GaussianMixture};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovarianceJson {
    Full(Vec<Vec<f64>>),
    Diagonal(Vec<f64>),
}

impl CovarianceJson {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            CovarianceJson::Full(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::input("covariance rows must form a square matrix"));
                }
                Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
            }
            CovarianceJson::Diagonal(diag) => {
                Ok(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
            }
        }
    }

    fn from_matrix(m: &DMatrix<f64>) -> Self {
        CovarianceJson::Full(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianJson {
    pub mean: Vec<f64>,
    pub covariance: CovarianceJson,
}

impl GaussianJson {
    pub fn build(&self) -> Result<Gaussian> {
        Gaussian::new(DVector::from_row_slice(&self.mean), self.covariance.to_matrix()?)
    }
}

impl From<&Gaussian> for GaussianJson {
    fn from(g: &Gaussian) -> Self {
        GaussianJson {
            mean: g.mean().iter().copied().collect(),
            covariance: CovarianceJson::from_matrix(g.covariance()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureJson {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<CovarianceJson>,
}

impl MixtureJson {
    pub fn build(&self) -> Result<GaussianMixture> {
        if self.means.len() != self.weights.len() || self.covariances.len() != self.weights.len() {
            return Err(Error::input(
                "weights, means and covariances must have the same length",
            ));
        }
        let components = self
            .means
            .iter()
            .zip(&self.covariances)
            .map(|(mean, cov)| Gaussian::new(DVector::from_row_slice(mean), cov.to_matrix()?))
            .collect::<Result<Vec<_>>>()?;
        GaussianMixture::new(components, self.weights.clone())
    }
}

impl From<&GaussianMixture> for MixtureJson {
    fn from(gmm: &GaussianMixture) -> Self {
        MixtureJson {
            weights: gmm.weights().to_vec(),
            means: gmm
                .components()
                .iter()
                .map(|c| c.mean().iter().copied().collect())
                .collect(),
            covariances: gmm
                .components()
                .iter()
                .map(|c| CovarianceJson::from_matrix(c.covariance()))
                .collect(),
        }
    }
}

impl Serialize for GaussianMixture {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MixtureJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GaussianMixture {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = MixtureJson::deserialize(deserializer)?;
        json.build().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_covariance_expands_on_load() {
        let text = r#"{
            "weights": [0.5, 0.5],
            "means": [[0.0, 0.0], [1.0, -1.0]],
            "covariances": [[1.0, 2.0], [[1.0, 0.1], [0.1, 1.0]]]
        }"#;
        let gmm: GaussianMixture = serde_json::from_str(text).unwrap();
        assert_eq!(gmm.num_components(), 2);
        assert_eq!(gmm.components()[0].covariance()[(1, 1)], 2.0);
        assert_eq!(gmm.components()[0].covariance()[(0, 1)], 0.0);
        assert_eq!(gmm.components()[1].covariance()[(0, 1)], 0.1);
    }

    #[test]
    fn round_trip_preserves_parameters() {
        let text = r#"{
            "weights": [0.25, 0.75],
            "means": [[0.5], [-0.5]],
            "covariances": [[2.0], [0.5]]
        }"#;
        let gmm: GaussianMixture = serde_json::from_str(text).unwrap();
        let back = serde_json::to_string(&gmm).unwrap();
        let again: GaussianMixture = serde_json::from_str(&back).unwrap();
        assert_eq!(again.weights(), gmm.weights());
        assert_eq!(
            again.components()[0].covariance(),
            gmm.components()[0].covariance()
        );
    }

    #[test]
    fn invalid_mixture_fails_to_deserialize() {
        let text = r#"{
            "weights": [0.5, 0.4],
            "means": [[0.0], [1.0]],
            "covariances": [[1.0], [1.0]]
        }"#;
        assert!(serde_json::from_str::<GaussianMixture>(text).is_err());
    }
}
