use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::data::FeatureTensor;
use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// `[k, features]`, unit rows sorted by eigenvalue.
    pub components: Array2<f64>,
    /// Every covariance eigenvalue, descending.
    pub eigenvalues: Vec<f64>,
    /// `[rows, k]` projected points.
    pub projected: Array2<f64>,
}

impl Pca {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Variance captured by each kept component.
    pub fn explained_variance(&self) -> &[f64] {
        &self.eigenvalues[..self.k()]
    }

    pub fn explained_ratio(&self) -> Vec<f64> {
        let total = self.total_variance();
        self.explained_variance().iter().map(|v| v / total).collect()
    }

    /// Maps projected points back to feature space.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.projected.dot(&self.components) + &self.mean
    }
}

/// `[instance, time, feature]` to `[instance * time, feature]`.
pub fn flatten_rows(features: &FeatureTensor) -> Array2<f64> {
    let (n, t, f) = features.data.dim();
    features
        .data
        .mapv(|v| v as f64)
        .into_shape_with_order((n * t, f))
        .expect("standard layout")
}

/// Principal components of row data. The covariance uses the population
/// normalization, so the mean squared reconstruction error equals the sum
/// of the discarded eigenvalues. Each component is signed so that its
/// largest-magnitude loading is positive.
pub fn pca_project(data: ArrayView2<f64>, k: usize) -> Result<Pca> {
    let (rows, f) = data.dim();
    if rows < 2 || f == 0 {
        return Err(Error::data("PCA needs at least two rows and one feature"));
    }
    if k == 0 {
        return Err(Error::config("number of components must be positive"));
    }
    let mean = data.mean_axis(Axis(0)).expect("non-empty");
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / rows as f64;

    let eig = SymmetricEigen::new(DMatrix::from_fn(f, f, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let top = eigenvalues[0];
    let rank = eigenvalues.iter().filter(|&&v| v > RANK_TOL * top).count();
    if top <= 0.0 || k > rank {
        return Err(Error::data(format!(
            "requested {k} components but the data has rank {rank}"
        )));
    }

    let mut components = Array2::<f64>::zeros((k, f));
    for (c, &i) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(i);
        let lead = v
            .iter()
            .copied()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for j in 0..f {
            components[[c, j]] = sign * v[j];
        }
    }
    let projected = centered.dot(&components.t());
    Ok(Pca {
        mean,
        components,
        eigenvalues,
        projected,
    })
}
