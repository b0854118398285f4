//! Gaussian-process regression over encoded hyperparameter sets.
//!
//! Zero-mean prior, unit-variance Matérn ν=5/2 kernel with unit length scale.
//! Targets are standardized before conditioning. The jitter is a nugget on the
//! joint covariance: `cov(a, b) = k(a, b) + jitter·[a = b]`, so conditioning
//! interpolates observed points exactly.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub const DEFAULT_JITTER: f64 = 1e-8;
pub const MAX_JITTER: f64 = 1e-4;

/// Coordinates in the unit box, one per search-space dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodedPoint(Vec<f64>);

impl EncodedPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Range {
                variable: "encoded coordinate".into(),
                value: *c,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Matérn 5/2 as a function of Euclidean distance.
pub fn matern52_r(r: f64) -> f64 {
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

pub fn matern52(a: &EncodedPoint, b: &EncodedPoint) -> Result<f64> {
    check_len("matern52 points", a.dim(), b.dim())?;
    Ok(matern52_r(distance(&a.0, &b.0)))
}

/// Kernel matrix of a point set without jitter.
pub fn gram(points: &[EncodedPoint]) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| matern52_r(distance(&points[i].0, &points[j].0)))
}

fn covariance(a: &EncodedPoint, b: &EncodedPoint, jitter: f64) -> f64 {
    let k = matern52_r(distance(&a.0, &b.0));
    if a.0 == b.0 {
        k + jitter
    } else {
        k
    }
}

/// Factors `K + jitter·I`, escalating the jitter tenfold up to [`MAX_JITTER`].
fn factor(k: &DMatrix<f64>, jitter: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut j = jitter;
    loop {
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += j;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, j));
        }
        if j >= MAX_JITTER {
            return Err(Error::SingularKernel { jitter: j });
        }
        j = (j * 10.0).min(MAX_JITTER);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug)]
pub struct GpModel {
    inputs: Vec<EncodedPoint>,
    targets: DVector<f64>,
    target_mean: f64,
    target_scale: f64,
    jitter: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

impl GpModel {
    pub fn fit(observations: &[(EncodedPoint, f64)], jitter: f64) -> Result<Self> {
        let Some((first, _)) = observations.first() else {
            return Err(Error::Config("a GP needs at least one observation".into()));
        };
        if !(jitter > 0.0) {
            return Err(Error::Config("jitter must be positive".into()));
        }
        for (i, (p, y)) in observations.iter().enumerate() {
            check_len("GP observation", first.dim(), p.dim())?;
            if !y.is_finite() {
                return Err(Error::Config(format!("GP target {y} is not finite")));
            }
            if observations[..i].iter().any(|(q, _)| q.0 == p.0) {
                return Err(Error::DuplicatePoint(p.0.clone()));
            }
        }
        let n = observations.len() as f64;
        let target_mean = observations.iter().map(|(_, y)| y).sum::<f64>() / n;
        let var = observations.iter().map(|(_, y)| (y - target_mean).powi(2)).sum::<f64>() / n;
        let target_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let targets = DVector::from_iterator(
            observations.len(),
            observations.iter().map(|(_, y)| (y - target_mean) / target_scale),
        );
        let inputs: Vec<EncodedPoint> = observations.iter().map(|(p, _)| p.clone()).collect();
        let (chol, jitter) = factor(&gram(&inputs), jitter)?;
        let alpha = chol.solve(&targets);
        Ok(Self {
            inputs,
            targets,
            target_mean,
            target_scale,
            jitter,
            chol,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Jitter actually used after escalation.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_scale(&self) -> f64 {
        self.target_scale
    }

    pub fn standardized_targets(&self) -> &[f64] {
        self.targets.as_slice()
    }

    /// `L·Lᵀ = Σ₁₁ + jitter·I`.
    pub fn factor_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Conditional mean and standard deviation in standardized target units.
    pub fn posterior_standardized(&self, queries: &[EncodedPoint]) -> Result<Vec<Prediction>> {
        let dim = self.inputs[0].dim();
        queries
            .iter()
            .map(|q| {
                check_len("GP query", dim, q.dim())?;
                let cross = DVector::from_iterator(
                    self.inputs.len(),
                    self.inputs.iter().map(|x| covariance(q, x, self.jitter)),
                );
                let mean = cross.dot(&self.alpha);
                let v = self
                    .chol
                    .l_dirty()
                    .solve_lower_triangular(&cross)
                    .expect("factor has a non-zero diagonal");
                let var = (1.0 + self.jitter - v.dot(&v)).max(0.0);
                Ok(Prediction { mean, std: var.sqrt() })
            })
            .collect()
    }

    /// Conditional mean and standard deviation in the original target units.
    pub fn posterior(&self, queries: &[EncodedPoint]) -> Result<Vec<Prediction>> {
        Ok(self
            .posterior_standardized(queries)?
            .into_iter()
            .map(|p| Prediction {
                mean: self.target_mean + self.target_scale * p.mean,
                std: self.target_scale * p.std,
            })
            .collect())
    }
}

/// `count` draws from `N(0, K(queries, queries) + jitter·I)`.
pub fn sample_prior(queries: &[EncodedPoint], count: usize, seed: u64, jitter: f64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::Config("sample count must be at least 1".into()));
    }
    if let Some(first) = queries.first() {
        for q in queries {
            check_len("GP query", first.dim(), q.dim())?;
        }
    }
    let (chol, _) = factor(&gram(queries), jitter)?;
    let l = chol.l();
    let mut rng = crate::seed::rng(seed);
    Ok((0..count)
        .map(|_| {
            let z = DVector::from_iterator(queries.len(), (0..queries.len()).map(|_| StandardNormal.sample(&mut rng)));
            (&l * z).as_slice().to_vec()
        })
        .collect())
}
