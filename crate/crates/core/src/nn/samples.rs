use crate::error::{check_len, Error, Result};

/// Paired input/target rows stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    input_dim: usize,
    target_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Samples {
    pub fn new(input_dim: usize, target_dim: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if input_dim == 0 || target_dim == 0 {
            return Err(Error::Config("sample dimensions must be positive".into()));
        }
        if !inputs.len().is_multiple_of(input_dim) {
            return Err(Error::Format(format!(
                "{} input values do not divide into rows of {input_dim}",
                inputs.len()
            )));
        }
        let rows = inputs.len() / input_dim;
        check_len("sample targets", rows * target_dim, targets.len())?;
        Ok(Self {
            input_dim,
            target_dim,
            inputs,
            targets,
        })
    }

    pub fn from_rows<'a>(
        input_dim: usize,
        target_dim: usize,
        rows: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
    ) -> Result<Self> {
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (x, y) in rows {
            check_len("sample input row", input_dim, x.len())?;
            check_len("sample target row", target_dim, y.len())?;
            inputs.extend_from_slice(x);
            targets.extend_from_slice(y);
        }
        Self::new(input_dim, target_dim, inputs, targets)
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.inputs
            .chunks_exact(self.input_dim)
            .zip(self.targets.chunks_exact(self.target_dim))
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut inputs = Vec::with_capacity(indices.len() * self.input_dim);
        let mut targets = Vec::with_capacity(indices.len() * self.target_dim);
        for &i in indices {
            inputs.extend_from_slice(self.input(i));
            targets.extend_from_slice(self.target(i));
        }
        Self {
            input_dim: self.input_dim,
            target_dim: self.target_dim,
            inputs,
            targets,
        }
    }

    /// Leading `round(len * fraction)` rows and the rest.
    pub fn split(&self, fraction: f64) -> (Self, Self) {
        let cut = ((self.len() as f64) * fraction).round() as usize;
        let cut = cut.min(self.len());
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        check_len("concat input dim", self.input_dim, other.input_dim)?;
        check_len("concat target dim", self.target_dim, other.target_dim)?;
        let mut out = self.clone();
        out.inputs.extend_from_slice(&other.inputs);
        out.targets.extend_from_slice(&other.targets);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_a_disjoint_partition() {
        let inputs: Vec<f64> = (0..1000).map(f64::from).collect();
        let s = Samples::new(1, 1, inputs.clone(), inputs).unwrap();
        let (a, b) = s.split(0.8);
        assert_eq!((a.len(), b.len()), (800, 200));
        assert_eq!(a.input(799), &[799.0]);
        assert_eq!(b.input(0), &[800.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Samples::new(2, 1, vec![1.0, 2.0, 3.0], vec![1.0]).is_err());
        assert!(Samples::new(1, 2, vec![1.0], vec![1.0]).is_err());
    }
}
