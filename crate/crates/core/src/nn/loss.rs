use crate::error::{check_len, Result};

/// `sum_i |x_i - y_i|`.
pub fn l1_loss(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("l1_loss", x.len(), y.len())?;
    Ok(l1(x, y))
}

pub(crate) fn l1(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// Subgradient of the L1 loss with respect to `x`, zero at exact ties.
pub(crate) fn l1_grad(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(l1_loss(&[0.7, 1.2], &[0.7, 1.2]).unwrap(), 0.0);
        assert_eq!(l1_loss(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(l1_loss(&[0.5], &[1.5]).unwrap(), 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(l1_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn subgradient_zero_at_tie() {
        assert_eq!(l1_grad(&[1.0, 2.0, 3.0], &[0.0, 2.0, 4.0]), vec![1.0, 0.0, -1.0]);
    }
}
