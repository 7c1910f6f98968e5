use super::{DenoiseError, Result};

/// Full-observation regularization `sqrt(2) rho / n * log(4 n^2 / delta)`.
pub fn theoretical_lambda(n: usize, rho: f64, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(DenoiseError::InvalidArgument("n must be positive".into()));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(DenoiseError::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(DenoiseError::InvalidArgument(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let n = n as f64;
    Ok(std::f64::consts::SQRT_2 * rho / n * (4.0 * n * n / delta).ln())
}

/// Partial-observation regularization `9 sqrt(2) rho log(n) / n`.
pub fn theoretical_lambda_missing(n: usize, rho: f64) -> Result<f64> {
    if n < 2 {
        return Err(DenoiseError::InvalidArgument("n must be at least 2".into()));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(DenoiseError::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    let n = n as f64;
    Ok(9.0 * std::f64::consts::SQRT_2 * rho * n.ln() / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_observation_values() {
        assert!((theoretical_lambda(1000, 1.0, 0.04).unwrap() - 0.0260507).abs() < 1e-7);
        let v = theoretical_lambda(2, 0.5f64.sqrt(), 1.0).unwrap();
        assert!((v - 16f64.ln() / 2.0).abs() < 1e-12);
        assert!((v - 1.3863).abs() < 1e-4);
        let looser = theoretical_lambda(100, 1.0, 0.5).unwrap();
        let tighter = theoretical_lambda(100, 1.0, 0.1).unwrap();
        assert!(tighter > looser);
        assert!(theoretical_lambda(100, 1.0, 0.0).is_err());
        assert!(theoretical_lambda(100, 1.0, 1.5).is_err());
    }

    #[test]
    fn missing_values() {
        // 9 sqrt(2) ln(1000) / 1000
        assert!((theoretical_lambda_missing(1000, 1.0).unwrap() - 0.0879214).abs() < 1e-7);
        assert!((theoretical_lambda_missing(3, 1.0).unwrap() - 4.6601).abs() < 1e-3);
        let one = theoretical_lambda_missing(50, 0.7).unwrap();
        let two = theoretical_lambda_missing(50, 1.4).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-15);
    }
}
