//! High-probability risk bounds for the denoiser, evaluated on given inputs.
//!
//! These are calculators: they take the graph quantities (`rho`, `kappa_T`,
//! `|T|`) and signal quantities (support size, edge-difference norms) as
//! numbers and return the right-hand sides exactly.

use serde::{Deserialize, Serialize};

use super::{DenoiseError, Result};

/// Inputs shared by the full-observation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskInputs {
    pub n: usize,
    pub rho: f64,
    /// Compatibility factor of `T` (ignored when `t_size == 0`).
    pub kappa_t: f64,
    pub t_size: usize,
    /// Support size `||p*||_0`.
    pub support: usize,
    /// `||(D p*)_{T^c}||_1`.
    pub tv_off_t: f64,
    /// `||D p*||_0`.
    pub tv_support: usize,
    pub delta: f64,
}

impl RiskInputs {
    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(DenoiseError::InvalidArgument("n must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(DenoiseError::InvalidArgument(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if self.rho < 0.0 || self.tv_off_t < 0.0 {
            return Err(DenoiseError::InvalidArgument("inputs must be nonnegative".into()));
        }
        if self.t_size > 0 && self.kappa_t <= 0.0 {
            return Err(DenoiseError::InvalidArgument("kappa_T must be positive".into()));
        }
        Ok(())
    }

    fn log_main(&self) -> f64 {
        let n = self.n as f64;
        (4.0 * n * n / self.delta).ln()
    }

    fn log_small(&self) -> f64 {
        (4.0 / self.delta).ln()
    }
}

/// Squared-l2 risk bound:
/// `16 rho^2 |T| L^2 / kappa^2 + 4 sqrt(2) rho ||(Dp)_{T^c}||_1 L + 4 s log(4/delta) / n`
/// with `L = log(4 n^2 / delta)`.
pub fn l2_risk_bound(x: &RiskInputs) -> Result<f64> {
    x.check()?;
    let l = x.log_main();
    let t_term = if x.t_size == 0 {
        0.0
    } else {
        16.0 * x.rho * x.rho * x.t_size as f64 * l * l / (x.kappa_t * x.kappa_t)
    };
    Ok(t_term
        + 4.0 * std::f64::consts::SQRT_2 * x.rho * x.tv_off_t * l
        + 4.0 * x.support as f64 * x.log_small() / x.n as f64)
}

/// l1 risk bound:
/// `4 rho sqrt(s |T|) L / kappa + 2 s sqrt(log(4/delta) / n)
///  + 3 sqrt(rho s ||(Dp)_{T^c}||_1 L) + sqrt(2) rho ||Dp||_0 L`.
pub fn l1_risk_bound(x: &RiskInputs) -> Result<f64> {
    x.check()?;
    let l = x.log_main();
    let s = x.support as f64;
    let t_term = if x.t_size == 0 {
        0.0
    } else {
        4.0 * x.rho * (s * x.t_size as f64).sqrt() * l / x.kappa_t
    };
    Ok(t_term
        + 2.0 * s * (x.log_small() / x.n as f64).sqrt()
        + 3.0 * (x.rho * s * x.tv_off_t * l).sqrt()
        + std::f64::consts::SQRT_2 * x.rho * x.tv_support as f64 * l)
}

/// Bracketed quantity of the partial-observation bound, without its absolute
/// constant: `{rho^2 kappa_pi |T| / kappa_T^2 + ||pi||_1 ||1/pi||_1 / n^2} log^2 n`,
/// where `kappa_pi = 1 / min_i pi_i`.
pub fn missing_risk_bracket(rho: f64, kappa_t: f64, t_size: usize, pi: &[f64]) -> Result<f64> {
    let n = pi.len();
    if n < 2 {
        return Err(DenoiseError::InvalidArgument("need at least two nodes".into()));
    }
    if pi.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(DenoiseError::InvalidArgument(
            "observation probabilities must lie in (0, 1]".into(),
        ));
    }
    if t_size > 0 && kappa_t <= 0.0 {
        return Err(DenoiseError::InvalidArgument("kappa_T must be positive".into()));
    }
    let kappa_pi = 1.0 / pi.iter().copied().fold(f64::INFINITY, f64::min);
    let pi_l1: f64 = pi.iter().sum();
    let inv_l1: f64 = pi.iter().map(|p| 1.0 / p).sum();
    let nf = n as f64;
    let t_term = if t_size == 0 {
        0.0
    } else {
        rho * rho * kappa_pi * t_size as f64 / (kappa_t * kappa_t)
    };
    Ok((t_term + pi_l1 * inv_l1 / (nf * nf)) * nf.ln().powi(2))
}

/// Graph families with known scalings of `rho` and `kappa_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum TopologyCase {
    Grid2d,
    Complete,
    Star,
    /// Random regular / Erdos-Renyi graphs with expected degree `d_n`.
    Random { d_n: f64 },
}

/// Rates (up to numerical constants) of the l2 and l1 errors for a topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyRates {
    pub l2: f64,
    pub l1: f64,
}

impl TopologyCase {
    /// `support = ||p*||_0`, `tv1 = ||Dp*||_1`, `tv0 = ||Dp*||_0`.
    pub fn rates(&self, n: usize, support: usize, tv1: f64, tv0: usize) -> TopologyRates {
        let nf = n as f64;
        let log = nf.ln();
        let s = support as f64;
        let tv0 = tv0 as f64;
        match *self {
            TopologyCase::Grid2d => TopologyRates {
                l2: (tv1 + s / (nf * log.sqrt())).sqrt() * log.powf(0.75),
                l1: ((s * tv1 / log.powf(1.5)).sqrt() + tv0) * log.powf(1.5),
            },
            TopologyCase::Complete => TopologyRates {
                l2: ((tv1 + s) / nf).sqrt() * log.sqrt(),
                l1: ((s * tv1 / (nf * log)).sqrt() + tv0 / nf) * log,
            },
            TopologyCase::Star => TopologyRates {
                l2: (tv1 + s / nf).sqrt() * log.sqrt(),
                l1: ((s * tv1 / log).sqrt() + tv0) * log,
            },
            TopologyCase::Random { d_n } => TopologyRates {
                l2: (tv1 * log / d_n + s * log / nf).sqrt(),
                l1: ((s * tv1 / d_n).sqrt() + tv0 * log.sqrt() / d_n + s / nf.sqrt()) * log.sqrt(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> RiskInputs {
        RiskInputs {
            n: 100,
            rho: 0.5,
            kappa_t: 0.25,
            t_size: 4,
            support: 10,
            tv_off_t: 2.0,
            tv_support: 6,
            delta: 0.1,
        }
    }

    #[test]
    fn l2_bound_arithmetic() {
        let x = inputs();
        let l = (4.0 * 1e4 / 0.1f64).ln();
        let expect = 16.0 * 0.25 * 4.0 * l * l / 0.0625
            + 4.0 * 2f64.sqrt() * 0.5 * 2.0 * l
            + 4.0 * 10.0 * 40f64.ln() / 100.0;
        assert!((l2_risk_bound(&x).unwrap() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn l1_bound_arithmetic() {
        let x = inputs();
        let l = (4.0 * 1e4 / 0.1f64).ln();
        let expect = 4.0 * 0.5 * 40f64.sqrt() * l / 0.25
            + 2.0 * 10.0 * (40f64.ln() / 100.0).sqrt()
            + 3.0 * (0.5 * 10.0 * 2.0 * l).sqrt()
            + 2f64.sqrt() * 0.5 * 6.0 * l;
        assert!((l1_risk_bound(&x).unwrap() - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn empty_signal_gives_zero() {
        let x = RiskInputs {
            t_size: 0,
            support: 0,
            tv_off_t: 0.0,
            tv_support: 0,
            kappa_t: 0.0,
            ..inputs()
        };
        assert_eq!(l1_risk_bound(&x).unwrap(), 0.0);
        assert_eq!(l2_risk_bound(&x).unwrap(), 0.0);
    }

    #[test]
    fn missing_bracket_uniform_pi() {
        let pi = vec![0.5; 10];
        // rho^2 * 2 * |T| / kappa^2 + (5 * 20) / 100, times ln(10)^2
        let got = missing_risk_bracket(1.0, 0.5, 3, &pi).unwrap();
        let expect = (1.0 * 2.0 * 3.0 / 0.25 + 1.0) * 10f64.ln().powi(2);
        assert!((got - expect).abs() < 1e-12 * expect);
        assert!(missing_risk_bracket(1.0, 0.5, 3, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn topology_rates_monotone_in_tv() {
        for case in [
            TopologyCase::Grid2d,
            TopologyCase::Complete,
            TopologyCase::Star,
            TopologyCase::Random { d_n: 8.0 },
        ] {
            let lo = case.rates(1000, 20, 5.0, 10);
            let hi = case.rates(1000, 20, 10.0, 20);
            assert!(hi.l1 > lo.l1 && hi.l2 > lo.l2, "{case:?}");
        }
    }
}
