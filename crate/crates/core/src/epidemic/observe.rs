use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{in_unit, EpidemicError, EpidemicState, Result};
use crate::rng;

/// How the initially infected node is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatientZero {
    Index(usize),
    /// Uniform over nodes.
    Seeded(u64),
}

/// Indicator state with a single infected node.
pub fn patient_zero_state(n: usize, choice: PatientZero) -> Result<EpidemicState> {
    if n == 0 {
        return Err(EpidemicError::InvalidParameter("need at least one node".into()));
    }
    let index = match choice {
        PatientZero::Index(i) if i >= n => return Err(EpidemicError::IndexOutOfRange { index: i, n }),
        PatientZero::Index(i) => i,
        PatientZero::Seeded(seed) => rng::seeded(seed).random_range(0..n),
    };
    let mut p = vec![0.0; n];
    p[index] = 1.0;
    Ok(EpidemicState::sis(p))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(EpidemicError::InvalidParameter(format!(
            "false-positive rate must lie in [0, 1), got {alpha}"
        )))
    }
}

/// Independent bits with success probability `(1 - alpha) p_i + alpha`.
pub fn sample_observations(p: &[f64], alpha: f64, seed: u64) -> Result<Vec<f64>> {
    in_unit(p)?;
    check_alpha(alpha)?;
    let mut rng = rng::seeded(seed);
    Ok(p.iter()
        .map(|&pi| {
            let rate = ((1.0 - alpha) * pi + alpha).min(1.0);
            f64::from(u8::from(rng.random_bool(rate)))
        })
        .collect())
}

/// Independent bits `m_i ~ Bernoulli(pi_i)`; every `pi_i` must lie in `(0, 1]`.
pub fn sample_mask(pi: &[f64], seed: u64) -> Result<Vec<f64>> {
    if let Some(&bad) = pi.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(EpidemicError::InvalidParameter(format!(
            "observation probabilities must lie in (0, 1], found {bad}"
        )));
    }
    let mut rng = rng::seeded(seed);
    Ok(pi.iter().map(|&x| f64::from(u8::from(rng.random_bool(x)))).collect())
}

/// Observed bits with the mask that produced them; unobserved bits are 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub y: Vec<f64>,
    pub mask: Vec<f64>,
    pub alpha: f64,
    pub pi: Vec<f64>,
    pub seed: u64,
}

impl ObservationSet {
    /// Draws statuses from stream 0 and the mask from stream 1 of `seed`.
    /// `pi = None` observes every node.
    pub fn draw(p: &[f64], alpha: f64, pi: Option<&[f64]>, seed: u64) -> Result<Self> {
        let n = p.len();
        let pi = pi.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
        if pi.len() != n {
            return Err(EpidemicError::DimensionMismatch { what: "pi", got: pi.len(), expected: n });
        }
        let statuses = sample_observations(p, alpha, seed)?;
        let mask = sample_mask(&pi, mask_seed(seed))?;
        let y = statuses.iter().zip(&mask).map(|(y, m)| y * m).collect();
        Ok(ObservationSet { y, mask, alpha, pi, seed })
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 1.0).count()
    }
}

fn mask_seed(seed: u64) -> u64 {
    use rand::RngCore;
    rng::stream(seed, 1).next_u64()
}
