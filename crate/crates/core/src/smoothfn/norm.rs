//! Sampled C^k norm estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SmoothError, SmoothFn};

/// Grid size and multiplicative safety factor used by norm estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSettings {
    pub grid: usize,
    pub safety_factor: f64,
}

impl Default for NormSettings {
    fn default() -> Self {
        NormSettings { grid: 4097, safety_factor: 1.25 }
    }
}

impl NormSettings {
    pub fn validate(&self) -> Result<(), SmoothError> {
        if self.grid < 2 {
            return Err(SmoothError::Settings(format!("grid must be at least 2, got {}", self.grid)));
        }
        if !(self.safety_factor >= 1.0) || !self.safety_factor.is_finite() {
            return Err(SmoothError::Settings(format!(
                "safety factor must be a finite number >= 1, got {}",
                self.safety_factor
            )));
        }
        Ok(())
    }
}

/// `max_{j ≤ k} sup |f^(j)|` on a uniform grid, with and without the safety
/// factor applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CkNormEstimate {
    pub k: usize,
    pub value: f64,
    pub raw: f64,
    pub samples: usize,
    pub safety_factor: f64,
}

/// Per-order sampled sups `[sup |f|, sup |f'|, ..., sup |f^(k)|]` on `[lo, hi]`.
pub fn derivative_sups_on(
    f: &SmoothFn,
    lo: f64,
    hi: f64,
    k: usize,
    grid: usize,
) -> Result<Vec<f64>, SmoothError> {
    if grid < 2 {
        return Err(SmoothError::Settings(format!("grid must be at least 2, got {grid}")));
    }
    if !(lo < hi) {
        return Err(SmoothError::InvalidInterval { lo, hi });
    }
    if k > f.max_order() {
        return Err(SmoothError::Order { requested: k, cap: f.max_order() });
    }
    let step = (hi - lo) / (grid - 1) as f64;
    (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = if i == grid - 1 { hi } else { lo + step * i as f64 };
            f.jet(x, k).map(|j| j.into_coeffs())
        })
        .try_fold(
            || vec![0.0f64; k + 1],
            |mut acc, jet| {
                let jet = jet?;
                for (a, v) in acc.iter_mut().zip(&jet) {
                    *a = a.max(v.abs());
                }
                Ok::<_, SmoothError>(acc)
            },
        )
        .try_reduce(
            || vec![0.0f64; k + 1],
            |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect()),
        )
}

/// Per-order sups over the function's own (bounded) domain.
pub fn derivative_sups(f: &SmoothFn, k: usize, grid: usize) -> Result<Vec<f64>, SmoothError> {
    let (lo, hi) = f.domain().bounds().ok_or(SmoothError::UnboundedDomain(f.domain()))?;
    derivative_sups_on(f, lo, hi, k, grid)
}

/// C^k norm estimate on an explicit window.
pub fn ck_norm_on(
    f: &SmoothFn,
    lo: f64,
    hi: f64,
    k: usize,
    grid: usize,
    safety_factor: f64,
) -> Result<CkNormEstimate, SmoothError> {
    NormSettings { grid, safety_factor }.validate()?;
    let sups = derivative_sups_on(f, lo, hi, k, grid)?;
    let raw = sups.iter().cloned().fold(0.0, f64::max);
    Ok(CkNormEstimate { k, value: raw * safety_factor, raw, samples: grid, safety_factor })
}

/// C^k norm estimate over the function's domain, grid endpoints included.
pub fn ck_norm(
    f: &SmoothFn,
    k: usize,
    grid: usize,
    safety_factor: f64,
) -> Result<CkNormEstimate, SmoothError> {
    let (lo, hi) = f.domain().bounds().ok_or(SmoothError::UnboundedDomain(f.domain()))?;
    ck_norm_on(f, lo, hi, k, grid, safety_factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_norms() {
        let f = SmoothFn::identity().scale(3.0).sin().on(0.0, std::f64::consts::PI).unwrap();
        let n = ck_norm(&f, 2, 4097, 1.0).unwrap();
        assert!((n.raw - 9.0).abs() < 1e-5);
        let s = derivative_sups(&f, 2, 4097).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-6 && (s[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn settings_are_validated() {
        let f = SmoothFn::identity().on(0.0, 1.0).unwrap();
        assert!(ck_norm(&f, 1, 1, 1.25).is_err());
        assert!(ck_norm(&f, 1, 10, 0.5).is_err());
        assert!(ck_norm(&SmoothFn::identity(), 1, 10, 1.25).is_err());
    }
}
