//! Chaos indicators from spectra: the consecutive-spacing ratio r̄, the mean
//! level spacing and the Heisenberg time.
//!
//! Reference values: r̄ = 2 ln 2 − 1 ≈ 0.386 for Poisson spectra, ≈ 0.53 for the
//! orthogonal Gaussian ensemble and ≈ 0.60 for the unitary one.

use std::f64::consts::PI;

use thiserror::Error;

/// Spacings below this fraction of the spectral range count as degeneracies.
pub const DEGENERACY_RTOL: f64 = 1e-12;
/// Fraction of the sorted spectrum kept (centrally) for the mean spacing.
pub const CENTRAL_FRACTION: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("need at least {needed} distinct levels, found {found}")]
    TooFewLevels { needed: usize, found: usize },
    #[error("level list contains a non-finite value")]
    NonFinite,
    #[error("hbar must be positive, got {0}")]
    InvalidHbar(f64),
}

fn sorted_finite(levels: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if levels.iter().any(|x| !x.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    let mut e = levels.to_vec();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

fn ratio(a: f64, b: f64) -> f64 {
    a.min(b) / a.max(b)
}

/// Consecutive spacings with degeneracies (spacing < 1e-12 · range) removed.
fn collapsed_spacings(sorted: &[f64]) -> Vec<f64> {
    let range = sorted.last().copied().unwrap_or(0.0) - sorted.first().copied().unwrap_or(0.0);
    let tol = DEGENERACY_RTOL * range;
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&s| s > tol)
        .collect()
}

/// Mean of r_i = min(s_i, s_{i+1}) / max(s_i, s_{i+1}) over consecutive spacings.
pub fn r_statistic(levels: &[f64]) -> Result<f64, SpectralError> {
    let e = sorted_finite(levels)?;
    let s = collapsed_spacings(&e);
    if s.len() < 2 {
        return Err(SpectralError::TooFewLevels {
            needed: 3,
            found: s.len() + usize::from(!e.is_empty()),
        });
    }
    let sum: f64 = s.windows(2).map(|w| ratio(w[0], w[1])).sum();
    Ok(sum / (s.len() - 1) as f64)
}

/// r̄ for eigenphases: spacings are taken on the circle, including the
/// wrap-around spacing 2π − (θ_max − θ_min), and ratios run cyclically.
pub fn r_statistic_phases(phases: &[f64]) -> Result<f64, SpectralError> {
    let th = sorted_finite(phases)?;
    if th.len() < 3 {
        return Err(SpectralError::TooFewLevels {
            needed: 3,
            found: th.len(),
        });
    }
    let tol = DEGENERACY_RTOL * 2.0 * PI;
    let mut s: Vec<f64> = th.windows(2).map(|w| w[1] - w[0]).collect();
    s.push(2.0 * PI - (th[th.len() - 1] - th[0]));
    s.retain(|&x| x > tol);
    if s.len() < 3 {
        return Err(SpectralError::TooFewLevels {
            needed: 3,
            found: s.len(),
        });
    }
    let m = s.len();
    let sum: f64 = (0..m).map(|i| ratio(s[i], s[(i + 1) % m])).sum();
    Ok(sum / m as f64)
}

/// Mean spacing over the central 80% of the sorted spectrum.
pub fn mean_spacing(levels: &[f64]) -> Result<f64, SpectralError> {
    let e = sorted_finite(levels)?;
    let n = e.len();
    let too_few = || SpectralError::TooFewLevels {
        needed: 2,
        found: n.min(1),
    };
    if n < 2 || e[n - 1] - e[0] <= 0.0 {
        return Err(too_few());
    }
    let trim = (1.0 - CENTRAL_FRACTION) / 2.0;
    let lo = (trim * n as f64).floor() as usize;
    let hi = (((1.0 - trim) * n as f64).ceil() as usize).min(n);
    let (lo, hi) = if hi >= lo + 2 && e[hi - 1] > e[lo] {
        (lo, hi)
    } else {
        (0, n)
    };
    Ok((e[hi - 1] - e[lo]) / (hi - 1 - lo) as f64)
}

/// t_H = 2πħ / ⟨Δ⟩.
pub fn heisenberg_time(levels: &[f64], hbar: f64) -> Result<f64, SpectralError> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(SpectralError::InvalidHbar(hbar));
    }
    Ok(2.0 * PI * hbar / mean_spacing(levels)?)
}

/// Sorted levels with their spacing statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    pub levels: Vec<f64>,
    pub mean_spacing: f64,
    pub r_bar: f64,
    pub t_heisenberg: f64,
}

impl SpectralSummary {
    pub fn from_levels(levels: &[f64], hbar: f64) -> Result<Self, SpectralError> {
        let sorted = sorted_finite(levels)?;
        let mean_spacing = mean_spacing(&sorted)?;
        Ok(Self {
            r_bar: r_statistic(&sorted)?,
            t_heisenberg: heisenberg_time(&sorted, hbar)?,
            mean_spacing,
            levels: sorted,
        })
    }

    /// Same, but r̄ uses circular spacings.
    pub fn from_phases(phases: &[f64], hbar: f64) -> Result<Self, SpectralError> {
        let mut s = Self::from_levels(phases, hbar)?;
        s.r_bar = r_statistic_phases(phases)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equally_spaced_levels_give_one() {
        assert_eq!(r_statistic(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        let phases: Vec<f64> = (0..12).map(|k| -PI + (k as f64 + 0.5) * 2.0 * PI / 12.0).collect();
        assert!((r_statistic_phases(&phases).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_levels() {
        assert!(matches!(r_statistic(&[1.0, 2.0]), Err(SpectralError::TooFewLevels { .. })));
        // Degenerate copies do not count as distinct levels.
        assert!(matches!(
            r_statistic(&[1.0, 1.0, 2.0, 2.0]),
            Err(SpectralError::TooFewLevels { .. })
        ));
        assert!(matches!(r_statistic_phases(&[0.1, 0.2]), Err(SpectralError::TooFewLevels { .. })));
        assert!(matches!(heisenberg_time(&[3.0, 3.0], 1.0), Err(SpectralError::TooFewLevels { .. })));
        assert_eq!(r_statistic(&[0.0, f64::NAN, 1.0]), Err(SpectralError::NonFinite));
    }

    #[test]
    fn degeneracies_are_collapsed() {
        let with_ties = [0.0, 1.0, 1.0, 3.0, 4.0];
        let without = [0.0, 1.0, 3.0, 4.0];
        assert_eq!(r_statistic(&with_ties).unwrap(), r_statistic(&without).unwrap());
    }

    #[test]
    fn two_level_hand_values() {
        // spacings 1, 2, 4 -> ratios 1/2, 1/2
        assert_eq!(r_statistic(&[0.0, 1.0, 3.0, 7.0]).unwrap(), 0.5);
    }

    #[test]
    fn heisenberg_unit_spacing() {
        let levels: Vec<f64> = (0..=10).map(f64::from).collect();
        assert!((heisenberg_time(&levels, 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        let scaled: Vec<f64> = levels.iter().map(|x| 3.0 * x).collect();
        assert!((heisenberg_time(&scaled, 1.0).unwrap() - 2.0 * PI / 3.0).abs() < 1e-12);
        assert!((heisenberg_time(&levels, 0.5).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn summary_fields() {
        let levels: Vec<f64> = (0..=10).rev().map(f64::from).collect();
        let s = SpectralSummary::from_levels(&levels, 1.0).unwrap();
        assert_eq!(s.levels[0], 0.0);
        assert_eq!(s.mean_spacing, 1.0);
        assert_eq!(s.r_bar, 1.0);
    }

    proptest! {
        #[test]
        fn r_is_affine_invariant(
            levels in prop::collection::vec(-50.0f64..50.0, 5..60),
            alpha in 0.01f64..100.0,
            beta in -100.0f64..100.0,
        ) {
            if let Ok(r0) = r_statistic(&levels) {
                prop_assert!(r0 > 0.0 && r0 <= 1.0);
                let mapped: Vec<f64> = levels.iter().map(|e| alpha * e + beta).collect();
                if let Ok(r1) = r_statistic(&mapped) {
                    prop_assert!((r0 - r1).abs() <= 1e-7, "{} vs {}", r0, r1);
                }
            }
        }

        #[test]
        fn phase_r_is_rotation_invariant(
            phases in prop::collection::vec(-3.1f64..3.1, 4..60),
            shift in -10.0f64..10.0,
        ) {
            if let Ok(r0) = r_statistic_phases(&phases) {
                prop_assert!(r0 > 0.0 && r0 <= 1.0);
                let rotated: Vec<f64> = phases
                    .iter()
                    .map(|t| crate::matrix::principal_angle(t + shift))
                    .collect();
                let r1 = r_statistic_phases(&rotated).unwrap();
                prop_assert!((r0 - r1).abs() <= 1e-9, "{} vs {}", r0, r1);
            }
        }

        #[test]
        fn heisenberg_homogeneity(
            levels in prop::collection::vec(-10.0f64..10.0, 3..40),
            c in 0.1f64..10.0,
            hbar in 0.1f64..10.0,
        ) {
            if let Ok(t0) = heisenberg_time(&levels, 1.0) {
                let scaled: Vec<f64> = levels.iter().map(|e| c * e).collect();
                let t1 = heisenberg_time(&scaled, hbar).unwrap();
                prop_assert!((t1 - t0 * hbar / c).abs() <= 1e-9 * t0 * hbar / c);
            }
        }
    }
}
