//! Small statistics used by the experiment reports.

use rand::seq::SliceRandom;
use statrs::distribution::{ContinuousCDF, StudentsT};

use kryres::random::stream_rng;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        f64::NAN
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Sample variance (N − 1 denominator); NaN below two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn median(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Mean over the finite entries only.
pub fn finite_mean(x: &[f64]) -> f64 {
    let f: Vec<f64> = x.iter().copied().filter(|v| v.is_finite()).collect();
    mean(&f)
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation; NaN if any input is NaN or a side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return f64::NAN;
    }
    pearson(&ranks(x), &ranks(y))
}

/// Fraction-free permutation check: how many of `shuffles` label permutations
/// of `x` give |ρ_null| strictly below the observed |ρ(x, y)|.
pub fn permutation_count(x: &[f64], y: &[f64], shuffles: usize, seed: u64, stream: u64) -> (f64, usize) {
    let observed = spearman(x, y);
    let mut rng = stream_rng(seed, stream);
    let mut perm = x.to_vec();
    let mut below = 0;
    for _ in 0..shuffles {
        perm.shuffle(&mut rng);
        if spearman(&perm, y).abs() < observed.abs() {
            below += 1;
        }
    }
    (observed, below)
}

/// Least-squares fit of log y = c + p·log x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Standard error of the exponent; NaN with two points.
    pub stderr: f64,
    /// 95% Student-t interval for the exponent.
    pub ci: (f64, f64),
}

pub fn power_law_fit(x: &[f64], y: &[f64]) -> Option<PowerLawFit> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let m = x.len();
    let (stderr, ci) = if m > 2 {
        let ssr: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let se = (ssr / (m - 2) as f64 / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, (m - 2) as f64)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        (se, (slope - t * se, slope + t * se))
    } else {
        (f64::NAN, (f64::NAN, f64::NAN))
    };
    Some(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        stderr,
        ci,
    })
}
