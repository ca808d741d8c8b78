use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    TwoProportionZ,
    WelchT,
    KolmogorovSmirnov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tails {
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub tails: Tails,
    pub n1: usize,
    pub n2: usize,
    /// Welch–Satterthwaite degrees of freedom, t-test only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    /// Set when the statistic is undefined and a conventional value is reported.
    #[serde(default)]
    pub degenerate: bool,
}

impl TestResult {
    fn new(test: TestKind, statistic: f64, p_value: f64, n1: usize, n2: usize) -> Self {
        TestResult {
            test,
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            tails: Tails::Two,
            n1,
            n2,
            df: None,
            degenerate: false,
        }
    }

    /// `1 - p`, the ranking score for insight candidates.
    pub fn significance(&self) -> f64 {
        1.0 - self.p_value
    }
}

/// Two-tailed standard normal tail probability `P(|Z| >= |z|)`.
pub fn normal_two_tailed(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Pooled two-proportion z-test of `x1/n1` against `x2/n2`.
///
/// When the pooled proportion is 0 or 1 the statistic is undefined; the
/// result is flagged degenerate with `z = 0`, `p = 1`.
pub fn two_proportion_z(x1: usize, n1: usize, x2: usize, n2: usize) -> Result<TestResult, StatsError> {
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::BadInput("sample sizes must be positive".into()));
    }
    if x1 > n1 || x2 > n2 {
        return Err(StatsError::BadInput(format!("counts exceed sizes: {x1}/{n1}, {x2}/{n2}")));
    }
    let (p1, p2) = (x1 as f64 / n1 as f64, x2 as f64 / n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    if x1 + x2 == 0 || x1 + x2 == n1 + n2 {
        let mut r = TestResult::new(TestKind::TwoProportionZ, 0.0, 1.0, n1, n2);
        r.degenerate = true;
        return Ok(r);
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let z = (p1 - p2) / se;
    Ok(TestResult::new(TestKind::TwoProportionZ, z, normal_two_tailed(z), n1, n2))
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Welch's unequal-variance t-test, two-tailed.
pub fn two_sample_t(xs: &[f64], ys: &[f64]) -> Result<TestResult, StatsError> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(StatsError::BadInput("each sample needs at least 2 values".into()));
    }
    let (mx, vx) = mean_var(xs);
    let (my, vy) = mean_var(ys);
    let (ax, ay) = (vx / xs.len() as f64, vy / ys.len() as f64);
    let se2 = ax + ay;
    if se2 == 0.0 {
        if mx == my {
            let mut r = TestResult::new(TestKind::WelchT, 0.0, 1.0, xs.len(), ys.len());
            r.degenerate = true;
            return Ok(r);
        }
        return Err(StatsError::Degenerate("both samples constant with different means".into()));
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / (ax * ax / (xs.len() - 1) as f64 + ay * ay / (ys.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| StatsError::Degenerate(e.to_string()))?;
    let p = 2.0 * dist.sf(t.abs());
    let mut r = TestResult::new(TestKind::WelchT, t, p, xs.len(), ys.len());
    r.df = Some(df);
    Ok(r)
}

/// Product-moment correlation, clamped to `[-1, 1]`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(StatsError::BadInput(format!(
            "need two equal-length samples of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sorted distinct values with multiplicities.
pub fn value_counts(xs: &[f64]) -> Vec<(f64, usize)> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some((last, n)) if *last == x => *n += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

fn ks_counts_statistic(a: &[(f64, usize)], b: &[(f64, usize)]) -> (f64, usize, usize) {
    let na: usize = a.iter().map(|p| p.1).sum();
    let nb: usize = b.iter().map(|p| p.1).sum();
    let (mut i, mut j, mut ca, mut cb, mut d) = (0, 0, 0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = if a[i].0 <= b[j].0 { a[i].0 } else { b[j].0 };
        if a[i].0 == v {
            ca += a[i].1;
            i += 1;
        }
        if b[j].0 == v {
            cb += b[j].1;
            j += 1;
        }
        d = d.max((ca as f64 / na as f64 - cb as f64 / nb as f64).abs());
    }
    (d, na, nb)
}

/// Largest absolute gap between the two empirical distribution functions.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    ks_counts_statistic(&value_counts(xs), &value_counts(ys)).0
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^(k-1) exp(-2 k² λ²)`.
///
/// Small `λ` uses the equivalent theta-function form, which converges where
/// the alternating series does not.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for k in 1.. {
            let term = (y * ((2 * k - 1) as f64).powi(2)).exp();
            cdf += term;
            if term < 1e-12 * cdf.max(1e-300) || k > 100 {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value at
/// `λ = (√nₑ + 0.12 + 0.11/√nₑ)·D`, `nₑ = n₁n₂/(n₁+n₂)`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<TestResult, StatsError> {
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(StatsError::BadInput("samples contain NaN".into()));
    }
    ks_two_sample_counts(&value_counts(xs), &value_counts(ys))
}

/// [`ks_two_sample`] over `value_counts`-style histograms.
pub fn ks_two_sample_counts(a: &[(f64, usize)], b: &[(f64, usize)]) -> Result<TestResult, StatsError> {
    let (d, n1, n2) = ks_counts_statistic(a, b);
    if n1 == 0 || n2 == 0 {
        return Err(StatsError::BadInput("both samples must be non-empty".into()));
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    let p = if d == 0.0 {
        1.0
    } else {
        let root = ne.sqrt();
        kolmogorov_sf((root + 0.12 + 0.11 / root) * d)
    };
    Ok(TestResult::new(TestKind::KolmogorovSmirnov, d, p, n1, n2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_symmetric_cases() {
        let r = two_proportion_z(50, 100, 50, 100).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let a = two_proportion_z(30, 100, 50, 120).unwrap();
        let b = two_proportion_z(50, 120, 30, 100).unwrap();
        assert_eq!(a.statistic, -b.statistic);
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn z_degenerate_and_errors() {
        let r = two_proportion_z(0, 10, 0, 20).unwrap();
        assert!(r.degenerate && r.p_value == 1.0 && r.statistic == 0.0);
        assert!(two_proportion_z(10, 10, 20, 20).unwrap().degenerate);
        assert!(two_proportion_z(11, 10, 0, 5).is_err());
        assert!(two_proportion_z(0, 0, 0, 5).is_err());
    }

    #[test]
    fn t_identical_and_constant() {
        let xs = [1.0, 2.0, 3.0];
        let r = two_sample_t(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(two_sample_t(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap().p_value, 1.0);
        assert!(matches!(two_sample_t(&[1.0, 1.0], &[2.0, 2.0]), Err(StatsError::Degenerate(_))));
        assert!(two_sample_t(&[1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn pearson_linear() {
        let xs = [0.0, 25.0, 50.0, 75.0, 100.0];
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(pearson(&xs, &up).unwrap(), 1.0);
        assert_eq!(pearson(&xs, &down).unwrap(), -1.0);
        assert_eq!(pearson(&xs, &[1.0; 5]), Err(StatsError::ZeroVariance));
        assert!(pearson(&xs, &[1.0]).is_err());
    }

    #[test]
    fn ks_basics() {
        let r = ks_two_sample(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(ks_two_sample(&[0.0; 3], &[1.0; 3]).unwrap().statistic, 1.0);
        let a: Vec<f64> = (0..50).map(f64::from).collect();
        let b: Vec<f64> = (100..150).map(f64::from).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert!(r.p_value < 1e-6 && r.significance() > 0.999999);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn kolmogorov_branches_agree_near_switch() {
        let lo = kolmogorov_sf(1.18 - 1e-9);
        let hi = kolmogorov_sf(1.18);
        assert!((lo - hi).abs() < 1e-9, "{lo} {hi}");
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(0.1) > 0.999_999);
        // tabulated: Q(1.36) ≈ 0.0494
        assert!((kolmogorov_sf(1.36) - 0.04939).abs() < 1e-4);
    }
}
