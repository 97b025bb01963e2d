//! Small-sample statistics for replicated runs.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Normal critical value used for confidence half-widths.
pub const Z_95: f64 = 1.96;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `1.96 * sd / sqrt(n)`; 0 when `degenerate`.
    pub ci_half_width: f64,
    /// Fewer than two samples: no spread estimate exists.
    pub degenerate: bool,
}

pub fn estimate(xs: &[f64]) -> Estimate {
    let degenerate = xs.len() < 2;
    let ci_half_width = if degenerate { 0.0 } else { Z_95 * sample_sd(xs) / (xs.len() as f64).sqrt() };
    Estimate { mean: mean(xs), ci_half_width, degenerate }
}

fn t_cdf(dist: &StudentsT, t: f64) -> f64 {
    if t.is_infinite() {
        if t > 0.0 { 1.0 } else { 0.0 }
    } else {
        dist.cdf(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTest {
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t: f64,
    pub df: f64,
    /// P(T >= t): evidence that `a > b`.
    pub p_greater: f64,
    /// P(T <= t): evidence that `a < b`.
    pub p_less: f64,
    pub p_two_sided: f64,
    /// Student-t 95% half-width of the mean difference.
    pub ci_half_width: f64,
}

impl PairedTest {
    pub fn ci_contains_zero(&self) -> bool {
        (self.mean_diff - self.ci_half_width..=self.mean_diff + self.ci_half_width).contains(&0.0)
    }
}

/// Paired t-test on `a[i] - b[i]`. Identical samples give `t = 0` and p-values
/// of 0.5 (one-sided) and 1 (two-sided); a constant nonzero difference is
/// treated as infinitely significant.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> PairedTest {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    assert!(a.len() >= 2, "paired test needs at least two pairs");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean_diff = mean(&d);
    let sd_diff = sample_sd(&d);
    let df = n - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let se = sd_diff / n.sqrt();
    let t = if se > 0.0 {
        mean_diff / se
    } else if mean_diff == 0.0 {
        0.0
    } else {
        mean_diff.signum() * f64::INFINITY
    };
    let p_less = t_cdf(&dist, t);
    let p_greater = 1.0 - p_less;
    PairedTest {
        mean_diff,
        sd_diff,
        t,
        df,
        p_greater,
        p_less,
        p_two_sided: (2.0 * p_less.min(p_greater)).min(1.0),
        ci_half_width: dist.inverse_cdf(0.975) * se,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub se: f64,
    pub t: f64,
    pub p_two_sided: f64,
}

/// Ordinary least squares `y = intercept + slope * x` with a t-test on the slope.
pub fn ols_slope(x: &[f64], y: &[f64]) -> SlopeFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 3, "slope test needs at least three points");
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    assert!(sxx > 0.0, "x must vary");
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let df = n - 2.0;
    let se = (rss / df / sxx).sqrt();
    let t = if se > 0.0 {
        slope / se
    } else if slope == 0.0 {
        0.0
    } else {
        slope.signum() * f64::INFINITY
    };
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p_two_sided = (2.0 * (1.0 - t_cdf(&dist, t.abs()))).min(1.0);
    SlopeFit { slope, intercept, se, t, p_two_sided }
}
