//! The four two-sample test kernels: Welch's t-test (model-constrained main
//! test), Wilcoxon-Mann-Whitney (assumption-unconstrained main test),
//! Shapiro-Wilk normality on pooled residuals (misspecification test), and a
//! permutation test of the mean difference (benchmark).
//!
//! All main tests are two-sided. The reject rule is the strict `p < level`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Probability;
use crate::rng::RngStream;
use crate::special::{normal_cdf, ppnd16, student_t_cdf};

/// Which kernel produced a [`TestOutcome`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WelchT,
    Wmw,
    ShapiroWilk,
    PermutationMean,
}

/// Result of one test kernel applied to one dataset.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TestOutcome {
    pub method: TestMethod,
    /// Welch: t. WMW: U under exact enumeration, the tie-corrected normal
    /// z otherwise. Shapiro-Wilk: W. Permutation: |mean(x) - mean(y)|.
    pub statistic: f64,
    pub p_value: Probability,
    pub level: Probability,
    pub reject: bool,
}

impl TestOutcome {
    fn new(method: TestMethod, statistic: f64, p_value: Probability, level: Probability) -> Self {
        TestOutcome {
            method,
            statistic,
            p_value,
            level,
            reject: p_value.value() < level.value(),
        }
    }
}

/// A validated two-sample dataset: both groups hold at least two finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSampleData {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TwoSampleData {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || y.len() < 2 {
            return Err(Error::domain(format!(
                "both groups need at least 2 observations, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::domain("observations must be finite".to_string()));
        }
        Ok(TwoSampleData { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n1(&self) -> usize {
        self.x.len()
    }

    pub fn n2(&self) -> usize {
        self.y.len()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64], mean: f64) -> f64 {
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64
}

/// Welch's two-sample t-test with Satterthwaite degrees of freedom.
pub fn welch_t_test(data: &TwoSampleData, level: Probability) -> Result<TestOutcome> {
    let (n1, n2) = (data.n1() as f64, data.n2() as f64);
    let mx = mean(data.x());
    let my = mean(data.y());
    let v1 = sample_variance(data.x(), mx);
    let v2 = sample_variance(data.y(), my);
    if v1 == 0.0 && v2 == 0.0 {
        return Err(Error::DegenerateData(
            "both sample variances are zero".to_string(),
        ));
    }
    let se1 = v1 / n1;
    let se2 = v2 / n2;
    let se = (se1 + se2).sqrt();
    let t = (mx - my) / se;
    let df = (se1 + se2) * (se1 + se2) / (se1 * se1 / (n1 - 1.0) + se2 * se2 / (n2 - 1.0));
    let p = Probability::clamped(2.0 * student_t_cdf(-t.abs(), df)?.value());
    Ok(TestOutcome::new(TestMethod::WelchT, t, p, level))
}

/// Welch-Satterthwaite degrees of freedom alone (for inspection).
pub fn welch_df(data: &TwoSampleData) -> f64 {
    let (n1, n2) = (data.n1() as f64, data.n2() as f64);
    let se1 = sample_variance(data.x(), mean(data.x())) / n1;
    let se2 = sample_variance(data.y(), mean(data.y())) / n2;
    (se1 + se2) * (se1 + se2) / (se1 * se1 / (n1 - 1.0) + se2 * se2 / (n2 - 1.0))
}

// Midranks of the pooled sample plus the tie correction term sum(t^3 - t).
fn midranks(data: &TwoSampleData) -> (Vec<f64>, f64, bool) {
    let n = data.n1() + data.n2();
    let mut order: Vec<usize> = (0..n).collect();
    let value = |i: usize| {
        if i < data.n1() {
            data.x()[i]
        } else {
            data.y()[i - data.n1()]
        }
    };
    order.sort_unstable_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap());
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut has_ties = false;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && value(order[j]) == value(order[i]) {
            j += 1;
        }
        let run = (j - i) as f64;
        if j - i > 1 {
            has_ties = true;
            tie_term += run * run * run - run;
        }
        let avg = (i + j + 1) as f64 / 2.0; // ranks are 1-based
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    (ranks, tie_term, has_ties)
}

/// Wilcoxon-Mann-Whitney rank test.
///
/// Uses midranks; the p-value comes from exact enumeration of all rank splits
/// when `n1 + n2 <= 12` and there are no ties, and from the tie-corrected
/// normal approximation with a 0.5 continuity correction otherwise.
pub fn wmw_test(data: &TwoSampleData, level: Probability) -> TestOutcome {
    let n1 = data.n1();
    let n2 = data.n2();
    let (ranks, tie_term, has_ties) = midranks(data);
    let rank_sum_x: f64 = ranks[..n1].iter().sum();
    let u = rank_sum_x - (n1 * (n1 + 1)) as f64 / 2.0;

    if n1 + n2 <= 12 && !has_ties {
        let p = wmw_exact_p(n1, n2, u.round() as i64);
        return TestOutcome::new(TestMethod::Wmw, u, p, level);
    }

    let n = (n1 + n2) as f64;
    let mu = (n1 * n2) as f64 / 2.0;
    let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        // Complete ties: the statistic carries no information.
        return TestOutcome::new(TestMethod::Wmw, 0.0, Probability::clamped(1.0), level);
    }
    let diff = u - mu;
    let corrected = (diff.abs() - 0.5).max(0.0);
    let z = diff.signum() * corrected / var.sqrt();
    let p = Probability::clamped(2.0 * (1.0 - normal_cdf(z.abs()).value()));
    TestOutcome::new(TestMethod::Wmw, z, p, level)
}

// Exact two-sided p by enumerating all C(n1+n2, n1) rank assignments.
// Distances from the U mean are measured in integer units of 2U - n1*n2.
fn wmw_exact_p(n1: usize, n2: usize, u_obs: i64) -> Probability {
    let n = n1 + n2;
    let d_obs = (2 * u_obs - (n1 * n2) as i64).abs();
    let mut extreme = 0u64;
    let mut total = 0u64;
    for_each_combination(n, n1, &mut |chosen| {
        let rank_sum: usize = chosen.iter().map(|&i| i + 1).sum();
        let u = rank_sum as i64 - (n1 * (n1 + 1)) as i64 / 2;
        let d = (2 * u - (n1 * n2) as i64).abs();
        total += 1;
        if d >= d_obs {
            extreme += 1;
        }
    });
    Probability::clamped(extreme as f64 / total as f64)
}

// Lexicographic walk over all k-subsets of 0..n.
fn for_each_combination(n: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Group-mean-centered residuals, group 1 first.
pub fn pooled_residuals(data: &TwoSampleData) -> Vec<f64> {
    let mx = mean(data.x());
    let my = mean(data.y());
    data.x()
        .iter()
        .map(|v| v - mx)
        .chain(data.y().iter().map(|v| v - my))
        .collect()
}

/// Shapiro-Wilk W-test for normality (Royston's AS R94 approximation),
/// valid for sample sizes 3 to 5000.
pub fn shapiro_wilk(sample: &[f64], level: Probability) -> Result<TestOutcome> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::domain(format!(
            "Shapiro-Wilk requires 3 <= n <= 5000, got {n}"
        )));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("sample must be finite".to_string()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let range = sorted[n - 1] - sorted[0];
    if range == 0.0 {
        return Err(Error::DegenerateData(
            "Shapiro-Wilk is undefined for a constant sample".to_string(),
        ));
    }
    let w = sw_statistic(&sorted);
    let p = sw_p_value(w, n);
    Ok(TestOutcome::new(TestMethod::ShapiroWilk, w, p, level))
}

// W statistic following R's swilk.c; `a` holds the coefficient half-vector
// for the lower order statistics (1-based, a[0] unused).
fn sw_statistic(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let half = n / 2;
    let mut a = vec![0.0; half + 1];
    if n == 3 {
        a[1] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        sw_coefficients(&mut a, n);
    }

    let range = sorted[n - 1] - sorted[0];
    let coef = |i: usize| -> f64 {
        // Effective coefficient of sorted position i (0-based): antisymmetric
        // in the half-vector, zero in the middle for odd n.
        let j = n - 1 - i;
        if i < j {
            -a[i + 1]
        } else if i > j {
            a[j + 1]
        } else {
            0.0
        }
    };

    let mut sx = 0.0;
    let mut sa = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        sx += v / range;
        sa += coef(i);
    }
    sx /= n as f64;
    sa /= n as f64;

    let mut ssa = 0.0;
    let mut ssx = 0.0;
    let mut sax = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let da = coef(i) - sa;
        let dx = v / range - sx;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    (1.0 - w1).clamp(0.0, 1.0)
}

// Royston (1995) coefficient corrections for n >= 4.
fn sw_coefficients(a: &mut [f64], n: usize) {
    const C1: [f64; 6] = [0.0, 0.221_157, -0.147_981, -2.071_19, 4.434_685, -2.706_056];
    const C2: [f64; 6] = [
        0.0, 0.042_981, -0.293_762, -1.752_461, 5.682_633, -3.582_633,
    ];
    let half = n / 2;
    let an25 = n as f64 + 0.25;
    let mut summ2 = 0.0;
    for (i, slot) in a.iter_mut().enumerate().take(half + 1).skip(1) {
        *slot = ppnd16((i as f64 - 0.375) / an25);
        summ2 += *slot * *slot;
    }
    summ2 *= 2.0;
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - a[1] / ssumm2;
    let (start, fac) = if n > 5 {
        let a2 = poly(&C2, rsn) - a[2] / ssumm2;
        let fac = ((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        a[2] = a2;
        (3, fac)
    } else {
        let fac = ((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (2, fac)
    };
    a[1] = a1;
    for v in a.iter_mut().take(half + 1).skip(start) {
        *v /= -fac;
    }
}

// Royston (1995) normalizing transformation of W.
fn sw_p_value(w: f64, n: usize) -> Probability {
    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.544, -0.399_78, 0.025_054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.778_57, 0.062_767, -2.032_2e-3];
    const C5: [f64; 4] = [-1.5861, -0.310_82, -0.083_751, 3.891_5e-3];
    const C6: [f64; 3] = [-0.4803, -0.082_676, 3.030_2e-3];

    if n == 3 {
        let stqr = std::f64::consts::FRAC_PI_3; // asin(sqrt(3/4))
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - stqr);
        return Probability::clamped(p);
    }
    let an = n as f64;
    let y = (1.0 - w).ln();
    let (z_input, m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return Probability::clamped(0.0);
        }
        (-(gamma - y).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        (y, poly(&C5, an.ln()), poly(&C6, an.ln()).exp())
    };
    Probability::clamped(1.0 - normal_cdf((z_input - m) / s).value())
}

// Polynomial with ascending coefficients.
fn poly(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = coeffs[coeffs.len() - 1];
    for &c in coeffs[..coeffs.len() - 1].iter().rev() {
        acc = acc * x + c;
    }
    acc
}

// Number of splits C(n, k), or None once it exceeds `cap`.
fn binomial_at_most(n: usize, k: usize, cap: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

const PERMUTATION_EXACT_CAP: u64 = 20_000;

/// Permutation test of the absolute difference between group means.
///
/// Enumerates all group splits when there are at most 20000 of them, and
/// otherwise draws `b` Monte Carlo permutations from `stream`, reporting the
/// add-one p-value `(1 + #{|diff*| >= |diff|}) / (b + 1)`.
pub fn permutation_mean_test(
    data: &TwoSampleData,
    level: Probability,
    b: u32,
    stream: &mut RngStream,
) -> TestOutcome {
    let n1 = data.n1();
    let n = n1 + data.n2();
    let n2 = data.n2();
    let observed = (mean(data.x()) - mean(data.y())).abs();
    let total: f64 = data.x().iter().chain(data.y().iter()).sum();
    let threshold = observed - 1e-12 * observed.max(1.0);

    let diff_from_group1_sum = |s: f64| -> f64 { (s / n1 as f64 - (total - s) / n2 as f64).abs() };

    let p = if let Some(_splits) = binomial_at_most(n, n1, PERMUTATION_EXACT_CAP) {
        let pooled: Vec<f64> = data.x().iter().chain(data.y().iter()).copied().collect();
        let mut extreme = 0u64;
        let mut count = 0u64;
        for_each_combination(n, n1, &mut |chosen| {
            let s: f64 = chosen.iter().map(|&i| pooled[i]).sum();
            count += 1;
            if diff_from_group1_sum(s) >= threshold {
                extreme += 1;
            }
        });
        Probability::clamped(extreme as f64 / count as f64)
    } else {
        let mut pooled: Vec<f64> = data.x().iter().chain(data.y().iter()).copied().collect();
        let mut extreme = 0u64;
        for _ in 0..b {
            // Partial Fisher-Yates: the first n1 slots become group 1.
            for i in 0..n1 {
                let j = i + stream.next_index((n - i) as u32) as usize;
                pooled.swap(i, j);
            }
            let s: f64 = pooled[..n1].iter().sum();
            if diff_from_group1_sum(s) >= threshold {
                extreme += 1;
            }
        }
        Probability::clamped((1.0 + extreme as f64) / (b as f64 + 1.0))
    };
    TestOutcome::new(TestMethod::PermutationMean, observed, p, level)
}
