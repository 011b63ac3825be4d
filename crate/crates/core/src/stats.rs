//! Hedging-error summary statistics, histogram construction, and table
//! rendering.
//!
//! `summarize` is bit-identical under permutation of its input: samples are
//! canonically ordered internally before the two-pass mean/variance sweeps,
//! so no caller-side ordering discipline is required.

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::payoffs::PayoffSpec;
use crate::C64;

/// Terminal hedging errors of the three strategies on one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorTriple {
    pub plus: Complex<f64>,
    pub minus: Complex<f64>,
    pub immunized: Complex<f64>,
}

/// How the ± strategy legs are aggregated.
///
/// Decreasing-exponential payoffs produce conjugate ± legs whose imaginary
/// parts are hedging artifacts; their tables report `Re ε±`. Everything else
/// aggregates the raw (complex) errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Raw,
    RealPart,
}

impl Convention {
    /// The table convention a payoff calls for: real coefficients with every
    /// exponent on the nonnegative imaginary axis (a decreasing-exponential
    /// mixture) reports real parts; anything else reports raw errors.
    pub fn for_payoff<T: Float>(spec: &PayoffSpec<T>) -> Self {
        let decreasing = spec
            .terms()
            .iter()
            .all(|t| t.a.im == T::zero() && t.s.re == T::zero() && t.s.im >= T::zero());
        if decreasing {
            Convention::RealPart
        } else {
            Convention::Raw
        }
    }
}

/// Sample mean and standard deviation for one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyStats {
    /// Sample mean. Under the real-part convention the ± legs carry
    /// `(mean of Re ε, 0)`.
    pub mean: Complex<f64>,
    /// Unbiased (N-1) sample standard deviation: of `Re ε` under the
    /// real-part convention, of `|ε - mean|` otherwise.
    pub std: f64,
}

/// Per-strategy hedging-error statistics over one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub plus: StrategyStats,
    pub minus: StrategyStats,
    pub immunized: StrategyStats,
    pub n: usize,
}

fn complex_stats(samples: &[C64]) -> StrategyStats {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let n = sorted.len() as f64;
    let mut sum = C64::new(0.0, 0.0);
    for z in &sorted {
        sum = sum + z;
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for z in &sorted {
        ss += (z - mean).norm_sqr();
    }
    StrategyStats {
        mean,
        std: (ss / (n - 1.0)).sqrt(),
    }
}

fn real_stats(mut samples: Vec<f64>) -> StrategyStats {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    StrategyStats {
        mean: C64::new(mean, 0.0),
        std: (ss / (n - 1.0)).sqrt(),
    }
}

/// Sample means and unbiased standard deviations of the per-path error
/// triples. Needs at least two samples; output does not depend on input
/// order, bit for bit.
pub fn summarize(errors: &[ErrorTriple], convention: Convention) -> Result<ErrorSummary> {
    let n = errors.len();
    if n < 2 {
        return Err(Error::TooFewSamples { n });
    }
    let imm: Vec<C64> = errors.iter().map(|e| e.immunized).collect();
    let (plus, minus) = match convention {
        Convention::Raw => (
            complex_stats(&errors.iter().map(|e| e.plus).collect::<Vec<_>>()),
            complex_stats(&errors.iter().map(|e| e.minus).collect::<Vec<_>>()),
        ),
        Convention::RealPart => (
            real_stats(errors.iter().map(|e| e.plus.re).collect()),
            real_stats(errors.iter().map(|e| e.minus.re).collect()),
        ),
    };
    Ok(ErrorSummary {
        plus,
        minus,
        immunized: complex_stats(&imm),
        n,
    })
}

/// The finite `[min, max]` span of a sample list. Pool the strategies'
/// samples first when histograms must share bins.
pub fn sample_range(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("histogram samples"));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &x in samples {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample { x });
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Ok((lo, hi))
}

/// Probability histogram over an explicit range: `bin_count` equal bins
/// spanning `[lo, hi]`, each reported as `(bin_center, probability)`.
/// Samples outside the range are counted in the nearest edge bin. A
/// zero-width range collapses to one unit-mass bin.
pub fn histogram_in_range(
    samples: &[f64],
    bin_count: usize,
    lo: f64,
    hi: f64,
) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("histogram samples"));
    }
    if bin_count == 0 {
        return Err(Error::InvalidParameter {
            name: "bin_count",
            value: 0.0,
            reason: "need at least one bin",
        });
    }
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(Error::InvalidParameter {
            name: "range",
            value: hi - lo,
            reason: "histogram range must be finite and ordered",
        });
    }
    if lo == hi {
        return Ok(vec![(lo, 1.0)]);
    }
    let width = (hi - lo) / bin_count as f64;
    let mut counts = vec![0usize; bin_count];
    for &x in samples {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample { x });
        }
        let idx = (((x - lo) / width).floor() as isize)
            .clamp(0, bin_count as isize - 1) as usize;
        counts[idx] += 1;
    }
    let inv = 1.0 / samples.len() as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (lo + (i as f64 + 0.5) * width, c as f64 * inv))
        .collect())
}

/// Probability histogram over the samples' own range.
pub fn histogram(samples: &[f64], bin_count: usize) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = sample_range(samples)?;
    histogram_in_range(samples, bin_count, lo, hi)
}

/// Three-significant-digit scientific notation with a signed two-digit
/// exponent, e.g. `3.10E-04`.
pub fn sci3(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.2E}");
    let (mant, exp) = s.split_once('E').expect("scientific float form");
    let e: i32 = exp.parse().expect("scientific exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}E{sign}{:02}", e.abs())
}

const ROWS: [(&str, &str); 6] = [
    ("eps_minus", "re_eps_minus"),
    ("eps_imm", "eps_imm"),
    ("eps_plus", "re_eps_plus"),
    ("std_minus", "std_minus"),
    ("std_imm", "std_imm"),
    ("std_plus", "std_plus"),
];

fn row_value(summary: &ErrorSummary, row: usize) -> f64 {
    match row {
        0 => summary.minus.mean.re,
        1 => summary.immunized.mean.re,
        2 => summary.plus.mean.re,
        3 => summary.minus.std,
        4 => summary.immunized.std,
        _ => summary.plus.std,
    }
}

fn row_label(row: usize, convention: Convention) -> &'static str {
    match convention {
        Convention::Raw => ROWS[row].0,
        Convention::RealPart => ROWS[row].1,
    }
}

fn check_table_inputs(rhos: &[f64], summaries: &[ErrorSummary]) -> Result<()> {
    if rhos.is_empty() {
        return Err(Error::EmptyInput("table columns"));
    }
    if rhos.len() != summaries.len() {
        return Err(Error::InvalidParameter {
            name: "summaries",
            value: summaries.len() as f64,
            reason: "need exactly one summary per correlation",
        });
    }
    Ok(())
}

/// Aligned-text table: one column per correlation, rows
/// `(ε̂⁻, ε̂, ε̂⁺, σ̂⁻, σ̂, σ̂⁺)`, values in three-digit scientific notation.
pub fn format_hedge_table(
    rhos: &[f64],
    summaries: &[ErrorSummary],
    convention: Convention,
) -> Result<String> {
    check_table_inputs(rhos, summaries)?;
    let mut out = String::new();
    out.push_str(&format!("{:<13}", "statistic"));
    for rho in rhos {
        out.push_str(&format!("{:>12}", format!("rho={rho:.2}")));
    }
    out.push('\n');
    for row in 0..ROWS.len() {
        out.push_str(&format!("{:<13}", row_label(row, convention)));
        for summary in summaries {
            out.push_str(&format!("{:>12}", sci3(row_value(summary, row))));
        }
        out.push('\n');
    }
    Ok(out)
}

/// The same table as CSV.
pub fn hedge_table_csv(
    rhos: &[f64],
    summaries: &[ErrorSummary],
    convention: Convention,
) -> Result<String> {
    check_table_inputs(rhos, summaries)?;
    let mut out = String::from("statistic");
    for rho in rhos {
        out.push_str(&format!(",rho={rho:.2}"));
    }
    out.push('\n');
    for row in 0..ROWS.len() {
        out.push_str(row_label(row, convention));
        for summary in summaries {
            out.push(',');
            out.push_str(&sci3(row_value(summary, row)));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::payoffs::preset_payoff;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn triple(v: f64) -> ErrorTriple {
        ErrorTriple {
            plus: c(v, 0.0),
            minus: c(v, 0.0),
            immunized: c(v, 0.0),
        }
    }

    #[test]
    fn two_point_sample_has_mean_zero_and_std_sqrt_two() {
        let summary = summarize(&[triple(-1.0), triple(1.0)], Convention::Raw).unwrap();
        assert_eq!(summary.n, 2);
        for stats in [summary.plus, summary.minus, summary.immunized] {
            assert_eq!(stats.mean, c(0.0, 0.0));
            assert_eq!(stats.std, 2.0f64.sqrt());
        }
    }

    #[test]
    fn all_zero_errors_summarize_to_zero() {
        let summary = summarize(&[triple(0.0); 5], Convention::RealPart).unwrap();
        for stats in [summary.plus, summary.minus, summary.immunized] {
            assert_eq!(stats.mean, c(0.0, 0.0));
            assert_eq!(stats.std, 0.0);
        }
    }

    #[test]
    fn summarize_needs_two_samples() {
        assert!(matches!(
            summarize(&[], Convention::Raw),
            Err(Error::TooFewSamples { n: 0 })
        ));
        assert!(matches!(
            summarize(&[triple(1.0)], Convention::Raw),
            Err(Error::TooFewSamples { n: 1 })
        ));
    }

    #[test]
    fn real_part_convention_drops_leg_imaginaries_only() {
        let errors = [
            ErrorTriple {
                plus: c(1.0, 5.0),
                minus: c(1.0, -5.0),
                immunized: c(0.5, 0.0),
            },
            ErrorTriple {
                plus: c(3.0, -7.0),
                minus: c(3.0, 7.0),
                immunized: c(1.5, 0.0),
            },
        ];
        let re = summarize(&errors, Convention::RealPart).unwrap();
        assert_eq!(re.plus.mean, c(2.0, 0.0));
        assert_eq!(re.minus.mean, c(2.0, 0.0));
        assert_eq!(re.plus.std, 2.0f64.sqrt());
        assert_eq!(re.minus.std, 2.0f64.sqrt());
        // Raw keeps the complex means and measures moduli.
        let raw = summarize(&errors, Convention::Raw).unwrap();
        assert_eq!(raw.plus.mean, c(2.0, -1.0));
        assert!((raw.plus.std - 74.0f64.sqrt()).abs() <= 1e-14);
        // The immunized leg is identical under both conventions.
        assert_eq!(re.immunized, raw.immunized);
        assert_eq!(re.immunized.mean, c(1.0, 0.0));
    }

    #[test]
    fn summarize_is_bit_identical_under_permutation() {
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut unit = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let errors: Vec<ErrorTriple> = (0..64)
            .map(|_| ErrorTriple {
                plus: c(unit(), unit()),
                minus: c(unit(), unit()),
                immunized: c(unit(), unit()),
            })
            .collect();
        let mut shuffled = errors.clone();
        shuffled.reverse();
        shuffled.rotate_left(17);
        shuffled.swap(3, 40);
        for convention in [Convention::Raw, Convention::RealPart] {
            let a = summarize(&errors, convention).unwrap();
            let b = summarize(&shuffled, convention).unwrap();
            for (x, y) in [
                (a.plus, b.plus),
                (a.minus, b.minus),
                (a.immunized, b.immunized),
            ] {
                assert_eq!(x.mean.re.to_bits(), y.mean.re.to_bits());
                assert_eq!(x.mean.im.to_bits(), y.mean.im.to_bits());
                assert_eq!(x.std.to_bits(), y.std.to_bits());
            }
        }
    }

    #[test]
    fn convention_follows_the_payoff_shape() {
        assert_eq!(
            Convention::for_payoff(&preset_payoff("exp_pos").unwrap()),
            Convention::Raw
        );
        for name in ["exp_neg", "put", "volswap"] {
            assert_eq!(
                Convention::for_payoff(&preset_payoff(name).unwrap()),
                Convention::RealPart,
                "{name}"
            );
        }
    }

    #[test]
    fn histogram_degenerate_cases_are_unit_mass() {
        assert_eq!(histogram(&[3.7], 10).unwrap(), vec![(3.7, 1.0)]);
        assert_eq!(histogram(&[2.0, 2.0, 2.0], 4).unwrap(), vec![(2.0, 1.0)]);
    }

    #[test]
    fn histogram_uniform_grid_gives_exact_tenths() {
        let samples: Vec<f64> = (0..10).map(|j| (j as f64 + 0.5) / 10.0).collect();
        let bins = histogram(&samples, 10).unwrap();
        assert_eq!(bins.len(), 10);
        for (_, p) in &bins {
            assert_eq!(*p, 0.1);
        }
    }

    #[test]
    fn histogram_mass_is_conserved_and_bins_shared_in_a_pooled_range() {
        let mut seed = 42u64;
        let mut unit = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        let first: Vec<f64> = (0..997).map(|_| unit()).collect();
        let second: Vec<f64> = (0..503).map(|_| unit() * 0.5 + 0.3).collect();
        let pooled: Vec<f64> = first.iter().chain(&second).copied().collect();
        let (lo, hi) = sample_range(&pooled).unwrap();
        let ha = histogram_in_range(&first, 50, lo, hi).unwrap();
        let hb = histogram_in_range(&second, 50, lo, hi).unwrap();
        for (a, b) in ha.iter().zip(&hb) {
            assert_eq!(a.0, b.0);
        }
        for h in [&ha, &hb] {
            let mass: f64 = h.iter().map(|(_, p)| p).sum();
            assert!((mass - 1.0).abs() <= 1e-12, "mass {mass}");
        }
        // Extremes land in the edge bins rather than out of range.
        assert!(ha.first().unwrap().1 > 0.0);
        assert!(ha.last().unwrap().1 > 0.0);
    }

    #[test]
    fn histogram_rejects_bad_input() {
        assert!(matches!(
            histogram(&[], 10),
            Err(Error::EmptyInput("histogram samples"))
        ));
        assert!(matches!(
            histogram(&[1.0, 2.0], 0),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            histogram(&[1.0, f64::NAN], 4),
            Err(Error::NonFiniteSample { .. })
        ));
        assert!(matches!(
            histogram_in_range(&[1.0], 4, 2.0, 1.0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn sci3_matches_the_table_format() {
        assert_eq!(sci3(3.10e-4), "3.10E-04");
        assert_eq!(sci3(-5.23e-3), "-5.23E-03");
        assert_eq!(sci3(1.0), "1.00E+00");
        assert_eq!(sci3(0.0), "0.00E+00");
        assert_eq!(sci3(-0.0), "0.00E+00");
        assert_eq!(sci3(2.5e12), "2.50E+12");
        assert_eq!(sci3(9.999e-5), "1.00E-04");
    }

    #[test]
    fn tables_render_rows_by_convention() {
        let s = StrategyStats {
            mean: c(3.10e-4, 0.0),
            std: 9.55e-5,
        };
        let summary = ErrorSummary {
            plus: s,
            minus: StrategyStats {
                mean: c(-5.23e-3, 0.0),
                std: 1.91e-3,
            },
            immunized: StrategyStats {
                mean: c(1.0e-6, 0.0),
                std: 1.52e-5,
            },
            n: 4,
        };
        let rhos = [-0.99, 0.66];
        let text = format_hedge_table(&rhos, &[summary, summary], Convention::Raw).unwrap();
        assert!(text.starts_with("statistic"));
        assert!(text.contains("rho=-0.99"));
        assert!(text.contains("rho=0.66"));
        assert!(text.contains("eps_minus"));
        assert!(text.contains("-5.23E-03"));
        assert_eq!(text.lines().count(), 7);
        let re_text = format_hedge_table(&rhos, &[summary, summary], Convention::RealPart).unwrap();
        assert!(re_text.contains("re_eps_minus"));
        assert!(re_text.contains("re_eps_plus"));
        let csv = hedge_table_csv(&rhos, &[summary, summary], Convention::Raw).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "statistic,rho=-0.99,rho=0.66");
        assert_eq!(
            lines.next().unwrap(),
            "eps_minus,-5.23E-03,-5.23E-03"
        );
        // Length mismatch and empty grids are rejected.
        assert!(hedge_table_csv(&rhos, &[summary], Convention::Raw).is_err());
        assert!(format_hedge_table(&[], &[], Convention::Raw).is_err());
    }
}
