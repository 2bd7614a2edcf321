//! Paired hypothesis testing and the multi-comparison matrix.

use crate::error::{Error, Result};

/// Outcome of a Wilcoxon signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`: the smaller of the positive- and negative-rank sums.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Non-zero differences used by the test.
    pub n_used: usize,
    /// Whether the exact null distribution was used (`n_used <= 20`).
    pub exact: bool,
    /// True when every paired difference was zero; `p_value` is then 1.
    pub degenerate: bool,
}

/// Two-sided Wilcoxon signed-rank test for paired samples.
///
/// Zero differences are dropped, tied absolute differences share average
/// ranks. For up to 20 remaining differences the p-value is exact over all
/// 2^n sign assignments; beyond that a normal approximation with tie and
/// continuity corrections is used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n_used: 0,
            exact: true,
            degenerate: true,
        });
    }

    // Rank |d| ascending with average ranks for ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0.0; n];
    let mut tie_sizes: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        tie_sizes.push(j - i);
        i = j;
    }

    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let (p_value, exact) = if n <= 20 {
        (exact_two_sided_p(&ranks, statistic), true)
    } else {
        (normal_two_sided_p(w_plus, n, &tie_sizes), false)
    };
    Ok(WilcoxonResult {
        statistic,
        p_value: p_value.clamp(0.0, 1.0),
        n_used: n,
        exact,
        degenerate: false,
    })
}

// Exact two-sided tail probability of the signed-rank sum distribution:
// P(T <= w) + P(T >= total - w), computed by dynamic programming over
// doubled ranks (average ranks are half-integers).
fn exact_two_sided_p(ranks: &[f64], w_min: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let n_assignments = 2f64.powi(ranks.len() as i32);
    let w2 = (2.0 * w_min).round() as usize;
    let low: f64 = counts[..=w2.min(total)].iter().sum();
    let high: f64 = counts[total.saturating_sub(w2)..].iter().sum();
    (low + high) / n_assignments
}

fn normal_two_sided_p(w_plus: f64, n: usize, tie_sizes: &[usize]) -> f64 {
    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let d = w_plus - mu;
    // Continuity correction toward the mean.
    let z = (d - 0.5 * d.signum()) / var.sqrt();
    2.0 * (1.0 - standard_normal_cdf(z.abs()))
}

pub(crate) fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

// Complementary error function, rational approximation with |error| < 1.2e-7
// (Numerical Recipes erfcc).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// One cell of the multi-comparison matrix: row method compared against
/// column method over paired accuracy vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct McmCell {
    pub mean_diff: f64,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub p_value: f64,
    /// Wilcoxon p below 0.05.
    pub significant: bool,
}

/// Pairwise comparison table over methods with paired accuracy vectors.
#[derive(Debug, Clone)]
pub struct Mcm {
    methods: Vec<String>,
    cells: Vec<McmCell>, // row-major
}

/// Builds the multi-comparison matrix. All accuracy vectors must be paired
/// (equal length, same experiment order).
pub fn mcm(entries: &[(String, Vec<f64>)]) -> Result<Mcm> {
    if entries.is_empty() {
        return Err(Error::EmptyInput("mcm needs at least one method".into()));
    }
    let len = entries[0].1.len();
    if len == 0 {
        return Err(Error::EmptyInput("mcm needs at least one experiment".into()));
    }
    for (name, v) in entries {
        if v.len() != len {
            return Err(Error::InvalidParameter(format!(
                "method {name} has {} experiments, expected {len}",
                v.len()
            )));
        }
    }
    let m = entries.len();
    let mut cells = Vec::with_capacity(m * m);
    for (_, a) in entries {
        for (_, b) in entries {
            let mean_a = a.iter().sum::<f64>() / len as f64;
            let mean_b = b.iter().sum::<f64>() / len as f64;
            let mut wins = 0;
            let mut ties = 0;
            let mut losses = 0;
            for (x, y) in a.iter().zip(b) {
                if x > y {
                    wins += 1;
                } else if x < y {
                    losses += 1;
                } else {
                    ties += 1;
                }
            }
            let p_value = wilcoxon_signed_rank(a, b)?.p_value;
            cells.push(McmCell {
                mean_diff: mean_a - mean_b,
                wins,
                ties,
                losses,
                p_value,
                significant: p_value < 0.05,
            });
        }
    }
    Ok(Mcm { methods: entries.iter().map(|(n, _)| n.clone()).collect(), cells })
}

impl Mcm {
    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn cell(&self, row: usize, col: usize) -> &McmCell {
        &self.cells[row * self.methods.len() + col]
    }

    /// Long-format CSV: one row per ordered method pair.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("method_a,method_b,mean_diff,wins,ties,losses,p_value,significant\n");
        for (i, a) in self.methods.iter().enumerate() {
            for (j, b) in self.methods.iter().enumerate() {
                let c = self.cell(i, j);
                out.push_str(&format!(
                    "{a},{b},{},{},{},{},{},{}\n",
                    c.mean_diff, c.wins, c.ties, c.losses, c.p_value, c.significant
                ));
            }
        }
        out
    }

    /// Markdown table with one cell per pair showing mean difference,
    /// wins/ties/losses and the Wilcoxon p-value; significant cells (p < 0.05)
    /// are shown in bold.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("|  |");
        for m in &self.methods {
            out.push_str(&format!(" {m} |"));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.methods {
            out.push_str("---|");
        }
        out.push('\n');
        for (i, a) in self.methods.iter().enumerate() {
            out.push_str(&format!("| **{a}** |"));
            for j in 0..self.methods.len() {
                let c = self.cell(i, j);
                let body = format!(
                    "{:+.4}<br>{}/{}/{}<br>p={:.4}",
                    c.mean_diff, c.wins, c.ties, c.losses, c.p_value
                );
                if c.significant {
                    out.push_str(&format!(" **{body}** |"));
                } else {
                    out.push_str(&format!(" {body} |"));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Literal enumeration of all 2^n sign assignments.
    pub(crate) fn enumeration_oracle(ranks: &[f64], w_min: f64) -> f64 {
        let n = ranks.len();
        let total: f64 = ranks.iter().sum();
        let mut low = 0usize;
        let mut high = 0usize;
        for mask in 0u32..(1 << n) {
            let t: f64 = (0..n)
                .filter(|&i| mask >> i & 1 == 1)
                .map(|i| ranks[i])
                .sum();
            if t <= w_min + 1e-12 {
                low += 1;
            }
            if t >= total - w_min - 1e-12 {
                high += 1;
            }
        }
        (low + high) as f64 / (1u64 << n) as f64
    }

    #[test]
    fn identical_samples_are_degenerate() {
        let x = [0.4, 0.5, 0.6];
        let r = wilcoxon_signed_rank(&x, &x).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.n_used, 0);
    }

    #[test]
    fn all_negative_differences_n5() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.exact);
        assert!((r.p_value - 2.0 / 32.0).abs() < 1e-12, "p = {}", r.p_value);
    }

    #[test]
    fn exact_branch_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 1..=12usize {
            for _ in 0..30 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3i32..=3) as f64).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3i32..=3) as f64).collect();
                let r = wilcoxon_signed_rank(&x, &y).unwrap();
                if r.degenerate {
                    continue;
                }
                // Recompute ranks with the same tie convention for the oracle.
                let diffs: Vec<f64> = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| a - b)
                    .filter(|d| *d != 0.0)
                    .collect();
                let mut order: Vec<usize> = (0..diffs.len()).collect();
                order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
                let mut ranks = vec![0.0; diffs.len()];
                let mut i = 0;
                while i < diffs.len() {
                    let mut j = i + 1;
                    while j < diffs.len() && diffs[order[j]].abs() == diffs[order[i]].abs() {
                        j += 1;
                    }
                    for &idx in &order[i..j] {
                        ranks[idx] = (i + 1 + j) as f64 / 2.0;
                    }
                    i = j;
                }
                let oracle = enumeration_oracle(&ranks, r.statistic).min(1.0);
                assert!(
                    (r.p_value - oracle).abs() < 1e-9,
                    "n={n}: exact {} vs enumeration {oracle}",
                    r.p_value
                );
            }
        }
    }

    #[test]
    fn approximation_close_to_exact_at_n20() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..50 {
            let x: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let exact = wilcoxon_signed_rank(&x, &y).unwrap();
            assert!(exact.exact);
            // Rebuild the approximate p from the internals.
            let diffs: Vec<f64> =
                x.iter().zip(&y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
            let n = diffs.len();
            let w_plus = {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
                let mut ranks = vec![0.0; n];
                for (pos, &idx) in order.iter().enumerate() {
                    ranks[idx] = (pos + 1) as f64; // continuous data: no ties
                }
                diffs
                    .iter()
                    .zip(&ranks)
                    .filter(|(d, _)| **d > 0.0)
                    .map(|(_, r)| r)
                    .sum::<f64>()
            };
            let approx = normal_two_sided_p(w_plus, n, &vec![1; n]).clamp(0.0, 1.0);
            assert!(
                (approx - exact.p_value).abs() < 0.02,
                "approx {} vs exact {}",
                approx,
                exact.p_value
            );
        }
    }

    #[test]
    fn p_value_invariant_under_positive_scaling() {
        // Integer-valued samples so scaling preserves the ties exactly.
        let x = [1.0, 5.0, 9.0, 3.0, 8.0, 2.0, 7.0];
        let y = [2.0, 4.0, 8.0, 5.0, 6.0, 1.0, 9.0];
        let base = wilcoxon_signed_rank(&x, &y).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * 37.0).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * 37.0).collect();
        let scaled = wilcoxon_signed_rank(&xs, &ys).unwrap();
        assert_eq!(base.p_value, scaled.p_value);
        assert_eq!(base.statistic, scaled.statistic);
        assert!(base.p_value > 0.0 && base.p_value <= 1.0);
    }

    #[test]
    fn mcm_diagonal_and_antisymmetry() {
        let entries = vec![
            ("a".to_string(), vec![0.9, 0.8, 0.7, 0.95]),
            ("b".to_string(), vec![0.5, 0.6, 0.7, 0.4]),
        ];
        let m = mcm(&entries).unwrap();
        let diag = m.cell(0, 0);
        assert_eq!(diag.mean_diff, 0.0);
        assert_eq!(diag.ties, 4);
        assert_eq!(diag.p_value, 1.0);
        assert_eq!(m.cell(0, 1).mean_diff, -m.cell(1, 0).mean_diff);
        assert_eq!(m.cell(0, 1).wins, m.cell(1, 0).losses);
    }

    #[test]
    fn mcm_strict_dominance_p_value() {
        let entries = vec![
            ("a".to_string(), vec![0.9, 0.8, 0.85, 0.95, 0.7, 0.75]),
            ("b".to_string(), vec![0.5, 0.6, 0.7, 0.4, 0.5, 0.6]),
        ];
        let m = mcm(&entries).unwrap();
        let c = m.cell(0, 1);
        assert_eq!(c.wins, 6);
        assert_eq!(c.losses, 0);
        assert!((c.p_value - 2.0 / 64.0).abs() < 1e-12);
        assert!(c.significant);
    }

    #[test]
    fn mcm_rejects_unpaired_lengths() {
        let entries = vec![
            ("a".to_string(), vec![0.9, 0.8]),
            ("b".to_string(), vec![0.5]),
        ];
        assert!(mcm(&entries).is_err());
    }

    #[test]
    fn mcm_renders_csv_and_markdown() {
        let entries = vec![
            ("saai".to_string(), vec![0.9, 0.8, 0.85]),
            ("ssc".to_string(), vec![0.5, 0.6, 0.7]),
        ];
        let m = mcm(&entries).unwrap();
        let csv = m.to_csv();
        assert!(csv.starts_with("method_a,method_b,"));
        assert_eq!(csv.lines().count(), 5);
        let md = m.to_markdown();
        assert!(md.contains("| **saai** |"));
    }

    #[test]
    fn normal_cdf_reference_values() {
        // The erfc approximation is good to ~1.2e-7.
        assert!((standard_normal_cdf(0.0) - 0.5).abs() < 1e-6);
        assert!((standard_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
        assert!((standard_normal_cdf(-1.0) - 0.15865525).abs() < 1e-6);
    }
}
