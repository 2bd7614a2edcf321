//! Synthetic greenhouse temperature data with injected anomalies.
//!
//! The base signal mimics an illumination-controlled greenhouse temperature:
//! a 6 h night phase at 20 degC, a 1 h warm-up whose thermal response lags and
//! then overshoots the 30 degC daytime target by about 1.5 degC before
//! settling, 16 h of daytime at 30 degC and a 1 h exponential cool-down back
//! to 20 degC, repeating daily at one-minute resolution. Independent AR(1)
//! noise is added per dimension, and six anomaly types are injected with
//! randomized start, duration and intensity.
//!
//! Randomness is fully determined by the config seed through per-purpose
//! substreams (see [`crate::rng`]): one stream per dimension for noise, one
//! per (class, event slot) for the synchronization decision, and one per
//! (class, event slot, dimension) for placement draws. Adding a dimension
//! therefore leaves the draws of existing dimensions untouched except when a
//! synchronized placement has to be re-drawn around an occupied window.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::anomaly::AnomalyInterval;
use crate::elastic::Sequence;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::series::MultivariateSeries;

pub const MINUTES_PER_DAY: usize = 1440;

/// The six injected anomaly types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnomalyClass {
    LongDayPeak,
    ShortDayPeak,
    NightDrop,
    DayDrop,
    NightPeak,
    CooldownPeak,
}

impl AnomalyClass {
    pub const ALL: [AnomalyClass; 6] = [
        AnomalyClass::LongDayPeak,
        AnomalyClass::ShortDayPeak,
        AnomalyClass::NightDrop,
        AnomalyClass::DayDrop,
        AnomalyClass::NightPeak,
        AnomalyClass::CooldownPeak,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).unwrap()
    }

    /// Start-time window (minutes of day, inclusive), duration range
    /// (minutes, inclusive) and signed peak intensity range (degC).
    pub fn spec(self) -> AnomalyClassSpec {
        match self {
            AnomalyClass::LongDayPeak => AnomalyClassSpec {
                name: "long-day-peak",
                start_window: (240, 380), // 04:00 - 06:20
                duration: (240, 245),
                intensity: (10.0, 11.0),
            },
            AnomalyClass::ShortDayPeak => AnomalyClassSpec {
                name: "short-day-peak",
                start_window: (420, 500), // 07:00 - 08:20
                duration: (120, 125),
                intensity: (8.0, 9.0),
            },
            AnomalyClass::NightDrop => AnomalyClassSpec {
                name: "night-drop",
                start_window: (60, 100), // 01:00 - 01:40
                duration: (10, 11),
                intensity: (-5.0, -4.0),
            },
            AnomalyClass::DayDrop => AnomalyClassSpec {
                name: "day-drop",
                start_window: (780, 950), // 13:00 - 15:50
                duration: (60, 65),
                intensity: (-5.0, -4.0),
            },
            AnomalyClass::NightPeak => AnomalyClassSpec {
                name: "night-peak",
                start_window: (60, 100), // 01:00 - 01:40
                duration: (10, 11),
                intensity: (5.0, 6.0),
            },
            AnomalyClass::CooldownPeak => AnomalyClassSpec {
                name: "cooldown-peak",
                start_window: (1320, 1350), // 22:00 - 22:30
                duration: (20, 21),
                intensity: (5.0, 6.0),
            },
        }
    }
}

impl std::str::FromStr for AnomalyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnomalyClass::ALL
            .iter()
            .find(|c| c.spec().name == s)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown anomaly class '{s}'")))
    }
}

impl std::fmt::Display for AnomalyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.spec().name)
    }
}

/// Parametrization of one anomaly type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyClassSpec {
    pub name: &'static str,
    pub start_window: (usize, usize),
    pub duration: (usize, usize),
    pub intensity: (f64, f64),
}

/// Generator configuration. Defaults: 30 days, 2 dimensions, all six
/// classes, fully synchronized injections, no lag, 3 events per class and
/// the standard noise parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_days: usize,
    pub dims: usize,
    pub classes: Vec<AnomalyClass>,
    /// Probability that an event slot is injected synchronized across all
    /// dimensions.
    pub r_sync: f64,
    /// Circular shift of the clean profile applied to dimensions 2..D
    /// relative to dimension 1.
    pub lag_minutes: i64,
    pub events_per_class: usize,
    pub noise_std: f64,
    pub noise_corr: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_days: 30,
            dims: 2,
            classes: AnomalyClass::ALL.to_vec(),
            r_sync: 1.0,
            lag_minutes: 0,
            events_per_class: 3,
            noise_std: 0.5,
            noise_corr: 0.5,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 {
            return Err(Error::InvalidParameter("n_days must be >= 1".into()));
        }
        if self.dims == 0 {
            return Err(Error::InvalidParameter("dims must be >= 1".into()));
        }
        if self.classes.is_empty() || self.classes.len() > 6 {
            return Err(Error::InvalidParameter(format!(
                "need between 1 and 6 anomaly classes, got {}",
                self.classes.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.classes {
            if !seen.insert(c.index()) {
                return Err(Error::InvalidParameter(format!("duplicate class {c}")));
            }
        }
        if !(0.0..=1.0).contains(&self.r_sync) {
            return Err(Error::InvalidParameter(format!(
                "r_sync must be in [0, 1], got {}",
                self.r_sync
            )));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter("noise_std must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.noise_corr) {
            return Err(Error::InvalidParameter(format!(
                "noise_corr must be in [0, 1), got {}",
                self.noise_corr
            )));
        }
        Ok(())
    }
}

// Daily clean profile (degC) at minute-of-day resolution.
fn daily_profile(minute_of_day: usize) -> f64 {
    const NIGHT_END: usize = 360; // 6 h at 20
    const WARMUP_END: usize = 420; // 1 h warm-up
    const DAY_END: usize = 1380; // 16 h at 30
    match minute_of_day {
        m if m < NIGHT_END => 20.0,
        m if m < WARMUP_END => {
            let t = (m - NIGHT_END) as f64;
            // Thermal lag: logistic rise peaking 1.5 degC above the daytime
            // target at minute 56, then settling onto the 30 degC plateau.
            const CENTER: f64 = 48.0;
            const WIDTH: f64 = 4.0;
            const PEAK_T: f64 = 56.0;
            if t <= PEAK_T {
                let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
                let amplitude = 11.5 / sig((PEAK_T - CENTER) / WIDTH);
                20.0 + amplitude * sig((t - CENTER) / WIDTH)
            } else {
                let v = (t - PEAK_T) / (60.0 - PEAK_T);
                30.0 + 1.5 * (v * std::f64::consts::FRAC_PI_2).cos()
            }
        }
        m if m < DAY_END => 30.0,
        m => {
            let t = (m - DAY_END) as f64;
            // Passive exponential cool-down back to the night level.
            20.0 + 10.0 * (-t / 6.0).exp()
        }
    }
}

/// Deterministic noiseless daily temperature profile repeated for `n_days`
/// at one-minute resolution.
pub fn base_signal(n_days: usize) -> Result<Sequence> {
    if n_days == 0 {
        return Err(Error::InvalidParameter("n_days must be >= 1".into()));
    }
    let day: Vec<f64> = (0..MINUTES_PER_DAY).map(daily_profile).collect();
    let mut values = Vec::with_capacity(n_days * MINUTES_PER_DAY);
    for _ in 0..n_days {
        values.extend_from_slice(&day);
    }
    Sequence::new(values)
}

/// AR(1) noise `x_t = corr * x_{t-1} + e_t` with the innovation scaled so
/// the stationary standard deviation equals `std`; starts in the stationary
/// distribution.
pub fn red_noise(length: usize, std: f64, corr: f64, seed: u64) -> Result<Sequence> {
    if length == 0 {
        return Err(Error::InvalidParameter("length must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&corr) {
        return Err(Error::InvalidParameter(format!(
            "corr must be in [0, 1), got {corr}"
        )));
    }
    if !(std >= 0.0) {
        return Err(Error::InvalidParameter(format!("std must be >= 0, got {std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Sequence::new(ar1(length, std, corr, &mut rng))
}

fn ar1(length: usize, std: f64, corr: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if std == 0.0 {
        return vec![0.0; length];
    }
    let innovation_std = std * (1.0 - corr * corr).sqrt();
    let start = Normal::new(0.0, std).expect("valid std");
    let step = Normal::new(0.0, innovation_std).expect("valid std");
    let mut out = Vec::with_capacity(length);
    let mut x = start.sample(rng);
    out.push(x);
    for _ in 1..length {
        x = corr * x + step.sample(rng);
        out.push(x);
    }
    out
}

// Smooth additive deformation: half-sine over the interval, peaking at the
// drawn intensity, nonzero at every sample of [a, b].
fn bump(len: usize, intensity: f64, offset: usize) -> f64 {
    intensity * (std::f64::consts::PI * (offset as f64 + 0.5) / len as f64).sin()
}

#[derive(Debug, Clone, Copy)]
struct Placement {
    a: usize,
    b: usize,
    intensity: f64,
}

fn draw_placement(
    spec: &AnomalyClassSpec,
    day: usize,
    rng: &mut ChaCha8Rng,
) -> Placement {
    let start = rng.random_range(spec.start_window.0..=spec.start_window.1);
    let duration = rng.random_range(spec.duration.0..=spec.duration.1);
    let intensity = rng.random_range(spec.intensity.0..=spec.intensity.1);
    let a = day * MINUTES_PER_DAY + start;
    Placement { a, b: a + duration - 1, intensity }
}

fn apply_bump(values: &mut [f64], p: &Placement) {
    let len = p.b - p.a + 1;
    for o in 0..len {
        values[p.a + o] += bump(len, p.intensity, o);
    }
}

fn overlaps(a1: usize, b1: usize, a2: usize, b2: usize) -> bool {
    a1 <= b2 && a2 <= b1
}

/// Injects one anomaly of the given class into a copy of `signal` on the
/// chosen day, drawing start, duration and intensity uniformly from the
/// class ranges. Returns the deformed signal and the ground-truth interval
/// (dimension 0, no id assigned yet).
pub fn inject_anomaly(
    signal: &Sequence,
    class: AnomalyClass,
    day: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Sequence, AnomalyInterval)> {
    let spec = class.spec();
    let p = draw_placement(&spec, day, rng);
    if p.b >= signal.len() {
        return Err(Error::InvalidInterval(format!(
            "anomaly [{}, {}] exceeds series end {}",
            p.a,
            p.b,
            signal.len()
        )));
    }
    let mut values = signal.as_slice().to_vec();
    apply_bump(&mut values, &p);
    let interval = AnomalyInterval::new(0, 0, p.a, p.b, Some(class.index()), None)?;
    Ok((Sequence::new(values)?, interval))
}

// Substream domains for seed derivation.
const DOMAIN_NOISE: u64 = 1;
const DOMAIN_SYNC: u64 = 2;
const DOMAIN_PLACE: u64 = 3;

const MAX_PLACEMENT_TRIES: usize = 200;
// Unsynchronized placements of the same event slot are re-drawn while their
// overlap ratio against another dimension's placement reaches this value
// (the default synchronization threshold).
const UNSYNC_MAX_OVERLAP: f64 = 0.5;

/// Generates a multivariate series with injected, labelled anomalies.
///
/// Dimension `d >= 2` carries dimension 1's clean profile circularly shifted
/// by `lag_minutes` plus its own independent noise. Each (class, event slot)
/// is synchronized with probability `r_sync`: one placement injected at the
/// same absolute position in every dimension (pairwise overlap ratio 1);
/// otherwise each dimension draws its own placement, re-drawn when it
/// overlaps another dimension's placement of the same slot. Ground-truth
/// intervals never overlap within a dimension. Interval ids are assigned in
/// `(dim, a)` lexicographic order.
pub fn generate(config: &GeneratorConfig) -> Result<(MultivariateSeries, Vec<AnomalyInterval>)> {
    config.validate()?;
    let n = config.n_days * MINUTES_PER_DAY;
    let base = base_signal(config.n_days)?;

    // Clean profiles: dimension 0 unshifted, the rest lag-shifted.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(config.dims);
    columns.push(base.as_slice().to_vec());
    for _ in 1..config.dims {
        let mut shifted = Vec::with_capacity(n);
        for t in 0..n {
            let src = (t as i64 - config.lag_minutes).rem_euclid(n as i64) as usize;
            shifted.push(base.as_slice()[src]);
        }
        columns.push(shifted);
    }

    // Event injection.
    let mut occupied: Vec<Vec<(usize, usize)>> = vec![Vec::new(); config.dims];
    let mut intervals: Vec<(usize, Placement, usize)> = Vec::new(); // (dim, placement, class index)
    for class in &config.classes {
        let spec = class.spec();
        let ci = class.index() as u64;
        for slot in 0..config.events_per_class {
            let mut sync_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seed,
                &[DOMAIN_SYNC, ci, slot as u64],
            ));
            let synchronized = sync_rng.random::<f64>() < config.r_sync;
            if synchronized {
                // One position for all dimensions (identical start and
                // duration, so pairwise omega = 1); the intensity is drawn
                // per dimension, as different sensors see the same event at
                // different magnitudes.
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    config.seed,
                    &[DOMAIN_PLACE, ci, slot as u64, u64::MAX],
                ));
                let mut placed = false;
                for _ in 0..MAX_PLACEMENT_TRIES {
                    let day = rng.random_range(0..config.n_days);
                    let p = draw_placement(&spec, day, &mut rng);
                    let free = occupied
                        .iter()
                        .all(|occ| occ.iter().all(|&(a, b)| !overlaps(p.a, p.b, a, b)));
                    if free {
                        for d in 0..config.dims {
                            let mut dim_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                                config.seed,
                                &[DOMAIN_PLACE, ci, slot as u64, d as u64],
                            ));
                            let intensity =
                                dim_rng.random_range(spec.intensity.0..=spec.intensity.1);
                            let p_dim = Placement { intensity, ..p };
                            apply_bump(&mut columns[d], &p_dim);
                            occupied[d].push((p_dim.a, p_dim.b));
                            intervals.push((d, p_dim, class.index()));
                        }
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    return Err(Error::Infeasible(format!(
                        "could not place synchronized {class} event {slot} after {MAX_PLACEMENT_TRIES} tries"
                    )));
                }
            } else {
                // Independent placements per dimension; re-draw on same-slot
                // cross-dimension overlap so the slot stays unsynchronized.
                let mut slot_placements: Vec<Placement> = Vec::with_capacity(config.dims);
                for d in 0..config.dims {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                        config.seed,
                        &[DOMAIN_PLACE, ci, slot as u64, d as u64],
                    ));
                    let mut placed = false;
                    for _ in 0..MAX_PLACEMENT_TRIES {
                        let day = rng.random_range(0..config.n_days);
                        let p = draw_placement(&spec, day, &mut rng);
                        let free = occupied[d].iter().all(|&(a, b)| !overlaps(p.a, p.b, a, b));
                        let unsynced = slot_placements.iter().all(|q| {
                            let num = p.b.min(q.b) as f64 - p.a.max(q.a) as f64;
                            let den = p.b.max(q.b) as f64 - p.a.min(q.a) as f64;
                            num / den < UNSYNC_MAX_OVERLAP
                        });
                        if free && unsynced {
                            apply_bump(&mut columns[d], &p);
                            occupied[d].push((p.a, p.b));
                            intervals.push((d, p, class.index()));
                            slot_placements.push(p);
                            placed = true;
                            break;
                        }
                    }
                    if !placed {
                        return Err(Error::Infeasible(format!(
                            "could not place unsynchronized {class} event {slot} in dimension {d} after {MAX_PLACEMENT_TRIES} tries"
                        )));
                    }
                }
            }
        }
    }

    // Independent per-dimension noise.
    for (d, col) in columns.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            config.seed,
            &[DOMAIN_NOISE, d as u64],
        ));
        for (v, e) in col.iter_mut().zip(ar1(n, config.noise_std, config.noise_corr, &mut rng)) {
            *v += e;
        }
    }

    // Stable ids in (dim, a) order.
    intervals.sort_by_key(|&(dim, p, _)| (dim, p.a));
    let anomalies: Vec<AnomalyInterval> = intervals
        .iter()
        .enumerate()
        .map(|(id, &(dim, p, class))| AnomalyInterval {
            id,
            dim,
            a: p.a,
            b: p.b,
            true_class: Some(class),
            cluster: None,
        })
        .collect();

    let series = MultivariateSeries::new(0, 1, columns)?;
    Ok((series, anomalies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extmetrics::pearson;

    #[test]
    fn base_signal_phase_values() {
        let s = base_signal(2).unwrap();
        // Inside the night phase.
        assert_eq!(s.as_slice()[60], 20.0);
        // Mid-day plateau.
        assert_eq!(s.as_slice()[12 * 60], 30.0);
        // Daily periodicity.
        for m in 0..MINUTES_PER_DAY {
            assert_eq!(s.as_slice()[m], s.as_slice()[m + MINUTES_PER_DAY]);
        }
    }

    #[test]
    fn base_signal_overshoots_then_settles() {
        let s = base_signal(1).unwrap();
        let warmup = &s.as_slice()[360..420];
        let peak = warmup.iter().cloned().fold(f64::MIN, f64::max);
        assert!(peak > 31.0 && peak < 32.0, "overshoot peak {peak}");
        // Settling toward the plateau at the end of the warm-up hour, and on
        // it from the first daytime minute.
        assert!(s.as_slice()[419] > 30.0 && s.as_slice()[419] < 31.0);
        assert_eq!(s.as_slice()[420], 30.0);
        // Warm-up starts from the night level.
        assert!((s.as_slice()[360] - 20.0).abs() < 0.01);
        // Cool-down ends near the night level.
        assert!((s.as_slice()[1439] - 20.0).abs() < 0.01);
    }

    #[test]
    fn red_noise_zero_std_is_zero() {
        let s = red_noise(100, 0.0, 0.5, 1).unwrap();
        assert!(s.as_slice().iter().all(|&v| v == 0.0));
    }

    fn sample_std(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }

    fn lag1_autocorr(x: &[f64]) -> f64 {
        pearson(&x[..x.len() - 1], &x[1..]).unwrap()
    }

    #[test]
    fn white_noise_has_no_lag1_correlation() {
        let s = red_noise(100_000, 0.5, 0.0, 7).unwrap();
        let r = lag1_autocorr(s.as_slice());
        assert!(r.abs() < 0.05, "lag-1 autocorrelation {r}");
    }

    #[test]
    fn red_noise_matches_stationary_statistics() {
        let s = red_noise(100_000, 0.5, 0.5, 42).unwrap();
        let std = sample_std(s.as_slice());
        assert!((0.49..=0.51).contains(&std), "std {std}");
        let r = lag1_autocorr(s.as_slice());
        assert!((0.48..=0.52).contains(&r), "autocorr {r}");
    }

    #[test]
    fn injection_is_additive_and_inside_bounds() {
        let clean = base_signal(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for class in AnomalyClass::ALL {
            let (dirty, iv) = inject_anomaly(&clean, class, 1, &mut rng).unwrap();
            assert_eq!(iv.true_class, Some(class.index()));
            let spec = class.spec();
            let start_min = iv.a - MINUTES_PER_DAY;
            assert!((spec.start_window.0..=spec.start_window.1).contains(&start_min));
            assert!((spec.duration.0..=spec.duration.1).contains(&iv.len()));
            for (i, (c, d)) in clean.as_slice().iter().zip(dirty.as_slice()).enumerate() {
                let delta = d - c;
                if i < iv.a || i > iv.b {
                    assert_eq!(delta, 0.0, "deformation outside [a, b] at {i}");
                } else {
                    assert!(delta != 0.0, "zero deformation inside [a, b] at {i}");
                    if spec.intensity.0 < 0.0 {
                        assert!(delta < 0.0);
                    } else {
                        assert!(delta > 0.0);
                    }
                }
            }
            let peak = (iv.a..=iv.b)
                .map(|i| (dirty.as_slice()[i] - clean.as_slice()[i]).abs())
                .fold(f64::MIN, f64::max);
            assert!(peak <= spec.intensity.0.abs().max(spec.intensity.1.abs()) + 1e-12);
        }
    }

    #[test]
    fn injection_past_series_end_errors() {
        let clean = base_signal(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(inject_anomaly(&clean, AnomalyClass::NightDrop, 1, &mut rng).is_err());
    }

    #[test]
    fn generate_is_deterministic() {
        let config = GeneratorConfig { n_days: 6, seed: 31, ..Default::default() };
        let (s1, a1) = generate(&config).unwrap();
        let (s2, a2) = generate(&config).unwrap();
        assert_eq!(a1, a2);
        let mut csv1 = Vec::new();
        let mut csv2 = Vec::new();
        s1.write_csv(&mut csv1).unwrap();
        s2.write_csv(&mut csv2).unwrap();
        assert_eq!(csv1, csv2);
    }

    #[test]
    fn ids_are_assigned_in_dim_then_start_order() {
        let config = GeneratorConfig { n_days: 10, seed: 9, ..Default::default() };
        let (_, anoms) = generate(&config).unwrap();
        for w in anoms.windows(2) {
            assert!(w[1].id == w[0].id + 1);
            assert!((w[0].dim, w[0].a) < (w[1].dim, w[1].a));
        }
    }

    #[test]
    fn intervals_never_overlap_within_a_dimension() {
        for seed in 0..20 {
            let config = GeneratorConfig {
                n_days: 16,
                r_sync: 0.5,
                seed,
                ..Default::default()
            };
            let (_, anoms) = generate(&config).unwrap();
            for d in 0..config.dims {
                let mut spans: Vec<(usize, usize)> = anoms
                    .iter()
                    .filter(|iv| iv.dim == d)
                    .map(|iv| (iv.a, iv.b))
                    .collect();
                spans.sort_unstable();
                for w in spans.windows(2) {
                    assert!(w[0].1 < w[1].0, "overlap in dim {d}: {w:?}");
                }
            }
        }
    }

    #[test]
    fn fully_synchronized_config_aligns_every_event() {
        let config = GeneratorConfig { n_days: 12, r_sync: 1.0, seed: 77, ..Default::default() };
        let (_, anoms) = generate(&config).unwrap();
        // Every dimension-0 interval must have an exact partner in dim 1.
        let dim0: Vec<_> = anoms.iter().filter(|iv| iv.dim == 0).collect();
        let dim1: Vec<_> = anoms.iter().filter(|iv| iv.dim == 1).collect();
        assert_eq!(dim0.len(), dim1.len());
        for iv in &dim0 {
            assert!(
                dim1.iter().any(|o| o.a == iv.a && o.b == iv.b
                    && o.true_class == iv.true_class),
                "no aligned partner for {iv:?}"
            );
        }
    }

    #[test]
    fn unsynchronized_config_rarely_collides() {
        // With r_sync = 0 the only synchronized pairs come from accidental
        // collisions between different event slots.
        let mut sync_pairs = 0usize;
        let mut total_events = 0usize;
        for seed in 0..100 {
            let config = GeneratorConfig {
                n_days: 30,
                r_sync: 0.0,
                seed: 1000 + seed,
                ..Default::default()
            };
            let (_, anoms) = generate(&config).unwrap();
            total_events += anoms.len();
            for (i, p) in anoms.iter().enumerate() {
                for q in &anoms[i + 1..] {
                    if p.dim == q.dim {
                        continue;
                    }
                    let num = p.b.min(q.b) as f64 - p.a.max(q.a) as f64;
                    let den = p.b.max(q.b) as f64 - p.a.min(q.a) as f64;
                    if num / den >= 0.5 {
                        sync_pairs += 1;
                    }
                }
            }
        }
        let frac = sync_pairs as f64 / total_events as f64;
        assert!(frac < 0.05, "accidental synchronization fraction {frac}");
    }

    #[test]
    fn zero_lag_noise_free_dimensions_agree_outside_unsync_intervals() {
        let config = GeneratorConfig {
            n_days: 10,
            r_sync: 0.3,
            noise_std: 0.0,
            seed: 3,
            ..Default::default()
        };
        let (series, anoms) = generate(&config).unwrap();
        let masked: Vec<bool> = {
            let mut m = vec![false; series.len()];
            for iv in &anoms {
                for i in iv.a..=iv.b {
                    m[i] = true;
                }
            }
            m
        };
        for t in 0..series.len() {
            if !masked[t] {
                assert_eq!(series.value(t, 0), series.value(t, 1), "mismatch at {t}");
            }
        }
    }

    #[test]
    fn lag_frontier_correlations() {
        // Clean-signal correlation between the two dimensions: above 0.43 up
        // to 3 h of lag, clearly below at half a day.
        for lag in [60i64, 120, 180, -180] {
            let config = GeneratorConfig {
                n_days: 30,
                events_per_class: 0,
                noise_std: 0.0,
                lag_minutes: lag,
                seed: 1,
                ..Default::default()
            };
            let (series, anoms) = generate(&config).unwrap();
            assert!(anoms.is_empty());
            let r = pearson(series.column(0), series.column(1)).unwrap();
            assert!(r > 0.43, "lag {lag}: rho = {r}");
        }
        let config = GeneratorConfig {
            n_days: 30,
            events_per_class: 0,
            noise_std: 0.0,
            lag_minutes: 720,
            seed: 1,
            ..Default::default()
        };
        let (series, _) = generate(&config).unwrap();
        let r = pearson(series.column(0), series.column(1)).unwrap();
        assert!(r < 0.43, "lag 720: rho = {r}");
    }

    #[test]
    fn table_ranges_are_respected_across_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for class in AnomalyClass::ALL {
            let spec = class.spec();
            for _ in 0..200 {
                let p = draw_placement(&spec, 0, &mut rng);
                assert!((spec.start_window.0..=spec.start_window.1).contains(&p.a));
                let dur = p.b - p.a + 1;
                assert!((spec.duration.0..=spec.duration.1).contains(&dur));
                assert!(
                    p.intensity >= spec.intensity.0 && p.intensity <= spec.intensity.1
                );
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut c = GeneratorConfig::default();
        c.r_sync = 1.5;
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.classes = vec![];
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.classes = vec![AnomalyClass::NightDrop, AnomalyClass::NightDrop];
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.noise_corr = 1.0;
        assert!(c.validate().is_err());
    }
}
