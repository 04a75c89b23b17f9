//! Electro-oculogram signal processing: band-pass filtering, mean removal,
//! hard-threshold truncation, per-unit scaling, saccadic peak isolation, and
//! correlation against image-based measurements.
//!
//! The processing order is filter, normalize, truncate, per-unit, peaks.

use crate::error::{Error, Result};

/// Uniformly sampled real-valued time series.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    samples: Vec<f64>,
    rate: f64,
}

impl Series {
    pub fn new(samples: Vec<f64>, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Parameter(format!(
                "sample rate must be positive, got {rate}"
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Input("series holds non-finite samples".into()));
        }
        Ok(Self { samples, rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Direct-form-II-transposed biquad section.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Second-order Butterworth low-pass by bilinear transform with
    /// frequency prewarping.
    fn lowpass(fc: f64, rate: f64) -> Self {
        let k = (std::f64::consts::PI * fc / rate).tan();
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let norm = 1.0 / (1.0 + k / q + k * k);
        Self {
            b0: k * k * norm,
            b1: 2.0 * k * k * norm,
            b2: k * k * norm,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    /// Second-order Butterworth high-pass.
    fn highpass(fc: f64, rate: f64) -> Self {
        let k = (std::f64::consts::PI * fc / rate).tan();
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let norm = 1.0 / (1.0 + k / q + k * k);
        Self {
            b0: norm,
            b1: -2.0 * norm,
            b2: norm,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        }
    }

    /// Steady-state internal state for a unit step input, so filtering can
    /// start without a transient.
    fn step_state(&self) -> (f64, f64) {
        // Solve (I - A) z = B for the DF2T state recurrence.
        let a11 = 1.0 + self.a1;
        let a12 = -1.0;
        let a21 = self.a2;
        let a22 = 1.0;
        let r1 = self.b1 - self.a1 * self.b0;
        let r2 = self.b2 - self.a2 * self.b0;
        let det = a11 * a22 - a12 * a21;
        ((r1 * a22 - r2 * a12) / det, (a11 * r2 - a21 * r1) / det)
    }

    fn run(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let (zi1, zi2) = self.step_state();
        let x0 = input.first().copied().unwrap_or(0.0);
        let mut z1 = zi1 * x0;
        let mut z2 = zi2 * x0;
        for &x in input {
            let y = self.b0 * x + z1;
            z1 = self.b1 * x - self.a1 * y + z2;
            z2 = self.b2 * x - self.a2 * y;
            out.push(y);
        }
    }
}

/// Zero-phase band-pass filter: a second-order high-pass at `f_lo` cascaded
/// with a second-order low-pass at `f_hi` (fourth-order characteristic), run
/// forward and backward over odd-reflection padding so the phase cancels.
pub fn bandpass(x: &Series, f_lo: f64, f_hi: f64) -> Result<Series> {
    if !(f_lo > 0.0 && f_lo < f_hi && f_hi < x.rate / 2.0) {
        return Err(Error::Parameter(format!(
            "band [{f_lo}, {f_hi}] invalid for rate {}",
            x.rate
        )));
    }
    if x.is_empty() {
        return Ok(x.clone());
    }
    let hp = Biquad::highpass(f_lo, x.rate);
    let lp = Biquad::lowpass(f_hi, x.rate);

    // Odd-reflection padding long enough for the slow high-pass transient.
    let pad = ((3.0 * x.rate / f_lo).ceil() as usize).min(x.len().saturating_sub(1));
    let n = x.len();
    let mut padded = Vec::with_capacity(n + 2 * pad);
    let first = x.samples[0];
    let last = x.samples[n - 1];
    for i in (1..=pad).rev() {
        padded.push(2.0 * first - x.samples[i]);
    }
    padded.extend_from_slice(&x.samples);
    for i in 1..=pad {
        padded.push(2.0 * last - x.samples[n - 1 - i]);
    }

    let mut buf = Vec::new();
    for stage in [hp, lp] {
        stage.run(&padded, &mut buf);
        std::mem::swap(&mut padded, &mut buf);
        padded.reverse();
        stage.run(&padded, &mut buf);
        std::mem::swap(&mut padded, &mut buf);
        padded.reverse();
    }
    Series::new(padded[pad..pad + n].to_vec(), x.rate)
}

/// Removes the series mean.
pub fn normalize(x: &Series) -> Result<Series> {
    if x.is_empty() {
        return Err(Error::Input("cannot normalize an empty series".into()));
    }
    let mean = x.samples.iter().sum::<f64>() / x.len() as f64;
    Series::new(x.samples.iter().map(|s| s - mean).collect(), x.rate)
}

/// Hard threshold at `frac` of the peak magnitude: samples with
/// `|d| <= frac * max|d|` are zeroed, the rest pass through.
pub fn truncate(x: &Series, frac: f64) -> Result<Series> {
    if !(0.0..1.0).contains(&frac) || frac <= 0.0 {
        return Err(Error::Parameter(format!(
            "truncation fraction must lie in (0, 1), got {frac}"
        )));
    }
    let peak = x.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let thr = frac * peak;
    Series::new(
        x.samples
            .iter()
            .map(|&d| if d.abs() > thr { d } else { 0.0 })
            .collect(),
        x.rate,
    )
}

/// Scales the series by the absolute value of its signed maximum, so the
/// largest sample becomes +1. Errors when the series is all zero.
pub fn per_unit(x: &Series) -> Result<Series> {
    let max = x
        .samples
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if x.is_empty() || max.abs() <= 0.0 || !max.is_finite() {
        return Err(Error::Domain(
            "per-unit scaling of an all-zero or empty series".into(),
        ));
    }
    let scale = max.abs();
    Series::new(x.samples.iter().map(|s| s / scale).collect(), x.rate)
}

/// One isolated saccadic peak in a truncated per-unit series.
#[derive(Debug, Clone, PartialEq)]
pub struct SaccadePeak {
    /// First sample index of the nonzero run.
    pub start: usize,
    /// Last sample index of the nonzero run.
    pub end: usize,
    /// Largest magnitude inside the run.
    pub amplitude: f64,
    /// Largest magnitude of the in-run difference series, per sample.
    pub peak_velocity: f64,
    /// Sign of the run's extreme sample.
    pub sign: i8,
}

/// Splits a truncated series into maximal nonzero runs and parameterizes
/// each: amplitude is the extreme magnitude, velocity is the first
/// difference within the run.
pub fn isolate_peaks(x: &Series) -> Vec<SaccadePeak> {
    let mut peaks = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=x.len() {
        let nonzero = i < x.len() && x.samples[i] != 0.0;
        match (run_start, nonzero) {
            (None, true) => run_start = Some(i),
            (Some(s), false) => {
                let e = i - 1;
                let run = &x.samples[s..=e];
                let (mut amp, mut sign) = (0.0f64, 1i8);
                for &v in run {
                    if v.abs() > amp {
                        amp = v.abs();
                        sign = if v >= 0.0 { 1 } else { -1 };
                    }
                }
                let peak_velocity = run
                    .windows(2)
                    .map(|w| (w[1] - w[0]).abs())
                    .fold(0.0f64, f64::max);
                peaks.push(SaccadePeak {
                    start: s,
                    end: e,
                    amplitude: amp,
                    peak_velocity,
                    sign,
                });
                run_start = None;
            }
            _ => {}
        }
    }
    peaks
}

/// Pearson linear correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Input(format!(
            "need two equal-length series of >= 2 samples, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::Undefined(
            "correlation of a zero-variance sequence".into(),
        ));
    }
    Ok(cov / (va * vb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine(freq: f64, rate: f64, n: usize) -> Series {
        Series::new(
            (0..n)
                .map(|i| (std::f64::consts::TAU * freq * i as f64 / rate).sin())
                .collect(),
            rate,
        )
        .unwrap()
    }

    fn rms(s: &[f64]) -> f64 {
        (s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt()
    }

    #[test]
    fn bandpass_preserves_in_band_tone() {
        let x = sine(10.0, 256.0, 4096);
        let y = bandpass(&x, 0.4, 30.0).unwrap();
        // Compare steady-state RMS away from the ends.
        let mid = 1024..3072;
        let gain = rms(&y.samples()[mid.clone()]) / rms(&x.samples()[mid]);
        assert!((gain - 1.0).abs() < 0.05, "gain {gain}");
    }

    #[test]
    fn bandpass_rejects_high_band_noise() {
        let x = sine(85.0, 256.0, 4096);
        let y = bandpass(&x, 0.4, 30.0).unwrap();
        let mid = 1024..3072;
        let gain = rms(&y.samples()[mid.clone()]) / rms(&x.samples()[mid]);
        assert!(gain < 0.1, "gain {gain} (need >= 20 dB attenuation)");
    }

    #[test]
    fn bandpass_kills_dc() {
        let x = Series::new(vec![50.0; 2048], 256.0).unwrap();
        let y = bandpass(&x, 0.4, 30.0).unwrap();
        let mean = y.samples().iter().sum::<f64>() / y.len() as f64;
        assert!(mean.abs() < 0.5, "residual mean {mean} (1% of 50)");
    }

    #[test]
    fn bandpass_validates_band() {
        let x = sine(10.0, 256.0, 64);
        assert!(bandpass(&x, 30.0, 0.4).is_err());
        assert!(bandpass(&x, 0.4, 200.0).is_err());
        assert!(bandpass(&x, 0.0, 30.0).is_err());
    }

    #[test]
    fn normalize_examples() {
        let constant = Series::new(vec![7.5; 10], 100.0).unwrap();
        assert!(normalize(&constant)
            .unwrap()
            .samples()
            .iter()
            .all(|&s| s == 0.0));
        let two = Series::new(vec![1.0, 3.0], 100.0).unwrap();
        assert_eq!(normalize(&two).unwrap().samples(), &[-1.0, 1.0]);
        assert!(normalize(&Series::new(vec![], 100.0).unwrap()).is_err());
    }

    #[test]
    fn normalize_zeroes_mean_on_random_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        for _ in 0..20 {
            let x = Series::new(
                (0..1000).map(|_| rng.random_range(-100.0..100.0)).collect(),
                256.0,
            )
            .unwrap();
            let y = normalize(&x).unwrap();
            let mean = y.samples().iter().sum::<f64>() / 1000.0;
            assert!(mean.abs() < 1e-12);
        }
    }

    #[test]
    fn truncate_zeroes_subthreshold_samples() {
        let vals: Vec<f64> = vec![100.0, -14.0, 15.0, -16.0, 3.0, 99.0, -100.0];
        let x = Series::new(vals, 256.0).unwrap();
        let y = truncate(&x, 0.15).unwrap();
        // Threshold is 15; strict inequality keeps only |d| > 15.
        assert_eq!(y.samples(), &[100.0, 0.0, 0.0, -16.0, 0.0, 99.0, -100.0]);
    }

    #[test]
    fn truncate_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(92);
        let x = Series::new(
            (0..100).map(|_| rng.random_range(-1.0..1.0)).collect(),
            256.0,
        )
        .unwrap();
        let tiny = truncate(&x, 1e-12).unwrap();
        assert_eq!(tiny.samples(), x.samples());
        let harsh = truncate(&x, 0.99).unwrap();
        let survivors = harsh.samples().iter().filter(|&&v| v != 0.0).count();
        assert!(survivors >= 1 && survivors < 5);
        // Zeros stay zeros and magnitudes never grow.
        for (a, b) in x.samples().iter().zip(harsh.samples()) {
            assert!(b.abs() <= a.abs());
        }
    }

    #[test]
    fn per_unit_scales_signed_max_to_one() {
        let x = Series::new(vec![1.0, 4.0, -2.0], 256.0).unwrap();
        let y = per_unit(&x).unwrap();
        assert_eq!(y.samples(), &[0.25, 1.0, -0.5]);
        let again = per_unit(&y).unwrap();
        assert_eq!(again.samples(), y.samples());
        assert!(per_unit(&Series::new(vec![0.0; 4], 256.0).unwrap()).is_err());
    }

    #[test]
    fn isolate_peaks_on_pulses() {
        let mut vals = vec![0.0; 50];
        for i in 10..15 {
            vals[i] = 0.8;
        }
        for i in 30..36 {
            vals[i] = -1.0;
        }
        let x = Series::new(vals, 256.0).unwrap();
        let peaks = isolate_peaks(&x);
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks[0].start, peaks[0].end), (10, 14));
        assert_eq!(peaks[0].amplitude, 0.8);
        assert_eq!(peaks[0].sign, 1);
        assert_eq!((peaks[1].start, peaks[1].end), (30, 35));
        assert_eq!(peaks[1].amplitude, 1.0);
        assert_eq!(peaks[1].sign, -1);
    }

    #[test]
    fn sigmoid_peak_velocity_matches_analytic() {
        // Raw step recording: baseline 0, logistic rise to `amp`, then a
        // plateau. After mean removal, truncation and per-unit scaling, the
        // steepest in-run difference must match the analytic logistic slope.
        let n = 4000usize;
        let rate = 256.0;
        let amp = 200.0;
        let a = 0.05; // per-sample logistic rate
        let t0 = 2800.0;
        let raw = Series::new(
            (0..n)
                .map(|k| amp / (1.0 + (-a * (k as f64 - t0)).exp()))
                .collect(),
            rate,
        )
        .unwrap();
        let d = normalize(&raw).unwrap();
        let m = truncate(&d, 0.15).unwrap();
        let s = per_unit(&m).unwrap();
        let peaks = isolate_peaks(&s);
        assert!(!peaks.is_empty());
        let v_max = peaks
            .iter()
            .map(|p| p.peak_velocity)
            .fold(0.0f64, f64::max);
        // Analytic: max slope of the logistic is amp*a/4 per sample; the
        // per-unit scale divides by the series' signed max.
        let mean = raw.samples().iter().sum::<f64>() / n as f64;
        let signed_max = d
            .samples()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let _ = mean;
        let analytic = (amp * a / 4.0) / signed_max;
        assert!(
            (v_max - analytic).abs() <= 0.02 * analytic,
            "{v_max} vs analytic {analytic}"
        );
    }

    #[test]
    fn pearson_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        let a: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert_eq!(pearson(&a, &a).unwrap(), 1.0);
        assert_eq!(pearson(&a, &neg).unwrap(), -1.0);
        assert!(pearson(&a, &vec![0.0; 100]).is_err());
        assert!(pearson(&a[..3], &a[..4]).is_err());
    }

    #[test]
    fn pearson_near_zero_for_independent_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(94);
        let a: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(pearson(&a, &b).unwrap().abs() < 0.1);
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(seed in 0u64..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<f64> = (0..64).map(|_| rng.random_range(-5.0..5.0)).collect();
            let b: Vec<f64> = (0..64).map(|_| rng.random_range(-5.0..5.0)).collect();
            let scale = rng.random_range(0.1..10.0);
            let shift = rng.random_range(-100.0..100.0);
            let a2: Vec<f64> = a.iter().map(|x| scale * x + shift).collect();
            let r0 = pearson(&a, &b).unwrap();
            let r1 = pearson(&a2, &b).unwrap();
            prop_assert!((r0 - r1).abs() < 1e-9);
        }

        #[test]
        fn normalize_is_idempotent(seed in 0u64..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Series::new(
                (0..128).map(|_| rng.random_range(-50.0..50.0)).collect(),
                256.0,
            ).unwrap();
            let once = normalize(&x).unwrap();
            let twice = normalize(&once).unwrap();
            for (a, b) in once.samples().iter().zip(twice.samples()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
