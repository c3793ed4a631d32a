use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{frame_signal, ContextVector, FeatureError, MfccConfig, SAMPLE_RATE};

/// Floor applied to energies before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters spaced evenly on the mel scale between 0 Hz and Nyquist.
///
/// Weights are evaluated at the exact bin frequencies (no rounding of filter
/// edges to bins), so adjacent triangles sum to one between the first and the
/// last centre frequency.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Per filter: index of the first bin with non-zero weight and the weights.
    filters: Vec<(usize, Vec<f64>)>,
    n_bins: usize,
    edges_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: u32) -> Self {
        let n_bins = n_fft / 2 + 1;
        let nyquist = f64::from(sample_rate) / 2.0;
        let mel_hi = hz_to_mel(nyquist);
        let edges_hz: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_hi * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = f64::from(sample_rate) / n_fft as f64;

        let filters = (0..n_mels)
            .map(|m| {
                let (lo, mid, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
                let weights: Vec<(usize, f64)> = (0..n_bins)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = ((f - lo) / (mid - lo)).min((hi - f) / (hi - mid));
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                let start = weights.first().map_or(0, |&(k, _)| k);
                (start, weights.into_iter().map(|(_, w)| w).collect())
            })
            .collect();

        Self {
            filters,
            n_bins,
            edges_hz,
        }
    }

    pub fn n_filters(&self) -> usize {
        self.filters.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Filter edge frequencies in Hz, `n_filters + 2` values.
    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    /// Weight of `bin` in filter `m`.
    pub fn weight(&self, m: usize, bin: usize) -> f64 {
        let (start, w) = &self.filters[m];
        if bin < *start {
            return 0.0;
        }
        w.get(bin - start).copied().unwrap_or(0.0)
    }

    pub fn apply(&self, spectrum: &[f64], out: &mut [f64]) {
        for ((start, w), o) in self.filters.iter().zip(out.iter_mut()) {
            *o = w
                .iter()
                .zip(&spectrum[*start..])
                .map(|(a, b)| a * b)
                .sum();
        }
    }
}

/// Reusable MFCC pipeline for one configuration.
///
/// pre-emphasis, Hamming window, |FFT| (zero-padded to a power of two),
/// mel filterbank, floored natural log, orthonormal DCT-II.
#[derive(Clone)]
pub struct MfccExtractor {
    cfg: MfccConfig,
    frame_len: usize,
    n_fft: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    filterbank: MelFilterbank,
    /// `n_coeffs × n_mels`, row-major.
    dct: Vec<f64>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("cfg", &self.cfg)
            .field("n_fft", &self.n_fft)
            .finish()
    }
}

impl MfccExtractor {
    pub fn new(cfg: &MfccConfig) -> Result<Self, FeatureError> {
        cfg.validate()?;
        let frame_len = cfg.frame_len();
        let n_fft = frame_len.next_power_of_two();
        if cfg.n_mels + 2 > n_fft / 2 + 1 {
            return Err(FeatureError::InvalidConfig(format!(
                "{} mel filters do not fit into {} spectrum bins",
                cfg.n_mels,
                n_fft / 2 + 1
            )));
        }
        let window = (0..frame_len)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (frame_len - 1) as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        let filterbank = MelFilterbank::new(cfg.n_mels, n_fft, SAMPLE_RATE);

        let m = cfg.n_mels as f64;
        let mut dct = Vec::with_capacity(cfg.n_coeffs * cfg.n_mels);
        for k in 0..cfg.n_coeffs {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            for j in 0..cfg.n_mels {
                dct.push(scale * (PI * k as f64 * (j as f64 + 0.5) / m).cos());
            }
        }

        Ok(Self {
            cfg: cfg.clone(),
            frame_len,
            n_fft,
            window,
            fft,
            filterbank,
            dct,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// Cepstral coefficients of one frame (no deltas).
    pub fn compute(&self, frame: &[f32]) -> Result<Vec<f64>, FeatureError> {
        if frame.len() != self.frame_len {
            return Err(FeatureError::FrameLength {
                expected: self.frame_len,
                found: frame.len(),
            });
        }

        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        let a = self.cfg.preemphasis;
        let mut prev = 0.0;
        for (n, (&s, w)) in frame.iter().zip(&self.window).enumerate() {
            let s = f64::from(s);
            let y = if n == 0 { s } else { s - a * prev };
            prev = s;
            buf[n].re = y * w;
        }
        self.fft.process(&mut buf);

        let spectrum: Vec<f64> = buf[..self.filterbank.n_bins()]
            .iter()
            .map(|c| c.norm())
            .collect();
        let mut log_mel = vec![0.0; self.cfg.n_mels];
        self.filterbank.apply(&spectrum, &mut log_mel);
        for e in &mut log_mel {
            *e = e.max(LOG_FLOOR).ln();
        }

        let mut out: Vec<f64> = self
            .dct
            .chunks_exact(self.cfg.n_mels)
            .map(|row| row.iter().zip(&log_mel).map(|(a, b)| a * b).sum())
            .collect();
        if self.cfg.include_log_energy {
            let energy: f64 = frame.iter().map(|&s| f64::from(s) * f64::from(s)).sum();
            out[0] = energy.max(LOG_FLOOR).ln();
        }
        Ok(out)
    }

    /// Frame `samples` on the hop grid and extract one context per frame.
    pub fn extract(&self, samples: &[f32]) -> Result<Vec<ContextVector>, FeatureError> {
        let frames = frame_signal(samples, &self.cfg)?;
        let mut coeffs = Vec::with_capacity(frames.len());
        for frame in frames {
            coeffs.push(self.compute(frame)?);
        }
        if self.cfg.deltas {
            coeffs = stack_deltas(&coeffs);
        }
        Ok(coeffs
            .into_iter()
            .enumerate()
            .map(|(i, v)| ContextVector::new(v, i as u64))
            .collect())
    }
}

/// MFCC of a single frame; convenience wrapper that builds an extractor.
pub fn mfcc(frame: &[f32], cfg: &MfccConfig) -> Result<Vec<f64>, FeatureError> {
    MfccExtractor::new(cfg)?.compute(frame)
}

pub fn mfcc_stream(samples: &[f32], cfg: &MfccConfig) -> Result<Vec<ContextVector>, FeatureError> {
    MfccExtractor::new(cfg)?.extract(samples)
}

const DELTA_WINDOW: usize = 2;

fn deltas(frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = frames.len();
    let denom: f64 = 2.0 * (1..=DELTA_WINDOW).map(|i| (i * i) as f64).sum::<f64>();
    (0..n)
        .map(|t| {
            let dim = frames[t].len();
            let mut d = vec![0.0; dim];
            for k in 1..=DELTA_WINDOW {
                let next = &frames[(t + k).min(n - 1)];
                let prev = &frames[t.saturating_sub(k)];
                for j in 0..dim {
                    d[j] += k as f64 * (next[j] - prev[j]);
                }
            }
            d.iter_mut().for_each(|v| *v /= denom);
            d
        })
        .collect()
}

fn stack_deltas(frames: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d1 = deltas(frames);
    let d2 = deltas(&d1);
    frames
        .iter()
        .zip(d1)
        .zip(d2)
        .map(|((c, a), b)| c.iter().copied().chain(a).chain(b).collect())
        .collect()
}
