//! Request traces and request-rate prediction.
//!
//! Traces are two-column CSV files (`t,requests`, optional header) with
//! strictly increasing `t`. Rates are multiplied by a scale factor and
//! rounded half-up to whole requests per interval.

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub interval_seconds: f64,
    /// Scaled requests per interval.
    pub rates: Vec<u64>,
    pub scale: f64,
}

impl Trace {
    pub fn from_rates(rates: Vec<u64>, interval_seconds: f64) -> Self {
        Trace {
            interval_seconds,
            rates,
            scale: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

pub fn scale_rate(raw: f64, scale: f64) -> u64 {
    (raw * scale + 0.5).floor() as u64
}

pub fn load_trace(path: impl AsRef<Path>, scale: f64, interval_seconds: f64) -> Result<Trace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trace(file, scale, interval_seconds)
}

pub fn parse_trace<R: Read>(reader: R, scale: f64, interval_seconds: f64) -> Result<Trace> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("trace scale must be positive, got {scale}")));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(reader);

    let mut rates = Vec::new();
    let mut last_t: Option<f64> = None;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.len() != 2 {
            return Err(Error::TraceParse {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let t = record[0].parse::<f64>();
        if i == 0 && t.is_err() && record[1].parse::<f64>().is_err() {
            // header row
            continue;
        }
        let t = t.map_err(|_| Error::TraceParse {
            line,
            message: format!("bad timestamp {:?}", &record[0]),
        })?;
        let requests: f64 = record[1].parse().map_err(|_| Error::TraceParse {
            line,
            message: format!("bad request count {:?}", &record[1]),
        })?;
        if !(requests >= 0.0 && requests.is_finite()) {
            return Err(Error::TraceParse {
                line,
                message: format!("request count must be non-negative, got {requests}"),
            });
        }
        if let Some(prev) = last_t {
            if t <= prev {
                return Err(Error::TraceParse {
                    line,
                    message: format!("timestamp {t} does not increase past {prev}"),
                });
            }
        }
        last_t = Some(t);
        rates.push(scale_rate(requests, scale));
    }
    if rates.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(Trace {
        interval_seconds,
        rates,
        scale,
    })
}

/// Mean of the last `min(window, history.len())` rates; 0 for no history.
pub fn predict_rate(history: &[u64], window: usize) -> f64 {
    let window = window.max(1);
    let recent = &history[history.len().saturating_sub(window)..];
    if recent.is_empty() {
        return 0.0;
    }
    recent.iter().map(|&r| r as f64).sum::<f64>() / recent.len() as f64
}

/// Window mean weighted by `decay^age`, the newest sample having age 0.
pub fn predict_rate_weighted(history: &[u64], window: usize, decay: f64) -> f64 {
    let window = window.max(1);
    let recent = &history[history.len().saturating_sub(window)..];
    let (mut num, mut den) = (0.0, 0.0);
    let mut w = 1.0;
    for &r in recent.iter().rev() {
        num += w * r as f64;
        den += w;
        w *= decay;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predictor {
    SlidingMean { window: usize },
    DecayWeighted { window: usize, decay: f64 },
}

impl Predictor {
    pub fn new(window: usize, decay: Option<f64>) -> Self {
        match decay {
            Some(decay) => Predictor::DecayWeighted { window, decay },
            None => Predictor::SlidingMean { window },
        }
    }

    pub fn predict(&self, history: &[u64]) -> f64 {
        match *self {
            Predictor::SlidingMean { window } => predict_rate(history, window),
            Predictor::DecayWeighted { window, decay } => {
                predict_rate_weighted(history, window, decay)
            }
        }
    }
}

/// Shape of a synthetic one-day request trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DiurnalShape {
    pub intervals: usize,
    /// Requests per interval at the quietest point of the day.
    pub trough: f64,
    /// Requests per interval at the busiest point of the day.
    pub peak: f64,
    /// Interval index of the peak.
    pub peak_at: f64,
    /// Relative standard deviation of the multiplicative noise.
    pub noise: f64,
    /// Lag-one correlation of the noise.
    pub noise_correlation: f64,
}

impl Default for DiurnalShape {
    fn default() -> Self {
        DiurnalShape {
            intervals: 1440,
            trough: 14_000.0,
            peak: 26_000.0,
            peak_at: 1_140.0,
            noise: 0.04,
            noise_correlation: 0.6,
        }
    }
}

/// Generates a day of request counts: a raised cosine with a weaker
/// second harmonic (a midday shoulder) and AR(1) multiplicative noise.
pub fn synthetic_diurnal(shape: &DiurnalShape, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.intervals as f64;
    let base: Vec<f64> = (0..shape.intervals)
        .map(|t| {
            let phase = 2.0 * PI * (t as f64 - shape.peak_at) / n;
            0.8 * phase.cos() + 0.2 * (2.0 * phase).cos()
        })
        .collect();
    let (lo, hi) = base
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let innovation = shape.noise * (1.0 - shape.noise_correlation.powi(2)).sqrt();
    let mut ar = 0.0;
    base.iter()
        .map(|&v| {
            let level = shape.trough + (v - lo) / (hi - lo) * (shape.peak - shape.trough);
            ar = shape.noise_correlation * ar + innovation * sample_normal(&mut rng);
            (level * (1.0 + ar)).max(0.0).round()
        })
        .collect()
}

fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Writes `t,requests` CSV with one row per interval.
pub fn write_trace_csv<W: std::io::Write>(writer: W, counts: &[f64], interval_seconds: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "requests"])?;
    for (i, c) in counts.iter().enumerate() {
        w.write_record([format!("{}", i as f64 * interval_seconds), format!("{c}")])?;
    }
    w.flush().map_err(|e| Error::io("<trace writer>", e))?;
    Ok(())
}
