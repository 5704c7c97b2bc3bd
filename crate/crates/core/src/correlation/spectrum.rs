use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::CorrelationSeries;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    None,
    Hann,
}

impl std::str::FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "rect" => Ok(Window::None),
            "hann" => Ok(Window::Hann),
            _ => Err(Error::invalid(format!("unknown window '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSeries {
    /// Angular frequencies, ascending, zero included.
    pub omega: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub window: Window,
}

/// `|Σ_k w_k F(t_k) e^{-iω t_k}|·dt` on the FFT frequency grid
/// `ω = 2πk/(n dt)`. A signal `e^{iΩt}` peaks at `ω = Ω`.
pub fn spectrum(series: &CorrelationSeries, window: Window) -> Result<SpectrumSeries> {
    let t = &series.times;
    let n = t.len();
    if n < 2 {
        return Err(Error::invalid("spectrum needs at least two samples"));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) {
        return Err(Error::invalid("time grid must be increasing"));
    }
    for k in 1..n {
        let expect = t[0] + k as f64 * dt;
        if (t[k] - expect).abs() > 1e-9 * expect.abs().max(dt) {
            return Err(Error::invalid("spectrum needs a uniform time grid"));
        }
    }
    let mut buf: Vec<C64> = series
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = match window {
                Window::None => 1.0,
                Window::Hann => {
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()
                }
            };
            v * w
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let scale = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let mut pairs: Vec<(f64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let kk = if k <= (n - 1) / 2 { k as f64 } else { k as f64 - n as f64 };
            (kk * scale, v.norm() * dt)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SpectrumSeries {
        omega: pairs.iter().map(|p| p.0).collect(),
        magnitude: pairs.iter().map(|p| p.1).collect(),
        window,
    })
}

/// Frequency of the largest spectral magnitude.
pub fn peak_frequency(s: &SpectrumSeries) -> f64 {
    let (k, _) = s
        .magnitude
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &m)| if m > acc.1 { (k, m) } else { acc });
    s.omega[k]
}

/// `|ω|` of the strongest non-zero frequency bin.
pub fn dominant_frequency(s: &SpectrumSeries) -> f64 {
    let mut best = (0.0, f64::NEG_INFINITY);
    for (&w, &m) in s.omega.iter().zip(&s.magnitude) {
        if w != 0.0 && m > best.1 {
            best = (w.abs(), m);
        }
    }
    best.0
}

/// `-Σ p ln p` with `p` the normalized magnitudes.
pub fn spectral_entropy(s: &SpectrumSeries) -> f64 {
    let total: f64 = s.magnitude.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    s.magnitude
        .iter()
        .map(|m| m / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Mean height of the local maxima of `|F(t)|` between the fractions
/// `from` and `to` of the series.
pub fn envelope_metric(series: &CorrelationSeries, from: f64, to: f64) -> f64 {
    let n = series.values.len();
    let lo = ((from.clamp(0.0, 1.0) * n as f64).floor() as usize).min(n);
    let hi = ((to.clamp(0.0, 1.0) * n as f64).ceil() as usize).min(n);
    if hi <= lo {
        return 0.0;
    }
    let mag: Vec<f64> = series.values.iter().map(|v| v.norm()).collect();
    let peaks: Vec<f64> = (lo.max(1)..hi.min(n - 1))
        .filter(|&k| mag[k] >= mag[k - 1] && mag[k] > mag[k + 1])
        .map(|k| mag[k])
        .collect();
    if peaks.is_empty() {
        mag[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
    } else {
        peaks.iter().sum::<f64>() / peaks.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{Method, SeriesMeta};

    fn series(times: Vec<f64>, f: impl Fn(f64) -> C64) -> CorrelationSeries {
        let values = times.iter().map(|&t| f(t)).collect();
        CorrelationSeries {
            times,
            values,
            meta: SeriesMeta {
                method: Method::Exact,
                observable: String::new(),
            },
            std_error: None,
            samples: None,
        }
    }

    fn grid(dt: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn cosine_peaks_at_its_frequency() {
        let w = 6.0;
        let s = series(grid(0.02, 1001), |t| C64::new((w * t).cos() / 4.0, 0.0));
        for win in [Window::None, Window::Hann] {
            let sp = spectrum(&s, win).unwrap();
            let resolution = 2.0 * std::f64::consts::PI / (1001.0 * 0.02);
            assert!((peak_frequency(&sp).abs() - w).abs() <= resolution);
            assert!((dominant_frequency(&sp) - w).abs() <= resolution);
        }
    }

    #[test]
    fn positive_rotation_peaks_at_positive_frequency() {
        let s = series(grid(0.05, 400), |t| C64::from_polar(1.0, 2.0 * t));
        let sp = spectrum(&s, Window::Hann).unwrap();
        assert!((peak_frequency(&sp) - 2.0).abs() < 0.35);
        assert!(sp.omega.windows(2).all(|w| w[1] > w[0]));
        assert!(sp.omega.contains(&0.0));
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let s = series(vec![0.0, 0.1, 0.25, 0.3], |_| C64::new(1.0, 0.0));
        assert!(spectrum(&s, Window::None).is_err());
    }

    #[test]
    fn entropy_orders_line_and_noise() {
        let t = grid(0.05, 512);
        let line = spectrum(&series(t.clone(), |t| C64::new((3.0 * t).cos(), 0.0)), Window::Hann).unwrap();
        let mix = spectrum(
            &series(t, |t| C64::new((3.0 * t).cos() + (5.1 * t).cos() + (7.7 * t).cos() + (1.3 * t).cos(), 0.0)),
            Window::Hann,
        )
        .unwrap();
        assert!(spectral_entropy(&mix) > spectral_entropy(&line));
    }

    #[test]
    fn envelope_of_decay() {
        let t = grid(0.01, 2000);
        let s = series(t, |t| C64::new((10.0 * t).cos() * (-0.2 * t).exp(), 0.0));
        let early = envelope_metric(&s, 0.0, 0.5);
        let late = envelope_metric(&s, 0.5, 1.0);
        assert!(late < early);
        let flat = series(grid(0.01, 2000), |t| C64::new((10.0 * t).cos(), 0.0));
        assert!((envelope_metric(&flat, 0.5, 1.0) - 1.0).abs() < 1e-3);
    }
}
