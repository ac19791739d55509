use super::GrayImage;
use crate::error::{Error, Result};

/// Normalized marginal and joint histograms of two equally sized images.
#[derive(Debug, Clone, PartialEq)]
pub struct Histograms {
    pub bins: usize,
    pub pmf_x: Vec<f64>,
    pub pmf_y: Vec<f64>,
    /// Row-major `bins x bins`, indexed `[bin_x * bins + bin_y]`.
    pub joint: Vec<f64>,
}

impl Histograms {
    pub fn joint_at(&self, bx: usize, by: usize) -> f64 {
        self.joint[bx * self.bins + by]
    }
}

/// Histograms over intensities `0..=255`.
pub fn histograms(x: &GrayImage, y: &GrayImage, bins: usize) -> Result<Histograms> {
    histograms_in_range(x, y, bins, 0.0, 255.0)
}

/// Histograms with `bins` equal-width bins spanning `[lo, hi]`; values
/// outside the range fall into the end bins.
pub fn histograms_in_range(x: &GrayImage, y: &GrayImage, bins: usize, lo: f64, hi: f64) -> Result<Histograms> {
    if x.width() != y.width() || x.height() != y.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            x.width(),
            x.height(),
            y.width(),
            y.height()
        )));
    }
    if bins == 0 || hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::InvalidInput(format!(
            "bad histogram spec: {bins} bins over [{lo}, {hi}]"
        )));
    }
    let bin_of = |v: f64| {
        let t = ((v - lo) / (hi - lo) * bins as f64).floor();
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(bins - 1)
        }
    };
    let n = x.values().len() as f64;
    let mut pmf_x = vec![0.0; bins];
    let mut pmf_y = vec![0.0; bins];
    let mut joint = vec![0.0; bins * bins];
    for (&a, &b) in x.values().iter().zip(y.values()) {
        let (i, j) = (bin_of(a), bin_of(b));
        pmf_x[i] += 1.0;
        pmf_y[j] += 1.0;
        joint[i * bins + j] += 1.0;
    }
    for v in pmf_x.iter_mut().chain(pmf_y.iter_mut()).chain(joint.iter_mut()) {
        *v /= n;
    }
    Ok(Histograms {
        bins,
        pmf_x,
        pmf_y,
        joint,
    })
}

/// Shannon entropy in bits.
pub fn entropy(pmf: &[f64]) -> f64 {
    pmf.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Mutual information in bits.
pub fn mutual_information(h: &Histograms) -> f64 {
    let mut m = 0.0;
    for i in 0..h.bins {
        for j in 0..h.bins {
            let p = h.joint_at(i, j);
            if p > 0.0 {
                m += p * (p / (h.pmf_x[i] * h.pmf_y[j])).log2();
            }
        }
    }
    m.max(0.0)
}
