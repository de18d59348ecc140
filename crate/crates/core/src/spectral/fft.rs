//! Two-dimensional complex FFTs on square periodic grids.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(m: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(m), planner.plan_fft_inverse(m))
        })
        .clone()
}

/// Unnormalized forward/inverse 2D transform on an `m × m` row-major array.
///
/// `forward` computes `Σ v[j] e^{-2πi j·k/m}`, `inverse` the same with `+`.
pub struct Transform2d {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Transform2d {
    pub fn new(m: usize) -> Self {
        let (fwd, inv) = plans(m);
        Self { m, fwd, inv }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.m * self.m, "transform buffer size");
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, self.m);
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, self.m);
    }
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_scales_by_m_squared() {
        let m = 12;
        let orig: Vec<Complex64> = (0..m * m)
            .map(|i| Complex64::new((i as f64 * 0.3).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let t = Transform2d::new(m);
        let mut buf = orig.clone();
        t.forward(&mut buf);
        t.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / (m * m) as f64 - b).norm() < 1e-14);
        }
    }

    #[test]
    fn single_frequency_lands_in_one_bin() {
        let m = 8;
        let mut buf: Vec<Complex64> = (0..m * m)
            .map(|idx| {
                let (i, j) = (idx / m, idx % m);
                let phase = 2.0 * std::f64::consts::PI * (i as f64 * 1.0 + j as f64 * 3.0) / m as f64;
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        Transform2d::new(m).forward(&mut buf);
        for (idx, v) in buf.iter().enumerate() {
            let expected = if idx == m + 3 { (m * m) as f64 } else { 0.0 };
            assert!((v.re - expected).abs() < 1e-10 && v.im.abs() < 1e-10, "bin {idx}: {v}");
        }
    }
}
