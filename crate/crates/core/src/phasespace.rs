//! Husimi-Kano Q function Q(α) = ⟨α|ρ|α⟩/π of a meter state on a square
//! grid in the α plane.
//!
//! ⟨α| is built from the exact coefficients e^{−|α|²/2}αⁿ/√n! for n below
//! the cutoff, without renormalization. Since ρ lives in the truncated
//! space, this gives Q exactly at every grid point, however far out. The
//! truncation guard therefore applies to the state (⟨n̂⟩ ≤ cutoff/4) and not
//! to the grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::state::coherent_coefficients;
use crate::hilbert::{CMatrix, MeterState};

pub const DEFAULT_RESOLUTION: usize = 101;
pub const DEFAULT_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    /// Grid centre; `None` centres on ⟨a⟩.
    pub center: Option<[f64; 2]>,
    pub half_width: f64,
    pub resolution: usize,
    /// Widen the window when the state's spread demands it.
    pub auto_extend: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            center: None,
            half_width: DEFAULT_HALF_WIDTH,
            resolution: DEFAULT_RESOLUTION,
            auto_extend: true,
        }
    }
}

/// A labelled point in the α plane (the × and + annotations).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marker {
    pub label: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// values[row][col] = Q(re_axis[col] + i·im_axis[row]).
    pub values: Vec<Vec<f64>>,
    pub mean_a: [f64; 2],
    pub mean_n: f64,
    /// True when the window was widened beyond the request.
    pub extended: bool,
    pub markers: Vec<Marker>,
}

impl QGrid {
    pub fn resolution(&self) -> usize {
        self.re_axis.len()
    }

    pub fn cell(&self) -> (f64, f64) {
        (
            self.re_axis[1] - self.re_axis[0],
            self.im_axis[1] - self.im_axis[0],
        )
    }

    /// Σ Q ΔreΔim
    pub fn mass(&self) -> f64 {
        let (dr, di) = self.cell();
        self.values.iter().flatten().sum::<f64>() * dr * di
    }

    /// First grid maximum in row-major order, as (re, im, Q).
    pub fn peak(&self) -> (f64, f64, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for (r, row) in self.values.iter().enumerate() {
            for (c, &q) in row.iter().enumerate() {
                if q > best.2 {
                    best = (r, c, q);
                }
            }
        }
        (self.re_axis[best.1], self.im_axis[best.0], best.2)
    }

    pub fn with_marker(mut self, label: &str, alpha: Complex64) -> Self {
        self.markers.push(Marker {
            label: label.to_string(),
            re: alpha.re,
            im: alpha.im,
        });
        self
    }
}

fn mean_values(rho: &CMatrix) -> (Complex64, f64) {
    let n = rho.nrows();
    let mut a = Complex64::new(0.0, 0.0);
    let mut num = 0.0;
    for k in 0..n {
        num += k as f64 * rho[(k, k)].re;
        if k + 1 < n {
            // Tr(ρ a) = Σ_k √(k+1) ρ_{k,k+1}
            a += rho[(k, k + 1)] * ((k + 1) as f64).sqrt();
        }
    }
    (a, num)
}

fn axis(center: f64, half_width: f64, resolution: usize) -> Vec<f64> {
    let step = 2.0 * half_width / (resolution - 1) as f64;
    (0..resolution)
        .map(|k| center - half_width + k as f64 * step)
        .collect()
}

/// Q function of a meter density matrix (cutoff × cutoff).
pub fn husimi_q(rho: &CMatrix, spec: &GridSpec) -> Result<QGrid> {
    let cutoff = rho.nrows();
    if rho.ncols() != cutoff || cutoff < 2 {
        return Err(Error::param(
            "meter density",
            "must be square with at least 2 levels",
        ));
    }
    if spec.resolution < 2 {
        return Err(Error::param("husimi.resolution", "must be >= 2"));
    }
    if !(spec.half_width > 0.0 && spec.half_width.is_finite()) {
        return Err(Error::param("husimi.half_width", "must be finite and > 0"));
    }
    let (mean_a, mean_n) = mean_values(rho);
    let limit = cutoff as f64 / 4.0;
    if mean_n > limit {
        return Err(Error::TruncationOverflow {
            alpha_sq: mean_n,
            limit,
        });
    }

    // A window of 4 standard deviations beyond the coherent width.
    let variance = (mean_n - mean_a.norm_sqr()).max(0.0);
    let required = DEFAULT_HALF_WIDTH * (1.0 + 2.0 * variance).sqrt();
    let (half_width, extended) = if spec.auto_extend && required > spec.half_width {
        (required, true)
    } else {
        (spec.half_width, false)
    };
    let center = spec
        .center
        .map(|[re, im]| Complex64::new(re, im))
        .unwrap_or(mean_a);
    let re_axis = axis(center.re, half_width, spec.resolution);
    let im_axis = axis(center.im, half_width, spec.resolution);

    let values = im_axis
        .par_iter()
        .map(|&im| {
            re_axis
                .iter()
                .map(|&re| {
                    let c = coherent_coefficients(cutoff, Complex64::new(re, im), true);
                    let q = c.dotc(&(rho * &c)).re / std::f64::consts::PI;
                    q.max(0.0)
                })
                .collect()
        })
        .collect();

    Ok(QGrid {
        re_axis,
        im_axis,
        values,
        mean_a: [mean_a.re, mean_a.im],
        mean_n,
        extended,
        markers: Vec::new(),
    })
}

/// Q function of a pure meter state.
pub fn husimi_q_pure(meter: &MeterState, spec: &GridSpec) -> Result<QGrid> {
    husimi_q(&meter.density(), spec)
}
