//! Subspace-fitting wideband 2D MUSIC.
//!
//! For every subcarrier the sample covariance is split into signal and
//! noise subspaces. The joint range/angle spectrum is
//!
//! ```text
//! J(r, theta) = 1 / sum_m || U_m^H a_m(r, theta) ||^2
//! ```
//!
//! with `a_m` the exact spherical-wavefront steering vector at subcarrier
//! frequency `f_m`. Because the bases are complete, the denominator also
//! equals `sum_m (||a_m||^2 - ||V_m^H a_m||^2)`; the grid evaluator uses
//! whichever basis is narrower. Peaks are the `P` highest strict local
//! maxima of the grid, refined by golden-section search inside their
//! neighbouring cells.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::geometry::{steering_vector, ArrayConfig, FrequencyGrid, SteeringBank, Target};
use crate::linalg::{dot_conj, norm_sqr, projection_energy, C64};
use crate::search::{local_maxima_2d, refine_2d, Axis};
use crate::signal::ReceivedData;
use crate::subspace::{decompose, SubspaceDecomposition};

/// Relative floor on the spectrum denominator (times `M N`).
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Rectangular `(r, theta)` search region.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub r_axis: Axis,
    pub theta_axis: Axis,
    pub refine_iters: usize,
}

impl SearchGrid {
    pub fn new(r_axis: Axis, theta_axis: Axis, refine_iters: usize) -> Result<Self> {
        if !(r_axis.first() > 0.0) {
            return Err(invalid("r_axis", "ranges must be positive"));
        }
        if !(theta_axis.first() > 0.0 && theta_axis.last() < PI) {
            return Err(invalid("theta_axis", "angles must lie strictly inside (0, pi)"));
        }
        Ok(SearchGrid { r_axis, theta_axis, refine_iters })
    }

    /// Uniform grid; angles in degrees.
    pub fn uniform_deg(
        r: (f64, f64, f64),
        theta_deg: (f64, f64, f64),
        refine_iters: usize,
    ) -> Result<Self> {
        let r_axis = Axis::uniform(r.0, r.1, r.2)?;
        let (lo, hi, step) = theta_deg;
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let theta_axis =
            Axis::new((0..count).map(|i| (lo + i as f64 * step).to_radians()).collect())?;
        Self::new(r_axis, theta_axis, refine_iters)
    }

    /// `r` in `[3, 80]` m step 0.25 m, `theta` in `[30, 150]` deg step 0.25 deg,
    /// 20 refinement iterations.
    pub fn default_grid() -> Self {
        Self::uniform_deg((3.0, 80.0, 0.25), (30.0, 150.0, 0.25), 20)
            .expect("default grid is valid")
    }

    pub fn with_refine_iters(mut self, refine_iters: usize) -> Self {
        self.refine_iters = refine_iters;
        self
    }

    pub fn n_points(&self) -> usize {
        self.r_axis.len() * self.theta_axis.len()
    }
}

/// Per-subcarrier subspaces of one received data set.
#[derive(Debug, Clone)]
pub struct WidebandSubspaces {
    pub array: ArrayConfig,
    pub freq_grid: FrequencyGrid,
    pub per_subcarrier: Vec<SubspaceDecomposition>,
}

impl WidebandSubspaces {
    pub fn new(
        array: ArrayConfig,
        freq_grid: FrequencyGrid,
        per_subcarrier: Vec<SubspaceDecomposition>,
    ) -> Result<Self> {
        if per_subcarrier.len() != freq_grid.n_subcarriers() {
            return Err(Error::DimensionMismatch {
                expected: freq_grid.n_subcarriers(),
                found: per_subcarrier.len(),
            });
        }
        if let Some(bad) = per_subcarrier.iter().find(|d| d.n_elements() != array.n_elements()) {
            return Err(Error::DimensionMismatch {
                expected: array.n_elements(),
                found: bad.n_elements(),
            });
        }
        Ok(WidebandSubspaces { array, freq_grid, per_subcarrier })
    }

    /// Covariance, eigendecomposition and split on every subcarrier.
    pub fn from_received(received: &ReceivedData, n_signals: usize) -> Result<Self> {
        let per_subcarrier = received
            .per_subcarrier
            .iter()
            .map(|y| decompose(y, n_signals))
            .collect::<Result<Vec<_>>>()?;
        Self::new(received.array, received.freq_grid, per_subcarrier)
    }

    pub fn n_signals(&self) -> usize {
        self.per_subcarrier.first().map_or(0, SubspaceDecomposition::n_signals)
    }

    fn floor(&self) -> f64 {
        DENOMINATOR_FLOOR * (self.freq_grid.n_subcarriers() * self.array.n_elements()) as f64
    }
}

/// `1 / sum_m ||U_m^H a_m(r, theta)||^2` with directly computed steering
/// vectors and the noise bases.
pub fn sf_spectrum_value(range_m: f64, angle_rad: f64, subspaces: &WidebandSubspaces) -> f64 {
    let target = Target { range_m, angle_rad };
    let denom: f64 = subspaces
        .per_subcarrier
        .iter()
        .enumerate()
        .map(|(m, dec)| {
            let a = steering_vector(&subspaces.array, subspaces.freq_grid.frequency(m), &target);
            projection_energy(&dec.noise_basis, &a)
        })
        .sum();
    1.0 / denom.max(subspaces.floor())
}

/// `sum_m tr(P_{a_m} V_m V_m^H) = sum_m ||V_m^H a_m||^2 / ||a_m||^2`.
pub fn projection_trace(range_m: f64, angle_rad: f64, subspaces: &WidebandSubspaces) -> f64 {
    let target = Target { range_m, angle_rad };
    subspaces
        .per_subcarrier
        .iter()
        .enumerate()
        .map(|(m, dec)| {
            let a = steering_vector(&subspaces.array, subspaces.freq_grid.frequency(m), &target);
            projection_energy(&dec.signal_basis, &a) / norm_sqr(&a)
        })
        .sum()
}

/// Least-squares fitting error `sum_m ||(I - a_m a_m^+) V_m||_F^2`, computed
/// explicitly column by column.
pub fn fit_residual(range_m: f64, angle_rad: f64, subspaces: &WidebandSubspaces) -> f64 {
    let target = Target { range_m, angle_rad };
    let mut total = 0.0;
    for (m, dec) in subspaces.per_subcarrier.iter().enumerate() {
        let a = steering_vector(&subspaces.array, subspaces.freq_grid.frequency(m), &target);
        let aa = norm_sqr(&a);
        for j in 0..dec.signal_basis.cols() {
            let v = dec.signal_basis.col(j);
            let coef = dot_conj(&a, v) / aa;
            total += v.iter().zip(&a).map(|(vi, ai)| (vi - ai * coef).norm_sqr()).sum::<f64>();
        }
    }
    total
}

/// Fast repeated evaluation of the spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumEvaluator<'a> {
    subspaces: &'a WidebandSubspaces,
    bank: SteeringBank,
    use_signal_basis: bool,
}

impl<'a> SpectrumEvaluator<'a> {
    pub fn new(subspaces: &'a WidebandSubspaces) -> Self {
        let n = subspaces.array.n_elements();
        let p = subspaces.n_signals();
        SpectrumEvaluator {
            subspaces,
            bank: SteeringBank::new(&subspaces.array, &subspaces.freq_grid),
            use_signal_basis: p <= n - p,
        }
    }

    /// `sum_m ||U_m^H a_m||^2`, unfloored.
    pub fn denominator(&mut self, range_m: f64, angle_rad: f64) -> f64 {
        self.bank.fill(range_m, angle_rad);
        let bank = &self.bank;
        self.subspaces
            .per_subcarrier
            .iter()
            .enumerate()
            .map(|(m, dec)| {
                let a = bank.subcarrier(m);
                if self.use_signal_basis {
                    norm_sqr(a) - projection_energy(&dec.signal_basis, a)
                } else {
                    projection_energy(&dec.noise_basis, a)
                }
            })
            .sum()
    }

    pub fn value(&mut self, range_m: f64, angle_rad: f64) -> f64 {
        let floor = self.subspaces.floor();
        1.0 / self.denominator(range_m, angle_rad).max(floor)
    }
}

/// Sampled `J(r, theta)`, row-major with one row per range.
#[derive(Debug, Clone)]
pub struct SpectrumGrid {
    pub values: Vec<f64>,
    pub grid: SearchGrid,
}

impl SpectrumGrid {
    #[inline]
    pub fn get(&self, i_r: usize, i_theta: usize) -> f64 {
        self.values[i_r * self.grid.theta_axis.len() + i_theta]
    }

    /// Location of the largest value (first in scan order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let cols = self.grid.theta_axis.len();
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        (best / cols, best % cols)
    }

    /// `(r, theta, J)` triples in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let cols = self.grid.theta_axis.len();
        self.values.iter().enumerate().map(move |(k, &v)| {
            (self.grid.r_axis[k / cols], self.grid.theta_axis[k % cols], v)
        })
    }
}

/// Spectrum values of the range rows `rows`, row-major.
pub fn evaluate_spectrum_rows(
    grid: &SearchGrid,
    subspaces: &WidebandSubspaces,
    rows: Range<usize>,
) -> Vec<f64> {
    let mut eval = SpectrumEvaluator::new(subspaces);
    let mut out = Vec::with_capacity(rows.len() * grid.theta_axis.len());
    for i in rows {
        let r = grid.r_axis[i];
        for &theta in grid.theta_axis.points() {
            out.push(eval.value(r, theta));
        }
    }
    out
}

pub fn evaluate_spectrum(grid: &SearchGrid, subspaces: &WidebandSubspaces) -> SpectrumGrid {
    SpectrumGrid {
        values: evaluate_spectrum_rows(grid, subspaces, 0..grid.r_axis.len()),
        grid: grid.clone(),
    }
}

/// Joint estimates, highest spectrum peak first.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub targets: Vec<Target>,
    pub peak_values: Vec<f64>,
}

/// The `P` highest strict local maxima of `spectrum`, each refined with
/// `objective` (the continuous spectrum) when `refine_iters > 0`.
pub fn pick_peaks(
    spectrum: &SpectrumGrid,
    n_targets: usize,
    mut objective: impl FnMut(f64, f64) -> f64,
) -> Result<Estimate> {
    let grid = &spectrum.grid;
    let (rows, cols) = (grid.r_axis.len(), grid.theta_axis.len());
    let maxima = local_maxima_2d(&spectrum.values, rows, cols);
    if maxima.len() < n_targets {
        return Err(Error::DetectionFailure { wanted: n_targets, found: maxima.len() });
    }
    let mut picked: Vec<(Target, f64)> = maxima[..n_targets]
        .iter()
        .map(|&(i, j)| {
            let start = (grid.r_axis[i], grid.theta_axis[j], spectrum.get(i, j));
            let (r, t, v) = refine_2d(
                &mut objective,
                start,
                grid.r_axis.neighborhood(i),
                grid.theta_axis.neighborhood(j),
                grid.refine_iters,
            );
            (Target { range_m: r, angle_rad: t }, v)
        })
        .collect();
    picked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
    Ok(Estimate {
        targets: picked.iter().map(|p| p.0).collect(),
        peak_values: picked.iter().map(|p| p.1).collect(),
    })
}

/// Grid search and peak picking on precomputed subspaces.
pub fn estimate_sf_from(
    subspaces: &WidebandSubspaces,
    grid: &SearchGrid,
) -> Result<(SpectrumGrid, Estimate)> {
    let spectrum = evaluate_spectrum(grid, subspaces);
    let mut eval = SpectrumEvaluator::new(subspaces);
    let est = pick_peaks(&spectrum, subspaces.n_signals(), |r, t| eval.value(r, t))?;
    Ok((spectrum, est))
}

/// Full pipeline: covariance, eigendecomposition, spectrum, peaks.
pub fn estimate_sf(received: &ReceivedData, n_targets: usize, grid: &SearchGrid) -> Result<Estimate> {
    let subspaces = WidebandSubspaces::from_received(received, n_targets)?;
    estimate_sf_from(&subspaces, grid).map(|(_, est)| est)
}

/// Classical single-frequency 2D MUSIC pseudospectrum, kept independent of
/// the wideband evaluator: one explicit noise-subspace projector.
#[doc(hidden)]
pub fn narrowband_music_value(
    array: &ArrayConfig,
    freq_hz: f64,
    noise_basis: &crate::linalg::CMatrix,
    target: &Target,
) -> f64 {
    let a = steering_vector(array, freq_hz, target);
    let projector = noise_basis.matmul(&noise_basis.adjoint());
    let pa = projector.mul_vec(&a);
    let quad: C64 = dot_conj(&a, &pa);
    1.0 / quad.re
}
