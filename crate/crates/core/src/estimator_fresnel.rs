//! Low-complexity MUSIC via the Fresnel approximation.
//!
//! Under the second-order distance expansion, entry `(n, N-1-n)` of a
//! subcarrier covariance carries phase `2 delta_n gamma_p` with
//! `gamma_p = (2 pi d / lambda_m) cos theta_p`: the range terms cancel on
//! the anti-diagonal. The anti-diagonal therefore behaves like a single
//! snapshot of a virtual ULA with spacing `2d`. Spatial smoothing over `L`
//! overlapping windows restores rank `P`, and 1D MUSIC over `theta`
//! (accumulated across subcarriers) yields angle estimates. Each angle is
//! then paired with a range from a 1D search of the exact-steering
//! spectrum of the full array.
//!
//! With `d = lambda_c / 2` the virtual spacing is one wavelength, so every
//! angle peak has twins at `cos theta +- lambda / (2d)`. All twins are
//! forwarded to the range stage. Candidates are accepted in order of their
//! range-peak height, skipping any within half a beamwidth of the full array
//! (`|cos theta - cos theta'| < 2/N`) of one already accepted.
//!
//! Arrays with even `N` use their first `N - 1` elements for the angle
//! stage so that the anti-diagonal is centred on an element.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::estimator_sf::{Estimate, SearchGrid, SpectrumEvaluator, WidebandSubspaces};
use crate::geometry::{FrequencyGrid, Target, SPEED_OF_LIGHT};
use crate::linalg::{norm_sqr, projection_energy, CMatrix, C64};
use crate::search::{local_maxima_1d, refine_1d, Axis};
use crate::signal::ReceivedData;
use crate::subspace::{hermitian_eig, sample_covariance, split_subspaces, SubspaceDecomposition};

/// Anti-diagonal of an odd-sized covariance, `values[i] = Sigma[i, 2N' - i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiDiagonalVector {
    pub values: Vec<C64>,
    pub n_half: usize,
}

/// Window-averaged covariance of an anti-diagonal vector.
#[derive(Debug, Clone)]
pub struct SmoothedCovariance {
    pub matrix: CMatrix,
    pub window_len: usize,
    pub n_windows: usize,
}

pub fn antidiagonal_vector(sigma: &CMatrix) -> Result<AntiDiagonalVector> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch { expected: sigma.rows(), found: sigma.cols() });
    }
    let n = sigma.rows();
    if n % 2 == 0 {
        return Err(invalid("sigma", "anti-diagonal extraction needs an odd dimension"));
    }
    Ok(AntiDiagonalVector {
        values: (0..n).map(|i| sigma[(i, n - 1 - i)]).collect(),
        n_half: n / 2,
    })
}

/// `(1/L) sum_l y(l) y(l)^H` over the `L` contiguous windows of length
/// `2N' + 2 - L`.
pub fn spatial_smooth(ybar: &AntiDiagonalVector, n_windows: usize) -> Result<SmoothedCovariance> {
    let len = ybar.values.len();
    if n_windows == 0 || n_windows > len {
        return Err(invalid("n_windows", "need 1 <= L <= 2N' + 1"));
    }
    let w = len + 1 - n_windows;
    let mut matrix = CMatrix::zeros(w, w);
    for l in 0..n_windows {
        let win = &ybar.values[l..l + w];
        for j in 0..w {
            let cj = win[j].conj();
            for (out, &x) in matrix.col_mut(j).iter_mut().zip(win) {
                *out += x * cj;
            }
        }
    }
    matrix.scale(1.0 / n_windows as f64);
    matrix.symmetrize();
    Ok(SmoothedCovariance { matrix, window_len: w, n_windows })
}

/// Odd element count used by the angle stage.
pub fn odd_aperture(n_elements: usize) -> usize {
    2 * ((n_elements - 1) / 2) + 1
}

/// Search axes and smoothing length.
#[derive(Debug, Clone, PartialEq)]
pub struct FresnelConfig {
    pub theta_axis: Axis,
    pub r_axis: Axis,
    pub refine_iters: usize,
    /// Number of smoothing windows `L`.
    pub n_windows: usize,
}

impl FresnelConfig {
    pub fn from_grid(grid: &SearchGrid, n_windows: usize) -> Self {
        FresnelConfig {
            theta_axis: grid.theta_axis.clone(),
            r_axis: grid.r_axis.clone(),
            refine_iters: grid.refine_iters,
            n_windows,
        }
    }

    fn validate(&self, n_half: usize, n_targets: usize) -> Result<()> {
        let len = 2 * n_half + 1;
        if self.n_windows <= n_targets || self.n_windows > len {
            return Err(invalid("n_windows", "need P < L <= 2N' + 1"));
        }
        if len + 1 - self.n_windows <= n_targets {
            return Err(invalid("n_windows", "window length 2N' + 2 - L must exceed P"));
        }
        Ok(())
    }
}

/// Smoothed-covariance subspaces for every subcarrier.
#[derive(Debug, Clone)]
pub struct VirtualSubspaces {
    pub freq_grid: FrequencyGrid,
    pub spacing_m: f64,
    pub window_len: usize,
    pub per_subcarrier: Vec<SubspaceDecomposition>,
}

/// Repeated evaluation of the accumulated angle pseudospectrum.
#[derive(Debug, Clone)]
pub struct AngleEvaluator<'a> {
    subspaces: &'a VirtualSubspaces,
    steer: Vec<C64>,
    use_signal_basis: bool,
}

impl<'a> AngleEvaluator<'a> {
    pub fn new(subspaces: &'a VirtualSubspaces) -> Self {
        let p = subspaces.per_subcarrier.first().map_or(0, SubspaceDecomposition::n_signals);
        AngleEvaluator {
            subspaces,
            steer: alloc::vec![C64::new(0.0, 0.0); subspaces.window_len],
            use_signal_basis: p <= subspaces.window_len - p,
        }
    }

    /// `1 / sum_m ||U~_m^H a~_m(theta)||^2` where `a~_m` has entries
    /// `exp(j 2 i gamma_m(theta))`, `i = 0..W`.
    pub fn value(&mut self, angle_rad: f64) -> f64 {
        let sub = self.subspaces;
        let cos_t = angle_rad.cos();
        let mut denom = 0.0;
        for (m, dec) in sub.per_subcarrier.iter().enumerate() {
            let gamma = 2.0 * PI * sub.spacing_m * sub.freq_grid.frequency(m) / SPEED_OF_LIGHT * cos_t;
            let rot = C64::from_polar(1.0, 2.0 * gamma);
            let mut z = C64::new(1.0, 0.0);
            for s in self.steer.iter_mut() {
                *s = z;
                z *= rot;
            }
            denom += if self.use_signal_basis {
                norm_sqr(&self.steer) - projection_energy(&dec.signal_basis, &self.steer)
            } else {
                projection_energy(&dec.noise_basis, &self.steer)
            };
        }
        let floor = 1e-12 * (sub.per_subcarrier.len() * sub.window_len) as f64;
        1.0 / denom.max(floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePeak {
    pub angle_rad: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct AngleSpectrum {
    pub theta_axis: Axis,
    pub values: Vec<f64>,
    /// Refined local maxima, highest first.
    pub peaks: Vec<AnglePeak>,
    /// Peaks followed by their grating-lobe twins, de-duplicated.
    pub candidates: Vec<f64>,
}

/// Evaluates the angle spectrum, keeps up to `max_peaks` local maxima
/// (at least `n_targets` are required) and expands them into candidates.
pub fn angle_spectrum(
    subspaces: &VirtualSubspaces,
    theta_axis: &Axis,
    n_targets: usize,
    max_peaks: usize,
    refine_iters: usize,
) -> Result<AngleSpectrum> {
    let mut eval = AngleEvaluator::new(subspaces);
    let values: Vec<f64> = theta_axis.points().iter().map(|&t| eval.value(t)).collect();
    let maxima = local_maxima_1d(&values);
    if maxima.len() < n_targets {
        return Err(Error::DetectionFailure { wanted: n_targets, found: maxima.len() });
    }
    let mut peaks: Vec<AnglePeak> = maxima
        .iter()
        .take(max_peaks.max(n_targets))
        .map(|&i| {
            let (angle_rad, value) = refine_1d(
                |t| eval.value(t),
                (theta_axis[i], values[i]),
                theta_axis.neighborhood(i),
                refine_iters,
            );
            AnglePeak { angle_rad, value }
        })
        .collect();
    peaks.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(core::cmp::Ordering::Equal));

    let tol = 2.0 * theta_axis.min_step();
    let mut candidates: Vec<f64> = Vec::new();
    let push = |c: f64, list: &mut Vec<f64>| {
        if list.iter().all(|&x| (x - c).abs() > tol) {
            list.push(c);
        }
    };
    for p in &peaks {
        push(p.angle_rad, &mut candidates);
    }
    let shift = SPEED_OF_LIGHT / subspaces.freq_grid.mean_frequency() / (2.0 * subspaces.spacing_m);
    for p in &peaks {
        for twin in grating_twins(p.angle_rad, shift) {
            push(twin, &mut candidates);
        }
    }
    Ok(AngleSpectrum { theta_axis: theta_axis.clone(), values, peaks, candidates })
}

/// Angles with `cos theta' = cos theta +- shift`, when inside `(0, pi)`.
pub fn grating_twins(angle_rad: f64, shift: f64) -> impl Iterator<Item = f64> {
    let c = angle_rad.cos();
    [c + shift, c - shift].into_iter().filter(|v| v.abs() < 1.0 - 1e-9).map(|v| v.acos())
}

#[derive(Debug, Clone)]
pub struct DistanceSpectrum {
    pub angle_rad: f64,
    pub r_axis: Axis,
    pub values: Vec<f64>,
    pub range_m: f64,
    pub peak: f64,
}

/// Exact-steering spectrum along `r` at a fixed angle; global argmax
/// refined by golden-section inside its neighbouring cells.
pub fn distance_spectrum(
    angle_rad: f64,
    subspaces: &WidebandSubspaces,
    r_axis: &Axis,
    refine_iters: usize,
) -> DistanceSpectrum {
    let mut eval = SpectrumEvaluator::new(subspaces);
    let values: Vec<f64> = r_axis.points().iter().map(|&r| eval.value(r, angle_rad)).collect();
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let (range_m, peak) = refine_1d(
        |r| eval.value(r, angle_rad),
        (r_axis[best], values[best]),
        r_axis.neighborhood(best),
        refine_iters,
    );
    DistanceSpectrum { angle_rad, r_axis: r_axis.clone(), values, range_m, peak }
}

/// Estimate plus every intermediate spectrum.
#[derive(Debug, Clone)]
pub struct FresnelOutput {
    pub estimate: Estimate,
    pub angle: AngleSpectrum,
    pub distances: Vec<DistanceSpectrum>,
}

/// Smoothed subspaces from per-subcarrier full-array covariances.
pub fn virtual_subspaces(
    covariances: &[CMatrix],
    freq_grid: FrequencyGrid,
    spacing_m: f64,
    n_targets: usize,
    n_windows: usize,
) -> Result<VirtualSubspaces> {
    let n = covariances.first().map_or(0, CMatrix::rows);
    if n < 3 {
        return Err(invalid("n_elements", "angle stage needs at least three elements"));
    }
    let odd = odd_aperture(n);
    let mut window_len = 0;
    let per_subcarrier = covariances
        .iter()
        .map(|cov| {
            let ybar = antidiagonal_vector(&cov.leading_block(odd))?;
            let smoothed = spatial_smooth(&ybar, n_windows)?;
            window_len = smoothed.window_len;
            split_subspaces(&hermitian_eig(&smoothed.matrix)?, n_targets)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VirtualSubspaces { freq_grid, spacing_m, window_len, per_subcarrier })
}

pub fn estimate_fresnel_detailed(
    received: &ReceivedData,
    n_targets: usize,
    cfg: &FresnelConfig,
) -> Result<FresnelOutput> {
    let n = received.array.n_elements();
    if n < 3 {
        return Err(invalid("n_elements", "angle stage needs at least three elements"));
    }
    cfg.validate(odd_aperture(n) / 2, n_targets)?;
    let covariances =
        received.per_subcarrier.iter().map(sample_covariance).collect::<Result<Vec<_>>>()?;
    let full = covariances
        .iter()
        .map(|c| split_subspaces(&hermitian_eig(c)?, n_targets))
        .collect::<Result<Vec<_>>>()?;
    let full = WidebandSubspaces::new(received.array, received.freq_grid, full)?;
    let virt = virtual_subspaces(
        &covariances,
        received.freq_grid,
        received.array.spacing_m(),
        n_targets,
        cfg.n_windows,
    )?;
    estimate_fresnel_from(&full, &virt, n_targets, cfg)
}

/// Angle and range stages on precomputed subspaces.
pub fn estimate_fresnel_from(
    full: &WidebandSubspaces,
    virt: &VirtualSubspaces,
    n_targets: usize,
    cfg: &FresnelConfig,
) -> Result<FresnelOutput> {
    let angle = angle_spectrum(virt, &cfg.theta_axis, n_targets, 4 * n_targets, cfg.refine_iters)?;
    let distances: Vec<DistanceSpectrum> = angle
        .candidates
        .iter()
        .map(|&t| distance_spectrum(t, full, &cfg.r_axis, cfg.refine_iters))
        .collect();

    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| {
        distances[b].peak.partial_cmp(&distances[a].peak).unwrap_or(core::cmp::Ordering::Equal)
    });
    // Half the null-to-null beamwidth of the full array, in cos(theta).
    let beam = 2.0 / full.array.n_elements() as f64;
    let mut chosen: Vec<usize> = Vec::with_capacity(n_targets);
    for i in order {
        if chosen.len() == n_targets {
            break;
        }
        let c = distances[i].angle_rad.cos();
        if chosen.iter().all(|&k| (distances[k].angle_rad.cos() - c).abs() >= beam) {
            chosen.push(i);
        }
    }
    if chosen.len() < n_targets {
        return Err(Error::DetectionFailure { wanted: n_targets, found: chosen.len() });
    }
    let estimate = Estimate {
        targets: chosen
            .iter()
            .map(|&i| Target { range_m: distances[i].range_m, angle_rad: distances[i].angle_rad })
            .collect(),
        peak_values: chosen.iter().map(|&i| distances[i].peak).collect(),
    };
    Ok(FresnelOutput { estimate, angle, distances })
}

pub fn estimate_fresnel(
    received: &ReceivedData,
    n_targets: usize,
    cfg: &FresnelConfig,
) -> Result<Estimate> {
    estimate_fresnel_detailed(received, n_targets, cfg).map(|o| o.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fresnel_phase_params, fresnel_steering_vector, ArrayConfig};
    use alloc::vec;

    fn fresnel_covariance(array: &ArrayConfig, f: f64, targets: &[Target], chi: &[f64]) -> CMatrix {
        let n = array.n_elements();
        let vs: Vec<Vec<C64>> = targets.iter().map(|t| fresnel_steering_vector(array, f, t)).collect();
        CMatrix::from_fn(n, n, |i, j| {
            vs.iter().zip(chi).map(|(v, &c)| v[i] * v[j].conj() * c).sum()
        })
    }

    #[test]
    fn rejects_even_dimension_and_bad_windows() {
        assert!(antidiagonal_vector(&CMatrix::identity(4)).is_err());
        let y = antidiagonal_vector(&CMatrix::identity(5)).unwrap();
        assert_eq!(y.n_half, 2);
        assert!(spatial_smooth(&y, 0).is_err());
        assert!(spatial_smooth(&y, 6).is_err());
        assert_eq!(odd_aperture(128), 127);
        assert_eq!(odd_aperture(65), 65);
    }

    #[test]
    fn broadside_antidiagonal_is_real_positive() {
        let array = ArrayConfig::new(9, 28e9).unwrap();
        let t = Target::new(0.6, PI / 2.0).unwrap();
        let cov = fresnel_covariance(&array, 28e9, &[t], &[1.0]);
        let y = antidiagonal_vector(&cov).unwrap();
        assert!(y.values.iter().all(|z| z.arg().abs() < 1e-12));
    }

    #[test]
    fn antidiagonal_phase_is_twice_gamma_delta() {
        let array = ArrayConfig::new(11, 28e9).unwrap();
        let f = 29.3e9;
        let t = Target::new(1.3, 1.1).unwrap();
        let cov = fresnel_covariance(&array, f, &[t], &[1.0]);
        let y = antidiagonal_vector(&cov).unwrap();
        let gamma = fresnel_phase_params(&array, f, &t).gamma;
        for (i, z) in y.values.iter().enumerate() {
            let want = C64::from_polar(1.0, 2.0 * array.element_offset(i) * gamma);
            assert!((z - want).norm() < 1e-10);
        }
    }

    #[test]
    fn antidiagonal_two_targets_matches_sum() {
        let array = ArrayConfig::new(5, 28e9).unwrap();
        let ts = [Target::new(0.2, 1.0).unwrap(), Target::new(0.3, 2.1).unwrap()];
        let chi = [0.7, 1.3];
        let cov = fresnel_covariance(&array, 28e9, &ts, &chi);
        let y = antidiagonal_vector(&cov).unwrap();
        for (i, z) in y.values.iter().enumerate() {
            let want: C64 = ts
                .iter()
                .zip(chi)
                .map(|(t, c)| {
                    let g = fresnel_phase_params(&array, 28e9, t).gamma;
                    C64::from_polar(c, 2.0 * array.element_offset(i) * g)
                })
                .sum();
            assert!((z - want).norm() < 1e-9);
        }
    }

    #[test]
    fn smoothing_rank() {
        let y = AntiDiagonalVector { values: vec![C64::new(2.0, 0.0); 7], n_half: 3 };
        let s = spatial_smooth(&y, 1).unwrap();
        assert_eq!(s.window_len, 7);
        assert!(s.matrix.as_slice().iter().all(|z| (z - C64::new(4.0, 0.0)).norm() < 1e-14));
        let s = spatial_smooth(&y, 3).unwrap();
        let eig = hermitian_eig(&s.matrix).unwrap();
        assert!(eig.values[1].abs() < 1e-10 * eig.values[0]);

        let array = ArrayConfig::new(101, 28e9).unwrap();
        let ts = [Target::new(5.0, 1.2).unwrap(), Target::new(8.0, 1.7).unwrap()];
        let cov = fresnel_covariance(&array, 28e9, &ts, &[1.0, 1.0]);
        let s = spatial_smooth(&antidiagonal_vector(&cov).unwrap(), 50).unwrap();
        let eig = hermitian_eig(&s.matrix).unwrap();
        let big = eig.values.iter().filter(|&&v| v > 1e-8 * eig.values[0]).count();
        assert_eq!(big, 2);
        assert!(eig.values[1] / eig.values[2].abs().max(1e-300) > 1e3);
    }

    #[test]
    fn twins_follow_virtual_spacing() {
        let twins: Vec<f64> = grating_twins(75f64.to_radians(), 1.0).collect();
        assert_eq!(twins.len(), 1);
        assert!((twins[0].cos() - (75f64.to_radians().cos() - 1.0)).abs() < 1e-12);
        assert_eq!(grating_twins(PI / 2.0, 1.0).count(), 0);
    }
}
