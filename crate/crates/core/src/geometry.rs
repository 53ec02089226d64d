//! Uniform linear array geometry, propagation distances and steering vectors.
//!
//! The array lies on the x-axis, centred on the origin. Element `n`
//! (0-based) sits at `(delta_n * d, 0)` with `delta_n = n - (N - 1) / 2`.
//! A target at range `r` and angle `theta` (measured from the positive
//! x-axis, `0 < theta < pi`) is at `(r cos theta, r sin theta)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::C64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    n_elements: usize,
    carrier_freq_hz: f64,
    spacing_m: f64,
}

impl ArrayConfig {
    /// Half-wavelength array at the carrier frequency.
    pub fn new(n_elements: usize, carrier_freq_hz: f64) -> Result<Self> {
        if !(carrier_freq_hz > 0.0 && carrier_freq_hz.is_finite()) {
            return Err(invalid("carrier_freq_hz", "must be positive and finite"));
        }
        Self::with_spacing(n_elements, carrier_freq_hz, SPEED_OF_LIGHT / carrier_freq_hz / 2.0)
    }

    pub fn with_spacing(n_elements: usize, carrier_freq_hz: f64, spacing_m: f64) -> Result<Self> {
        if n_elements < 2 {
            return Err(invalid("n_elements", "need at least two elements"));
        }
        if !(carrier_freq_hz > 0.0 && carrier_freq_hz.is_finite()) {
            return Err(invalid("carrier_freq_hz", "must be positive and finite"));
        }
        if !(spacing_m > 0.0 && spacing_m.is_finite()) {
            return Err(invalid("spacing_m", "must be positive and finite"));
        }
        Ok(ArrayConfig { n_elements, carrier_freq_hz, spacing_m })
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn carrier_freq_hz(&self) -> f64 {
        self.carrier_freq_hz
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn carrier_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// `D = N d`.
    pub fn aperture(&self) -> f64 {
        self.n_elements as f64 * self.spacing_m
    }

    /// The same array truncated to its first `n` elements (same spacing and
    /// carrier). Offsets are recomputed about the truncated array's centre.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n > self.n_elements {
            return Err(Error::IndexOutOfRange { index: n, len: self.n_elements });
        }
        Self::with_spacing(n, self.carrier_freq_hz, self.spacing_m)
    }

    #[inline]
    pub fn element_offset(&self, n: usize) -> f64 {
        n as f64 - (self.n_elements as f64 - 1.0) / 2.0
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n < self.n_elements {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: n, len: self.n_elements })
        }
    }
}

/// Point target in polar coordinates about the array centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub range_m: f64,
    pub angle_rad: f64,
}

impl Target {
    pub fn new(range_m: f64, angle_rad: f64) -> Result<Self> {
        if !(range_m > 0.0 && range_m.is_finite()) {
            return Err(invalid("range_m", "must be positive and finite"));
        }
        if !(angle_rad > 0.0 && angle_rad < PI) {
            return Err(invalid("angle_rad", "must lie strictly inside (0, pi)"));
        }
        Ok(Target { range_m, angle_rad })
    }

    pub fn from_degrees(range_m: f64, angle_deg: f64) -> Result<Self> {
        Self::new(range_m, angle_deg.to_radians())
    }

    /// Cartesian position `(r cos theta, r sin theta)`.
    pub fn position(&self) -> (f64, f64) {
        let (s, c) = self.angle_rad.sin_cos();
        (self.range_m * c, self.range_m * s)
    }
}

/// OFDM subcarrier frequencies `f_m = f_c + m * df`, `m = 0..M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    n_subcarriers: usize,
    spacing_hz: f64,
    carrier_freq_hz: f64,
}

impl FrequencyGrid {
    pub fn new(n_subcarriers: usize, spacing_hz: f64, carrier_freq_hz: f64) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(invalid("n_subcarriers", "must be at least 1"));
        }
        if !(spacing_hz > 0.0 && spacing_hz.is_finite()) {
            return Err(invalid("spacing_hz", "must be positive and finite"));
        }
        if !(carrier_freq_hz > 0.0 && carrier_freq_hz.is_finite()) {
            return Err(invalid("carrier_freq_hz", "must be positive and finite"));
        }
        Ok(FrequencyGrid { n_subcarriers, spacing_hz, carrier_freq_hz })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn spacing_hz(&self) -> f64 {
        self.spacing_hz
    }

    pub fn carrier_freq_hz(&self) -> f64 {
        self.carrier_freq_hz
    }

    #[inline]
    pub fn frequency(&self, m: usize) -> f64 {
        self.carrier_freq_hz + m as f64 * self.spacing_hz
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_subcarriers).map(|m| self.frequency(m)).collect()
    }

    pub fn wavelength(&self, m: usize) -> f64 {
        SPEED_OF_LIGHT / self.frequency(m)
    }

    /// `B = M df`.
    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.spacing_hz
    }

    pub fn mean_frequency(&self) -> f64 {
        self.carrier_freq_hz + (self.n_subcarriers as f64 - 1.0) / 2.0 * self.spacing_hz
    }
}

/// Element offsets `delta_n` in units of the spacing.
pub fn element_offsets(array: &ArrayConfig) -> Vec<f64> {
    (0..array.n_elements).map(|n| array.element_offset(n)).collect()
}

/// `r_n - r` computed without cancellation.
#[inline]
fn exact_excess(r: f64, cos_t: f64, x: f64) -> f64 {
    let rn = (r * r + x * x - 2.0 * r * x * cos_t).sqrt();
    (x * x - 2.0 * r * x * cos_t) / (rn + r)
}

/// Exact element-to-target distance (spherical wavefront).
pub fn exact_distance(array: &ArrayConfig, target: &Target, n: usize) -> Result<f64> {
    array.check_index(n)?;
    let x = array.element_offset(n) * array.spacing_m;
    let r = target.range_m;
    Ok((r * r + x * x - 2.0 * r * x * target.angle_rad.cos()).sqrt())
}

/// Second-order (Fresnel) approximation of the element-to-target distance.
pub fn fresnel_distance(array: &ArrayConfig, target: &Target, n: usize) -> Result<f64> {
    array.check_index(n)?;
    let x = array.element_offset(n) * array.spacing_m;
    let r = target.range_m;
    let (s, c) = target.angle_rad.sin_cos();
    Ok(r - x * c + x * x * s * s / (2.0 * r))
}

/// Exact near-field steering vector at frequency `freq_hz`:
/// entry `n` is `exp(-j 2 pi f r_n / c)`.
pub fn steering_vector(array: &ArrayConfig, freq_hz: f64, target: &Target) -> Vec<C64> {
    let k = 2.0 * PI * freq_hz / SPEED_OF_LIGHT;
    let cos_t = target.angle_rad.cos();
    let r = target.range_m;
    (0..array.n_elements)
        .map(|n| {
            let x = array.element_offset(n) * array.spacing_m;
            let rn = (r * r + x * x - 2.0 * r * x * cos_t).sqrt();
            C64::from_polar(1.0, -k * rn)
        })
        .collect()
}

/// Steering vector built from the Fresnel-approximated distances.
pub fn fresnel_steering_vector(array: &ArrayConfig, freq_hz: f64, target: &Target) -> Vec<C64> {
    let p = fresnel_phase_params(array, freq_hz, target);
    (0..array.n_elements)
        .map(|n| {
            let delta = array.element_offset(n);
            C64::from_polar(1.0, p.phase(delta))
        })
        .collect()
}

/// Phase coefficients of the Fresnel steering vector: the phase of entry
/// `n` is `phi + gamma * delta_n + eta * delta_n^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelPhase {
    pub phi: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl FresnelPhase {
    #[inline]
    pub fn phase(&self, delta: f64) -> f64 {
        self.phi + self.gamma * delta + self.eta * delta * delta
    }
}

pub fn fresnel_phase_params(array: &ArrayConfig, freq_hz: f64, target: &Target) -> FresnelPhase {
    let lambda = SPEED_OF_LIGHT / freq_hz;
    let d = array.spacing_m;
    let r = target.range_m;
    let (s, c) = target.angle_rad.sin_cos();
    FresnelPhase {
        phi: -2.0 * PI * r / lambda,
        gamma: 2.0 * PI * d / lambda * c,
        eta: -PI * d * d / (lambda * r) * s * s,
    }
}

/// Near-field boundary `2 D^2 / lambda_c`.
pub fn rayleigh_distance(array: &ArrayConfig) -> f64 {
    let aperture = array.aperture();
    2.0 * aperture * aperture / array.carrier_wavelength()
}

/// Exact steering vectors for every subcarrier at one `(r, theta)`, up to a
/// per-subcarrier common phase `exp(-j 2 pi f_m r / c)`.
///
/// Only the element-dependent part `r_n - r` enters the phase, and
/// successive subcarriers are generated by a per-element rotation, so a
/// full bank costs `2N` trigonometric evaluations instead of `MN`.
/// Projections onto subspaces are unaffected by the dropped common phase.
#[derive(Debug, Clone)]
pub struct SteeringBank {
    offsets: Vec<f64>,
    k0: f64,
    dk: f64,
    n_subcarriers: usize,
    steps: Vec<C64>,
    data: Vec<C64>,
}

impl SteeringBank {
    pub fn new(array: &ArrayConfig, grid: &FrequencyGrid) -> Self {
        let n = array.n_elements;
        SteeringBank {
            offsets: (0..n).map(|i| array.element_offset(i) * array.spacing_m).collect(),
            k0: 2.0 * PI * grid.frequency(0) / SPEED_OF_LIGHT,
            dk: 2.0 * PI * grid.spacing_hz() / SPEED_OF_LIGHT,
            n_subcarriers: grid.n_subcarriers(),
            steps: alloc::vec![C64::new(0.0, 0.0); n],
            data: alloc::vec![C64::new(0.0, 0.0); n * grid.n_subcarriers()],
        }
    }

    pub fn n_elements(&self) -> usize {
        self.offsets.len()
    }

    /// Recomputes the bank for a new location.
    pub fn fill(&mut self, range_m: f64, angle_rad: f64) {
        let n = self.offsets.len();
        let cos_t = angle_rad.cos();
        let (head, tail) = self.data.split_at_mut(n);
        let wideband = self.n_subcarriers > 1;
        for (i, &x) in self.offsets.iter().enumerate() {
            let excess = exact_excess(range_m, cos_t, x);
            head[i] = C64::from_polar(1.0, -self.k0 * excess);
            if wideband {
                self.steps[i] = C64::from_polar(1.0, -self.dk * excess);
            }
        }
        let mut prev: &[C64] = head;
        for chunk in tail.chunks_exact_mut(n) {
            for ((out, &p), &s) in chunk.iter_mut().zip(prev).zip(&self.steps) {
                *out = p * s;
            }
            prev = chunk;
        }
    }

    /// Steering vector of subcarrier `m` for the last filled location.
    #[inline]
    pub fn subcarrier(&self, m: usize) -> &[C64] {
        let n = self.offsets.len();
        &self.data[m * n..(m + 1) * n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sqr;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn offsets_small_arrays() {
        let a3 = ArrayConfig::new(3, 28e9).unwrap();
        assert_eq!(element_offsets(&a3), [-1.0, 0.0, 1.0]);
        let a4 = ArrayConfig::new(4, 28e9).unwrap();
        assert_eq!(element_offsets(&a4), [-1.5, -0.5, 0.5, 1.5]);
        let a128 = ArrayConfig::new(128, 28e9).unwrap();
        let o = element_offsets(&a128);
        assert_eq!(o[0], -63.5);
        assert_eq!(o[127], 63.5);
        assert_eq!(o.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(ArrayConfig::new(1, 28e9).is_err());
        assert!(ArrayConfig::new(4, 0.0).is_err());
        assert!(ArrayConfig::with_spacing(4, 28e9, -1.0).is_err());
        assert!(Target::new(0.0, 1.0).is_err());
        assert!(Target::new(1.0, 0.0).is_err());
        assert!(Target::new(1.0, PI).is_err());
        assert!(FrequencyGrid::new(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn exact_distance_cases() {
        let a = ArrayConfig::new(5, 28e9).unwrap();
        let d = a.spacing_m();
        let t = Target::new(12.0, PI / 2.0).unwrap();
        for n in 0..5 {
            let x = a.element_offset(n) * d;
            assert!(approx(exact_distance(&a, &t, n).unwrap(), (144.0 + x * x).sqrt(), 1e-12));
        }
        assert_eq!(exact_distance(&a, &Target::new(7.5, 0.3).unwrap(), 2).unwrap(), 7.5);
        assert_eq!(
            exact_distance(&a, &t, 5),
            Err(Error::IndexOutOfRange { index: 5, len: 5 })
        );
    }

    #[test]
    fn exact_distance_matches_cartesian_oracle() {
        let a = ArrayConfig::with_spacing(5, 28e9, 0.005).unwrap();
        let t = Target::new(10.0, PI / 3.0).unwrap();
        let (px, py) = (10.0 * (PI / 3.0).cos(), 10.0 * (PI / 3.0).sin());
        let ex = -2.0 * 0.005;
        let oracle = ((px - ex).powi(2) + py * py).sqrt();
        let got = exact_distance(&a, &t, 0).unwrap();
        assert!((got - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn fresnel_distance_cases() {
        let a = ArrayConfig::new(5, 28e9).unwrap();
        let d = a.spacing_m();
        let t = Target::new(9.0, 1.1).unwrap();
        assert_eq!(fresnel_distance(&a, &t, 2).unwrap(), 9.0);
        let broadside = Target::new(9.0, PI / 2.0).unwrap();
        let x = 2.0 * d;
        assert!(approx(fresnel_distance(&a, &broadside, 4).unwrap(), 9.0 + x * x / 18.0, 1e-12));

        let big = ArrayConfig::new(128, 28e9).unwrap();
        let t = Target::new(20.0, 2.0 * PI / 5.0).unwrap();
        let exact = exact_distance(&big, &t, 0).unwrap();
        let fres = fresnel_distance(&big, &t, 0).unwrap();
        assert!((fres - exact).abs() / exact < 1e-5);
    }

    #[test]
    fn fresnel_error_shrinks_with_range() {
        let a = ArrayConfig::new(128, 28e9).unwrap();
        let mut last = f64::INFINITY;
        for r in [5.0, 10.0, 20.0, 40.0, 80.0] {
            let t = Target::new(r, 1.0).unwrap();
            let worst = (0..128)
                .map(|n| {
                    let e = exact_distance(&a, &t, n).unwrap();
                    (e - fresnel_distance(&a, &t, n).unwrap()).abs() / e
                })
                .fold(0.0, f64::max);
            assert!(worst < last, "r={r}: {worst} !< {last}");
            last = worst;
        }
    }

    #[test]
    fn steering_vector_unit_modulus() {
        let a = ArrayConfig::new(33, 28e9).unwrap();
        let t = Target::new(14.0, 1.2).unwrap();
        let v = steering_vector(&a, 29e9, &t);
        assert!(v.iter().all(|z| approx(z.norm(), 1.0, 1e-14)));
        assert!(approx(norm_sqr(&v), 33.0, 1e-11));
    }

    #[test]
    fn steering_vector_matches_cartesian_phase_oracle() {
        let a = ArrayConfig::new(4, 28e9).unwrap();
        let t = Target::new(15.0, PI / 2.0).unwrap();
        let f = 28e9;
        let v = steering_vector(&a, f, &t);
        let (px, py) = t.position();
        for (n, z) in v.iter().enumerate() {
            let ex = (n as f64 - 1.5) * a.spacing_m();
            let rn = ((px - ex).powi(2) + py * py).sqrt();
            let phase = 2.0 * PI * f * rn / SPEED_OF_LIGHT;
            let want = C64::new(phase.cos(), -phase.sin());
            assert!((z - want).norm() < 1e-10);
        }
    }

    #[test]
    fn fresnel_params_and_phase_identity() {
        let fc = 28e9;
        let lambda = SPEED_OF_LIGHT / fc;
        let a = ArrayConfig::new(9, fc).unwrap();
        let t = Target::new(lambda * 100.0, PI / 2.0).unwrap();
        let p = fresnel_phase_params(&a, fc, &t);
        assert_eq!(p.gamma.abs() < 1e-15, true);
        assert!(approx(p.eta, -PI / 400.0, 1e-15));

        let t = Target::new(3.7, 0.9).unwrap();
        let f = 30.1e9;
        let p = fresnel_phase_params(&a, f, &t);
        for n in 0..9 {
            let rn = fresnel_distance(&a, &t, n).unwrap();
            let direct = C64::from_polar(1.0, -2.0 * PI * f * rn / SPEED_OF_LIGHT);
            let via = C64::from_polar(1.0, p.phase(a.element_offset(n)));
            assert!((direct - via).norm() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_values() {
        let a = ArrayConfig::new(128, 28e9).unwrap();
        let r = rayleigh_distance(&a);
        assert!(approx(r, 87.7, 0.05), "{r}");
        let a2 = ArrayConfig::new(256, 28e9).unwrap();
        assert!(approx(rayleigh_distance(&a2) / r, 4.0, 1e-12));
        let two = ArrayConfig::new(2, 28e9).unwrap();
        assert!(approx(rayleigh_distance(&two), 2.0 * two.carrier_wavelength(), 1e-15));
    }

    #[test]
    fn steering_bank_matches_direct_up_to_common_phase() {
        let a = ArrayConfig::new(17, 28e9).unwrap();
        let grid = FrequencyGrid::new(12, 48e6, 28e9).unwrap();
        let t = Target::new(11.0, 1.9).unwrap();
        let mut bank = SteeringBank::new(&a, &grid);
        bank.fill(t.range_m, t.angle_rad);
        for m in 0..12 {
            let f = grid.frequency(m);
            let direct = steering_vector(&a, f, &t);
            let common = C64::from_polar(1.0, 2.0 * PI * f * t.range_m / SPEED_OF_LIGHT);
            for (x, y) in bank.subcarrier(m).iter().zip(&direct) {
                assert!((x - y * common).norm() < 1e-9);
            }
        }
    }
}
