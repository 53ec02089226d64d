//! Frequency-domain OFDM uplink synthesis.
//!
//! Each subcarrier `m` sees `Y_m = (beta ⊙ A_m(r, theta)) S_m + W_m`, with
//! per-target free-space gain `beta_p = c / (4 pi f_c r_p)`, unit-modulus
//! QPSK symbols and circular complex Gaussian noise scaled to a requested
//! per-antenna SNR.
//!
//! Randomness is drawn from ChaCha8 seeded with the caller's seed. Symbols
//! use stream 0 and the noise of subcarrier `m` uses stream `m + 1`, so the
//! realization of any subcarrier does not depend on how many others exist.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    exact_distance, rayleigh_distance, steering_vector, ArrayConfig, FrequencyGrid, Target,
    SPEED_OF_LIGHT,
};
use crate::linalg::{CMatrix, C64};

/// Symbol alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Modulation {
    /// `(±1 ± j) / sqrt(2)`.
    #[default]
    Qpsk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub spacing_hz: f64,
    pub n_symbols: usize,
    /// Guard interval as a fraction of the elementary symbol duration.
    pub cp_fraction: f64,
    pub modulation: Modulation,
}

impl OfdmConfig {
    pub fn new(n_subcarriers: usize, spacing_hz: f64, n_symbols: usize) -> Result<Self> {
        let cfg = OfdmConfig {
            n_subcarriers,
            spacing_hz,
            n_symbols,
            cp_fraction: 0.25,
            modulation: Modulation::Qpsk,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 {
            return Err(invalid("n_subcarriers", "must be at least 1"));
        }
        if self.n_symbols == 0 {
            return Err(invalid("n_symbols", "must be at least 1"));
        }
        if !(self.spacing_hz > 0.0 && self.spacing_hz.is_finite()) {
            return Err(invalid("spacing_hz", "must be positive and finite"));
        }
        if !(self.cp_fraction >= 0.0 && self.cp_fraction.is_finite()) {
            return Err(invalid("cp_fraction", "must be non-negative"));
        }
        Ok(())
    }

    pub fn with_spacing(mut self, spacing_hz: f64) -> Result<Self> {
        self.spacing_hz = spacing_hz;
        self.validate()?;
        Ok(self)
    }

    /// `T_d = 1 / df`.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.spacing_hz
    }

    /// `T_g`.
    pub fn guard_duration(&self) -> f64 {
        self.cp_fraction * self.symbol_duration()
    }

    /// `T_t = T_d + T_g`.
    pub fn total_duration(&self) -> f64 {
        self.symbol_duration() + self.guard_duration()
    }

    /// `T_s = 1 / (M df)`.
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.bandwidth()
    }

    pub fn bandwidth(&self) -> f64 {
        self.n_subcarriers as f64 * self.spacing_hz
    }

    pub fn freq_grid(&self, carrier_freq_hz: f64) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.n_subcarriers, self.spacing_hz, carrier_freq_hz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub targets: Vec<Target>,
}

impl Scene {
    pub fn new(targets: Vec<Target>) -> Self {
        Scene { targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Symbols `s_{k,m,p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTensor {
    n_symbols: usize,
    n_subcarriers: usize,
    n_targets: usize,
    // [m][k][p]
    data: Vec<C64>,
}

impl SymbolTensor {
    /// All-ones tensor; handy for noiseless bookkeeping checks.
    pub fn ones(n_symbols: usize, n_subcarriers: usize, n_targets: usize) -> Self {
        SymbolTensor {
            n_symbols,
            n_subcarriers,
            n_targets,
            data: vec![C64::new(1.0, 0.0); n_symbols * n_subcarriers * n_targets],
        }
    }

    #[inline]
    pub fn get(&self, k: usize, m: usize, p: usize) -> C64 {
        self.data[(m * self.n_symbols + k) * self.n_targets + p]
    }

    pub fn set(&mut self, k: usize, m: usize, p: usize, value: C64) {
        self.data[(m * self.n_symbols + k) * self.n_targets + p] = value;
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_symbols, self.n_subcarriers, self.n_targets)
    }

    pub fn iter(&self) -> impl Iterator<Item = &C64> {
        self.data.iter()
    }
}

/// Free-space gain `c / (4 pi f_c r)`.
pub fn path_loss(carrier_freq_hz: f64, range_m: f64) -> Result<f64> {
    if !(carrier_freq_hz > 0.0) {
        return Err(invalid("carrier_freq_hz", "must be positive"));
    }
    if !(range_m > 0.0) {
        return Err(invalid("range_m", "must be positive"));
    }
    Ok(SPEED_OF_LIGHT / (4.0 * PI * carrier_freq_hz * range_m))
}

fn qpsk(bits: u32) -> C64 {
    let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    C64::new(re, im)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Independent unit-modulus symbols for every `(k, m, p)`.
pub fn generate_symbols(ofdm: &OfdmConfig, n_targets: usize, seed: u64) -> Result<SymbolTensor> {
    if n_targets == 0 {
        return Err(invalid("n_targets", "must be at least 1"));
    }
    let mut rng = rng_for(seed, 0);
    let len = ofdm.n_symbols * ofdm.n_subcarriers * n_targets;
    let data = match ofdm.modulation {
        Modulation::Qpsk => (0..len).map(|_| qpsk(rng.random::<u32>())).collect(),
    };
    Ok(SymbolTensor {
        n_symbols: ofdm.n_symbols,
        n_subcarriers: ofdm.n_subcarriers,
        n_targets,
        data,
    })
}

/// Noiseless `Y_m = sum_p gains[p] a_m(r_p, theta_p) s~_{m,p}^T` for each
/// subcarrier of `grid`.
pub fn noiseless_received(
    array: &ArrayConfig,
    grid: &FrequencyGrid,
    targets: &[Target],
    gains: &[f64],
    symbols: &SymbolTensor,
) -> Vec<CMatrix> {
    let (k_count, m_count, p_count) = symbols.shape();
    assert_eq!(m_count, grid.n_subcarriers(), "symbol tensor / grid mismatch");
    assert_eq!(p_count, targets.len());
    assert_eq!(gains.len(), targets.len());
    let n = array.n_elements();
    (0..m_count)
        .map(|m| {
            let f = grid.frequency(m);
            let steer: Vec<Vec<C64>> =
                targets.iter().map(|t| steering_vector(array, f, t)).collect();
            let mut y = CMatrix::zeros(n, k_count);
            for k in 0..k_count {
                let col = y.col_mut(k);
                for (p, a) in steer.iter().enumerate() {
                    let coef = symbols.get(k, m, p) * gains[p];
                    for (out, &x) in col.iter_mut().zip(a) {
                        *out += x * coef;
                    }
                }
            }
            y
        })
        .collect()
}

/// Everything random or derived that went into one received data set.
#[derive(Debug, Clone)]
pub struct SceneRealization {
    pub scene: Scene,
    pub symbols: SymbolTensor,
    pub path_gains: Vec<f64>,
    /// Standard deviation of each complex noise entry (`E|w|^2 = sigma^2`).
    pub noise_std: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ReceivedData {
    /// One `N x K` matrix per subcarrier.
    pub per_subcarrier: Vec<CMatrix>,
    pub freq_grid: FrequencyGrid,
    pub array: ArrayConfig,
}

impl ReceivedData {
    /// Same data restricted to the first `n` antennas.
    pub fn leading_elements(&self, n: usize) -> Result<ReceivedData> {
        let array = self.array.truncated(n)?;
        let per_subcarrier = self
            .per_subcarrier
            .iter()
            .map(|y| CMatrix::from_fn(n, y.cols(), |i, j| y[(i, j)]))
            .collect();
        Ok(ReceivedData { per_subcarrier, freq_grid: self.freq_grid, array })
    }
}

fn validate_scene(array: &ArrayConfig, scene: &Scene) -> Result<()> {
    if scene.is_empty() {
        return Err(invalid("scene", "needs at least one target"));
    }
    if scene.len() >= array.n_elements() {
        return Err(invalid("scene", "number of targets must be below the number of elements"));
    }
    let limit = rayleigh_distance(array);
    for (index, t) in scene.targets.iter().enumerate() {
        if !(t.range_m < limit) {
            return Err(Error::TargetOutOfRegion { index, range_m: t.range_m, limit_m: limit });
        }
    }
    Ok(())
}

/// Synthesizes a scene and returns the realization alongside the data.
///
/// `snr_db = +inf` disables noise. The noise variance is the mean power of
/// the noiseless entries (over all `m, n, k`) divided by `10^(snr/10)`.
pub fn realize(
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    scene: &Scene,
    snr_db: f64,
    seed: u64,
) -> Result<(SceneRealization, ReceivedData)> {
    ofdm.validate()?;
    validate_scene(array, scene)?;
    if snr_db.is_nan() {
        return Err(invalid("snr_db", "must not be NaN"));
    }
    let grid = ofdm.freq_grid(array.carrier_freq_hz())?;
    let symbols = generate_symbols(ofdm, scene.len(), seed)?;
    let gains = scene
        .targets
        .iter()
        .map(|t| path_loss(array.carrier_freq_hz(), t.range_m))
        .collect::<Result<Vec<_>>>()?;
    let mut per_subcarrier = noiseless_received(array, &grid, &scene.targets, &gains, &symbols);

    let noise_std = if snr_db == f64::INFINITY {
        0.0
    } else {
        let count: usize = per_subcarrier.iter().map(|y| y.as_slice().len()).sum();
        let power: f64 = per_subcarrier
            .iter()
            .flat_map(|y| y.as_slice())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / count as f64;
        (power / 10f64.powf(snr_db / 10.0)).sqrt()
    };
    if noise_std > 0.0 {
        let component = noise_std * FRAC_1_SQRT_2;
        for (m, y) in per_subcarrier.iter_mut().enumerate() {
            let mut rng = rng_for(seed, m as u64 + 1);
            for z in y.as_mut_slice() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z += C64::new(re * component, im * component);
            }
        }
    }
    let realization = SceneRealization {
        scene: scene.clone(),
        symbols,
        path_gains: gains,
        noise_std,
        seed,
    };
    Ok((realization, ReceivedData { per_subcarrier, freq_grid: grid, array: *array }))
}

pub fn synthesize_received(
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    scene: &Scene,
    snr_db: f64,
    seed: u64,
) -> Result<ReceivedData> {
    realize(array, ofdm, scene, snr_db, seed).map(|(_, data)| data)
}

/// Channel gain used by the time-domain validator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainModel {
    /// `beta_p = c / (4 pi f_c r_p)` for every element and subcarrier.
    #[default]
    FrequencyIndependent,
    /// `beta_{p,n,m} = c / (4 pi f_m r_{p,n})`.
    FrequencyDependent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip {
    pub max_abs_deviation: f64,
    pub max_magnitude: f64,
}

impl RoundTrip {
    pub fn relative(&self) -> f64 {
        if self.max_magnitude > 0.0 {
            self.max_abs_deviation / self.max_magnitude
        } else {
            self.max_abs_deviation
        }
    }
}

/// Builds the sampled time-domain OFDM signal (after CP removal), takes its
/// DFT and compares each bin with the direct frequency-domain model.
///
/// Brute force; restricted to `N <= 8`, `M <= 16`, `K <= 4`.
pub fn time_domain_roundtrip(
    array: &ArrayConfig,
    ofdm: &OfdmConfig,
    scene: &Scene,
    seed: u64,
    gain_model: GainModel,
) -> Result<RoundTrip> {
    ofdm.validate()?;
    let n = array.n_elements();
    for (what, value, max) in [
        ("n_elements", n, 8),
        ("n_subcarriers", ofdm.n_subcarriers, 16),
        ("n_symbols", ofdm.n_symbols, 4),
    ] {
        if value > max {
            return Err(Error::InstanceTooLarge { what, value, max });
        }
    }
    if scene.is_empty() {
        return Err(invalid("scene", "needs at least one target"));
    }
    let m_count = ofdm.n_subcarriers;
    let fc = array.carrier_freq_hz();
    let grid = ofdm.freq_grid(fc)?;
    let symbols = generate_symbols(ofdm, scene.len(), seed)?;
    let ts = ofdm.sample_interval();
    let df = ofdm.spacing_hz;
    let inv_sqrt_m = 1.0 / (m_count as f64).sqrt();

    let mut dist = vec![0.0; scene.len() * n];
    for (p, t) in scene.targets.iter().enumerate() {
        for e in 0..n {
            dist[p * n + e] = exact_distance(array, t, e)?;
        }
    }
    let gain = |p: usize, e: usize, m: usize| -> f64 {
        match gain_model {
            GainModel::FrequencyIndependent => {
                SPEED_OF_LIGHT / (4.0 * PI * fc * scene.targets[p].range_m)
            }
            GainModel::FrequencyDependent => {
                SPEED_OF_LIGHT / (4.0 * PI * grid.frequency(m) * dist[p * n + e])
            }
        }
    };

    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    let mut samples = vec![C64::new(0.0, 0.0); m_count];
    for k in 0..ofdm.n_symbols {
        for e in 0..n {
            for (i, y) in samples.iter_mut().enumerate() {
                let t = i as f64 * ts;
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..scene.len() {
                    let tau = dist[p * n + e] / SPEED_OF_LIGHT;
                    for m in 0..m_count {
                        let phase =
                            2.0 * PI * m as f64 * df * (t - tau) - 2.0 * PI * fc * tau;
                        acc += symbols.get(k, m, p) * gain(p, e, m) * C64::from_polar(1.0, phase);
                    }
                }
                *y = acc * inv_sqrt_m;
            }
            for m in 0..m_count {
                let mut bin = C64::new(0.0, 0.0);
                for (i, y) in samples.iter().enumerate() {
                    let w = -2.0 * PI * (m * i) as f64 / m_count as f64;
                    bin += y * C64::from_polar(1.0, w);
                }
                bin *= inv_sqrt_m;

                let mut direct = C64::new(0.0, 0.0);
                for p in 0..scene.len() {
                    let tau = dist[p * n + e] / SPEED_OF_LIGHT;
                    let phase = -2.0 * PI * grid.frequency(m) * tau;
                    direct += symbols.get(k, m, p) * gain(p, e, m) * C64::from_polar(1.0, phase);
                }
                worst = worst.max((bin - direct).norm());
                peak = peak.max(direct.norm());
            }
        }
    }
    Ok(RoundTrip { max_abs_deviation: worst, max_magnitude: peak })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SPEED_OF_LIGHT;

    #[test]
    fn path_loss_values() {
        let g = path_loss(28e9, 20.0).unwrap();
        assert!((g - 4.26e-5).abs() < 0.01e-5, "{g}");
        assert!((path_loss(28e9, 40.0).unwrap() * 2.0 - g).abs() < 1e-18);
        let unit = SPEED_OF_LIGHT / (4.0 * PI * 28e9);
        assert!((path_loss(28e9, unit).unwrap() - 1.0).abs() < 1e-12);
        assert!(path_loss(28e9, 0.0).is_err());
        assert!(path_loss(-1.0, 2.0).is_err());
    }

    #[test]
    fn symbols_unit_modulus_and_deterministic() {
        let ofdm = OfdmConfig::new(4, 1e6, 8).unwrap();
        let a = generate_symbols(&ofdm, 3, 42).unwrap();
        assert!(a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        assert_eq!(a, generate_symbols(&ofdm, 3, 42).unwrap());
        assert_ne!(a, generate_symbols(&ofdm, 3, 43).unwrap());
        assert!(generate_symbols(&ofdm, 0, 1).is_err());
    }

    #[test]
    fn symbols_decorrelate_across_targets() {
        let ofdm = OfdmConfig::new(1, 1e6, 10_000).unwrap();
        let s = generate_symbols(&ofdm, 2, 7).unwrap();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..10_000 {
            acc += s.get(k, 0, 0).conj() * s.get(k, 0, 1);
        }
        assert!((acc / 10_000.0).norm() < 0.05);
    }

    #[test]
    fn ofdm_timing() {
        let o = OfdmConfig::new(64, 480e3, 200).unwrap();
        assert!((o.symbol_duration() - 1.0 / 480e3).abs() < 1e-18);
        assert!((o.bandwidth() - 30.72e6).abs() < 1e-6);
        assert!((o.sample_interval() * o.bandwidth() - 1.0).abs() < 1e-15);
        assert!((o.total_duration() - 1.25 * o.symbol_duration()).abs() < 1e-18);
        assert!(OfdmConfig::new(0, 1.0, 1).is_err());
        assert!(OfdmConfig::new(1, 1.0, 0).is_err());
    }

    #[test]
    fn single_noiseless_source_is_its_steering_vector() {
        let array = ArrayConfig::new(6, 28e9).unwrap();
        let grid = FrequencyGrid::new(3, 1e8, 28e9).unwrap();
        let t = Target::new(0.05, 1.3).unwrap();
        let y = noiseless_received(&array, &grid, &[t], &[1.0], &SymbolTensor::ones(1, 3, 1));
        for (m, ym) in y.iter().enumerate() {
            assert_eq!(ym.col(0), steering_vector(&array, grid.frequency(m), &t).as_slice());
        }
    }

    #[test]
    fn rejects_bad_scenes() {
        let array = ArrayConfig::new(8, 28e9).unwrap();
        let ofdm = OfdmConfig::new(2, 1e6, 4).unwrap();
        let far = Scene::new(vec![Target::new(5.0, 1.0).unwrap()]);
        assert!(matches!(
            synthesize_received(&array, &ofdm, &far, 10.0, 1),
            Err(Error::TargetOutOfRegion { .. })
        ));
        let too_many = Scene::new((0..8).map(|i| Target::new(0.1, 0.3 + 0.1 * i as f64).unwrap()).collect());
        assert!(synthesize_received(&array, &ofdm, &too_many, 10.0, 1).is_err());
        assert!(synthesize_received(&array, &ofdm, &Scene::new(vec![]), 10.0, 1).is_err());
    }

    #[test]
    fn empirical_snr_matches_request() {
        let array = ArrayConfig::new(16, 28e9).unwrap();
        let ofdm = OfdmConfig::new(16, 48e6, 50).unwrap();
        let scene = Scene::new(vec![
            Target::new(0.8, 1.2).unwrap(),
            Target::new(1.1, 1.9).unwrap(),
        ]);
        let clean = synthesize_received(&array, &ofdm, &scene, f64::INFINITY, 5).unwrap();
        for snr in [-10.0, 0.0, 7.0] {
            let noisy = synthesize_received(&array, &ofdm, &scene, snr, 5).unwrap();
            let (mut sig, mut noise) = (0.0, 0.0);
            for (c, y) in clean.per_subcarrier.iter().zip(&noisy.per_subcarrier) {
                for (a, b) in c.as_slice().iter().zip(y.as_slice()) {
                    sig += a.norm_sqr();
                    noise += (b - a).norm_sqr();
                }
            }
            let measured = 10.0 * (sig / noise).log10();
            assert!((measured - snr).abs() < 0.5, "requested {snr}, measured {measured}");
        }
    }

    #[test]
    fn roundtrip_guard_and_small_cases() {
        let array = ArrayConfig::new(4, 28e9).unwrap();
        let one = Scene::new(vec![Target::new(3.0, 1.0).unwrap()]);
        let ofdm1 = OfdmConfig::new(1, 480e3, 1).unwrap();
        let rt = time_domain_roundtrip(&array, &ofdm1, &one, 3, GainModel::FrequencyIndependent).unwrap();
        assert!(rt.relative() < 1e-12, "{rt:?}");

        let big = ArrayConfig::new(9, 28e9).unwrap();
        assert!(matches!(
            time_domain_roundtrip(&big, &ofdm1, &one, 3, GainModel::default()),
            Err(Error::InstanceTooLarge { .. })
        ));
    }

    #[test]
    fn roundtrip_frequency_dependent_gain() {
        let array = ArrayConfig::new(4, 28e9).unwrap();
        let scene = Scene::new(vec![
            Target::new(2.0, 1.0).unwrap(),
            Target::new(4.0, 2.0).unwrap(),
        ]);
        let ofdm = OfdmConfig::new(8, 48e6, 2).unwrap();
        let rt = time_domain_roundtrip(&array, &ofdm, &scene, 1, GainModel::FrequencyDependent).unwrap();
        assert!(rt.relative() < 1e-9, "{rt:?}");
    }
}
