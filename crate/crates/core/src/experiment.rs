//! Monte Carlo trials, estimate-to-truth matching and NMSE aggregation.
//!
//! A sweep is a list of [`SweepPoint`]s, each run for `n_trials` trials with
//! every configured estimator. Trial `t` draws its scene from a seed that
//! depends only on `(base_seed, t)`, and its symbols and noise from a seed
//! that depends on `(base_seed, snr index, t)`. Narrowband and wideband
//! points, bandwidth points and the two estimators therefore see the same
//! scenes and, at equal SNR, the same random draws.
//!
//! Trials whose estimator reports a detection failure are excluded from the
//! error sums and counted as `P` missing targets.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::estimator_fresnel::{estimate_fresnel, FresnelConfig};
use crate::estimator_sf::{estimate_sf, Estimate, SearchGrid};
use crate::geometry::{rayleigh_distance, ArrayConfig, Target};
use crate::signal::{synthesize_received, OfdmConfig, ReceivedData, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    SubspaceFitting,
    Fresnel,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 2] = [EstimatorKind::SubspaceFitting, EstimatorKind::Fresnel];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::SubspaceFitting => "sf",
            EstimatorKind::Fresnel => "fresnel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Waveband {
    Narrowband,
    Wideband,
    /// Subcarrier spacing set by a bandwidth sweep point.
    Custom,
}

impl Waveband {
    pub fn label(self) -> &'static str {
        match self {
            Waveband::Narrowband => "narrowband",
            Waveband::Wideband => "wideband",
            Waveband::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    SnrDb,
    BandwidthHz,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::SnrDb => "snr_db",
            SweepParam::BandwidthHz => "bandwidth_hz",
        }
    }
}

/// Uniform scene generator with a minimum pairwise separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSampler {
    pub range_m: (f64, f64),
    pub angle_rad: (f64, f64),
    pub min_range_sep_m: f64,
    pub min_angle_sep_rad: f64,
}

const MAX_SAMPLER_ATTEMPTS: usize = 100_000;

impl SceneSampler {
    /// `r` in `[5, 60]` m, `theta` in `[40, 140]` deg, separation 2 m and 4 deg.
    pub fn full_scale() -> Self {
        SceneSampler {
            range_m: (5.0, 60.0),
            angle_rad: (40f64.to_radians(), 140f64.to_radians()),
            min_range_sep_m: 2.0,
            min_angle_sep_rad: 4f64.to_radians(),
        }
    }

    pub fn validate(&self, array: &ArrayConfig) -> Result<()> {
        let (r0, r1) = self.range_m;
        if !(r0 > 0.0 && r1 >= r0 && r1 < rayleigh_distance(array)) {
            return Err(invalid("scene_sampler.range", "must lie inside (0, rayleigh distance)"));
        }
        let (t0, t1) = self.angle_rad;
        if !(t0 > 0.0 && t1 >= t0 && t1 < PI) {
            return Err(invalid("scene_sampler.angle", "must lie inside (0, pi)"));
        }
        if !(self.min_range_sep_m >= 0.0 && self.min_angle_sep_rad >= 0.0) {
            return Err(invalid("scene_sampler.separation", "must be non-negative"));
        }
        Ok(())
    }

    /// Rejection sampling: every pair differs by at least the minimum
    /// separation in range and in angle.
    pub fn sample(&self, n_targets: usize, seed: u64) -> Result<Scene> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_SAMPLER_ATTEMPTS {
            let targets: Vec<Target> = (0..n_targets)
                .map(|_| Target {
                    range_m: rng.random_range(self.range_m.0..=self.range_m.1),
                    angle_rad: rng.random_range(self.angle_rad.0..=self.angle_rad.1),
                })
                .collect();
            let separated = targets.iter().enumerate().all(|(i, a)| {
                targets[i + 1..].iter().all(|b| {
                    (a.range_m - b.range_m).abs() >= self.min_range_sep_m
                        && (a.angle_rad - b.angle_rad).abs() >= self.min_angle_sep_rad
                })
            });
            if separated {
                return Ok(Scene::new(targets));
            }
        }
        Err(invalid("scene_sampler", "separation constraints could not be met"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub array: ArrayConfig,
    /// Subcarrier spacing is overridden per sweep point.
    pub ofdm: OfdmConfig,
    pub n_targets: usize,
    pub n_trials: usize,
    pub snr_list_db: Vec<f64>,
    pub bandwidth_list_hz: Vec<f64>,
    /// SNR of every bandwidth sweep point.
    pub bandwidth_snr_db: f64,
    pub narrowband_spacing_hz: f64,
    pub wideband_spacing_hz: f64,
    pub wavebands: Vec<Waveband>,
    pub estimators: Vec<EstimatorKind>,
    pub sampler: SceneSampler,
    pub base_seed: u64,
    pub grid: SearchGrid,
    /// Smoothing windows `L` of the Fresnel estimator.
    pub n_windows: usize,
}

impl ExperimentConfig {
    /// 28 GHz, N = 128, M = 64, K = 200, P = 2, L = 50, 200 trials.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            array: ArrayConfig::new(128, 28e9).expect("valid array"),
            ofdm: OfdmConfig::new(64, 480e3, 200).expect("valid ofdm"),
            n_targets: 2,
            n_trials: 200,
            snr_list_db: alloc::vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
            bandwidth_list_hz: alloc::vec![1e6, 1e7, 1e8, 1e9, 1e10],
            bandwidth_snr_db: 0.0,
            narrowband_spacing_hz: 480.0,
            wideband_spacing_hz: 480e5,
            wavebands: alloc::vec![Waveband::Narrowband, Waveband::Wideband],
            estimators: EstimatorKind::ALL.to_vec(),
            sampler: SceneSampler::full_scale(),
            base_seed: 0,
            grid: SearchGrid::default_grid(),
            n_windows: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.sampler.validate(&self.array)?;
        if self.n_trials == 0 {
            return Err(invalid("n_trials", "must be at least 1"));
        }
        if self.n_targets == 0 || self.n_targets >= self.array.n_elements() {
            return Err(invalid("n_targets", "need 1 <= P < N"));
        }
        if self.n_targets > MAX_MATCH_TARGETS {
            return Err(Error::InstanceTooLarge {
                what: "n_targets",
                value: self.n_targets,
                max: MAX_MATCH_TARGETS,
            });
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators", "need at least one estimator"));
        }
        if self.snr_list_db.iter().any(|s| s.is_nan()) || self.bandwidth_snr_db.is_nan() {
            return Err(invalid("snr_db", "must not be NaN"));
        }
        for &s in &[self.narrowband_spacing_hz, self.wideband_spacing_hz] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("spacing_hz", "must be positive and finite"));
            }
        }
        if self.bandwidth_list_hz.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(invalid("bandwidth_list_hz", "bandwidths must be positive and finite"));
        }
        Ok(())
    }

    pub fn fresnel_config(&self) -> FresnelConfig {
        FresnelConfig::from_grid(&self.grid, self.n_windows)
    }

    fn spacing_for(&self, waveband: Waveband) -> f64 {
        match waveband {
            Waveband::Narrowband => self.narrowband_spacing_hz,
            Waveband::Wideband => self.wideband_spacing_hz,
            Waveband::Custom => self.ofdm.spacing_hz,
        }
    }
}

/// One row-producing setting of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub param: SweepParam,
    pub value: f64,
    pub waveband: Waveband,
    pub snr_db: f64,
    pub spacing_hz: f64,
    /// Selects the symbol/noise seed; shared by points of equal SNR.
    pub noise_index: u64,
}

pub fn snr_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for (i, &snr) in cfg.snr_list_db.iter().enumerate() {
        for &wb in &cfg.wavebands {
            out.push(SweepPoint {
                param: SweepParam::SnrDb,
                value: snr,
                waveband: wb,
                snr_db: snr,
                spacing_hz: cfg.spacing_for(wb),
                noise_index: i as u64,
            });
        }
    }
    out
}

pub fn bandwidth_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let m = cfg.ofdm.n_subcarriers as f64;
    cfg.bandwidth_list_hz
        .iter()
        .map(|&b| SweepPoint {
            param: SweepParam::BandwidthHz,
            value: b,
            waveband: Waveband::Custom,
            snr_db: cfg.bandwidth_snr_db,
            spacing_hz: b / m,
            noise_index: 0,
        })
        .collect()
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn scene_seed(base_seed: u64, trial: usize) -> u64 {
    mix(mix(base_seed ^ 0x5CE4_E000_0000_0000) ^ trial as u64)
}

pub fn noise_seed(base_seed: u64, noise_index: u64, trial: usize) -> u64 {
    mix(mix(mix(base_seed) ^ noise_index) ^ trial as u64)
}

/// Squared-error sums of one successful estimator run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSums {
    pub range_err: f64,
    pub range_ref: f64,
    pub angle_err: f64,
    pub angle_ref: f64,
    pub position_err: f64,
    pub position_ref: f64,
}

impl ErrorSums {
    pub fn from_pairs(pairs: &[(Target, Target)]) -> Self {
        let mut s = ErrorSums::default();
        for (truth, est) in pairs {
            s.range_err += (est.range_m - truth.range_m).powi(2);
            s.range_ref += truth.range_m.powi(2);
            s.angle_err += (est.angle_rad - truth.angle_rad).powi(2);
            s.angle_ref += truth.angle_rad.powi(2);
            let (x, y) = truth.position();
            let (xh, yh) = est.position();
            s.position_err += (xh - x).powi(2) + (yh - y).powi(2);
            s.position_ref += x * x + y * y;
        }
        s
    }

    fn add(&mut self, o: &ErrorSums) {
        self.range_err += o.range_err;
        self.range_ref += o.range_ref;
        self.angle_err += o.angle_err;
        self.angle_ref += o.angle_ref;
        self.position_err += o.position_err;
        self.position_ref += o.position_ref;
    }

    pub fn nmse(&self) -> NmseTriple {
        NmseTriple {
            distance: self.range_err / self.range_ref,
            angle: self.angle_err / self.angle_ref,
            location: self.position_err / self.position_ref,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseTriple {
    pub distance: f64,
    pub angle: f64,
    pub location: f64,
}

/// `sum (x_hat - x)^2 / sum x^2` for range, angle and Cartesian position.
pub fn nmse(pairs: &[(Target, Target)]) -> Result<NmseTriple> {
    if pairs.is_empty() {
        return Err(invalid("pairs", "need at least one matched pair"));
    }
    Ok(ErrorSums::from_pairs(pairs).nmse())
}

pub const MAX_MATCH_TARGETS: usize = 6;

/// Minimum-cost assignment by exhaustive search. `perm[p]` is the index of
/// the estimate assigned to truth `p`; cost is
/// `((r_hat - r) / range_scale)^2 + ((theta_hat - theta) / pi)^2`.
pub fn match_estimates(truth: &[Target], estimates: &[Target], range_scale: f64) -> Result<Vec<usize>> {
    if truth.len() != estimates.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: estimates.len() });
    }
    let n = truth.len();
    if n > MAX_MATCH_TARGETS {
        return Err(Error::InstanceTooLarge { what: "targets", value: n, max: MAX_MATCH_TARGETS });
    }
    let cost = |p: usize, q: usize| {
        ((estimates[q].range_m - truth[p].range_m) / range_scale).powi(2)
            + ((estimates[q].angle_rad - truth[p].angle_rad) / PI).powi(2)
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    // Lexicographic enumeration so ties resolve to the smallest permutation.
    loop {
        let c: f64 = perm.iter().enumerate().map(|(p, &q)| cost(p, q)).sum();
        if c < best_cost {
            best_cost = c;
            best.clone_from(&perm);
        }
        let Some(i) = (1..n).rev().find(|&i| perm[i - 1] < perm[i]) else { break };
        let j = (i..n).rev().find(|&j| perm[j] > perm[i - 1]).expect("successor exists");
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    Ok(best)
}

/// Result of one estimator on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialOutcome {
    Success(ErrorSums),
    DetectionFailure,
}

pub fn run_estimator(
    cfg: &ExperimentConfig,
    kind: EstimatorKind,
    received: &ReceivedData,
) -> Result<Estimate> {
    match kind {
        EstimatorKind::SubspaceFitting => estimate_sf(received, cfg.n_targets, &cfg.grid),
        EstimatorKind::Fresnel => estimate_fresnel(received, cfg.n_targets, &cfg.fresnel_config()),
    }
}

/// Simulates one trial at `point` and runs every configured estimator on
/// the same data. Outcomes follow `cfg.estimators`.
pub fn run_trial(cfg: &ExperimentConfig, point: &SweepPoint, trial: usize) -> Result<Vec<TrialOutcome>> {
    let scene = cfg.sampler.sample(cfg.n_targets, scene_seed(cfg.base_seed, trial))?;
    let ofdm = cfg.ofdm.with_spacing(point.spacing_hz)?;
    let seed = noise_seed(cfg.base_seed, point.noise_index, trial);
    let received = synthesize_received(&cfg.array, &ofdm, &scene, point.snr_db, seed)?;
    cfg.estimators
        .iter()
        .map(|&kind| match run_estimator(cfg, kind, &received) {
            Ok(est) => {
                let perm = match_estimates(&scene.targets, &est.targets, cfg.sampler.range_m.1)?;
                let pairs: Vec<(Target, Target)> =
                    scene.targets.iter().zip(&perm).map(|(t, &q)| (*t, est.targets[q])).collect();
                Ok(TrialOutcome::Success(ErrorSums::from_pairs(&pairs)))
            }
            Err(Error::DetectionFailure { .. }) => Ok(TrialOutcome::DetectionFailure),
            Err(e) => Err(e),
        })
        .collect()
}

/// One `(point, estimator)` aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub estimator: EstimatorKind,
    /// NaN when every trial failed.
    pub nmse: NmseTriple,
    /// Median over successful trials of the per-trial distance NMSE.
    pub distance_median: f64,
    /// Missing targets: `P` per failed trial.
    pub detection_failures: usize,
    pub n_trials: usize,
}

impl SweepRow {
    pub fn failure_rate(&self, n_targets: usize) -> f64 {
        self.detection_failures as f64 / (self.n_trials * n_targets) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// Reduces outcomes (in trial order) into a row.
pub fn aggregate(
    point: &SweepPoint,
    estimator: EstimatorKind,
    n_targets: usize,
    outcomes: &[TrialOutcome],
) -> SweepRow {
    let mut total = ErrorSums::default();
    let mut per_trial: Vec<f64> = Vec::new();
    let mut failures = 0;
    for o in outcomes {
        match o {
            TrialOutcome::Success(s) => {
                total.add(s);
                per_trial.push(s.range_err / s.range_ref);
            }
            TrialOutcome::DetectionFailure => failures += n_targets,
        }
    }
    let nmse = if per_trial.is_empty() {
        NmseTriple { distance: f64::NAN, angle: f64::NAN, location: f64::NAN }
    } else {
        total.nmse()
    };
    SweepRow {
        point: *point,
        estimator,
        nmse,
        distance_median: median(&mut per_trial),
        detection_failures: failures,
        n_trials: outcomes.len(),
    }
}

/// Median (mean of the middle pair for even counts); NaN when empty.
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs all points sequentially.
pub fn run_points(cfg: &ExperimentConfig, points: &[SweepPoint]) -> Result<SweepTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for point in points {
        let mut per_est: Vec<Vec<TrialOutcome>> = alloc::vec![Vec::new(); cfg.estimators.len()];
        for trial in 0..cfg.n_trials {
            for (slot, o) in per_est.iter_mut().zip(run_trial(cfg, point, trial)?) {
                slot.push(o);
            }
        }
        for (&kind, outcomes) in cfg.estimators.iter().zip(&per_est) {
            rows.push(aggregate(point, kind, cfg.n_targets, outcomes));
        }
    }
    Ok(SweepTable { rows })
}

pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    run_points(cfg, &snr_points(cfg))
}

pub fn run_bandwidth_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    if cfg.bandwidth_list_hz.is_empty() {
        return Err(invalid("bandwidth_list_hz", "bandwidth sweep needs at least one point"));
    }
    run_points(cfg, &bandwidth_points(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn t(r: f64, deg: f64) -> Target {
        Target::from_degrees(r, deg).unwrap()
    }

    #[test]
    fn matching_small_cases() {
        assert_eq!(match_estimates(&[t(10.0, 50.0)], &[t(12.0, 70.0)], 60.0).unwrap(), [0]);
        let truth = [t(10.0, 50.0), t(30.0, 120.0)];
        let est = [t(29.0, 119.0), t(11.0, 51.0)];
        assert_eq!(match_estimates(&truth, &est, 60.0).unwrap(), [1, 0]);
        assert!(match_estimates(&truth, &est[..1], 60.0).is_err());
    }

    #[test]
    fn matching_three_against_brute_force() {
        let truth = [t(7.0, 45.0), t(20.0, 90.0), t(33.0, 130.0)];
        let est = [t(21.0, 92.0), t(34.0, 128.0), t(6.0, 48.0)];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let cost = |p: &[usize; 3]| -> f64 {
            (0..3)
                .map(|i| {
                    ((est[p[i]].range_m - truth[i].range_m) / 60.0).powi(2)
                        + ((est[p[i]].angle_rad - truth[i].angle_rad) / PI).powi(2)
                })
                .sum()
        };
        let best = perms.iter().min_by(|a, b| cost(a).total_cmp(&cost(b))).unwrap();
        assert_eq!(match_estimates(&truth, &est, 60.0).unwrap(), best.to_vec());
    }

    #[test]
    fn nmse_definitions() {
        let a = t(10.0, 60.0);
        let z = nmse(&[(a, a)]).unwrap();
        assert_eq!((z.distance, z.angle, z.location), (0.0, 0.0, 0.0));
        let z = nmse(&[(a, t(11.0, 60.0))]).unwrap();
        assert!((z.distance - 0.01).abs() < 1e-15);
        assert!(nmse(&[]).is_err());

        let pairs = [(t(10.0, 60.0), t(10.5, 61.0)), (t(20.0, 100.0), t(19.0, 99.0))];
        let z = nmse(&pairs).unwrap();
        assert!((z.distance - (0.25 + 1.0) / (100.0 + 400.0)).abs() < 1e-15);
        let (a1, a2) = (60f64.to_radians(), 100f64.to_radians());
        let d = 1f64.to_radians();
        assert!((z.angle - 2.0 * d * d / (a1 * a1 + a2 * a2)).abs() < 1e-15);
    }

    #[test]
    fn sampler_respects_bounds_and_separation() {
        let s = SceneSampler::full_scale();
        for seed in 0..200 {
            let scene = s.sample(3, seed).unwrap();
            for (i, a) in scene.targets.iter().enumerate() {
                assert!((5.0..=60.0).contains(&a.range_m));
                for b in &scene.targets[i + 1..] {
                    assert!((a.range_m - b.range_m).abs() >= 2.0);
                    assert!((a.angle_rad - b.angle_rad).abs() >= 4f64.to_radians());
                }
            }
        }
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(noise_seed(1, 0, 0), noise_seed(1, 1, 0));
        assert_ne!(noise_seed(1, 0, 0), noise_seed(1, 0, 1));
        assert_ne!(scene_seed(1, 0), noise_seed(1, 0, 0));
    }

    #[test]
    fn aggregate_counts_failures() {
        let p = SweepPoint {
            param: SweepParam::SnrDb,
            value: 0.0,
            waveband: Waveband::Wideband,
            snr_db: 0.0,
            spacing_hz: 1.0,
            noise_index: 0,
        };
        let ok = ErrorSums::from_pairs(&[(t(10.0, 60.0), t(11.0, 60.0))]);
        let row = aggregate(&p, EstimatorKind::Fresnel, 2, &[TrialOutcome::Success(ok), TrialOutcome::DetectionFailure]);
        assert_eq!(row.detection_failures, 2);
        assert_eq!(row.n_trials, 2);
        assert!((row.nmse.distance - 0.01).abs() < 1e-15);
        let row = aggregate(&p, EstimatorKind::Fresnel, 2, &[TrialOutcome::DetectionFailure]);
        assert!(row.nmse.distance.is_nan());
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
