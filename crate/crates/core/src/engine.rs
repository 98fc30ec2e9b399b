//! Monte Carlo harness.
//!
//! Every trial owns a ChaCha stream selected by its index, so results do not
//! depend on how trials are scheduled. A trial is realized once (channels,
//! matrices, symbols and a unit-variance noise draw) and then evaluated at every
//! SNR point by rescaling the same noise, which keeps the SNR curve of a trial
//! free of draw-to-draw jitter.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{genie_channels, no_ia_precoder};
use crate::error::{Error, Result};
use crate::functional::{direct, postprocess, preprocess, FunctionSpec};
use crate::linalg::ComplexMatrix;
use crate::sia::{aligned_rank, build_aggregation_beamformers, build_reference_matrices, build_sia, recover};
use crate::system::{
    draw_channels, draw_symbols, superpose, unit_noise, ChannelSet, ComplexVector, Precoders,
    Scheme, SnrReference, Superposition, SymbolBlock, SystemConfig, CHANNEL_RETRIES, NUM_CELLS,
};

/// Range of the positive test data fed through the function layer.
const FUNCTION_DATA_RANGE: (f64, f64) = (0.5, 2.0);

/// RNG for trial `trial_index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Everything drawn and built for one trial, before noise scaling.
#[derive(Debug, Clone)]
pub struct TrialRealization {
    pub channels: ChannelSet,
    pub beamformers: [ComplexMatrix; NUM_CELLS],
    pub precoders: Precoders,
    pub symbols: SymbolBlock,
    /// CN(0, I) noise at each AP; scaled by the per-point noise level.
    pub unit_noise: [ComplexVector; NUM_CELLS],
    pub superposition: Superposition,
    pub aligned_rank: [usize; NUM_CELLS],
    /// Positive data per `[cell][device]`, one value per stream.
    pub function_data: [Vec<Vec<f64>>; NUM_CELLS],
    pub function_superposition: Superposition,
}

fn build_matrices(
    config: &SystemConfig,
    channels: &ChannelSet,
    reference: &[ComplexMatrix; NUM_CELLS],
) -> Result<([ComplexMatrix; NUM_CELLS], Precoders)> {
    match config.scheme {
        Scheme::Sia => {
            let sia = build_sia(channels, reference.clone())?;
            let precoders = sia.precoders();
            Ok((sia.beamformers, precoders))
        }
        Scheme::NoIa | Scheme::Genie => {
            let beamformers = build_aggregation_beamformers(reference)?;
            let mut precoders: Precoders = Default::default();
            for (cell, cell_precoders) in precoders.iter_mut().enumerate() {
                for dev in 0..channels.devices() {
                    cell_precoders.push(no_ia_precoder(dev, cell, channels, &beamformers[cell])?);
                }
            }
            Ok((beamformers, precoders))
        }
    }
}

/// Draws and builds one trial. Channel sets whose effective channels turn out
/// degenerate are redrawn as a whole.
pub fn realize_trial(config: &SystemConfig, trial_index: u64) -> Result<TrialRealization> {
    config.validate()?;
    let m = config.antennas;
    let part = config.partition();
    let mut rng = trial_rng(config.seed, trial_index);
    let reference = build_reference_matrices(m, part.n_prime, config.reference, &mut rng);

    let mut built = None;
    for _ in 0..CHANNEL_RETRIES {
        let mut channels = draw_channels(config, &mut rng)?;
        if config.scheme == Scheme::Genie {
            channels = genie_channels(&channels);
        }
        match build_matrices(config, &channels, &reference) {
            Ok((beamformers, precoders)) => {
                built = Some((channels, beamformers, precoders));
                break;
            }
            Err(Error::NearSingular { .. } | Error::RankDeficient(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let (channels, beamformers, precoders) = built.ok_or(Error::DegenerateChannels {
        retries: CHANNEL_RETRIES,
    })?;

    let symbols = draw_symbols(config, &mut rng)?;
    let noise = [unit_noise(m, &mut rng), unit_noise(m, &mut rng)];
    let superposition = superpose(&channels, &precoders, &symbols)?;
    let ranks = [
        aligned_rank(0, &channels, &precoders),
        aligned_rank(1, &channels, &precoders),
    ];

    let spec = FunctionSpec::new(config.function, config.devices);
    let (lo, hi) = FUNCTION_DATA_RANGE;
    let mut function_data: [Vec<Vec<f64>>; NUM_CELLS] = Default::default();
    let mut function_symbols: [Vec<ComplexVector>; NUM_CELLS] = Default::default();
    for cell in 0..NUM_CELLS {
        for _ in 0..config.devices {
            let data: Vec<f64> = (0..part.n_ac).map(|_| rng.random_range(lo..hi)).collect();
            function_symbols[cell].push(preprocess(&spec, &data)?);
            function_data[cell].push(data);
        }
    }
    let function_superposition = superpose(
        &channels,
        &precoders,
        &SymbolBlock {
            symbols: function_symbols,
        },
    )?;

    Ok(TrialRealization {
        channels,
        beamformers,
        precoders,
        symbols,
        unit_noise: noise,
        superposition,
        aligned_rank: ranks,
        function_data,
        function_superposition,
    })
}

/// Metrics of one trial at one noise level, per cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    /// `|y_hat - sum_k x|^2 / |sum_k x|^2`
    pub nmse: [f64; NUM_CELLS],
    /// `|y_hat - sum_k x|^2`
    pub error_energy: [f64; NUM_CELLS],
    /// `|sum_k x|^2`
    pub target_energy: [f64; NUM_CELLS],
    /// Fraction of the neighbouring cell's interference power passing the beamformer.
    pub leakage: [f64; NUM_CELLS],
    pub aligned_rank: [usize; NUM_CELLS],
    /// `|W x|^2` per device, indexed `[cell][device]`.
    pub tx_power: [Vec<f64>; NUM_CELLS],
    pub noise_std: [f64; NUM_CELLS],
    /// Relative error of the post-processed function value against direct computation.
    pub function_error: [f64; NUM_CELLS],
}

impl TrialResult {
    /// Relative amplitude error `|y_hat - y| / |y|`.
    pub fn relative_error(&self, cell: usize) -> f64 {
        self.nmse[cell].sqrt()
    }
}

fn noise_std(config: &SystemConfig, desired: &ComplexVector, snr_db: Option<f64>) -> f64 {
    let Some(snr_db) = snr_db else {
        return 0.0;
    };
    let snr = 10f64.powf(snr_db / 10.0);
    match config.snr_reference {
        SnrReference::Received => (desired.norm_squared() / config.antennas as f64 / snr).sqrt(),
        SnrReference::Symbol => (1.0 / snr).sqrt(),
    }
}

/// Evaluates a realized trial; `None` means noiseless.
pub fn evaluate(
    config: &SystemConfig,
    trial: &TrialRealization,
    snr_db: Option<f64>,
) -> Result<TrialResult> {
    let spec = FunctionSpec::new(config.function, config.devices);
    let mut out = TrialResult {
        nmse: [0.0; NUM_CELLS],
        error_energy: [0.0; NUM_CELLS],
        target_energy: [0.0; NUM_CELLS],
        leakage: [0.0; NUM_CELLS],
        aligned_rank: trial.aligned_rank,
        tx_power: Default::default(),
        noise_std: [0.0; NUM_CELLS],
        function_error: [0.0; NUM_CELLS],
    };
    for cell in 0..NUM_CELLS {
        let a = &trial.beamformers[cell];
        let sup = &trial.superposition;
        let sigma = noise_std(config, &sup.desired[cell], snr_db);
        let noise = &trial.unit_noise[cell] * Complex64::from(sigma);

        let received = sup.total(cell) + &noise;
        let y_hat = recover(a, &received)?;
        let target = trial.symbols.aggregate(cell);
        let err = (y_hat - &target).norm_squared();
        let sig = target.norm_squared();

        let interference = &sup.interference[cell];
        let i_pow = interference.norm_squared();
        out.leakage[cell] = if i_pow > 0.0 {
            (a * interference).norm_squared() / i_pow
        } else {
            0.0
        };
        out.error_energy[cell] = err;
        out.target_energy[cell] = sig;
        out.nmse[cell] = err / sig;
        out.noise_std[cell] = sigma;
        out.tx_power[cell] = trial.precoders[cell]
            .iter()
            .zip(&trial.symbols.symbols[cell])
            .map(|(w, x)| (w * x).norm_squared())
            .collect();

        let f_received = trial.function_superposition.total(cell) + &noise;
        let f_hat = postprocess(&spec, &recover(a, &f_received)?);
        let f_true = direct(config.function, &trial.function_data[cell]);
        let diff: f64 = f_hat.iter().zip(&f_true).map(|(a, b)| (a - b).powi(2)).sum();
        let norm: f64 = f_true.iter().map(|v| v * v).sum();
        out.function_error[cell] = (diff / norm).sqrt();
    }
    Ok(out)
}

/// Fresh trial at one SNR point (`None` for noiseless).
pub fn run_trial(config: &SystemConfig, snr_db: Option<f64>, trial_index: u64) -> Result<TrialResult> {
    let trial = realize_trial(config, trial_index)?;
    evaluate(config, &trial, snr_db)
}

/// Predicted NMSE of the `A n` term: `noise_std^2 N_ac / signal_power`.
///
/// For unit-variance symbols the expected aggregate power is `K N_ac`, which
/// reduces this to `noise_std^2 / K`.
pub fn analytic_noise_mse(beamformer: &ComplexMatrix, noise_std: f64, signal_power: f64) -> f64 {
    if noise_std == 0.0 {
        return 0.0;
    }
    noise_std * noise_std * beamformer.nrows() as f64 / signal_power
}

/// Expected `|sum_k x_k|^2` for i.i.d. unit-variance symbols.
pub fn expected_aggregate_power(devices: usize, n_ac: usize) -> f64 {
    (devices * n_ac) as f64
}

/// Aggregate over trials at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub trials: usize,
    /// Pooled NMSE: total error energy over total target energy.
    pub nmse_mean: f64,
    /// Standard error of `nmse_mean` (ratio estimator, trials as units).
    pub nmse_se: f64,
    /// Median of the per-trial, per-cell NMSE values.
    pub nmse_median: f64,
    pub leakage_mean: f64,
    /// Smallest aligned-interference rank seen over trials and cells.
    pub aligned_rank: usize,
    pub analytic_nmse: f64,
    pub function_error_mean: f64,
    pub tx_power_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SystemConfig,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of log10(nmse_mean) against SNR in dB over the upper
    /// half of the grid.
    pub dof_slope: Option<f64>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Pooled NMSE and its delta-method standard error, treating each trial
/// (both cells together) as one sample.
pub fn pooled_nmse(results: &[TrialResult]) -> (f64, f64) {
    let n = results.len() as f64;
    let e: Vec<f64> = results.iter().map(|r| r.error_energy.iter().sum()).collect();
    let s: Vec<f64> = results.iter().map(|r| r.target_energy.iter().sum()).collect();
    let e_sum: f64 = e.iter().sum();
    let s_sum: f64 = s.iter().sum();
    let ratio = e_sum / s_sum;
    if results.len() < 2 {
        return (ratio, f64::NAN);
    }
    let resid: f64 = e.iter().zip(&s).map(|(ei, si)| (ei - ratio * si).powi(2)).sum();
    let s_mean = s_sum / n;
    let se = (resid / (n * (n - 1.0))).sqrt() / s_mean;
    (ratio, se)
}

/// Summarizes the trials of one SNR point.
pub fn summarize_point(config: &SystemConfig, snr_db: f64, results: &[TrialResult]) -> SweepPoint {
    let cells = (results.len() * NUM_CELLS) as f64;
    let (nmse_mean, nmse_se) = pooled_nmse(results);
    let mut nmse: Vec<f64> = results.iter().flat_map(|r| r.nmse).collect();
    let leakage_mean = results.iter().flat_map(|r| r.leakage).sum::<f64>() / cells;
    let aligned = results
        .iter()
        .flat_map(|r| r.aligned_rank)
        .min()
        .unwrap_or(0);
    let mean_var = results
        .iter()
        .flat_map(|r| r.noise_std)
        .map(|s| s * s)
        .sum::<f64>()
        / cells;
    let n_ac = config.partition().n_ac;
    let analytic = if mean_var == 0.0 {
        0.0
    } else {
        mean_var * n_ac as f64 / expected_aggregate_power(config.devices, n_ac)
    };
    let function_error_mean = results.iter().flat_map(|r| r.function_error).sum::<f64>() / cells;
    let powers: Vec<f64> = results
        .iter()
        .flat_map(|r| r.tx_power.iter().flatten().copied())
        .collect();
    SweepPoint {
        snr_db,
        trials: results.len(),
        nmse_mean,
        nmse_se,
        nmse_median: median(&mut nmse),
        leakage_mean,
        aligned_rank: aligned,
        analytic_nmse: analytic,
        function_error_mean,
        tx_power_mean: powers.iter().sum::<f64>() / powers.len() as f64,
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Slope of log10(nmse_mean) over points with `lo <= snr_db <= hi`.
pub fn slope_between(points: &[SweepPoint], lo: f64, hi: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.snr_db >= lo && p.snr_db <= hi)
        .map(|p| (p.snr_db, p.nmse_mean.log10()))
        .unzip();
    fit_slope(&xs, &ys)
}

/// Slope over the upper half of the grid (at least the last two points).
pub fn upper_half_slope(points: &[SweepPoint]) -> Option<f64> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let start = (n / 2).min(n - 2);
    let (xs, ys): (Vec<f64>, Vec<f64>) = points[start..]
        .iter()
        .map(|p| (p.snr_db, p.nmse_mean.log10()))
        .unzip();
    fit_slope(&xs, &ys)
}

/// Realizes `config.trials` trials in parallel and evaluates each at every SNR
/// point. The outer index is the trial, the inner one the grid point.
pub fn run_trials(config: &SystemConfig, snr_points: &[Option<f64>]) -> Result<Vec<Vec<TrialResult>>> {
    config.validate()?;
    (0..config.trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial = realize_trial(config, t)?;
            snr_points
                .iter()
                .map(|&snr| evaluate(config, &trial, snr))
                .collect()
        })
        .collect()
}

/// Full SNR sweep on the current rayon pool.
pub fn run_sweep(config: &SystemConfig) -> Result<SweepResult> {
    config.validate_sweep()?;
    let grid: Vec<Option<f64>> = config.snr_db_grid.iter().copied().map(Some).collect();
    let per_trial = run_trials(config, &grid)?;
    let points: Vec<SweepPoint> = config
        .snr_db_grid
        .iter()
        .enumerate()
        .map(|(j, &snr)| {
            let column: Vec<TrialResult> = per_trial.iter().map(|t| t[j].clone()).collect();
            summarize_point(config, snr, &column)
        })
        .collect();
    let dof_slope = upper_half_slope(&points);
    Ok(SweepResult {
        config: config.clone(),
        points,
        dof_slope,
    })
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(config: &SystemConfig, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::FunctionKind;

    #[test]
    fn trial_is_deterministic() {
        let cfg = SystemConfig::new(4, 3, Scheme::Sia);
        let a = run_trial(&cfg, Some(10.0), 5).unwrap();
        let b = run_trial(&cfg, Some(10.0), 5).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&cfg, Some(10.0), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sia_noiseless_trial() {
        let cfg = SystemConfig::new(4, 10, Scheme::Sia);
        for t in 0..20 {
            let r = run_trial(&cfg, None, t).unwrap();
            for cell in 0..NUM_CELLS {
                assert!(r.nmse[cell] < 1e-9, "nmse {}", r.nmse[cell]);
                assert!(r.leakage[cell] < 1e-18);
                assert_eq!(r.aligned_rank[cell], 2);
                assert!(r.function_error[cell] < 1e-6);
                assert_eq!(r.tx_power[cell].len(), 10);
            }
        }
    }

    #[test]
    fn svd_regression_trial() {
        // This draw once produced an inaccurate factorization of a well-conditioned
        // 4x4 effective channel.
        let mut cfg = SystemConfig::new(8, 50, Scheme::Sia);
        cfg.seed = 1850;
        let r = run_trial(&cfg, None, 8).unwrap();
        assert!(r.relative_error(0) < 1e-8 && r.relative_error(1) < 1e-8);
    }

    #[test]
    fn no_ia_noiseless_has_interference() {
        let cfg = SystemConfig::new(4, 2, Scheme::NoIa);
        let leaky = (0..200)
            .filter(|&t| {
                let r = run_trial(&cfg, None, t).unwrap();
                r.nmse.iter().all(|&e| e > 1e-3)
            })
            .count();
        assert!(leaky >= 198, "{leaky}");
    }

    #[test]
    fn genie_noiseless_is_exact() {
        let cfg = SystemConfig::new(5, 4, Scheme::Genie);
        for t in 0..20 {
            let r = run_trial(&cfg, None, t).unwrap();
            assert!(r.nmse.iter().all(|&e| e.sqrt() < 1e-8));
            assert_eq!(r.leakage, [0.0, 0.0]);
            assert_eq!(r.aligned_rank, [0, 0]);
        }
    }

    #[test]
    fn no_ia_without_cross_matches_genie() {
        // Genie is the no-IA pipeline with G = 0, drawn from the same stream.
        let mut cfg = SystemConfig::new(4, 3, Scheme::Genie);
        cfg.function = FunctionKind::Sum;
        let g = realize_trial(&cfg, 3).unwrap();
        cfg.scheme = Scheme::NoIa;
        let n = realize_trial(&cfg, 3).unwrap();
        assert_eq!(g.channels.direct, n.channels.direct);
        assert_eq!(g.precoders, n.precoders);
        assert!(g.superposition.interference.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn analytic_examples() {
        let a = crate::linalg::eye(4).rows(0, 2).into_owned();
        assert_eq!(analytic_noise_mse(&a, 0.0, 2.0), 0.0);
        // K = 1, N_ac = 2, unit noise
        assert_eq!(analytic_noise_mse(&a, 1.0, expected_aggregate_power(1, 2)), 1.0);
        assert_eq!(
            analytic_noise_mse(&a, 1.0, expected_aggregate_power(2, 2)),
            0.5 * analytic_noise_mse(&a, 1.0, expected_aggregate_power(1, 2))
        );
    }

    #[test]
    fn slope_fit() {
        let xs = [0.0, 10.0, 20.0];
        let ys = [1.0, 0.0, -1.0];
        assert!((fit_slope(&xs, &ys).unwrap() + 0.1).abs() < 1e-15);
        assert_eq!(fit_slope(&[1.0], &[1.0]), None);
        assert_eq!(fit_slope(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn empty_grid_rejected_before_trials() {
        let mut cfg = SystemConfig::new(4, 2, Scheme::Sia);
        cfg.snr_db_grid.clear();
        assert!(matches!(run_sweep(&cfg), Err(Error::Config(_))));
    }
}
