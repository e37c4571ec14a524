//! The three figures of merit — photon-loss probability, crosstalk
//! probability and fidelity — with Monte Carlo aggregation, plus the
//! photon-number density traces behind the transmission figures.
//!
//! One master seed spawns per-trial sub-seeds by counter, so results are
//! bit-identical regardless of worker count; aggregation is an ordered
//! reduction over trial indices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{CollectMode, LinkModel, NetworkConfig, RunOutcome, TemplateOutcome};
use crate::signal::{fidelity, make_timebin_state, TimeBinLabel, TimeGrid};

/// Default trial count of the loss experiment.
pub const DEFAULT_LOSS_TRIALS: usize = 200;
/// Default run count of the crosstalk experiment.
pub const DEFAULT_CROSSTALK_RUNS: usize = 128;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Counter-derived sub-seed: trial `index` of master `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

pub(crate) fn sub_rng(seed: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(sub_seed(seed, index))
}

/// Worker pool capped by the `QCDMA_THREADS` environment variable.
fn worker_pool() -> rayon::ThreadPool {
    let threads = std::env::var("QCDMA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("worker pool")
}

/// Bin-0 template outcomes for every user, computed in parallel but
/// collected in user order.
fn user_templates(model: &LinkModel, mode: CollectMode) -> Result<Vec<TemplateOutcome>> {
    let users = model.config().users;
    worker_pool().install(|| {
        (0..users)
            .into_par_iter()
            .map(|u| model.user_template(u, mode))
            .collect()
    })
}

fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Mean probability that the transmitted photon is missing from its own
/// channel at the output.
#[derive(Debug, Clone, Serialize)]
pub struct LossResult {
    pub spreading_factor: usize,
    pub users: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
    pub seed: u64,
}

/// Per trial, one Gaussian photon enters a uniformly random channel and
/// bin; the recorded loss is 1 minus the probability density delivered back
/// into that photon's own channel.
pub fn photon_loss_probability(
    config: &NetworkConfig,
    trials: usize,
    seed: u64,
) -> Result<LossResult> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let model = LinkModel::new(config.clone())?;
    let own_energy: Vec<f64> = user_templates(&model, CollectMode::Energies)?
        .iter()
        .map(|t| t.own_delivery_energy())
        .collect();

    let mut losses = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = sub_rng(seed, t as u64);
        let user = rng.gen_range(0..config.users);
        let _bin = rng.gen_range(0..config.bits_per_user);
        let _phase = if config.in_phase {
            0.0
        } else {
            rng.gen_range(0.0..std::f64::consts::TAU)
        };
        losses.push(1.0 - own_energy[user]);
    }
    let (mean, std_err) = mean_and_std_err(&losses);
    Ok(LossResult {
        spreading_factor: config.spreading_factor(),
        users: config.users,
        trials,
        mean,
        std_err,
        seed,
    })
}

/// Mean photon-number density found in a randomly chosen empty channel-bin
/// while every user transmits random bits.
#[derive(Debug, Clone, Serialize)]
pub struct CrosstalkResult {
    pub spreading_factor: usize,
    pub users: usize,
    pub runs: usize,
    pub mean: f64,
    pub std_err: f64,
    pub seed: u64,
}

const EMPTY_BIN_ATTEMPTS: usize = 100;

pub fn crosstalk_probability(
    config: &NetworkConfig,
    runs: usize,
    seed: u64,
) -> Result<CrosstalkResult> {
    if runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    let model = LinkModel::new(config.clone())?;
    let templates = user_templates(&model, CollectMode::BinEnergies)?;
    let users = config.users;
    let bins = config.bits_per_user;

    let mut values = Vec::with_capacity(runs);
    for r in 0..runs {
        let mut rng = sub_rng(seed, r as u64);

        let mut bits = vec![vec![false; bins]; users];
        let mut empties: Vec<(usize, usize)> = Vec::new();
        let mut attempts = 0;
        loop {
            empties.clear();
            for row in bits.iter_mut() {
                for b in row.iter_mut() {
                    *b = rng.gen_bool(0.5);
                }
            }
            for (u, row) in bits.iter().enumerate() {
                for (j, &b) in row.iter().enumerate() {
                    if !b {
                        empties.push((u, j));
                    }
                }
            }
            if !empties.is_empty() {
                break;
            }
            attempts += 1;
            if attempts >= EMPTY_BIN_ATTEMPTS {
                return Err(Error::NoEmptyBin(EMPTY_BIN_ATTEMPTS));
            }
        }
        // each transmitted packet draws its phase (recorded nowhere here,
        // but keeps the draw stream aligned with the run manifest)
        for row in &bits {
            for &b in row {
                if b && !config.in_phase {
                    let _ = rng.gen_range(0.0..std::f64::consts::TAU);
                }
            }
        }
        let (watch_user, watch_bin) = empties[rng.gen_range(0..empties.len())];

        let mut density = 0.0;
        for (q, row) in bits.iter().enumerate() {
            let per_bin = templates[q].deliveries[watch_user]
                .bin_energies
                .as_ref()
                .expect("bin energies collected");
            for (j, &b) in row.iter().enumerate() {
                if b {
                    density += per_bin[(watch_bin + bins - j) % bins];
                }
            }
        }
        values.push(density);
    }
    let (mean, std_err) = mean_and_std_err(&values);
    Ok(CrosstalkResult {
        spreading_factor: config.spreading_factor(),
        users: config.users,
        runs,
        mean,
        std_err,
        seed,
    })
}

/// Whether the non-measured users stay dark during the fidelity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Background {
    Silent,
    Random,
}

impl Background {
    pub fn name(&self) -> &'static str {
        match self {
            Background::Silent => "silent",
            Background::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "silent" => Ok(Background::Silent),
            "random" => Ok(Background::Random),
            other => Err(Error::Config(format!(
                "unknown background `{other}` (expected silent|random)"
            ))),
        }
    }
}

/// Mean fidelity between an input time-bin state and its normalized
/// delivered output.
#[derive(Debug, Clone, Serialize)]
pub struct FidelityResult {
    pub state: TimeBinLabel,
    pub spreading_factor: usize,
    pub users: usize,
    pub trials: usize,
    pub mean_fidelity: f64,
    pub mean_infidelity: f64,
    pub std_err: f64,
    pub seed: u64,
}

/// Propagate each time-bin state through the link on a two-bin grid and
/// report F of the overlap integral. The sending user is drawn per trial;
/// under a random background the other users' leaked amplitudes join the
/// receiver output before normalization.
pub fn state_fidelity_sweep(
    config: &NetworkConfig,
    trials: usize,
    seed: u64,
    background: Background,
) -> Result<Vec<FidelityResult>> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let model = LinkModel::with_bins(config.clone(), Some(2))?;
    let users = config.users;

    // per-user delivered state waveforms, one propagation per (state, user)
    let state_outcomes: Vec<Vec<TemplateOutcome>> = worker_pool().install(|| {
        TimeBinLabel::ALL
            .par_iter()
            .map(|&label| {
                (0..users)
                    .map(|u| {
                        let state = make_timebin_state(label, model.grid())?;
                        let source = model.prepare_source(state.wavefunction)?;
                        model.propagate_photon(u, &source, CollectMode::Waveforms)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    // bin-0 packet templates feed the random background's leaked amplitudes
    let packet_templates = match background {
        Background::Random => Some(user_templates(&model, CollectMode::Waveforms)?),
        Background::Silent => None,
    };

    let mut results = Vec::with_capacity(TimeBinLabel::ALL.len());
    for (si, &label) in TimeBinLabel::ALL.iter().enumerate() {
        let input = make_timebin_state(label, model.grid())?.wavefunction;
        let input = model.prepare_source(input)?;
        let mut fids = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rng = sub_rng(seed, t as u64);
            let user = rng.gen_range(0..users);
            let outcome = &state_outcomes[si][user];
            let mut output = outcome.deliveries[user]
                .waveform
                .as_ref()
                .expect("waveforms collected")
                .clone();
            if let Some(templates) = &packet_templates {
                for q in 0..users {
                    if q == user {
                        continue;
                    }
                    for bin in 0..2 {
                        if !rng.gen_bool(0.5) {
                            continue;
                        }
                        let phase = if config.in_phase {
                            0.0
                        } else {
                            rng.gen_range(0.0..std::f64::consts::TAU)
                        };
                        let mut leak = templates[q].deliveries[user]
                            .waveform
                            .as_ref()
                            .expect("waveforms collected")
                            .shift_bins(bin);
                        leak.scale(num_complex::Complex64::from_polar(1.0, phase));
                        output.add_assign(&leak)?;
                    }
                }
            }
            fids.push(fidelity(&input, &output)?);
        }
        let (mean, std_err) = mean_and_std_err(&fids);
        results.push(FidelityResult {
            state: label,
            spreading_factor: config.spreading_factor(),
            users,
            trials,
            mean_fidelity: mean,
            mean_infidelity: 1.0 - mean,
            std_err,
            seed,
        });
    }
    Ok(results)
}

/// Per-channel photon-number density Σ_j |φ_j(t)|² sampled on the grid.
#[derive(Debug, Clone)]
pub struct DensityTrace {
    pub grid: TimeGrid,
    pub per_channel: Vec<Vec<f64>>,
}

impl DensityTrace {
    /// Integrated density per (channel, bin).
    pub fn bin_integrals(&self) -> Vec<Vec<f64>> {
        let spb = self.grid.samples_per_bin();
        let dt = self.grid.dt();
        self.per_channel
            .iter()
            .map(|d| {
                d.chunks(spb)
                    .map(|chunk| chunk.iter().sum::<f64>() * dt)
                    .collect()
            })
            .collect()
    }

    /// CSV trace: `t,channel_1,...,channel_N`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t");
        for c in 1..=self.per_channel.len() {
            let _ = write!(out, ",channel_{c}");
        }
        out.push('\n');
        for k in 0..self.grid.total_samples() {
            let _ = write!(out, "{:.9e}", self.grid.time(k));
            for d in &self.per_channel {
                let _ = write!(out, ",{:.9e}", d[k]);
            }
            out.push('\n');
        }
        out
    }
}

/// The quantity plotted in the transmission figures, straight from a run's
/// receiver outputs.
pub fn photon_number_density(outcome: &RunOutcome) -> DensityTrace {
    DensityTrace {
        grid: outcome.grid,
        per_channel: outcome.receiver_densities.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{propagate, FilterRule};

    #[test]
    fn sub_seeds_are_distinct() {
        let a = sub_seed(42, 0);
        let b = sub_seed(42, 1);
        let c = sub_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn loss_probability_in_range_and_deterministic() {
        let cfg = NetworkConfig::new(3, 6);
        let r1 = photon_loss_probability(&cfg, 50, 7).unwrap();
        let r2 = photon_loss_probability(&cfg, 50, 7).unwrap();
        assert!(r1.mean >= 0.0 && r1.mean <= 1.0);
        assert!(r1.std_err >= 0.0);
        assert_eq!(r1.mean.to_bits(), r2.mean.to_bits());
        assert_eq!(r1.std_err.to_bits(), r2.std_err.to_bits());
    }

    #[test]
    fn single_user_brickwall_loss_is_zero() {
        let mut cfg = NetworkConfig::new(1, 8);
        cfg.filter_rule = FilterRule::Brickwall;
        let r = photon_loss_probability(&cfg, 10, 3).unwrap();
        assert!(r.mean.abs() < 1e-6, "got {}", r.mean);
    }

    #[test]
    fn single_user_crosstalk_is_negligible() {
        let cfg = NetworkConfig::new(1, 8);
        let r = crosstalk_probability(&cfg, 32, 5).unwrap();
        assert!(r.mean.abs() < 1e-6, "got {}", r.mean);
    }

    #[test]
    fn crosstalk_grows_with_users() {
        let r2 = crosstalk_probability(&NetworkConfig::new(2, 8), 64, 11).unwrap();
        let r5 = crosstalk_probability(&NetworkConfig::new(5, 8), 64, 11).unwrap();
        assert!(r5.mean > r2.mean);
    }

    #[test]
    fn std_err_shrinks_with_trials() {
        let cfg = NetworkConfig::new(5, 8);
        let se: Vec<f64> = [50usize, 200, 800]
            .iter()
            .map(|&t| photon_loss_probability(&cfg, t, 13).unwrap().std_err)
            .collect();
        assert!(se[0] > se[1] && se[1] > se[2], "{se:?}");
        let ratio = se[0] / se[2];
        assert!((2.0..8.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn fidelity_sweep_states_agree() {
        let cfg = NetworkConfig::new(3, 8);
        let results = state_fidelity_sweep(&cfg, 40, 3, Background::Silent).unwrap();
        assert_eq!(results.len(), 4);
        for r in &results {
            assert!(r.mean_fidelity > 0.9 && r.mean_fidelity <= 1.0);
            assert!((r.mean_fidelity + r.mean_infidelity - 1.0).abs() < 1e-12);
        }
        let plus = &results[2];
        let minus = &results[3];
        let gap = (plus.mean_fidelity - minus.mean_fidelity).abs();
        let se = (plus.std_err * plus.std_err + minus.std_err * minus.std_err).sqrt();
        assert!(gap <= 3.0 * se.max(1e-9), "gap {gap} vs 3se {se}");
    }

    #[test]
    fn fidelity_random_background_stays_close_to_one() {
        let cfg = NetworkConfig::new(3, 8);
        let results = state_fidelity_sweep(&cfg, 20, 9, Background::Random).unwrap();
        for r in &results {
            assert!(r.mean_fidelity > 0.9, "state {:?}: {}", r.state, r.mean_fidelity);
        }
    }

    #[test]
    fn density_of_single_delivered_photon() {
        let cfg = NetworkConfig::new(1, 8);
        let mut bits = vec![vec![false; 8]];
        bits[0][2] = true;
        let out = propagate(&cfg, &bits, 0).unwrap();
        let trace = photon_number_density(&out);
        let integrals = trace.bin_integrals();
        let total: f64 = integrals[0].iter().sum();
        // one delivered photon minus two matched filter passes
        assert!((total - 0.962).abs() < 5e-3, "total {total}");
        assert!(integrals[0][2] > 0.9 * total);
    }

    #[test]
    fn trace_csv_shape() {
        let cfg = NetworkConfig::new(2, 4);
        let bits = vec![vec![true; 8], vec![false; 8]];
        let out = propagate(&cfg, &bits, 0).unwrap();
        let csv = photon_number_density(&out).to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,channel_1,channel_2");
        assert_eq!(csv.lines().count(), 1 + out.grid.total_samples());
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = NetworkConfig::new(2, 6);
        assert!(photon_loss_probability(&cfg, 0, 0).is_err());
        assert!(crosstalk_probability(&cfg, 0, 0).is_err());
        assert!(state_fidelity_sweep(&cfg, 0, 0, Background::Silent).is_err());
    }
}
