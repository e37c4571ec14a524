//! End-to-end shared-fiber link: N add stages followed by N drop stages.
//! Every emitted photon is propagated independently through the chain and
//! accounted for in a per-photon energy ledger.
//!
//! The chain is periodic per bin and linear, so a photon placed in bin `j`
//! propagates exactly like the same photon in bin 0 delayed by `j` bins.
//! Propagation therefore runs once per user on a bin-0 template and actual
//! photons reuse the template outcome shifted to their bin.

use rand::Rng;
use serde::Serialize;

use crate::codes::{build_family, CodeFamily, LfsrSpec};
use crate::error::{Error, Result};
use crate::metrics::sub_rng;
use crate::optics::{
    demux_pass_energy, demux_tap, foreign_pass, insert_photon, FbgFilter, FilterResponse,
    Modulator,
};
use crate::signal::{
    gaussian_packet, inverse_spectrum, spectrum, TimeGrid, Wavefunction, PACKET_SIGMA_FRACTION,
};

/// Which reflect/transmit profile the add/drop gratings use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FilterRule {
    /// Matched Gaussian, (8π/5)× the packet's spectral width.
    Wide,
    /// The opposite reading of the width rule (5× narrower than the packet).
    Narrow,
    /// Idealized rectangular reflector; sources are band-limited to the
    /// reflector band so the §-bound check is free of Gaussian tails.
    Brickwall,
}

impl FilterRule {
    pub fn name(&self) -> &'static str {
        match self {
            FilterRule::Wide => "wide",
            FilterRule::Narrow => "narrow",
            FilterRule::Brickwall => "brickwall",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wide" => Ok(FilterRule::Wide),
            "narrow" => Ok(FilterRule::Narrow),
            "brickwall" => Ok(FilterRule::Brickwall),
            other => Err(Error::Config(format!(
                "unknown filter rule `{other}` (expected wide|narrow|brickwall)"
            ))),
        }
    }
}

/// Half-width of the brick-wall reflector band in units of 1/T. Keeps the
/// per-stage leakage of a spread photon at ~1/S.
pub const BRICKWALL_HALF_WIDTH: f64 = 0.5;

/// Full description of one simulated link.
#[derive(Debug, Clone, Serialize)]
pub struct NetworkConfig {
    /// Number of users N sharing the fiber.
    pub users: usize,
    /// Spreading exponent n; the spreading factor is S = 2^n − 1.
    pub exponent: u32,
    /// Samples per chip M.
    pub samples_per_chip: usize,
    /// Bits (time bins) per user per run.
    pub bits_per_user: usize,
    pub filter_rule: FilterRule,
    /// Emit all packets with phase 0 instead of random phases.
    pub in_phase: bool,
}

impl NetworkConfig {
    pub fn new(users: usize, exponent: u32) -> Self {
        Self {
            users,
            exponent,
            samples_per_chip: 2,
            bits_per_user: 8,
            filter_rule: FilterRule::Wide,
            in_phase: false,
        }
    }

    pub fn spreading_factor(&self) -> usize {
        (1usize << self.exponent) - 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=16).contains(&self.exponent) {
            return Err(Error::RegisterCount(self.exponent));
        }
        if self.users == 0 {
            return Err(Error::Config("need at least one user".into()));
        }
        if self.users > self.spreading_factor() {
            return Err(Error::TooManyUsers {
                users: self.users,
                s: self.spreading_factor(),
            });
        }
        if self.samples_per_chip == 0 || self.bits_per_user == 0 {
            return Err(Error::Config(
                "samples per chip and bits per user must be nonzero".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(
            self.spreading_factor(),
            self.samples_per_chip,
            self.bits_per_user,
        )
    }

    /// Grid with an overridden bin count (fidelity states span two bins).
    pub fn grid_with_bins(&self, bins: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.spreading_factor(), self.samples_per_chip, bins)
    }

    pub fn filter(&self, grid: TimeGrid) -> FbgFilter {
        let sigma_t = PACKET_SIGMA_FRACTION * grid.bin_duration();
        match self.filter_rule {
            FilterRule::Wide => FbgFilter::matched_gaussian(sigma_t),
            FilterRule::Narrow => FbgFilter::narrow_gaussian(sigma_t),
            FilterRule::Brickwall => FbgFilter::Brickwall {
                center: 0.0,
                half_width: BRICKWALL_HALF_WIDTH / grid.bin_duration(),
            },
        }
    }
}

/// Ideal per-stage loss bound of the architecture: a photon traverses at
/// most 2N − 2 lossy stages, each stripping ~1/S.
pub fn ideal_loss_bound(users: usize, spreading_factor: usize) -> f64 {
    if users <= 1 {
        return 0.0;
    }
    (2 * users - 2) as f64 / spreading_factor as f64
}

/// How much of each delivery the propagation should keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectMode {
    /// Delivered energy per receiver only.
    Energies,
    /// Delivered energy per receiver split per time bin.
    BinEnergies,
    /// Full delivered waveforms.
    Waveforms,
}

/// One receiver's share of a propagated photon.
#[derive(Debug, Clone)]
pub struct Delivery {
    pub receiver: usize,
    pub energy: f64,
    pub bin_energies: Option<Vec<f64>>,
    pub waveform: Option<Wavefunction>,
}

/// Ledger of one template photon's traversal.
#[derive(Debug, Clone)]
pub struct TemplateOutcome {
    pub user: usize,
    pub input_energy: f64,
    /// Transmission leakage at the photon's own add stage.
    pub insertion_loss: f64,
    /// In-band losses at the foreign add stages, in traversal order.
    pub stage_losses: Vec<f64>,
    /// One entry per receiver, in receiver order.
    pub deliveries: Vec<Delivery>,
    /// Energy left on the bus after the last drop stage (counted as loss).
    pub residual_energy: f64,
}

impl TemplateOutcome {
    pub fn own_delivery_energy(&self) -> f64 {
        self.deliveries[self.user].energy
    }

    /// insertion + foreign-stage losses + residual; everything that never
    /// reaches a receiver.
    pub fn total_loss(&self) -> f64 {
        self.insertion_loss + self.stage_losses.iter().sum::<f64>() + self.residual_energy
    }

    /// Ledger defect: |delivered + lost − input|.
    pub fn ledger_defect(&self) -> f64 {
        let delivered: f64 = self.deliveries.iter().map(|d| d.energy).sum();
        (delivered + self.total_loss() - self.input_energy).abs()
    }
}

/// Prebuilt stage kernels for one configuration: code family, per-user
/// modulators and the sampled filter response. Immutable after
/// construction; safe to share across trial workers.
pub struct LinkModel {
    config: NetworkConfig,
    grid: TimeGrid,
    family: CodeFamily,
    modulators: Vec<Modulator>,
    filter: FbgFilter,
    response: FilterResponse,
}

impl LinkModel {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        Self::with_bins(config, None)
    }

    /// A model whose grid spans `bins` bins instead of `bits_per_user`.
    pub fn with_bins(config: NetworkConfig, bins: Option<usize>) -> Result<Self> {
        config.validate()?;
        let grid = match bins {
            Some(b) => config.grid_with_bins(b)?,
            None => config.grid()?,
        };
        let spec = LfsrSpec::for_register_count(config.exponent)?;
        let family = build_family(&spec, config.users)?;
        let modulators = family
            .members()
            .iter()
            .map(|c| Modulator::new(c.clone(), config.samples_per_chip))
            .collect();
        let filter = config.filter(grid);
        let response = FilterResponse::new(&filter, grid);
        Ok(Self {
            config,
            grid,
            family,
            modulators,
            filter,
            response,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn family(&self) -> &CodeFamily {
        &self.family
    }

    pub fn filter(&self) -> &FbgFilter {
        &self.filter
    }

    /// Band-limit a source to the brick-wall reflector band and restore
    /// unit norm. Identity under the Gaussian rules.
    pub fn prepare_source(&self, mut w: Wavefunction) -> Result<Wavefunction> {
        if self.config.filter_rule == FilterRule::Brickwall {
            let mut s = spectrum(&w);
            for (b, r) in s.bins_mut().iter_mut().zip(self.response.reflect()) {
                *b *= r;
            }
            w = inverse_spectrum(&s);
            w.normalize()?;
        }
        Ok(w)
    }

    /// Unit-norm source packet centered in `bin`. Packets in later bins are
    /// exact circular delays of the bin-0 packet, which keeps template
    /// propagation and per-bin reuse consistent to round-off.
    pub fn source_packet(&self, bin: usize, phase: f64) -> Result<Wavefunction> {
        if bin >= self.grid.total_bins() {
            return Err(Error::BinOutOfRange {
                bin,
                bins: self.grid.total_bins(),
            });
        }
        let sigma = PACKET_SIGMA_FRACTION * self.grid.bin_duration();
        let w = gaussian_packet(self.grid, self.grid.bin_center(0), sigma, phase)?;
        Ok(self.prepare_source(w)?.shift_bins(bin))
    }

    /// Carry one photon of `user` through its add stage, the downstream
    /// add stages and the full drop chain.
    pub fn propagate_photon(
        &self,
        user: usize,
        source: &Wavefunction,
        mode: CollectMode,
    ) -> Result<TemplateOutcome> {
        if user >= self.config.users {
            return Err(Error::Config(format!(
                "user {user} out of range 0..{}",
                self.config.users
            )));
        }
        let input_energy = source.norm_sq();
        let (mut w, insertion_loss) =
            insert_photon(source, &self.modulators[user], &self.response)?;

        let mut stage_losses = Vec::with_capacity(self.config.users - 1 - user);
        for p in user + 1..self.config.users {
            stage_losses.push(foreign_pass(&mut w, &self.modulators[p], &self.response)?);
        }

        let mut deliveries = Vec::with_capacity(self.config.users);
        for p in 0..self.config.users {
            let delivery = match mode {
                CollectMode::Energies => Delivery {
                    receiver: p,
                    energy: demux_pass_energy(&mut w, &self.modulators[p], &self.response)?,
                    bin_energies: None,
                    waveform: None,
                },
                CollectMode::BinEnergies | CollectMode::Waveforms => {
                    let delivered = demux_tap(&mut w, &self.modulators[p], &self.response)?;
                    Delivery {
                        receiver: p,
                        energy: delivered.norm_sq(),
                        bin_energies: Some(delivered.bin_energies()),
                        waveform: match mode {
                            CollectMode::Waveforms => Some(delivered),
                            _ => None,
                        },
                    }
                }
            };
            deliveries.push(delivery);
        }

        Ok(TemplateOutcome {
            user,
            input_energy,
            insertion_loss,
            stage_losses,
            deliveries,
            residual_energy: w.norm_sq(),
        })
    }

    /// Bin-0 template photon of `user`; actual photons in bin `j` reuse this
    /// outcome delayed by `j` bins.
    pub fn user_template(&self, user: usize, mode: CollectMode) -> Result<TemplateOutcome> {
        let source = self.source_packet(0, 0.0)?;
        self.propagate_photon(user, &source, mode)
    }
}

/// Per-photon ledger entry of a full network run.
#[derive(Debug, Clone, Serialize)]
pub struct PhotonRecord {
    pub user: usize,
    pub bin: usize,
    pub phase: f64,
    /// Delivered energy per receiver.
    pub delivered: Vec<f64>,
    /// insertion + foreign-stage + residual energy.
    pub loss: f64,
    pub residual: f64,
}

/// Outputs of one full run: the ledger plus per-receiver photon-number
/// densities Σ_j |φ_j(t)|² sampled on the grid.
pub struct RunOutcome {
    pub config: NetworkConfig,
    pub seed: u64,
    pub records: Vec<PhotonRecord>,
    pub receiver_densities: Vec<Vec<f64>>,
    pub grid: TimeGrid,
}

impl RunOutcome {
    pub fn manifest(&self) -> RunManifest<'_> {
        RunManifest {
            config: &self.config,
            seed: self.seed,
            photons: &self.records,
        }
    }
}

/// JSON-serializable run manifest: configuration, seed and photon ledger.
#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub config: &'a NetworkConfig,
    pub seed: u64,
    pub photons: &'a [PhotonRecord],
}

/// Propagate one bit pattern per user through the link. Photons of user p
/// enter at add stage p, cross the downstream add stages and the whole
/// drop chain; receiver outputs accumulate as photon-number densities.
pub fn propagate(config: &NetworkConfig, bits: &[Vec<bool>], seed: u64) -> Result<RunOutcome> {
    config.validate()?;
    if bits.len() != config.users {
        return Err(Error::BitstringCount {
            users: config.users,
            got: bits.len(),
        });
    }
    for row in bits {
        if row.len() != config.bits_per_user {
            return Err(Error::BitCount {
                got: row.len(),
                want: config.bits_per_user,
            });
        }
    }
    let model = LinkModel::new(config.clone())?;
    let grid = model.grid();
    let mut rng = sub_rng(seed, 0);

    let mut records = Vec::new();
    let mut densities = vec![vec![0.0; grid.total_samples()]; config.users];
    for (user, row) in bits.iter().enumerate() {
        if !row.iter().any(|&b| b) {
            continue;
        }
        let template = model.user_template(user, CollectMode::Waveforms)?;
        for (bin, &bit) in row.iter().enumerate() {
            if !bit {
                continue;
            }
            let phase = if config.in_phase {
                0.0
            } else {
                rng.gen_range(0.0..std::f64::consts::TAU)
            };
            let delivered: Vec<f64> = template.deliveries.iter().map(|d| d.energy).collect();
            records.push(PhotonRecord {
                user,
                bin,
                phase,
                delivered: delivered.clone(),
                loss: template.insertion_loss + template.stage_losses.iter().sum::<f64>(),
                residual: template.residual_energy,
            });
            for d in &template.deliveries {
                let w = d.waveform.as_ref().expect("waveforms collected");
                let shifted = w.shift_bins(bin);
                for (acc, a) in densities[d.receiver].iter_mut().zip(shifted.amplitudes()) {
                    *acc += a.norm_sqr();
                }
            }
        }
    }

    Ok(RunOutcome {
        config: config.clone(),
        seed,
        records,
        receiver_densities: densities,
        grid,
    })
}
