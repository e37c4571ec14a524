//! Ideal optical components: 0/π phase modulators (spread/despread),
//! Gaussian fiber-Bragg-grating reflect/transmit splits, and the composed
//! add (mux) and drop (demux) stages.
//!
//! Circulators are ideal lossless routers; their routing effect is folded
//! into the stage composition. Photons never interact: every stage acts on
//! each photon's amplitude independently.

use crate::codes::Code;
use crate::error::{Error, Result};
use crate::signal::{inverse_spectrum, spectrum, Spectrum, TimeGrid, Wavefunction};

/// Frequency-selective reflector. The reflected amplitude response `R(f)`
/// and transmitted response `T(f) = sqrt(1 - R(f)²)` conserve energy at
/// every frequency sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FbgFilter {
    /// Gaussian reflectivity profile of spectral width `sigma` centered on
    /// the photon carrier (`center` = 0 is baseband).
    Gaussian { center: f64, sigma: f64 },
    /// Idealized rectangular reflector: full reflection inside
    /// `|f - center| <= half_width`, full transmission outside.
    Brickwall { center: f64, half_width: f64 },
}

impl FbgFilter {
    /// Filter matched to an unspread Gaussian packet of temporal width
    /// `sigma_t`: `sigma_filt = (8π/5) · sigma_f` with `sigma_f = 1/(4π σ_t)`,
    /// wide enough to reflect the despread photon nearly intact.
    pub fn matched_gaussian(sigma_t: f64) -> Self {
        FbgFilter::Gaussian {
            center: 0.0,
            sigma: 2.0 / (5.0 * sigma_t),
        }
    }

    /// The opposite reading of the width rule (filter ~5x narrower than the
    /// photon); kept selectable for sensitivity studies.
    pub fn narrow_gaussian(sigma_t: f64) -> Self {
        let sigma_f = 1.0 / (4.0 * std::f64::consts::PI * sigma_t);
        FbgFilter::Gaussian {
            center: 0.0,
            sigma: sigma_f * 5.0 / (8.0 * std::f64::consts::PI),
        }
    }

    /// Reflected amplitude response at frequency `f`.
    pub fn reflect_amplitude(&self, f: f64) -> f64 {
        match *self {
            FbgFilter::Gaussian { center, sigma } => {
                let d = f - center;
                (-d * d / (4.0 * sigma * sigma)).exp()
            }
            FbgFilter::Brickwall { center, half_width } => {
                if (f - center).abs() <= half_width {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Transmitted amplitude response, the energy-conserving complement.
    pub fn transmit_amplitude(&self, f: f64) -> f64 {
        let r = self.reflect_amplitude(f);
        (1.0 - r * r).max(0.0).sqrt()
    }
}

/// `R(f)` / `T(f)` sampled on a grid's spectrum bins, so repeated stage
/// applications skip the per-sample transcendentals.
#[derive(Debug, Clone)]
pub struct FilterResponse {
    reflect: Vec<f64>,
    transmit: Vec<f64>,
    grid: TimeGrid,
}

impl FilterResponse {
    pub fn new(filter: &FbgFilter, grid: TimeGrid) -> Self {
        let k = grid.total_samples();
        let mut reflect = Vec::with_capacity(k);
        let mut transmit = Vec::with_capacity(k);
        for m in 0..k {
            let f = grid.frequency(m);
            reflect.push(filter.reflect_amplitude(f));
            transmit.push(filter.transmit_amplitude(f));
        }
        Self {
            reflect,
            transmit,
            grid,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn reflect(&self) -> &[f64] {
        &self.reflect
    }

    pub fn transmit(&self) -> &[f64] {
        &self.transmit
    }

    fn check_grid(&self, w: &Wavefunction) -> Result<()> {
        if w.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Reflected energy without leaving the frequency domain.
    fn reflected_energy(&self, s: &Spectrum) -> f64 {
        self.reflect
            .iter()
            .zip(s.bins())
            .map(|(r, b)| r * r * b.norm_sqr())
            .sum::<f64>()
            * s.df()
    }
}

/// Phase modulator driven by one spreading code: chip value +1 applies
/// phase 0, chip value −1 applies phase π. Each chip spans `chip_samples`
/// samples; every applied factor has unit modulus, so norms are preserved.
#[derive(Debug, Clone)]
pub struct Modulator {
    code: Code,
    chip_samples: usize,
}

impl Modulator {
    pub fn new(code: Code, chip_samples: usize) -> Self {
        Self { code, chip_samples }
    }

    pub fn code(&self) -> &Code {
        &self.code
    }

    pub fn chip_samples(&self) -> usize {
        self.chip_samples
    }

    fn check_grid(&self, grid: TimeGrid) -> Result<()> {
        if self.code.len() != grid.chips_per_bin()
            || self.chip_samples != grid.samples_per_chip()
        {
            return Err(Error::CodeGridMismatch {
                code_len: self.code.len(),
                chips_per_bin: grid.chips_per_bin(),
            });
        }
        Ok(())
    }

    /// Multiply one bin's samples by the chip values in place.
    pub(crate) fn apply_bin(&self, w: &mut Wavefunction, bin: usize) -> Result<()> {
        let grid = w.grid();
        self.check_grid(grid)?;
        if bin >= grid.total_bins() {
            return Err(Error::BinOutOfRange {
                bin,
                bins: grid.total_bins(),
            });
        }
        let spb = grid.samples_per_bin();
        let amps = &mut w.amplitudes_mut()[bin * spb..(bin + 1) * spb];
        for (j, &chip) in self.code.chips().iter().enumerate() {
            if chip < 0 {
                for a in &mut amps[j * self.chip_samples..(j + 1) * self.chip_samples] {
                    *a = -*a;
                }
            }
        }
        Ok(())
    }

    /// Multiply every bin by the (per-bin periodic) chip pattern in place.
    pub(crate) fn apply_all(&self, w: &mut Wavefunction) -> Result<()> {
        for bin in 0..w.grid().total_bins() {
            self.apply_bin(w, bin)?;
        }
        Ok(())
    }
}

/// Multiply the samples of one bin by the code's chip values: sample `k`
/// inside chip `j` picks up the factor `c_j`. Norm is unchanged.
pub fn spread(w: &Wavefunction, m: &Modulator, bin: usize) -> Result<Wavefunction> {
    let mut out = w.clone();
    m.apply_bin(&mut out, bin)?;
    Ok(out)
}

/// Despreading is the same ±1 multiplication; `despread(spread(w)) == w`
/// bit-exactly because the chips square to one.
pub fn despread(w: &Wavefunction, m: &Modulator, bin: usize) -> Result<Wavefunction> {
    spread(w, m, bin)
}

/// Split a wavefunction at the grating: reflected spectrum `R(f)Φ(f)`,
/// transmitted spectrum `T(f)Φ(f)`. Energies of the two outputs sum to the
/// input energy.
pub fn fbg_split(w: &Wavefunction, filter: &FbgFilter) -> (Wavefunction, Wavefunction) {
    fbg_split_with(w, &FilterResponse::new(filter, w.grid()))
}

pub fn fbg_split_with(w: &Wavefunction, resp: &FilterResponse) -> (Wavefunction, Wavefunction) {
    let s = spectrum(w);
    let mut refl = s.clone();
    for (b, r) in refl.bins_mut().iter_mut().zip(&resp.reflect) {
        *b *= r;
    }
    let mut trans = s;
    for (b, t) in trans.bins_mut().iter_mut().zip(&resp.transmit) {
        *b *= t;
    }
    (inverse_spectrum(&refl), inverse_spectrum(&trans))
}

/// Insert a fresh photon at its own add stage: the grating reflects it into
/// the bus and the stage modulator spreads it with the user's code. The
/// transmitted remainder is the insertion loss.
pub(crate) fn insert_photon(
    photon: &Wavefunction,
    m: &Modulator,
    resp: &FilterResponse,
) -> Result<(Wavefunction, f64)> {
    resp.check_grid(photon)?;
    m.check_grid(photon.grid())?;
    let s = spectrum(photon);
    let mut refl = s;
    for (b, r) in refl.bins_mut().iter_mut().zip(&resp.reflect) {
        *b *= r;
    }
    let mut on_bus = inverse_spectrum(&refl);
    let loss = photon.norm_sq() - on_bus.norm_sq();
    m.apply_all(&mut on_bus)?;
    Ok((on_bus, loss))
}

/// Carry a bus photon through a foreign add stage: modulate with the stage
/// code, lose the in-band reflected fraction back up the input fiber, keep
/// the transmitted part, undo the modulation. Returns the lost energy.
pub(crate) fn foreign_pass(
    w: &mut Wavefunction,
    m: &Modulator,
    resp: &FilterResponse,
) -> Result<f64> {
    resp.check_grid(w)?;
    m.apply_all(w)?;
    let s = spectrum(w);
    let lost = resp.reflected_energy(&s);
    let mut trans = s;
    for (b, t) in trans.bins_mut().iter_mut().zip(&resp.transmit) {
        *b *= t;
    }
    *w = inverse_spectrum(&trans);
    m.apply_all(w)?;
    Ok(lost)
}

/// Drop stage tap: modulate with the receiver's code (the intended photon
/// concentrates back into the filter band), deliver the reflected part to
/// the receiver, re-modulate the transmitted part onto the bus.
pub(crate) fn demux_tap(
    w: &mut Wavefunction,
    m: &Modulator,
    resp: &FilterResponse,
) -> Result<Wavefunction> {
    resp.check_grid(w)?;
    m.apply_all(w)?;
    let s = spectrum(w);
    let mut refl = s.clone();
    for (b, r) in refl.bins_mut().iter_mut().zip(&resp.reflect) {
        *b *= r;
    }
    let delivered = inverse_spectrum(&refl);
    let mut trans = s;
    for (b, t) in trans.bins_mut().iter_mut().zip(&resp.transmit) {
        *b *= t;
    }
    *w = inverse_spectrum(&trans);
    m.apply_all(w)?;
    Ok(delivered)
}

/// Same drop stage, but only the delivered energy is wanted: Parseval gives
/// it in the frequency domain and the reflected inverse transform is
/// skipped.
pub(crate) fn demux_pass_energy(
    w: &mut Wavefunction,
    m: &Modulator,
    resp: &FilterResponse,
) -> Result<f64> {
    resp.check_grid(w)?;
    m.apply_all(w)?;
    let s = spectrum(w);
    let delivered = resp.reflected_energy(&s);
    let mut trans = s;
    for (b, t) in trans.bins_mut().iter_mut().zip(&resp.transmit) {
        *b *= t;
    }
    *w = inverse_spectrum(&trans);
    m.apply_all(w)?;
    Ok(delivered)
}

/// Loss bookkeeping for one multiplexer stage.
#[derive(Debug, Clone)]
pub struct MuxRecord {
    /// Transmission leakage of the newly inserted photon, if one was added.
    pub insertion_loss: Option<f64>,
    /// In-band energy stripped from each pre-existing bus photon, by index.
    pub per_photon_loss: Vec<f64>,
}

/// One add stage: every existing bus photon incurs its in-band spreading
/// loss whether or not a new photon arrives; a new photon (if any) joins
/// the end of the bus list spread with the stage code.
pub fn mux_stage(
    bus: &mut Vec<Wavefunction>,
    new_photon: Option<&Wavefunction>,
    m: &Modulator,
    filter: &FbgFilter,
) -> Result<MuxRecord> {
    let grid = bus
        .first()
        .map(|w| w.grid())
        .or_else(|| new_photon.map(|w| w.grid()))
        .ok_or(Error::GridMismatch)?;
    let resp = FilterResponse::new(filter, grid);
    let mut per_photon_loss = Vec::with_capacity(bus.len());
    for w in bus.iter_mut() {
        per_photon_loss.push(foreign_pass(w, m, &resp)?);
    }
    let insertion_loss = match new_photon {
        Some(p) => {
            let (on_bus, loss) = insert_photon(p, m, &resp)?;
            bus.push(on_bus);
            Some(loss)
        }
        None => None,
    };
    Ok(MuxRecord {
        insertion_loss,
        per_photon_loss,
    })
}

/// One drop stage: every bus photon is despread with the receiver's code
/// and split; the reflected components are delivered to this receiver
/// (index-aligned with the bus), the transmitted components continue.
pub fn demux_stage(
    bus: &mut [Wavefunction],
    m: &Modulator,
    filter: &FbgFilter,
) -> Result<Vec<Wavefunction>> {
    let grid = match bus.first() {
        Some(w) => w.grid(),
        None => return Ok(Vec::new()),
    };
    let resp = FilterResponse::new(filter, grid);
    bus.iter_mut().map(|w| demux_tap(w, m, &resp)).collect()
}
