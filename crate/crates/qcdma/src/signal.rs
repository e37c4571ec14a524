//! Sampled single-photon probability-amplitude waveforms: Gaussian packets,
//! time-bin qubit states, norms, overlaps, fidelity and unitary spectra.
//!
//! Time is dimensionless with bin duration `T` as the unit. A bin holds `S`
//! chips of `M` samples each, so every chip covers an integer number of
//! samples and bin/chip boundaries never drift off the sample lattice.

use std::fmt::Write as _;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

/// Fraction of a unit Gaussian packet's analytic mass allowed to fall
/// outside the grid before construction is rejected.
pub const TRUNCATION_LIMIT: f64 = 1e-6;

/// Width of every Gaussian packet relative to the bin duration.
pub const PACKET_SIGMA_FRACTION: f64 = 0.1;

/// Uniform sampling lattice: `M` samples per chip, `S` chips per bin,
/// `total_bins` bins. `dt * samples_per_bin` reproduces the bin duration
/// exactly because the duration is defined as that product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeGrid {
    samples_per_chip: usize,
    chips_per_bin: usize,
    total_bins: usize,
}

impl TimeGrid {
    pub fn new(chips_per_bin: usize, samples_per_chip: usize, total_bins: usize) -> Result<Self> {
        if chips_per_bin == 0 || samples_per_chip == 0 || total_bins == 0 {
            return Err(Error::Config(
                "grid dimensions must all be nonzero".into(),
            ));
        }
        Ok(Self {
            samples_per_chip,
            chips_per_bin,
            total_bins,
        })
    }

    /// Sample spacing. The nominal bin duration is 1.
    pub fn dt(&self) -> f64 {
        1.0 / self.samples_per_bin() as f64
    }

    /// Bin duration `T`, defined as `dt * samples_per_bin`.
    pub fn bin_duration(&self) -> f64 {
        self.dt() * self.samples_per_bin() as f64
    }

    pub fn samples_per_chip(&self) -> usize {
        self.samples_per_chip
    }

    pub fn chips_per_bin(&self) -> usize {
        self.chips_per_bin
    }

    pub fn samples_per_bin(&self) -> usize {
        self.samples_per_chip * self.chips_per_bin
    }

    pub fn total_bins(&self) -> usize {
        self.total_bins
    }

    pub fn total_samples(&self) -> usize {
        self.samples_per_bin() * self.total_bins
    }

    /// Full grid span in time units.
    pub fn span(&self) -> f64 {
        self.bin_duration() * self.total_bins as f64
    }

    /// Midpoint time of sample `k`.
    pub fn time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }

    /// Center time of bin `b`.
    pub fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * self.bin_duration()
    }

    /// Frequency resolution of the grid's spectrum.
    pub fn df(&self) -> f64 {
        1.0 / (self.total_samples() as f64 * self.dt())
    }

    /// Signed frequency of spectrum bin `m` (standard FFT ordering).
    pub fn frequency(&self, m: usize) -> f64 {
        let k = self.total_samples();
        let m = m % k;
        if m <= k / 2 {
            m as f64 * self.df()
        } else {
            (m as f64 - k as f64) * self.df()
        }
    }
}

/// Complex amplitude samples over a [`TimeGrid`]; the single-photon
/// probability amplitude. A freshly prepared photon has squared norm 1;
/// propagation may only decrease it.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    amps: Vec<Complex64>,
    grid: TimeGrid,
}

impl Wavefunction {
    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            amps: vec![Complex64::ZERO; grid.total_samples()],
            grid,
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>, grid: TimeGrid) -> Result<Self> {
        if amps.len() != grid.total_samples() {
            return Err(Error::LengthMismatch(amps.len(), grid.total_samples()));
        }
        Ok(Self { amps, grid })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Squared norm Σ|φ_k|² dt.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dt()
    }

    /// Energy Σ|φ_k|² dt restricted to one bin.
    pub fn bin_energy(&self, bin: usize) -> Result<f64> {
        if bin >= self.grid.total_bins() {
            return Err(Error::BinOutOfRange {
                bin,
                bins: self.grid.total_bins(),
            });
        }
        let spb = self.grid.samples_per_bin();
        let s = bin * spb;
        Ok(self.amps[s..s + spb]
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            * self.grid.dt())
    }

    /// Per-bin energies over the whole grid.
    pub fn bin_energies(&self) -> Vec<f64> {
        (0..self.grid.total_bins())
            .map(|b| self.bin_energy(b).expect("bin in range"))
            .collect()
    }

    /// Circularly delay the waveform by `bins` whole bins.
    pub fn shift_bins(&self, bins: usize) -> Wavefunction {
        let spb = self.grid.samples_per_bin();
        let k = self.amps.len();
        let shift = (bins % self.grid.total_bins()) * spb;
        let mut amps = Vec::with_capacity(k);
        amps.extend_from_slice(&self.amps[k - shift..]);
        amps.extend_from_slice(&self.amps[..k - shift]);
        Wavefunction {
            amps,
            grid: self.grid,
        }
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// Rescale to unit squared norm. Fails below the no-photon threshold.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sq();
        if n < 1e-12 {
            return Err(Error::ZeroNorm(n));
        }
        let inv = 1.0 / n.sqrt();
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Wavefunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += b;
        }
        Ok(())
    }

    /// Probability densities |φ_k|².
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Waveform dump: CSV rows `t,re,im,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im,density\n");
        for (k, a) in self.amps.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:.9e},{:.9e},{:.9e},{:.9e}",
                self.grid.time(k),
                a.re,
                a.im,
                a.norm_sqr()
            );
        }
        out
    }
}

/// Upper-tail mass of the standard normal, accurate enough to decide the
/// truncation threshold (exact regime only matters near Q(z) ~ 1e-6).
fn gaussian_tail(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.5;
    }
    if z < 3.0 {
        // tail is far above the threshold here; magnitude is all we need
        return 1.5e-3_f64.max((-0.5 * z * z).exp() * 0.4 / (1.0 + z));
    }
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let z2 = z * z;
    pdf / z * (1.0 - 1.0 / z2 + 3.0 / (z2 * z2))
}

/// Sample the normalized Gaussian `(2πσ²)^(-1/4) e^{iφ₀} e^{-(t-t₀)²/(4σ²)}`
/// and renormalize on the discrete grid so Σ|φ_k|² dt = 1 exactly.
pub fn gaussian_packet(
    grid: TimeGrid,
    center: f64,
    width: f64,
    phase: f64,
) -> Result<Wavefunction> {
    if width <= 0.0 {
        return Err(Error::NonPositiveWidth(width));
    }
    let span = grid.span();
    if !(0.0..span).contains(&center) {
        return Err(Error::CenterOutsideGrid { center, span });
    }
    let outside = gaussian_tail(center / width) + gaussian_tail((span - center) / width);
    if outside > TRUNCATION_LIMIT {
        return Err(Error::PacketTruncation { mass: outside });
    }

    let rot = Complex64::from_polar(1.0, phase);
    let mut amps = Vec::with_capacity(grid.total_samples());
    let inv_4s2 = 1.0 / (4.0 * width * width);
    for k in 0..grid.total_samples() {
        let d = grid.time(k) - center;
        amps.push(rot * (-d * d * inv_4s2).exp());
    }
    let mut w = Wavefunction { amps, grid };
    w.normalize()?;
    Ok(w)
}

/// Time-bin qubit basis labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeBinLabel {
    Zero,
    One,
    Plus,
    Minus,
}

impl TimeBinLabel {
    pub const ALL: [TimeBinLabel; 4] = [
        TimeBinLabel::Zero,
        TimeBinLabel::One,
        TimeBinLabel::Plus,
        TimeBinLabel::Minus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TimeBinLabel::Zero => "zero",
            TimeBinLabel::One => "one",
            TimeBinLabel::Plus => "plus",
            TimeBinLabel::Minus => "minus",
        }
    }
}

/// A photon encoded over two consecutive time bins.
#[derive(Debug, Clone)]
pub struct TimeBinState {
    pub label: TimeBinLabel,
    pub wavefunction: Wavefunction,
}

/// Build |0⟩, |1⟩ or their ± superpositions on the first two bins of the
/// grid, with packet width σ = 0.1 T.
pub fn make_timebin_state(label: TimeBinLabel, grid: TimeGrid) -> Result<TimeBinState> {
    if grid.total_bins() < 2 {
        return Err(Error::TooFewBins(grid.total_bins(), 2));
    }
    let sigma = PACKET_SIGMA_FRACTION * grid.bin_duration();
    let zero = gaussian_packet(grid, grid.bin_center(0), sigma, 0.0)?;
    let one = gaussian_packet(grid, grid.bin_center(1), sigma, 0.0)?;
    let mut wavefunction = match label {
        TimeBinLabel::Zero => zero,
        TimeBinLabel::One => one,
        TimeBinLabel::Plus | TimeBinLabel::Minus => {
            let sign = if label == TimeBinLabel::Plus { 1.0 } else { -1.0 };
            let mut w = zero;
            let mut o = one;
            o.scale(Complex64::new(sign, 0.0));
            w.add_assign(&o)?;
            w
        }
    };
    wavefunction.normalize()?;
    Ok(TimeBinState {
        label,
        wavefunction,
    })
}

/// One unit-norm Gaussian packet per 1-bit, centered in its bin; 0-bits stay
/// empty. The squared norm equals the photon count when read as a
/// photon-number density.
pub fn encode_bitstring(bits: &[bool], grid: TimeGrid) -> Result<Wavefunction> {
    if bits.len() != grid.total_bins() {
        return Err(Error::BitCount {
            got: bits.len(),
            want: grid.total_bins(),
        });
    }
    let sigma = PACKET_SIGMA_FRACTION * grid.bin_duration();
    let mut out = Wavefunction::zero(grid);
    for (b, &bit) in bits.iter().enumerate() {
        if bit {
            let packet = gaussian_packet(grid, grid.bin_center(b), sigma, 0.0)?;
            out.add_assign(&packet)?;
        }
    }
    Ok(out)
}

/// Discrete overlap integral Σ a*_k b_k dt.
pub fn overlap(a: &Wavefunction, b: &Wavefunction) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let s: Complex64 = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(s * a.grid.dt())
}

/// Fidelity |∫ φ̃*(t) φ(t) dt|² between `input` and the re-normalized
/// `output`. The input is expected to carry unit norm.
pub fn fidelity(input: &Wavefunction, output: &Wavefunction) -> Result<f64> {
    let mut out = output.clone();
    out.normalize()?;
    Ok(overlap(input, &out)?.norm_sqr())
}

// Forward/inverse FFT plans cached per grid length.
fn fft_plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<Vec<(usize, FftDirection, Arc<dyn Fft<f64>>)>>> =
        OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = plans.lock().unwrap();
    if let Some((_, _, p)) = guard.iter().find(|(l, d, _)| *l == len && *d == direction) {
        return Arc::clone(p);
    }
    let mut planner = FftPlanner::new();
    let plan = match direction {
        FftDirection::Forward => planner.plan_fft_forward(len),
        FftDirection::Inverse => planner.plan_fft_inverse(len),
    };
    guard.push((len, direction, Arc::clone(&plan)));
    plan
}

/// Frequency-domain samples of a wavefunction, scaled so the transform is
/// unitary in the Parseval sense: Σ|Φ_m|² df = Σ|φ_k|² dt.
#[derive(Debug, Clone)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    grid: TimeGrid,
}

impl Spectrum {
    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub(crate) fn bins_mut(&mut self) -> &mut [Complex64] {
        &mut self.bins
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn df(&self) -> f64 {
        self.grid.df()
    }

    /// Signed frequency of bin `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        self.grid.frequency(m)
    }

    pub fn norm_sq(&self) -> f64 {
        self.bins.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.df()
    }
}

/// Forward transform Φ_m = Σ_k φ_k e^{-2πi km/K} dt.
pub fn spectrum(w: &Wavefunction) -> Spectrum {
    let mut bins = w.amps.clone();
    fft_plan(bins.len(), FftDirection::Forward).process(&mut bins);
    let dt = w.grid.dt();
    for b in &mut bins {
        *b *= dt;
    }
    Spectrum { bins, grid: w.grid }
}

/// Inverse transform back to the time domain; round-trips with
/// [`spectrum`] to machine precision.
pub fn inverse_spectrum(s: &Spectrum) -> Wavefunction {
    let mut amps = s.bins.clone();
    fft_plan(amps.len(), FftDirection::Inverse).process(&mut amps);
    let scale = 1.0 / (s.grid.total_samples() as f64 * s.grid.dt());
    for a in &mut amps {
        *a *= scale;
    }
    Wavefunction {
        amps,
        grid: s.grid,
    }
}
