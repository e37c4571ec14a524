use thiserror::Error;

/// Errors produced by code construction, signal building and propagation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("LFSR seed must not be all-zero")]
    ZeroSeed,

    #[error("register count n = {0} is outside the supported range 2..=16")]
    RegisterCount(u32),

    #[error("tap position {tap} is outside 1..={n}")]
    TapOutOfRange { tap: u32, n: u32 },

    #[error("taps {taps:?} are not a primitive polynomial: sequence period {period} != {expected}")]
    NonPrimitive {
        taps: Vec<u32>,
        period: usize,
        expected: usize,
    },

    #[error("code length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("family of {requested} codes exceeds the {available} distinct cyclic shifts")]
    FamilyTooLarge { requested: usize, available: usize },

    #[error("time grids differ between operands")]
    GridMismatch,

    #[error("code of length {code_len} does not match the grid's {chips_per_bin} chips per bin")]
    CodeGridMismatch {
        code_len: usize,
        chips_per_bin: usize,
    },

    #[error("packet center {center} lies outside the grid span [0, {span})")]
    CenterOutsideGrid { center: f64, span: f64 },

    #[error("packet width must be positive, got {0}")]
    NonPositiveWidth(f64),

    #[error("packet truncation: {mass:.3e} of the analytic mass falls outside the grid")]
    PacketTruncation { mass: f64 },

    #[error("grid spans {0} bins, need at least {1}")]
    TooFewBins(usize, usize),

    #[error("bit string has {got} bits but the grid has {want} bins")]
    BitCount { got: usize, want: usize },

    #[error("bin {bin} is outside the grid's {bins} bins")]
    BinOutOfRange { bin: usize, bins: usize },

    #[error("wavefunction norm {0:.3e} is too small to normalize")]
    ZeroNorm(f64),

    #[error("network needs {users} codes but S = {s} admits at most S users")]
    TooManyUsers { users: usize, s: usize },

    #[error("expected one bit string per user ({users}), got {got}")]
    BitstringCount { users: usize, got: usize },

    #[error("no empty (channel, bin) slot could be drawn after {0} attempts")]
    NoEmptyBin(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
