//! Scenario configuration, channel-space partitioning, random draws and the
//! two-cell multi-access superposition seen by each access point.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, gaussian_matrix, ComplexMatrix, MAX_CONDITION};

pub type ComplexVector = DVector<Complex64>;

/// Number of cells; the scheme is defined for exactly two.
pub const NUM_CELLS: usize = 2;

/// Per-matrix redraw budget in [`draw_channels`].
pub const CHANNEL_RETRIES: usize = 100;

/// Index of the neighbouring cell.
#[inline]
pub fn other(cell: usize) -> usize {
    1 - cell
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sia,
    NoIa,
    Genie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Sum,
    Mean,
    Geomean,
}

/// What the SNR is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// Per-antenna power of the desired-cell superposition at the AP, measured per trial.
    Received,
    /// Unit-variance transmit symbols: `noise_std^2 = 10^(-snr/10)`.
    Symbol,
}

/// How the per-cell reference matrices are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    /// Orthonormalized Gaussian draw per cell and trial.
    Random,
    /// First (cell 1) and last (cell 2) N' columns of the identity.
    Fixed,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim() {
                    $($name => Ok($ty::$variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($ty), " '{}'"), other
                    ))),
                }
            }
        }
    };
}

keyword_enum!(Scheme { Sia => "sia", NoIa => "no_ia", Genie => "genie" });
keyword_enum!(FunctionKind { Sum => "sum", Mean => "mean", Geomean => "geomean" });
keyword_enum!(SnrReference { Received => "received", Symbol => "symbol" });
keyword_enum!(ReferenceMode { Random => "random", Fixed => "fixed" });

/// Scenario parameters for one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Antennas per node (M).
    pub antennas: usize,
    /// Devices per cell (K).
    pub devices: usize,
    pub num_cells: usize,
    pub snr_db_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub function: FunctionKind,
    pub snr_reference: SnrReference,
    pub reference: ReferenceMode,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 4,
            devices: 5,
            num_cells: NUM_CELLS,
            snr_db_grid: (0..=8).map(|i| 5.0 * i as f64).collect(),
            trials: 200,
            seed: 0,
            scheme: Scheme::Sia,
            function: FunctionKind::Mean,
            snr_reference: SnrReference::Received,
            reference: ReferenceMode::Random,
        }
    }
}

impl SystemConfig {
    pub fn new(antennas: usize, devices: usize, scheme: Scheme) -> Self {
        SystemConfig {
            antennas,
            devices,
            scheme,
            ..Default::default()
        }
    }

    pub fn partition(&self) -> Partition {
        partition(self.antennas)
    }

    /// Checks everything needed to run trials (the SNR grid is checked separately).
    pub fn validate(&self) -> Result<()> {
        if self.antennas < 2 {
            return Err(Error::Config(format!(
                "M={} yields zero AirComp DoF",
                self.antennas
            )));
        }
        if self.devices == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.num_cells != NUM_CELLS {
            return Err(Error::Config(format!(
                "num_cells must be {NUM_CELLS}, got {}",
                self.num_cells
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus a non-empty, finite, ascending SNR grid.
    pub fn validate_sweep(&self) -> Result<()> {
        self.validate()?;
        if self.snr_db_grid.is_empty() {
            return Err(Error::Config("SNR grid is empty".into()));
        }
        if self.snr_db_grid.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR grid contains non-finite values".into()));
        }
        if self.snr_db_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("SNR grid must be strictly ascending".into()));
        }
        Ok(())
    }

    /// Flat `key = value` rendering, one field per line.
    pub fn to_kv_string(&self) -> String {
        let grid: Vec<String> = self.snr_db_grid.iter().map(|s| s.to_string()).collect();
        format!(
            "antennas = {}\ndevices = {}\nnum_cells = {}\nsnr_db_grid = {}\ntrials = {}\nseed = {}\n\
             scheme = {}\nfunction = {}\nsnr_reference = {}\nreference = {}\n",
            self.antennas,
            self.devices,
            self.num_cells,
            grid.join(","),
            self.trials,
            self.seed,
            self.scheme,
            self.function,
            self.snr_reference,
            self.reference,
        )
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#` comments are skipped.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    /// Sets a single field by its name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
        }
        match key {
            "antennas" => self.antennas = num(key, value)?,
            "devices" => self.devices = num(key, value)?,
            "num_cells" => self.num_cells = num(key, value)?,
            "snr_db_grid" => self.snr_db_grid = parse_list(value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "scheme" => self.scheme = value.parse()?,
            "function" => self.function = value.parse()?,
            "snr_reference" => self.snr_reference = value.parse()?,
            "reference" => self.reference = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }
}

/// Parses a comma-separated list; an empty string gives an empty list.
pub fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("invalid list element '{s}'")))
        })
        .collect()
}

/// Split of the M-dimensional receive space into signal and interference subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// Signal-subspace dimension, i.e. the AirComp DoF.
    pub n_ac: usize,
    /// Interference-subspace dimension.
    pub n_prime: usize,
}

pub fn partition(antennas: usize) -> Partition {
    Partition {
        n_ac: antennas / 2,
        n_prime: antennas - antennas / 2,
    }
}

/// Direct and cross channels for every device, indexed `[cell][device]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Device (k, i) to its own AP i.
    pub direct: [Vec<ComplexMatrix>; NUM_CELLS],
    /// Device (k, i) to the neighbouring AP.
    pub cross: [Vec<ComplexMatrix>; NUM_CELLS],
}

impl ChannelSet {
    pub fn antennas(&self) -> usize {
        self.direct[0][0].nrows()
    }

    pub fn devices(&self) -> usize {
        self.direct[0].len()
    }

    /// Same direct channels, all cross channels set to zero.
    pub fn without_cross(&self) -> ChannelSet {
        let zero = |v: &Vec<ComplexMatrix>| {
            v.iter()
                .map(|g| ComplexMatrix::zeros(g.nrows(), g.ncols()))
                .collect()
        };
        ChannelSet {
            direct: self.direct.clone(),
            cross: [zero(&self.cross[0]), zero(&self.cross[1])],
        }
    }

    /// Bit patterns of every entry, in a fixed order; used for determinism checks.
    pub fn to_bits(&self) -> Vec<u64> {
        self.direct
            .iter()
            .chain(self.cross.iter())
            .flatten()
            .flat_map(|m| m.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]))
            .collect()
    }
}

fn draw_generic<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<ComplexMatrix> {
    for _ in 0..CHANNEL_RETRIES {
        let h = gaussian_matrix(m, m, rng);
        if condition_number(&h) <= MAX_CONDITION {
            return Ok(h);
        }
    }
    Err(Error::DegenerateChannels {
        retries: CHANNEL_RETRIES,
    })
}

/// Draws i.i.d. Rayleigh channels; any matrix failing the conditioning guard is redrawn.
pub fn draw_channels<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<ChannelSet> {
    let m = config.antennas;
    let mut direct: [Vec<ComplexMatrix>; NUM_CELLS] = Default::default();
    let mut cross: [Vec<ComplexMatrix>; NUM_CELLS] = Default::default();
    for cell in 0..NUM_CELLS {
        for _ in 0..config.devices {
            direct[cell].push(draw_generic(m, rng)?);
            cross[cell].push(draw_generic(m, rng)?);
        }
    }
    Ok(ChannelSet { direct, cross })
}

/// Vector symbols `x[cell][device]`, each N_ac x 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub symbols: [Vec<ComplexVector>; NUM_CELLS],
}

impl SymbolBlock {
    /// The AirComp target of a cell: the sum of its devices' symbols.
    pub fn aggregate(&self, cell: usize) -> ComplexVector {
        let n = self.symbols[cell][0].len();
        self.symbols[cell]
            .iter()
            .fold(ComplexVector::zeros(n), |acc, x| acc + x)
    }

    pub fn scaled(&self, alpha: Complex64) -> SymbolBlock {
        SymbolBlock {
            symbols: self
                .symbols
                .clone()
                .map(|v| v.into_iter().map(|x| x * alpha).collect()),
        }
    }
}

/// Unit-variance CN(0, 1) symbols for every device.
pub fn draw_symbols<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<SymbolBlock> {
    let n_ac = config.partition().n_ac;
    if n_ac == 0 {
        return Err(Error::Config(format!(
            "M={} yields zero AirComp DoF",
            config.antennas
        )));
    }
    let mut symbols: [Vec<ComplexVector>; NUM_CELLS] = Default::default();
    for cell_symbols in symbols.iter_mut() {
        for _ in 0..config.devices {
            cell_symbols.push(gaussian_matrix(n_ac, 1, rng).column(0).into_owned());
        }
    }
    Ok(SymbolBlock { symbols })
}

/// Per-device precoders `W[cell][device]`, each M x N_ac.
pub type Precoders = [Vec<ComplexMatrix>; NUM_CELLS];

/// Noiseless received superposition at each AP, split by origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition {
    /// Sum over the AP's own devices.
    pub desired: [ComplexVector; NUM_CELLS],
    /// Sum over the neighbouring cell's devices.
    pub interference: [ComplexVector; NUM_CELLS],
}

impl Superposition {
    pub fn total(&self, cell: usize) -> ComplexVector {
        &self.desired[cell] + &self.interference[cell]
    }
}

fn check_dims(channels: &ChannelSet, precoders: &Precoders, symbols: &SymbolBlock) -> Result<()> {
    let m = channels.antennas();
    let k = channels.devices();
    for cell in 0..NUM_CELLS {
        if channels.direct[cell].len() != k
            || channels.cross[cell].len() != k
            || precoders[cell].len() != k
            || symbols.symbols[cell].len() != k
        {
            return Err(Error::SizeMismatch(format!(
                "cell {cell}: device counts differ between channels, precoders and symbols"
            )));
        }
        for dev in 0..k {
            let w = &precoders[cell][dev];
            let x = &symbols.symbols[cell][dev];
            if channels.direct[cell][dev].shape() != (m, m)
                || channels.cross[cell][dev].shape() != (m, m)
                || w.nrows() != m
                || w.ncols() != x.len()
            {
                return Err(Error::SizeMismatch(format!(
                    "device ({dev}, {cell}): precoder {:?} vs symbol length {}",
                    w.shape(),
                    x.len()
                )));
            }
        }
    }
    Ok(())
}

/// Noiseless superposition `sum_k H W x` (own cell) and `sum_k G W x` (other cell).
pub fn superpose(
    channels: &ChannelSet,
    precoders: &Precoders,
    symbols: &SymbolBlock,
) -> Result<Superposition> {
    check_dims(channels, precoders, symbols)?;
    let m = channels.antennas();
    let mut desired: [ComplexVector; NUM_CELLS] = [ComplexVector::zeros(m), ComplexVector::zeros(m)];
    let mut interference = desired.clone();
    for cell in 0..NUM_CELLS {
        for dev in 0..channels.devices() {
            let tx = &precoders[cell][dev] * &symbols.symbols[cell][dev];
            desired[cell] += &channels.direct[cell][dev] * &tx;
            interference[other(cell)] += &channels.cross[cell][dev] * &tx;
        }
    }
    Ok(Superposition {
        desired,
        interference,
    })
}

/// CN(0, I) vector of length `m`.
pub fn unit_noise<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexVector {
    gaussian_matrix(m, 1, rng).column(0).into_owned()
}

/// Received vectors at both APs with i.i.d. CN(0, noise_std^2) noise.
pub fn receive<R: Rng + ?Sized>(
    channels: &ChannelSet,
    precoders: &Precoders,
    symbols: &SymbolBlock,
    noise_std: f64,
    rng: &mut R,
) -> Result<[ComplexVector; NUM_CELLS]> {
    if !(noise_std >= 0.0) {
        return Err(Error::Domain(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let sup = superpose(channels, precoders, symbols)?;
    let m = channels.antennas();
    let mut out = [sup.total(0), sup.total(1)];
    if noise_std > 0.0 {
        for y in out.iter_mut() {
            *y += unit_noise(m, rng) * Complex64::from(noise_std);
        }
    }
    Ok(out)
}
