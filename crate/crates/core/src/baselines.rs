//! Reference points for the scheme: closed-form array sizes and efficiencies for
//! conventional two-cell interference alignment, the partition-optimality search,
//! and the two simulated baselines (no interference management, and a genie
//! without cross-cell channels).

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{right_inverse, ComplexMatrix};
use crate::system::{partition, ChannelSet};

/// Exact efficiency value.
pub type Rational = Ratio<u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyScheme {
    ConventionalIa,
    Sia,
}

impl fmt::Display for EfficiencyScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EfficiencyScheme::ConventionalIa => "conventional_ia",
            EfficiencyScheme::Sia => "sia",
        })
    }
}

/// Functional values per cell per symbol duration, normalized by the array size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EfficiencyReport {
    pub scheme: EfficiencyScheme,
    pub antennas: u64,
    pub devices: u64,
    /// N_pu for conventional IA (streams per user that M antennas can carry),
    /// N_ac for SIA.
    pub streams: u64,
    pub efficiency: Rational,
}

/// Array size that conventional two-cell IA needs for `n_pu` streams per user
/// and `devices` users per cell: `n_pu (K + 1)`.
pub fn conventional_ia_array_size(n_pu: u64, devices: u64) -> u64 {
    n_pu * (devices + 1)
}

/// Array size that SIA needs for `n_ac` AirComp streams; no dependence on K.
pub fn sia_array_size(n_ac: u64) -> u64 {
    2 * n_ac
}

pub fn communication_efficiency(
    scheme: EfficiencyScheme,
    antennas: u64,
    devices: u64,
) -> Result<EfficiencyReport> {
    if antennas == 0 || devices == 0 {
        return Err(Error::Config("M and K must be positive".into()));
    }
    let (streams, efficiency) = match scheme {
        EfficiencyScheme::ConventionalIa => (antennas / (devices + 1), Ratio::new(1, devices + 1)),
        EfficiencyScheme::Sia => {
            if antennas < 2 {
                return Err(Error::Config(format!("M={antennas} yields zero AirComp DoF")));
            }
            let n_ac = partition(antennas as usize).n_ac as u64;
            (n_ac, Ratio::new(n_ac, antennas))
        }
    };
    Ok(EfficiencyReport {
        scheme,
        antennas,
        devices,
        streams,
        efficiency,
    })
}

/// Outcome of the brute-force split search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSearch {
    pub signal_dim: usize,
    pub interference_dim: usize,
    /// max over splits of min(signal_dim, interference_dim)
    pub dof: usize,
    /// Whether the argmax is the balanced split (up to swap).
    pub balanced: bool,
}

/// Enumerates every split `M_1 + M_2 = M` and keeps the first one maximizing
/// `min(M_1, M_2)`.
pub fn optimal_partition_search(antennas: usize) -> Result<PartitionSearch> {
    if antennas < 2 {
        return Err(Error::Config(format!(
            "partition search needs M >= 2, got {antennas}"
        )));
    }
    let mut best = (0, 0, 0);
    for m1 in 1..antennas {
        let m2 = antennas - m1;
        let dof = m1.min(m2);
        if dof > best.2 {
            best = (m1, m2, dof);
        }
    }
    let p = partition(antennas);
    let (m1, m2, dof) = best;
    let balanced = (m1, m2) == (p.n_ac, p.n_prime) || (m2, m1) == (p.n_ac, p.n_prime);
    Ok(PartitionSearch {
        signal_dim: m1,
        interference_dim: m2,
        dof,
        balanced,
    })
}

/// Signal and interference subspace dimensions of conventional IA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConventionalDimensions {
    pub signal: Rational,
    pub interference: Rational,
    /// False when `K + 1` does not divide `M`.
    pub integral: bool,
}

pub fn conventional_partition_dimensions(antennas: u64, devices: u64) -> ConventionalDimensions {
    let signal = Ratio::new(devices * antennas, devices + 1);
    let interference = Ratio::new(antennas, devices + 1);
    ConventionalDimensions {
        signal,
        interference,
        integral: signal.is_integer() && interference.is_integer(),
    }
}

/// Signal alignment toward the home AP only: `W = (A_i H_{k,i})^+`.
pub fn no_ia_precoder(
    dev: usize,
    cell: usize,
    channels: &ChannelSet,
    beamformer: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let h = channels
        .direct
        .get(cell)
        .and_then(|c| c.get(dev))
        .ok_or_else(|| Error::SizeMismatch(format!("no device ({dev}, {cell})")))?;
    right_inverse(&(beamformer * h))
}

/// Channels for the interference-free genie reference.
pub fn genie_channels(channels: &ChannelSet) -> ChannelSet {
    channels.without_cross()
}
