//! Simultaneous signal-and-interference alignment.
//!
//! Each device precodes with `W = G^-1 B (A H G^-1 B)^+`: the first two factors
//! steer everything the device sends toward the neighbouring AP into the fixed
//! subspace `range(B_i)`, and the last one inverts the effective channel seen
//! through the home AP's aggregation beamformer so that all devices of a cell
//! add up coherently. Each AP then projects onto the left null space of the
//! other cell's reference matrix.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    eye, inverse, left_null_space_basis, numerical_rank, random_orthonormal_columns,
    right_inverse, ComplexMatrix, RANK_TOL,
};
use crate::system::{
    partition, ChannelSet, ComplexVector, Precoders, ReferenceMode, NUM_CELLS,
};

/// The three precoder factors of one device.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderParts {
    /// Inverse of the cross channel (M x M).
    pub ia_inverse: ComplexMatrix,
    /// Signal-alignment factor (N' x N_ac).
    pub sa: ComplexMatrix,
    /// Cascaded precoder (M x N_ac).
    pub full: ComplexMatrix,
}

/// All matrices of the scheme for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SiaMatrices {
    /// `B_i`, M x N', one per cell.
    pub reference: [ComplexMatrix; NUM_CELLS],
    /// `A_i`, N_ac x M, one per AP.
    pub beamformers: [ComplexMatrix; NUM_CELLS],
    /// Per-device factors, indexed `[cell][device]`.
    pub parts: [Vec<PrecoderParts>; NUM_CELLS],
}

impl SiaMatrices {
    /// The cascaded precoders `W[cell][device]`.
    pub fn precoders(&self) -> Precoders {
        self.parts
            .clone()
            .map(|cell| cell.into_iter().map(|p| p.full).collect())
    }
}

/// Reference matrices `B_1`, `B_2` with orthonormal columns.
pub fn build_reference_matrices<R: Rng + ?Sized>(
    antennas: usize,
    n_prime: usize,
    mode: ReferenceMode,
    rng: &mut R,
) -> [ComplexMatrix; NUM_CELLS] {
    match mode {
        ReferenceMode::Random => [
            random_orthonormal_columns(antennas, n_prime, rng),
            random_orthonormal_columns(antennas, n_prime, rng),
        ],
        ReferenceMode::Fixed => {
            let id = eye(antennas);
            [
                id.columns(0, n_prime).into_owned(),
                id.columns(antennas - n_prime, n_prime).into_owned(),
            ]
        }
    }
}

/// `A_1 = null(B_2)` and `A_2 = null(B_1)`, each with orthonormal rows.
pub fn build_aggregation_beamformers(
    reference: &[ComplexMatrix; NUM_CELLS],
) -> Result<[ComplexMatrix; NUM_CELLS]> {
    Ok([
        left_null_space_basis(&reference[1])?,
        left_null_space_basis(&reference[0])?,
    ])
}

/// Precoder of device `dev` in `cell`, given that cell's beamformer and reference matrix.
pub fn build_precoder(
    dev: usize,
    cell: usize,
    channels: &ChannelSet,
    beamformer: &ComplexMatrix,
    reference: &ComplexMatrix,
) -> Result<PrecoderParts> {
    let h = channels
        .direct
        .get(cell)
        .and_then(|c| c.get(dev))
        .ok_or_else(|| Error::SizeMismatch(format!("no device ({dev}, {cell})")))?;
    let g = &channels.cross[cell][dev];
    let ia_inverse = inverse(g)?;
    let steered = &ia_inverse * reference;
    let effective = beamformer * h * &steered;
    let sa = right_inverse(&effective)?;
    let full = steered * &sa;
    Ok(PrecoderParts {
        ia_inverse,
        sa,
        full,
    })
}

/// Builds every matrix of the scheme on top of the given reference matrices.
pub fn build_sia(
    channels: &ChannelSet,
    reference: [ComplexMatrix; NUM_CELLS],
) -> Result<SiaMatrices> {
    let beamformers = build_aggregation_beamformers(&reference)?;
    let mut parts: [Vec<PrecoderParts>; NUM_CELLS] = Default::default();
    for (cell, cell_parts) in parts.iter_mut().enumerate() {
        for dev in 0..channels.devices() {
            cell_parts.push(build_precoder(
                dev,
                cell,
                channels,
                &beamformers[cell],
                &reference[cell],
            )?);
        }
    }
    Ok(SiaMatrices {
        reference,
        beamformers,
        parts,
    })
}

/// Rank of `[G_1 W_1 | ... | G_K W_K]` for the devices of `cell`, i.e. the
/// dimension their interference occupies at the neighbouring AP.
///
/// Columns are normalized first; this leaves the rank unchanged but keeps a
/// single large precoder from masking the others under the relative tolerance.
pub fn aligned_rank(cell: usize, channels: &ChannelSet, precoders: &Precoders) -> usize {
    let m = channels.antennas();
    let blocks: Vec<ComplexMatrix> = channels.cross[cell]
        .iter()
        .zip(&precoders[cell])
        .map(|(g, w)| g * w)
        .collect();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut stack = ComplexMatrix::zeros(m, cols);
    let mut at = 0;
    for b in &blocks {
        stack.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    for mut col in stack.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col.unscale_mut(n);
        }
    }
    numerical_rank(&stack, RANK_TOL)
}

/// [`aligned_rank`] for the scheme's own precoders.
pub fn aligned_interference_dimension(
    cell: usize,
    channels: &ChannelSet,
    sia: &SiaMatrices,
) -> usize {
    aligned_rank(cell, channels, &sia.precoders())
}

/// Expected aligned dimension for generic channels: `min(K N_ac, N')`.
pub fn expected_aligned_dimension(antennas: usize, devices: usize) -> usize {
    let p = partition(antennas);
    (devices * p.n_ac).min(p.n_prime)
}

/// Applies the aggregation beamformer: `y_hat = A y`.
pub fn recover(beamformer: &ComplexMatrix, received: &ComplexVector) -> Result<ComplexVector> {
    if beamformer.ncols() != received.len() {
        return Err(Error::SizeMismatch(format!(
            "beamformer has {} columns, received vector has {} entries",
            beamformer.ncols(),
            received.len()
        )));
    }
    Ok(beamformer * received)
}

/// Leakage of the other cell's interference through AP `cell`'s beamformer,
/// as an amplitude ratio `|A i| / |i|`.
pub fn nulling_ratio(beamformer: &ComplexMatrix, interference: &ComplexVector) -> f64 {
    let total = interference.norm();
    if total == 0.0 {
        0.0
    } else {
        (beamformer * interference).norm() / total
    }
}
