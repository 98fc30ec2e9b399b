//! Nomographic pre- and post-processing around the over-the-air sum.
//!
//! Data ride on the real parts of the transmit symbols; imaginary parts are zero.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::{ComplexVector, FunctionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    /// Devices contributing to the sum.
    pub devices: usize,
}

impl FunctionSpec {
    pub fn new(kind: FunctionKind, devices: usize) -> Self {
        FunctionSpec { kind, devices }
    }
}

/// Maps one device's data vector to its transmit symbols.
pub fn preprocess(spec: &FunctionSpec, data: &[f64]) -> Result<ComplexVector> {
    if let Some(bad) = data.iter().find(|d| !d.is_finite()) {
        return Err(Error::Domain(format!("non-finite input {bad}")));
    }
    let mapped: Vec<Complex64> = match spec.kind {
        FunctionKind::Sum | FunctionKind::Mean => {
            data.iter().map(|&d| Complex64::new(d, 0.0)).collect()
        }
        FunctionKind::Geomean => data
            .iter()
            .map(|&d| {
                if d > 0.0 {
                    Ok(Complex64::new(d.ln(), 0.0))
                } else {
                    Err(Error::Domain(format!(
                        "geometric mean needs positive inputs, got {d}"
                    )))
                }
            })
            .collect::<Result<_>>()?,
    };
    Ok(ComplexVector::from_vec(mapped))
}

/// Maps the received aggregate back to function values.
pub fn postprocess(spec: &FunctionSpec, aggregate: &ComplexVector) -> Vec<f64> {
    let k = spec.devices as f64;
    aggregate
        .iter()
        .map(|z| match spec.kind {
            FunctionKind::Sum => z.re,
            FunctionKind::Mean => z.re / k,
            FunctionKind::Geomean => (z.re / k).exp(),
        })
        .collect()
}

/// The target function evaluated directly on the devices' data, per stream.
pub fn direct(kind: FunctionKind, data: &[Vec<f64>]) -> Vec<f64> {
    let k = data.len() as f64;
    let n = data.first().map_or(0, Vec::len);
    (0..n)
        .map(|s| {
            let column = data.iter().map(|d| d[s]);
            match kind {
                FunctionKind::Sum => column.sum(),
                FunctionKind::Mean => column.sum::<f64>() / k,
                FunctionKind::Geomean => column.product::<f64>().powf(1.0 / k),
            }
        })
        .collect()
}
