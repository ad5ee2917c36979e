//! 3D Fourier transforms and the ideal low-pass operator used to split
//! fields into frequency bands.
//!
//! The low-pass is a sharp spectral projection: every mode with any index
//! magnitude above the cutoff is zeroed, the rest pass unchanged. The high
//! band is the exact complement (`high = field - low`), so the two bands
//! always sum back to the original field. Ringing from the sharp cut is
//! inherent to this filter and intentionally left alone.

pub use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdf::SdfGrid;

/// Cutoff shape. Only the per-axis box cut is implemented: a mode
/// (kx, ky, kz) passes iff max(|kx|, |ky|, |kz|) <= cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterShape {
    Box,
}

/// Low-pass filter specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Largest retained mode index per axis.
    pub cutoff: usize,
    pub shape: FilterShape,
}

impl FilterSpec {
    pub fn new(cutoff: usize) -> FilterSpec {
        FilterSpec {
            cutoff,
            shape: FilterShape::Box,
        }
    }

    fn validate(&self, dims: [usize; 3]) -> Result<()> {
        let n = dims[0].min(dims[1]).min(dims[2]);
        if self.cutoff >= n / 2 {
            return Err(Error::InvalidConfig(format!(
                "cutoff {} must be below n/2 = {}",
                self.cutoff,
                n / 2
            )));
        }
        Ok(())
    }
}

/// Complex Fourier coefficients of a gridded field, standard DFT layout
/// (mode k at index k for k < n/2, index k + n otherwise), x-fastest.
#[derive(Debug, Clone)]
pub struct SpectralField {
    dims: [usize; 3],
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Signed mode index for array position `i` along an axis of length `n`.
    #[inline]
    pub fn mode_index(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    for n in dims {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "spectral dims must be powers of two, got {:?}",
                dims
            )));
        }
    }
    Ok(())
}

/// In-place FFT along each axis of an x-fastest complex volume.
fn transform(dims: [usize; 3], data: &mut [Complex64], inverse: bool) {
    let [nx, ny, nz] = dims;
    let mut planner = FftPlanner::new();

    // x: contiguous lanes
    let fft_x = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for lane in data.chunks_exact_mut(nx) {
        fft_x.process(lane);
    }

    // y: gather strided lanes through a scratch buffer
    let fft_y = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    let mut scratch = vec![Complex64::default(); ny.max(nz)];
    for z in 0..nz {
        for x in 0..nx {
            let base = x + nx * ny * z;
            for y in 0..ny {
                scratch[y] = data[base + nx * y];
            }
            fft_y.process(&mut scratch[..ny]);
            for y in 0..ny {
                data[base + nx * y] = scratch[y];
            }
        }
    }

    // z
    let fft_z = if inverse {
        planner.plan_fft_inverse(nz)
    } else {
        planner.plan_fft_forward(nz)
    };
    for y in 0..ny {
        for x in 0..nx {
            let base = x + nx * y;
            for z in 0..nz {
                scratch[z] = data[base + nx * ny * z];
            }
            fft_z.process(&mut scratch[..nz]);
            for z in 0..nz {
                data[base + nx * ny * z] = scratch[z];
            }
        }
    }
}

/// Forward 3D DFT of a grid (unnormalized, so Parseval reads
/// sum |x|^2 = (1/N) sum |X|^2).
pub fn fft3(grid: &SdfGrid) -> Result<SpectralField> {
    let dims = grid.dims();
    check_dims(dims)?;
    let mut coeffs: Vec<Complex64> = grid
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    transform(dims, &mut coeffs, false);
    Ok(SpectralField { dims, coeffs })
}

/// Inverse 3D DFT back to a real field. The imaginary residue must stay
/// below 1e-10 (it always does for Hermitian inputs); anything larger is
/// reported as corruption instead of being silently discarded.
pub fn ifft3(field: &SpectralField) -> Result<Vec<f64>> {
    let dims = field.dims;
    check_dims(dims)?;
    let mut data = field.coeffs.clone();
    transform(dims, &mut data, true);
    let scale = 1.0 / (dims[0] * dims[1] * dims[2]) as f64;
    let mut max_imag = 0.0f64;
    let values: Vec<f64> = data
        .iter()
        .map(|c| {
            max_imag = max_imag.max((c.im * scale).abs());
            c.re * scale
        })
        .collect();
    if max_imag >= 1e-10 {
        return Err(Error::NonFinite(format!(
            "inverse transform left imaginary residue {:.3e}",
            max_imag
        )));
    }
    Ok(values)
}

/// Zero every mode with any index magnitude above the cutoff, in place.
fn apply_box_cut(field: &mut SpectralField, cutoff: usize) {
    let [nx, ny, nz] = field.dims;
    let cut = cutoff as i64;
    for z in 0..nz {
        let kz = SpectralField::mode_index(z, nz).abs();
        for y in 0..ny {
            let ky = SpectralField::mode_index(y, ny).abs();
            let keep_yz = kz <= cut && ky <= cut;
            let base = nx * (y + ny * z);
            for x in 0..nx {
                let kx = SpectralField::mode_index(x, nx).abs();
                if !(keep_yz && kx <= cut) {
                    field.coeffs[base + x] = Complex64::default();
                }
            }
        }
    }
}

/// Ideal low-pass: forward transform, zero modes above the cutoff, inverse
/// transform. Grid geometry is preserved.
pub fn low_pass(grid: &SdfGrid, spec: FilterSpec) -> Result<SdfGrid> {
    spec.validate(grid.dims())?;
    let mut field = fft3(grid)?;
    apply_box_cut(&mut field, spec.cutoff);
    let values = ifft3(&field)?;
    grid.with_values(values)
}

/// Split a grid into complementary (low, high) frequency bands:
/// low = low_pass(grid), high = grid - low, so low + high == grid.
pub fn split_bands(grid: &SdfGrid, spec: FilterSpec) -> Result<(SdfGrid, SdfGrid)> {
    let low = low_pass(grid, spec)?;
    let high_values: Vec<f64> = grid
        .values()
        .iter()
        .zip(low.values())
        .map(|(g, l)| g - l)
        .collect();
    let high = grid.with_values(high_values)?;
    Ok((low, high))
}
