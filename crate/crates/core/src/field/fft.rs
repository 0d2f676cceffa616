//! Three-dimensional complex FFT on a row-major `n1 × n2 × n3` array.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

pub(crate) struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    scratch_len: usize,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("dims", &self.dims).finish()
    }
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft(n, FftDirection::Forward));
        let inverse = dims.map(|n| planner.plan_fft(n, FftDirection::Inverse));
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Fft3 {
            dims,
            forward,
            inverse,
            scratch_len,
        }
    }

    /// Unnormalized forward transform, `exp(-2πi jk/N)` kernel.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform, `exp(+2πi jk/N)` kernel.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [n1, n2, n3] = self.dims;
        assert_eq!(data.len(), n1 * n2 * n3);
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = vec![zero; self.scratch_len];

        // Fastest axis: lines are contiguous.
        plans[2].process_with_scratch(data, &mut scratch);

        // Middle axis: transpose each n2 × n3 slab.
        let slab = n2 * n3;
        let mut lines = vec![zero; slab];
        for block in data.chunks_exact_mut(slab) {
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    lines[i3 * n2 + i2] = block[i2 * n3 + i3];
                }
            }
            plans[1].process_with_scratch(&mut lines, &mut scratch);
            for i2 in 0..n2 {
                for i3 in 0..n3 {
                    block[i2 * n3 + i3] = lines[i3 * n2 + i2];
                }
            }
        }

        // Slowest axis: full transpose to n1-contiguous lines.
        let mut cols = vec![zero; data.len()];
        for i1 in 0..n1 {
            for j in 0..slab {
                cols[j * n1 + i1] = data[i1 * slab + j];
            }
        }
        plans[0].process_with_scratch(&mut cols, &mut scratch);
        for i1 in 0..n1 {
            for j in 0..slab {
                data[i1 * slab + j] = cols[j * n1 + i1];
            }
        }
    }
}
