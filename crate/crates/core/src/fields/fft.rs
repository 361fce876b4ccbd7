use crate::C64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

/// In-place n-dimensional DFT over a row-major array with the given shape.
///
/// The forward direction uses `exp(-2 pi i jk/N)`; the inverse divides by the
/// total size so that `inverse(forward(x)) = x`.
pub fn fft_nd(data: &mut [C64], shape: &[usize], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len(), "shape does not match data length");
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = total;
    for &len in shape {
        stride /= len;
        let fft = planner.plan_fft(len, direction);
        transform_axis(data, len, stride, &fft);
    }
    if direction == FftDirection::Inverse {
        let s = 1.0 / total as f64;
        data.par_chunks_mut(4096).for_each(|c| c.iter_mut().for_each(|x| *x *= s));
    }
}

fn transform_axis(data: &mut [C64], len: usize, stride: usize, fft: &Arc<dyn Fft<f64>>) {
    let block = len * stride;
    if stride == 1 {
        data.par_chunks_mut(len.max(1) * lines_per_task(len)).for_each(|chunk| {
            let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
        return;
    }
    let run = |blk: &mut [C64]| {
        let mut tmp = vec![C64::default(); block];
        for k in 0..len {
            for i in 0..stride {
                tmp[i * len + k] = blk[k * stride + i];
            }
        }
        let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut tmp, &mut scratch);
        for k in 0..len {
            for i in 0..stride {
                blk[k * stride + i] = tmp[i * len + k];
            }
        }
    };
    if data.len() / block > 1 {
        data.par_chunks_mut(block).for_each(run);
    } else {
        transform_strided_parallel(data, len, stride, fft);
    }
}

fn lines_per_task(len: usize) -> usize {
    (16384 / len.max(1)).max(1)
}

fn transform_strided_parallel(data: &mut [C64], len: usize, stride: usize, fft: &Arc<dyn Fft<f64>>) {
    let cols = lines_per_task(len).max(8);
    let mut lines: Vec<C64> = vec![C64::default(); len * stride];
    lines
        .par_chunks_mut(len * cols)
        .enumerate()
        .for_each(|(c, chunk)| {
            let first = c * cols;
            for (li, line) in chunk.chunks_mut(len).enumerate() {
                let i = first + li;
                for k in 0..len {
                    line[k] = data[k * stride + i];
                }
            }
            let mut scratch = vec![C64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
    data.par_chunks_mut(stride).enumerate().for_each(|(k, row)| {
        for (i, x) in row.iter_mut().enumerate() {
            *x = lines[i * len + k];
        }
    });
}

/// One-dimensional transform of a single line.
pub fn fft_1d(data: &mut [C64], direction: FftDirection) {
    let n = data.len();
    fft_nd(data, &[n], direction);
}
