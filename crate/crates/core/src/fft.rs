//! N-dimensional complex FFT over row-major data, one axis at a time.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Plan>);

static PLANS: LazyLock<Mutex<PlanCache>> = LazyLock::new(|| Mutex::new((FftPlanner::new(), HashMap::new())));

fn plan(len: usize, inverse: bool) -> Plan {
    let mut guard = PLANS.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, cache) = &mut *guard;
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
            planner.plan_fft(len, dir)
        })
        .clone()
}

/// Lines per rayon task; fixed so the work split does not depend on the pool size.
const LINES_PER_TASK: usize = 64;

fn transform_lines(buf: &mut [Complex64], len: usize, fft: &Plan) {
    buf.par_chunks_mut(len * LINES_PER_TASK).for_each(|chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// In-place unnormalized transform (forward: `e^{-2 pi i k x / n}`). The
/// inverse divides by the total sample count.
pub(crate) fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    debug_assert_eq!(total, data.len());
    let mut stride = 1;
    let mut buffer = Vec::new();
    for axis in (0..dims.len()).rev() {
        let len = dims[axis];
        let fft = plan(len, inverse);
        if stride == 1 {
            transform_lines(data, len, &fft);
        } else {
            let block = len * stride;
            buffer.resize(total, Complex64::new(0.0, 0.0));
            // gather each strided line into a contiguous row
            buffer.par_chunks_mut(len).enumerate().for_each(|(line, row)| {
                let base = (line / stride) * block + line % stride;
                row.iter_mut().enumerate().for_each(|(i, r)| *r = data[base + i * stride]);
            });
            transform_lines(&mut buffer, len, &fft);
            data.par_chunks_mut(block).enumerate().for_each(|(outer, out)| {
                for inner in 0..stride {
                    let row = &buffer[(outer * stride + inner) * len..][..len];
                    row.iter().enumerate().for_each(|(i, &v)| out[i * stride + inner] = v);
                }
            });
        }
        stride *= len;
    }
    if inverse {
        let scale = 1.0 / total as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}
