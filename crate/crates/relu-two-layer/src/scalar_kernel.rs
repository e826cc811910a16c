use crate::{ReluDataset, ReluTwoLayerNet};

/// Loss and gradients for scalar-input, scalar-output data in `O(N + r log N)`.
///
/// With the inputs sorted, each unit is active on a contiguous run of samples,
/// so the output is `A_i x_i - B_i` with `A`, `B` piecewise constant, and each
/// unit's gradient only needs range sums of `e_i` and `e_i x_i`.
#[derive(Debug, Clone)]
pub struct ScalarKernel {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ScalarKernel {
    /// `None` unless both inputs and targets are one-dimensional.
    pub fn new(data: &ReluDataset) -> Option<Self> {
        if data.inputs.nrows() != 1 || data.targets.nrows() != 1 {
            return None;
        }
        let mut pairs: Vec<(f64, f64)> = data.inputs.iter().copied().zip(data.targets.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (xs, ys) = pairs.into_iter().unzip();
        Some(Self { xs, ys })
    }

    /// Sorted-sample range `[start, end)` on which `v x - b > 0`.
    fn active_range(&self, v: f64, b: f64) -> (usize, usize) {
        let n = self.xs.len();
        if v > 0.0 {
            (self.xs.partition_point(|&x| -b + v * x <= 0.0), n)
        } else if v < 0.0 {
            (0, self.xs.partition_point(|&x| -b + v * x > 0.0))
        } else if -b > 0.0 {
            (0, n)
        } else {
            (0, 0)
        }
    }

    /// Writes `dL/dW` and `dL/dV` (each of length `r`) and returns the loss.
    pub fn loss_and_grads(&self, net: &ReluTwoLayerNet, dw: &mut [f64], dv: &mut [f64]) -> f64 {
        let (w, v, b) = (net.w().as_slice(), net.v().as_slice(), net.b().as_slice());
        let n = self.xs.len();
        let ranges: Vec<(usize, usize)> = v.iter().zip(b).map(|(&vj, &bj)| self.active_range(vj, bj)).collect();

        let mut slope = vec![0.0; n + 1];
        let mut offset = vec![0.0; n + 1];
        for (j, &(s, t)) in ranges.iter().enumerate() {
            if s < t {
                slope[s] += w[j] * v[j];
                slope[t] -= w[j] * v[j];
                offset[s] += w[j] * b[j];
                offset[t] -= w[j] * b[j];
            }
        }

        let mut sum_e = vec![0.0; n + 1];
        let mut sum_ex = vec![0.0; n + 1];
        let (mut a, mut c, mut loss) = (0.0, 0.0, 0.0);
        for i in 0..n {
            a += slope[i];
            c += offset[i];
            let e = a * self.xs[i] - c - self.ys[i];
            loss += e * e;
            sum_e[i + 1] = sum_e[i] + e;
            sum_ex[i + 1] = sum_ex[i] + e * self.xs[i];
        }

        for (j, &(s, t)) in ranges.iter().enumerate() {
            let (se, sex) = (sum_e[t] - sum_e[s], sum_ex[t] - sum_ex[s]);
            dw[j] = v[j] * sex - b[j] * se;
            dv[j] = w[j] * sex;
        }
        0.5 * loss
    }
}
