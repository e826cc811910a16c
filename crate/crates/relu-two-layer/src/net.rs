use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ReluError;

/// `x -> W g(V x - b)` with `g = max(0, .)` and a bias that is never trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NetJson", try_from = "NetJson")]
pub struct ReluTwoLayerNet {
    w: DMatrix<f64>,
    v: DMatrix<f64>,
    b: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    w: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    b: Vec<f64>,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], cols_if_empty: usize) -> Result<DMatrix<f64>, ReluError> {
    let cols = rows.first().map_or(cols_if_empty, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(ReluError::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl From<ReluTwoLayerNet> for NetJson {
    fn from(net: ReluTwoLayerNet) -> Self {
        Self {
            w: to_rows(&net.w),
            v: to_rows(&net.v),
            b: net.b.iter().copied().collect(),
        }
    }
}

impl TryFrom<NetJson> for ReluTwoLayerNet {
    type Error = ReluError;

    fn try_from(j: NetJson) -> Result<Self, Self::Error> {
        let w = from_rows(&j.w, j.b.len())?;
        let v = from_rows(&j.v, 0)?;
        ReluTwoLayerNet::new(w, v, DVector::from_vec(j.b))
    }
}

impl ReluTwoLayerNet {
    /// `w` is `m x r`, `v` is `r x n`, `b` has length `r`.
    pub fn new(w: DMatrix<f64>, v: DMatrix<f64>, b: DVector<f64>) -> Result<Self, ReluError> {
        let r = b.len();
        if w.ncols() != r {
            return Err(ReluError::ShapeMismatch {
                what: "W",
                got: w.shape(),
                expected: (w.nrows(), r),
            });
        }
        if v.nrows() != r {
            return Err(ReluError::ShapeMismatch {
                what: "V",
                got: v.shape(),
                expected: (r, v.ncols()),
            });
        }
        for (m, name) in [(&w, "W"), (&v, "V")] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(ReluError::NonFinite(name));
            }
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(ReluError::NonFinite("b"));
        }
        Ok(Self { w, v, b })
    }

    /// Every entry of `W`, `V` and `b` drawn from the standard normal.
    pub fn random<R: Rng + ?Sized>(m: usize, r: usize, n: usize, rng: &mut R) -> Self {
        let mut draw = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = draw(m, r);
        let v = draw(r, n);
        let b = draw(r, 1).column(0).into_owned();
        Self { w, v, b }
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn width(&self) -> usize {
        self.b.len()
    }

    pub fn input_dim(&self) -> usize {
        self.v.ncols()
    }

    /// Same bias, new trainable weights.
    pub fn with_weights(&self, w: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self, ReluError> {
        if w.shape() != self.w.shape() || v.shape() != self.v.shape() {
            return Err(ReluError::ShapeMismatch {
                what: "weights",
                got: (w.len(), v.len()),
                expected: (self.w.len(), self.v.len()),
            });
        }
        Self::new(w, v, self.b.clone())
    }

    /// `W` then `V`, each column-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.w.iter().chain(self.v.iter()).copied().collect()
    }

    pub fn from_flat(&self, flat: &[f64]) -> Result<Self, ReluError> {
        let split = self.w.len();
        if flat.len() != split + self.v.len() {
            return Err(ReluError::InvalidArgument(format!(
                "flat vector has length {}, expected {}",
                flat.len(),
                split + self.v.len()
            )));
        }
        let w = DMatrix::from_column_slice(self.w.nrows(), self.w.ncols(), &flat[..split]);
        let v = DMatrix::from_column_slice(self.v.nrows(), self.v.ncols(), &flat[split..]);
        self.with_weights(w, v)
    }

    /// Hidden pre-activations `V x - b`.
    pub fn preactivation(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.v * x - &self.b
    }

    /// Units with strictly positive pre-activation; a unit at exactly zero is off.
    pub fn active_units(&self, x: &DVector<f64>) -> Vec<bool> {
        self.preactivation(x).iter().map(|&z| z > 0.0).collect()
    }

    pub fn forward(&self, x: &DVector<f64>) -> Result<DVector<f64>, ReluError> {
        if x.len() != self.input_dim() {
            return Err(ReluError::ShapeMismatch {
                what: "input",
                got: (x.len(), 1),
                expected: (self.input_dim(), 1),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ReluError::NonFinite("input"));
        }
        let h = self.preactivation(x).map(|z| z.max(0.0));
        Ok(&self.w * h)
    }

    fn check_data(&self, data: &ReluDataset) -> Result<(), ReluError> {
        if data.inputs.nrows() != self.input_dim() {
            return Err(ReluError::ShapeMismatch {
                what: "dataset inputs",
                got: data.inputs.shape(),
                expected: (self.input_dim(), data.len()),
            });
        }
        if data.targets.nrows() != self.output_dim() {
            return Err(ReluError::ShapeMismatch {
                what: "dataset targets",
                got: data.targets.shape(),
                expected: (self.output_dim(), data.len()),
            });
        }
        Ok(())
    }

    /// Hidden activations and the activation mask for every sample, as `r x N`.
    fn hidden(&self, data: &ReluDataset) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut pre = &self.v * &data.inputs;
        for mut col in pre.column_iter_mut() {
            col -= &self.b;
        }
        let mask = pre.map(|z| if z > 0.0 { 1.0 } else { 0.0 });
        let h = pre.component_mul(&mask);
        (h, mask)
    }

    /// Outputs for every sample, `m x N`.
    pub fn predict(&self, data: &ReluDataset) -> Result<DMatrix<f64>, ReluError> {
        self.check_data(data)?;
        Ok(&self.w * self.hidden(data).0)
    }

    /// `sum_i |f_hat(x_i) - f(x_i)|^2 / 2`.
    pub fn loss(&self, data: &ReluDataset) -> Result<f64, ReluError> {
        Ok(0.5 * (self.predict(data)? - &data.targets).norm_squared())
    }

    /// Loss and the gradients `(dL/dW, dL/dV)`:
    /// `dW = sum_i e_i h_i^T`, `dV = sum_i G_i W^T e_i x_i^T`.
    pub fn loss_and_grads(&self, data: &ReluDataset) -> Result<(f64, DMatrix<f64>, DMatrix<f64>), ReluError> {
        self.check_data(data)?;
        let (m, r, n) = (self.output_dim(), self.width(), self.input_dim());
        let mut dw = DMatrix::zeros(m, r);
        let mut dv = DMatrix::zeros(r, n);
        let mut h = vec![0.0; r];
        let mut e = vec![0.0; m];
        let mut loss = 0.0;
        // Per-sample loops over column-major slices: the shapes here are far
        // too thin for blocked matrix products to pay off.
        let (ws, vs, bs) = (self.w.as_slice(), self.v.as_slice(), self.b.as_slice());
        let xs = data.inputs.as_slice();
        let ys = data.targets.as_slice();
        let (dws, dvs) = (dw.as_mut_slice(), dv.as_mut_slice());
        for i in 0..data.len() {
            let x = &xs[i * n..(i + 1) * n];
            let y = &ys[i * m..(i + 1) * m];
            for (j, hj) in h.iter_mut().enumerate() {
                let mut z = -bs[j];
                for (k, xk) in x.iter().enumerate() {
                    z += vs[j + k * r] * xk;
                }
                *hj = if z > 0.0 { z } else { 0.0 };
            }
            for (l, el) in e.iter_mut().enumerate() {
                let mut out = -y[l];
                for (j, hj) in h.iter().enumerate() {
                    out += ws[l + j * m] * hj;
                }
                *el = out;
                loss += out * out;
            }
            for (j, &hj) in h.iter().enumerate() {
                if hj > 0.0 {
                    let mut back = 0.0;
                    for (l, el) in e.iter().enumerate() {
                        dws[l + j * m] += el * hj;
                        back += ws[l + j * m] * el;
                    }
                    for (k, xk) in x.iter().enumerate() {
                        dvs[j + k * r] += back * xk;
                    }
                }
            }
        }
        Ok((0.5 * loss, dw, dv))
    }

    pub fn grads(&self, data: &ReluDataset) -> Result<(DMatrix<f64>, DMatrix<f64>), ReluError> {
        let (_, dw, dv) = self.loss_and_grads(data)?;
        Ok((dw, dv))
    }

    pub fn grad_norm(&self, data: &ReluDataset) -> Result<f64, ReluError> {
        let (dw, dv) = self.grads(data)?;
        Ok((dw.norm_squared() + dv.norm_squared()).sqrt())
    }

    /// One simultaneous step on `W` and `V`; `b` is carried over untouched.
    pub fn gd_step(&self, data: &ReluDataset, delta: f64) -> Result<Self, ReluError> {
        let (dw, dv) = self.grads(data)?;
        Ok(Self {
            w: &self.w - dw * delta,
            v: &self.v - dv * delta,
            b: self.b.clone(),
        })
    }
}

/// Samples as columns: inputs `n x N`, targets `m x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluDataset {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

impl ReluDataset {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self, ReluError> {
        if inputs.ncols() == 0 {
            return Err(ReluError::EmptyDataset);
        }
        if targets.ncols() != inputs.ncols() {
            return Err(ReluError::ShapeMismatch {
                what: "dataset",
                got: (targets.nrows(), targets.ncols()),
                expected: (targets.nrows(), inputs.ncols()),
            });
        }
        if inputs.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(ReluError::NonFinite("dataset"));
        }
        Ok(Self { inputs, targets })
    }

    pub fn from_samples(inputs: &[DVector<f64>], targets: &[DVector<f64>]) -> Result<Self, ReluError> {
        if inputs.is_empty() {
            return Err(ReluError::EmptyDataset);
        }
        if inputs.len() != targets.len() {
            return Err(ReluError::InvalidArgument(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let (n, m) = (inputs[0].len(), targets[0].len());
        if inputs.iter().any(|x| x.len() != n) || targets.iter().any(|y| y.len() != m) {
            return Err(ReluError::InvalidArgument("samples differ in dimension".into()));
        }
        Self::new(
            DMatrix::from_fn(n, inputs.len(), |i, j| inputs[j][i]),
            DMatrix::from_fn(m, targets.len(), |i, j| targets[j][i]),
        )
    }

    /// Scalar inputs and outputs.
    pub fn scalar(xs: &[f64], ys: &[f64]) -> Result<Self, ReluError> {
        if xs.len() != ys.len() {
            return Err(ReluError::InvalidArgument(format!(
                "{} inputs but {} targets",
                xs.len(),
                ys.len()
            )));
        }
        Self::new(
            DMatrix::from_row_slice(1, xs.len(), xs),
            DMatrix::from_row_slice(1, ys.len(), ys),
        )
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Whether a trained network meets `max_i |x_i| |f_hat(x_i)| <= 1 / delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thm4Report {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub argmax_index: usize,
}

/// Output-size certificate that every converged solution at step `delta` must meet.
pub fn thm4_check(net: &ReluTwoLayerNet, data: &ReluDataset, delta: f64) -> Result<Thm4Report, ReluError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ReluError::InvalidArgument(format!(
            "step size must be positive, got {delta}"
        )));
    }
    let out = net.predict(data)?;
    let (mut lhs, mut argmax_index) = (0.0f64, 0);
    for i in 0..data.len() {
        let val = data.inputs.column(i).norm() * out.column(i).norm();
        if val > lhs {
            lhs = val;
            argmax_index = i;
        }
    }
    let rhs = 1.0 / delta;
    Ok(Thm4Report {
        lhs,
        rhs,
        satisfied: lhs <= rhs,
        argmax_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_net(w: f64, v: f64, b: f64) -> ReluTwoLayerNet {
        ReluTwoLayerNet::new(
            DMatrix::from_element(1, 1, w),
            DMatrix::from_element(1, 1, v),
            DVector::from_element(1, b),
        )
        .unwrap()
    }

    #[test]
    fn relu_gates_negative_inputs() {
        let net = scalar_net(2.0, 1.0, 0.0);
        assert_eq!(net.forward(&DVector::from_element(1, 3.0)).unwrap()[0], 6.0);
        assert_eq!(net.forward(&DVector::from_element(1, -3.0)).unwrap()[0], 0.0);
    }

    #[test]
    fn zero_output_layer_gives_zero() {
        let net = ReluTwoLayerNet::new(
            DMatrix::zeros(2, 3),
            DMatrix::from_element(3, 2, 1.5),
            DVector::zeros(3),
        )
        .unwrap();
        let y = net.forward(&DVector::from_vec(vec![0.4, -2.0])).unwrap();
        assert_eq!(y, DVector::zeros(2));
    }

    #[test]
    fn hand_expanded_scalar_gradients() {
        let net = scalar_net(1.0, 1.0, 0.0);
        let data = ReluDataset::scalar(&[2.0], &[0.0]).unwrap();
        let (dw, dv) = net.grads(&data).unwrap();
        assert_eq!(dw[(0, 0)], 4.0);
        assert_eq!(dv[(0, 0)], 4.0);
        let next = net.gd_step(&data, 0.1).unwrap();
        assert!((next.w()[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((next.v()[(0, 0)] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn unit_at_exactly_zero_is_inactive() {
        let net = scalar_net(1.0, 1.0, 2.0);
        assert_eq!(net.active_units(&DVector::from_element(1, 2.0)), vec![false]);
        let data = ReluDataset::scalar(&[2.0], &[1.0]).unwrap();
        let (dw, dv) = net.grads(&data).unwrap();
        assert_eq!((dw[(0, 0)], dv[(0, 0)]), (0.0, 0.0));
    }

    #[test]
    fn fitted_targets_give_zero_gradient() {
        let net = ReluTwoLayerNet::new(
            DMatrix::from_row_slice(1, 2, &[1.0, -0.5]),
            DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
            DVector::from_vec(vec![0.1, -0.3]),
        )
        .unwrap();
        let xs = [0.2, 0.5, 1.0];
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| net.forward(&DVector::from_element(1, x)).unwrap()[0])
            .collect();
        let data = ReluDataset::scalar(&xs, &ys).unwrap();
        assert_eq!(net.grad_norm(&data).unwrap(), 0.0);
        assert_eq!(net.gd_step(&data, 0.3).unwrap(), net);
    }

    #[test]
    fn thm4_trivial_cases() {
        let net = ReluTwoLayerNet::new(
            DMatrix::zeros(1, 2),
            DMatrix::from_element(2, 1, 1.0),
            DVector::zeros(2),
        )
        .unwrap();
        let data = ReluDataset::scalar(&[1.0, 5.0], &[3.0, 4.0]).unwrap();
        let rep = thm4_check(&net, &data, 1e-3).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!((rep.rhs - 1000.0).abs() < 1e-9);
        assert!(rep.satisfied);
    }

    #[test]
    fn flat_round_trip_and_json() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let net = ReluTwoLayerNet::random(2, 5, 3, &mut rng);
        assert_eq!(net.from_flat(&net.to_flat()).unwrap(), net);
        let text = serde_json::to_string(&net).unwrap();
        let back: ReluTwoLayerNet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ReluTwoLayerNet::new(DMatrix::zeros(1, 3), DMatrix::zeros(2, 1), DVector::zeros(2)).is_err());
        let net = ReluTwoLayerNet::new(DMatrix::zeros(1, 2), DMatrix::zeros(2, 1), DVector::zeros(2)).unwrap();
        assert!(net.forward(&DVector::zeros(2)).is_err());
        assert!(ReluDataset::scalar(&[], &[]).is_err());
    }
}
