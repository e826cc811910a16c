use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use numlab_core::Objective;

use crate::{DeepLinearError, MatrixJson};

/// Layers `W_1, ..., W_L` with `W_j` of shape `n_j x n_{j-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NetJson", try_from = "NetJson")]
pub struct DeepLinearNet {
    layers: Vec<DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    layers: Vec<MatrixJson>,
}

impl From<DeepLinearNet> for NetJson {
    fn from(net: DeepLinearNet) -> Self {
        NetJson {
            layers: net.layers.iter().map(MatrixJson::from).collect(),
        }
    }
}

impl TryFrom<NetJson> for DeepLinearNet {
    type Error = DeepLinearError;

    fn try_from(j: NetJson) -> Result<Self, Self::Error> {
        let layers = j
            .layers
            .into_iter()
            .map(DMatrix::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        DeepLinearNet::new(layers)
    }
}

impl DeepLinearNet {
    pub fn new(layers: Vec<DMatrix<f64>>) -> Result<Self, DeepLinearError> {
        if layers.is_empty() {
            return Err(DeepLinearError::EmptyNetwork);
        }
        for j in 1..layers.len() {
            let (rows, cols) = layers[j].shape();
            let expected_cols = layers[j - 1].nrows();
            if cols != expected_cols {
                return Err(DeepLinearError::ShapeMismatch {
                    layer: j + 1,
                    got: (rows, cols),
                    expected: (rows, expected_cols),
                });
            }
        }
        if layers.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(DeepLinearError::NonFinite("network layers"));
        }
        Ok(Self { layers })
    }

    /// `depth` copies of the `n x n` identity.
    pub fn identity(n: usize, depth: usize) -> Self {
        Self {
            layers: vec![DMatrix::identity(n, n); depth.max(1)],
        }
    }

    /// A chain of `1 x 1` layers.
    pub fn scalars(weights: &[f64]) -> Result<Self, DeepLinearError> {
        Self::new(weights.iter().map(|&w| DMatrix::from_element(1, 1, w)).collect())
    }

    /// Layers for widths `dims = [n_0, ..., n_L]` with i.i.d. `N(0, scale^2)` entries.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], scale: f64, rng: &mut R) -> Result<Self, DeepLinearError> {
        if dims.len() < 2 {
            return Err(DeepLinearError::EmptyNetwork);
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                DMatrix::from_fn(w[1], w[0], |_, _| {
                    let z: f64 = rng.sample(StandardNormal);
                    scale * z
                })
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Widths `[n_0, n_1, ..., n_L]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].ncols())
            .chain(self.layers.iter().map(|w| w.nrows()))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].nrows()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|w| w.len()).sum()
    }

    /// Concatenation of the column-major entries of every layer.
    pub fn to_flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|w| w.iter().copied()).collect()
    }

    pub fn from_flat(dims: &[usize], flat: &[f64]) -> Result<Self, DeepLinearError> {
        let expected: usize = dims.windows(2).map(|w| w[0] * w[1]).sum();
        if flat.len() != expected {
            return Err(DeepLinearError::FlatLength {
                got: flat.len(),
                expected,
            });
        }
        let mut offset = 0;
        let mut layers = Vec::with_capacity(dims.len().saturating_sub(1));
        for w in dims.windows(2) {
            let len = w[0] * w[1];
            layers.push(DMatrix::from_column_slice(w[1], w[0], &flat[offset..offset + len]));
            offset += len;
        }
        Ok(Self { layers })
    }

    /// `W_L ... W_1`.
    pub fn product(&self) -> DMatrix<f64> {
        self.layers
            .iter()
            .skip(1)
            .fold(self.layers[0].clone(), |acc, w| w * acc)
    }

    /// `P_j = W_j ... W_1` for `j = 0..=L`, with `P_0 = I`.
    pub fn prefix_products(&self) -> Vec<DMatrix<f64>> {
        let mut out = Vec::with_capacity(self.depth() + 1);
        out.push(DMatrix::identity(self.input_dim(), self.input_dim()));
        for w in &self.layers {
            let next = w * out.last().unwrap();
            out.push(next);
        }
        out
    }

    /// `S_j = W_L ... W_j` for `j = 1..=L+1` stored at index `j - 1`, with
    /// `S_{L+1} = I`.
    pub fn suffix_products(&self) -> Vec<DMatrix<f64>> {
        let l = self.depth();
        let n_out = self.output_dim();
        let mut out = vec![DMatrix::identity(n_out, n_out); l + 1];
        for j in (0..l).rev() {
            out[j] = &out[j + 1] * &self.layers[j];
        }
        out
    }

    pub fn check_target(&self, tgt: &LinearTarget) -> Result<(), DeepLinearError> {
        let expected = (self.output_dim(), self.input_dim());
        if tgt.r.shape() != expected {
            return Err(DeepLinearError::TargetShape {
                got: tgt.r.shape(),
                expected,
            });
        }
        Ok(())
    }

    /// `||W_L ... W_1 - R||_F^2 / 2`.
    pub fn loss(&self, tgt: &LinearTarget) -> Result<f64, DeepLinearError> {
        self.check_target(tgt)?;
        let e = self.product() - &tgt.r;
        Ok(0.5 * e.norm_squared())
    }

    /// `grad_i = (W_L ... W_{i+1})^T E (W_{i-1} ... W_1)^T` with
    /// `E = W_L ... W_1 - R`.
    pub fn gradient(&self, tgt: &LinearTarget) -> Result<Vec<DMatrix<f64>>, DeepLinearError> {
        self.check_target(tgt)?;
        let prefix = self.prefix_products();
        let suffix = self.suffix_products();
        let e = &prefix[self.depth()] - &tgt.r;
        Ok((0..self.depth())
            .map(|i| suffix[i + 1].transpose() * &e * prefix[i].transpose())
            .collect())
    }

    /// One simultaneous gradient step on every layer.
    pub fn gd_step(&self, tgt: &LinearTarget, delta: f64) -> Result<Self, DeepLinearError> {
        let grads = self.gradient(tgt)?;
        let layers = self.layers.iter().zip(grads).map(|(w, g)| w - g * delta).collect();
        Ok(Self { layers })
    }

    /// Euclidean norm of the full gradient.
    pub fn grad_norm(&self, tgt: &LinearTarget) -> Result<f64, DeepLinearError> {
        Ok(self.gradient(tgt)?.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt())
    }
}

/// The matrix to be estimated, `R` of shape `n_L x n_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixJson", try_from = "MatrixJson")]
pub struct LinearTarget {
    pub r: DMatrix<f64>,
}

impl From<LinearTarget> for MatrixJson {
    fn from(t: LinearTarget) -> Self {
        MatrixJson::from(&t.r)
    }
}

impl TryFrom<MatrixJson> for LinearTarget {
    type Error = DeepLinearError;

    fn try_from(m: MatrixJson) -> Result<Self, Self::Error> {
        LinearTarget::new(DMatrix::try_from(m)?)
    }
}

impl LinearTarget {
    pub fn new(r: DMatrix<f64>) -> Result<Self, DeepLinearError> {
        if r.iter().any(|v| !v.is_finite()) {
            return Err(DeepLinearError::NonFinite("target"));
        }
        Ok(Self { r })
    }

    pub fn scalar(r: f64) -> Self {
        Self {
            r: DMatrix::from_element(1, 1, r),
        }
    }
}

/// Loss of a fixed-shape network over its flat parameter vector.
#[derive(Debug, Clone)]
pub struct DeepLinearObjective {
    pub dims: Vec<usize>,
    pub target: LinearTarget,
}

impl DeepLinearObjective {
    pub fn new(dims: Vec<usize>, target: LinearTarget) -> Result<Self, DeepLinearError> {
        if dims.len() < 2 {
            return Err(DeepLinearError::EmptyNetwork);
        }
        let expected = (dims[dims.len() - 1], dims[0]);
        if target.r.shape() != expected {
            return Err(DeepLinearError::TargetShape {
                got: target.r.shape(),
                expected,
            });
        }
        Ok(Self { dims, target })
    }

    fn net(&self, x: &[f64]) -> DeepLinearNet {
        DeepLinearNet::from_flat(&self.dims, x).expect("flat vector matches the objective's dims")
    }
}

impl Objective for DeepLinearObjective {
    fn value(&self, x: &[f64]) -> f64 {
        self.net(x).loss(&self.target).expect("shapes checked at construction")
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.net(x)
            .gradient(&self.target)
            .expect("shapes checked at construction")
            .iter()
            .flat_map(|g| g.iter().copied())
            .collect()
    }
}
