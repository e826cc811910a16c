use numlab_core::{Probe, StepMap};

use crate::{ReluDataset, ReluTwoLayerNet, ScalarKernel};

/// Full-batch gradient descent on the flat `(W, V)` vector with the bias of
/// `template` held fixed.
pub struct ReluMap<'a> {
    template: &'a ReluTwoLayerNet,
    data: &'a ReluDataset,
    kernel: Option<ScalarKernel>,
    step_size: f64,
}

impl<'a> ReluMap<'a> {
    /// Scalar datasets use [`ScalarKernel`]; everything else the per-sample loop.
    pub fn new(template: &'a ReluTwoLayerNet, data: &'a ReluDataset, step_size: f64) -> Self {
        let kernel = (template.output_dim() == 1 && template.input_dim() == 1)
            .then(|| ScalarKernel::new(data))
            .flatten();
        Self {
            template,
            data,
            kernel,
            step_size,
        }
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    fn net(&self, x: &[f64]) -> ReluTwoLayerNet {
        self.template
            .from_flat(x)
            .expect("engine states keep the template's length and stay finite")
    }

    fn loss_and_flat_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let net = self.net(x);
        match &self.kernel {
            Some(kernel) => {
                let r = net.width();
                let mut g = vec![0.0; 2 * r];
                let (dw, dv) = g.split_at_mut(r);
                let loss = kernel.loss_and_grads(&net, dw, dv);
                (loss, g)
            }
            None => {
                let (loss, dw, dv) = net
                    .loss_and_grads(self.data)
                    .expect("dataset shape fixed at construction");
                (loss, dw.iter().chain(dv.iter()).copied().collect())
            }
        }
    }
}

impl StepMap for ReluMap<'_> {
    fn step(&self, x: &[f64]) -> Vec<f64> {
        self.advance(x).1
    }

    fn loss(&self, x: &[f64]) -> Option<f64> {
        Some(self.loss_and_flat_grad(x).0)
    }

    fn grad_norm(&self, x: &[f64]) -> Option<f64> {
        Some(numlab_core::norm(&self.loss_and_flat_grad(x).1))
    }

    fn advance(&self, x: &[f64]) -> (Probe, Vec<f64>) {
        let (loss, g) = self.loss_and_flat_grad(x);
        let next = x.iter().zip(&g).map(|(p, gi)| p - self.step_size * gi).collect();
        (
            Probe {
                loss: Some(loss),
                grad_norm: Some(numlab_core::norm(&g)),
            },
            next,
        )
    }
}
