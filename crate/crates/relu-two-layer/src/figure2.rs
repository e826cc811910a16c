use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use numlab_core::{classify_tail, iterate, GdConfig, StopReason, TailClass, TailKind};

use crate::{thm4_check, ReluDataset, ReluError, ReluMap, ReluTwoLayerNet, Thm4Report};

/// Step on `[jump_at, drop_at)`, zero before it, and a ramp from zero after it.
///
/// The default has `height = 0`, leaving a flat piece followed by a ramp.
/// With a nonzero step the exact fit needs a unit whose slope resolves a
/// jump between neighbouring samples, which no step size in the studied
/// range can reach stably, so training never settles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseTarget {
    pub jump_at: f64,
    pub drop_at: f64,
    pub height: f64,
    pub slope: f64,
}

impl Default for PiecewiseTarget {
    fn default() -> Self {
        Self {
            jump_at: 0.3,
            drop_at: 0.6,
            height: 0.0,
            slope: 2.0,
        }
    }
}

impl PiecewiseTarget {
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.jump_at {
            0.0
        } else if x < self.drop_at {
            self.height
        } else {
            self.slope * (x - self.drop_at)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure2Config {
    pub seed: u64,
    pub width: usize,
    pub samples: usize,
    pub target: PiecewiseTarget,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Near-flat directions make the last digits of a limit cycle settle
    /// slowly, so this is looser than the scalar default.
    pub orbit_tol: f64,
}

impl Default for Figure2Config {
    fn default() -> Self {
        Self {
            seed: 31,
            width: 20,
            samples: 1000,
            target: PiecewiseTarget::default(),
            max_iters: 2_000_000,
            grad_tol: 1e-8,
            orbit_tol: 1e-6,
        }
    }
}

impl Figure2Config {
    /// Inputs `x_i = i / N` for `i = 1..N` with their targets.
    pub fn dataset(&self) -> Result<ReluDataset, ReluError> {
        if self.samples == 0 {
            return Err(ReluError::EmptyDataset);
        }
        let n = self.samples as f64;
        let xs: Vec<f64> = (1..=self.samples).map(|i| i as f64 / n).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| self.target.eval(x)).collect();
        ReluDataset::scalar(&xs, &ys)
    }

    /// Initial network; the bias depends only on the seed, so it is shared by
    /// every step size.
    pub fn initial_net(&self) -> ReluTwoLayerNet {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        ReluTwoLayerNet::random(1, self.width, 1, &mut rng)
    }
}

/// Estimates sampled on the input grid. For a period-2 tail both phases are
/// kept, labelled by the parity of their iteration index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub x: Vec<f64>,
    pub f_target: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f_hat: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f_hat_odd: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f_hat_even: Option<Vec<f64>>,
}

impl Curves {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        match (&self.f_hat_odd, &self.f_hat_even) {
            (Some(odd), Some(even)) => {
                writeln!(w, "x,f_target,f_hat_odd,f_hat_even")?;
                for i in 0..self.x.len() {
                    writeln!(w, "{},{},{},{}", self.x[i], self.f_target[i], odd[i], even[i])?;
                }
            }
            _ => {
                writeln!(w, "x,f_target,f_hat")?;
                let hat = self.f_hat.as_deref().unwrap_or(&[]);
                for i in 0..self.x.len() {
                    let v = hat.get(i).copied().unwrap_or(f64::NAN);
                    writeln!(w, "{},{},{}", self.x[i], self.f_target[i], v)?;
                }
            }
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure2Record {
    pub step_size: f64,
    pub config: Figure2Config,
    pub tail: TailClass,
    pub stop: StopReason,
    pub iterations: usize,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    /// Loss at the last even and odd iterates of the tail.
    pub even_loss: f64,
    pub odd_loss: f64,
    /// Spread (max - min) of the tail losses within each parity.
    pub even_loss_spread: f64,
    pub odd_loss_spread: f64,
    /// Largest distance between consecutive tail iterates.
    pub step_gap: f64,
    /// Largest distance between tail iterates two steps apart.
    pub two_step_gap: f64,
    pub bias: Vec<f64>,
    pub thm4: Thm4Report,
    pub curves: Curves,
}

impl Figure2Record {
    /// Period-2 tail whose per-parity losses have settled to `loss_tol`.
    pub fn is_stable_period_two(&self, loss_tol: f64) -> bool {
        self.tail.is_period(2) && self.even_loss_spread <= loss_tol && self.odd_loss_spread <= loss_tol
    }
}

fn grid_outputs(net: &ReluTwoLayerNet, data: &ReluDataset) -> Result<Vec<f64>, ReluError> {
    Ok(net.predict(data)?.row(0).iter().copied().collect())
}

/// Trains the one-dimensional two-layer network of width `cfg.width` on the
/// piecewise target with step `delta` and classifies where it ends up.
pub fn figure2_experiment(cfg: &Figure2Config, delta: f64) -> Result<Figure2Record, ReluError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ReluError::InvalidArgument(format!(
            "step size must be positive, got {delta}"
        )));
    }
    let data = cfg.dataset()?;
    let net0 = cfg.initial_net();
    let map = ReluMap::new(&net0, &data, delta);
    let gd = GdConfig::new(delta)
        .with_max_iters(cfg.max_iters)
        .with_grad_tol(cfg.grad_tol)
        .with_orbit_tol(cfg.orbit_tol)
        .with_record_stride(cfg.max_iters.max(1));
    let traj = iterate(&map, &net0.to_flat(), &gd)?;
    let tail = classify_tail(&traj, &gd)?;

    let last = traj.len() - 1;
    let final_net = net0
        .from_flat(&traj.states[last])
        .or_else(|_| Ok::<_, ReluError>(net0.clone()))?;

    let tail_start = traj.len().saturating_sub(gd.tail_len());
    let parity_stats = |parity: usize| {
        let vals: Vec<f64> = (tail_start..traj.len())
            .filter(|&i| traj.iter_indices[i] % 2 == parity && traj.losses[i].is_finite())
            .map(|i| traj.losses[i])
            .collect();
        let spread =
            vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vals.iter().copied().fold(f64::INFINITY, f64::min);
        (
            vals.last().copied().unwrap_or(f64::NAN),
            if vals.is_empty() { f64::NAN } else { spread },
        )
    };
    let (even_loss, even_loss_spread) = parity_stats(0);
    let (odd_loss, odd_loss_spread) = parity_stats(1);
    let gap = |lag: usize| {
        (tail_start..traj.len().saturating_sub(lag))
            .map(|i| numlab_core::distance(&traj.states[i], &traj.states[i + lag]))
            .fold(0.0, f64::max)
    };
    let (step_gap, two_step_gap) = (gap(1), gap(2));

    let x: Vec<f64> = data.inputs.row(0).iter().copied().collect();
    let f_target: Vec<f64> = data.targets.row(0).iter().copied().collect();
    let mut curves = Curves {
        x,
        f_target,
        f_hat: None,
        f_hat_odd: None,
        f_hat_even: None,
    };
    if tail.is_period(2) && last >= 1 {
        let prev = net0.from_flat(&traj.states[last - 1])?;
        let (even, odd) = if traj.iter_indices[last] % 2 == 0 {
            (&final_net, &prev)
        } else {
            (&prev, &final_net)
        };
        curves.f_hat_even = Some(grid_outputs(even, &data)?);
        curves.f_hat_odd = Some(grid_outputs(odd, &data)?);
    } else if tail.kind != TailKind::Divergent {
        curves.f_hat = Some(grid_outputs(&final_net, &data)?);
    }

    Ok(Figure2Record {
        step_size: delta,
        config: cfg.clone(),
        thm4: thm4_check(&final_net, &data, delta)?,
        tail,
        stop: traj.stop,
        iterations: traj.iter_indices[last],
        final_loss: traj.losses[last],
        final_grad_norm: traj.grad_norms[last],
        even_loss,
        odd_loss,
        even_loss_spread,
        odd_loss_spread,
        step_gap,
        two_step_gap,
        bias: net0.b().iter().copied().collect(),
        curves,
    })
}

/// A step size that settles to a fixed point next to a larger one that
/// settles into a stable period-2 oscillation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub lo: Figure2Record,
    pub hi: Figure2Record,
    /// Every step size tried, with its tail label, in evaluation order.
    pub probes: Vec<(f64, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSearch {
    pub lo: f64,
    pub hi: f64,
    /// Geometric grid points scanned before bisection.
    pub grid_points: usize,
    pub bisections: usize,
    /// Tolerance on the per-parity loss spread of an accepted oscillation.
    pub loss_tol: f64,
}

impl Default for TransitionSearch {
    fn default() -> Self {
        Self {
            lo: 1e-4,
            hi: 1e-3,
            grid_points: 6,
            bisections: 6,
            loss_tol: 1e-8,
        }
    }
}

/// Scans a geometric grid of step sizes for a fixed point followed by a
/// stable period-2 orbit, bisecting between a fixed point and the next
/// step size that is neither.
pub fn find_transition(cfg: &Figure2Config, search: &TransitionSearch) -> Result<Transition, ReluError> {
    let (lo, hi) = (search.lo, search.hi);
    if !(lo > 0.0 && hi > lo) || search.grid_points < 2 {
        return Err(ReluError::InvalidArgument(format!("bad search range [{lo}, {hi}]")));
    }
    let mut probes = Vec::new();
    let mut run = |delta: f64| -> Result<Figure2Record, ReluError> {
        let rec = figure2_experiment(cfg, delta)?;
        let label = match rec.tail.period {
            Some(p) => format!("{}({p})", rec.tail.label()),
            None => rec.tail.label().to_string(),
        };
        probes.push((delta, label));
        Ok(rec)
    };

    let ratio = (hi / lo).powf(1.0 / (search.grid_points - 1) as f64);
    let mut prev: Option<Figure2Record> = None;
    for k in 0..search.grid_points {
        let delta = if k + 1 == search.grid_points {
            hi
        } else {
            lo * ratio.powi(k as i32)
        };
        let rec = run(delta)?;
        if let Some(fixed) = prev.take().filter(|p| p.tail.is_fixed_point()) {
            if rec.is_stable_period_two(search.loss_tol) {
                return Ok(Transition {
                    lo: fixed,
                    hi: rec,
                    probes,
                });
            }
            if !rec.tail.is_fixed_point() {
                // Something else lies just above the fixed point: bisect.
                let (mut a, mut b) = (fixed, rec);
                for _ in 0..search.bisections {
                    let mid = run((a.step_size * b.step_size).sqrt())?;
                    if mid.tail.is_fixed_point() {
                        a = mid;
                    } else if mid.is_stable_period_two(search.loss_tol) {
                        return Ok(Transition { lo: a, hi: mid, probes });
                    } else {
                        b = mid;
                    }
                }
                prev = Some(b);
                continue;
            }
        }
        prev = Some(rec);
    }
    Err(ReluError::NoTransition { lo, hi })
}
