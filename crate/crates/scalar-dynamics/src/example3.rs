//! The even power `f(x) = x^L`.

use serde::{Deserialize, Serialize};

use crate::error::check_step;
use crate::{scalar_step, ScalarError, ScalarProblem};

/// Largest `|x0|` from which descent on `x^L` still converges:
/// `(2 / (L delta))^(1 / (L - 2))`.
pub fn example3_threshold(order: u32, delta: f64) -> Result<f64, ScalarError> {
    ScalarProblem::ex3(order)?;
    check_step(delta)?;
    let l = order as f64;
    Ok((2.0 / (l * delta)).powf(1.0 / (l - 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ex3Fate {
    Converges,
    Diverges,
    Undetermined,
}

/// Simulates descent on `x^L` from `x0`.
///
/// `Diverges` once `|x|` reaches `1e12` (or overflows); `Converges` once the
/// iterate has shrunk to half of `|x0|`. Near the threshold both take a few
/// hundred steps, so `max_iters` in the thousands is ample.
pub fn example3_fate(order: u32, delta: f64, x0: f64, max_iters: usize) -> Result<Ex3Fate, ScalarError> {
    let p = ScalarProblem::ex3(order)?;
    check_step(delta)?;
    if x0 == 0.0 {
        return Ok(Ex3Fate::Converges);
    }
    let half = 0.5 * x0.abs();
    let mut x = x0;
    for _ in 0..max_iters {
        x = scalar_step(&p, x, delta);
        if !x.is_finite() || x.abs() >= numlab_core::GdConfig::DEFAULT_DIVERGENCE_NORM {
            return Ok(Ex3Fate::Diverges);
        }
        if x.abs() <= half {
            return Ok(Ex3Fate::Converges);
        }
    }
    Ok(Ex3Fate::Undetermined)
}

#[cfg(test)]
mod tests {
    use super::*;
    use numlab_core::{classify_tail, iterate, GdConfig, TailKind};

    use crate::ScalarMap;

    #[test]
    fn threshold_values() {
        assert!((example3_threshold(4, 0.1).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        assert!((example3_threshold(4, 0.1).unwrap() - 2.2360680).abs() < 1e-7);
        assert!((example3_threshold(4, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((example3_threshold(6, 2.0 / 6.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(example3_threshold(3, 0.1).is_err());
        assert!(example3_threshold(4, 0.0).is_err());
    }

    #[test]
    fn engine_flags_divergence_above_threshold() {
        let p = ScalarProblem::ex3(4).unwrap();
        let cfg = GdConfig::new(0.1);
        let map = ScalarMap {
            problem: p,
            step_size: 0.1,
        };
        let traj = iterate(&map, &[3.0], &cfg).unwrap();
        assert!(traj.final_state().unwrap()[0].abs() >= 1e12);
        assert!(traj.len() < 10);
        assert_eq!(classify_tail(&traj, &cfg).unwrap().kind, TailKind::Divergent);
    }

    #[test]
    fn fate_on_either_side() {
        for (order, delta) in [(4, 0.05), (4, 0.1), (6, 0.05), (6, 0.1)] {
            let t = example3_threshold(order, delta).unwrap();
            assert_eq!(
                example3_fate(order, delta, 0.98 * t, 10_000).unwrap(),
                Ex3Fate::Converges
            );
            assert_eq!(
                example3_fate(order, delta, -0.98 * t, 10_000).unwrap(),
                Ex3Fate::Converges
            );
            assert_eq!(
                example3_fate(order, delta, 1.02 * t, 10_000).unwrap(),
                Ex3Fate::Diverges
            );
            assert_eq!(
                example3_fate(order, delta, -1.02 * t, 10_000).unwrap(),
                Ex3Fate::Diverges
            );
        }
    }
}
