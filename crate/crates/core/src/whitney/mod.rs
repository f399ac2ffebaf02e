//! Random projections `P_a(y) = (y₁ − a₁y_k, …, y_{k−1} − a_{k−1}y_k)` that
//! shrink a family while keeping `ζ` injective at every sample.

mod reduce;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::SolutionFamily;
use crate::{Error, Result};

pub use reduce::{
    perturb_toward_admissible, reduce_step, reduce_to_target, PerturbOptions, PerturbOutcome,
    ReductionParams, ReductionStep, ReductionTrace, StepOutcome,
};

/// `⌊(d + n)/α⌋`.
pub fn target_count(d: usize, n: usize, alpha: f64) -> usize {
    let ratio = (d + n) as f64 / alpha;
    // ratios such as 3 / 0.3 land a few ulps off the integer they denote
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio {
        nearest as usize
    } else {
        ratio.floor() as usize
    }
}

/// Weights `a ∈ R^{k−1}` of one projection, all within `[−scale, scale]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub a: Vec<f64>,
    pub scale: f64,
}

/// `k − 1` independent draws, uniform on `[−scale, scale]`.
pub fn draw_weights(k: usize, scale: f64, rng: &mut impl Rng) -> WeightVector {
    let a = (0..k.saturating_sub(1))
        .map(|_| if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 })
        .collect();
    WeightVector { a, scale }
}

/// Member `i` becomes `u_i − a_i u_k`; the last member is dropped.
pub fn project_family(family: &SolutionFamily, w: &WeightVector) -> Result<SolutionFamily> {
    let k = family.len();
    if k < 2 || w.a.len() != k - 1 {
        return Err(Error::invalid(format!(
            "projection of a {k}-member family needs {} weights, got {}",
            k.saturating_sub(1),
            w.a.len()
        )));
    }
    let rows: Vec<Vec<(usize, f64)>> = w
        .a
        .iter()
        .enumerate()
        .map(|(i, &ai)| if ai == 0.0 { vec![(i, 1.0)] } else { vec![(i, 1.0), (k - 1, -ai)] })
        .collect();
    family.map_sparse(&rows)
}

/// A weight vector for which `P_a ∘ F_x` loses injectivity at sample `p`:
/// `(a, 1) = F_x ξ` for the least-norm `ξ` with `ζ(u_k)(x)·ξ = 1`. `None`
/// when `ζ(u_k)` vanishes at `p` (every `a` then keeps the rank).
pub fn bad_weight_at(family: &SolutionFamily, p: usize) -> Option<WeightVector> {
    let k = family.len();
    let last = family.zeta_row(k - 1, p);
    let norm2: f64 = last.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return None;
    }
    let xi: Vec<f64> = last.iter().map(|v| v / norm2).collect();
    let a: Vec<f64> = (0..k - 1)
        .map(|i| family.zeta_row(i, p).iter().zip(&xi).map(|(r, x)| r * x).sum())
        .collect();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Some(WeightVector { a, scale })
}
