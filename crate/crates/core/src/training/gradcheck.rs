//! Finite-difference verification of the analytic gradients.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{document_loss, LossInput, LossReport};
use crate::error::Result;
use crate::model::{Hyperparams, ModelParams, TypeLabel};

#[derive(Clone, Debug, PartialEq)]
pub struct GradientCheck {
    /// Coordinates compared.
    pub coordinates: usize,
    /// Coordinates left out because a perturbation flipped a type prediction,
    /// where the loss is discontinuous by design.
    pub skipped: usize,
    /// Nonzero gradient entries too small for a central difference of this
    /// loss to resolve, see [`resolution_floor`]. They are never sampled.
    pub unresolvable: usize,
    pub max_relative_error: f64,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub loss: LossReport,
    /// Candidate anaphors predicted as anaphoric and as non-anaphoric.
    pub predicted_anaphors: usize,
    pub predicted_non_anaphors: usize,
}

/// `|a - n| / max(|a|, |n|)`, or 0 when both are exactly 0.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Relative size of the smallest gradient entry worth comparing.
pub const RESOLUTION_FACTOR: f64 = 1e-8;

/// Smallest gradient magnitude a central difference can measure to a
/// relative accuracy well under 1e-4 on a loss of this size.
///
/// With step `h` the difference quotient carries rounding noise of about
/// `eps * |loss| / h`, which is near `2e-13 * |loss|` for `h = 1e-3`. An
/// entry below `1e-8 * |loss|` would be dominated by that noise.
pub fn resolution_floor(loss: f64) -> f64 {
    RESOLUTION_FACTOR * loss.abs().max(1.0)
}

/// Fourth-order central difference from the losses at `x + h`, `x - h`,
/// `x + 2h` and `x - 2h`. Its truncation error is O(h^4), which keeps
/// sharply curved coordinates measurable at a fixed step of 1e-3.
pub fn central_difference(plus: f64, minus: f64, plus2: f64, minus2: f64, h: f64) -> f64 {
    (8.0 * (plus - minus) - (plus2 - minus2)) / (12.0 * h)
}

/// Compares analytic and central-difference gradients of the joint loss.
///
/// Coordinates are spread over every tensor, preferring entries the
/// document actually touches, so that each part of the network is covered.
/// Entries whose gradient is exactly zero are fair game. Entries that are
/// nonzero but under [`resolution_floor`] are counted and left out.
pub fn gradient_check(
    params: &ModelParams,
    hp: &Hyperparams,
    input: &LossInput<'_>,
    coordinates: usize,
    h: f64,
    seed: u64,
) -> Result<GradientCheck> {
    let base = document_loss(params, hp, input, None, true)?;
    let grads = base.gradients.expect("requested gradients");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = resolution_floor(base.report.total);
    let measurable = |g: f64| g == 0.0 || g.abs() >= floor;
    let unresolvable = grads.iter().flatten().filter(|&&g| !measurable(g)).count();

    let n_tensors = params.tensors.len();
    let quota = coordinates.div_ceil(n_tensors);
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (t, g) in grads.iter().enumerate() {
        let (mut live, mut dead): (Vec<usize>, Vec<usize>) = (0..g.len())
            .filter(|&i| measurable(g[i]))
            .partition(|&i| g[i] != 0.0);
        live.shuffle(&mut rng);
        dead.shuffle(&mut rng);
        chosen.extend(live.into_iter().chain(dead).take(quota).map(|i| (t, i)));
    }
    let total: usize = params.tensors.iter().map(|t| t.len()).sum();
    while chosen.len() < coordinates.min(total - unresolvable) {
        let t = rng.gen_range(0..n_tensors);
        let i = rng.gen_range(0..params.tensors[t].len());
        if measurable(grads[t][i]) && !chosen.contains(&(t, i)) {
            chosen.push((t, i));
        }
    }

    let mut work = params.clone();
    let mut result = GradientCheck {
        coordinates: 0,
        skipped: 0,
        unresolvable,
        max_relative_error: 0.0,
        worst: None,
        loss: base.report,
        predicted_anaphors: base
            .predicted
            .iter()
            .filter(|&&l| l == TypeLabel::Anaphor)
            .count(),
        predicted_non_anaphors: base
            .predicted
            .iter()
            .filter(|&&l| l == TypeLabel::NonAnaphor)
            .count(),
    };
    for (t, i) in chosen {
        let original = work.tensors[t].data[i];
        let mut at = |offset: f64| {
            work.tensors[t].data[i] = original + offset;
            document_loss(&work, hp, input, None, false)
        };
        let evals = [at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?];
        work.tensors[t].data[i] = original;
        if evals.iter().any(|e| e.predicted != base.predicted) {
            result.skipped += 1;
            continue;
        }
        let [p1, m1, p2, m2] = evals.map(|e| e.report.total);
        let numeric = central_difference(p1, m1, p2, m2, h);
        let err = relative_error(grads[t][i], numeric);
        result.coordinates += 1;
        if err > result.max_relative_error || result.worst.is_none() {
            result.max_relative_error = result.max_relative_error.max(err);
            result.worst = Some((params.tensors[t].name.clone(), i));
        }
    }
    Ok(result)
}
