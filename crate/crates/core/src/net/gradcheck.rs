//! Finite-difference verification of the reverse pass, run in f64.

use crate::net::tape::{NodeId, Tape};
use crate::net::tensor::Tensor;
use crate::raster::Rng;
use crate::Result;

/// Outcome of a finite-difference sweep.
#[derive(Debug, Clone, Copy)]
pub struct CheckReport {
    pub max_rel_err: f64,
    pub probes: usize,
}

/// Compare analytic gradients of a scalar-valued graph against central
/// differences. `build` registers ops over the given leaves and returns the
/// scalar output node; it is re-invoked for every perturbed evaluation.
pub fn check_scalar_fn<F>(
    tensors: &[Tensor<f64>],
    build: F,
    probes_per_tensor: usize,
    seed: u64,
) -> Result<CheckReport>
where
    F: Fn(&mut Tape<f64>, &[NodeId]) -> Result<NodeId>,
{
    let eval = |inputs: &[Tensor<f64>]| -> Result<(Tape<f64>, Vec<NodeId>, NodeId)> {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
        let loss = build(&mut tape, &ids)?;
        Ok((tape, ids, loss))
    };

    let (tape, ids, loss) = eval(tensors)?;
    let grads = tape.backward(loss)?;

    let eval_at = |k: usize, idx: usize, value: f64| -> Result<f64> {
        let mut shifted = tensors.to_vec();
        shifted[k].data_mut()[idx] = value;
        let (t, _, l) = eval(&shifted)?;
        Ok(t.value(l).data()[0])
    };

    let f0 = tape.value(loss).data()[0];
    // Differences below this are indistinguishable from f64 roundoff in the
    // forward evaluation.
    let noise_floor = 1e-9 * f0.abs().max(1.0);

    let mut rng = Rng::from_seed(seed);
    let mut max_rel = 0.0f64;
    let mut probes = 0usize;
    for (k, t) in tensors.iter().enumerate() {
        let analytic_tensor = grads.get(ids[k]);
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        while accepted < probes_per_tensor && attempts < 10 * probes_per_tensor {
            attempts += 1;
            let idx = rng.below(t.numel());
            let theta = t.data()[idx];
            let analytic = analytic_tensor.map_or(0.0, |g| g.data()[idx]);

            // Ladder of step sizes: coordinates with tiny influence on the
            // output need a larger step before the difference signal clears
            // the roundoff floor of the forward evaluation.
            let h0 = 1e-6 * theta.abs().max(1.0);
            let mut measured = None;
            for scale in [1.0, 1e2, 1e4] {
                let h = h0 * scale;
                let f_plus = eval_at(k, idx, theta + h)?;
                let f_minus = eval_at(k, idx, theta - h)?;
                if (f_plus - f_minus).abs() < 1e3 * noise_floor {
                    continue;
                }
                let d_h = (f_plus - f_minus) / (2.0 * h);
                let d_2h = (eval_at(k, idx, theta + 2.0 * h)?
                    - eval_at(k, idx, theta - 2.0 * h)?)
                    / (4.0 * h);
                // On smooth intervals the two estimates agree to O(h^2);
                // disagreement means a kink (leaky-relu corner, L1 tie)
                // sits inside the interval and no derivative exists there.
                if (d_h - d_2h).abs() > 1e-6 * d_h.abs().max(1e-3) {
                    break;
                }
                measured = Some(d_h);
                break;
            }
            let rel = match measured {
                Some(numeric) => {
                    let denom = analytic.abs().max(numeric.abs());
                    if denom > 1e-8 {
                        (analytic - numeric).abs() / denom
                    } else {
                        (analytic - numeric).abs()
                    }
                }
                // No step produced a difference above the noise floor: the
                // coordinate has (numerically) zero influence, so the
                // analytic gradient must be tiny as well.
                None if analytic.abs() < 1e-6 => 0.0,
                None => continue,
            };
            max_rel = max_rel.max(rel);
            accepted += 1;
            probes += 1;
        }
    }
    Ok(CheckReport {
        max_rel_err: max_rel,
        probes,
    })
}

/// Deterministic tensor with entries uniform in [-1, 1).
pub fn random_tensor(shape: [usize; 4], seed: u64) -> Tensor<f64> {
    let mut rng = Rng::from_seed(seed);
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.uniform() * 2.0 - 1.0).collect())
}
