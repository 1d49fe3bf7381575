//! The x2 super-resolution network: a head convolution, a chain of
//! residual-in-residual dense blocks, a trunk convolution with a global
//! feature residual, nearest+conv upsampling, two tail convolutions, and a
//! bicubic skip from the input — so a zero-weight network predicts the
//! bicubic upsample.

use serde::{Deserialize, Serialize};

use crate::net::tape::{NodeId, Tape};
use crate::net::tensor::{Elem, Tensor};
use crate::raster::Rng;
use crate::{Error, Result};

/// Network hyperparameters. The upscale factor is fixed at 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub in_bands: usize,
    pub features: usize,
    pub num_rrdb: usize,
    pub growth: usize,
}

/// Residual branch scaling used throughout the block chain.
pub const RESIDUAL_SCALE: f64 = 0.2;

impl ModelSpec {
    /// Desk-scale profile: 4 blocks, 32 features, growth 16.
    pub fn tiny(in_bands: usize) -> Self {
        ModelSpec {
            in_bands,
            features: 32,
            num_rrdb: 4,
            growth: 16,
        }
    }

    /// Full-scale profile: 8 blocks, 64 features, growth 32.
    pub fn paper(in_bands: usize) -> Self {
        ModelSpec {
            in_bands,
            features: 64,
            num_rrdb: 8,
            growth: 32,
        }
    }

    pub fn parse(name: &str, in_bands: usize) -> Result<Self> {
        match name {
            "tiny" => Ok(ModelSpec::tiny(in_bands)),
            "paper" => Ok(ModelSpec::paper(in_bands)),
            _ => Err(Error::invalid(format!("unknown model spec `{name}`"))),
        }
    }

    /// Names and shapes of every parameter, in binding order.
    pub fn parameter_layout(&self) -> Vec<(String, [usize; 4])> {
        let (f, g) = (self.features, self.growth);
        let mut out = Vec::new();
        let mut conv = |name: String, ci: usize, co: usize| {
            out.push((format!("{name}.w"), [co, ci, 3, 3]));
            out.push((format!("{name}.b"), [co, 1, 1, 1]));
        };
        conv("head".into(), self.in_bands, f);
        for r in 0..self.num_rrdb {
            for d in 0..3 {
                for c in 0..4 {
                    conv(format!("rrdb{r}.dense{d}.conv{c}"), f + c * g, g);
                }
                conv(format!("rrdb{r}.dense{d}.conv4"), f + 4 * g, f);
            }
        }
        conv("trunk".into(), f, f);
        conv("up".into(), f, f);
        conv("hr".into(), f, f);
        conv("last".into(), f, self.in_bands);
        out
    }

    /// Closed-form total parameter count.
    pub fn param_count(&self) -> usize {
        let (f, g, n, i) = (self.features, self.growth, self.num_rrdb, self.in_bands);
        let conv = |ci: usize, co: usize| 9 * ci * co + co;
        let dense: usize = (0..4).map(|c| conv(f + c * g, g)).sum::<usize>() + conv(f + 4 * g, f);
        conv(i, f) + n * 3 * dense + conv(f, f) * 3 + conv(f, i)
    }
}

/// Ordered named parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Elem> ModelParams<T> {
    pub fn from_entries(entries: Vec<(String, Tensor<T>)>) -> Self {
        ModelParams { entries }
    }

    pub fn entries(&self) -> &[(String, Tensor<T>)] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [(String, Tensor<T>)] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_elements(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn cast<U: Elem>(&self) -> ModelParams<U> {
        ModelParams {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), t.cast()))
                .collect(),
        }
    }

    /// All-zero parameters for the layout of `spec`.
    pub fn zeros(spec: &ModelSpec) -> Self {
        ModelParams {
            entries: spec
                .parameter_layout()
                .into_iter()
                .map(|(name, shape)| (name, Tensor::zeros(shape)))
                .collect(),
        }
    }

    /// Kaiming-style init: weights ~ N(0, sqrt(2 / fan_in)), biases zero,
    /// residual-branch convolutions (dense blocks, trunk) scaled by 0.1.
    /// The final projection starts at zero so a fresh model predicts exactly
    /// the bicubic upsample and training learns the residual.
    pub fn init(spec: &ModelSpec, rng: &mut Rng) -> Self {
        let entries = spec
            .parameter_layout()
            .into_iter()
            .map(|(name, shape)| {
                let tensor = if name.ends_with(".b") || name.starts_with("last") {
                    Tensor::zeros(shape)
                } else {
                    let fan_in = (shape[1] * shape[2] * shape[3]) as f64;
                    let mut std = (2.0 / fan_in).sqrt();
                    if name.starts_with("rrdb") || name.starts_with("trunk") {
                        std *= 0.1;
                    }
                    let n = shape.iter().product();
                    Tensor::from_vec(
                        shape,
                        (0..n).map(|_| T::from_f64(rng.normal() * std)).collect(),
                    )
                };
                (name, tensor)
            })
            .collect();
        ModelParams { entries }
    }
}

/// Handles of the parameters after registration on a tape.
pub struct BoundParams {
    ids: Vec<NodeId>,
}

impl BoundParams {
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn from_ids(ids: Vec<NodeId>) -> Self {
        BoundParams { ids }
    }
}

/// Register every parameter as a gradient-carrying leaf.
pub fn bind_params<T: Elem>(tape: &mut Tape<T>, params: &ModelParams<T>) -> BoundParams {
    BoundParams {
        ids: params
            .entries
            .iter()
            .map(|(_, t)| tape.leaf(t.clone(), true))
            .collect(),
    }
}

/// Walks bound parameter ids in layout order.
pub struct ParamCursor<'a> {
    ids: &'a [NodeId],
    next: usize,
}

impl<'a> ParamCursor<'a> {
    pub fn new(ids: &'a [NodeId]) -> Self {
        ParamCursor { ids, next: 0 }
    }

    fn conv(&mut self) -> (NodeId, NodeId) {
        let pair = (self.ids[self.next], self.ids[self.next + 1]);
        self.next += 2;
        pair
    }
}

fn dense_block<T: Elem>(
    tape: &mut Tape<T>,
    cursor: &mut ParamCursor,
    x: NodeId,
    beta: f64,
) -> Result<NodeId> {
    let mut feats = vec![x];
    for _ in 0..4 {
        let (w, b) = cursor.conv();
        let cat = if feats.len() == 1 {
            feats[0]
        } else {
            tape.concat_channels(&feats)?
        };
        let y = tape.conv2d(cat, w, b)?;
        feats.push(tape.leaky_relu(y, 0.2));
    }
    let (w, b) = cursor.conv();
    let cat = tape.concat_channels(&feats)?;
    let out = tape.conv2d(cat, w, b)?;
    let scaled = tape.scale(out, beta);
    tape.add(x, scaled)
}

/// One residual-in-residual dense block:
/// `out = x + beta * (D(x) - x)` where D chains three dense sub-blocks.
/// Zero weights make it an exact identity; beta = 0 likewise.
pub fn rrdb_forward<T: Elem>(
    tape: &mut Tape<T>,
    cursor: &mut ParamCursor,
    x: NodeId,
    beta: f64,
) -> Result<NodeId> {
    let mut t = x;
    for _ in 0..3 {
        t = dense_block(tape, cursor, t, beta)?;
    }
    let neg = tape.scale(x, -1.0);
    let delta = tape.add(t, neg)?;
    let scaled = tape.scale(delta, beta);
    tape.add(x, scaled)
}

/// Full forward pass. Input shape (N, in_bands, H, W) on the normalized
/// [0, 1] scale; output (N, in_bands, 2H, 2W).
pub fn model_forward<T: Elem>(
    tape: &mut Tape<T>,
    spec: &ModelSpec,
    bound: &BoundParams,
    input: NodeId,
) -> Result<NodeId> {
    let shape = tape.value(input).shape();
    if shape[1] != spec.in_bands {
        return Err(Error::dimension(format!(
            "input has {} bands, model expects {}",
            shape[1], spec.in_bands
        )));
    }
    let mut cursor = ParamCursor::new(bound.ids());
    let (w, b) = cursor.conv();
    let head = tape.conv2d(input, w, b)?;

    let mut trunk = head;
    for _ in 0..spec.num_rrdb {
        trunk = rrdb_forward(tape, &mut cursor, trunk, RESIDUAL_SCALE)?;
    }
    let (w, b) = cursor.conv();
    let body = tape.conv2d(trunk, w, b)?;
    let fused = tape.add(head, body)?;

    let up = tape.nearest_up2(fused);
    let (w, b) = cursor.conv();
    let up = tape.conv2d(up, w, b)?;
    let up = tape.leaky_relu(up, 0.2);

    let (w, b) = cursor.conv();
    let hr = tape.conv2d(up, w, b)?;
    let hr = tape.leaky_relu(hr, 0.2);

    let (w, b) = cursor.conv();
    let residual = tape.conv2d(hr, w, b)?;

    let skip = tape.bicubic_up2(input);
    tape.add(residual, skip)
}

/// Convenience inference entry: forward on a fresh tape, no gradients.
pub fn predict<T: Elem>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    input: &Tensor<T>,
) -> Result<Tensor<T>> {
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = params
        .entries
        .iter()
        .map(|(_, t)| tape.leaf(t.clone(), false))
        .collect();
    let bound = BoundParams { ids };
    let x = tape.leaf(input.clone(), false);
    let out = model_forward(&mut tape, spec, &bound, x)?;
    Ok(tape.value(out).clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_count_matches_closed_form() {
        for spec in [
            ModelSpec::tiny(3),
            ModelSpec::tiny(1),
            ModelSpec::paper(3),
            ModelSpec {
                in_bands: 3,
                features: 8,
                num_rrdb: 2,
                growth: 4,
            },
        ] {
            let params = ModelParams::<f32>::zeros(&spec);
            assert_eq!(
                params.total_elements(),
                spec.param_count(),
                "spec {spec:?}"
            );
        }
    }

    #[test]
    fn zero_weights_predict_bicubic_exactly() {
        let spec = ModelSpec {
            in_bands: 3,
            features: 8,
            num_rrdb: 2,
            growth: 4,
        };
        let params = ModelParams::<f32>::zeros(&spec);
        let mut rng = Rng::from_seed(3);
        let input = Tensor::from_vec(
            [1, 3, 6, 6],
            (0..108).map(|_| rng.uniform() as f32).collect(),
        );
        let out = predict(&spec, &params, &input).unwrap();
        assert_eq!(out.shape(), [1, 3, 12, 12]);

        let mut tape = Tape::<f32>::new();
        let x = tape.leaf(input, false);
        let skip = tape.bicubic_up2(x);
        assert_eq!(out.data(), tape.value(skip).data());
    }

    #[test]
    fn output_shape_doubles_spatial_dims() {
        let spec = ModelSpec {
            in_bands: 3,
            features: 8,
            num_rrdb: 1,
            growth: 4,
        };
        let mut rng = Rng::from_seed(4);
        let params = ModelParams::<f32>::init(&spec, &mut rng);
        let input = Tensor::from_vec(
            [2, 3, 16, 16],
            (0..2 * 3 * 256).map(|_| rng.uniform() as f32).collect(),
        );
        let out = predict(&spec, &params, &input).unwrap();
        assert_eq!(out.shape(), [2, 3, 32, 32]);
    }

    #[test]
    fn rrdb_zero_weights_is_identity() {
        let spec = ModelSpec {
            in_bands: 1,
            features: 4,
            num_rrdb: 1,
            growth: 2,
        };
        let mut tape = Tape::<f64>::new();
        let params = ModelParams::<f64>::zeros(&spec);
        let bound = bind_params(&mut tape, &params);
        let mut rng = Rng::from_seed(5);
        let x = tape.leaf(
            Tensor::from_vec([1, 4, 5, 5], (0..100).map(|_| rng.uniform()).collect()),
            false,
        );
        // Skip head conv params (2 ids), bind the single RRDB directly.
        let mut cursor = ParamCursor::new(&bound.ids()[2..]);
        let y = rrdb_forward(&mut tape, &mut cursor, x, RESIDUAL_SCALE).unwrap();
        assert_eq!(tape.value(y).data(), tape.value(x).data());
    }

    #[test]
    fn prediction_translates_with_input() {
        // Fully convolutional: shifting the input by 1 px shifts the
        // prediction by 2 px, up to border effects.
        let spec = ModelSpec {
            in_bands: 3,
            features: 8,
            num_rrdb: 1,
            growth: 4,
        };
        let mut rng = Rng::from_seed(21);
        let params = ModelParams::<f32>::init(&spec, &mut rng);
        let h = 40;
        let base = Tensor::from_vec(
            [1, 3, h, h],
            (0..3 * h * h).map(|_| rng.uniform() as f32).collect(),
        );
        let shifted = {
            let mut t = Tensor::zeros([1, 3, h, h]);
            for c in 0..3 {
                for y in 0..h {
                    for x in 0..h {
                        let sy = y.saturating_sub(1);
                        let sx = x.saturating_sub(1);
                        let v = base.data()[base.offset(0, c, sy, sx)];
                        let off = t.offset(0, c, y, x);
                        t.data_mut()[off] = v;
                    }
                }
            }
            t
        };
        let p0 = predict(&spec, &params, &base).unwrap();
        let p1 = predict(&spec, &params, &shifted).unwrap();
        let m = 16; // HR-px margin beyond which border influence is gone
        for c in 0..3 {
            for y in m..2 * h - m {
                for x in m..2 * h - m {
                    let a = p0.data()[p0.offset(0, c, y - 2, x - 2)];
                    let b = p1.data()[p1.offset(0, c, y, x)];
                    assert!(
                        (a - b).abs() < 1e-3,
                        "band {c} ({y},{x}): {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn rrdb_beta_zero_is_identity_for_any_weights() {
        let spec = ModelSpec {
            in_bands: 1,
            features: 4,
            num_rrdb: 1,
            growth: 2,
        };
        let mut rng = Rng::from_seed(6);
        let params = ModelParams::<f64>::init(&spec, &mut rng);
        let mut tape = Tape::<f64>::new();
        let bound = bind_params(&mut tape, &params);
        let x = tape.leaf(
            Tensor::from_vec([1, 4, 5, 5], (0..100).map(|_| rng.uniform()).collect()),
            false,
        );
        let mut cursor = ParamCursor::new(&bound.ids()[2..]);
        let y = rrdb_forward(&mut tape, &mut cursor, x, 0.0).unwrap();
        for (a, b) in tape.value(y).data().iter().zip(tape.value(x).data()) {
            assert_eq!(a, b);
        }
    }
}
