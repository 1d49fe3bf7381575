//! Reverse-mode autodiff on a flat tape. Values are computed eagerly as ops
//! are appended; `backward` walks the tape in reverse, accumulating
//! gradients additively across fan-out.
//!
//! Every kernel either writes disjoint output slices or reduces in a fixed
//! association order, so results are bitwise identical with and without the
//! rayon paths.

use crate::net::tensor::{Elem, Tensor};
use crate::par;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv2d { x: NodeId, w: NodeId, b: NodeId },
    LeakyRelu { x: NodeId, slope: f64 },
    Add { a: NodeId, b: NodeId },
    Scale { x: NodeId, factor: f64 },
    ConcatC { parts: Vec<NodeId> },
    NearestUp2 { x: NodeId },
    BicubicUp2 { x: NodeId },
    L1Loss { pred: NodeId, target: NodeId },
    WeightedSum { x: NodeId, w: NodeId },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op,
    requires_grad: bool,
}

/// Autodiff tape: one forward graph, rebuilt per training step.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Elem> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Elem> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Tensor<T>, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn requires(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    /// Register an input or parameter tensor.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> NodeId {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// 3x3 cross-correlation with zero padding 1 and per-channel bias;
    /// spatial dimensions are preserved.
    pub fn conv2d(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let xs = self.value(x).shape();
        let ws = self.value(w).shape();
        let bs = self.value(b).shape();
        if ws[2] != 3 || ws[3] != 3 {
            return Err(Error::dimension(format!("conv2d expects 3x3 kernels, got {ws:?}")));
        }
        if ws[1] != xs[1] {
            return Err(Error::dimension(format!(
                "conv2d channel mismatch: input {xs:?} vs weight {ws:?}"
            )));
        }
        if bs != [ws[0], 1, 1, 1] {
            return Err(Error::dimension(format!(
                "conv2d bias shape {bs:?} does not match {} output channels",
                ws[0]
            )));
        }
        let out = conv2d_forward(self.value(x), self.value(w), self.value(b));
        let req = self.requires(x) || self.requires(w) || self.requires(b);
        Ok(self.push(out, Op::Conv2d { x, w, b }, req))
    }

    /// Elementwise max(x, slope * x).
    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> NodeId {
        let s = T::from_f64(slope);
        let mut out = self.value(x).clone();
        for v in out.data_mut() {
            if *v < T::ZERO {
                *v = *v * s;
            }
        }
        let req = self.requires(x);
        self.push(out, Op::LeakyRelu { x, slope }, req)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(Error::dimension(format!(
                "add shape mismatch: {:?} vs {:?}",
                self.value(a).shape(),
                self.value(b).shape()
            )));
        }
        let mut out = self.value(a).clone();
        for (o, &v) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *o += v;
        }
        let req = self.requires(a) || self.requires(b);
        Ok(self.push(out, Op::Add { a, b }, req))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        let f = T::from_f64(factor);
        let mut out = self.value(x).clone();
        for v in out.data_mut() {
            *v = *v * f;
        }
        let req = self.requires(x);
        self.push(out, Op::Scale { x, factor }, req)
    }

    /// Concatenate along the channel axis.
    pub fn concat_channels(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let first = self.value(parts[0]).shape();
        let mut channels = 0;
        for &p in parts {
            let s = self.value(p).shape();
            if [s[0], s[2], s[3]] != [first[0], first[2], first[3]] {
                return Err(Error::dimension("concat parts disagree on N/H/W"));
            }
            channels += s[1];
        }
        let [n, _, h, w] = first;
        let mut out = Tensor::zeros([n, channels, h, w]);
        let hw = h * w;
        for ni in 0..n {
            let mut c_off = 0;
            for &p in parts {
                let pv = self.value(p);
                let pc = pv.shape()[1];
                for c in 0..pc {
                    let dst = out.offset(ni, c_off + c, 0, 0);
                    out.data_mut()[dst..dst + hw].copy_from_slice(pv.channel(ni, c));
                }
                c_off += pc;
            }
        }
        let req = parts.iter().any(|&p| self.requires(p));
        Ok(self.push(out, Op::ConcatC { parts: parts.to_vec() }, req))
    }

    /// Nearest-neighbor 2x spatial duplication.
    pub fn nearest_up2(&mut self, x: NodeId) -> NodeId {
        let [n, c, h, w] = self.value(x).shape();
        let mut out = Tensor::zeros([n, c, 2 * h, 2 * w]);
        {
            let xv = self.value(x);
            let ohw = 4 * h * w;
            par::for_each_chunk_mut(out.data_mut(), ohw, |idx, chunk| {
                let (ni, ci) = (idx / c, idx % c);
                let src = xv.channel(ni, ci);
                for oy in 0..2 * h {
                    let sy = oy / 2;
                    for ox in 0..2 * w {
                        chunk[oy * 2 * w + ox] = src[sy * w + ox / 2];
                    }
                }
            });
        }
        let req = self.requires(x);
        self.push(out, Op::NearestUp2 { x }, req)
    }

    /// Bicubic (Catmull-Rom) 2x upsampling with edge replication.
    pub fn bicubic_up2(&mut self, x: NodeId) -> NodeId {
        let out = bicubic_up2_forward(self.value(x));
        let req = self.requires(x);
        self.push(out, Op::BicubicUp2 { x }, req)
    }

    /// Mean absolute error over all elements (scalar output).
    pub fn l1_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        if self.value(pred).shape() != self.value(target).shape() {
            return Err(Error::dimension(format!(
                "l1_loss shape mismatch: {:?} vs {:?}",
                self.value(pred).shape(),
                self.value(target).shape()
            )));
        }
        let mut acc = 0.0f64;
        for (&p, &t) in self.value(pred).data().iter().zip(self.value(target).data()) {
            acc += (p - t).abs().to_f64();
        }
        let mean = acc / self.value(pred).numel() as f64;
        let req = self.requires(pred) || self.requires(target);
        Ok(self.push(
            Tensor::scalar(T::from_f64(mean)),
            Op::L1Loss { pred, target },
            req,
        ))
    }

    /// Fixed-projection scalarizer: sum(x * w) over all elements.
    pub fn weighted_sum(&mut self, x: NodeId, w: NodeId) -> Result<NodeId> {
        if self.value(x).shape() != self.value(w).shape() {
            return Err(Error::dimension("weighted_sum shape mismatch"));
        }
        let mut acc = 0.0f64;
        for (&a, &b) in self.value(x).data().iter().zip(self.value(w).data()) {
            acc += (a * b).to_f64();
        }
        let req = self.requires(x) || self.requires(w);
        Ok(self.push(
            Tensor::scalar(T::from_f64(acc)),
            Op::WeightedSum { x, w },
            req,
        ))
    }

    /// Reverse pass from a scalar node. Returns per-node gradients; nodes
    /// unreachable from the loss keep `None`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<T>> {
        if self.value(loss).numel() != 1 {
            return Err(Error::dimension("backward requires a scalar loss node"));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(T::ONE));

        for id in (0..=loss.0).rev() {
            if !self.nodes[id].requires_grad {
                grads[id] = None;
                continue;
            }
            let Some(gy) = grads[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Leaf => {}
                Op::Conv2d { x, w, b } => {
                    if self.requires(*x) {
                        let gx = self.grad_buf(&mut grads, *x);
                        conv2d_backward_input(&gy, self.value(*w), gx);
                    }
                    if self.requires(*w) {
                        let gw = self.grad_buf(&mut grads, *w);
                        conv2d_backward_weight(&gy, self.value(*x), gw);
                    }
                    if self.requires(*b) {
                        let gb = self.grad_buf(&mut grads, *b);
                        conv2d_backward_bias(&gy, gb);
                    }
                }
                Op::LeakyRelu { x, slope } => {
                    if self.requires(*x) {
                        let s = T::from_f64(*slope);
                        let xv = self.value(*x);
                        let gx = self.grad_buf(&mut grads, *x);
                        for ((g, &gyv), &xi) in
                            gx.data_mut().iter_mut().zip(gy.data()).zip(xv.data())
                        {
                            *g += if xi < T::ZERO { gyv * s } else { gyv };
                        }
                    }
                }
                Op::Add { a, b } => {
                    for &p in [a, b] {
                        if self.requires(p) {
                            let gp = self.grad_buf(&mut grads, p);
                            for (g, &gyv) in gp.data_mut().iter_mut().zip(gy.data()) {
                                *g += gyv;
                            }
                        }
                    }
                }
                Op::Scale { x, factor } => {
                    if self.requires(*x) {
                        let f = T::from_f64(*factor);
                        let gx = self.grad_buf(&mut grads, *x);
                        for (g, &gyv) in gx.data_mut().iter_mut().zip(gy.data()) {
                            *g = gyv.mul_add(f, *g);
                        }
                    }
                }
                Op::ConcatC { parts } => {
                    let [n, _, h, w] = gy.shape();
                    let hw = h * w;
                    let parts = parts.clone();
                    let mut c_off = 0;
                    for p in parts {
                        let pc = self.value(p).shape()[1];
                        if self.requires(p) {
                            let gp = self.grad_buf(&mut grads, p);
                            for ni in 0..n {
                                for c in 0..pc {
                                    let src = gy.offset(ni, c_off + c, 0, 0);
                                    let dst = gp.offset(ni, c, 0, 0);
                                    for k in 0..hw {
                                        gp.data_mut()[dst + k] += gy.data()[src + k];
                                    }
                                }
                            }
                        }
                        c_off += pc;
                    }
                }
                Op::NearestUp2 { x } => {
                    if self.requires(*x) {
                        let [_, c, h, w] = self.value(*x).shape();
                        let gx = self.grad_buf(&mut grads, *x);
                        let hw = h * w;
                        par::for_each_chunk_mut(gx.data_mut(), hw, |idx, chunk| {
                            let (ni, ci) = (idx / c, idx % c);
                            let gyc = gy.channel(ni, ci);
                            for y in 0..h {
                                for x2 in 0..w {
                                    let mut acc = T::ZERO;
                                    for a in 0..2 {
                                        for b2 in 0..2 {
                                            acc += gyc[(2 * y + a) * 2 * w + 2 * x2 + b2];
                                        }
                                    }
                                    chunk[y * w + x2] += acc;
                                }
                            }
                        });
                    }
                }
                Op::BicubicUp2 { x } => {
                    if self.requires(*x) {
                        let xs = self.value(*x).shape();
                        let gx = self.grad_buf(&mut grads, *x);
                        bicubic_up2_backward(&gy, xs, gx);
                    }
                }
                Op::L1Loss { pred, target } => {
                    let g = gy.data()[0];
                    let scale = g.to_f64() / self.value(*pred).numel() as f64;
                    let s = T::from_f64(scale);
                    let pv = self.value(*pred);
                    let tv = self.value(*target);
                    if self.requires(*pred) {
                        let gp = self.grad_buf(&mut grads, *pred);
                        for ((g, &p), &t) in
                            gp.data_mut().iter_mut().zip(pv.data()).zip(tv.data())
                        {
                            // Subgradient 0 at exact ties.
                            if p > t {
                                *g += s;
                            } else if p < t {
                                *g += -s;
                            }
                        }
                    }
                    if self.requires(*target) {
                        let gt = self.grad_buf(&mut grads, *target);
                        for ((g, &p), &t) in
                            gt.data_mut().iter_mut().zip(pv.data()).zip(tv.data())
                        {
                            if p > t {
                                *g += -s;
                            } else if p < t {
                                *g += s;
                            }
                        }
                    }
                }
                Op::WeightedSum { x, w } => {
                    let g = gy.data()[0];
                    for (src, other) in [(*x, *w), (*w, *x)] {
                        if self.requires(src) {
                            let ov = self.value(other);
                            let gs = grads[src.0].get_or_insert_with(|| {
                                Tensor::zeros(self.nodes[src.0].value.shape())
                            });
                            for (gv, &o) in gs.data_mut().iter_mut().zip(ov.data()) {
                                *gv = o.mul_add(g, *gv);
                            }
                        }
                    }
                }
            }
            grads[id] = Some(gy);
        }
        Ok(Gradients { grads })
    }

    #[allow(clippy::mut_from_ref)]
    fn grad_buf<'g>(
        &self,
        grads: &'g mut [Option<Tensor<T>>],
        id: NodeId,
    ) -> &'g mut Tensor<T> {
        grads[id.0].get_or_insert_with(|| Tensor::zeros(self.nodes[id.0].value.shape()))
    }
}

/// Gradient table produced by [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Elem> Gradients<T> {
    pub fn get(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor<T>> {
        self.grads.get_mut(id.0).and_then(|g| g.take())
    }
}

/// Copy every (n, c) plane of `t` into a buffer with a one-pixel zero
/// border (plus two trailing slack elements so the fused stencil may read
/// past the last row). Returns (buffer, padded row stride, plane size).
fn pad_planes<T: Elem>(t: &Tensor<T>) -> (Vec<T>, usize, usize) {
    let [n, c, h, w] = t.shape();
    let stride = w + 2;
    let plane = (h + 2) * stride;
    let mut pad = vec![T::ZERO; n * c * plane + 2];
    for ni in 0..n {
        for ci in 0..c {
            let src = t.channel(ni, ci);
            let base = (ni * c + ci) * plane;
            for y in 0..h {
                let dst = base + (y + 1) * stride + 1;
                pad[dst..dst + w].copy_from_slice(&src[y * w..(y + 1) * w]);
            }
        }
    }
    (pad, stride, plane)
}

/// Fused 9-tap stencil over a whole channel: `acc[i] += sum_k w9[k] *
/// xp[i + k-th tap offset]` for every position of the padded row layout.
/// The two pad columns of each `acc` row accumulate garbage that the caller
/// never copies out; in exchange the loop has no edge cases and vectorizes.
#[inline]
fn stencil_plane<T: Elem>(acc: &mut [T], xp: &[T], stride: usize, w9: &[T]) {
    let n = acc.len();
    let xp = &xp[..n + 2 * stride + 2];
    let w9 = &w9[..9];
    let s = stride;
    for i in 0..n {
        let a = xp[i] * w9[0] + xp[i + 1] * w9[1] + xp[i + 2] * w9[2];
        let b = xp[i + s] * w9[3] + xp[i + s + 1] * w9[4] + xp[i + s + 2] * w9[5];
        let c = xp[i + 2 * s] * w9[6] + xp[i + 2 * s + 1] * w9[7] + xp[i + 2 * s + 2] * w9[8];
        acc[i] += (a + b) + c;
    }
}

pub(crate) fn conv2d_forward<T: Elem>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let [n_batch, ci, h, width] = x.shape();
    let co = w.shape()[0];
    let mut out = Tensor::zeros([n_batch, co, h, width]);
    let hw = h * width;
    let (wd, bd) = (w.data(), b.data());
    let (pad, stride, plane) = pad_planes(x);
    par::for_each_chunk_mut(out.data_mut(), hw, |idx, out_hw| {
        let (n, c_out) = (idx / co, idx % co);
        let mut acc = vec![bd[c_out]; h * stride];
        for c_in in 0..ci {
            let xp = &pad[(n * ci + c_in) * plane..];
            let w9 = &wd[(c_out * ci + c_in) * 9..(c_out * ci + c_in) * 9 + 9];
            stencil_plane(&mut acc, xp, stride, w9);
        }
        for y in 0..h {
            out_hw[y * width..(y + 1) * width]
                .copy_from_slice(&acc[y * stride..y * stride + width]);
        }
    });
    out
}

fn conv2d_backward_input<T: Elem>(gy: &Tensor<T>, w: &Tensor<T>, gx: &mut Tensor<T>) {
    let [_, ci, h, width] = gx.shape();
    let co = w.shape()[0];
    let hw = h * width;
    let wd = w.data();
    let (pad, stride, plane) = pad_planes(gy);
    par::for_each_chunk_mut(gx.data_mut(), hw, |idx, gx_hw| {
        let (n, c_in) = (idx / ci, idx % ci);
        let mut acc = vec![T::ZERO; h * stride];
        for c_out in 0..co {
            let gp = &pad[(n * co + c_out) * plane..];
            let w9 = &wd[(c_out * ci + c_in) * 9..(c_out * ci + c_in) * 9 + 9];
            // Full correlation = stencil with the 180-degree rotated kernel.
            let wr: [T; 9] = std::array::from_fn(|k| w9[8 - k]);
            stencil_plane(&mut acc, gp, stride, &wr);
        }
        for y in 0..h {
            let row = &acc[y * stride..y * stride + width];
            for (o, &v) in gx_hw[y * width..(y + 1) * width].iter_mut().zip(row) {
                *o += v;
            }
        }
    });
}

/// Fixed-order 8-lane dot product (deterministic, vectorizable).
fn dot4<T: Elem>(a: &[T], b: &[T]) -> T {
    let n = a.len();
    let b = &b[..n];
    let mut lanes = [T::ZERO; 8];
    let blocks = n / 8;
    for k in 0..blocks {
        let (a8, b8) = (&a[8 * k..8 * k + 8], &b[8 * k..8 * k + 8]);
        for l in 0..8 {
            lanes[l] = lanes[l] + a8[l] * b8[l];
        }
    }
    let mut rest = T::ZERO;
    for i in 8 * blocks..n {
        rest = rest + a[i] * b[i];
    }
    let s01 = lanes[0] + lanes[1];
    let s23 = lanes[2] + lanes[3];
    let s45 = lanes[4] + lanes[5];
    let s67 = lanes[6] + lanes[7];
    ((s01 + s23) + (s45 + s67)) + rest
}

fn conv2d_backward_weight<T: Elem>(gy: &Tensor<T>, x: &Tensor<T>, gw: &mut Tensor<T>) {
    let [n_batch, ci, h, width] = x.shape();
    let co = gy.shape()[1];
    debug_assert_eq!(gw.shape(), [co, ci, 3, 3]);
    let (xpad, stride, plane) = pad_planes(x);
    let (gpad, _, _) = pad_planes(gy);
    // dW[k] is one long dot product between the padded x plane and the
    // padded gy plane shifted by the tap offset; the zero borders cancel
    // every out-of-range pairing.
    let span_start = stride + 1;
    let span_len = h * stride + width + 1 - span_start;
    par::for_each_chunk_mut(gw.data_mut(), ci * 9, |c_out, gw_slice| {
        for n in 0..n_batch {
            let gp = &gpad[(n * co + c_out) * plane..(n * co + c_out + 1) * plane];
            for c_in in 0..ci {
                let xp = &xpad[(n * ci + c_in) * plane..(n * ci + c_in + 1) * plane];
                let xs = &xp[span_start..span_start + span_len];
                for (k, slot) in gw_slice[c_in * 9..c_in * 9 + 9].iter_mut().enumerate() {
                    let off = (1 - (k / 3) as isize) * stride as isize + 1 - (k % 3) as isize;
                    let gs_start = (span_start as isize + off) as usize;
                    *slot += dot4(xs, &gp[gs_start..gs_start + span_len]);
                }
            }
        }
    });
}

fn conv2d_backward_bias<T: Elem>(gy: &Tensor<T>, gb: &mut Tensor<T>) {
    let n_batch = gy.shape()[0];
    par::for_each_chunk_mut(gb.data_mut(), 1, |c_out, gb_v| {
        let mut acc = T::ZERO;
        for n in 0..n_batch {
            for &v in gy.channel(n, c_out) {
                acc += v;
            }
        }
        gb_v[0] += acc;
    });
}

// Catmull-Rom taps for the two output parities of an aligned 2x upsample.
// Even outputs sample at base - 0.25 (taps on [base-2 ..= base+1]); odd
// outputs at base + 0.25 (taps on [base-1 ..= base+2]).
const BICUBIC_EVEN: [f64; 4] = [-3.0 / 128.0, 29.0 / 128.0, 111.0 / 128.0, -9.0 / 128.0];
const BICUBIC_ODD: [f64; 4] = [-9.0 / 128.0, 111.0 / 128.0, 29.0 / 128.0, -3.0 / 128.0];

/// Per-output-index (tap indices, weights), edge-replicated.
fn bicubic_taps(n_in: usize) -> Vec<([usize; 4], [f64; 4])> {
    (0..2 * n_in)
        .map(|o| {
            let base = o / 2;
            let (start, weights) = if o % 2 == 0 {
                (base as i64 - 2, BICUBIC_EVEN)
            } else {
                (base as i64 - 1, BICUBIC_ODD)
            };
            let idx = std::array::from_fn(|k| {
                (start + k as i64).clamp(0, n_in as i64 - 1) as usize
            });
            (idx, weights)
        })
        .collect()
}

fn bicubic_up2_forward<T: Elem>(x: &Tensor<T>) -> Tensor<T> {
    let [n, c, h, w] = x.shape();
    let rows = bicubic_taps(h);
    let cols = bicubic_taps(w);
    let mut out = Tensor::zeros([n, c, 2 * h, 2 * w]);
    let ohw = 4 * h * w;
    par::for_each_chunk_mut(out.data_mut(), ohw, |idx, chunk| {
        let (ni, ci) = (idx / c, idx % c);
        let src = x.channel(ni, ci);
        for (oy, (ry, wy)) in rows.iter().enumerate() {
            for (ox, (cx, wx)) in cols.iter().enumerate() {
                let mut acc = 0.0f64;
                for (yy, wyv) in ry.iter().zip(wy) {
                    let row = &src[yy * w..(yy + 1) * w];
                    let mut racc = 0.0f64;
                    for (xx, wxv) in cx.iter().zip(wx) {
                        racc += wxv * row[*xx].to_f64();
                    }
                    acc += wyv * racc;
                }
                chunk[oy * 2 * w + ox] = T::from_f64(acc);
            }
        }
    });
    out
}

fn bicubic_up2_backward<T: Elem>(gy: &Tensor<T>, xs: [usize; 4], gx: &mut Tensor<T>) {
    let [_, c, h, w] = xs;
    let rows = bicubic_taps(h);
    let cols = bicubic_taps(w);
    let hw = h * w;
    par::for_each_chunk_mut(gx.data_mut(), hw, |idx, chunk| {
        let (ni, ci) = (idx / c, idx % c);
        let g = gy.channel(ni, ci);
        for (oy, (ry, wy)) in rows.iter().enumerate() {
            for (ox, (cx, wx)) in cols.iter().enumerate() {
                let gv = g[oy * 2 * w + ox].to_f64();
                for (yy, wyv) in ry.iter().zip(wy) {
                    for (xx, wxv) in cx.iter().zip(wx) {
                        chunk[yy * w + xx] += T::from_f64(gv * wyv * wxv);
                    }
                }
            }
        }
    });
}
