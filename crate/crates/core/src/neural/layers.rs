//! Differentiable layer primitives: 3x3 single-input-channel convolution
//! with zero padding, dynamic max pooling onto a fixed row grid, dense
//! layers, and activations. Each `*_backward` returns exact gradients for
//! the inputs its forward consumed.

/// Cross-correlation with `channels` 3x3 kernels over a single-channel
/// `h x w` input, zero padding 1 (same-size output `channels x h x w`).
pub fn conv2d_forward(
    input: &[f64],
    h: usize,
    w: usize,
    kernels: &[f64],
    bias: &[f64],
    channels: usize,
) -> Vec<f64> {
    assert!(h >= 1 && w >= 1, "conv input must be at least 1x1");
    assert_eq!(input.len(), h * w);
    assert_eq!(kernels.len(), channels * 9);
    assert_eq!(bias.len(), channels);
    let mut out = vec![0.0; channels * h * w];
    for c in 0..channels {
        let k = &kernels[c * 9..(c + 1) * 9];
        let plane = &mut out[c * h * w..(c + 1) * h * w];
        for y in 0..h {
            for x in 0..w {
                let mut acc = bias[c];
                for dy in 0..3usize {
                    let iy = y as isize + dy as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for dx in 0..3usize {
                        let ix = x as isize + dx as isize - 1;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        acc += k[dy * 3 + dx] * input[iy as usize * w + ix as usize];
                    }
                }
                plane[y * w + x] = acc;
            }
        }
    }
    out
}

/// Gradients of a conv2d output: returns (d_kernels, d_bias, d_input).
pub fn conv2d_backward(
    input: &[f64],
    h: usize,
    w: usize,
    kernels: &[f64],
    channels: usize,
    dout: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert_eq!(dout.len(), channels * h * w);
    let mut dk = vec![0.0; channels * 9];
    let mut db = vec![0.0; channels];
    let mut din = vec![0.0; h * w];
    for c in 0..channels {
        let k = &kernels[c * 9..(c + 1) * 9];
        let dplane = &dout[c * h * w..(c + 1) * h * w];
        let dkc = &mut dk[c * 9..(c + 1) * 9];
        for y in 0..h {
            for x in 0..w {
                let g = dplane[y * w + x];
                if g == 0.0 {
                    continue;
                }
                db[c] += g;
                for dy in 0..3usize {
                    let iy = y as isize + dy as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for dx in 0..3usize {
                        let ix = x as isize + dx as isize - 1;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let ii = iy as usize * w + ix as usize;
                        dkc[dy * 3 + dx] += g * input[ii];
                        din[ii] += g * k[dy * 3 + dx];
                    }
                }
            }
        }
    }
    (dk, db, din)
}

/// Partitions `valid_rows` rows into `groups` contiguous groups, as equal
/// as possible; when `valid_rows < groups`, boundary rows repeat so every
/// group is non-empty.
pub fn pool_groups(valid_rows: usize, groups: usize) -> Vec<(usize, usize)> {
    assert!(valid_rows >= 1, "dynamic pooling needs at least one valid row");
    (0..groups)
        .map(|g| {
            let start = g * valid_rows / groups;
            let end = ((g + 1) * valid_rows / groups).max(start + 1);
            (start, end)
        })
        .collect()
}

/// Max-pools each channel of a `channels x h x w` activation onto a
/// `groups x 1` grid: rows `[0, valid_rows)` are partitioned into row
/// groups, all `w` columns form one column group. Returns the pooled
/// values (`channels * groups`) and the flat argmax index per cell
/// (first occurrence on ties).
pub fn dynamic_pool_forward(
    input: &[f64],
    channels: usize,
    h: usize,
    w: usize,
    valid_rows: usize,
    groups: usize,
) -> (Vec<f64>, Vec<usize>) {
    let valid_rows = valid_rows.min(h);
    let bounds = pool_groups(valid_rows, groups);
    let mut out = vec![0.0; channels * groups];
    let mut argmax = vec![0usize; channels * groups];
    for c in 0..channels {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for (g, &(start, end)) in bounds.iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut best_idx = start * w;
            for y in start..end {
                for x in 0..w {
                    let v = plane[y * w + x];
                    if v > best {
                        best = v;
                        best_idx = y * w + x;
                    }
                }
            }
            out[c * groups + g] = best;
            argmax[c * groups + g] = best_idx;
        }
    }
    (out, argmax)
}

/// Routes pooled-cell gradients back to their argmax positions. Cells that
/// share an argmax (repeated boundary groups) accumulate.
pub fn dynamic_pool_backward(
    dout: &[f64],
    argmax: &[usize],
    channels: usize,
    h: usize,
    w: usize,
    groups: usize,
) -> Vec<f64> {
    let mut din = vec![0.0; channels * h * w];
    for c in 0..channels {
        for g in 0..groups {
            din[c * h * w + argmax[c * groups + g]] += dout[c * groups + g];
        }
    }
    din
}

/// `out = W x + b` with `W` stored row-major as `out_dim x in_dim`.
pub fn dense_forward(input: &[f64], weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let in_dim = input.len();
    let out_dim = bias.len();
    assert_eq!(
        weights.len(),
        in_dim * out_dim,
        "dense dimension mismatch: {} weights for {} x {}",
        weights.len(),
        out_dim,
        in_dim
    );
    (0..out_dim)
        .map(|o| {
            bias[o]
                + weights[o * in_dim..(o + 1) * in_dim]
                    .iter()
                    .zip(input)
                    .map(|(wv, x)| wv * x)
                    .sum::<f64>()
        })
        .collect()
}

/// Returns (d_weights, d_bias, d_input).
pub fn dense_backward(
    input: &[f64],
    weights: &[f64],
    dout: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let in_dim = input.len();
    let out_dim = dout.len();
    let mut dw = vec![0.0; in_dim * out_dim];
    let mut din = vec![0.0; in_dim];
    for o in 0..out_dim {
        let g = dout[o];
        if g == 0.0 {
            continue;
        }
        for i in 0..in_dim {
            dw[o * in_dim + i] = g * input[i];
            din[i] += g * weights[o * in_dim + i];
        }
    }
    (dw, dout.to_vec(), din)
}

pub fn relu_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// `d_input` given the forward input (gradient 0 at and below zero).
pub fn relu_backward(x: &[f64], dy: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(dy)
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect()
}

pub fn tanh_forward(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.tanh()).collect()
}

/// `d_input` given the forward *output* `y = tanh(x)`.
pub fn tanh_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    y.iter().zip(dy).map(|(&v, &g)| g * (1.0 - v * v)).collect()
}

/// Numerically stable softmax; normalizes across the whole slice (the
/// query-term axis for DRMM gating).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `d_logits` given the softmax output `y` and upstream `dy`.
pub fn softmax_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    let inner: f64 = y.iter().zip(dy).map(|(&s, &g)| s * g).sum();
    y.iter().zip(dy).map(|(&s, &g)| s * (g - inner)).collect()
}
