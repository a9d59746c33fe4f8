//! Forward and backward kernels. Free functions over flat row-major slices;
//! the graph owns shapes and dispatch. Scalar reductions accumulate in f64.

pub const GELU_COEF: f32 = 0.044715;
pub const ATTN_MASK: f32 = -1e9;

fn sqrt_2_over_pi() -> f32 {
    (2.0f32 / std::f32::consts::PI).sqrt()
}

// ---- matmul: lhs [m,k] x rhs [k,n] -> out [m,n] ----

pub fn matmul(lhs: &[f32], rhs: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; m * n];
    for i in 0..m {
        let lrow = &lhs[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &l) in lrow.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let rrow = &rhs[p * n..(p + 1) * n];
            for (o, &r) in orow.iter_mut().zip(rrow) {
                *o += l * r;
            }
        }
    }
    out
}

/// dLhs = dOut x rhs^T
pub fn matmul_grad_lhs(dout: &[f32], rhs: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut dl = vec![0.0f32; m * k];
    for i in 0..m {
        let drow = &dout[i * n..(i + 1) * n];
        let lrow = &mut dl[i * k..(i + 1) * k];
        for p in 0..k {
            let rrow = &rhs[p * n..(p + 1) * n];
            let mut s = 0.0f32;
            for (d, r) in drow.iter().zip(rrow) {
                s += d * r;
            }
            lrow[p] = s;
        }
    }
    dl
}

/// dRhs = lhs^T x dOut
pub fn matmul_grad_rhs(lhs: &[f32], dout: &[f32], m: usize, k: usize, n: usize) -> Vec<f32> {
    let mut dr = vec![0.0f32; k * n];
    for i in 0..m {
        let lrow = &lhs[i * k..(i + 1) * k];
        let drow = &dout[i * n..(i + 1) * n];
        for (p, &l) in lrow.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let rrow = &mut dr[p * n..(p + 1) * n];
            for (r, &d) in rrow.iter_mut().zip(drow) {
                *r += l * d;
            }
        }
    }
    dr
}

// ---- elementwise ----

pub fn gelu(x: f32) -> f32 {
    let u = sqrt_2_over_pi() * (x + GELU_COEF * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

pub fn gelu_grad(x: f32) -> f32 {
    let c = sqrt_2_over_pi();
    let u = c * (x + GELU_COEF * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * GELU_COEF * x * x)
}

// ---- softmax over the last dim ----

pub fn softmax_rows(x: &[f32], row: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; x.len()];
    for (xr, or) in x.chunks_exact(row).zip(out.chunks_exact_mut(row)) {
        softmax_row(xr, or);
    }
    out
}

pub fn softmax_row(x: &[f32], out: &mut [f32]) {
    let max = x.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let mut denom = 0.0f64;
    for (o, &v) in out.iter_mut().zip(x) {
        let e = ((v - max) as f64).exp();
        *o = e as f32;
        denom += e;
    }
    let inv = (1.0 / denom) as f32;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

/// dX = p * (dY - sum(p * dY)) per row.
pub fn softmax_grad_rows(probs: &[f32], dout: &[f32], row: usize) -> Vec<f32> {
    let mut dx = vec![0.0f32; probs.len()];
    for ((pr, dr), xr) in probs
        .chunks_exact(row)
        .zip(dout.chunks_exact(row))
        .zip(dx.chunks_exact_mut(row))
    {
        let dot: f64 = pr.iter().zip(dr).map(|(&p, &d)| p as f64 * d as f64).sum();
        for ((x, &p), &d) in xr.iter_mut().zip(pr).zip(dr) {
            *x = p * (d - dot as f32);
        }
    }
    dx
}

// ---- layer norm (pure normalization, affine applied outside) ----

/// Returns (xhat, inv_std per row). Statistics in f64.
pub fn layer_norm_rows(x: &[f32], row: usize, eps: f32) -> (Vec<f32>, Vec<f32>) {
    let n_rows = x.len() / row;
    let mut out = vec![0.0f32; x.len()];
    let mut inv_std = vec![0.0f32; n_rows];
    for (r, (xr, or)) in x.chunks_exact(row).zip(out.chunks_exact_mut(row)).enumerate() {
        let mean: f64 = xr.iter().map(|&v| v as f64).sum::<f64>() / row as f64;
        let var: f64 =
            xr.iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>() / row as f64;
        let istd = 1.0 / (var + eps as f64).sqrt();
        inv_std[r] = istd as f32;
        for (o, &v) in or.iter_mut().zip(xr) {
            *o = ((v as f64 - mean) * istd) as f32;
        }
    }
    (out, inv_std)
}

pub fn layer_norm_grad_rows(
    xhat: &[f32],
    inv_std: &[f32],
    dout: &[f32],
    row: usize,
) -> Vec<f32> {
    let mut dx = vec![0.0f32; xhat.len()];
    for (r, ((hr, dr), xr)) in xhat
        .chunks_exact(row)
        .zip(dout.chunks_exact(row))
        .zip(dx.chunks_exact_mut(row))
        .enumerate()
    {
        let mean_d: f64 = dr.iter().map(|&v| v as f64).sum::<f64>() / row as f64;
        let mean_dh: f64 =
            dr.iter().zip(hr).map(|(&d, &h)| d as f64 * h as f64).sum::<f64>() / row as f64;
        let istd = inv_std[r] as f64;
        for ((x, &d), &h) in xr.iter_mut().zip(dr).zip(hr) {
            *x = (istd * (d as f64 - mean_d - h as f64 * mean_dh)) as f32;
        }
    }
    dx
}

// ---- fused multi-head attention ----

pub struct AttentionCache {
    /// Softmax probabilities, [batch, heads, seq, seq].
    pub probs: Vec<f32>,
}

/// q, k, v: [batch, seq, d_model]; pad_mask: optional [batch, seq] with 1 =
/// attend, 0 = masked key. Causal masking adds ATTN_MASK above the diagonal.
pub fn attention(
    q: &[f32],
    k: &[f32],
    v: &[f32],
    batch: usize,
    seq: usize,
    d_model: usize,
    n_heads: usize,
    causal: bool,
    pad_mask: Option<&[f32]>,
) -> (Vec<f32>, AttentionCache) {
    let dh = d_model / n_heads;
    let scale = 1.0 / (dh as f32).sqrt();
    let mut out = vec![0.0f32; batch * seq * d_model];
    let mut probs = vec![0.0f32; batch * n_heads * seq * seq];
    let mut scores = vec![0.0f32; seq];
    for b in 0..batch {
        for h in 0..n_heads {
            let off = h * dh;
            for s in 0..seq {
                let qrow = &q[(b * seq + s) * d_model + off..][..dh];
                for t in 0..seq {
                    let krow = &k[(b * seq + t) * d_model + off..][..dh];
                    let mut dot = 0.0f32;
                    for i in 0..dh {
                        dot += qrow[i] * krow[i];
                    }
                    let mut sc = dot * scale;
                    if causal && t > s {
                        sc += ATTN_MASK;
                    }
                    if let Some(m) = pad_mask {
                        if m[b * seq + t] == 0.0 {
                            sc += ATTN_MASK;
                        }
                    }
                    scores[t] = sc;
                }
                let prow = &mut probs[((b * n_heads + h) * seq + s) * seq..][..seq];
                softmax_row(&scores, prow);
                let orow = &mut out[(b * seq + s) * d_model + off..][..dh];
                for t in 0..seq {
                    let p = prow[t];
                    if p == 0.0 {
                        continue;
                    }
                    let vrow = &v[(b * seq + t) * d_model + off..][..dh];
                    for i in 0..dh {
                        orow[i] += p * vrow[i];
                    }
                }
            }
        }
    }
    (out, AttentionCache { probs })
}

/// Returns (dq, dk, dv).
#[allow(clippy::too_many_arguments)]
pub fn attention_grad(
    q: &[f32],
    k: &[f32],
    v: &[f32],
    cache: &AttentionCache,
    dout: &[f32],
    batch: usize,
    seq: usize,
    d_model: usize,
    n_heads: usize,
) -> (Vec<f32>, Vec<f32>, Vec<f32>) {
    let dh = d_model / n_heads;
    let scale = 1.0 / (dh as f32).sqrt();
    let mut dq = vec![0.0f32; q.len()];
    let mut dk = vec![0.0f32; k.len()];
    let mut dv = vec![0.0f32; v.len()];
    let mut dprobs = vec![0.0f32; seq];
    for b in 0..batch {
        for h in 0..n_heads {
            let off = h * dh;
            for s in 0..seq {
                let prow = &cache.probs[((b * n_heads + h) * seq + s) * seq..][..seq];
                let drow = &dout[(b * seq + s) * d_model + off..][..dh];
                // dV and dProbs
                let mut dot = 0.0f64;
                for t in 0..seq {
                    let vrow = &v[(b * seq + t) * d_model + off..][..dh];
                    let mut dp = 0.0f32;
                    for i in 0..dh {
                        dp += drow[i] * vrow[i];
                    }
                    dprobs[t] = dp;
                    dot += prow[t] as f64 * dp as f64;
                    let p = prow[t];
                    if p != 0.0 {
                        let dvrow = &mut dv[(b * seq + t) * d_model + off..][..dh];
                        for i in 0..dh {
                            dvrow[i] += p * drow[i];
                        }
                    }
                }
                // dScores through the softmax, then into q and k.
                let qrow = &q[(b * seq + s) * d_model + off..][..dh];
                let dqrow_base = (b * seq + s) * d_model + off;
                for t in 0..seq {
                    let ds = prow[t] * (dprobs[t] - dot as f32);
                    if ds == 0.0 {
                        continue;
                    }
                    let krow = &k[(b * seq + t) * d_model + off..][..dh];
                    let dkrow = &mut dk[(b * seq + t) * d_model + off..][..dh];
                    let g = ds * scale;
                    for i in 0..dh {
                        dq[dqrow_base + i] += g * krow[i];
                        dkrow[i] += g * qrow[i];
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}

// ---- scalar losses ----

/// Fused log-softmax + NLL over rows of width `classes`. `targets[r] < 0`
/// means the row is ignored. Returns (mean loss, probs, counted rows).
pub fn cross_entropy(
    logits: &[f32],
    classes: usize,
    targets: &[i64],
) -> (f64, Vec<f32>, usize) {
    let mut probs = vec![0.0f32; logits.len()];
    let mut total = 0.0f64;
    let mut counted = 0usize;
    for (r, (xr, pr)) in logits
        .chunks_exact(classes)
        .zip(probs.chunks_exact_mut(classes))
        .enumerate()
    {
        let max = xr.iter().cloned().fold(f32::NEG_INFINITY, f32::max) as f64;
        let mut denom = 0.0f64;
        for (p, &x) in pr.iter_mut().zip(xr) {
            let e = (x as f64 - max).exp();
            *p = e as f32;
            denom += e;
        }
        let inv = 1.0 / denom;
        for p in pr.iter_mut() {
            *p = (*p as f64 * inv) as f32;
        }
        let t = targets[r];
        if t >= 0 {
            let lse = max + denom.ln();
            total += lse - xr[t as usize] as f64;
            counted += 1;
        }
    }
    let mean = if counted > 0 { total / counted as f64 } else { 0.0 };
    (mean, probs, counted)
}

pub fn cross_entropy_grad(
    probs: &[f32],
    classes: usize,
    targets: &[i64],
    counted: usize,
    dloss: f32,
) -> Vec<f32> {
    let mut dx = vec![0.0f32; probs.len()];
    if counted == 0 {
        return dx;
    }
    let w = dloss / counted as f32;
    for (r, (pr, xr)) in probs.chunks_exact(classes).zip(dx.chunks_exact_mut(classes)).enumerate()
    {
        let t = targets[r];
        if t < 0 {
            continue;
        }
        for (j, (x, &p)) in xr.iter_mut().zip(pr).enumerate() {
            let ind = if j == t as usize { 1.0 } else { 0.0 };
            *x = (p - ind) * w;
        }
    }
    dx
}

pub fn kl_std_normal(mu: &[f32], logvar: &[f32], dim: usize) -> f64 {
    let rows = mu.len() / dim;
    let mut total = 0.0f64;
    for (m, lv) in mu.iter().zip(logvar) {
        let m = *m as f64;
        let lv = *lv as f64;
        total += 0.5 * (m * m + lv.exp() - lv - 1.0);
    }
    total / rows as f64
}
