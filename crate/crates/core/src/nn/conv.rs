//! 3D convolution kernels in cross-correlation semantics.
//!
//! Everything reduces to three primitives:
//! - `gather`: out[n,a,o] = sum_{b,k} w[a,b,k] * x[n,b, o*s - p + k]
//! - `scatter`: out[n,b,j] = sum_{a,k, j = i*s - p + k} w[a,b,k] * x[n,a,i]
//! - `grad_weight`: G[a,b,k] = sum_{n,o} A[n,a,o] * B[n,b, o*s - p + k]
//!
//! A convolution's forward pass is `gather`; its input gradient and a
//! transposed convolution's forward pass are both `scatter`; the transposed
//! convolution's input gradient is `gather` again. The weight layouts line
//! up so no kernel tensor ever needs reordering: conv weights are
//! [c_out, c_in, k, k, k], transposed-conv weights [c_in, c_out, k, k, k].
//!
//! Work is parallelized over (sample, channel) slabs; each slab is written
//! by exactly one task with a fixed inner loop order, so results do not
//! depend on scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// floor((in + 2*pad - k) / stride) + 1
pub fn conv3d_out_size(in_size: usize, k: usize, stride: usize, pad: usize) -> Result<usize> {
    let numer = in_size as i64 + 2 * pad as i64 - k as i64;
    if numer < 0 {
        return Err(Error::ShapeMismatch(format!(
            "kernel {} larger than padded input {}",
            k,
            in_size + 2 * pad
        )));
    }
    Ok((numer / stride as i64) as usize + 1)
}

/// stride*(in - 1) + k - 2*pad + output_padding
pub fn convt3d_out_size(
    in_size: usize,
    k: usize,
    stride: usize,
    pad: usize,
    output_padding: usize,
) -> Result<usize> {
    let size = stride as i64 * (in_size as i64 - 1) + k as i64 - 2 * pad as i64
        + output_padding as i64;
    if size < 1 {
        return Err(Error::ShapeMismatch(format!(
            "transposed conv output collapses: in {} k {} stride {} pad {}",
            in_size, k, stride, pad
        )));
    }
    Ok(size as usize)
}

fn split_ncdhw(t: &Tensor, what: &str) -> Result<(usize, usize, [usize; 3])> {
    let s = t.shape();
    if s.len() != 5 {
        return Err(Error::ShapeMismatch(format!(
            "{} must be 5-D [n, c, d, h, w], got {:?}",
            what, s
        )));
    }
    Ok((s[0], s[1], [s[2], s[3], s[4]]))
}

fn check_weight(w: &Tensor, what: &str) -> Result<(usize, usize, usize)> {
    let s = w.shape();
    if s.len() != 5 || s[2] != s[3] || s[3] != s[4] {
        return Err(Error::ShapeMismatch(format!(
            "{} weight must be [ca, cb, k, k, k], got {:?}",
            what, s
        )));
    }
    Ok((s[0], s[1], s[2]))
}

/// Valid output range [lo, hi) so that `o*stride - pad + k_off` stays inside
/// [0, in_size).
#[inline]
fn valid_range(k_off: usize, pad: usize, stride: usize, in_size: usize, out_size: usize) -> (usize, usize) {
    let s = stride as i64;
    let shift = pad as i64 - k_off as i64;
    let lo = if shift > 0 {
        (shift + s - 1) / s
    } else {
        0
    };
    let hi_numer = in_size as i64 - 1 + pad as i64 - k_off as i64;
    if hi_numer < 0 {
        return (0, 0);
    }
    let hi = (hi_numer / s + 1).min(out_size as i64);
    if lo >= hi {
        (0, 0)
    } else {
        (lo as usize, hi as usize)
    }
}

/// out[n,a,o] = bias[a] + sum_{b,k} w[a,b,k] * x[n,b, o*s - p + k]
fn gather(
    x: &Tensor,
    w: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    pad: usize,
    out_sp: [usize; 3],
) -> Result<Tensor> {
    let (n, cb, in_sp) = split_ncdhw(x, "input")?;
    let (ca, cb_w, k) = check_weight(w, "gather")?;
    if cb != cb_w {
        return Err(Error::ShapeMismatch(format!(
            "input channels {} vs weight inner channels {}",
            cb, cb_w
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [ca] {
            return Err(Error::ShapeMismatch(format!(
                "bias shape {:?}, expected [{}]",
                b.shape(),
                ca
            )));
        }
    }

    let [di, hi, wi] = in_sp;
    let [do_, ho, wo] = out_sp;
    let in_slab = di * hi * wi;
    let out_slab = do_ * ho * wo;
    let ksq = k * k * k;

    let mut out = Tensor::zeros(&[n, ca, do_, ho, wo]);
    let xd = x.data();
    let wd = w.data();

    out.data_mut()
        .par_chunks_mut(out_slab)
        .enumerate()
        .for_each(|(slab_idx, out_data)| {
            let ni = slab_idx / ca;
            let a = slab_idx % ca;
            if let Some(b) = bias {
                let bv = b.data()[a];
                for v in out_data.iter_mut() {
                    *v = bv;
                }
            }
            for b_ch in 0..cb {
                let x_base = (ni * cb + b_ch) * in_slab;
                let w_base = (a * cb + b_ch) * ksq;
                for kd in 0..k {
                    let (od_lo, od_hi) = valid_range(kd, pad, stride, di, do_);
                    for od in od_lo..od_hi {
                        let id = od * stride + kd - pad;
                        for kh in 0..k {
                            let (oh_lo, oh_hi) = valid_range(kh, pad, stride, hi, ho);
                            for oh in oh_lo..oh_hi {
                                let ih = oh * stride + kh - pad;
                                let out_row = &mut out_data
                                    [(od * ho + oh) * wo..(od * ho + oh) * wo + wo];
                                let in_row_base = x_base + (id * hi + ih) * wi;
                                for kw in 0..k {
                                    let (ow_lo, ow_hi) =
                                        valid_range(kw, pad, stride, wi, wo);
                                    if ow_lo >= ow_hi {
                                        continue;
                                    }
                                    let wv = wd[w_base + (kd * k + kh) * k + kw];
                                    let mut iw = ow_lo * stride + kw - pad;
                                    for out_v in &mut out_row[ow_lo..ow_hi] {
                                        *out_v += wv * xd[in_row_base + iw];
                                        iw += stride;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    Ok(out)
}

/// out[n,b,j] = bias[b] + sum_{a,k} w[a,b,k] * x[n,a,i] over i*s - p + k = j
fn scatter(
    x: &Tensor,
    w: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    pad: usize,
    out_sp: [usize; 3],
) -> Result<Tensor> {
    let (n, ca, in_sp) = split_ncdhw(x, "input")?;
    let (ca_w, cb, k) = check_weight(w, "scatter")?;
    if ca != ca_w {
        return Err(Error::ShapeMismatch(format!(
            "input channels {} vs weight outer channels {}",
            ca, ca_w
        )));
    }
    if let Some(b) = bias {
        if b.shape() != [cb] {
            return Err(Error::ShapeMismatch(format!(
                "bias shape {:?}, expected [{}]",
                b.shape(),
                cb
            )));
        }
    }

    let [di, hi, wi] = in_sp;
    let [do_, ho, wo] = out_sp;
    let in_slab = di * hi * wi;
    let out_slab = do_ * ho * wo;
    let ksq = k * k * k;

    let mut out = Tensor::zeros(&[n, cb, do_, ho, wo]);
    let xd = x.data();
    let wd = w.data();

    out.data_mut()
        .par_chunks_mut(out_slab)
        .enumerate()
        .for_each(|(slab_idx, out_data)| {
            let ni = slab_idx / cb;
            let b_ch = slab_idx % cb;
            if let Some(b) = bias {
                let bv = b.data()[b_ch];
                for v in out_data.iter_mut() {
                    *v = bv;
                }
            }
            for a in 0..ca {
                let x_base = (ni * ca + a) * in_slab;
                let w_base = (a * cb + b_ch) * ksq;
                for kd in 0..k {
                    // here the roles flip: i ranges over the input, j over
                    // the output, j = i*s - p + kd
                    let (id_lo, id_hi) = valid_range(kd, pad, stride, do_, di);
                    for id in id_lo..id_hi {
                        let jd = id * stride + kd - pad;
                        for kh in 0..k {
                            let (ih_lo, ih_hi) = valid_range(kh, pad, stride, ho, hi);
                            for ih in ih_lo..ih_hi {
                                let jh = ih * stride + kh - pad;
                                let out_row_base = (jd * ho + jh) * wo;
                                for kw in 0..k {
                                    let (iw_lo, iw_hi) =
                                        valid_range(kw, pad, stride, wo, wi);
                                    if iw_lo >= iw_hi {
                                        continue;
                                    }
                                    let wv = wd[w_base + (kd * k + kh) * k + kw];
                                    let in_row_base = x_base + (id * hi + ih) * wi;
                                    let mut jw = iw_lo * stride + kw - pad;
                                    for iw in iw_lo..iw_hi {
                                        out_data[out_row_base + jw] +=
                                            wv * xd[in_row_base + iw];
                                        jw += stride;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    Ok(out)
}

/// G[a,b,k] = sum_{n,o} A[n,a,o] * B[n,b, o*s - p + k]
fn grad_weight(
    a_t: &Tensor,
    b_t: &Tensor,
    stride: usize,
    pad: usize,
    k: usize,
) -> Result<Tensor> {
    let (n, ca, sp_a) = split_ncdhw(a_t, "grad-weight outer")?;
    let (n_b, cb, sp_b) = split_ncdhw(b_t, "grad-weight inner")?;
    if n != n_b {
        return Err(Error::ShapeMismatch(format!(
            "batch sizes differ: {} vs {}",
            n, n_b
        )));
    }

    let [da, ha, wa] = sp_a;
    let [db, hb, wb] = sp_b;
    let slab_a = da * ha * wa;
    let slab_b = db * hb * wb;
    let ksq = k * k * k;

    let mut g = Tensor::zeros(&[ca, cb, k, k, k]);
    let ad = a_t.data();
    let bd = b_t.data();

    g.data_mut()
        .par_chunks_mut(ksq)
        .enumerate()
        .for_each(|(pair_idx, g_block)| {
            let a_ch = pair_idx / cb;
            let b_ch = pair_idx % cb;
            for ni in 0..n {
                let a_base = (ni * ca + a_ch) * slab_a;
                let b_base = (ni * cb + b_ch) * slab_b;
                for kd in 0..k {
                    let (od_lo, od_hi) = valid_range(kd, pad, stride, db, da);
                    for kh in 0..k {
                        let (oh_lo, oh_hi) = valid_range(kh, pad, stride, hb, ha);
                        for kw in 0..k {
                            let (ow_lo, ow_hi) = valid_range(kw, pad, stride, wb, wa);
                            if ow_lo >= ow_hi {
                                continue;
                            }
                            let mut acc = 0.0;
                            for od in od_lo..od_hi {
                                let id = od * stride + kd - pad;
                                for oh in oh_lo..oh_hi {
                                    let ih = oh * stride + kh - pad;
                                    let a_row = a_base + (od * ha + oh) * wa;
                                    let b_row = b_base + (id * hb + ih) * wb;
                                    let mut iw = ow_lo * stride + kw - pad;
                                    for ow in ow_lo..ow_hi {
                                        acc += ad[a_row + ow] * bd[b_row + iw];
                                        iw += stride;
                                    }
                                }
                            }
                            g_block[(kd * k + kh) * k + kw] += acc;
                        }
                    }
                }
            }
        });
    Ok(g)
}

/// Sum over batch and spatial dims, one value per channel; the bias gradient.
pub fn channel_sums(g: &Tensor) -> Result<Tensor> {
    let (n, c, sp) = split_ncdhw(g, "channel sum")?;
    let slab = sp[0] * sp[1] * sp[2];
    let mut out = Tensor::zeros(&[c]);
    for ni in 0..n {
        for ch in 0..c {
            let base = (ni * c + ch) * slab;
            out.data_mut()[ch] += g.data()[base..base + slab].iter().sum::<f64>();
        }
    }
    Ok(out)
}

/// Forward convolution: weight [c_out, c_in, k, k, k].
pub fn conv3d_forward(
    x: &Tensor,
    w: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    let (_, _, in_sp) = split_ncdhw(x, "input")?;
    let (_, _, k) = check_weight(w, "conv3d")?;
    let out_sp = [
        conv3d_out_size(in_sp[0], k, stride, pad)?,
        conv3d_out_size(in_sp[1], k, stride, pad)?,
        conv3d_out_size(in_sp[2], k, stride, pad)?,
    ];
    gather(x, w, bias, stride, pad, out_sp)
}

/// Gradient of a convolution with respect to its input.
pub fn conv3d_grad_input(
    gout: &Tensor,
    w: &Tensor,
    stride: usize,
    pad: usize,
    in_sp: [usize; 3],
) -> Result<Tensor> {
    scatter(gout, w, None, stride, pad, in_sp)
}

/// Gradient of a convolution with respect to its weight.
pub fn conv3d_grad_weight(
    gout: &Tensor,
    x: &Tensor,
    stride: usize,
    pad: usize,
    k: usize,
) -> Result<Tensor> {
    grad_weight(gout, x, stride, pad, k)
}

/// Forward transposed convolution: weight [c_in, c_out, k, k, k].
pub fn convt3d_forward(
    x: &Tensor,
    w: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    pad: usize,
    output_padding: usize,
) -> Result<Tensor> {
    if output_padding >= stride {
        return Err(Error::InvalidConfig(format!(
            "output padding {} must be below stride {}",
            output_padding, stride
        )));
    }
    let (_, _, in_sp) = split_ncdhw(x, "input")?;
    let (_, _, k) = check_weight(w, "convt3d")?;
    let out_sp = [
        convt3d_out_size(in_sp[0], k, stride, pad, output_padding)?,
        convt3d_out_size(in_sp[1], k, stride, pad, output_padding)?,
        convt3d_out_size(in_sp[2], k, stride, pad, output_padding)?,
    ];
    scatter(x, w, bias, stride, pad, out_sp)
}

/// Gradient of a transposed convolution with respect to its input.
pub fn convt3d_grad_input(
    gout: &Tensor,
    w: &Tensor,
    stride: usize,
    pad: usize,
    in_sp: [usize; 3],
) -> Result<Tensor> {
    gather(gout, w, None, stride, pad, in_sp)
}

/// Gradient of a transposed convolution with respect to its weight.
pub fn convt3d_grad_weight(
    gout: &Tensor,
    x: &Tensor,
    stride: usize,
    pad: usize,
    k: usize,
) -> Result<Tensor> {
    grad_weight(x, gout, stride, pad, k)
}
