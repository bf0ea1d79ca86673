//! The closed operator set used by every model in the crate: LSTM cell,
//! dot-product attention, attended output, the two losses, dropout and
//! small activation helpers. Each trainable operator has an explicit
//! backward companion; the models chain them by hand.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::neural::linalg::{affine, axpy, dot, matvec_t_acc, outer_acc};
use crate::neural::params::ParamStore;
use crate::rng::Rng;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// LSTM cell
// ---------------------------------------------------------------------------

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct LstmCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    gate_i: Vec<f64>,
    gate_f: Vec<f64>,
    gate_g: Vec<f64>,
    gate_o: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Standard LSTM cell. Weight layout: `w_ih` is `4H x I`, `w_hh` is
/// `4H x H`, `b` is `4H`, gate order i, f, g, o.
///
/// c = f⊙c_prev + i⊙g, h = o⊙tanh(c).
pub fn lstm_step_raw(
    w_ih: &[f64],
    w_hh: &[f64],
    b: &[f64],
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> (Vec<f64>, Vec<f64>, LstmCache) {
    let hidden = h_prev.len();
    debug_assert_eq!(b.len(), 4 * hidden);
    debug_assert_eq!(w_ih.len(), 4 * hidden * x.len());
    debug_assert_eq!(w_hh.len(), 4 * hidden * hidden);
    debug_assert_eq!(c_prev.len(), hidden);

    let mut pre = vec![0.0; 4 * hidden];
    affine(w_ih, b, x, &mut pre);
    let mut rec = vec![0.0; 4 * hidden];
    crate::neural::linalg::matvec(w_hh, h_prev, &mut rec);
    for (p, r) in pre.iter_mut().zip(rec.iter()) {
        *p += r;
    }

    let gate_i: Vec<f64> = pre[..hidden].iter().map(|&z| sigmoid(z)).collect();
    let gate_f: Vec<f64> = pre[hidden..2 * hidden].iter().map(|&z| sigmoid(z)).collect();
    let gate_g: Vec<f64> = pre[2 * hidden..3 * hidden].iter().map(|&z| z.tanh()).collect();
    let gate_o: Vec<f64> = pre[3 * hidden..].iter().map(|&z| sigmoid(z)).collect();

    let mut c = vec![0.0; hidden];
    for j in 0..hidden {
        c[j] = gate_f[j] * c_prev[j] + gate_i[j] * gate_g[j];
    }
    let tanh_c: Vec<f64> = c.iter().map(|&v| v.tanh()).collect();
    let h: Vec<f64> = (0..hidden).map(|j| gate_o[j] * tanh_c[j]).collect();

    let cache = LstmCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gate_i,
        gate_f,
        gate_g,
        gate_o,
        tanh_c,
    };
    (h, c, cache)
}

/// Store-level wrapper: weights live under `{prefix}.w_ih`, `{prefix}.w_hh`,
/// `{prefix}.b`.
pub fn lstm_step(
    params: &ParamStore,
    prefix: &str,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> (Vec<f64>, Vec<f64>, LstmCache) {
    lstm_step_raw(
        params.value(&format!("{prefix}.w_ih")),
        params.value(&format!("{prefix}.w_hh")),
        params.value(&format!("{prefix}.b")),
        x,
        h_prev,
        c_prev,
    )
}

/// Gradients flowing out of one LSTM step.
pub struct LstmGrads {
    pub dx: Vec<f64>,
    pub dh_prev: Vec<f64>,
    pub dc_prev: Vec<f64>,
}

/// Backward through one cell step. `dh` and `dc` are the gradients on
/// this step's outputs; weight gradients are accumulated into the
/// provided slices.
#[allow(clippy::too_many_arguments)]
pub fn lstm_step_backward(
    w_ih: &[f64],
    w_hh: &[f64],
    dw_ih: &mut [f64],
    dw_hh: &mut [f64],
    db: &mut [f64],
    cache: &LstmCache,
    dh: &[f64],
    dc: &[f64],
) -> LstmGrads {
    let hidden = cache.h_prev.len();
    let mut dpre = vec![0.0; 4 * hidden];
    let mut dc_prev = vec![0.0; hidden];

    for j in 0..hidden {
        let tc = cache.tanh_c[j];
        let d_o = dh[j] * tc;
        let dc_total = dc[j] + dh[j] * cache.gate_o[j] * (1.0 - tc * tc);
        let d_i = dc_total * cache.gate_g[j];
        let d_f = dc_total * cache.c_prev[j];
        let d_g = dc_total * cache.gate_i[j];
        dc_prev[j] = dc_total * cache.gate_f[j];

        let (i, f, g, o) = (
            cache.gate_i[j],
            cache.gate_f[j],
            cache.gate_g[j],
            cache.gate_o[j],
        );
        dpre[j] = d_i * i * (1.0 - i);
        dpre[hidden + j] = d_f * f * (1.0 - f);
        dpre[2 * hidden + j] = d_g * (1.0 - g * g);
        dpre[3 * hidden + j] = d_o * o * (1.0 - o);
    }

    outer_acc(dw_ih, &dpre, &cache.x);
    outer_acc(dw_hh, &dpre, &cache.h_prev);
    axpy(1.0, &dpre, db);

    let mut dx = vec![0.0; cache.x.len()];
    matvec_t_acc(w_ih, &dpre, &mut dx);
    let mut dh_prev = vec![0.0; hidden];
    matvec_t_acc(w_hh, &dpre, &mut dh_prev);

    LstmGrads {
        dx,
        dh_prev,
        dc_prev,
    }
}

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

/// att_i = exp(e_i·h) / Σ_j exp(e_j·h), computed with max subtraction.
/// Weights are positive and sum to 1.
pub fn attention_weights(items: &[Vec<f64>], h: &[f64]) -> Result<Vec<f64>> {
    if items.is_empty() {
        return Err(Error::EmptyInput("attention_weights"));
    }
    for e in items {
        if e.len() != h.len() {
            return Err(Error::ShapeMismatch {
                op: "attention_weights",
                expected: format!("item dim {}", h.len()),
                got: format!("{}", e.len()),
            });
        }
    }
    let logits: Vec<f64> = items.iter().map(|e| dot(e, h)).collect();
    Ok(softmax(&logits))
}

/// Backward of [`attention_weights`]: given dL/datt, returns dL/dh and
/// accumulates dL/de_i into `ditems`.
pub fn attention_weights_backward(
    items: &[Vec<f64>],
    h: &[f64],
    att: &[f64],
    datt: &[f64],
    ditems: &mut [Vec<f64>],
) -> Vec<f64> {
    // Softmax jacobian: dlogit = att ⊙ (datt − att·datt).
    let inner: f64 = att.iter().zip(datt.iter()).map(|(a, d)| a * d).sum();
    let dlogits: Vec<f64> = att
        .iter()
        .zip(datt.iter())
        .map(|(a, d)| a * (d - inner))
        .collect();
    let mut dh = vec![0.0; h.len()];
    for (i, dl) in dlogits.iter().enumerate() {
        axpy(*dl, h, &mut ditems[i]);
        axpy(*dl, &items[i], &mut dh);
    }
    dh
}

/// out = tanh(W_a·(att·Emb) + B_a·h). `emb` holds the n item vectors;
/// `att` the attention weights over them.
pub struct AttendedCache {
    pub ctxv: Vec<f64>,
    pub out: Vec<f64>,
}

pub fn attended_output_raw(
    w_a: &[f64],
    b_a: &[f64],
    att: &[f64],
    emb: &[Vec<f64>],
    h: &[f64],
    out_dim: usize,
) -> (Vec<f64>, AttendedCache) {
    debug_assert_eq!(att.len(), emb.len());
    let item_dim = emb.first().map_or(0, |e| e.len());
    let mut ctxv = vec![0.0; item_dim];
    for (a, e) in att.iter().zip(emb.iter()) {
        axpy(*a, e, &mut ctxv);
    }
    let mut pre = vec![0.0; out_dim];
    crate::neural::linalg::matvec(w_a, &ctxv, &mut pre);
    let mut hpart = vec![0.0; out_dim];
    crate::neural::linalg::matvec(b_a, h, &mut hpart);
    for (p, hp) in pre.iter_mut().zip(hpart.iter()) {
        *p += hp;
    }
    let out: Vec<f64> = pre.iter().map(|z| z.tanh()).collect();
    let cache = AttendedCache {
        ctxv,
        out: out.clone(),
    };
    (out, cache)
}

/// Store-level wrapper with parameters `{prefix}.w_a` (out x item_dim)
/// and `{prefix}.b_a` (out x hidden).
pub fn attended_output(
    params: &ParamStore,
    prefix: &str,
    att: &[f64],
    emb: &[Vec<f64>],
    h: &[f64],
) -> (Vec<f64>, AttendedCache) {
    let w_a = params.value(&format!("{prefix}.w_a"));
    let b_a = params.value(&format!("{prefix}.b_a"));
    let out_dim = params.shape(&format!("{prefix}.w_a"))[0];
    attended_output_raw(w_a, b_a, att, emb, h, out_dim)
}

pub struct AttendedGrads {
    pub datt: Vec<f64>,
    pub dh: Vec<f64>,
    /// dL/dctxv, to be scattered onto the item embeddings by the caller
    /// (demb_i = att_i · dctxv).
    pub dctxv: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn attended_output_backward(
    w_a: &[f64],
    b_a: &[f64],
    dw_a: &mut [f64],
    db_a: &mut [f64],
    emb: &[Vec<f64>],
    h: &[f64],
    cache: &AttendedCache,
    dout: &[f64],
) -> AttendedGrads {
    let dpre: Vec<f64> = dout
        .iter()
        .zip(cache.out.iter())
        .map(|(d, o)| d * (1.0 - o * o))
        .collect();
    outer_acc(dw_a, &dpre, &cache.ctxv);
    outer_acc(db_a, &dpre, h);
    let mut dctxv = vec![0.0; cache.ctxv.len()];
    matvec_t_acc(w_a, &dpre, &mut dctxv);
    let mut dh = vec![0.0; h.len()];
    matvec_t_acc(b_a, &dpre, &mut dh);
    let datt: Vec<f64> = emb.iter().map(|e| dot(e, &dctxv)).collect();
    AttendedGrads { datt, dh, dctxv }
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Negative log softmax likelihood. Returns (loss, dL/dlogits).
pub fn softmax_xent(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::TargetOutOfRange {
            target,
            len: logits.len(),
        });
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln() + m;
    let loss = lse - logits[target];
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// Multi-label soft margin loss over C classes:
/// −(1/C)·Σ_c [y_c·log σ(x_c) + (1−y_c)·log(1−σ(x_c))].
/// Returns (loss, dL/dlogits).
pub fn mlsm_loss(logits: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            op: "mlsm_loss",
            expected: format!("{} targets", logits.len()),
            got: format!("{}", targets.len()),
        });
    }
    let c = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for (k, (&x, &y)) in logits.iter().zip(targets.iter()).enumerate() {
        // log σ(x) = −softplus(−x); log(1−σ(x)) = −softplus(x).
        loss += y * softplus(-x) + (1.0 - y) * softplus(x);
        grad[k] = (sigmoid(x) - y) / c;
    }
    Ok((loss / c, grad))
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

/// Inverted dropout: kept entries are scaled by 1/keep_prob so the
/// expectation is unchanged and inference needs no rescaling. Returns
/// the multiplicative mask (0 or 1/keep_prob per entry) applied in
/// place; feed the same mask to the backward pass.
pub fn dropout_mask(len: usize, keep_prob: f64, rng: &mut Rng) -> Vec<f64> {
    debug_assert!(keep_prob > 0.0 && keep_prob <= 1.0);
    if keep_prob >= 1.0 {
        return vec![1.0; len];
    }
    (0..len)
        .map(|_| {
            if rng.gen::<f64>() < keep_prob {
                1.0 / keep_prob
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn lstm_zero_weights_zero_inputs_give_zero_state() {
        let h = 3;
        let w_ih = vec![0.0; 4 * h * 2];
        let w_hh = vec![0.0; 4 * h * h];
        let b = vec![0.0; 4 * h];
        let (hv, cv, _) = lstm_step_raw(&w_ih, &w_hh, &b, &[0.0; 2], &[0.0; 3], &[0.0; 3]);
        assert!(hv.iter().all(|v| *v == 0.0));
        assert!(cv.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lstm_zero_weights_halve_cell_state() {
        // With zero weights every gate is σ(0)=0.5 and g=0, so
        // c_next = 0.5·c_prev.
        let h = 2;
        let w_ih = vec![0.0; 4 * h];
        let w_hh = vec![0.0; 4 * h * h];
        let b = vec![0.0; 4 * h];
        let c_prev = [0.8, -0.4];
        let (_, cv, _) = lstm_step_raw(&w_ih, &w_hh, &b, &[0.0; 1], &[0.0; 2], &c_prev);
        for (next, prev) in cv.iter().zip(c_prev.iter()) {
            assert!((next - 0.5 * prev).abs() < 1e-15);
        }
    }

    #[test]
    fn attention_identical_items_are_uniform() {
        let items = vec![vec![0.3, -0.2]; 4];
        let att = attention_weights(&items, &[1.0, 2.0]).unwrap();
        for a in &att {
            assert!((a - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_single_item_is_one() {
        let att = attention_weights(&[vec![5.0]], &[2.0]).unwrap();
        assert_eq!(att.len(), 1);
        assert!((att[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn attention_matches_hand_computed_softmax() {
        // Logits (0, ln 3) give weights (0.25, 0.75): the expected
        // values are 1/(1+3) and 3/(1+3) straight from the softmax
        // definition.
        let h = vec![1.0];
        let items = vec![vec![0.0], vec![3.0_f64.ln()]];
        let att = attention_weights(&items, &h).unwrap();
        assert!((att[0] - 0.25).abs() < 1e-12);
        assert!((att[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn attention_rejects_empty_and_mismatched() {
        assert!(attention_weights(&[], &[1.0]).is_err());
        assert!(attention_weights(&[vec![1.0, 2.0]], &[1.0]).is_err());
    }

    #[test]
    fn attended_output_zero_params_zero_output() {
        let (out, _) = attended_output_raw(
            &[0.0; 6],
            &[0.0; 4],
            &[0.5, 0.5],
            &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            &[1.0, 1.0],
            2,
        );
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn attended_output_one_hot_selects_item() {
        // With att one-hot on item 1, W_a = I and B_a = 0, the output
        // is tanh(e_1).
        let e1 = vec![0.3, -0.7];
        let w_a = [1.0, 0.0, 0.0, 1.0];
        let (out, _) = attended_output_raw(
            &w_a,
            &[0.0; 4],
            &[0.0, 1.0],
            &[vec![5.0, 5.0], e1.clone()],
            &[9.0, 9.0],
            2,
        );
        for (o, e) in out.iter().zip(e1.iter()) {
            assert!((o - e.tanh()).abs() < 1e-15);
        }
        // Output entries always in (−1, 1).
        assert!(out.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn xent_uniform_logits_is_log_vocab() {
        let (loss, _) = softmax_xent(&[0.0; 8], 3).unwrap();
        assert!((loss - (8.0_f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn xent_is_stable_at_huge_logits() {
        let (loss, grad) = softmax_xent(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.is_finite());
        assert!(loss.abs() < 1e-9);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn xent_rejects_out_of_range_target() {
        assert!(softmax_xent(&[0.0, 0.0], 2).is_err());
    }

    #[test]
    fn mlsm_zero_logits_is_ln_two() {
        let (loss, _) = mlsm_loss(&[0.0; 5], &[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((loss - (2.0_f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn mlsm_saturated_logits_vanish() {
        let (loss, _) = mlsm_loss(&[30.0, -30.0], &[1.0, 0.0]).unwrap();
        assert!(loss < 1e-12);
    }

    #[test]
    fn mlsm_rejects_length_mismatch() {
        assert!(mlsm_loss(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn argmax_ties_break_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
    }

    #[test]
    fn dropout_mask_is_zero_or_scaled() {
        let mut r = rng::seeded(1);
        let mask = dropout_mask(1000, 0.8, &mut r);
        let kept = mask.iter().filter(|m| **m > 0.0).count();
        assert!(mask.iter().all(|m| *m == 0.0 || (*m - 1.25).abs() < 1e-12));
        // Keep rate should be near 0.8.
        assert!((kept as f64 / 1000.0 - 0.8).abs() < 0.06);
    }
}
