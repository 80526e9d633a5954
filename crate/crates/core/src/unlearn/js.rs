//! Jensen-Shannon divergence in bits.

use crate::nn::{Matrix, PROB_FLOOR};
use crate::{Error, Result};

/// `½·KL(p‖m) + ½·KL(q‖m)` with `m = (p+q)/2`, base-2 logs, so the result
/// lies in `[0, 1]`. Zero-probability terms contribute nothing.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Shape(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(js_unchecked(p, q))
}

pub(crate) fn js_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut kl_p = 0.0;
    let mut kl_q = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let mi = 0.5 * (pi + qi);
        if pi > 0.0 {
            kl_p += pi * (pi / mi).log2();
        }
        if qi > 0.0 {
            kl_q += qi * (qi / mi).log2();
        }
    }
    (0.5 * (kl_p + kl_q)).clamp(0.0, 1.0)
}

/// Mean JS divergence between matching rows of two probability matrices.
pub fn mean_js(p: &Matrix, q: &Matrix) -> Result<f64> {
    if p.rows() != q.rows() || p.cols() != q.cols() {
        return Err(Error::Shape(format!(
            "{}x{} vs {}x{} probability matrices",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols()
        )));
    }
    if p.rows() == 0 {
        return Err(Error::Domain("mean JS over zero rows".into()));
    }
    let total: f64 = (0..p.rows()).map(|b| js_unchecked(p.row(b), q.row(b))).sum();
    Ok(total / p.rows() as f64)
}

/// Sum of row JS divergences and the gradient of `scale · Σ JS` with
/// respect to the logits that produced `p`. `q` is held fixed.
pub(crate) fn js_logit_grad(p: &Matrix, q: &Matrix, scale: f64) -> (f64, Matrix) {
    let mut total = 0.0;
    let mut d = Matrix::zeros(p.rows(), p.cols());
    let inv_ln2 = std::f64::consts::LN_2.recip();
    let mut dp = vec![0.0; p.cols()];
    for b in 0..p.rows() {
        let (pr, qr) = (p.row(b), q.row(b));
        total += js_unchecked(pr, qr);
        // dJS/dp_i = ½·log2(p_i / m_i)
        for ((g, &pi), &qi) in dp.iter_mut().zip(pr).zip(qr) {
            let pf = pi.max(PROB_FLOOR);
            let mi = 0.5 * (pf + qi);
            *g = 0.5 * (pf / mi).ln() * inv_ln2;
        }
        let inner: f64 = dp.iter().zip(pr).map(|(g, p)| g * p).sum();
        for ((out, &g), &pi) in d.row_mut(b).iter_mut().zip(&dp).zip(pr) {
            *out = scale * pi * (g - inner);
        }
    }
    (total, d)
}
