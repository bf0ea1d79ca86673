//! Slice-level kernels shared by the forward and backward passes.
//!
//! All loops are written over plain `f64` slices so the optimizer can
//! vectorize them; these are the hot paths of model training.

/// y = W·x + b, where W is `rows x cols` row-major.
pub fn affine(w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    let rows = y.len();
    let cols = x.len();
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(b.len(), rows);
    for r in 0..rows {
        let wr = &w[r * cols..(r + 1) * cols];
        let mut acc = b[r];
        for (wi, xi) in wr.iter().zip(x.iter()) {
            acc += wi * xi;
        }
        y[r] = acc;
    }
}

/// y = W·x (no bias).
pub fn matvec(w: &[f64], x: &[f64], y: &mut [f64]) {
    let rows = y.len();
    let cols = x.len();
    debug_assert_eq!(w.len(), rows * cols);
    for r in 0..rows {
        let wr = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (wi, xi) in wr.iter().zip(x.iter()) {
            acc += wi * xi;
        }
        y[r] = acc;
    }
}

/// dx += Wᵀ·dy, for W `rows x cols` row-major.
pub fn matvec_t_acc(w: &[f64], dy: &[f64], dx: &mut [f64]) {
    let rows = dy.len();
    let cols = dx.len();
    debug_assert_eq!(w.len(), rows * cols);
    for r in 0..rows {
        let g = dy[r];
        if g == 0.0 {
            continue;
        }
        let wr = &w[r * cols..(r + 1) * cols];
        for (dxi, wi) in dx.iter_mut().zip(wr.iter()) {
            *dxi += g * wi;
        }
    }
}

/// dW += dy ⊗ x (outer product accumulate).
pub fn outer_acc(dw: &mut [f64], dy: &[f64], x: &[f64]) {
    let cols = x.len();
    debug_assert_eq!(dw.len(), dy.len() * cols);
    for (r, g) in dy.iter().enumerate() {
        if *g == 0.0 {
            continue;
        }
        let row = &mut dw[r * cols..(r + 1) * cols];
        for (wi, xi) in row.iter_mut().zip(x.iter()) {
            *wi += g * xi;
        }
    }
}

/// y += a·x.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += a * xi;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_matches_by_hand() {
        // [1 2; 3 4]·[5,6] + [1,1] = [18, 40]
        let w = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 1.0];
        let x = [5.0, 6.0];
        let mut y = [0.0; 2];
        affine(&w, &b, &x, &mut y);
        assert_eq!(y, [18.0, 40.0]);
    }

    #[test]
    fn transpose_accumulate_matches_by_hand() {
        let w = [1.0, 2.0, 3.0, 4.0]; // 2x2
        let dy = [1.0, 10.0];
        let mut dx = [0.0; 2];
        matvec_t_acc(&w, &dy, &mut dx);
        // Wᵀ·dy = [1*1+3*10, 2*1+4*10]
        assert_eq!(dx, [31.0, 42.0]);
    }
}
