//! Finite-difference gradient checking.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::neural::params::ParamStore;
use crate::rng::Rng;

/// Compare analytic gradients against central differences.
///
/// `f` evaluates the scalar loss for the current parameters and fills
/// the store's gradient slots (zeroing them first). The check runs `f`
/// once to capture the analytic gradient, then perturbs a sampled
/// subset of coordinates per parameter by ±epsilon and compares
/// (f(θ+ε)−f(θ−ε))/2ε against the captured gradient.
///
/// Returns the maximum relative error over all sampled coordinates,
/// where the relative error of (a, n) is |a−n| / max(|a|, |n|, 1).
pub fn grad_check<F>(
    mut f: F,
    store: &mut ParamStore,
    epsilon: f64,
    samples_per_param: usize,
    rng: &mut Rng,
) -> Result<f64>
where
    F: FnMut(&mut ParamStore) -> Result<f64>,
{
    let base = f(store)?;
    if !base.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let analytic: Vec<(String, Vec<f64>)> = store
        .iter()
        .map(|(name, p)| (name.to_string(), p.grad.data().to_vec()))
        .collect();

    let mut max_err: f64 = 0.0;
    for (name, grads) in &analytic {
        let n = grads.len();
        let indices: Vec<usize> = if n <= samples_per_param {
            (0..n).collect()
        } else {
            (0..samples_per_param).map(|_| rng.gen_range(0..n)).collect()
        };
        for &i in &indices {
            let original = store.value(name)[i];
            store.value_mut(name)[i] = original + epsilon;
            let plus = f(store)?;
            store.value_mut(name)[i] = original - epsilon;
            let minus = f(store)?;
            store.value_mut(name)[i] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = grads[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            max_err = max_err.max(err);
        }
    }
    // Leave the store with clean gradients.
    let _ = f(store)?;
    store.zero_grads();
    Ok(max_err)
}
