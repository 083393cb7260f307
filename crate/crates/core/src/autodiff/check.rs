use crate::error::{Error, Result};
use crate::params::ParameterStore;

/// Central finite differences `(f(θ + εe_i) - f(θ - εe_i)) / 2ε` for every
/// coordinate of every array in `theta`.
pub fn finite_difference_gradient<F>(
    mut f: F,
    theta: &ParameterStore,
    eps: f64,
) -> Result<ParameterStore>
where
    F: FnMut(&ParameterStore) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be > 0, got {eps}"
        )));
    }
    let mut grads = theta.zeros_like();
    let mut probe = theta.clone();
    let names: Vec<String> = theta.names().map(str::to_string).collect();
    for name in &names {
        let n = theta.get(name)?.len();
        for i in 0..n {
            let orig = theta.get(name)?.data()[i];
            probe.get_mut(name)?.data_mut()[i] = orig + eps;
            let plus = f(&probe)?;
            probe.get_mut(name)?.data_mut()[i] = orig - eps;
            let minus = f(&probe)?;
            probe.get_mut(name)?.data_mut()[i] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFiniteEvaluation {
                    name: name.clone(),
                    index: i,
                });
            }
            grads.get_mut(name)?.data_mut()[i] = (plus - minus) / (2.0 * eps);
        }
    }
    Ok(grads)
}
