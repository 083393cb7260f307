use crate::error::{Error, Result};
use crate::nn::mlp::is_weight;
use crate::params::ParameterStore;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    /// Classifier setting: β₁ = 0.5, β₂ = 0.999.
    pub const CLASSIFIER: Self = Self {
        beta1: 0.5,
        beta2: 0.999,
        eps: 1e-8,
    };

    /// Generator / discriminator setting: β₁ = 0, β₂ = 0.9.
    pub const GAN: Self = Self {
        beta1: 0.0,
        beta2: 0.9,
        eps: 1e-8,
    };
}

/// Moment estimates and step count for one [`ParameterStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: ParameterStore,
    pub v: ParameterStore,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParameterStore) -> Self {
        Self {
            config,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `params`.
///
/// `weight_decay * θ` is added to the gradient of every weight array (not the
/// biases) before the moments are updated.
pub fn adam_step(
    params: &mut ParameterStore,
    grads: &ParameterStore,
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be > 0, got {lr}"
        )));
    }
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::InvalidArgument(format!(
            "adam: {} params, {} grads, {} moment arrays",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    let AdamConfig { beta1, beta2, eps } = state.config;
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (name, theta) in params.iter_mut() {
        let g = grads.get(name)?;
        let m = state.m.get_mut(name)?;
        if g.shape() != theta.shape() || m.shape() != theta.shape() {
            return Err(Error::Shape {
                op: "adam_step",
                lhs: theta.shape().to_vec(),
                rhs: g.shape().to_vec(),
            });
        }
        let decay = if is_weight(name) { weight_decay } else { 0.0 };
        let v = state.v.get_mut(name)?;
        for (((th, &gi), mi), vi) in theta
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            let gi = if decay != 0.0 { gi + decay * *th } else { gi };
            *mi = beta1 * *mi + (1.0 - beta1) * gi;
            *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *th -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Array;

    fn store(name: &str, v: f64) -> ParameterStore {
        let mut s = ParameterStore::new();
        s.insert(name, Array::vector(vec![v]));
        s
    }

    #[test]
    fn single_step_hand_values() {
        let mut p = store("w0", 0.0);
        let g = store("w0", 0.5);
        let mut st = AdamState::new(AdamConfig::CLASSIFIER, &p);
        adam_step(&mut p, &g, &mut st, 0.001, 0.0).unwrap();
        assert_eq!(st.t, 1);
        assert!((st.m.get("w0").unwrap().item() - 0.25).abs() < 1e-15);
        assert!((st.v.get("w0").unwrap().item() - 2.5e-4).abs() < 1e-18);
        // -0.001 * 0.5 / (0.5 + 1e-8)
        let expected = -0.0009999999800000004;
        assert!((p.get("w0").unwrap().item() - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = store("w0", 1.25);
        let g = store("w0", 0.0);
        let mut st = AdamState::new(AdamConfig::CLASSIFIER, &p);
        adam_step(&mut p, &g, &mut st, 0.001, 0.0).unwrap();
        assert_eq!(p.get("w0").unwrap().item(), 1.25);
    }

    #[test]
    fn decay_skips_biases() {
        let mut p = store("b0", 2.0);
        let g = store("b0", 0.0);
        let mut st = AdamState::new(AdamConfig::CLASSIFIER, &p);
        adam_step(&mut p, &g, &mut st, 0.001, 0.5).unwrap();
        assert_eq!(p.get("b0").unwrap().item(), 2.0);

        let mut p = store("w0", 2.0);
        let mut st = AdamState::new(AdamConfig::CLASSIFIER, &p);
        adam_step(&mut p, &store("w0", 0.0), &mut st, 0.001, 0.5).unwrap();
        assert!(p.get("w0").unwrap().item() < 2.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = store("w0", 0.0);
        let mut g = ParameterStore::new();
        g.insert("w0", Array::vector(vec![0.0, 1.0]));
        let mut st = AdamState::new(AdamConfig::CLASSIFIER, &p);
        assert!(matches!(
            adam_step(&mut p, &g, &mut st, 0.001, 0.0),
            Err(Error::Shape { .. })
        ));
        assert!(adam_step(&mut p, &store("w0", 0.0), &mut st, 0.0, 0.0).is_err());
    }
}
