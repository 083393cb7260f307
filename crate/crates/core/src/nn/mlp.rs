use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Array, Graph, Var};
use crate::error::{Error, Result};
use crate::params::{BoundParams, ParameterStore};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

/// What follows the last affine layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    /// Raw affine output (scores, logits, generated samples).
    Linear,
    /// Logistic output in `(0, 1)`, used by discriminators.
    Sigmoid,
    /// No output layer of its own: the last layer applies the hidden
    /// nonlinearity, so the network is a feature trunk for separate heads.
    None,
}

/// Layer sizes and nonlinearities of a fully connected network.
///
/// `sizes[0]` is the input width (including any one-hot label block) and
/// `sizes[k] -> sizes[k + 1]` defines the weight `w{k}` of shape
/// `[sizes[k], sizes[k + 1]]` and bias `b{k}` of shape `[sizes[k + 1]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpSpec {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    head: Head,
}

impl MlpSpec {
    /// Same nonlinearity on every hidden layer.
    pub fn new(sizes: Vec<usize>, activation: Activation, head: Head) -> Result<Self> {
        let layers = sizes.len().saturating_sub(1);
        let count = match head {
            Head::None => layers,
            _ => layers.saturating_sub(1),
        };
        Self::with_activations(sizes, vec![activation; count], head)
    }

    pub fn with_activations(
        sizes: Vec<usize>,
        activations: Vec<Activation>,
        head: Head,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "need an input and at least one layer, got sizes {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidSpec(format!("zero-width layer in {sizes:?}")));
        }
        let needed = match head {
            Head::None => sizes.len() - 1,
            _ => sizes.len() - 2,
        };
        if activations.len() != needed {
            return Err(Error::InvalidSpec(format!(
                "{} layers need {needed} activations, got {}",
                sizes.len() - 1,
                activations.len()
            )));
        }
        Ok(Self {
            sizes,
            activations,
            head,
        })
    }

    /// Single affine layer `input -> output`.
    pub fn linear(input: usize, output: usize) -> Result<Self> {
        Self::with_activations(vec![input, output], Vec::new(), Head::Linear)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.sizes.last().expect("validated nonempty")
    }

    /// Checks that `params` holds exactly the arrays this spec needs.
    pub fn check_params(&self, params: &ParameterStore) -> Result<()> {
        if params.len() != 2 * self.num_layers() {
            return Err(Error::InvalidSpec(format!(
                "expected {} arrays, store has {}",
                2 * self.num_layers(),
                params.len()
            )));
        }
        for k in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.sizes[k], self.sizes[k + 1]);
            let w = params.get(&weight_name(k))?;
            let b = params.get(&bias_name(k))?;
            if w.shape() != [fan_in, fan_out] || b.shape() != [fan_out] {
                return Err(Error::InvalidSpec(format!(
                    "layer {k}: weight {:?} bias {:?}, expected [{fan_in}, {fan_out}] and [{fan_out}]",
                    w.shape(),
                    b.shape()
                )));
            }
        }
        Ok(())
    }
}

pub fn weight_name(layer: usize) -> String {
    format!("w{layer}")
}

pub fn bias_name(layer: usize) -> String {
    format!("b{layer}")
}

/// Weight arrays receive weight decay; biases do not. Prefixed names
/// (`head.w0`) are judged by their last segment.
pub fn is_weight(name: &str) -> bool {
    name.rsplit('.').next().is_some_and(|n| n.starts_with('w'))
}

/// Standard deviation of the scaled Xavier normal initializer.
pub fn xavier_sqrt2_std(fan_in: usize, fan_out: usize) -> f64 {
    2f64.sqrt() * (2.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Xavier-normal weights scaled by √2, zero biases.
pub fn init_xavier_sqrt2(spec: &MlpSpec, seed: u64) -> ParameterStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParameterStore::new();
    for k in 0..spec.num_layers() {
        let (fan_in, fan_out) = (spec.sizes[k], spec.sizes[k + 1]);
        let normal = Normal::new(0.0, xavier_sqrt2_std(fan_in, fan_out)).expect("finite std");
        let data = (0..fan_in * fan_out)
            .map(|_| normal.sample(&mut rng))
            .collect();
        store.insert(
            weight_name(k),
            Array::matrix(fan_in, fan_out, data).expect("sized"),
        );
        store.insert(bias_name(k), Array::zeros(&[fan_out]));
    }
    store
}

/// One-hot rows for `labels`, shape `[labels.len(), num_classes]`.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Result<Array> {
    let mut data = vec![0.0; labels.len() * num_classes];
    for (i, &c) in labels.iter().enumerate() {
        if c >= num_classes {
            return Err(Error::InvalidLabel(format!(
                "class {c} out of range for {num_classes} classes"
            )));
        }
        data[i * num_classes + c] = 1.0;
    }
    Array::matrix(labels.len(), num_classes, data)
}

/// Builds the forward pass of an MLP on `input` (`[batch, width]`).
///
/// With `labels`, a one-hot block is appended to each input row; the number of
/// classes is whatever remains of the first layer's width.
pub fn mlp_forward(
    graph: &mut Graph,
    spec: &MlpSpec,
    params: &BoundParams,
    input: Var,
    labels: Option<&[usize]>,
) -> Result<Var> {
    let shape = graph.value(input).shape().to_vec();
    if shape.len() != 2 {
        return Err(Error::Shape {
            op: "mlp_forward",
            lhs: shape,
            rhs: vec![spec.input_width()],
        });
    }
    let (batch, width) = (shape[0], shape[1]);
    let mut h = match labels {
        None => {
            if width != spec.input_width() {
                return Err(Error::Shape {
                    op: "mlp_forward",
                    lhs: shape,
                    rhs: vec![spec.input_width()],
                });
            }
            input
        }
        Some(labels) => {
            if width >= spec.input_width() {
                return Err(Error::Shape {
                    op: "mlp_forward (conditioned)",
                    lhs: shape,
                    rhs: vec![spec.input_width()],
                });
            }
            if labels.len() != batch {
                return Err(Error::InvalidLabel(format!(
                    "{} labels for a batch of {batch}",
                    labels.len()
                )));
            }
            let code = graph.leaf(one_hot(labels, spec.input_width() - width)?);
            graph.concat(&[input, code])?
        }
    };
    let last = spec.num_layers() - 1;
    for k in 0..spec.num_layers() {
        let w = params.var(&weight_name(k))?;
        let b = params.var(&bias_name(k))?;
        let z = graph.matmul(h, w)?;
        h = graph.add(z, b)?;
        let activation = if k < last {
            Some(spec.activations[k])
        } else {
            match spec.head {
                Head::Linear => None,
                Head::Sigmoid => {
                    h = graph.sigmoid(h);
                    None
                }
                Head::None => Some(spec.activations[k]),
            }
        };
        h = match activation {
            Some(Activation::Relu) => graph.relu(h),
            Some(Activation::Tanh) => graph.tanh(h),
            None => h,
        };
    }
    Ok(h)
}

/// An [`MlpSpec`] together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub spec: MlpSpec,
    pub params: ParameterStore,
}

impl Network {
    pub fn new(spec: MlpSpec, params: ParameterStore) -> Result<Self> {
        spec.check_params(&params)?;
        Ok(Self { spec, params })
    }

    pub fn init(spec: MlpSpec, seed: u64) -> Self {
        let params = init_xavier_sqrt2(&spec, seed);
        Self { spec, params }
    }

    /// Binds the parameters into `graph` and builds the forward pass.
    pub fn forward(
        &self,
        graph: &mut Graph,
        input: Var,
        labels: Option<&[usize]>,
    ) -> Result<(Var, BoundParams)> {
        let bound = self.params.bind(graph);
        let out = mlp_forward(graph, &self.spec, &bound, input, labels)?;
        Ok((out, bound))
    }

    /// Forward pass on plain values, discarding the graph.
    pub fn eval(&self, input: &Array, labels: Option<&[usize]>) -> Result<Array> {
        let mut graph = Graph::new();
        let x = graph.leaf(input.clone());
        let (out, _) = self.forward(&mut graph, x, labels)?;
        Ok(graph.value(out).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_layer() {
        let spec = MlpSpec::linear(2, 1).unwrap();
        let mut params = ParameterStore::new();
        params.insert("w0", Array::matrix(2, 1, vec![1.0, 1.0]).unwrap());
        params.insert("b0", Array::vector(vec![0.0]));
        let net = Network::new(spec, params).unwrap();
        let out = net
            .eval(&Array::matrix(1, 2, vec![2.0, 3.0]).unwrap(), None)
            .unwrap();
        assert_eq!(out.data(), &[5.0]);
    }

    #[test]
    fn one_hot_is_appended() {
        // identity weights expose the effective input
        let spec = MlpSpec::linear(3, 3).unwrap();
        let mut params = ParameterStore::new();
        let mut eye = vec![0.0; 9];
        for i in 0..3 {
            eye[i * 3 + i] = 1.0;
        }
        params.insert("w0", Array::matrix(3, 3, eye).unwrap());
        params.insert("b0", Array::zeros(&[3]));
        let net = Network::new(spec, params).unwrap();
        let out = net
            .eval(&Array::matrix(1, 1, vec![0.5]).unwrap(), Some(&[1]))
            .unwrap();
        assert_eq!(out.data(), &[0.5, 0.0, 1.0]);
    }

    #[test]
    fn width_mismatch_rejected() {
        let net = Network::init(MlpSpec::linear(3, 1).unwrap(), 0);
        let x = Array::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(net.eval(&x, None).is_err());
        // one class left for the label block: label 1 is out of range
        assert!(net.eval(&x, Some(&[1])).is_err());
        assert!(net.eval(&x, Some(&[0])).is_ok());
        let wide = Array::matrix(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(net.eval(&wide, Some(&[0])).is_err());
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let spec = MlpSpec::new(vec![4, 8, 2], Activation::Relu, Head::Sigmoid).unwrap();
        let a = init_xavier_sqrt2(&spec, 11);
        let b = init_xavier_sqrt2(&spec, 11);
        assert!(a.bit_eq(&b));
        assert!(!a.bit_eq(&init_xavier_sqrt2(&spec, 12)));
        for (name, arr) in a.iter() {
            if !is_weight(name) {
                assert!(arr.data().iter().all(|v| *v == 0.0));
            }
        }
        spec.check_params(&a).unwrap();
    }

    #[test]
    fn xavier_std_closed_form() {
        assert!((xavier_sqrt2_std(100, 50) - 0.163299316186).abs() < 1e-11);
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![3], Activation::Relu, Head::Linear).is_err());
        assert!(MlpSpec::new(vec![3, 0, 1], Activation::Relu, Head::Linear).is_err());
        assert!(MlpSpec::with_activations(vec![3, 4, 1], vec![], Head::Linear).is_err());
        let trunk = MlpSpec::new(vec![2, 4], Activation::Tanh, Head::None).unwrap();
        assert_eq!(trunk.num_layers(), 1);
    }

    #[test]
    fn trunk_applies_hidden_nonlinearity_last() {
        let spec = MlpSpec::new(vec![1, 1], Activation::Relu, Head::None).unwrap();
        let mut params = ParameterStore::new();
        params.insert("w0", Array::matrix(1, 1, vec![1.0]).unwrap());
        params.insert("b0", Array::vector(vec![0.0]));
        let net = Network::new(spec, params).unwrap();
        let out = net
            .eval(&Array::matrix(2, 1, vec![-2.0, 3.0]).unwrap(), None)
            .unwrap();
        assert_eq!(out.data(), &[0.0, 3.0]);
    }
}
