use crate::autodiff::{Array, Graph, Var};
use crate::error::{Error, Result};
use crate::games::sample::{to_batch, LabeledSample};
use crate::nn::{
    class_to_sign, cross_entropy_loss, hinge_loss, BoundParams, Head, Network, ParameterStore,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifierLoss {
    /// Binary hinge on a single score; class 0 ↔ −1, class 1 ↔ +1.
    Hinge,
    /// Softmax cross-entropy on one logit per class.
    CrossEntropy,
}

impl ClassifierLoss {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierLoss::Hinge => "hinge",
            ClassifierLoss::CrossEntropy => "cross-entropy",
        }
    }

    /// `L_C` applied to network outputs `out` for `labels`.
    pub fn apply(self, graph: &mut Graph, out: Var, labels: &[usize]) -> Result<Var> {
        match self {
            ClassifierLoss::Hinge => {
                let signs = labels
                    .iter()
                    .map(|&c| class_to_sign(c))
                    .collect::<Result<Vec<_>>>()?;
                hinge_loss(graph, out, &signs)
            }
            ClassifierLoss::CrossEntropy => cross_entropy_loss(graph, out, labels),
        }
    }
}

/// Classification network: an optional feature trunk and an output head.
///
/// The trunk is only used for the class head of an auxiliary-classifier
/// discriminator; ordinary classifiers are a single [`Network`].
#[derive(Clone, Debug, PartialEq)]
pub struct Classifier {
    pub trunk: Option<Network>,
    pub head: Network,
    pub loss: ClassifierLoss,
}

/// Graph handles produced by [`Classifier::forward`].
#[derive(Clone, Debug)]
pub struct ClassifierBinding {
    pub trunk: Option<BoundParams>,
    pub head: BoundParams,
}

impl ClassifierBinding {
    /// Gradients in the layout of [`Classifier::flat_params`].
    pub fn gradients(&self, graph: &Graph) -> ParameterStore {
        let mut out = self.head.gradients(graph).prefixed("head");
        if let Some(t) = &self.trunk {
            out.merge(t.gradients(graph).prefixed("trunk"));
        }
        out
    }
}

impl Classifier {
    pub fn new(head: Network, loss: ClassifierLoss) -> Result<Self> {
        Self::with_trunk(None, head, loss)
    }

    pub fn with_trunk(trunk: Option<Network>, head: Network, loss: ClassifierLoss) -> Result<Self> {
        if loss == ClassifierLoss::Hinge && head.spec.output_width() != 1 {
            return Err(Error::InvalidSpec(format!(
                "hinge classifier needs one output, got {}",
                head.spec.output_width()
            )));
        }
        if head.spec.head() == Head::Sigmoid {
            return Err(Error::InvalidSpec(
                "classifier head must output raw scores".into(),
            ));
        }
        if let Some(t) = &trunk {
            if t.spec.output_width() != head.spec.input_width() {
                return Err(Error::InvalidSpec(format!(
                    "trunk width {} does not feed head input {}",
                    t.spec.output_width(),
                    head.spec.input_width()
                )));
            }
        }
        Ok(Self { trunk, head, loss })
    }

    /// All parameters as one store, names prefixed `trunk.` / `head.`.
    pub fn flat_params(&self) -> ParameterStore {
        let mut out = self.head.params.prefixed("head");
        if let Some(t) = &self.trunk {
            out.merge(t.params.prefixed("trunk"));
        }
        out
    }

    pub fn load_flat_params(&mut self, flat: &ParameterStore) -> Result<()> {
        let head = flat.extract("head");
        self.head.spec.check_params(&head)?;
        if let Some(t) = &mut self.trunk {
            let trunk = flat.extract("trunk");
            t.spec.check_params(&trunk)?;
            t.params = trunk;
        }
        self.head.params = head;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        match self.loss {
            ClassifierLoss::Hinge => 2,
            ClassifierLoss::CrossEntropy => self.head.spec.output_width(),
        }
    }

    pub fn forward(&self, graph: &mut Graph, input: Var) -> Result<(Var, ClassifierBinding)> {
        let (h, trunk) = match &self.trunk {
            Some(t) => {
                let (h, b) = t.forward(graph, input, None)?;
                (h, Some(b))
            }
            None => (input, None),
        };
        let (out, head) = self.head.forward(graph, h, None)?;
        Ok((out, ClassifierBinding { trunk, head }))
    }

    /// Raw outputs on plain values.
    pub fn scores(&self, x: &Array) -> Result<Array> {
        let mut graph = Graph::new();
        let input = graph.leaf(x.clone());
        let (out, _) = self.forward(&mut graph, input)?;
        Ok(graph.value(out).clone())
    }

    pub fn predict(&self, x: &Array) -> Result<Vec<usize>> {
        let s = self.scores(x)?;
        Ok((0..s.rows()).map(|i| self.decide(s.row(i)).0).collect())
    }

    /// Predicted class and a signed score for one output row.
    ///
    /// The score is the hinge output, or for two-class cross-entropy the logit
    /// difference `z1 - z0`; zero means the point sits on the boundary. For
    /// more classes it is the winning margin over the runner-up.
    pub fn decide(&self, row: &[f64]) -> (usize, f64) {
        match self.loss {
            ClassifierLoss::Hinge => (usize::from(row[0] > 0.0), row[0]),
            ClassifierLoss::CrossEntropy => {
                let mut best = 0;
                for (i, v) in row.iter().enumerate() {
                    if *v > row[best] {
                        best = i;
                    }
                }
                if row.len() == 2 {
                    (best, row[1] - row[0])
                } else {
                    let runner = row
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != best)
                        .map(|(_, v)| *v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    (best, row[best] - runner)
                }
            }
        }
    }

    pub fn classify_point(&self, point: &[f64]) -> Result<(usize, f64)> {
        let s = self.scores(&Array::matrix(1, point.len(), point.to_vec())?)?;
        Ok(self.decide(s.row(0)))
    }

    pub fn accuracy(&self, samples: &[LabeledSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("accuracy of an empty set".into()));
        }
        let (x, labels) = to_batch(samples)?;
        let pred = self.predict(&x)?;
        let hits = pred.iter().zip(&labels).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / samples.len() as f64)
    }

    /// Mean `L_C` on a set of samples.
    pub fn mean_loss(&self, samples: &[LabeledSample]) -> Result<f64> {
        let (x, labels) = to_batch(samples)?;
        let mut graph = Graph::new();
        let input = graph.leaf(x);
        let (out, _) = self.forward(&mut graph, input)?;
        let loss = self.loss.apply(&mut graph, out, &labels)?;
        Ok(graph.value(loss).item())
    }

    /// Normal of the decision line for linear two-dimensional classifiers.
    pub fn linear_normal(&self) -> Option<[f64; 2]> {
        if self.trunk.is_some()
            || self.head.spec.num_layers() != 1
            || self.head.spec.input_width() != 2
        {
            return None;
        }
        let w = self.head.params.get("w0").ok()?;
        match (self.loss, w.shape()[1]) {
            (ClassifierLoss::Hinge, 1) => Some([w.data()[0], w.data()[1]]),
            (ClassifierLoss::CrossEntropy, 2) => {
                let d = w.data();
                Some([d[1] - d[0], d[3] - d[2]])
            }
            _ => None,
        }
    }
}
