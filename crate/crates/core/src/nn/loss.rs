use crate::autodiff::{Array, Graph, Var};
use crate::error::{Error, Result};
use crate::nn::mlp::one_hot;

/// Lower clamp applied before every log in the GAN objectives.
pub const LOG_CLAMP_MIN: f64 = 1e-12;

/// `ln(clamp(v, 1e-12, 1))`.
pub fn log_clamped(graph: &mut Graph, v: Var) -> Result<Var> {
    let c = graph.clamp(v, LOG_CLAMP_MIN, 1.0);
    graph.ln(c)
}

/// `1 - v`, elementwise.
pub fn one_minus(graph: &mut Graph, v: Var) -> Result<Var> {
    let ones = graph.leaf(Array::full(graph.value(v).shape(), 1.0));
    graph.sub(ones, v)
}

/// Maps class 0 to −1 and class 1 to +1.
pub fn class_to_sign(label: usize) -> Result<f64> {
    match label {
        0 => Ok(-1.0),
        1 => Ok(1.0),
        other => Err(Error::InvalidLabel(format!(
            "hinge loss is binary, got class {other}"
        ))),
    }
}

/// Mean of `max(0, 1 - y * score)` over the batch, `y ∈ {-1, +1}`.
///
/// `score` holds one value per sample (`[b]` or `[b, 1]`).
pub fn hinge_loss(graph: &mut Graph, score: Var, signs: &[f64]) -> Result<Var> {
    let shape = graph.value(score).shape().to_vec();
    if graph.value(score).len() != signs.len() || shape.iter().skip(1).any(|&d| d != 1) {
        return Err(Error::Shape {
            op: "hinge_loss",
            lhs: shape,
            rhs: vec![signs.len()],
        });
    }
    if let Some(bad) = signs.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidLabel(format!(
            "hinge label must be ±1, got {bad}"
        )));
    }
    let y = graph.leaf(Array::new(shape.clone(), signs.to_vec())?);
    let ys = graph.mul(y, score)?;
    let margin = one_minus(graph, ys)?;
    let h = graph.relu(margin);
    Ok(graph.mean(h))
}

/// Mean negative log softmax probability of the true class.
///
/// `logits` is `[batch, classes]`. The row maximum is subtracted as a constant
/// first, which leaves the value and the gradient unchanged.
pub fn cross_entropy_loss(graph: &mut Graph, logits: Var, labels: &[usize]) -> Result<Var> {
    let z = graph.value(logits).clone();
    if z.shape().len() != 2 || z.rows() != labels.len() {
        return Err(Error::Shape {
            op: "cross_entropy_loss",
            lhs: z.shape().to_vec(),
            rhs: vec![labels.len()],
        });
    }
    let classes = z.shape()[1];
    let onehot = graph.leaf(one_hot(labels, classes)?);
    let mut shift = Vec::with_capacity(z.len());
    for i in 0..z.rows() {
        let m = z.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        shift.extend(std::iter::repeat_n(m, classes));
    }
    let shift = graph.leaf(Array::new(z.shape().to_vec(), shift)?);
    let shifted = graph.sub(logits, shift)?;
    let e = graph.exp(shifted);
    let total = graph.row_sum(e)?;
    let lse = graph.ln(total)?;
    let picked = graph.mul(shifted, onehot)?;
    let picked = graph.row_sum(picked)?;
    let nll = graph.sub(lse, picked)?;
    Ok(graph.mean(nll))
}

/// Row-wise softmax on plain values.
pub fn softmax_rows(z: &Array) -> Array {
    let mut out = Vec::with_capacity(z.len());
    for i in 0..z.rows() {
        let row = z.row(i);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        out.extend(e.into_iter().map(|v| v / s));
    }
    Array::new(z.shape().to_vec(), out).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hinge_of(score: f64, sign: f64) -> f64 {
        let mut g = Graph::new();
        let s = g.leaf(Array::matrix(1, 1, vec![score]).unwrap());
        let l = hinge_loss(&mut g, s, &[sign]).unwrap();
        g.value(l).item()
    }

    #[test]
    fn hinge_values() {
        assert_eq!(hinge_of(2.0, 1.0), 0.0);
        assert_eq!(hinge_of(0.5, 1.0), 0.5);
        assert!((hinge_of(-0.3, -1.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn hinge_rejects_non_sign_labels() {
        let mut g = Graph::new();
        let s = g.leaf(Array::vector(vec![0.1, 0.2]));
        assert!(matches!(
            hinge_loss(&mut g, s, &[1.0, 0.0]),
            Err(Error::InvalidLabel(_))
        ));
        assert!(hinge_loss(&mut g, s, &[1.0]).is_err());
        assert!(class_to_sign(2).is_err());
    }

    #[test]
    fn cross_entropy_uniform_and_saturated() {
        let mut g = Graph::new();
        let z = g.leaf(Array::matrix(1, 2, vec![0.0, 0.0]).unwrap());
        let l = cross_entropy_loss(&mut g, z, &[0]).unwrap();
        assert!((g.value(l).item() - std::f64::consts::LN_2).abs() < 1e-15);

        let z = g.leaf(Array::matrix(1, 2, vec![1000.0, 0.0]).unwrap());
        let l = cross_entropy_loss(&mut g, z, &[0]).unwrap();
        assert!(g.value(l).item() <= 1e-6);
    }

    #[test]
    fn cross_entropy_rejects_bad_class() {
        let mut g = Graph::new();
        let z = g.leaf(Array::matrix(1, 2, vec![0.0, 0.0]).unwrap());
        assert!(matches!(
            cross_entropy_loss(&mut g, z, &[2]),
            Err(Error::InvalidLabel(_))
        ));
    }

    #[test]
    fn log_clamped_bounds_saturation() {
        let mut g = Graph::new();
        let v = g.leaf(Array::vector(vec![0.0, 0.5, 1.0]));
        let l = log_clamped(&mut g, v).unwrap();
        let d = g.value(l).data();
        assert_eq!(d[0], LOG_CLAMP_MIN.ln());
        assert_eq!(d[1], 0.5f64.ln());
        assert_eq!(d[2], 0.0);
    }
}
