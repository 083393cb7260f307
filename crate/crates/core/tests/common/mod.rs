#![allow(dead_code)]

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use threeplayer::autodiff::{finite_difference_gradient, Array, Graph, Var};
use threeplayer::nn::ParameterStore;
use threeplayer::seed::{rng, Rng};
use threeplayer::Result;

pub const REL_TOL: f64 = 1e-4;
pub const ABS_FLOOR: f64 = 1e-7;
pub const FD_EPS: f64 = 1e-6;

pub fn normal_array(shape: &[usize], rng: &mut Rng) -> Array {
    let n = shape.iter().product();
    let data = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    Array::new(shape.to_vec(), data).unwrap()
}

/// Worst violation of `|a - n| <= max(REL_TOL * max(|a|, |n|), ABS_FLOOR)`,
/// as `(name, index, analytic, numeric)`, or `None` when everything agrees.
pub fn worst_mismatch(
    analytic: &ParameterStore,
    numeric: &ParameterStore,
) -> Option<(String, usize, f64, f64)> {
    for (name, a) in analytic.iter() {
        let n = numeric.get(name).unwrap();
        for (i, (&x, &y)) in a.data().iter().zip(n.data()).enumerate() {
            let tol = (REL_TOL * x.abs().max(y.abs())).max(ABS_FLOOR);
            if (x - y).abs() > tol {
                return Some((name.to_string(), i, x, y));
            }
        }
    }
    None
}

/// Compares tape gradients of `f` with central differences at `theta`.
pub fn check_gradient<F>(f: F, theta: &ParameterStore) -> Option<(String, usize, f64, f64)>
where
    F: Fn(&mut Graph, &[(String, Var)]) -> Result<Var>,
{
    let run = |p: &ParameterStore| -> Result<(Graph, Var, Vec<(String, Var)>)> {
        let mut g = Graph::new();
        let leaves: Vec<(String, Var)> = p
            .iter()
            .map(|(n, a)| (n.to_string(), g.leaf(a.clone())))
            .collect();
        let root = f(&mut g, &leaves)?;
        Ok((g, root, leaves))
    };
    let (mut g, root, leaves) = run(theta).unwrap();
    g.backward(root).unwrap();
    let mut analytic = ParameterStore::new();
    for (name, v) in &leaves {
        analytic.insert(name.clone(), g.grad(*v));
    }
    let numeric = finite_difference_gradient(
        |p| {
            let (g, root, _) = run(p)?;
            Ok(g.value(root).item())
        },
        theta,
        FD_EPS,
    )
    .unwrap();
    worst_mismatch(&analytic, &numeric)
}

// depth marker for weights and biases, which are never operands themselves
const PARAM: usize = usize::MAX;

#[derive(Clone, Copy, Debug)]
enum Step {
    Unary(usize, u8),
    Binary(usize, usize, u8),
    MatMul(usize, usize),
    Bias(usize, usize),
    Concat(usize, usize),
    RowSum(usize),
}

/// A random graph over `[batch, w]` leaves: at most `max_depth` operations
/// on any path, the final reduction included, and no intermediate wider than `max_width`.
#[derive(Clone, Debug)]
pub struct RandomGraph {
    pub theta: ParameterStore,
    steps: Vec<Step>,
    reduce_by_mean: bool,
}

impl RandomGraph {
    pub fn generate(seed: u64, max_depth: usize, max_width: usize) -> Self {
        // the final reduction to a scalar is one more operation
        let body_depth = max_depth - 1;
        let mut r = rng(seed);
        let batch = r.random_range(1..=4);
        let mut theta = ParameterStore::new();
        // (width, depth) of every node, leaves first
        let mut nodes: Vec<(usize, usize)> = Vec::new();
        let n_inputs = r.random_range(1..=3);
        for i in 0..n_inputs {
            let w = r.random_range(1..=max_width.min(6));
            theta.insert(format!("x{i}"), normal_array(&[batch, w], &mut r));
            nodes.push((w, 0));
        }
        let mut steps = Vec::new();
        let n_steps = r.random_range(1..=10);
        let mut extra = 0;
        for _ in 0..n_steps {
            let candidates: Vec<usize> = (0..nodes.len())
                .filter(|&i| nodes[i].1 < body_depth)
                .collect();
            if candidates.is_empty() {
                break;
            }
            let a = candidates[r.random_range(0..candidates.len())];
            let (wa, da) = nodes[a];
            let kind = r.random_range(0..6);
            let same: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&i| nodes[i].0 == wa)
                .collect();
            let (step, node) = match kind {
                1 if same.len() > 1 => {
                    let b = same[r.random_range(0..same.len())];
                    (
                        Step::Binary(a, b, r.random_range(0..3)),
                        (wa, da.max(nodes[b].1) + 1),
                    )
                }
                2 => {
                    let out = r.random_range(1..=max_width);
                    let name = format!("w{extra}");
                    extra += 1;
                    let mut m = normal_array(&[wa, out], &mut r);
                    let s = 1.0 / (wa as f64).sqrt();
                    m.data_mut().iter_mut().for_each(|v| *v *= s);
                    theta.insert(name, m);
                    nodes.push((out, PARAM));
                    (Step::MatMul(a, nodes.len() - 1), (out, da + 1))
                }
                3 => {
                    let name = format!("b{extra}");
                    extra += 1;
                    theta.insert(name, normal_array(&[wa], &mut r));
                    nodes.push((wa, PARAM));
                    (Step::Bias(a, nodes.len() - 1), (wa, da + 1))
                }
                4 => {
                    let fits: Vec<usize> = candidates
                        .iter()
                        .copied()
                        .filter(|&i| nodes[i].0 + wa <= max_width)
                        .collect();
                    if fits.is_empty() {
                        (Step::RowSum(a), (1, da + 1))
                    } else {
                        let b = fits[r.random_range(0..fits.len())];
                        (
                            Step::Concat(a, b),
                            (wa + nodes[b].0, da.max(nodes[b].1) + 1),
                        )
                    }
                }
                5 => (Step::RowSum(a), (1, da + 1)),
                _ => {
                    let k = r.random_range(0..7);
                    // tanh-exp and sigmoid-ln count as two operations
                    let cost = if k == 3 || k == 4 { 2 } else { 1 };
                    let k = if da + cost > body_depth { 0 } else { k };
                    (Step::Unary(a, k), (wa, da + cost.min(body_depth - da)))
                }
            };
            steps.push(step);
            nodes.push(node);
        }
        Self {
            theta,
            steps,
            reduce_by_mean: r.random_bool(0.5),
        }
    }

    /// Builds the graph over `leaves` (in store order) and reduces the last
    /// node to a scalar.
    pub fn build(&self, g: &mut Graph, leaves: &[(String, Var)]) -> Result<Var> {
        let find = |name: &str| leaves.iter().find(|(n, _)| n == name).unwrap().1;
        let mut vars: Vec<Var> = Vec::new();
        let mut i = 0;
        while self.theta.get(&format!("x{i}")).is_ok() {
            vars.push(find(&format!("x{i}")));
            i += 1;
        }
        let mut extra = 0;
        for step in &self.steps {
            let v = match *step {
                Step::Unary(a, k) => {
                    let x = vars[a];
                    match k {
                        0 => g.tanh(x),
                        1 => g.sigmoid(x),
                        2 => g.relu(x),
                        3 => {
                            let t = g.tanh(x);
                            g.exp(t)
                        }
                        4 => {
                            let s = g.sigmoid(x);
                            g.ln(s)?
                        }
                        5 => g.scale(x, -1.7),
                        _ => g.clamp(x, -0.8, 0.9),
                    }
                }
                Step::Binary(a, b, k) => match k {
                    0 => g.add(vars[a], vars[b])?,
                    1 => g.sub(vars[a], vars[b])?,
                    _ => g.mul(vars[a], vars[b])?,
                },
                Step::MatMul(a, _) => {
                    let w = find(&format!("w{extra}"));
                    extra += 1;
                    vars.push(w);
                    g.matmul(vars[a], w)?
                }
                Step::Bias(a, _) => {
                    let b = find(&format!("b{extra}"));
                    extra += 1;
                    vars.push(b);
                    g.add(vars[a], b)?
                }
                Step::Concat(a, b) => g.concat(&[vars[a], vars[b]])?,
                Step::RowSum(a) => g.row_sum(vars[a])?,
            };
            vars.push(v);
        }
        let last = *vars.last().unwrap();
        Ok(if self.reduce_by_mean {
            g.mean(last)
        } else {
            g.sum(last)
        })
    }

    pub fn check(&self) -> Option<(String, usize, f64, f64)> {
        check_gradient(|g, leaves| self.build(g, leaves), &self.theta)
    }
}

/// Finite values from raw bit patterns, so subnormals, signed zeros and
/// extreme exponents all turn up.
pub fn random_store(seed: u64) -> ParameterStore {
    let mut r = rng(seed);
    let mut store = ParameterStore::new();
    for k in 0..r.random_range(0..6) {
        let shape: Vec<usize> = match r.random_range(0..3) {
            0 => vec![],
            1 => vec![r.random_range(0..9)],
            _ => vec![r.random_range(1..6), r.random_range(0..6)],
        };
        let n = shape.iter().product();
        let data = (0..n)
            .map(|_| loop {
                let v = match r.random_range(0..4) {
                    0 => f64::from_bits(r.random()),
                    1 => f64::from_bits(r.random::<u64>() & 0x800f_ffff_ffff_ffff),
                    2 => r.random_range(-1.0..1.0),
                    _ => [0.0, -0.0, 1.0, f64::MAX, f64::MIN_POSITIVE][r.random_range(0..5)],
                };
                if v.is_finite() {
                    break v;
                }
            })
            .collect();
        store.insert(format!("net{k}.w{k}"), Array::new(shape, data).unwrap());
    }
    store
}
