use crate::autodiff::Array;
use crate::error::{Error, Result};

/// A feature vector with its class id.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

/// Stacks samples into a `[n, dim]` matrix plus the label list.
pub fn to_batch(samples: &[LabeledSample]) -> Result<(Array, Vec<usize>)> {
    let rows: Vec<&[f64]> = samples.iter().map(|s| s.features.as_slice()).collect();
    let x = Array::from_rows(&rows)?;
    Ok((x, samples.iter().map(|s| s.label).collect()))
}

/// Inverse of [`to_batch`].
pub fn from_batch(x: &Array, labels: &[usize]) -> Vec<LabeledSample> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| LabeledSample::new(x.row(i).to_vec(), c))
        .collect()
}

/// Composition of classifier batches: real data, samples of the frozen
/// initial generator, samples of the current generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchPlan {
    pub real: f64,
    pub initial: f64,
    pub current: f64,
}

impl Default for BatchPlan {
    fn default() -> Self {
        Self {
            real: 1.0 / 3.0,
            initial: 1.0 / 3.0,
            current: 1.0 / 3.0,
        }
    }
}

impl BatchPlan {
    /// Only real data, as in the last step of the plain game loop.
    pub const REAL_ONLY: Self = Self {
        real: 1.0,
        initial: 0.0,
        current: 0.0,
    };

    pub fn new(real: f64, initial: f64, current: f64) -> Result<Self> {
        let plan = Self {
            real,
            initial,
            current,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.real, self.initial, self.current];
        if parts.iter().any(|f| !(*f >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "batch plan fractions must be >= 0, got {parts:?}"
            )));
        }
        let total: f64 = parts.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "batch plan fractions must sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    /// Splits `m` into (real, initial, current) counts by largest remainder;
    /// ties go to the earlier source.
    pub fn counts(&self, m: usize) -> [usize; 3] {
        let exact = [self.real, self.initial, self.current].map(|f| f * m as f64);
        let mut counts = exact.map(|e| e.floor() as usize);
        let assigned: usize = counts.iter().sum();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &i in order.iter().take(m.saturating_sub(assigned)) {
            counts[i] += 1;
        }
        counts
    }
}
