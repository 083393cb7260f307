//! Two-dimensional Gaussian class worlds with exact Bayes posteriors.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::games::LabeledSample;
use crate::seed::{derive_seed, rng};

/// One isotropic Gaussian class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianClass {
    pub mean: [f64; 2],
    pub sigma: f64,
    pub prior: f64,
}

/// A set of Gaussian classes; class `i` is label `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianClassSpec {
    classes: Vec<GaussianClass>,
}

impl GaussianClassSpec {
    pub fn new(classes: Vec<GaussianClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidArgument("no classes".into()));
        }
        for c in &classes {
            if !(c.sigma > 0.0 && c.sigma.is_finite()) || !(c.prior > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "class needs sigma > 0 and prior > 0, got {c:?}"
                )));
            }
        }
        let total: f64 = classes.iter().map(|c| c.prior).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "priors sum to {total}, not 1"
            )));
        }
        Ok(Self { classes })
    }

    /// Class 0 at `(-1, -1)`, class 1 at `(1, 1)`, common `sigma`, equal priors.
    pub fn symmetric(sigma: f64) -> Result<Self> {
        Self::new(vec![
            GaussianClass {
                mean: [-1.0, -1.0],
                sigma,
                prior: 0.5,
            },
            GaussianClass {
                mean: [1.0, 1.0],
                sigma,
                prior: 0.5,
            },
        ])
    }

    /// Well separated toy world, σ = 0.5.
    pub fn separable() -> Self {
        Self::symmetric(0.5).expect("valid")
    }

    /// Overlapping toy world, σ = 1.
    pub fn overlap() -> Self {
        Self::symmetric(1.0).expect("valid")
    }

    pub fn classes(&self) -> &[GaussianClass] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }
}

/// `n_per_class` draws from every class, class by class.
pub fn sample_mixture(
    spec: &GaussianClassSpec,
    n_per_class: usize,
    seed: u64,
) -> Vec<LabeledSample> {
    let mut out = Vec::with_capacity(n_per_class * spec.num_classes());
    for (label, class) in spec.classes.iter().enumerate() {
        let mut r = rng(derive_seed(seed, &format!("mixture.class{label}")));
        let normal = Normal::new(0.0, class.sigma).expect("validated sigma");
        for _ in 0..n_per_class {
            let x = class.mean[0] + normal.sample(&mut r);
            let y = class.mean[1] + normal.sample(&mut r);
            out.push(LabeledSample::new(vec![x, y], label));
        }
    }
    out
}

/// Exact class posteriors at `point` (Bayes rule with the Gaussian densities).
pub fn analytic_posterior(spec: &GaussianClassSpec, point: [f64; 2]) -> Vec<f64> {
    let logs: Vec<f64> = spec
        .classes
        .iter()
        .map(|c| {
            let dx = point[0] - c.mean[0];
            let dy = point[1] - c.mean[1];
            let s2 = c.sigma * c.sigma;
            c.prior.ln() - s2.ln() - (dx * dx + dy * dy) / (2.0 * s2)
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `|p(c₀|x) − p(c₁|x)|`; 0 where the classes are indistinguishable.
pub fn posterior_margin(spec: &GaussianClassSpec, point: [f64; 2]) -> Result<f64> {
    if spec.num_classes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "posterior margin needs exactly 2 classes, got {}",
            spec.num_classes()
        )));
    }
    let p = analytic_posterior(spec, point);
    Ok((p[0] - p[1]).abs())
}

/// Fraction of `points` whose posterior margin is below `tau`.
pub fn overlap_score(points: &[[f64; 2]], spec: &GaussianClassSpec, tau: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "overlap score of an empty sample set".into(),
        ));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    let mut hard = 0usize;
    for &p in points {
        if posterior_margin(spec, p)? < tau {
            hard += 1;
        }
    }
    Ok(hard as f64 / points.len() as f64)
}

/// First two features of every sample.
pub fn points_of(samples: &[LabeledSample]) -> Result<Vec<[f64; 2]>> {
    samples
        .iter()
        .map(|s| match s.features.as_slice() {
            [x, y] => Ok([*x, *y]),
            other => Err(Error::InvalidArgument(format!(
                "toy samples are 2-dimensional, got {} features",
                other.len()
            ))),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RasterBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RasterBounds {
    pub fn square(lo: f64, hi: f64) -> Self {
        Self {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
        }
    }
}

impl Default for RasterBounds {
    fn default() -> Self {
        Self::square(-3.0, 3.0)
    }
}

/// Classifier decisions sampled at the centers of a square grid.
///
/// Cells are stored row-major with row 0 at the top (largest y), the order in
/// which images are written.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceRaster {
    pub bounds: RasterBounds,
    pub resolution: usize,
    pub classes: Vec<usize>,
    pub scores: Vec<f64>,
}

impl SurfaceRaster {
    /// Center of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        cell_center(&self.bounds, self.resolution, row, col)
    }

    pub fn class_at(&self, row: usize, col: usize) -> usize {
        self.classes[row * self.resolution + col]
    }

    pub fn score_at(&self, row: usize, col: usize) -> f64 {
        self.scores[row * self.resolution + col]
    }
}

fn cell_center(b: &RasterBounds, resolution: usize, row: usize, col: usize) -> [f64; 2] {
    let dx = (b.x_max - b.x_min) / resolution as f64;
    let dy = (b.y_max - b.y_min) / resolution as f64;
    [
        b.x_min + (col as f64 + 0.5) * dx,
        b.y_max - (row as f64 + 0.5) * dy,
    ]
}

/// Evaluates `classify` (point → (class, signed score)) at every cell center.
pub fn rasterize_surface<F>(
    classify: F,
    bounds: RasterBounds,
    resolution: usize,
) -> Result<SurfaceRaster>
where
    F: Fn([f64; 2]) -> Result<(usize, f64)>,
{
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "raster resolution must be >= 2, got {resolution}"
        )));
    }
    if !(bounds.x_max > bounds.x_min && bounds.y_max > bounds.y_min) {
        return Err(Error::InvalidArgument(format!(
            "empty raster bounds {bounds:?}"
        )));
    }
    let n = resolution * resolution;
    let mut classes = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    for row in 0..resolution {
        for col in 0..resolution {
            let (c, s) = classify(cell_center(&bounds, resolution, row, col))?;
            classes.push(c);
            scores.push(s);
        }
    }
    Ok(SurfaceRaster {
        bounds,
        resolution,
        classes,
        scores,
    })
}

/// Angle in degrees between the line normal `w` and the Bayes normal
/// `(1, 1)/√2` of the symmetric worlds, ignoring orientation.
pub fn boundary_angle(w: [f64; 2]) -> Result<f64> {
    let norm = (w[0] * w[0] + w[1] * w[1]).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "boundary normal must be nonzero, got {w:?}"
        )));
    }
    // components along and across (1, 1), up to the common factor 1/√2
    let along = (w[0] + w[1]).abs();
    let across = (w[0] - w[1]).abs();
    Ok(across.atan2(along).to_degrees())
}
