use crate::error::{Error, Result};

/// Inputs of the reversal-strength and learning-rate ramps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleParams {
    /// Training progress in `[0, 1]`.
    pub progress: f64,
    pub w_c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu0: f64,
}

impl ScheduleParams {
    pub const DEFAULT_W_C: f64 = 0.1;
    pub const DEFAULT_ALPHA: f64 = 10.0;
    pub const DEFAULT_BETA: f64 = 0.75;

    pub fn new(progress: f64, w_c: f64, alpha: f64, beta: f64, mu0: f64) -> Result<Self> {
        let s = Self {
            progress,
            w_c,
            alpha,
            beta,
            mu0,
        };
        s.validate()?;
        Ok(s)
    }

    /// `w_c = 0.1, α = 10, β = 0.75` at `p = 0`.
    pub fn with_mu0(mu0: f64) -> Result<Self> {
        Self::new(
            0.0,
            Self::DEFAULT_W_C,
            Self::DEFAULT_ALPHA,
            Self::DEFAULT_BETA,
            mu0,
        )
    }

    /// `w_c` may be zero, which switches the reversal term off entirely.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.progress) {
            return Err(Error::InvalidArgument(format!(
                "progress must lie in [0, 1], got {}",
                self.progress
            )));
        }
        if !(self.w_c >= 0.0 && self.w_c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "w_c must be >= 0, got {}",
                self.w_c
            )));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mu0", self.mu0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn at(self, progress: f64) -> Result<Self> {
        Self::new(progress, self.w_c, self.alpha, self.beta, self.mu0)
    }
}

/// Progress after `iteration` of `total` iterations: `iter / (total - 1)`,
/// or 0 for single-iteration runs.
pub fn progress(iteration: usize, total: usize) -> f64 {
    if total <= 1 {
        0.0
    } else {
        iteration as f64 / (total - 1) as f64
    }
}

/// `w_c · (2 / (1 + e^{-10 p}) − 1)`: zero at `p = 0`, rising towards `w_c`.
pub fn lambda_schedule(s: &ScheduleParams) -> f64 {
    s.w_c * (2.0 / (1.0 + (-10.0 * s.progress).exp()) - 1.0)
}

/// `μ₀ / (1 + α p)^β`.
pub fn lr_schedule(s: &ScheduleParams) -> f64 {
    s.mu0 / (1.0 + s.alpha * s.progress).powf(s.beta)
}

/// `μ₀ · factor^⌊epoch / period⌋`.
pub fn step_decay(epoch: u64, mu0: f64, period: u64, factor: f64) -> f64 {
    debug_assert!(period > 0 && factor > 0.0 && factor < 1.0);
    mu0 * factor.powi((epoch / period) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(p: f64) -> ScheduleParams {
        ScheduleParams::with_mu0(1.0).unwrap().at(p).unwrap()
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_schedule(&at(0.0)), 0.0);
        assert!((lambda_schedule(&at(1.0)) - 0.099990920426259513).abs() < 1e-15);
        assert!((lambda_schedule(&at(0.5)) - 0.098661429815143029).abs() < 1e-15);
    }

    #[test]
    fn lr_values() {
        assert_eq!(lr_schedule(&at(0.0)), 1.0);
        assert!((lr_schedule(&at(1.0)) - 0.16556002607617017).abs() < 1e-15);
        assert!((lr_schedule(&at(0.1)) - 0.59460355750136053).abs() < 1e-15);
    }

    #[test]
    fn step_decay_values() {
        assert_eq!(step_decay(0, 1e-3, 60, 0.1), 1e-3);
        assert!((step_decay(60, 1e-3, 60, 0.1) - 1e-4).abs() < 1e-18);
        assert!((step_decay(150, 1e-3, 60, 0.1) - 1e-5).abs() < 1e-18);
        assert!((step_decay(59, 1e-3, 60, 0.1) - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn validation() {
        assert!(ScheduleParams::new(1.5, 0.1, 10.0, 0.75, 1.0).is_err());
        assert!(ScheduleParams::new(0.5, -1.0, 10.0, 0.75, 1.0).is_err());
        assert!(ScheduleParams::new(0.5, 0.1, 0.0, 0.75, 1.0).is_err());
        assert!(ScheduleParams::new(0.5, 0.0, 10.0, 0.75, 1.0).is_ok());
    }

    #[test]
    fn progress_is_linear() {
        assert_eq!(progress(0, 5), 0.0);
        assert_eq!(progress(4, 5), 1.0);
        assert_eq!(progress(2, 5), 0.5);
        assert_eq!(progress(0, 1), 0.0);
    }
}
