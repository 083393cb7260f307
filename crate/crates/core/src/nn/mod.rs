//! Networks, losses, the optimizer and the training schedules.

mod adam;
mod loss;
mod mlp;
mod schedule;

pub use crate::params::{BoundParams, ParameterStore};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{
    class_to_sign, cross_entropy_loss, hinge_loss, log_clamped, one_minus, softmax_rows,
    LOG_CLAMP_MIN,
};
pub use mlp::{
    bias_name, init_xavier_sqrt2, is_weight, mlp_forward, one_hot, weight_name, xavier_sqrt2_std,
    Activation, Head, MlpSpec, Network,
};
pub use schedule::{lambda_schedule, lr_schedule, progress, step_decay, ScheduleParams};
