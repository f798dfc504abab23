//! Closed-loop simulation: the linear plant with pushes and a sensor model,
//! the full estimation and control pipeline, metrics and parameter sweeps.

mod metrics;
mod run;
mod scenario;
mod sweep;
mod trace;

pub use metrics::{compute_metrics, detect_recovery, phase_velocity, Metrics, Recovery};
pub use run::{
    calibrated_thresholds, phase_jump, run_scenario, simulate, simulate_with, touchdown,
};
pub use scenario::{
    AdjustmentMode, ControllerMode, FilterConfig, PushEvent, PushKind, Scenario, SensorModel,
    DEFAULT_RECOVERY_FLOOR,
};
pub use sweep::{apply_axis, sweep, sweep_to_csv, SweepAxis, SweepRow};
pub use trace::{trace_header, AugmentRow, Trace, TraceRow, AUGMENT_HEADER};
