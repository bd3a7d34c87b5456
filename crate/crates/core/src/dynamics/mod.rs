//! Time integration in the original and rescaled frames.

pub mod evolve;
pub mod frames;
pub mod initial;
pub mod stepping;

pub use evolve::{evolve, run, RunOutcome, RunStatus, StepControls, Trajectory};
pub use frames::{map_u_to_v, map_u_to_v_at, map_v_to_u, map_v_to_u_at, s_of_t, t_of_s};
pub use initial::{make_initial_data, InitialDataSpec, WangReport};
pub use stepping::{rhs_u, rhs_v, step_imex, Stepper};
