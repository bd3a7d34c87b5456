//! Reproduction scenarios built on the solver and diagnostics.

pub mod acceptance;
pub mod blowup;
pub mod cross_frame;
pub mod decay;
pub mod scan;
pub mod wang;

pub use blowup::{run_negative_entropy_test, NegativeEntropyReport};
pub use cross_frame::{run_cross_frame_check, CrossFrameReport};
pub use decay::{run_decay_experiment, DecayReport};
pub use scan::{run_fujita_scan, PhaseTable};
pub use wang::{run_wang_audit, WangAuditReport};
