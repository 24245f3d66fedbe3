//! The generalized block iteration with RBK, ReBlocK and minibatch-SGD
//! mass matrices, plus tail averaging.

mod mass;
mod run;
mod tail;

pub use mass::{apply_update, MassMatrixKind, DEFAULT_LAMBDA};
pub use run::{run, run_observed, SolverConfig, SolverTrace, TraceRecord, TRACE_CSV_HEADER};
pub use tail::{tail_average, TailAverager};
