//! Execution: the instrumenting interpreter and the trace-based slicers.

pub mod interp;
pub mod slice;

pub use interp::{
    run, run_seeded, Event, InputSource, MemKey, RuntimeError, Trace, DEFAULT_STEP_LIMIT,
};
pub use slice::{
    dynamic_slice, simultaneous_dynamic_slice, DynCriterion, DynamicError, DynamicSlice,
    SimultaneousSlice,
};
