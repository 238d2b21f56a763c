//! Forward state-chain sensitivities, backward gradient accumulation,
//! convergence indices and compressed sensitivity storage.

mod backward;
mod chain;
mod compress;
mod convergence;

pub use backward::{backward_gradient_update, recursive_gradient};
pub use chain::{control_gradient, forward_derivatives, forward_step, ChainStep};
pub use compress::{compress, ChainMatrix, CompressedMatrix, Storage, COMPRESS_FROM_BUSES, DEFAULT_THRESHOLD};
pub use convergence::{convergence_indices, direction_distance, settles_below, ConvergenceIndices};
