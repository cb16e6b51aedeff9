//! Quantum comb calculus for optimal 1→2 cloning of unitary gates.
//!
//! Channels are stored as Choi operators, one-slot networks as six-factor
//! combs on `(0B, 0E, 1, 2, 3B, 3E)`. The crate builds the optimal cloning
//! network, re-derives its fidelity by semidefinite optimization over
//! covariant block matrices, and simulates a gate-encoded key distribution
//! protocol under cloning attacks.
//!
//! ```
//! use clonelab::{choi_r1_of_cloner, channel_fidelity_with_double_unitary, insert_gate, ComplexMatrix};
//!
//! let r = choi_r1_of_cloner(2).unwrap();
//! let u = ComplexMatrix::identity(2);
//! let f = channel_fidelity_with_double_unitary(&insert_gate(&r, &u).unwrap(), &u).unwrap();
//! assert!((f - (2.0 + 3f64.sqrt()) / 8.0).abs() < 1e-12);
//! ```

pub mod baselines;
pub mod channel;
pub mod cloner;
pub mod eig;
pub mod error;
pub mod haar;
pub mod irrep;
pub mod matrix;
pub mod optimizer;
pub mod protocol;

pub use baselines::BaselineReport;
pub use channel::{
    apply_channel, channel_fidelity_with_double_unitary, choi_from_kraus, choi_of_unitary, insert_gate, Channel,
    ChoiDump, CombNetwork, Factor, LabeledOperator, Validation,
};
pub use cloner::{choi_r1_of_cloner, cloner_channel, ClonerAssembly};
pub use error::{Error, Result};
pub use haar::{average_fidelity_mc, sample_haar_unitary, Estimate, SeededRng};
pub use irrep::{blocks_from_choi, build_irrep_table, choi_from_blocks, IrrepBlocks, IrrepTable};
pub use matrix::{ComplexMatrix, C64};
pub use optimizer::{analytic_bound, build_problem, solve, OptimizationProblem, OptimizationResult, Task};
pub use protocol::{build_bases, run_exact, run_sampled, GateBases, ProtocolStats, Strategy};
