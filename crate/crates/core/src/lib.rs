//! Budget-constrained expense forecasting by triple-simplex matrix completion.
//!
//! Project ledgers are stacked into a months x projects matrix of budget
//! fractions. The solver factors it as `W H^T` with simplex-constrained
//! patterns `W` and embeddings `H`, and completes the missing months so that
//! every project's forecast spends exactly its budget.
//!
//! ```
//! use tsmc::eval::synthesize;
//! use tsmc::solver::{denormalize, fit, FitConfig};
//!
//! let inst = synthesize(24, 40, 2, 0.25, 7).unwrap();
//! let data = inst.to_expense_matrix();
//! let result = fit(data.x.view(), data.mask.view(), &FitConfig { rank: 2, ..Default::default() }).unwrap();
//! let forecast = denormalize(result.z.view(), &data.budgets).unwrap();
//! for (col, budget) in forecast.columns().into_iter().zip(&data.budgets) {
//!     assert!((col.sum() - budget).abs() <= 1e-6 * budget);
//! }
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod linalg;
pub mod persist;
pub mod simplex;
pub mod solver;

pub use error::{Error, ErrorKind, Result};
