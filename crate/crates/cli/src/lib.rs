//! Command implementations behind the `copocert` binary. Each command
//! returns its exit code together with a [`RunReport`].

pub mod commands;
pub mod report;

pub use commands::{
    certify, horn, sweep, sweep_row, sweep_rows, theta, verify, CertifyArgs, ConjectureCheck, Context, GraphSource,
    HornArgs, SweepArgs, SweepRow, ThetaArgs, Tolerances,
};
pub use report::{Exit, RunReport};
