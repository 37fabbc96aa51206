//! Numerical toolkit for quantified polynomial decay of operator semigroups.
//!
//! The crate has three layers:
//!
//! * scalar kernels that stay exact over extreme dynamic range
//!   ([`logcomplex`]) and the decay-rate calculus built on them ([`rates`],
//!   [`omega`]);
//! * two exactly solvable operator models used as ground truth
//!   ([`multsg`], [`blocksg`]);
//! * the atomic-measure construction with certified bound checks and the
//!   staged function assembled from a ladder of such measures
//!   ([`ringmeasure`], [`stagefn`]).
//!
//! [`cli`] wires everything into the `decaycert` binary; [`report`] defines
//! the JSON report schema it emits; [`verify`] holds the cross-check
//! routines shared by the CLI and the test suite.

pub mod blocksg;
pub mod cli;
pub mod logcomplex;
pub mod multsg;
pub mod omega;
pub mod rates;
pub mod report;
pub mod ringmeasure;
pub mod stagefn;
pub mod verify;
