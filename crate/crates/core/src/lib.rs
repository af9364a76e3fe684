//! Exact interpretation of piecewise-linear neural networks.
//!
//! A network with piecewise-linear activations partitions its input space
//! into convex polytopes, one per activation configuration, and behaves as
//! a fixed linear classifier on each. This crate computes those local
//! classifiers and polytopes, trains small networks to interpret, and
//! produces the analysis reports built on top of them.

pub mod analysis;
pub mod closedform;
pub mod dataio;
pub mod error;
pub mod linalg;
pub mod lpsolver;
pub mod netcore;
pub mod openbox;
pub mod polytope;
pub mod trainer;

pub use closedform::{fold_configuration, pbf, AffinePrefix, LocalLinearClassifier};
pub use dataio::{gen_syn, load_fmnist_pair, Dataset, Split};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use lpsolver::{LinearProgram, LpOutcome, Relation};
pub use netcore::{ActivationSpec, Configuration, ForwardTrace, Network, Piece};
pub use openbox::{openbox, InterpretationModel, ModelEntry, OpenBoxOptions};
pub use polytope::{build_polytope, BoundingBox, HalfSpace, Polytope, Sense};
pub use trainer::{train, TrainConfig};
