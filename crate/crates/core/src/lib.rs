//! Geometric core, loss functions, synthetic RGB-D data pipeline, and
//! evaluation harness for frame-to-frame 6-DOF object pose tracking.
//!
//! The crate is organized around six modules:
//!
//! - [`geom`]: rotations (orthonormal matrices, a continuous 6-parameter
//!   encoding, Euler angles), rigid poses, triangle meshes, and the
//!   surface-inertia tensor used to weight rotational error.
//! - [`losses`]: the tracking losses (geodesic rotation distance, weighted
//!   translation + rotation objective, learnable multi-task weighting,
//!   symmetry-bank uniformity penalty, spatial softmax + cross-entropy
//!   attention supervision, LogCosh), plus forward-mode gradients and
//!   streaming standardization.
//! - [`symmetry`]: a trainable bank of candidate symmetry rotations with
//!   oracle/mean selection and a reflective-ambiguity filter on Euler
//!   components.
//! - [`synth`]: a minimal z-buffer renderer and the synthetic RGB-D data
//!   generator (occluder compositing, depth-sensor noise, photometric
//!   augmentation, dataset serialization).
//! - [`fit`]: a toy differentiable pose regressor trained with the full
//!   protocol (LogCosh warm-up, Adam with decoupled weight decay and cosine
//!   warm restarts, learnable task weights, symmetry-bank training).
//! - [`track`]: the frame-to-frame tracking harness with periodic
//!   re-initialization, failure accounting, scripted scenarios, and report
//!   emission.
//!
//! All randomized paths take explicit seeds and are deterministic across
//! thread counts.

pub mod ad;
pub mod fit;
pub mod geom;
pub mod losses;
pub mod rng;
pub mod symmetry;
pub mod synth;
pub mod track;
