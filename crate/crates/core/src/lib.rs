//! Angle-based learning vector quantization.
//!
//! Prototype classifiers whose dissimilarity is a monotone function of the
//! cosine between a sample and a prototype, optionally after an adaptive
//! linear map. Global (`Ω`), class-local (`Ψᶜ`) and two-matrix (`ΨᶜΩ`)
//! parameterizations are provided alongside their Euclidean counterparts.
//! Missing values are handled by computing angles over observed dimensions only.
//!
//! ```
//! use alvq::data::generate_football;
//! use alvq::models::{train, error_rate, TrainingConfig, Variant};
//!
//! let ds = generate_football(300, 1);
//! let cfg = TrainingConfig { prototypes_per_class: 2, epochs: 20, beta: 10.0, ..Default::default() };
//! let out = train(&ds, &cfg, Variant::AngleLocal).unwrap();
//! assert!(error_rate(&out.model, &ds).unwrap() < 0.5);
//! ```

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod models;
pub mod resampling;

pub use error::{Error, Result};
pub use models::{PrototypeModel, TrainingConfig, Variant};
