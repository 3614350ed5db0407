//! Phase congruency structure analysis for depth-conditioned image synthesis.
//!
//! The crate covers the numerical side of structure-preserving image
//! generation: log-Gabor phase congruency, the phase congruency loss and its
//! FSIM cross-check, surface normals and the normal consistency loss for depth
//! maps, the weighted training objective, classical edge operators for
//! comparison, and the usual image/depth evaluation metrics.
//!
//! With the default `parallel` feature, filter-bank application, paired PC
//! computations and row loops run on rayon. Results are bit-identical to the
//! sequential path; see [`exec::Exec`].

pub mod depth;
pub mod edge;
pub mod error;
pub mod exec;
pub mod image;
pub mod kvconfig;
pub mod loss;
pub mod metrics;
pub mod numeric;
pub mod phase;
pub mod pnm;
pub mod spectral;
pub mod structure;

pub use depth::{DepthEncoding, DepthMap, LineSpec, NormalMap};
pub use edge::{CannyParams, EdgeMap, EdgeOperator};
pub use error::{Error, Result};
pub use exec::Exec;
pub use image::{ColorImage, GrayImage, Raster};
pub use kvconfig::KvConfig;
pub use loss::{LossComponents, LossWeights};
pub use phase::{NoiseMethod, PcResult};
pub use pnm::PnmImage;
pub use spectral::{FilterBank, FilterBankConfig, QuadratureResponse};
pub use structure::SimilarityParams;
