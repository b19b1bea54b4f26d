//! Scale laws of fully colored images: the imaging cascade, necklace
//! pattern classification, entropy surfaces, fluctuation statistics and the
//! synthetic image families used to check them.

pub mod cascade;
pub mod entropy;
pub mod error;
pub mod fluctuation;
pub mod imagecube;
pub mod laws;
pub mod necklace;
pub mod synth;

pub use error::{Error, Result};
pub use imagecube::{color_census, load_image, save_image, ImageCube};
pub use laws::{verify_laws, LawConfig, LawReport, Tolerances};
