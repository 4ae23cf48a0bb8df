//! Image and mask containers, frame I/O, and mask post-processing.

mod components;
pub mod io;
pub mod morphology;
mod raster;

pub use components::{label_components, largest_component, Connectivity};
pub use io::{load_gray, load_mask, load_sequence, load_sequence_from, save_gray, save_mask};
pub use morphology::morph_open_close;
pub use raster::{BinaryMask, GrayImage, ImageSequence};
