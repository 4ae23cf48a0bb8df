use std::path::{Path, PathBuf};

use super::UserInput;
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::imagecore::{load_gray, load_mask};

/// The annotation manifest: `frame=<path>`, `mask=<path>`, `width_px=<int>`.
/// Relative paths are resolved against the manifest's directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub frame: PathBuf,
    pub mask: PathBuf,
    pub width_px: usize,
}

impl Manifest {
    pub fn from_key_values(kv: &KeyValues, base: &Path) -> Result<Self> {
        let resolve = |key: &str| -> Result<PathBuf> {
            let p = PathBuf::from(kv.get(key).ok_or_else(|| {
                Error::InvalidArgument(format!("annotation manifest is missing `{key}`"))
            })?);
            Ok(if p.is_relative() { base.join(p) } else { p })
        };
        let frame = resolve("frame")?;
        let mask = resolve("mask")?;
        let width_px = kv
            .parse_opt::<usize>("width_px")?
            .ok_or_else(|| Error::InvalidArgument("annotation manifest is missing `width_px`".into()))?;
        Ok(Self {
            frame,
            mask,
            width_px,
        })
    }

    pub fn load_input(&self) -> Result<UserInput> {
        UserInput::new(load_gray(&self.frame)?, load_mask(&self.mask)?, self.width_px)
    }

    pub fn to_text(&self) -> String {
        format!(
            "frame={}\nmask={}\nwidth_px={}\n",
            self.frame.display(),
            self.mask.display(),
            self.width_px
        )
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let kv = KeyValues::read(path, "annotation manifest")?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Manifest::from_key_values(&kv, base)
}
