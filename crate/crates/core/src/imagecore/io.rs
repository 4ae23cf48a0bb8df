//! PNG / binary-PGM readers and writers for frames and masks.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use super::raster::{BinaryMask, GrayImage, ImageSequence};
use crate::error::{Error, Result};

const FRAME_EXTENSIONS: &[&str] = &["png", "pgm"];

fn has_frame_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Rec.601 luma of an 8-bit RGB triple.
#[inline]
pub fn rec601_luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round().clamp(0.0, 255.0) as u8
}

fn to_gray(img: DynamicImage) -> GrayImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .pixels()
            .map(|p| ((f64::from(p.0[0]) / 257.0).round()) as u8)
            .collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| rec601_luma(p.0[0], p.0[1], p.0[2]))
            .collect(),
    };
    GrayImage::new(w, h, data).expect("decoder returned a consistent buffer")
}

/// Reads a single PNG or PGM file as an 8-bit grayscale image.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("pgm") => ImageFormat::Pnm,
        Some(ext) if ext.eq_ignore_ascii_case("png") => ImageFormat::Png,
        _ => image::guess_format(&bytes).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?,
    };
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(to_gray(img))
}

/// Lists PNG/PGM files of a directory in lexicographic filename order.
pub fn list_frames(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() && has_frame_extension(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every frame of a directory, ordered by filename.
pub fn load_sequence(dir: impl AsRef<Path>) -> Result<ImageSequence> {
    let dir = dir.as_ref();
    let paths = list_frames(dir)?;
    if paths.is_empty() {
        return Err(Error::EmptySequence(dir.to_path_buf()));
    }
    load_sequence_from(&paths)
}

/// Loads an explicit list of frame files; list order is time order.
pub fn load_sequence_from<P: AsRef<Path>>(paths: &[P]) -> Result<ImageSequence> {
    let frames = paths
        .iter()
        .map(load_gray)
        .collect::<Result<Vec<_>>>()?;
    ImageSequence::new(frames, None)
}

fn encode_gray(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let writer = BufWriter::new(file);
    let (w, h) = (width as u32, height as u32);
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.eq_ignore_ascii_case("pgm"))
        .unwrap_or(false);
    let res = if is_pgm {
        PnmEncoder::new(writer)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(data, w, h, ExtendedColorType::L8)
    } else {
        image::codecs::png::PngEncoder::new(writer).write_image(data, w, h, ExtendedColorType::L8)
    };
    res.map_err(|e| Error::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes a grayscale image; the extension (`.png` or `.pgm`) picks the format.
pub fn save_gray(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    encode_gray(path.as_ref(), image.width(), image.height(), image.as_raw())
}

/// Writes a mask as an 8-bit image with 0 = background and 255 = worm.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let data: Vec<u8> = mask.as_slice().iter().map(|&v| if v { 255 } else { 0 }).collect();
    encode_gray(path.as_ref(), mask.width(), mask.height(), &data)
}

/// Reads a mask image; any intensity above 127 counts as worm.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let img = load_gray(path)?;
    let data = img.as_raw().iter().map(|&v| v > 127).collect();
    BinaryMask::new(img.width(), img.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 256) as u8)
    }

    #[test]
    fn three_identical_pgm_frames() {
        let dir = tempfile::tempdir().unwrap();
        let img = gradient(10, 10);
        for i in 0..3 {
            save_gray(&img, dir.path().join(format!("f{i}.pgm"))).unwrap();
        }
        let seq = load_sequence(dir.path()).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.dims(), (10, 10));
        assert!(seq.frames().iter().all(|f| *f == img));
    }

    #[test]
    fn single_png_frame() {
        let dir = tempfile::tempdir().unwrap();
        save_gray(&gradient(640, 480), dir.path().join("frame.png")).unwrap();
        let seq = load_sequence(dir.path()).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.dims(), (640, 480));
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_gray(&gradient(10, 10), dir.path().join("a.png")).unwrap();
        save_gray(&gradient(20, 20), dir.path().join("b.png")).unwrap();
        assert!(matches!(
            load_sequence(dir.path()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lexicographic_order_is_time_order() {
        let dir = tempfile::tempdir().unwrap();
        for (name, v) in [("b.png", 2u8), ("a.png", 1), ("c.pgm", 3)] {
            save_gray(&GrayImage::filled(4, 4, v), dir.path().join(name)).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let seq = load_sequence(dir.path()).unwrap();
        let firsts: Vec<u8> = seq.frames().iter().map(|f| f.get(0, 0)).collect();
        assert_eq!(firsts, vec![1, 2, 3]);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_sequence(dir.path()),
            Err(Error::EmptySequence(_))
        ));
    }

    #[test]
    fn unreadable_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
        assert!(matches!(load_sequence(dir.path()), Err(Error::Decode { .. })));
    }

    #[test]
    fn color_png_converted_by_rec601() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let rgb = image::RgbImage::from_fn(3, 1, |x, _| match x {
            0 => image::Rgb([255, 0, 0]),
            1 => image::Rgb([0, 255, 0]),
            _ => image::Rgb([10, 20, 200]),
        });
        rgb.save(&path).unwrap();
        let gray = load_gray(&path).unwrap();
        assert_eq!(gray.as_raw(), &[76, 150, rec601_luma(10, 20, 200)]);
        // 0.299 * 10 + 0.587 * 20 + 0.114 * 200 = 37.53
        assert_eq!(rec601_luma(10, 20, 200), 38);
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mask = BinaryMask::from_fn(9, 7, |x, y| (x + y) % 3 == 0);
        let path = dir.path().join("m.png");
        save_mask(&mask, &path).unwrap();
        let raw = load_gray(&path).unwrap();
        assert!(raw.as_raw().iter().all(|&v| v == 0 || v == 255));
        assert_eq!(load_mask(&path).unwrap(), mask);
    }
}
