//! File I/O: grayscale PNG/PGM modalities, label masks, superpixel
//! labelings and JSON documents. Every writer goes through
//! [`write_atomic`].

use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, ImageFormat, ImageReader, Luma};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{LabelMask, Slice, ValueRange};
use crate::superpixel::{SnicParams, SuperpixelLabeling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BitDepth {
    Eight,
    #[default]
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// Write `bytes` to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::validation(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: expected a .png or .pgm file",
            path.display()
        ))),
    }
}

fn codec_err(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        image::ImageError::Unsupported(u) => {
            Error::UnsupportedFormat(format!("{}: {u}", path.display()))
        }
        other => Error::Codec {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// A decoded grayscale plane with samples scaled to `[0, 1]`.
struct Plane {
    width: usize,
    height: usize,
    values: Vec<f64>,
    max: f64,
}

fn decode_gray(path: &Path) -> Result<Plane> {
    format_for(path)?;
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: detected {other:?}",
                path.display()
            )))
        }
    }
    let img = reader.decode().map_err(|e| codec_err(path, e))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Ok(Plane {
            width,
            height,
            values: buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
            max: 255.0,
        }),
        DynamicImage::ImageLuma16(buf) => Ok(Plane {
            width,
            height,
            values: buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
            max: 65535.0,
        }),
        other => Err(Error::UnsupportedFormat(format!(
            "{}: {:?} is not single-channel grayscale",
            path.display(),
            other.color()
        ))),
    }
}

fn encode_gray16(path: &Path, width: usize, height: usize, samples: Vec<u16>) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, samples).expect("buffer size");
    encode_dynamic(path, DynamicImage::ImageLuma16(buf))
}

fn encode_gray8(path: &Path, width: usize, height: usize, samples: Vec<u8>) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(width as u32, height as u32, samples).expect("buffer size");
    encode_dynamic(path, DynamicImage::ImageLuma8(buf))
}

pub(crate) fn encode_dynamic(path: &Path, img: DynamicImage) -> Result<()> {
    let format = format_for(path)?;
    let mut bytes = Cursor::new(Vec::new());
    img.write_to(&mut bytes, format).map_err(|e| codec_err(path, e))?;
    write_atomic(path, bytes.get_ref())
}

/// Read one modality per file. Samples are scaled by the format maximum
/// (255 or 65535) into `[0, 1]`.
pub fn read_image<P: AsRef<Path>>(paths: &[P]) -> Result<Slice> {
    if paths.is_empty() {
        return Err(Error::validation("no modality files given"));
    }
    let mut planes = Vec::with_capacity(paths.len());
    for p in paths {
        planes.push(decode_gray(p.as_ref())?);
    }
    let (w, h) = (planes[0].width, planes[0].height);
    for (k, pl) in planes.iter().enumerate() {
        if (pl.width, pl.height) != (w, h) {
            return Err(Error::dims(
                format!("{w}x{h} (from {})", paths[0].as_ref().display()),
                format!("{}x{} (from {})", pl.width, pl.height, paths[k].as_ref().display()),
            ));
        }
    }
    let names = paths
        .iter()
        .map(|p| {
            p.as_ref()
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect();
    let ranges = planes
        .iter()
        .map(|p| ValueRange { min: 0.0, max: p.max })
        .collect();
    let modalities = planes.into_iter().map(|p| p.values).collect();
    Slice::with_ranges(w, h, modalities, names, ranges)
}

/// Write modality `k` of `slice` to `paths[k]` at the given bit depth.
/// Samples must lie in `[0, 1]`.
pub fn write_image<P: AsRef<Path>>(slice: &Slice, paths: &[P], depth: BitDepth) -> Result<()> {
    if paths.len() != slice.modality_count() {
        return Err(Error::validation(format!(
            "{} paths for {} modalities",
            paths.len(),
            slice.modality_count()
        )));
    }
    if !slice.is_normalized() {
        return Err(Error::validation("slice samples must lie in [0, 1] to be written"));
    }
    for (k, p) in paths.iter().enumerate() {
        write_plane(p.as_ref(), slice.width(), slice.height(), slice.modality(k), depth)?;
    }
    Ok(())
}

/// Quantize a `[0, 1]` plane and write it.
pub fn write_plane(path: &Path, width: usize, height: usize, values: &[f64], depth: BitDepth) -> Result<()> {
    let max = depth.max_value();
    let q = |v: f64| (v.clamp(0.0, 1.0) * max).round();
    match depth {
        BitDepth::Eight => encode_gray8(path, width, height, values.iter().map(|&v| q(v) as u8).collect()),
        BitDepth::Sixteen => encode_gray16(path, width, height, values.iter().map(|&v| q(v) as u16).collect()),
    }
}

/// Masks are 8-bit PNGs whose pixel values are class ids.
pub fn write_mask(mask: &LabelMask, path: &Path) -> Result<()> {
    encode_gray8(path, mask.width(), mask.height(), mask.labels().to_vec())
}

pub fn read_mask(path: &Path) -> Result<LabelMask> {
    format_for(path)?;
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| codec_err(path, e))?;
    match img {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            LabelMask::new(w, h, buf.into_raw())
        }
        other => Err(Error::UnsupportedFormat(format!(
            "{}: mask must be 8-bit grayscale, found {:?}",
            path.display(),
            other.color()
        ))),
    }
}

/// JSON sidecar stored next to a labeling PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingSidecar {
    pub n: usize,
    pub width: usize,
    pub height: usize,
    pub params: SnicParams,
}

pub fn sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("json")
}

/// Region indices as a 16-bit PNG plus a JSON sidecar with the same stem.
pub fn write_labeling(labeling: &SuperpixelLabeling, params: &SnicParams, png: &Path) -> Result<()> {
    if labeling.region_count() > u16::MAX as usize + 1 {
        return Err(Error::validation(format!(
            "{} regions do not fit a 16-bit PNG",
            labeling.region_count()
        )));
    }
    let samples = labeling.region_of().iter().map(|&r| r as u16).collect();
    encode_gray16(png, labeling.width(), labeling.height(), samples)?;
    write_json(
        &sidecar_path(png),
        &LabelingSidecar {
            n: labeling.region_count(),
            width: labeling.width(),
            height: labeling.height(),
            params: params.clone(),
        },
    )
}

pub fn read_labeling(png: &Path) -> Result<(SuperpixelLabeling, SnicParams)> {
    let sidecar: LabelingSidecar = read_json(&sidecar_path(png))?;
    let img = ImageReader::open(png)
        .map_err(|e| Error::io(png, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(png, e))?
        .decode()
        .map_err(|e| codec_err(png, e))?;
    let DynamicImage::ImageLuma16(buf) = img else {
        return Err(Error::UnsupportedFormat(format!(
            "{}: labeling must be a 16-bit grayscale PNG",
            png.display()
        )));
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    if (w, h) != (sidecar.width, sidecar.height) {
        return Err(Error::dims(
            format!("{}x{} (sidecar)", sidecar.width, sidecar.height),
            format!("{w}x{h} (png)"),
        ));
    }
    let region_of = buf.into_raw().into_iter().map(|r| r as usize).collect();
    let labeling = SuperpixelLabeling::from_region_map(w, h, region_of)?;
    if labeling.region_count() != sidecar.n {
        return Err(Error::validation(format!(
            "labeling has {} regions, sidecar declares {}",
            labeling.region_count(),
            sidecar.n
        )));
    }
    Ok((labeling, sidecar.params))
}

/// Modality files of a sample directory: `modality_*.png|pgm`, sorted by name.
pub fn modality_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("modality_") && (name.ends_with(".png") || name.ends_with(".pgm"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::validation(format!(
            "{} contains no modality_*.png or modality_*.pgm files",
            dir.display()
        )));
    }
    Ok(files)
}

/// Read a slice given either a sample directory or explicit modality files.
pub fn read_slice_input<P: AsRef<Path>>(inputs: &[P]) -> Result<Slice> {
    match inputs {
        [single] if single.as_ref().is_dir() => read_image(&modality_files(single.as_ref())?),
        _ => read_image(inputs),
    }
}
