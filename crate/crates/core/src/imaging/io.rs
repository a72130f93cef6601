use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat};

use super::PageImage;

#[derive(Debug, thiserror::Error)]
pub enum ImageLoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: unsupported image format (expected PNG or TIFF)")]
    UnsupportedFormat { path: PathBuf },
    #[error("{path}: multi-page TIFF files are not supported; split the pages first")]
    MultiPageTiff { path: PathBuf },
    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Encode { path: PathBuf, message: String },
}

/// Loads a PNG or single-page TIFF as an 8-bit grayscale page whose id is
/// the file stem.
pub fn load_page(path: &Path) -> Result<PageImage, ImageLoadError> {
    let bytes = std::fs::read(path).map_err(|source| ImageLoadError::Io { path: path.to_path_buf(), source })?;
    let format = image::guess_format(&bytes).map_err(|_| ImageLoadError::UnsupportedFormat { path: path.to_path_buf() })?;
    match format {
        ImageFormat::Png => {}
        ImageFormat::Tiff => {
            let decoder = tiff::decoder::Decoder::new(Cursor::new(&bytes)).map_err(|e| ImageLoadError::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            if decoder.more_images() {
                return Err(ImageLoadError::MultiPageTiff { path: path.to_path_buf() });
            }
        }
        _ => return Err(ImageLoadError::UnsupportedFormat { path: path.to_path_buf() }),
    }
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| ImageLoadError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let gray = img.to_luma8();
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (w, h) = gray.dimensions();
    PageImage::new(id, w, h, gray.into_raw()).map_err(|e| ImageLoadError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn to_gray(page: &PageImage) -> GrayImage {
    GrayImage::from_raw(page.width(), page.height(), page.pixels().to_vec()).expect("page buffer matches dimensions")
}

/// Encodes the page as an 8-bit grayscale PNG.
pub fn page_to_png(page: &PageImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    to_gray(page)
        .write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding does not fail");
    out.into_inner()
}

pub fn save_page_png(page: &PageImage, path: &Path) -> Result<(), ImageLoadError> {
    std::fs::write(path, page_to_png(page)).map_err(|source| ImageLoadError::Io { path: path.to_path_buf(), source })
}
