//! Image and depth-grid I/O.
//!
//! Images are `(h, w, 3)` arrays of `f64` in `[0, 1]`. PNG files are 8-bit
//! RGB; quantization rounds to nearest. Depth grids use a raw format: ASCII
//! header `DEPTH h w\n` followed by row-major little-endian `f32`.

use crate::error::{Error, Result};
use ndarray::{Array2, Array3};
use std::io::{Read, Write};
use std::path::Path;

pub type Image = Array3<f64>;

pub fn load_png(path: &Path) -> Result<Image> {
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let mut out = Array3::zeros((h as usize, w as usize, 3));
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..3 {
            out[(y as usize, x as usize, c)] = px.0[c] as f64 / 255.0;
        }
    }
    Ok(out)
}

pub fn save_png(path: &Path, img: &Image) -> Result<()> {
    let (h, w) = (img.shape()[0], img.shape()[1]);
    let mut buf = image::RgbImage::new(w as u32, h as u32);
    for r in 0..h {
        for c in 0..w {
            let px = [
                quantize(img[(r, c, 0)]),
                quantize(img[(r, c, 1)]),
                quantize(img[(r, c, 2)]),
            ];
            buf.put_pixel(c as u32, r as u32, image::Rgb(px));
        }
    }
    buf.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Round-trips an image through 8-bit quantization without touching disk.
pub fn quantized(img: &Image) -> Image {
    img.mapv(|v| quantize(v) as f64 / 255.0)
}

pub fn save_depth(path: &Path, depth: &Array2<f64>) -> Result<()> {
    let (h, w) = (depth.shape()[0], depth.shape()[1]);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write!(f, "DEPTH {} {}\n", h, w).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::with_capacity(h * w * 4);
    for v in depth.iter() {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_depth(path: &Path) -> Result<Array2<f64>> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    let header_end = data
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::SceneLoad(format!("{}: missing depth header", path.display())))?;
    let header = std::str::from_utf8(&data[..header_end])
        .map_err(|_| Error::SceneLoad(format!("{}: bad depth header", path.display())))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "DEPTH" {
        return Err(Error::SceneLoad(format!(
            "{}: bad depth header '{header}'",
            path.display()
        )));
    }
    let h: usize = parts[1]
        .parse()
        .map_err(|_| Error::SceneLoad(format!("{}: bad depth height", path.display())))?;
    let w: usize = parts[2]
        .parse()
        .map_err(|_| Error::SceneLoad(format!("{}: bad depth width", path.display())))?;
    let body = &data[header_end + 1..];
    if body.len() != h * w * 4 {
        return Err(Error::SceneLoad(format!(
            "{}: depth payload is {} bytes, expected {}",
            path.display(),
            body.len(),
            h * w * 4
        )));
    }
    let mut out = Array2::zeros((h, w));
    for (i, chunk) in body.chunks_exact(4).enumerate() {
        out[(i / w, i % w)] = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        let depth = Array2::from_shape_fn((3, 5), |(r, c)| (r * 5 + c) as f64 * 0.25);
        save_depth(&path, &depth).unwrap();
        let back = load_depth(&path).unwrap();
        assert_eq!(back, depth);
    }

    #[test]
    fn png_round_trip_is_exact_after_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.png");
        let img = Array3::from_shape_fn((4, 6, 3), |(r, c, ch)| {
            ((r * 31 + c * 7 + ch * 3) % 11) as f64 / 10.0
        });
        save_png(&path, &img).unwrap();
        let back = load_png(&path).unwrap();
        assert_eq!(back, quantized(&img));
    }
}
