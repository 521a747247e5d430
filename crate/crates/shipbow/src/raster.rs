//! Image containers and the low-level pixel operations the rest of the
//! pipeline is built on: decoding, grayscale conversion, gradient magnitude
//! fields, windowed gradient sums and patch extraction.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt or undecodable image: {0}")]
    CorruptImage(String),
    #[error("image too small: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("patch center ({x}, {y}) outside image {width}x{height}")]
    CenterOutOfBounds { x: i64, y: i64, width: u32, height: u32 },
    #[error("invalid image buffer: expected {expected} values, got {got}")]
    BufferSizeMismatch { expected: usize, got: usize },
}

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        let expected = width as usize * height as usize * 3;
        if width == 0 || height == 0 || pixels.len() != expected {
            return Err(RasterError::BufferSizeMismatch {
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image of constant color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Encode as PNG at `path`.
    pub fn save_png(&self, path: &Path) -> Result<(), RasterError> {
        image::save_buffer(
            path,
            &self.pixels,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| RasterError::CorruptImage(format!("{}: {e}", path.display())))
    }
}

/// Grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<f32>,
}

impl GrayImage {
    pub fn from_raw(width: u32, height: u32, pixels: Vec<f32>) -> Result<Self, RasterError> {
        let expected = width as usize * height as usize;
        if width == 0 || height == 0 || pixels.len() != expected {
            return Err(RasterError::BufferSizeMismatch {
                expected,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

/// Per-pixel gradient magnitude of a grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: u32,
    height: u32,
    magnitude: Vec<f32>,
}

impl GradientField {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn magnitudes(&self) -> &[f32] {
        &self.magnitude
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.magnitude[y as usize * self.width as usize + x as usize]
    }
}

/// Square RGB crop around a point, clamped at the image border.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub center: (u32, u32),
    pub side: u32,
    pub pixels: Vec<u8>,
    /// Marks augmented re-selections that use the larger neighborhood.
    pub enlarged: bool,
}

impl Patch {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.side as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Decode a PNG or JPEG file into an [`RgbImage`].
///
/// Alpha channels are discarded and grayscale sources are replicated to
/// three channels.
pub fn load_image(path: &Path) -> Result<RgbImage, RasterError> {
    if !path.exists() {
        return Err(RasterError::FileNotFound(path.display().to_string()));
    }
    let format = match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => image::ImageFormat::Png,
        Some("jpg") | Some("jpeg") => image::ImageFormat::Jpeg,
        other => {
            return Err(RasterError::UnsupportedFormat(format!(
                "{} (extension {:?})",
                path.display(),
                other
            )))
        }
    };
    let data = std::fs::read(path)
        .map_err(|e| RasterError::CorruptImage(format!("{}: {e}", path.display())))?;
    let decoded = image::load_from_memory_with_format(&data, format)
        .map_err(|e| RasterError::CorruptImage(format!("{}: {e}", path.display())))?;
    let rgb = decoded.to_rgb8();
    RgbImage::from_raw(rgb.width(), rgb.height(), rgb.into_raw())
}

/// Rec. 601 luminance, normalized to `[0, 1]`.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let mut pixels = Vec::with_capacity(img.width as usize * img.height as usize);
    for chunk in img.pixels.chunks_exact(3) {
        let lum = (0.299 * chunk[0] as f64 + 0.587 * chunk[1] as f64 + 0.114 * chunk[2] as f64)
            / 255.0;
        pixels.push((lum as f32).clamp(0.0, 1.0));
    }
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Gradient magnitude `sqrt(gx^2 + gy^2)` with central differences in the
/// interior and one-sided differences on the border.
pub fn gradient_magnitude(img: &GrayImage) -> Result<GradientField, RasterError> {
    if img.width < 3 || img.height < 3 {
        return Err(RasterError::ImageTooSmall {
            width: img.width,
            height: img.height,
            min: 3,
        });
    }
    let (w, h) = (img.width, img.height);
    let mut magnitude = vec![0.0f32; w as usize * h as usize];
    for y in 0..h {
        for x in 0..w {
            let gx = if x == 0 {
                img.get(1, y) - img.get(0, y)
            } else if x == w - 1 {
                img.get(w - 1, y) - img.get(w - 2, y)
            } else {
                (img.get(x + 1, y) - img.get(x - 1, y)) * 0.5
            };
            let gy = if y == 0 {
                img.get(x, 1) - img.get(x, 0)
            } else if y == h - 1 {
                img.get(x, h - 1) - img.get(x, h - 2)
            } else {
                (img.get(x, y + 1) - img.get(x, y - 1)) * 0.5
            };
            magnitude[y as usize * w as usize + x as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        magnitude,
    })
}

/// Sum of gradient magnitudes over the `(2*half_width+1)^2` window centered
/// at `center`, intersected with the field.
pub fn window_gradient_sum(field: &GradientField, center: (i64, i64), half_width: u32) -> f64 {
    let (cx, cy) = center;
    let h = half_width as i64;
    let x0 = (cx - h).max(0);
    let x1 = (cx + h).min(field.width as i64 - 1);
    let y0 = (cy - h).max(0);
    let y1 = (cy + h).min(field.height as i64 - 1);
    if x0 > x1 || y0 > y1 {
        return 0.0;
    }
    let mut sum = 0.0f64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            sum += field.get(x as u32, y as u32) as f64;
        }
    }
    sum
}

/// Extract a `side`-by-`side` RGB crop centered at `center`. Samples that
/// fall outside the image are clamped to the nearest edge pixel.
pub fn extract_patch(
    img: &RgbImage,
    center: (i64, i64),
    side: u32,
) -> Result<Patch, RasterError> {
    let (cx, cy) = center;
    if cx < 0 || cy < 0 || cx >= img.width as i64 || cy >= img.height as i64 {
        return Err(RasterError::CenterOutOfBounds {
            x: cx,
            y: cy,
            width: img.width,
            height: img.height,
        });
    }
    let start_x = cx - side as i64 / 2;
    let start_y = cy - side as i64 / 2;
    let mut pixels = Vec::with_capacity(side as usize * side as usize * 3);
    for dy in 0..side as i64 {
        let sy = (start_y + dy).clamp(0, img.height as i64 - 1) as u32;
        for dx in 0..side as i64 {
            let sx = (start_x + dx).clamp(0, img.width as i64 - 1) as u32;
            pixels.extend_from_slice(&img.get(sx, sy));
        }
    }
    Ok(Patch {
        center: (cx as u32, cy as u32),
        side,
        pixels,
        enlarged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp_image(w: u32, h: u32) -> GrayImage {
        let mut px = Vec::new();
        for _y in 0..h {
            for x in 0..w {
                px.push(x as f32 / (w - 1) as f32);
            }
        }
        GrayImage::from_raw(w, h, px).unwrap()
    }

    fn step_image(w: u32, h: u32, c: u32) -> GrayImage {
        let mut px = Vec::new();
        for _y in 0..h {
            for x in 0..w {
                px.push(if x >= c { 1.0 } else { 0.0 });
            }
        }
        GrayImage::from_raw(w, h, px).unwrap()
    }

    #[test]
    fn png_round_trip_preserves_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.png");
        let pixels = vec![
            10u8, 20, 30, 40, 50, 60, //
            70, 80, 90, 200, 210, 220,
        ];
        let img = RgbImage::from_raw(2, 2, pixels.clone()).unwrap();
        img.save_png(&path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.width(), 2);
        assert_eq!(back.height(), 2);
        assert_eq!(back.pixels(), pixels.as_slice());
    }

    #[test]
    fn load_missing_file_is_file_not_found() {
        let err = load_image(Path::new("/nonexistent/nope.png")).unwrap_err();
        assert!(matches!(err, RasterError::FileNotFound(_)));
    }

    #[test]
    fn load_text_file_with_png_name_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fake.png");
        std::fs::write(&path, b"this is not a png at all").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, RasterError::CorruptImage(_)));
    }

    #[test]
    fn load_rejects_unknown_extension() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.tiff");
        std::fs::write(&path, b"whatever").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, RasterError::UnsupportedFormat(_)));
    }

    #[test]
    fn grayscale_black_white_red() {
        let black = to_grayscale(&RgbImage::filled(3, 2, [0, 0, 0]));
        assert!(black.pixels().iter().all(|&v| v == 0.0));

        let white = to_grayscale(&RgbImage::filled(3, 2, [255, 255, 255]));
        assert!(white.pixels().iter().all(|&v| v == 1.0));

        let red = to_grayscale(&RgbImage::filled(1, 1, [255, 0, 0]));
        assert!((red.get(0, 0) - 0.299).abs() < 1e-6);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let img = to_grayscale(&RgbImage::filled(8, 6, [77, 31, 190]));
        let field = gradient_magnitude(&img).unwrap();
        assert!(field.magnitudes().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_rejects_small_images() {
        let img = GrayImage::from_raw(2, 5, vec![0.0; 10]).unwrap();
        assert!(matches!(
            gradient_magnitude(&img),
            Err(RasterError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn gradient_of_vertical_step() {
        let c = 4u32;
        let img = step_image(9, 5, c);
        let field = gradient_magnitude(&img).unwrap();
        for y in 1..4 {
            for x in 1..8 {
                let expect = if x == c - 1 || x == c { 0.5 } else { 0.0 };
                assert!(
                    (field.get(x, y) - expect).abs() < 1e-6,
                    "({x},{y}) = {}",
                    field.get(x, y)
                );
            }
        }
    }

    #[test]
    fn gradient_of_horizontal_ramp() {
        let w = 11u32;
        let img = ramp_image(w, 6);
        let field = gradient_magnitude(&img).unwrap();
        let expect = 1.0 / (w - 1) as f32;
        for y in 1..5 {
            for x in 1..w - 1 {
                assert!((field.get(x, y) - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn window_sum_on_constant_field_is_zero() {
        let img = to_grayscale(&RgbImage::filled(9, 9, [100, 100, 100]));
        let field = gradient_magnitude(&img).unwrap();
        assert_eq!(window_gradient_sum(&field, (4, 4), 3), 0.0);
        assert_eq!(window_gradient_sum(&field, (0, 0), 3), 0.0);
    }

    #[test]
    fn window_sum_of_single_cell() {
        let mut px = vec![0.0f32; 49];
        px[3 * 7 + 3] = 0.75;
        let field = GradientField {
            width: 7,
            height: 7,
            magnitude: px,
        };
        let got = window_gradient_sum(&field, (3, 3), 3);
        assert!((got - 0.75).abs() < 1e-9);
    }

    #[test]
    fn window_sum_matches_brute_force_on_step_edge() {
        let img = step_image(12, 10, 6);
        let field = gradient_magnitude(&img).unwrap();
        // Independent oracle: literal double loop over the full field.
        let brute = |cx: i64, cy: i64, h: i64| -> f64 {
            let mut s = 0.0;
            for y in 0..field.height() as i64 {
                for x in 0..field.width() as i64 {
                    if (x - cx).abs() <= h && (y - cy).abs() <= h {
                        s += field.get(x as u32, y as u32) as f64;
                    }
                }
            }
            s
        };
        for &(cx, cy, h) in &[(6i64, 5i64, 3i64), (6, 0, 2), (0, 0, 3), (11, 9, 4)] {
            let got = window_gradient_sum(&field, (cx, cy), h as u32);
            assert!((got - brute(cx, cy, h)).abs() < 1e-9);
        }
    }

    #[test]
    fn interior_patch_is_exact_crop() {
        let mut img = RgbImage::filled(16, 16, [0, 0, 0]);
        for y in 0..16 {
            for x in 0..16 {
                img.set(x, y, [x as u8, y as u8, (x + y) as u8]);
            }
        }
        let p = extract_patch(&img, (8, 8), 5).unwrap();
        for dy in 0..5u32 {
            for dx in 0..5u32 {
                assert_eq!(p.get(dx, dy), img.get(6 + dx, 6 + dy));
            }
        }
        assert!(!p.enlarged);
    }

    #[test]
    fn corner_patch_clamps_to_edge() {
        let mut img = RgbImage::filled(12, 12, [0, 0, 0]);
        for y in 0..12 {
            for x in 0..12 {
                img.set(x, y, [(x * 17) as u8, (y * 13) as u8, 5]);
            }
        }
        let p = extract_patch(&img, (0, 0), 9).unwrap();
        // Oracle: explicit clamp loop.
        for dy in 0..9i64 {
            for dx in 0..9i64 {
                let sx = (dx - 4).clamp(0, 11) as u32;
                let sy = (dy - 4).clamp(0, 11) as u32;
                assert_eq!(p.get(dx as u32, dy as u32), img.get(sx, sy));
            }
        }
    }

    #[test]
    fn patch_center_outside_is_error() {
        let img = RgbImage::filled(8, 8, [1, 2, 3]);
        assert!(matches!(
            extract_patch(&img, (8, 3), 5),
            Err(RasterError::CenterOutOfBounds { .. })
        ));
        assert!(matches!(
            extract_patch(&img, (-1, 0), 5),
            Err(RasterError::CenterOutOfBounds { .. })
        ));
    }

    proptest! {
        #[test]
        fn grayscale_stays_in_unit_interval(
            w in 1u32..12, h in 1u32..12,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let px: Vec<u8> = (0..w as usize * h as usize * 3).map(|_| rng.random()).collect();
            let img = RgbImage::from_raw(w, h, px).unwrap();
            let gray = to_grayscale(&img);
            prop_assert!(gray.pixels().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }

        #[test]
        fn window_sum_monotone_in_half_width(
            w in 3u32..16, h in 3u32..16,
            cx in 0i64..16, cy in 0i64..16,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let px: Vec<u8> = (0..w as usize * h as usize * 3).map(|_| rng.random()).collect();
            let img = RgbImage::from_raw(w, h, px).unwrap();
            let field = gradient_magnitude(&to_grayscale(&img)).unwrap();
            let mut prev = window_gradient_sum(&field, (cx, cy), 0);
            for half in 1..8u32 {
                let cur = window_gradient_sum(&field, (cx, cy), half);
                prop_assert!(cur >= prev);
                prev = cur;
            }
        }

        #[test]
        fn patch_extraction_is_translation_consistent(
            seed in any::<u64>(),
            dx in 0u32..6, dy in 0u32..6,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let world_px: Vec<u8> = (0..40 * 40 * 3).map(|_| rng.random()).collect();
            let world = RgbImage::from_raw(40, 40, world_px).unwrap();
            let crop = |ox: u32, oy: u32| -> RgbImage {
                let mut out = RgbImage::filled(30, 30, [0, 0, 0]);
                for y in 0..30 {
                    for x in 0..30 {
                        out.set(x, y, world.get(x + ox, y + oy));
                    }
                }
                out
            };
            let a = crop(0, 0);
            let b = crop(dx, dy);
            // Same world point, interior-safe in both crops.
            let pa = extract_patch(&a, (15 + dx as i64, 15 + dy as i64), 9).unwrap();
            let pb = extract_patch(&b, (15, 15), 9).unwrap();
            prop_assert_eq!(pa.pixels, pb.pixels);
        }
    }
}
