//! Difference-of-Gaussians keypoint detection.
//!
//! The detector builds a Gaussian scale-space pyramid, takes adjacent-layer
//! differences, finds strict 3x3x3 extrema, refines them with quadratic
//! sub-pixel interpolation and applies contrast and edge tests. It serves
//! purely as a point source: no orientations and no SIFT descriptors are
//! computed, because downstream patches are axis-aligned RGB crops.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::GrayImage;

#[derive(Debug, Error)]
pub enum ScaleSpaceError {
    #[error("image too small for scale space: {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
}

/// Parameters of the scale-space pyramid and the keypoint filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaleSpaceParams {
    pub octaves: usize,
    pub scales_per_octave: usize,
    pub base_sigma: f32,
    pub contrast_threshold: f32,
    pub edge_ratio: f32,
    /// Detect on a 2x upsampled copy of the input. Off by default.
    pub upsample: bool,
}

impl Default for ScaleSpaceParams {
    fn default() -> Self {
        Self {
            octaves: 4,
            scales_per_octave: 3,
            base_sigma: 1.6,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            upsample: false,
        }
    }
}

/// A detected scale-space keypoint in original-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Detection scale in pixels of the original image frame.
    pub sigma: f32,
    /// Interpolated DoG value at the extremum.
    pub dog_response: f32,
}

/// One octave of Gaussian layers and their differences.
#[derive(Debug, Clone)]
pub struct DogOctave {
    pub width: u32,
    pub height: u32,
    /// `scales_per_octave + 3` Gaussian layers.
    pub gaussian: Vec<Vec<f32>>,
    /// `scales_per_octave + 2` DoG layers, `dog[i] = gaussian[i+1] - gaussian[i]`.
    pub dog: Vec<Vec<f32>>,
}

/// The full DoG pyramid. Octave `o` is downsampled by `2^o` relative to the
/// detection frame.
#[derive(Debug, Clone)]
pub struct DogPyramid {
    pub octaves: Vec<DogOctave>,
    pub scales_per_octave: usize,
    pub base_sigma: f32,
}

const MIN_IMAGE_SIDE: u32 = 16;
/// Smallest octave side that still admits a 3x3 neighborhood with margin.
const MIN_OCTAVE_SIDE: u32 = 8;
const MAX_REFINE_STEPS: usize = 5;
const OFFSET_CLAMP: f32 = 0.5;
/// Two refined keypoints in the same octave closer than this are duplicates.
const DEDUP_RADIUS: f32 = 0.5;

/// Separable Gaussian blur with clamp-to-edge borders, kernel truncated at
/// four standard deviations.
fn gaussian_blur(src: &[f32], width: usize, height: usize, sigma: f32) -> Vec<f32> {
    if sigma <= 0.0 {
        return src.to_vec();
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    let denom = 2.0 * sigma as f64 * sigma as f64;
    let mut sum = 0.0f64;
    for i in -radius..=radius {
        let v = (-(i * i) as f64 / denom).exp();
        kernel.push(v);
        sum += v;
    }
    for v in &mut kernel {
        *v /= sum;
    }

    let mut tmp = vec![0.0f32; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0f64;
            for (ki, kv) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - radius).clamp(0, width as i64 - 1) as usize;
                acc += kv * row[sx] as f64;
            }
            tmp[y * width + x] = acc as f32;
        }
    }
    let mut out = vec![0.0f32; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0f64;
            for (ki, kv) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - radius).clamp(0, height as i64 - 1) as usize;
                acc += kv * tmp[sy * width + x] as f64;
            }
            out[y * width + x] = acc as f32;
        }
    }
    out
}

/// Keep every second pixel in both directions.
fn downsample_half(src: &[f32], width: usize, height: usize) -> (Vec<f32>, usize, usize) {
    let nw = (width / 2).max(1);
    let nh = (height / 2).max(1);
    let mut out = Vec::with_capacity(nw * nh);
    for y in 0..nh {
        for x in 0..nw {
            out.push(src[(y * 2) * width + x * 2]);
        }
    }
    (out, nw, nh)
}

fn upsample_double(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (nw, nh) = (w * 2, h * 2);
    let mut out = vec![0.0f32; nw * nh];
    for y in 0..nh {
        let sy = y as f32 / 2.0;
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f32;
        for x in 0..nw {
            let sx = x as f32 / 2.0;
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f32;
            let top = img.pixels()[y0 * w + x0] * (1.0 - fx) + img.pixels()[y0 * w + x1] * fx;
            let bot = img.pixels()[y1 * w + x0] * (1.0 - fx) + img.pixels()[y1 * w + x1] * fx;
            out[y * nw + x] = top * (1.0 - fy) + bot * fy;
        }
    }
    GrayImage::from_raw(nw as u32, nh as u32, out).expect("doubled buffer")
}

fn effective_octaves(params: &ScaleSpaceParams, width: u32, height: u32) -> usize {
    let mut n = 0;
    let mut side = width.min(height);
    while n < params.octaves && side >= MIN_OCTAVE_SIDE {
        n += 1;
        side /= 2;
    }
    n.max(1)
}

/// Build the Gaussian and DoG stacks. The first layer of octave 0 carries
/// blur `base_sigma`; within an octave layer `i` carries
/// `base_sigma * 2^(i / scales_per_octave)`.
pub fn build_dog_pyramid(
    img: &GrayImage,
    params: &ScaleSpaceParams,
) -> Result<DogPyramid, ScaleSpaceError> {
    if img.width().min(img.height()) < MIN_IMAGE_SIDE {
        return Err(ScaleSpaceError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: MIN_IMAGE_SIDE,
        });
    }
    let detect_img;
    let base = if params.upsample {
        detect_img = upsample_double(img);
        &detect_img
    } else {
        img
    };

    let s = params.scales_per_octave;
    let layers = s + 3;
    // Per-layer blur relative to the octave grid.
    let sigmas: Vec<f32> = (0..layers)
        .map(|i| params.base_sigma * 2f32.powf(i as f32 / s as f32))
        .collect();
    // Incremental blur from layer i-1 to layer i.
    let increments: Vec<f32> = (1..layers)
        .map(|i| (sigmas[i] * sigmas[i] - sigmas[i - 1] * sigmas[i - 1]).sqrt())
        .collect();

    let n_octaves = effective_octaves(params, base.width(), base.height());
    let mut octaves = Vec::with_capacity(n_octaves);
    let mut current = base.pixels().to_vec();
    let mut width = base.width() as usize;
    let mut height = base.height() as usize;

    for o in 0..n_octaves {
        let mut gaussian = Vec::with_capacity(layers);
        // The input is treated as unblurred, so octave 0 layer 0 is blurred
        // by the full base sigma; later octaves inherit their blur from the
        // downsampled layer.
        if o == 0 {
            gaussian.push(gaussian_blur(&current, width, height, params.base_sigma));
        } else {
            gaussian.push(current.clone());
        }
        for inc in &increments {
            let prev = gaussian.last().unwrap();
            gaussian.push(gaussian_blur(prev, width, height, *inc));
        }
        let dog: Vec<Vec<f32>> = gaussian
            .windows(2)
            .map(|pair| {
                pair[1]
                    .iter()
                    .zip(pair[0].iter())
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        // Layer `s` carries exactly twice the base blur: the seed of the
        // next octave.
        let seed = gaussian[s].clone();
        octaves.push(DogOctave {
            width: width as u32,
            height: height as u32,
            gaussian,
            dog,
        });
        let (down, nw, nh) = downsample_half(&seed, width, height);
        current = down;
        width = nw;
        height = nh;
    }

    Ok(DogPyramid {
        octaves,
        scales_per_octave: s,
        base_sigma: params.base_sigma,
    })
}

/// Candidate prior to coordinate mapping, kept per octave for dedup.
#[derive(Debug, Clone, Copy)]
struct RawKeypoint {
    octave: usize,
    layer: usize,
    x: f32,
    y: f32,
    /// Refined continuous layer index within the octave.
    layer_offset: f32,
    response: f32,
}

#[inline]
fn dog_at(oct: &DogOctave, layer: usize, x: usize, y: usize) -> f32 {
    oct.dog[layer][y * oct.width as usize + x]
}

fn is_strict_extremum(oct: &DogOctave, layer: usize, x: usize, y: usize) -> bool {
    let v = dog_at(oct, layer, x, y);
    let mut all_above = true;
    let mut all_below = true;
    for dl in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dl == 0 && dy == 0 && dx == 0 {
                    continue;
                }
                let n = dog_at(
                    oct,
                    (layer as i64 + dl) as usize,
                    (x as i64 + dx) as usize,
                    (y as i64 + dy) as usize,
                );
                if v <= n {
                    all_above = false;
                }
                if v >= n {
                    all_below = false;
                }
                if !all_above && !all_below {
                    return false;
                }
            }
        }
    }
    all_above || all_below
}

/// Quadratic refinement of an extremum. Returns the refined candidate or
/// `None` when the fit diverges or fails the contrast test.
fn refine_extremum(
    oct: &DogOctave,
    params: &ScaleSpaceParams,
    octave_index: usize,
    mut layer: usize,
    mut x: usize,
    mut y: usize,
) -> Option<RawKeypoint> {
    let w = oct.width as usize;
    let h = oct.height as usize;
    let n_dog = oct.dog.len();

    let mut offset = [0.0f32; 3]; // (dx, dy, dl)
    let mut converged = false;
    for _ in 0..MAX_REFINE_STEPS {
        let d = |dl: i64, dy: i64, dx: i64| -> f32 {
            dog_at(
                oct,
                (layer as i64 + dl) as usize,
                (x as i64 + dx) as usize,
                (y as i64 + dy) as usize,
            )
        };
        let v = d(0, 0, 0);
        // Gradient and Hessian by central differences on the 3-D stack.
        let gx = 0.5 * (d(0, 0, 1) - d(0, 0, -1));
        let gy = 0.5 * (d(0, 1, 0) - d(0, -1, 0));
        let gl = 0.5 * (d(1, 0, 0) - d(-1, 0, 0));
        let hxx = d(0, 0, 1) - 2.0 * v + d(0, 0, -1);
        let hyy = d(0, 1, 0) - 2.0 * v + d(0, -1, 0);
        let hll = d(1, 0, 0) - 2.0 * v + d(-1, 0, 0);
        let hxy = 0.25 * (d(0, 1, 1) - d(0, 1, -1) - d(0, -1, 1) + d(0, -1, -1));
        let hxl = 0.25 * (d(1, 0, 1) - d(1, 0, -1) - d(-1, 0, 1) + d(-1, 0, -1));
        let hyl = 0.25 * (d(1, 1, 0) - d(1, -1, 0) - d(-1, 1, 0) + d(-1, -1, 0));

        // Solve H * delta = -g with Cramer's rule.
        let det = hxx as f64 * (hyy as f64 * hll as f64 - hyl as f64 * hyl as f64)
            - hxy as f64 * (hxy as f64 * hll as f64 - hyl as f64 * hxl as f64)
            + hxl as f64 * (hxy as f64 * hyl as f64 - hyy as f64 * hxl as f64);
        if det.abs() < 1e-30 {
            return None;
        }
        let b = [-gx as f64, -gy as f64, -gl as f64];
        let det_x = b[0] * (hyy as f64 * hll as f64 - hyl as f64 * hyl as f64)
            - hxy as f64 * (b[1] * hll as f64 - hyl as f64 * b[2])
            + hxl as f64 * (b[1] * hyl as f64 - hyy as f64 * b[2]);
        let det_y = hxx as f64 * (b[1] * hll as f64 - b[2] * hyl as f64)
            - b[0] * (hxy as f64 * hll as f64 - hyl as f64 * hxl as f64)
            + hxl as f64 * (hxy as f64 * b[2] - b[1] * hxl as f64);
        let det_l = hxx as f64 * (hyy as f64 * b[2] - hyl as f64 * b[1])
            - hxy as f64 * (hxy as f64 * b[2] - b[1] * hxl as f64)
            + b[0] * (hxy as f64 * hyl as f64 - hyy as f64 * hxl as f64);
        offset = [
            (det_x / det) as f32,
            (det_y / det) as f32,
            (det_l / det) as f32,
        ];

        if offset[0].abs() < OFFSET_CLAMP
            && offset[1].abs() < OFFSET_CLAMP
            && offset[2].abs() < OFFSET_CLAMP
        {
            converged = true;
            break;
        }
        // Step to the neighboring sample and refit.
        if offset[0] > OFFSET_CLAMP {
            x += 1;
        } else if offset[0] < -OFFSET_CLAMP {
            x = x.wrapping_sub(1);
        }
        if offset[1] > OFFSET_CLAMP {
            y += 1;
        } else if offset[1] < -OFFSET_CLAMP {
            y = y.wrapping_sub(1);
        }
        if offset[2] > OFFSET_CLAMP {
            layer += 1;
        } else if offset[2] < -OFFSET_CLAMP {
            layer = layer.wrapping_sub(1);
        }
        if x < 1 || x >= w - 1 || y < 1 || y >= h - 1 || layer < 1 || layer >= n_dog - 1 {
            return None;
        }
    }
    if !converged {
        return None;
    }

    let d0 = |dl: i64, dy: i64, dx: i64| -> f32 {
        dog_at(
            oct,
            (layer as i64 + dl) as usize,
            (x as i64 + dx) as usize,
            (y as i64 + dy) as usize,
        )
    };
    let v = d0(0, 0, 0);
    let gx = 0.5 * (d0(0, 0, 1) - d0(0, 0, -1));
    let gy = 0.5 * (d0(0, 1, 0) - d0(0, -1, 0));
    let gl = 0.5 * (d0(1, 0, 0) - d0(-1, 0, 0));
    let interpolated = v + 0.5 * (gx * offset[0] + gy * offset[1] + gl * offset[2]);
    if interpolated.abs() < params.contrast_threshold {
        return None;
    }

    // Edge test on the 2x2 spatial Hessian.
    let hxx = d0(0, 0, 1) - 2.0 * v + d0(0, 0, -1);
    let hyy = d0(0, 1, 0) - 2.0 * v + d0(0, -1, 0);
    let hxy = 0.25 * (d0(0, 1, 1) - d0(0, 1, -1) - d0(0, -1, 1) + d0(0, -1, -1));
    let trace = hxx + hyy;
    let det = hxx * hyy - hxy * hxy;
    let r = params.edge_ratio;
    if det <= 0.0 || trace * trace / det >= (r + 1.0) * (r + 1.0) / r {
        return None;
    }

    Some(RawKeypoint {
        octave: octave_index,
        layer,
        x: x as f32 + offset[0],
        y: y as f32 + offset[1],
        layer_offset: layer as f32 + offset[2],
        response: interpolated,
    })
}

/// Detect scale-space keypoints. The result is deterministic and sorted by
/// `(octave, layer, y, x)`.
pub fn detect_keypoints(
    img: &GrayImage,
    params: &ScaleSpaceParams,
) -> Result<Vec<Keypoint>, ScaleSpaceError> {
    let pyramid = build_dog_pyramid(img, params)?;
    Ok(detect_in_pyramid(&pyramid, params, img.width(), img.height()))
}

/// Detection on an already-built pyramid; used by the overlay tooling to
/// avoid building the pyramid twice.
pub fn detect_in_pyramid(
    pyramid: &DogPyramid,
    params: &ScaleSpaceParams,
    img_width: u32,
    img_height: u32,
) -> Vec<Keypoint> {
    let s = pyramid.scales_per_octave;
    let mut raw: Vec<RawKeypoint> = Vec::new();
    for (o, oct) in pyramid.octaves.iter().enumerate() {
        let w = oct.width as usize;
        let h = oct.height as usize;
        let mut octave_points: Vec<RawKeypoint> = Vec::new();
        for layer in 1..=s {
            for y in 1..h - 1 {
                for x in 1..w - 1 {
                    if !is_strict_extremum(oct, layer, x, y) {
                        continue;
                    }
                    if let Some(kp) = refine_extremum(oct, params, o, layer, x, y) {
                        octave_points.push(kp);
                    }
                }
            }
        }
        // Remove duplicates the refinement collapsed onto the same spot.
        octave_points.sort_by(|a, b| {
            (a.layer, a.y, a.x)
                .partial_cmp(&(b.layer, b.y, b.x))
                .unwrap()
        });
        let mut kept: Vec<RawKeypoint> = Vec::new();
        for kp in octave_points {
            let dup = kept.iter().any(|q| {
                let dx = q.x - kp.x;
                let dy = q.y - kp.y;
                (dx * dx + dy * dy).sqrt() <= DEDUP_RADIUS
            });
            if !dup {
                kept.push(kp);
            }
        }
        raw.extend(kept);
    }

    let coord_scale = if params.upsample { 0.5 } else { 1.0 };
    let mut out: Vec<Keypoint> = Vec::with_capacity(raw.len());
    for kp in &raw {
        let octave_scale = (1u32 << kp.octave) as f32;
        let x = kp.x * octave_scale * coord_scale;
        let y = kp.y * octave_scale * coord_scale;
        let sigma = pyramid.base_sigma
            * 2f32.powf(kp.layer_offset / s as f32)
            * octave_scale
            * coord_scale;
        // Refinement can land a hair outside the frame; such points cannot
        // anchor a patch and are dropped.
        if x < 0.0 || y < 0.0 || x >= img_width as f32 || y >= img_height as f32 {
            continue;
        }
        out.push(Keypoint {
            x,
            y,
            sigma,
            dog_response: kp.response,
        });
    }
    out
}
