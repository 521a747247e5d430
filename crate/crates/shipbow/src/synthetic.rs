//! Procedural silhouette dataset for demos and end-to-end tests.
//!
//! Draws three vessel classes over a sea/sky background with randomized
//! pose, palette and noise: container ships (stacked colored boxes),
//! tankers (rounded deck tanks and a pipe run) and sailboats (tall
//! triangular sails). The generator is fully seeded; the same seed writes
//! byte-identical files.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::raster::{RasterError, RgbImage};

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Class names in directory order.
pub const CLASSES: [&str; 3] = ["container", "sailboat", "tanker"];

pub const IMAGE_SIDE: u32 = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShipClass {
    Container,
    Sailboat,
    Tanker,
}

impl ShipClass {
    pub fn name(self) -> &'static str {
        match self {
            ShipClass::Container => "container",
            ShipClass::Sailboat => "sailboat",
            ShipClass::Tanker => "tanker",
        }
    }

    pub fn all() -> [ShipClass; 3] {
        [ShipClass::Container, ShipClass::Sailboat, ShipClass::Tanker]
    }
}

fn put(img: &mut RgbImage, x: i64, y: i64, rgb: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.set(x as u32, y as u32, rgb);
    }
}

fn fill_rect(img: &mut RgbImage, x0: i64, y0: i64, w: i64, h: i64, rgb: [u8; 3]) {
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            put(img, x, y, rgb);
        }
    }
}

fn fill_circle(img: &mut RgbImage, cx: i64, cy: i64, r: i64, rgb: [u8; 3]) {
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            let dx = x - cx;
            let dy = y - cy;
            if dx * dx + dy * dy <= r * r {
                put(img, x, y, rgb);
            }
        }
    }
}

/// Filled triangle by sign-of-edge test over the bounding box.
fn fill_triangle(img: &mut RgbImage, p: [(f32, f32); 3], rgb: [u8; 3]) {
    let min_x = p.iter().map(|q| q.0).fold(f32::INFINITY, f32::min).floor() as i64;
    let max_x = p.iter().map(|q| q.0).fold(f32::NEG_INFINITY, f32::max).ceil() as i64;
    let min_y = p.iter().map(|q| q.1).fold(f32::INFINITY, f32::min).floor() as i64;
    let max_y = p.iter().map(|q| q.1).fold(f32::NEG_INFINITY, f32::max).ceil() as i64;
    let edge = |a: (f32, f32), b: (f32, f32), c: (f32, f32)| -> f32 {
        (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
    };
    let area = edge(p[0], p[1], p[2]);
    if area.abs() < 1e-6 {
        return;
    }
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let q = (x as f32 + 0.5, y as f32 + 0.5);
            let w0 = edge(p[1], p[2], q) / area;
            let w1 = edge(p[2], p[0], q) / area;
            let w2 = edge(p[0], p[1], q) / area;
            if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
                put(img, x, y, rgb);
            }
        }
    }
}

fn shade(rgb: [u8; 3], delta: i16) -> [u8; 3] {
    [
        (rgb[0] as i16 + delta).clamp(0, 255) as u8,
        (rgb[1] as i16 + delta).clamp(0, 255) as u8,
        (rgb[2] as i16 + delta).clamp(0, 255) as u8,
    ]
}

fn background(img: &mut RgbImage, horizon: i64, rng: &mut ChaCha8Rng) {
    let side = img.width() as i64;
    let sky_jitter = rng.random_range(-12i16..12);
    let sea_jitter = rng.random_range(-10i16..10);
    for y in 0..side {
        for x in 0..side {
            let rgb = if y < horizon {
                let t = y as f32 / horizon.max(1) as f32;
                shade(
                    [
                        (140.0 + 55.0 * t) as u8,
                        (185.0 + 35.0 * t) as u8,
                        (225.0 + 15.0 * t) as u8,
                    ],
                    sky_jitter,
                )
            } else {
                let t = (y - horizon) as f32 / (side - horizon).max(1) as f32;
                shade(
                    [
                        (45.0 - 18.0 * t) as u8,
                        (90.0 - 28.0 * t) as u8,
                        (150.0 - 38.0 * t) as u8,
                    ],
                    sea_jitter,
                )
            };
            put(img, x, y, rgb);
        }
    }
    // Soft clouds.
    for _ in 0..rng.random_range(4i64..8) {
        let cx = rng.random_range(0..side);
        let cy = rng.random_range(2..(horizon - 8).max(3));
        let r = rng.random_range(5i64..12);
        let bright = rng.random_range(10i16..20);
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    let (x, y) = (cx + dx, cy + dy);
                    if x >= 0 && y >= 0 && x < side && y < side {
                        let px = img.get(x as u32, y as u32);
                        put(img, x, y, shade(px, bright));
                    }
                }
            }
        }
    }
    // Gentle wave streaks; strong enough to texture patches, weak enough
    // that keypoints stay on the vessel.
    for _ in 0..18 {
        let y = rng.random_range((horizon + 3).min(side - 2)..side - 1);
        let x0 = rng.random_range(0..side - 12);
        let len = rng.random_range(8..30);
        let tone = rng.random_range(8i16..18);
        for x in x0..x0 + len {
            let px = img.get(x as u32, y as u32);
            put(img, x, y, shade(px, tone));
        }
    }
    // Mild swell texture plus a few scattered glints; strong enough to
    // shade descriptor patches, mostly below the detector's contrast gate
    // so the keypoint budget stays on the vessel.
    for _ in 0..24 {
        let cx = rng.random_range(2..side - 2);
        let cy = rng.random_range((horizon + 2).min(side - 3)..side - 1);
        let r = rng.random_range(2i64..4);
        let tone = if rng.random_range(0..2) == 0 {
            rng.random_range(10i16..24)
        } else {
            -rng.random_range(8i16..20)
        };
        fill_circle_shaded(img, cx, cy, r, tone);
    }
    for _ in 0..6 {
        let cx = rng.random_range(2..side - 2);
        let cy = rng.random_range((horizon + 6).min(side - 3)..side - 1);
        let r = rng.random_range(2i64..4);
        fill_circle_shaded(img, cx, cy, r, rng.random_range(45i16..75));
    }
}

/// White wake foam along the waterline plus broken reflections below;
/// every class gets them, anchored to its own hull colors.
fn draw_waterline_effects(
    img: &mut RgbImage,
    cx: i64,
    waterline: i64,
    half: i64,
    rng: &mut ChaCha8Rng,
) {
    let mut x = cx - half - 4;
    while x < cx + half + 5 {
        let r = rng.random_range(1i64..3);
        fill_circle(img, x, waterline + 5 + rng.random_range(0i64..2), r, [225, 235, 245]);
        x += rng.random_range(7i64..12);
    }
    for _ in 0..5 {
        let rx = cx + rng.random_range(-half..half);
        let ry = waterline + rng.random_range(8i64..16);
        let r = rng.random_range(2i64..4);
        fill_circle_shaded(img, rx, ry, r, -rng.random_range(40i16..70));
    }
}

/// Brighten or darken a disc in place.
fn fill_circle_shaded(img: &mut RgbImage, cx: i64, cy: i64, r: i64, delta: i16) {
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                let (x, y) = (cx + dx, cy + dy);
                if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                    let px = img.get(x as u32, y as u32);
                    put(img, x, y, shade(px, delta));
                }
            }
        }
    }
}

/// Bright and dark container colors; alternating them keeps adjacent
/// boxes separable after blur.
fn container_palette(rng: &mut ChaCha8Rng, bright: bool) -> [u8; 3] {
    const BRIGHT: [[u8; 3]; 3] = [
        [235, 145, 40],
        [210, 200, 60],
        [225, 225, 215],
    ];
    const DARK: [[u8; 3]; 3] = [
        [160, 35, 30],
        [35, 80, 165],
        [110, 45, 120],
    ];
    if bright {
        BRIGHT[rng.random_range(0..BRIGHT.len())]
    } else {
        DARK[rng.random_range(0..DARK.len())]
    }
}

fn draw_hull(img: &mut RgbImage, cx: i64, waterline: i64, half: i64, height: i64, rgb: [u8; 3]) {
    fill_rect(img, cx - half, waterline - height, 2 * half, height + 4, rgb);
    // Bow and stern slants.
    fill_triangle(
        img,
        [
            ((cx + half) as f32, (waterline - height) as f32),
            ((cx + half + 7) as f32, (waterline + 4) as f32),
            ((cx + half) as f32, (waterline + 4) as f32),
        ],
        rgb,
    );
    fill_triangle(
        img,
        [
            ((cx - half) as f32, (waterline - height) as f32),
            ((cx - half - 5) as f32, (waterline + 4) as f32),
            ((cx - half) as f32, (waterline + 4) as f32),
        ],
        rgb,
    );
}

fn draw_container_ship(img: &mut RgbImage, rng: &mut ChaCha8Rng) {
    let cx = 80 + rng.random_range(-8i64..8);
    let waterline = rng.random_range(108i64..124);
    let half = rng.random_range(58i64..70);
    let hull = [38, 40, 48];
    draw_hull(img, cx, waterline, half, 13, hull);
    // Two porthole rows along the hull.
    let mut x = cx - half + 5;
    while x < cx + half - 5 {
        fill_rect(img, x, waterline - 6, 4, 4, [240, 245, 252]);
        x += 8;
    }
    let mut x = cx - half + 9;
    while x < cx + half - 5 {
        fill_rect(img, x, waterline - 12, 3, 3, [200, 150, 60]);
        x += 10;
    }

    // Stacked container rows; alternating light/dark boxes with 2 px gaps
    // stay blob-like after blur instead of merging into stripes.
    let rows = rng.random_range(3i64..5);
    let block_w = rng.random_range(8i64..11);
    let block_h = 8i64;
    let n_cols = (2 * half - 14) / (block_w + 2);
    let start_x = cx - half + 4;
    for row in 0..rows {
        let y0 = waterline - 13 - (row + 1) * (block_h + 2);
        for col in 0..n_cols {
            let bright = (row + col) % 2 == 0;
            let color = container_palette(rng, bright);
            let x0 = start_x + col * (block_w + 2);
            fill_rect(img, x0, y0, block_w, block_h, color);
            fill_rect(img, x0 + 1, y0 + 1, block_w - 2, 2, shade(color, -55));
        }
    }
    // Crane posts over the deck.
    for k in 0..3i64 {
        let px = cx - half / 2 + k * half / 2;
        fill_rect(img, px, waterline - 13 - 44, 2, 44, [70, 75, 85]);
        fill_circle(img, px + 1, waterline - 13 - 46, 3, [220, 120, 40]);
    }
    draw_waterline_effects(img, cx, waterline, half, rng);
    // Bridge block at the stern with a window strip.
    let bridge_x = cx + half - 12;
    let bridge_top = waterline - 13 - rows * (block_h + 1) - 12;
    fill_rect(img, bridge_x, bridge_top, 9, waterline - 13 - bridge_top, [235, 235, 240]);
    fill_rect(img, bridge_x + 1, bridge_top + 2, 7, 2, [40, 50, 70]);
    fill_rect(img, bridge_x + 2, bridge_top + 6, 2, 2, [60, 70, 95]);
    fill_rect(img, bridge_x + 5, bridge_top + 6, 2, 2, [60, 70, 95]);
}

fn draw_tanker(img: &mut RgbImage, rng: &mut ChaCha8Rng) {
    let cx = 80 + rng.random_range(-8i64..8);
    let waterline = rng.random_range(108i64..124);
    let half = rng.random_range(58i64..70);
    let hull = [45, 38, 40];
    draw_hull(img, cx, waterline, half, 14, hull);
    // Deck stripe and two porthole rows.
    fill_rect(img, cx - half, waterline - 16, 2 * half, 3, [150, 60, 50]);
    let mut x = cx - half + 4;
    while x < cx + half - 5 {
        fill_rect(img, x, waterline - 7, 4, 4, [240, 245, 252]);
        x += 8;
    }
    let mut x = cx - half + 8;
    while x < cx + half - 5 {
        fill_rect(img, x, waterline - 13, 3, 3, [90, 160, 170]);
        x += 11;
    }

    // Rounded tanks along the deck, each with a highlight and a dark port.
    let n_tanks = rng.random_range(3i64..6);
    let spacing = (2 * half - 16) / n_tanks;
    for t in 0..n_tanks {
        let tx = cx - half + 10 + t * spacing + spacing / 2;
        let r = rng.random_range(9i64..13).min(spacing / 2 + 3);
        fill_circle(img, tx, waterline - 16 - r + 2, r, [205, 205, 210]);
        fill_circle(img, tx - r / 3, waterline - 16 - r, r / 3, [240, 240, 245]);
        fill_circle(img, tx + r / 3, waterline - 14 - r / 2, 2, [70, 60, 60]);
        fill_circle(img, tx, waterline - 16 - 2 * r + 2, 2, [245, 245, 250]);
    }
    // Pipe run with supports, plus a funnel with a dark cap.
    fill_rect(img, cx - half + 6, waterline - 17, 2 * half - 12, 1, [180, 180, 185]);
    let mut px = cx - half + 8;
    while px < cx + half - 6 {
        fill_rect(img, px, waterline - 20, 1, 4, [160, 160, 165]);
        fill_circle(img, px, waterline - 22, 2, [235, 235, 242]);
        px += 8;
    }
    draw_waterline_effects(img, cx, waterline, half, rng);
    fill_rect(img, cx + half - 12, waterline - 38, 6, 24, [190, 185, 180]);
    fill_rect(img, cx + half - 12, waterline - 41, 6, 3, [60, 40, 40]);
    fill_rect(img, cx + half - 11, waterline - 33, 4, 3, [90, 70, 70]);
    fill_circle(img, cx + half - 9, waterline - 27, 2, [50, 45, 45]);
}

fn draw_sailboat(img: &mut RgbImage, rng: &mut ChaCha8Rng) {
    let cx = 80 + rng.random_range(-10i64..10);
    let waterline = rng.random_range(110i64..126);
    let half = rng.random_range(36i64..46);
    let hull = [50, 42, 38];
    fill_rect(img, cx - half, waterline - 5, 2 * half, 9, hull);
    fill_triangle(
        img,
        [
            ((cx + half) as f32, (waterline - 5) as f32),
            ((cx + half + 6) as f32, (waterline - 5) as f32),
            ((cx + half) as f32, (waterline + 4) as f32),
        ],
        hull,
    );

    // Main mast and two sails with seam lines; a shorter mizzen aft.
    let mast_h = rng.random_range(64i64..82);
    let mast_x = cx + rng.random_range(-6i64..2);
    let top = waterline - 5 - mast_h;
    fill_rect(img, mast_x, top, 2, mast_h, [35, 30, 28]);
    fill_circle(img, mast_x + 1, top - 2, 3, [215, 55, 45]);
    let main_w = rng.random_range(22i64..32);
    fill_triangle(
        img,
        [
            ((mast_x - 1) as f32, top as f32),
            ((mast_x - 1) as f32, (waterline - 7) as f32),
            ((mast_x - 1 - main_w) as f32, (waterline - 7) as f32),
        ],
        [246, 244, 235],
    );
    let jib_w = rng.random_range(16i64..24);
    fill_triangle(
        img,
        [
            ((mast_x + 3) as f32, (top + 4) as f32),
            ((mast_x + 3 + jib_w) as f32, (waterline - 7) as f32),
            ((mast_x + 3) as f32, (waterline - 7) as f32),
        ],
        [232, 228, 214],
    );
    // Horizontal seams across the main sail.
    for s in 1..4i64 {
        let y = top + s * mast_h / 4;
        let frac = (y - top) as f64 / mast_h as f64;
        let reach = (main_w as f64 * frac) as i64;
        for x in (mast_x - 1 - reach)..(mast_x - 1) {
            put(img, x, y, [210, 205, 190]);
        }
    }
    // Sail insignia: a dark badge on the main sail.
    fill_circle(img, mast_x - 1 - main_w / 3, top + 2 * mast_h / 3, 3, [50, 60, 130]);
    fill_circle(img, mast_x + 3 + jib_w / 3, top + 3 * mast_h / 4, 2, [170, 45, 40]);
    let mut phx = cx - half + 4;
    while phx < cx + half - 4 {
        fill_rect(img, phx, waterline + 1, 3, 3, [235, 240, 250]);
        phx += 7;
    }
    // Railing dots along the gunwale.
    let mut rx = cx - half + 3;
    while rx < cx + half - 2 {
        fill_circle(img, rx, waterline - 6, 1, [230, 225, 210]);
        rx += 6;
    }
    // Mizzen mast with a small sail.
    let mizzen_x = cx + half - 8;
    let mizzen_h = 2 * mast_h / 3;
    let mtop = waterline - 5 - mizzen_h;
    fill_rect(img, mizzen_x, mtop, 2, mizzen_h, [35, 30, 28]);
    fill_circle(img, mizzen_x + 1, mtop - 2, 2, [60, 110, 200]);
    fill_triangle(
        img,
        [
            ((mizzen_x - 1) as f32, (mtop + 4) as f32),
            ((mizzen_x - 1) as f32, (waterline - 8) as f32),
            ((mizzen_x - 1 - mast_h / 3) as f32, (waterline - 8) as f32),
        ],
        [238, 234, 222],
    );
    fill_circle(img, mizzen_x - 1 - mast_h / 6, waterline - 8 - mizzen_h / 3, 2, [160, 50, 45]);
    draw_waterline_effects(img, cx, waterline, half, rng);
    // Hull stripe and round fenders.
    fill_rect(img, cx - half + 2, waterline - 2, 2 * half - 4, 2, [175, 130, 60]);
    fill_circle(img, cx - half / 2, waterline + 2, 2, [230, 160, 60]);
    fill_circle(img, cx + half / 3, waterline + 2, 2, [230, 160, 60]);
}

fn apply_noise(img: &mut RgbImage, rng: &mut ChaCha8Rng, amplitude: i16) {
    for y in 0..img.height() {
        for x in 0..img.width() {
            let px = img.get(x, y);
            let d = rng.random_range(-amplitude..=amplitude);
            img.set(x, y, shade(px, d));
        }
    }
}

/// Render one synthetic vessel image.
pub fn render_ship(class: ShipClass, rng: &mut ChaCha8Rng) -> RgbImage {
    let mut img = RgbImage::filled(IMAGE_SIDE, IMAGE_SIDE, [0, 0, 0]);
    let horizon = rng.random_range(66i64..84);
    background(&mut img, horizon, rng);
    match class {
        ShipClass::Container => draw_container_ship(&mut img, rng),
        ShipClass::Tanker => draw_tanker(&mut img, rng),
        ShipClass::Sailboat => draw_sailboat(&mut img, rng),
    }
    apply_noise(&mut img, rng, 5);
    img
}

/// Per-image RNG so files do not depend on generation order.
fn image_rng(seed: u64, class_index: usize, image_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((class_index as u64) << 32)
            .wrapping_add(image_index as u64),
    )
}

/// Write `per_class` images per class under `out_dir/<class>/`.
pub fn generate_dataset(
    out_dir: &Path,
    seed: u64,
    per_class: usize,
) -> Result<Vec<PathBuf>, SyntheticError> {
    let mut written = Vec::with_capacity(per_class * CLASSES.len());
    for (ci, class) in ShipClass::all().into_iter().enumerate() {
        let dir = out_dir.join(class.name());
        std::fs::create_dir_all(&dir)?;
        for i in 0..per_class {
            let mut rng = image_rng(seed, ci, i);
            let img = render_ship(class, &mut rng);
            let path = dir.join(format!("{}_{i:04}.png", class.name()));
            img.save_png(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}
