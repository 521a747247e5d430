//! Keypoint visualization: detected points, first-pass selections and
//! augmented re-selections drawn as rings in three colors.

use crate::raster::RgbImage;
use crate::scalespace::Keypoint;
use crate::selection::SelectionResult;

pub const DETECTED_COLOR: [u8; 3] = [70, 140, 255];
pub const SELECTED_COLOR: [u8; 3] = [50, 220, 90];
pub const ENLARGED_COLOR: [u8; 3] = [245, 70, 60];

fn draw_ring(img: &mut RgbImage, cx: f32, cy: f32, radius: f32, rgb: [u8; 3]) {
    let r = radius.max(1.5);
    let x0 = (cx - r - 1.0).floor() as i64;
    let x1 = (cx + r + 1.0).ceil() as i64;
    let y0 = (cy - r - 1.0).floor() as i64;
    let y1 = (cy + r + 1.0).ceil() as i64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if x < 0 || y < 0 || x >= img.width() as i64 || y >= img.height() as i64 {
                continue;
            }
            let d = ((x as f32 - cx).powi(2) + (y as f32 - cy).powi(2)).sqrt();
            if (d - r).abs() <= 0.8 {
                img.set(x as u32, y as u32, rgb);
            }
        }
    }
}

/// Render an overlay: every detected keypoint in blue, first-pass
/// selections in green, augmented (enlarged-patch) entries in red.
pub fn render_keypoint_overlay(
    image: &RgbImage,
    detected: &[Keypoint],
    selection: &SelectionResult,
) -> RgbImage {
    let mut out = image.clone();
    for kp in detected {
        draw_ring(&mut out, kp.x, kp.y, 2.0, DETECTED_COLOR);
    }
    for entry in &selection.selected {
        let kp = &entry.point.keypoint;
        if entry.enlarged {
            draw_ring(&mut out, kp.x, kp.y, 6.0, ENLARGED_COLOR);
        } else {
            draw_ring(&mut out, kp.x, kp.y, 4.0, SELECTED_COLOR);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{ScoredKeypoint, SelectedPoint};

    #[test]
    fn overlay_marks_all_three_roles() {
        let img = RgbImage::filled(64, 64, [0, 0, 0]);
        let kp = |x: f32, y: f32| Keypoint {
            x,
            y,
            sigma: 2.0,
            dog_response: 0.1,
        };
        let detected = vec![kp(10.0, 10.0), kp(30.0, 30.0), kp(50.0, 50.0)];
        let selection = SelectionResult {
            selected: vec![
                SelectedPoint {
                    point: ScoredKeypoint {
                        keypoint: kp(30.0, 30.0),
                        score: 1.0,
                    },
                    enlarged: false,
                },
                SelectedPoint {
                    point: ScoredKeypoint {
                        keypoint: kp(50.0, 50.0),
                        score: 0.5,
                    },
                    enlarged: true,
                },
            ],
            found_n: 1,
            remain_n: 1,
        };
        let out = render_keypoint_overlay(&img, &detected, &selection);
        let has_color = |rgb: [u8; 3]| {
            (0..64u32).any(|y| (0..64u32).any(|x| out.get(x, y) == rgb))
        };
        assert!(has_color(DETECTED_COLOR));
        assert!(has_color(SELECTED_COLOR));
        assert!(has_color(ENLARGED_COLOR));
        // The source image is untouched.
        assert!(img.pixels().iter().all(|&v| v == 0));
    }
}
