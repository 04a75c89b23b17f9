//! Seeded synthetic fixture renderers.
//!
//! Real recordings are bulky and hard to redistribute, so the test suite,
//! the book examples, and the CLI training demos all run on procedurally
//! rendered scenes: face proxies with a dark eye band over bright cheeks,
//! eye crops with an iris disk or a closed lid, almond eye outlines with
//! known corner positions, spectacle frames, and smooth "natural" rasters.
//! Every generator takes a caller-seeded RNG, so fixtures are reproducible.

use crate::imgcore::{GrayImage, Rect};
use rand::Rng;

/// Smooth band-limited image with a brightness-symmetric value multiset: a
/// mixture of random sinusoids fills the left half and the right half
/// mirrors it inverted about mid-range, so the histogram is symmetric about
/// `(lo + hi) / 2`. Used as the natural-statistics fixture family.
pub fn natural_image(width: usize, height: usize, rng: &mut impl Rng) -> GrayImage {
    let n_waves = rng.random_range(3..6usize);
    let waves: Vec<(f64, f64, f64, f64)> = (0..n_waves)
        .map(|_| {
            (
                rng.random_range(0.08..0.35),  // fx (cycles per pixel)
                rng.random_range(0.08..0.35),  // fy
                rng.random_range(0.0..std::f64::consts::TAU), // phase
                rng.random_range(0.4..1.0),    // amplitude
            )
        })
        .collect();
    // Odd level sum keeps the symmetry center strictly between two levels.
    let lo = rng.random_range(5..30u16) * 2;
    let hi = rng.random_range(90..123u16) * 2 + 1;

    let half = width / 2;
    let mut field = vec![0.0f64; half * height];
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    for y in 0..height {
        for x in 0..half {
            let mut v = 0.0;
            for &(fx, fy, ph, amp) in &waves {
                v += amp
                    * (std::f64::consts::TAU * (fx * x as f64 + fy * y as f64) + ph).sin();
            }
            field[y * half + x] = v;
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
    }
    let span = (max_v - min_v).max(1e-9);
    let level = |x: usize, y: usize| {
        let t = (field[y * half + x] - min_v) / span;
        (lo as f64 + t * (hi - lo) as f64).round() as u16
    };
    GrayImage::from_fn(width, height, |x, y| {
        if x < half {
            level(x, y) as u8
        } else if x < 2 * half {
            // Mirror-inverted: exact integer reflection about (lo+hi)/2.
            (lo + hi - level(x - half, y)) as u8
        } else {
            // Odd width: repeat the last mirrored column.
            (lo + hi - level(half - 1, y)) as u8
        }
    })
    .expect("valid shape")
}

fn noisy(base: f64, spread: u8, rng: &mut impl Rng) -> u8 {
    let jitter = rng.random_range(-(spread as i32)..=spread as i32);
    (base as i32 + jitter).clamp(0, 255) as u8
}

/// Face-proxy scene: a bright face patch with a dark eye band and a mouth
/// stroke, dropped on a textured background. Returns the image; the face
/// rect is the caller's `face` argument.
pub fn face_scene(
    width: usize,
    height: usize,
    face: Rect,
    rng: &mut impl Rng,
) -> GrayImage {
    let mut img = GrayImage::from_fn(width, height, |_, _| noisy(120.0, 25, rng))
        .expect("valid shape");
    draw_face_proxy(&mut img, face, rng);
    img
}

/// Paints the face-proxy pattern into `face`: bright cheeks/forehead with a
/// dark band across the eye line.
pub fn draw_face_proxy(img: &mut GrayImage, face: Rect, rng: &mut impl Rng) {
    let (fx, fy, fw, fh) = (face.x, face.y, face.w, face.h);
    for y in 0..fh {
        for x in 0..fw {
            let ry = y as f64 / fh as f64;
            let v = if (0.25..0.45).contains(&ry) {
                noisy(60.0, 10, rng) // eye band
            } else {
                noisy(205.0, 10, rng) // skin
            };
            if fx + x < img.width() && fy + y < img.height() {
                img.set(fx + x, fy + y, v);
            }
        }
    }
}

/// Renders a face-proxy window of the given size (the canonical training
/// patch for the detector).
pub fn face_window(side: usize, rng: &mut impl Rng) -> GrayImage {
    let mut img = GrayImage::filled(side, side, 0).expect("valid shape");
    draw_face_proxy(
        &mut img,
        Rect::new(0, 0, side, side).expect("valid rect"),
        rng,
    );
    img
}

/// Face window with slight framing jitter: the proxy fills 90-100% of the
/// window with a small offset, widening the detector's acceptance basin to
/// cover scan-grid misalignment.
pub fn jittered_face_window(side: usize, rng: &mut impl Rng) -> GrayImage {
    // Covers the worst-case fit between adjacent rungs of the 1.25 scale
    // ladder (a tight face fills at least 1/sqrt(1.25) of the best window).
    let fill = rng.random_range(0.88..1.0);
    let fside = ((side as f64 * fill) as usize).max(8);
    let slack = side - fside;
    let fx = rng.random_range(0..=slack);
    let fy = rng.random_range(0..=slack);
    let mut img =
        GrayImage::from_fn(side, side, |_, _| noisy(140.0, 25, rng)).expect("valid shape");
    draw_face_proxy(
        &mut img,
        Rect::new(fx, fy, fside, fside).expect("valid rect"),
        rng,
    );
    img
}

/// Negative training window: background textures plus hard negatives —
/// loosely framed and over-zoomed faces that teach scale discrimination.
pub fn negative_window(side: usize, rng: &mut impl Rng) -> GrayImage {
    match rng.random_range(0..9u8) {
        0 => GrayImage::from_fn(side, side, |_, _| noisy(130.0, 45, rng)).expect("valid shape"),
        1 => {
            let slope = rng.random_range(0.5..3.0);
            let base = rng.random_range(20.0..120.0);
            GrayImage::from_fn(side, side, |x, y| {
                noisy((base + slope * (x + y) as f64).min(250.0), 8, rng)
            })
            .expect("valid shape")
        }
        2 => {
            // Bright band over dark field: contrast inverted vs. a face.
            GrayImage::from_fn(side, side, |_, y| {
                let ry = y as f64 / side as f64;
                if (0.25..0.45).contains(&ry) {
                    noisy(210.0, 10, rng)
                } else {
                    noisy(70.0, 10, rng)
                }
            })
            .expect("valid shape")
        }
        3 | 4 => scene_negative(side, rng),
        5 => tilted_face_window(side, rng),
        6 => {
            // Concentric over-zoom just past the positive basin: the window
            // sits inside a face 1.35-2.2 times its size.
            let ratio = rng.random_range(1.35..2.2);
            let big = (side as f64 * ratio) as usize;
            let mut canvas = GrayImage::from_fn(big, big, |_, _| noisy(130.0, 25, rng))
                .expect("valid shape");
            draw_face_proxy(
                &mut canvas,
                Rect::new(0, 0, big, big).expect("valid rect"),
                rng,
            );
            let off = (big - side) / 2;
            canvas
                .crop(Rect::new(off, off, side, side).expect("valid rect"))
                .expect("inside canvas")
        }
        7 => {
            // Concentric loose framing: the face fills 45-72% of the window.
            let fill = rng.random_range(0.45..0.72);
            let fside = ((side as f64 * fill) as usize).max(6);
            let off = (side - fside) / 2;
            let mut img = GrayImage::from_fn(side, side, |_, _| noisy(130.0, 25, rng))
                .expect("valid shape");
            draw_face_proxy(
                &mut img,
                Rect::new(off, off, fside, fside).expect("valid rect"),
                rng,
            );
            img
        }
        _ => GrayImage::from_fn(side, side, |_, _| noisy(200.0, 12, rng)).expect("valid shape"),
    }
}

/// In-plane tilted face, tightly framed: trains the upright detector to
/// reject rotations large enough for the rotation search to handle.
pub fn tilted_face_window(side: usize, rng: &mut impl Rng) -> GrayImage {
    let canvas = side * 3;
    let fside = side + side / 2;
    let face = Rect::new((canvas - fside) / 2, (canvas - fside) / 2, fside, fside)
        .expect("valid rect");
    let scene = face_scene(canvas, canvas, face, rng);
    let theta = rng.random_range(18.0..50.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let rotated = crate::imgcore::affine_rotate(&scene, theta).expect("finite angle");
    let crop = rotated.crop(face).expect("inside canvas");
    crate::imgcore::resize_bicubic(&crop, side, side).expect("valid resize")
}

/// Bootstrap-style hard negative: a crop from a rendered face scene whose
/// overlap with the true face box stays below IoU 0.35, resized to the
/// window size. Covers shifted faces, band fragments, loose framings and
/// over-zooms in realistic proportion.
pub fn scene_negative(side: usize, rng: &mut impl Rng) -> GrayImage {
    let canvas = side * 4;
    let fside = rng.random_range(side..=2 * side);
    let face = Rect::new(
        rng.random_range(0..=canvas - fside),
        rng.random_range(0..=canvas - fside),
        fside,
        fside,
    )
    .expect("valid rect");
    let scene = face_scene(canvas, canvas, face, rng);
    for _ in 0..50 {
        let cside = rng.random_range(side / 2..=(2 * side).min(canvas));
        let crop = Rect::new(
            rng.random_range(0..=canvas - cside),
            rng.random_range(0..=canvas - cside),
            cside,
            cside,
        )
        .expect("valid rect");
        if crop.iou(&face) < 0.35 {
            let patch = scene.crop(crop).expect("inside scene");
            return crate::imgcore::resize_bicubic(&patch, side, side).expect("valid resize");
        }
    }
    GrayImage::from_fn(side, side, |_, _| noisy(130.0, 40, rng)).expect("valid shape")
}

/// Parameters for the rendered eye crop.
#[derive(Debug, Clone, Copy)]
pub struct IrisParams {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub iris_level: u8,
    pub sclera_level: u8,
    /// Bright speck painted on the iris: `(x, y, half_size)`.
    pub glint: Option<(usize, usize, usize)>,
    /// Fraction of the iris covered by the upper lid, 0..1.
    pub lid_occlusion: f64,
    pub noise: u8,
}

impl Default for IrisParams {
    fn default() -> Self {
        Self {
            cx: 0.0,
            cy: 0.0,
            radius: 12.0,
            iris_level: 40,
            sclera_level: 215,
            glint: None,
            lid_occlusion: 0.0,
            noise: 0,
        }
    }
}

/// Eye crop with a dark iris disk on a bright field.
pub fn eye_with_iris(
    width: usize,
    height: usize,
    p: IrisParams,
    rng: &mut impl Rng,
) -> GrayImage {
    let lid_y = p.cy - p.radius + 2.0 * p.radius * p.lid_occlusion;
    let mut img = GrayImage::from_fn(width, height, |x, y| {
        let dx = x as f64 - p.cx;
        let dy = y as f64 - p.cy;
        let inside = dx * dx + dy * dy <= p.radius * p.radius;
        let occluded = p.lid_occlusion > 0.0 && (y as f64) < lid_y;
        if inside && !occluded {
            noisy(p.iris_level as f64, p.noise, rng)
        } else {
            noisy(p.sclera_level as f64, p.noise, rng)
        }
    })
    .expect("valid shape");
    if let Some((gx, gy, gs)) = p.glint {
        for y in gy.saturating_sub(gs)..=(gy + gs).min(height - 1) {
            for x in gx.saturating_sub(gs)..=(gx + gs).min(width - 1) {
                img.set(x, y, 250);
            }
        }
    }
    img
}

/// Open-eye training crop: iris disk with light lid shading.
pub fn open_eye_crop(width: usize, height: usize, rng: &mut impl Rng) -> GrayImage {
    let cx = width as f64 / 2.0 + rng.random_range(-3.0..3.0);
    let cy = height as f64 / 2.0 + rng.random_range(-2.0..2.0);
    let radius = rng.random_range(7.0..10.0);
    eye_with_iris(
        width,
        height,
        IrisParams {
            cx,
            cy,
            radius,
            iris_level: rng.random_range(25..55),
            sclera_level: rng.random_range(195..235),
            noise: 8,
            ..IrisParams::default()
        },
        rng,
    )
}

/// Closed-eye training crop: a dark horizontal lid band across bright skin.
pub fn closed_eye_crop(width: usize, height: usize, rng: &mut impl Rng) -> GrayImage {
    let band_c = height as f64 * (0.5 + rng.random_range(-0.06..0.06));
    let band_h = height as f64 * rng.random_range(0.10..0.16);
    let skin = rng.random_range(185..225) as f64;
    let lid = rng.random_range(60..95) as f64;
    GrayImage::from_fn(width, height, |_, y| {
        let d = (y as f64 - band_c).abs();
        if d <= band_h {
            noisy(lid, 8, rng)
        } else {
            noisy(skin, 8, rng)
        }
    })
    .expect("valid shape")
}

/// Almond-shaped eye outline: two parabolic lid arcs meeting at the corners.
/// Returns the image and the exact left/right corner positions.
pub fn almond_eye(
    width: usize,
    height: usize,
    rng: &mut impl Rng,
) -> (GrayImage, (usize, usize), (usize, usize)) {
    let margin = width / 10;
    let left = (margin, height / 2);
    let right = (width - 1 - margin, height / 2);
    let span = (right.0 - left.0) as f64;
    let bulge = height as f64 * 0.28;

    let mut img =
        GrayImage::from_fn(width, height, |_, _| noisy(225.0, 4, rng)).expect("valid shape");
    for xi in left.0..=right.0 {
        let t = (xi - left.0) as f64 / span; // 0..1 along the eye
        let arch = 4.0 * t * (1.0 - t) * bulge;
        let y_up = (left.1 as f64 - arch).round() as isize;
        let y_dn = (left.1 as f64 + arch).round() as isize;
        for dy in 0..2isize {
            for &yy in &[y_up + dy, y_dn - dy] {
                if yy >= 0 && (yy as usize) < height {
                    img.set(xi, yy as usize, 35);
                }
            }
        }
    }
    (img, left, right)
}

/// Logistic position profile `amp / (1 + exp(-a (t - t0)))` sampled at
/// `n` frames; `a` is the rate in 1/frame units.
pub fn sigmoid_trajectory(n: usize, t0: f64, a: f64, amp: f64) -> Vec<f64> {
    (0..n)
        .map(|k| amp / (1.0 + (-a * (k as f64 - t0)).exp()))
        .collect()
}

/// Renders one eye frame per horizontal iris offset in `offsets` (pixels
/// relative to the left corner). The almond outline stays fixed, so eye
/// corners are stable across the clip.
pub fn saccade_clip(
    width: usize,
    height: usize,
    offsets: &[f64],
    radius: f64,
    rng: &mut impl Rng,
) -> (Vec<GrayImage>, (usize, usize), (usize, usize)) {
    let margin = width / 10;
    let left = (margin, height / 2);
    let right = (width - 1 - margin, height / 2);
    let mut frames = Vec::with_capacity(offsets.len());
    for &off in offsets {
        let (mut img, _, _) = almond_eye(width, height, rng);
        let cx = left.0 as f64 + off;
        let cy = height as f64 / 2.0;
        for y in 0..height {
            for x in 0..width {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                if dx * dx + dy * dy <= radius * radius {
                    img.set(x, y, 45);
                }
            }
        }
        frames.push(img);
    }
    (frames, left, right)
}

/// Face crop wearing spectacles: sharp dark frame outlines around both eyes
/// plus a bridge, in the upper half of the crop.
pub fn spectacle_face(width: usize, height: usize, rng: &mut impl Rng) -> GrayImage {
    let mut img = bare_face(width, height, rng);
    let lens_w = (width as f64 * 0.36) as usize;
    let lens_h = (height as f64 * 0.18) as usize;
    let y0 = (height as f64 * 0.22) as usize;
    let gap = (width as f64 * 0.08) as usize;
    let x_left = (width - 2 * lens_w - gap) / 2;
    let x_right = x_left + lens_w + gap;

    let mut outline = |x0: usize, y0: usize, w: usize, h: usize| {
        for t in 0..2usize {
            for x in x0..x0 + w {
                img.set(x, y0 + t, 15);
                img.set(x, y0 + h - 1 - t, 15);
            }
            for y in y0..y0 + h {
                img.set(x0 + t, y, 15);
                img.set(x0 + w - 1 - t, y, 15);
            }
        }
    };
    outline(x_left, y0, lens_w, lens_h);
    outline(x_right, y0, lens_w, lens_h);
    // Bridge between the lenses.
    let bridge_y = y0 + lens_h / 3;
    for x in x_left + lens_w..x_right {
        img.set(x, bridge_y, 15);
        img.set(x, bridge_y + 1, 15);
    }
    img
}

/// Face crop without spectacles: smooth skin, soft eyebrow smudges and soft
/// small irises — no sharp long structures.
pub fn bare_face(width: usize, height: usize, rng: &mut impl Rng) -> GrayImage {
    let brow_y = height as f64 * 0.20;
    let eye_y = height as f64 * 0.32;
    let lx = width as f64 * 0.30;
    let rx = width as f64 * 0.70;
    GrayImage::from_fn(width, height, |x, y| {
        let mut v = 195.0;
        for &cx in &[lx, rx] {
            // Soft eyebrow: wide shallow Gaussian ridge.
            let bx = (x as f64 - cx) / (width as f64 * 0.08);
            let by = (y as f64 - brow_y) / 2.5;
            v -= 30.0 * (-(bx * bx + by * by)).exp();
            // Soft iris smudge.
            let ix = (x as f64 - cx) / 3.5;
            let iy = (y as f64 - eye_y) / 3.5;
            v -= 55.0 * (-(ix * ix + iy * iy)).exp();
        }
        noisy(v, 4, rng)
    })
    .expect("valid shape")
}
