//! Principal-component subspace models and minimum-reconstruction-error
//! sliding-window detection.
//!
//! Training forms the Gram matrix of the centered sample vectors (P x P, far
//! smaller than the pixel covariance when P is small), eigen-decomposes it by
//! power iteration with deflation, and lifts the eigenvectors back to pixel
//! space. Detection slides a window grid over a resized region and returns
//! the window whose mean-variance-normalized content reconstructs best from
//! the retained components.

use crate::error::{Error, Result};
use crate::imgcore::{resize_bicubic, GrayImage, Rect};
use std::fmt::Write as _;
use std::path::Path;

/// Mean vector plus an orthonormal basis of the retained components.
#[derive(Debug, Clone)]
pub struct SubspaceModel {
    dim: usize,
    mean: Vec<f64>,
    basis: Vec<Vec<f64>>,
    /// Covariance eigenvalues (descending) matching the basis order.
    eigenvalues: Vec<f64>,
}

const CONVERGENCE: f64 = 1e-10;
const MAX_ITER: usize = 100_000;

impl SubspaceModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Projection weights of `vec` onto the basis, after mean removal.
    pub fn project(&self, vec: &[f64]) -> Result<Vec<f64>> {
        if vec.len() != self.dim {
            return Err(Error::Input(format!(
                "vector length {} does not match model dim {}",
                vec.len(),
                self.dim
            )));
        }
        let centered: Vec<f64> = vec.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok(self.basis.iter().map(|u| dot(&centered, u)).collect())
    }

    /// Truncated model keeping only the first `k` components.
    pub fn truncated(&self, k: usize) -> Result<SubspaceModel> {
        if k == 0 || k > self.components() {
            return Err(Error::Parameter(format!(
                "cannot keep {k} of {} components",
                self.components()
            )));
        }
        Ok(SubspaceModel {
            dim: self.dim,
            mean: self.mean.clone(),
            basis: self.basis[..k].to_vec(),
            eigenvalues: self.eigenvalues[..k].to_vec(),
        })
    }

    /// Plain-text serialization with exact decimal round-trip.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subspace v1");
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "components {}", self.components());
        let _ = writeln!(s, "eigenvalues {}", join_floats(&self.eigenvalues));
        let _ = writeln!(s, "mean {}", join_floats(&self.mean));
        for u in &self.basis {
            let _ = writeln!(s, "basis {}", join_floats(u));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        expect_line(&mut lines, "subspace v1")?;
        let dim: usize = parse_field(lines.next(), "dim")?;
        let k: usize = parse_field(lines.next(), "components")?;
        let eigenvalues = parse_floats(lines.next(), "eigenvalues", k)?;
        let mean = parse_floats(lines.next(), "mean", dim)?;
        let mut basis = Vec::with_capacity(k);
        for _ in 0..k {
            basis.push(parse_floats(lines.next(), "basis", dim)?);
        }
        Ok(SubspaceModel {
            dim,
            mean,
            basis,
            eigenvalues,
        })
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn expect_line(lines: &mut std::str::Lines, want: &str) -> Result<()> {
    match lines.next() {
        Some(l) if l.trim() == want => Ok(()),
        other => Err(Error::Parse(format!("expected `{want}`, got {other:?}"))),
    }
}

fn parse_field<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}` line")))?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::Parse(format!("expected `{key}`, got `{line}`")))?;
    rest.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad `{key}` value in `{line}`")))
}

fn parse_floats(line: Option<&str>, key: &str, expect: usize) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{key}` line")))?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::Parse(format!("expected `{key}`, got `{line}`")))?;
    let vals: std::result::Result<Vec<f64>, _> =
        rest.split_whitespace().map(|t| t.parse()).collect();
    let vals = vals.map_err(|_| Error::Parse(format!("bad float in `{key}` line")))?;
    if vals.len() != expect {
        return Err(Error::Parse(format!(
            "`{key}` holds {} values, expected {expect}",
            vals.len()
        )));
    }
    Ok(vals)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains a subspace model on `P >= 2` equal-length vectors, keeping
/// `k <= P - 1` components.
///
/// The mean is subtracted, the P x P Gram matrix of the centered vectors is
/// eigen-decomposed (power iteration with deflation, `1e-10` residual), and
/// each small eigenvector `v` lifts to sample space as `u = A v`, normalized
/// to unit length. Components come out in descending eigenvalue order with
/// the sign fixed so each vector's largest-magnitude entry is positive.
/// Reported eigenvalues are those of the sample covariance `(1/P) A A^T`.
pub fn pca_train(vectors: &[Vec<f64>], k: usize) -> Result<SubspaceModel> {
    let p = vectors.len();
    if p < 2 {
        return Err(Error::Input(format!("need at least 2 vectors, got {p}")));
    }
    if k == 0 || k > p - 1 {
        return Err(Error::Parameter(format!(
            "components must lie in [1, {}], got {k}",
            p - 1
        )));
    }
    let dim = vectors[0].len();
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Input("vectors must share a non-zero length".into()));
    }

    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= p as f64;
    }
    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    // Gram matrix of the centered samples.
    let mut gram = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let g = dot(&centered[i], &centered[j]);
            gram[i * p + j] = g;
            gram[j * p + i] = g;
        }
    }
    let trace: f64 = (0..p).map(|i| gram[i * p + i]).sum();
    if trace <= 1e-9 {
        return Err(Error::Rank("all training vectors are identical".into()));
    }

    let mut basis = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    let mut work = gram;
    let scale = trace;
    for c in 0..k {
        let (lambda, v) = dominant_eigenpair(&work, p, scale, c);
        if lambda <= 1e-9 * scale.max(1.0) {
            return Err(Error::Rank(format!(
                "data rank {c} is below the requested {k} components"
            )));
        }
        // Lift: u = A v, then normalize.
        let mut u = vec![0.0; dim];
        for (i, sample) in centered.iter().enumerate() {
            let w = v[i];
            for (ui, s) in u.iter_mut().zip(sample) {
                *ui += w * s;
            }
        }
        let norm = dot(&u, &u).sqrt();
        if norm <= 1e-12 {
            return Err(Error::Rank(format!("component {c} lifted to zero")));
        }
        for ui in u.iter_mut() {
            *ui /= norm;
        }
        // Sign convention: largest-magnitude entry positive.
        let lead = u
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
            .map(|(i, _)| i)
            .expect("non-empty");
        if u[lead] < 0.0 {
            for ui in u.iter_mut() {
                *ui = -*ui;
            }
        }
        basis.push(u);
        eigenvalues.push(lambda / p as f64);
        // Hotelling deflation.
        for i in 0..p {
            for j in 0..p {
                work[i * p + j] -= lambda * v[i] * v[j];
            }
        }
    }

    Ok(SubspaceModel {
        dim,
        mean,
        basis,
        eigenvalues,
    })
}

/// Power iteration for the dominant eigenpair of a symmetric matrix.
fn dominant_eigenpair(m: &[f64], n: usize, scale: f64, round: usize) -> (f64, Vec<f64>) {
    // Deterministic start, varied per deflation round to dodge unlucky
    // orthogonal starts.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.37 * (((i + round * 7) % 11) as f64))
        .collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    let mut next = vec![0.0; n];
    for _ in 0..MAX_ITER {
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = dot(&m[i * n..(i + 1) * n], &v);
        }
        lambda = dot(&next, &v);
        let mut resid = 0.0;
        for i in 0..n {
            let r = next[i] - lambda * v[i];
            resid += r * r;
        }
        let norm = dot(&next, &next).sqrt();
        if norm <= 1e-15 * scale.max(1.0) {
            // Matrix annihilated this direction; eigenvalue is ~0.
            return (0.0, v);
        }
        for (slot, x) in v.iter_mut().zip(&next) {
            *slot = x / norm;
        }
        if resid.sqrt() <= CONVERGENCE * scale.max(1.0) {
            return (lambda, v);
        }
    }
    // Equal eigenvalues can keep the direction rotating inside the
    // eigenspace; the Rayleigh quotient is still correct there.
    (lambda, v)
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Distance from `vec` to its projection onto the model's span (after mean
/// removal): the minimum-reconstruction-error residual norm.
pub fn reconstruction_error(model: &SubspaceModel, vec: &[f64]) -> Result<f64> {
    let weights = model.project(vec)?;
    let mut resid = 0.0;
    for (i, (v, m)) in vec.iter().zip(&model.mean).enumerate() {
        let mut recon = 0.0;
        for (w, u) in weights.iter().zip(&model.basis) {
            recon += w * u[i];
        }
        let r = (v - m) - recon;
        resid += r * r;
    }
    Ok(resid.sqrt())
}

/// Mean-variance normalization of a window's pixels; the canonical vector
/// form used for both training windows and detection windows. A constant
/// window maps to the zero vector.
pub fn window_to_vector(window: &GrayImage) -> Vec<f64> {
    let n = window.data().len() as f64;
    let mean = window.mean();
    let var = window
        .data()
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    if std <= 1e-12 {
        return vec![0.0; window.data().len()];
    }
    window
        .data()
        .iter()
        .map(|&v| (v as f64 - mean) / std)
        .collect()
}

/// Sliding-window search parameters: window size, overlap fraction between
/// adjacent windows, and the fixed resolution the region is resized to
/// before scanning.
#[derive(Debug, Clone, Copy)]
pub struct DetectParams {
    pub window_w: usize,
    pub window_h: usize,
    pub overlap: f64,
    pub resize_w: usize,
    pub resize_h: usize,
}

impl DetectParams {
    /// Eye search: 50x40 windows at 10% overlap over a 200x70 region.
    pub fn eye() -> Self {
        Self {
            window_w: 50,
            window_h: 40,
            overlap: 0.10,
            resize_w: 200,
            resize_h: 70,
        }
    }

    /// Face search: 200x140 windows at 25% overlap, region kept at 200x140.
    pub fn face() -> Self {
        Self {
            window_w: 200,
            window_h: 140,
            overlap: 0.25,
            resize_w: 200,
            resize_h: 140,
        }
    }
}

/// Winning window of a subspace search.
#[derive(Debug, Clone)]
pub struct SubspaceDetection {
    /// Winning rect mapped back into the original region's coordinates.
    pub rect: Rect,
    /// Winning rect on the resized grid.
    pub grid_rect: Rect,
    /// Minimum reconstruction error.
    pub error: f64,
}

/// Grid positions along one axis: stride = `len * (1 - overlap)`, plus a
/// flush position so the far edge is always covered.
fn grid_positions(total: usize, len: usize, overlap: f64) -> Vec<usize> {
    let stride = ((len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let mut xs = Vec::new();
    let mut x = 0;
    while x + len <= total {
        xs.push(x);
        x += stride;
    }
    let flush = total - len;
    if xs.last() != Some(&flush) {
        xs.push(flush);
    }
    xs
}

/// Scans `roi` with the model and returns the minimum-error window; ties
/// resolve to the smaller `(y, x)`. Windows are mean-variance normalized
/// before projection, so the search keys on pattern rather than brightness.
pub fn subspace_detect(
    roi: &GrayImage,
    model: &SubspaceModel,
    params: DetectParams,
) -> Result<SubspaceDetection> {
    subspace_detect_with(roi, model, params, window_to_vector)
}

/// Like [`subspace_detect`] but with a caller-supplied window vectorizer
/// (e.g. a texture descriptor instead of raw pixels).
pub fn subspace_detect_with(
    roi: &GrayImage,
    model: &SubspaceModel,
    params: DetectParams,
    vectorize: impl Fn(&GrayImage) -> Vec<f64>,
) -> Result<SubspaceDetection> {
    if roi.width() < 8 || roi.height() < 8 {
        return Err(Error::Geometry(format!(
            "search region {}x{} below 8x8",
            roi.width(),
            roi.height()
        )));
    }
    if params.window_w > params.resize_w || params.window_h > params.resize_h {
        return Err(Error::Parameter("window larger than resized region".into()));
    }
    let resized = resize_bicubic(roi, params.resize_w, params.resize_h)?;
    let xs = grid_positions(params.resize_w, params.window_w, params.overlap);
    let ys = grid_positions(params.resize_h, params.window_h, params.overlap);

    let mut best: Option<(f64, Rect)> = None;
    for &y in &ys {
        for &x in &xs {
            let rect = Rect::new(x, y, params.window_w, params.window_h)?;
            let window = resized.crop(rect)?;
            let vec = vectorize(&window);
            let e = reconstruction_error(model, &vec)?;
            if best.as_ref().is_none_or(|(be, _)| e < *be) {
                best = Some((e, rect));
            }
        }
    }
    let (error, grid_rect) = best.expect("grid is non-empty");

    // Inverse-scale the winning rect back through the resize.
    let sx = roi.width() as f64 / params.resize_w as f64;
    let sy = roi.height() as f64 / params.resize_h as f64;
    let rx = ((grid_rect.x as f64 * sx).round() as usize).min(roi.width() - 1);
    let ry = ((grid_rect.y as f64 * sy).round() as usize).min(roi.height() - 1);
    let rw = ((grid_rect.w as f64 * sx).round() as usize).clamp(1, roi.width() - rx);
    let rh = ((grid_rect.h as f64 * sy).round() as usize).clamp(1, roi.height() - ry);
    Ok(SubspaceDetection {
        rect: Rect::new(rx, ry, rw, rh)?,
        grid_rect,
        error,
    })
}
