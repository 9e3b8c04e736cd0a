//! Rooftop extraction from multi-band imagery.
//!
//! Edges come from the morphological gradient (dilation minus erosion, maximum
//! over bands). Closed edge loops are filled, the enclosed objects are labelled,
//! and cars and roads are dropped by area and Feret elongation. Surviving
//! regions are traced along pixel edges, simplified and scaled to meters.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods are unavailable without std
use num_traits::Float;

use crate::geom::{convex_hull, feret_diameters, ring_signed_area, Point, RoofPolygon};
use crate::{error::invalid, Error, Result};

/// Ground sample distance of the reference imagery, meters per pixel.
pub const DEFAULT_RESOLUTION: f64 = 0.31;

#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    /// Meters per pixel.
    pub resolution: f64,
    /// Row-major intensity planes, one per band.
    pub bands: Vec<Vec<f32>>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, resolution: f64, bands: Vec<Vec<f32>>) -> Result<Self> {
        if width == 0 || height == 0 || bands.is_empty() {
            return Err(invalid("image is empty"));
        }
        if !(resolution > 0.0) {
            return Err(invalid("resolution must be positive"));
        }
        if bands.iter().any(|b| b.len() != width * height) {
            return Err(invalid("all bands must be width x height"));
        }
        Ok(RasterImage {
            width,
            height,
            resolution,
            bands,
        })
    }

    pub fn from_fn(width: usize, height: usize, resolution: f64, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        let mut band = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                band.push(f(x, y));
            }
        }
        RasterImage::new(width, height, resolution, vec![band])
    }

    pub fn get(&self, band: usize, x: usize, y: usize) -> f32 {
        self.bands[band][y * self.width + x]
    }

    fn check(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.bands.is_empty() {
            return Err(invalid("image is empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a || *b).collect(),
        }
    }

    /// Binary erosion with the kernel; pixels outside the image count as unset.
    pub fn eroded(&self, kernel: &StructuringKernel) -> BinaryMask {
        let mut out = BinaryMask::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let keep = kernel.offsets().all(|(dx, dy)| {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    nx >= 0
                        && ny >= 0
                        && (nx as usize) < self.width
                        && (ny as usize) < self.height
                        && self.get(nx as usize, ny as usize)
                });
                out.set(x, y, keep);
            }
        }
        out
    }
}

/// Symmetric binary neighbourhood used for grayscale morphology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringKernel {
    pub radius: usize,
    /// `(2r+1)^2` row-major mask.
    pub mask: Vec<bool>,
}

impl StructuringKernel {
    /// Disk of the given pixel radius.
    pub fn disk(radius: usize) -> Self {
        let side = 2 * radius + 1;
        let r = radius as isize;
        let mut mask = Vec::with_capacity(side * side);
        for dy in -r..=r {
            for dx in -r..=r {
                mask.push(dx * dx + dy * dy <= r * r);
            }
        }
        StructuringKernel { radius, mask }
    }

    /// Digital line through the center, `2*(length/2)+1` pixels long.
    pub fn line(length: usize, angle_deg: f64) -> Self {
        let half = length / 2;
        let side = 2 * half + 1;
        let mut mask = vec![false; side * side];
        let t = angle_deg.to_radians();
        let (dx, dy) = (t.cos(), -t.sin());
        // step along the dominant axis so the line has no gaps
        let scale = 1.0 / dx.abs().max(dy.abs());
        for i in -(half as isize)..=(half as isize) {
            let x = (i as f64 * dx * scale).round() as isize + half as isize;
            let y = (i as f64 * dy * scale).round() as isize + half as isize;
            mask[y as usize * side + x as usize] = true;
        }
        StructuringKernel { radius: half, mask }
    }

    pub fn offsets(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let side = 2 * self.radius + 1;
        let r = self.radius as isize;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(i, _)| ((i % side) as isize - r, (i / side) as isize - r))
    }
}

/// Grayscale dilation or erosion. With `replicate` the border pixels extend
/// outward; otherwise out-of-image samples are skipped.
fn morph(band: &[f32], w: usize, h: usize, kernel: &StructuringKernel, dilate: bool, replicate: bool) -> Vec<f32> {
    let offs: Vec<(isize, isize)> = kernel.offsets().collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = if dilate { f32::NEG_INFINITY } else { f32::INFINITY };
            for &(dx, dy) in &offs {
                let (mut nx, mut ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    if !replicate {
                        continue;
                    }
                    nx = nx.clamp(0, w as isize - 1);
                    ny = ny.clamp(0, h as isize - 1);
                }
                let v = band[ny as usize * w + nx as usize];
                acc = if dilate { acc.max(v) } else { acc.min(v) };
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Per-band dilation minus erosion, then the per-pixel maximum over bands.
pub fn morphological_gradient(image: &RasterImage, kernel: &StructuringKernel) -> Result<RasterImage> {
    image.check()?;
    let side = 2 * kernel.radius + 1;
    if kernel.offsets().next().is_none() || side > image.width.max(image.height) {
        return Err(invalid("kernel does not fit in the image"));
    }
    let (w, h) = (image.width, image.height);
    let mut grad = vec![0.0f32; w * h];
    for band in &image.bands {
        let d = morph(band, w, h, kernel, true, false);
        let e = morph(band, w, h, kernel, false, false);
        for i in 0..w * h {
            grad[i] = grad[i].max(d[i] - e[i]);
        }
    }
    RasterImage::new(w, h, image.resolution, vec![grad])
}

/// Otsu's threshold over a 256-bin histogram of the first band.
pub fn otsu_threshold(image: &RasterImage) -> f32 {
    let band = &image.bands[0];
    let (lo, hi) = band
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return hi;
    }
    const BINS: usize = 256;
    let scale = (BINS - 1) as f32 / (hi - lo);
    let mut hist = [0u64; BINS];
    for &v in band {
        hist[((v - lo) * scale) as usize] += 1;
    }
    let total = band.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_bin) = (-1.0, 0usize);
    for (i, &c) in hist.iter().enumerate() {
        w0 += c as f64;
        if w0 == 0.0 {
            continue;
        }
        let w1 = total - w0;
        if w1 == 0.0 {
            break;
        }
        sum0 += i as f64 * c as f64;
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_bin = i;
        }
    }
    lo + (best_bin as f32 + 0.5) / scale
}

const N4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const N8: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

fn neighbours(x: usize, y: usize, w: usize, h: usize, n: &'static [(isize, isize)]) -> impl Iterator<Item = (usize, usize)> {
    n.iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x as isize + dx, y as isize + dy);
        (nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h).then_some((nx as usize, ny as usize))
    })
}

/// Binarizes `value > threshold`, then fills every background pixel that
/// cannot reach the image border through 8-connected background.
pub fn threshold_and_fill(gradient: &RasterImage, threshold: f32) -> Result<BinaryMask> {
    gradient.check()?;
    let (w, h) = (gradient.width, gradient.height);
    let fg: Vec<bool> = gradient.bands[0].iter().map(|&v| v > threshold).collect();
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) && !fg[y * w + x] && !outside[y * w + x] {
                outside[y * w + x] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for (nx, ny) in neighbours(x, y, w, h, &N8) {
            let i = ny * w + nx;
            if !fg[i] && !outside[i] {
                outside[i] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    Ok(BinaryMask {
        width: w,
        height: h,
        data: outside.into_iter().map(|o| !o).collect(),
    })
}

/// 4-connected foreground component with its metric shape descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRegion {
    pub label: u32,
    /// `(x, y)` pixel coordinates, row-major order.
    pub pixels: Vec<(usize, usize)>,
    /// Square meters.
    pub area: f64,
    /// Meters.
    pub feret_max: f64,
    pub feret_min: f64,
}

impl LabeledRegion {
    fn from_pixels(label: u32, mut pixels: Vec<(usize, usize)>, resolution: f64) -> Self {
        pixels.sort_by_key(|&(x, y)| (y, x));
        // per-row extremes are enough for the convex hull of the pixel squares
        let mut corners = Vec::new();
        let mut i = 0;
        while i < pixels.len() {
            let y = pixels[i].1;
            let mut j = i;
            while j < pixels.len() && pixels[j].1 == y {
                j += 1;
            }
            let (x0, x1) = (pixels[i].0 as f64, pixels[j - 1].0 as f64 + 1.0);
            let yf = y as f64;
            for (cx, cy) in [(x0, yf), (x0, yf + 1.0), (x1, yf), (x1, yf + 1.0)] {
                corners.push(Point::new(cx * resolution, cy * resolution));
            }
            i = j;
        }
        let (feret_max, feret_min) = feret_diameters(&convex_hull(&corners)).unwrap_or((0.0, 0.0));
        LabeledRegion {
            label,
            area: pixels.len() as f64 * resolution * resolution,
            pixels,
            feret_max,
            feret_min,
        }
    }

    pub fn mask(&self, width: usize, height: usize) -> BinaryMask {
        let mut m = BinaryMask::new(width, height);
        for &(x, y) in &self.pixels {
            m.set(x, y, true);
        }
        m
    }
}

/// Labels 4-connected foreground components in row-major discovery order.
pub fn label_regions(mask: &BinaryMask, resolution: f64) -> Vec<LabeledRegion> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    for start in 0..w * h {
        if !mask.data[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut pixels = Vec::new();
        let mut queue = VecDeque::from([(start % w, start / w)]);
        while let Some((x, y)) = queue.pop_front() {
            pixels.push((x, y));
            for (nx, ny) in neighbours(x, y, w, h, &N4) {
                let i = ny * w + nx;
                if mask.data[i] && !seen[i] {
                    seen[i] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        regions.push(LabeledRegion::from_pixels(regions.len() as u32 + 1, pixels, resolution));
    }
    regions
}

/// Keeps regions at least `min_area` large whose Feret ratio stays within
/// `max_elongation`. Regions with zero minimum width are always dropped.
pub fn filter_regions(regions: &[LabeledRegion], min_area: f64, max_elongation: f64) -> Result<Vec<LabeledRegion>> {
    if !(min_area >= 0.0) || !(max_elongation >= 1.0) {
        return Err(Error::Config("filter needs min_area >= 0 and max_elongation >= 1".into()));
    }
    Ok(regions
        .iter()
        .filter(|r| r.area >= min_area && r.feret_min > 0.0 && r.feret_max / r.feret_min <= max_elongation)
        .cloned()
        .collect())
}

/// Pixels whose NDVI `(nir - red) / (nir + red)` exceeds `threshold`.
pub fn ndvi_mask(image: &RasterImage, red_band: usize, nir_band: usize, threshold: f64) -> Result<BinaryMask> {
    image.check()?;
    let nb = image.bands.len();
    if red_band >= nb || nir_band >= nb {
        return Err(Error::Config(alloc::format!(
            "NDVI needs bands {red_band} and {nir_band} but the image has {nb}"
        )));
    }
    let (red, nir) = (&image.bands[red_band], &image.bands[nir_band]);
    let data = red
        .iter()
        .zip(nir)
        .map(|(&r, &n)| {
            let den = n as f64 + r as f64;
            den != 0.0 && (n as f64 - r as f64) / den > threshold
        })
        .collect();
    Ok(BinaryMask {
        width: image.width,
        height: image.height,
        data,
    })
}

/// Simplified morphological shadow index: the mean black top-hat (closing
/// minus image) over linear elements at 0, 45, 90 and 135 degrees for each
/// length, thresholded. Brightness is the per-pixel maximum over bands.
pub fn shadow_mask(image: &RasterImage, kernel_lengths: &[usize], threshold: f32) -> Result<BinaryMask> {
    image.check()?;
    let (w, h) = (image.width, image.height);
    let mut bright = image.bands[0].clone();
    for band in &image.bands[1..] {
        for (b, &v) in bright.iter_mut().zip(band) {
            *b = b.max(v);
        }
    }
    let mut msi = vec![0.0f32; w * h];
    let mut count = 0usize;
    for &len in kernel_lengths {
        for angle in [0.0, 45.0, 90.0, 135.0] {
            let k = StructuringKernel::line(len, angle);
            let closed = morph(&morph(&bright, w, h, &k, true, true), w, h, &k, false, true);
            for i in 0..w * h {
                msi[i] += closed[i] - bright[i];
            }
            count += 1;
        }
    }
    let mut mask = BinaryMask::new(w, h);
    if count > 0 {
        let n = count as f32;
        for (m, &v) in mask.data.iter_mut().zip(&msi) {
            *m = v / n > threshold;
        }
    }
    Ok(mask)
}

/// Traces each region (minus `exclusion` pixels) into a polygon in meters.
///
/// Contours follow pixel edges, are simplified with Douglas-Peucker at a
/// one-pixel tolerance, and are flipped so `+y` points north (up the image).
/// Excluded pixels inside a region become obstacle holes.
pub fn regions_to_polygons(
    regions: &[LabeledRegion],
    width: usize,
    height: usize,
    resolution: f64,
    exclusion: Option<&BinaryMask>,
) -> Result<Vec<RoofPolygon>> {
    if regions.is_empty() {
        return Err(invalid("no regions to vectorize"));
    }
    let mut out = Vec::new();
    for region in regions {
        let mut m = BinaryMask::new(width, height);
        for &(x, y) in &region.pixels {
            if !exclusion.is_some_and(|e| e.get(x, y)) {
                m.set(x, y, true);
            }
        }
        for piece in label_regions(&m, resolution) {
            match trace_polygon(&piece.pixels, width, height, resolution) {
                Some(p) => out.push(p),
                None => log::warn!(
                    "dropping region {} ({} px): thinner than one pixel after simplification",
                    region.label,
                    piece.pixels.len()
                ),
            }
        }
    }
    Ok(out)
}

fn trace_polygon(pixels: &[(usize, usize)], width: usize, height: usize, resolution: f64) -> Option<RoofPolygon> {
    let (vw, vh) = (width + 1, height + 1);
    let inside = |x: isize, y: isize| -> bool {
        x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height && PixelSet::contains(pixels, x as usize, y as usize)
    };
    // directed crack edges with the pixel on the right (y-down frame)
    let mut out_edges: alloc::collections::BTreeMap<usize, Vec<(usize, (isize, isize))>> = Default::default();
    let vid = |x: usize, y: usize| y * vw + x;
    for &(x, y) in pixels {
        let (xi, yi) = (x as isize, y as isize);
        let mut add = |x0: usize, y0: usize, x1: usize, y1: usize| {
            out_edges
                .entry(vid(x0, y0))
                .or_default()
                .push((vid(x1, y1), (x1 as isize - x0 as isize, y1 as isize - y0 as isize)));
        };
        if !inside(xi, yi - 1) {
            add(x, y, x + 1, y);
        }
        if !inside(xi + 1, yi) {
            add(x + 1, y, x + 1, y + 1);
        }
        if !inside(xi, yi + 1) {
            add(x + 1, y + 1, x, y + 1);
        }
        if !inside(xi - 1, yi) {
            add(x, y + 1, x, y);
        }
    }
    let _ = vh;
    let mut rings: Vec<Vec<Point>> = Vec::new();
    while let Some((&start, _)) = out_edges.iter().find(|(_, v)| !v.is_empty()) {
        let (mut next, mut dir) = out_edges.get_mut(&start).and_then(Vec::pop)?;
        let mut ring = vec![(start % vw, start / vw)];
        while next != start {
            ring.push((next % vw, next / vw));
            let cands = out_edges.get_mut(&next)?;
            // prefer right turn, then straight, then left: keeps diagonal pixels apart
            let prefs = [(-dir.1, dir.0), dir, (dir.1, -dir.0)];
            let idx = prefs.iter().find_map(|p| cands.iter().position(|c| c.1 == *p))?;
            let (n, d) = cands.swap_remove(idx);
            next = n;
            dir = d;
        }
        rings.push(ring.into_iter().map(|(x, y)| Point::new(x as f64, y as f64)).collect());
    }
    // the exterior is the ring with the largest enclosed area
    let ext_idx = (0..rings.len()).max_by(|&a, &b| {
        ring_signed_area(&rings[a]).abs().total_cmp(&ring_signed_area(&rings[b]).abs())
    })?;
    let to_m = |p: Point| Point::new(p.x * resolution, (height as f64 - p.y) * resolution);
    let exterior: Vec<Point> = douglas_peucker_ring(&rings[ext_idx], 1.0).into_iter().map(to_m).collect();
    if exterior.len() < 3 || ring_signed_area(&exterior).abs() < resolution * resolution {
        return None;
    }
    let holes = rings
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != ext_idx)
        .filter_map(|(_, r)| {
            let h: Vec<Point> = douglas_peucker_ring(r, 1.0).into_iter().map(to_m).collect();
            if h.len() < 3 || ring_signed_area(&h).abs() < resolution * resolution {
                log::warn!("dropping obstacle hole thinner than one pixel");
                None
            } else {
                Some(h)
            }
        })
        .collect();
    Some(RoofPolygon::new(exterior, holes))
}

/// Membership test on a row-major sorted pixel list.
struct PixelSet;

impl PixelSet {
    fn contains(pixels: &[(usize, usize)], x: usize, y: usize) -> bool {
        pixels.binary_search_by(|&(px, py)| (py, px).cmp(&(y, x))).is_ok()
    }
}

fn douglas_peucker(points: &[Point], tol: f64, keep: &mut [bool], lo: usize, hi: usize) {
    if hi <= lo + 1 {
        return;
    }
    let (a, b) = (points[lo], points[hi]);
    let mut best = (0.0, lo);
    for i in lo + 1..hi {
        let d = crate::geom::point_segment_distance(points[i], a, b);
        if d > best.0 {
            best = (d, i);
        }
    }
    if best.0 > tol {
        keep[best.1] = true;
        douglas_peucker(points, tol, keep, lo, best.1);
        douglas_peucker(points, tol, keep, best.1, hi);
    }
}

/// Douglas-Peucker on a closed ring, anchored at vertex 0 and the vertex
/// farthest from it.
pub fn douglas_peucker_ring(ring: &[Point], tol: f64) -> Vec<Point> {
    let n = ring.len();
    if n < 4 {
        return ring.to_vec();
    }
    let far = (1..n).max_by(|&a, &b| ring[0].dist(ring[a]).total_cmp(&ring[0].dist(ring[b]))).unwrap_or(1);
    let mut closed: Vec<Point> = ring.to_vec();
    closed.push(ring[0]);
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[far] = true;
    keep[n] = true;
    douglas_peucker(&closed, tol, &mut keep, 0, far);
    douglas_peucker(&closed, tol, &mut keep, far, n);
    (0..n).filter(|&i| keep[i]).map(|i| ring[i]).collect()
}
