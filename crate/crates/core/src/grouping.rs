//! Patch extraction, nonlocal block matching and overlap-averaging
//! aggregation.
//!
//! Patches are addressed by their top-left `(row, col)` and vectorized
//! column-major. A group stacks `c` similar patches as the columns of an
//! `m × c` matrix, `m = patch_side²`, with the exemplar in column 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::matrix::Matrix;

pub type Coord = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchSpec {
    pub patch_side: usize,
    /// Spacing between exemplar patches.
    pub stride: usize,
    /// Search half-extent: candidates lie within `±window` of the exemplar.
    pub window: usize,
    /// Number of patches per group, `c`.
    pub group_size: usize,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            patch_side: 7,
            stride: 4,
            window: 20,
            group_size: 60,
        }
    }
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.patch_side < 2 {
            return Err(Error::Parameter(format!(
                "patch side {} < 2",
                self.patch_side
            )));
        }
        if self.stride < 1 || self.stride > self.patch_side {
            return Err(Error::Parameter(format!(
                "stride {} outside [1, {}]",
                self.stride, self.patch_side
            )));
        }
        if self.group_size < 1 {
            return Err(Error::Parameter("group size must be at least 1".into()));
        }
        if self.window < self.patch_side {
            return Err(Error::Parameter(format!(
                "window {} smaller than patch side {}",
                self.window, self.patch_side
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn patch_len(&self) -> usize {
        self.patch_side * self.patch_side
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchGroup {
    pub patch_side: usize,
    /// `m × c`, one vectorized patch per column.
    pub data: Matrix,
    /// Top-left corner of each column's patch.
    pub coords: Vec<Coord>,
    /// Always 0: the exemplar leads the group.
    pub exemplar_index: usize,
    /// Set when the window held fewer than `c` candidates and the best
    /// matches were repeated to fill the group.
    pub padded: bool,
}

impl PatchGroup {
    /// Gathers the patches at `coords` from `img`.
    pub fn from_coords(img: &Image, patch_side: usize, coords: Vec<Coord>, padded: bool) -> Self {
        let m = patch_side * patch_side;
        let mut data = Matrix::zeros(m, coords.len());
        for (j, &(r, c)) in coords.iter().enumerate() {
            read_patch(img, patch_side, r, c, data.column_mut(j));
        }
        PatchGroup {
            patch_side,
            data,
            coords,
            exemplar_index: 0,
            padded,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

#[inline]
fn read_patch(img: &Image, side: usize, row: usize, col: usize, out: &mut [f64]) {
    for c in 0..side {
        for r in 0..side {
            out[c * side + r] = img.get(row + r, col + c);
        }
    }
}

/// Exemplar offsets along one axis: `0, stride, 2·stride, …` plus the last
/// valid offset `len − side` when the grid misses it.
pub fn exemplar_offsets(len: usize, side: usize, stride: usize) -> Vec<usize> {
    if len < side {
        return Vec::new();
    }
    let last = len - side;
    let mut out: Vec<usize> = (0..=last).step_by(stride.max(1)).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Exemplar coordinates in raster order.
pub fn exemplar_coords(img: &Image, spec: &PatchSpec) -> Result<Vec<Coord>> {
    spec.validate()?;
    check_fits(img, spec.patch_side)?;
    let rows = exemplar_offsets(img.height(), spec.patch_side, spec.stride);
    let cols = exemplar_offsets(img.width(), spec.patch_side, spec.stride);
    Ok(rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect())
}

fn check_fits(img: &Image, side: usize) -> Result<()> {
    if img.height() < side || img.width() < side {
        return Err(Error::Shape(format!(
            "{}x{} image is smaller than a {side}x{side} patch",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Exemplar patches with their coordinates.
pub fn extract_patches(img: &Image, spec: &PatchSpec) -> Result<Vec<(Coord, Vec<f64>)>> {
    let side = spec.patch_side;
    Ok(exemplar_coords(img, spec)?
        .into_iter()
        .map(|(r, c)| {
            let mut v = vec![0.0; side * side];
            read_patch(img, side, r, c, &mut v);
            ((r, c), v)
        })
        .collect())
}

/// Squared distance between the patch at `(r, c)` and a column-major patch.
#[inline]
fn patch_distance(img: &Image, side: usize, r: usize, c: usize, reference: &[f64]) -> f64 {
    let mut acc = 0.0;
    for pc in 0..side {
        let col = &reference[pc * side..(pc + 1) * side];
        for (pr, &v) in col.iter().enumerate() {
            let d = img.get(r + pr, c + pc) - v;
            acc += d * d;
        }
    }
    acc
}

#[inline]
fn by_distance_then_raster(a: &(f64, Coord), b: &(f64, Coord)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Block matching: the `c` nearest patches (squared Euclidean distance) whose
/// top-left lies within `±window` of the exemplar. Ties go to the smaller
/// `(row, col)`. The exemplar is column 0.
pub fn match_group(img: &Image, exemplar: Coord, spec: &PatchSpec) -> Result<PatchGroup> {
    spec.validate()?;
    let coords = match_coords(img, exemplar, spec)?;
    let padded = coords.1;
    Ok(PatchGroup::from_coords(
        img,
        spec.patch_side,
        coords.0,
        padded,
    ))
}

/// Coordinates selected by [`match_group`] and its padding flag.
pub fn match_coords(img: &Image, exemplar: Coord, spec: &PatchSpec) -> Result<(Vec<Coord>, bool)> {
    let side = spec.patch_side;
    check_fits(img, side)?;
    let (max_r, max_c) = (img.height() - side, img.width() - side);
    let (er, ec) = exemplar;
    if er > max_r || ec > max_c {
        return Err(Error::Shape(format!("exemplar ({er}, {ec}) out of bounds")));
    }
    let c = spec.group_size;
    if c == 1 {
        return Ok((vec![exemplar], false));
    }

    let mut reference = vec![0.0; side * side];
    read_patch(img, side, er, ec, &mut reference);

    let (r0, r1) = (
        er.saturating_sub(spec.window),
        (er + spec.window).min(max_r),
    );
    let (c0, c1) = (
        ec.saturating_sub(spec.window),
        (ec + spec.window).min(max_c),
    );
    let mut candidates: Vec<(f64, Coord)> = Vec::with_capacity((r1 - r0 + 1) * (c1 - c0 + 1));
    for r in r0..=r1 {
        for cc in c0..=c1 {
            if (r, cc) != exemplar {
                candidates.push((patch_distance(img, side, r, cc, &reference), (r, cc)));
            }
        }
    }

    let wanted = c - 1;
    if candidates.len() > wanted {
        candidates.select_nth_unstable_by(wanted, by_distance_then_raster);
        candidates.truncate(wanted);
    }
    candidates.sort_unstable_by(by_distance_then_raster);

    let mut coords = Vec::with_capacity(c);
    coords.push(exemplar);
    coords.extend(candidates.iter().map(|&(_, p)| p));
    let padded = coords.len() < c;
    if padded {
        let found = coords.len();
        let mut k = 0;
        while coords.len() < c {
            coords.push(coords[k % found]);
            k += 1;
        }
    }
    Ok((coords, padded))
}

/// Overlap averaging: every pixel becomes the mean of all patch values
/// covering it. Pixels no patch covers take the `fallback` value.
pub fn aggregate<'a, I>(
    groups: I,
    height: usize,
    width: usize,
    fallback: Option<&Image>,
) -> Result<Image>
where
    I: IntoIterator<Item = &'a PatchGroup>,
{
    let mut acc = Accumulator::new(height, width);
    for g in groups {
        acc.add_group(g)?;
    }
    acc.finish(fallback)
}

/// Running sums for [`aggregate`].
#[derive(Debug, Clone)]
pub struct Accumulator {
    height: usize,
    width: usize,
    sums: Vec<f64>,
    counts: Vec<u32>,
}

impl Accumulator {
    pub fn new(height: usize, width: usize) -> Self {
        Accumulator {
            height,
            width,
            sums: vec![0.0; height * width],
            counts: vec![0; height * width],
        }
    }

    pub fn add_patches(&mut self, side: usize, coords: &[Coord], data: &Matrix) -> Result<()> {
        if data.rows() != side * side || data.cols() != coords.len() {
            return Err(Error::Shape(format!(
                "group data {}x{} for {} patches of side {side}",
                data.rows(),
                data.cols(),
                coords.len()
            )));
        }
        for (j, &(r, c)) in coords.iter().enumerate() {
            if r + side > self.height || c + side > self.width {
                return Err(Error::Shape(format!(
                    "patch at ({r}, {c}) leaves the image"
                )));
            }
            let col = data.column(j);
            for pc in 0..side {
                for pr in 0..side {
                    let idx = (r + pr) * self.width + c + pc;
                    self.sums[idx] += col[pc * side + pr];
                    self.counts[idx] += 1;
                }
            }
        }
        Ok(())
    }

    pub fn add_group(&mut self, g: &PatchGroup) -> Result<()> {
        self.add_patches(g.patch_side, &g.coords, &g.data)
    }

    pub fn finish(self, fallback: Option<&Image>) -> Result<Image> {
        if let Some(fb) = fallback {
            if fb.height() != self.height || fb.width() != self.width {
                return Err(Error::Shape("fallback image has the wrong size".into()));
            }
        }
        let mut pixels = Vec::with_capacity(self.sums.len());
        for (idx, (&s, &n)) in self.sums.iter().zip(&self.counts).enumerate() {
            if n > 0 {
                pixels.push(s / n as f64);
            } else if let Some(fb) = fallback {
                pixels.push(fb.pixels()[idx]);
            } else {
                return Err(Error::Coverage {
                    row: idx / self.width,
                    col: idx % self.width,
                });
            }
        }
        Image::new(self.width, self.height, pixels)
    }
}
