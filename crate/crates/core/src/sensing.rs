//! Block-based Gaussian sensing.
//!
//! The image is tiled into `block_size × block_size` blocks scanned in raster
//! order. Each block is vectorized column-major and multiplied by the same
//! `M × B` projection matrix, `B = block_size²`, `M = round(subrate · B)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::image::{pad_image, Image};
use crate::matrix::{axpy, dot, Matrix};

/// How the Gaussian draw is turned into a projection matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnsembleKind {
    /// i.i.d. `N(0, 1/M)` entries.
    #[default]
    Gaussian,
    /// The same Gaussian draw with its rows orthonormalized, so `φ·φᵀ = I`.
    /// Gradient steps up to `ρ < 2` are then stable.
    OrthonormalRows,
}

/// Projection operator shared by every block. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingEnsemble {
    block_size: usize,
    subrate: f64,
    seed: u64,
    kind: EnsembleKind,
    /// `M × B`
    matrix: Matrix,
}

impl SensingEnsemble {
    #[inline]
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    #[inline]
    pub fn subrate(&self) -> f64 {
        self.subrate
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    /// Measurements per block, `M`.
    #[inline]
    pub fn measurements_per_block(&self) -> usize {
        self.matrix.rows()
    }

    /// Pixels per block, `B`.
    #[inline]
    pub fn block_len(&self) -> usize {
        self.matrix.cols()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Replaces the projection matrix, keeping the metadata. Used to plug in
    /// hand-built operators (identity, test matrices).
    pub fn with_matrix(mut self, matrix: Matrix) -> Result<Self> {
        if matrix.cols() != self.block_size * self.block_size || matrix.rows() == 0 {
            return Err(Error::Shape(format!(
                "matrix {}x{} does not act on {}x{} blocks",
                matrix.rows(),
                matrix.cols(),
                self.block_size,
                self.block_size
            )));
        }
        self.matrix = matrix;
        Ok(self)
    }
}

/// `M = round(subrate · block_size²)`, rounding halves up.
pub fn measurement_count(block_size: usize, subrate: f64) -> Result<usize> {
    if !(subrate > 0.0 && subrate <= 1.0) {
        return Err(Error::Parameter(format!(
            "subrate {subrate} outside (0, 1]"
        )));
    }
    let b = (block_size * block_size) as f64;
    let m = libm::floor(subrate * b + 0.5) as usize;
    if m == 0 {
        return Err(Error::Parameter(format!(
            "subrate {subrate} yields zero measurements for block size {block_size}"
        )));
    }
    Ok(m)
}

/// i.i.d. Gaussian ensemble with entry variance `1/M`.
pub fn make_ensemble(block_size: usize, subrate: f64, seed: u64) -> Result<SensingEnsemble> {
    make_ensemble_with(EnsembleKind::Gaussian, block_size, subrate, seed)
}

pub fn make_ensemble_with(
    kind: EnsembleKind,
    block_size: usize,
    subrate: f64,
    seed: u64,
) -> Result<SensingEnsemble> {
    if block_size < 2 {
        return Err(Error::Parameter(format!("block size {block_size} < 2")));
    }
    let m = measurement_count(block_size, subrate)?;
    let b = block_size * block_size;
    let scale = 1.0 / libm::sqrt(m as f64);

    // Drawn row by row so a given (seed, M, B) always produces the same rows.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..b)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect()
        })
        .collect();

    if kind == EnsembleKind::OrthonormalRows {
        orthonormalize_rows(&mut rows)?;
    }

    let matrix = Matrix::from_fn(m, b, |r, c| rows[r][c]);
    Ok(SensingEnsemble {
        block_size,
        subrate,
        seed,
        kind,
        matrix,
    })
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
fn orthonormalize_rows(rows: &mut [Vec<f64>]) -> Result<()> {
    for i in 0..rows.len() {
        let (done, rest) = rows.split_at_mut(i);
        let row = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let proj = dot(q, row);
                axpy(-proj, q, row);
            }
        }
        let norm = libm::sqrt(dot(row, row));
        if !(norm > 1e-12) {
            return Err(Error::Data("Gaussian rows are linearly dependent".into()));
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(())
}

/// Per-block measurement vectors in raster block order.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    block_size: usize,
    per_block: usize,
    grid_rows: usize,
    grid_cols: usize,
    /// Size of the image before padding to whole blocks.
    original_height: usize,
    original_width: usize,
    data: Vec<f64>,
}

impl Measurements {
    /// Assembles measurements from raw per-block vectors (concatenated).
    pub fn from_parts(
        block_size: usize,
        per_block: usize,
        grid_rows: usize,
        grid_cols: usize,
        original_height: usize,
        original_width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != per_block * grid_rows * grid_cols {
            return Err(Error::Shape(format!(
                "{} values for {grid_rows}x{grid_cols} blocks of {per_block}",
                data.len()
            )));
        }
        if original_height > grid_rows * block_size || original_width > grid_cols * block_size {
            return Err(Error::Shape("original size exceeds block grid".into()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite measurement".into()));
        }
        Ok(Measurements {
            block_size,
            per_block,
            grid_rows,
            grid_cols,
            original_height,
            original_width,
            data,
        })
    }

    #[inline]
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    #[inline]
    pub fn per_block(&self) -> usize {
        self.per_block
    }

    /// `(rows, cols)` of the block grid.
    #[inline]
    pub fn grid(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    #[inline]
    pub fn block_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// `(height, width)` of the padded image the measurements describe.
    #[inline]
    pub fn padded_size(&self) -> (usize, usize) {
        (
            self.grid_rows * self.block_size,
            self.grid_cols * self.block_size,
        )
    }

    #[inline]
    pub fn original_size(&self) -> (usize, usize) {
        (self.original_height, self.original_width)
    }

    pub fn set_original_size(&mut self, height: usize, width: usize) -> Result<()> {
        let (ph, pw) = self.padded_size();
        if height > ph || width > pw {
            return Err(Error::Shape("original size exceeds block grid".into()));
        }
        self.original_height = height;
        self.original_width = width;
        Ok(())
    }

    #[inline]
    pub fn block(&self, index: usize) -> &[f64] {
        &self.data[index * self.per_block..(index + 1) * self.per_block]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.per_block)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn check_layout(&self, other: &Measurements) -> Result<()> {
        if self.per_block != other.per_block || self.grid() != other.grid() {
            return Err(Error::Shape("measurement layouts differ".into()));
        }
        Ok(())
    }

    /// `self − other`, keeping `self`'s metadata.
    pub fn sub(&self, other: &Measurements) -> Result<Measurements> {
        self.check_layout(other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn dot(&self, other: &Measurements) -> Result<f64> {
        self.check_layout(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Copies block `(br, bc)` of `img` into `out`, column-major.
fn load_block(img: &Image, bs: usize, br: usize, bc: usize, out: &mut [f64]) {
    for c in 0..bs {
        for r in 0..bs {
            out[c * bs + r] = img.get(br * bs + r, bc * bs + c);
        }
    }
}

fn store_block(img: &mut Image, bs: usize, br: usize, bc: usize, src: &[f64]) {
    for c in 0..bs {
        for r in 0..bs {
            img.set(br * bs + r, bc * bs + c, src[c * bs + r]);
        }
    }
}

/// Applies `φ` to every block. Image sides must be multiples of the block
/// size (see [`pad_image`] or [`sense_padded`]).
pub fn sense(img: &Image, ens: &SensingEnsemble) -> Result<Measurements> {
    let bs = ens.block_size;
    if img.height() % bs != 0 || img.width() % bs != 0 || img.is_empty() {
        return Err(Error::Shape(format!(
            "{}x{} image is not tiled by {bs}x{bs} blocks",
            img.width(),
            img.height()
        )));
    }
    let (gr, gc) = (img.height() / bs, img.width() / bs);
    let m = ens.measurements_per_block();
    let mut data = vec![0.0; gr * gc * m];
    let mut block = vec![0.0; bs * bs];
    for br in 0..gr {
        for bc in 0..gc {
            load_block(img, bs, br, bc, &mut block);
            let idx = br * gc + bc;
            ens.matrix
                .mul_vec(&block, &mut data[idx * m..(idx + 1) * m]);
        }
    }
    Ok(Measurements {
        block_size: bs,
        per_block: m,
        grid_rows: gr,
        grid_cols: gc,
        original_height: img.height(),
        original_width: img.width(),
        data,
    })
}

/// Pads `img` by edge replication, senses it, and records the original size.
pub fn sense_padded(img: &Image, ens: &SensingEnsemble) -> Result<Measurements> {
    let padded = pad_image(img, ens.block_size);
    let mut meas = sense(&padded.image, ens)?;
    meas.original_height = padded.original_height;
    meas.original_width = padded.original_width;
    Ok(meas)
}

fn check_compatible(meas: &Measurements, ens: &SensingEnsemble) -> Result<()> {
    if meas.block_size != ens.block_size || meas.per_block != ens.measurements_per_block() {
        return Err(Error::Shape(format!(
            "measurements ({} per {}x{} block) do not match ensemble ({} per {}x{} block)",
            meas.per_block,
            meas.block_size,
            meas.block_size,
            ens.measurements_per_block(),
            ens.block_size,
            ens.block_size
        )));
    }
    Ok(())
}

/// Applies `φᵀ` to every block vector and reassembles the padded image.
pub fn adjoint(meas: &Measurements, ens: &SensingEnsemble) -> Result<Image> {
    check_compatible(meas, ens)?;
    map_blocks(meas, ens, |r, out| ens.matrix.tr_mul_vec(r, out))
}

/// Runs `f(block_measurements, block_pixels_out)` per block and reassembles.
pub(crate) fn map_blocks(
    meas: &Measurements,
    ens: &SensingEnsemble,
    mut f: impl FnMut(&[f64], &mut [f64]),
) -> Result<Image> {
    check_compatible(meas, ens)?;
    let bs = meas.block_size;
    let (h, w) = meas.padded_size();
    let mut img = Image::zeros(w, h);
    let mut block = vec![0.0; bs * bs];
    for br in 0..meas.grid_rows {
        for bc in 0..meas.grid_cols {
            f(meas.block(br * meas.grid_cols + bc), &mut block);
            store_block(&mut img, bs, br, bc, &block);
        }
    }
    Ok(img)
}
