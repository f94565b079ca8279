//! Plain-text measurement files.
//!
//! The header records everything needed to regenerate the sensing matrix, so
//! the matrix itself is never stored:
//!
//! ```text
//! gsrcs-measurements 1
//! block_size 32
//! subrate 0.3
//! seed 7
//! ensemble orthonormal
//! grid 4 4
//! original 128 128
//! per_block 307
//! data
//! 12.5
//! ...
//! ```
//!
//! `grid` is block rows then block columns, `original` is height then width.
//! Values are written in shortest round-trip form, one per line, block after
//! block in raster order.

use std::fmt::Write as _;
use std::path::Path;

use gsrcs_core::{make_ensemble_with, EnsembleKind, Measurements, SensingEnsemble};

use crate::error::{io_err, HarnessError, Result};

const MAGIC: &str = "gsrcs-measurements 1";

/// Measurements together with the recipe for their sensing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFile {
    pub measurements: Measurements,
    pub subrate: f64,
    pub seed: u64,
    pub ensemble: EnsembleKind,
}

impl MeasurementFile {
    pub fn new(measurements: Measurements, ens: &SensingEnsemble) -> Self {
        MeasurementFile {
            measurements,
            subrate: ens.subrate(),
            seed: ens.seed(),
            ensemble: ens.kind(),
        }
    }

    pub fn ensemble(&self) -> Result<SensingEnsemble> {
        Ok(make_ensemble_with(
            self.ensemble,
            self.measurements.block_size(),
            self.subrate,
            self.seed,
        )?)
    }

    pub fn to_text(&self) -> String {
        let m = &self.measurements;
        let (gr, gc) = m.grid();
        let (oh, ow) = m.original_size();
        let mut out = String::with_capacity(m.as_slice().len() * 20 + 200);
        let kind = match self.ensemble {
            EnsembleKind::OrthonormalRows => "orthonormal",
            EnsembleKind::Gaussian => "gaussian",
        };
        let _ = write!(
            out,
            "{MAGIC}\nblock_size {}\nsubrate {}\nseed {}\nensemble {kind}\ngrid {gr} {gc}\noriginal {oh} {ow}\nper_block {}\ndata\n",
            m.block_size(),
            self.subrate,
            self.seed,
            m.per_block(),
        );
        for v in m.as_slice() {
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(format!("missing `{MAGIC}` header"));
        }
        let mut field = |name: &str| -> std::result::Result<Vec<String>, String> {
            let line = lines.next().ok_or_else(|| format!("missing `{name}`"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(name) {
                return Err(format!("expected `{name}`, got `{line}`"));
            }
            Ok(parts.map(str::to_owned).collect())
        };
        fn one<T: std::str::FromStr>(
            name: &str,
            v: &[String],
            n: usize,
        ) -> std::result::Result<Vec<T>, String> {
            if v.len() != n {
                return Err(format!("`{name}` takes {n} value(s)"));
            }
            v.iter()
                .map(|s| s.parse().map_err(|_| format!("`{name}`: bad value `{s}`")))
                .collect()
        }
        let block_size = one::<usize>("block_size", &field("block_size")?, 1)?[0];
        let subrate = one::<f64>("subrate", &field("subrate")?, 1)?[0];
        let seed = one::<u64>("seed", &field("seed")?, 1)?[0];
        let ensemble = match field("ensemble")?.as_slice() {
            [k] if k == "orthonormal" => EnsembleKind::OrthonormalRows,
            [k] if k == "gaussian" => EnsembleKind::Gaussian,
            other => return Err(format!("unknown ensemble {other:?}")),
        };
        let grid = one::<usize>("grid", &field("grid")?, 2)?;
        let original = one::<usize>("original", &field("original")?, 2)?;
        let per_block = one::<usize>("per_block", &field("per_block")?, 1)?[0];
        if !field("data")?.is_empty() {
            return Err("`data` takes no values".into());
        }
        let data = lines
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<f64>().map_err(|_| format!("bad value `{l}`")))
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        let measurements = Measurements::from_parts(
            block_size,
            per_block,
            grid[0],
            grid[1],
            original[0],
            original[1],
            data,
        )
        .map_err(|e| e.to_string())?;
        Ok(MeasurementFile {
            measurements,
            subrate,
            seed,
            ensemble,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|message| HarnessError::MeasurementsFormat {
            path: path.to_owned(),
            message,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsrcs_core::sensing::sense_padded;
    use gsrcs_core::Image;

    #[test]
    fn text_round_trip_is_exact() {
        let ens = make_ensemble_with(EnsembleKind::OrthonormalRows, 8, 0.3, 9).unwrap();
        let img = Image::from_fn(13, 10, |r, c| (r * 31 + c * 7) as f64 / 3.0);
        let file = MeasurementFile::new(sense_padded(&img, &ens).unwrap(), &ens);
        let back = MeasurementFile::parse(&file.to_text()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.ensemble().unwrap().matrix(), ens.matrix());
        assert_eq!(back.measurements.original_size(), (10, 13));
    }

    #[test]
    fn rejects_malformed_input() {
        let ens = make_ensemble_with(EnsembleKind::Gaussian, 4, 0.5, 1).unwrap();
        let good = MeasurementFile::new(
            gsrcs_core::sense(&Image::filled(8, 8, 1.0), &ens).unwrap(),
            &ens,
        )
        .to_text();
        assert!(MeasurementFile::parse("").is_err());
        assert!(MeasurementFile::parse(&good.replace("grid 2 2", "grid 2")).is_err());
        assert!(
            MeasurementFile::parse(&good.replace("ensemble gaussian", "ensemble foo")).is_err()
        );
        // one value short
        let truncated: String = good
            .lines()
            .take(good.lines().count() - 1)
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(MeasurementFile::parse(&truncated).is_err());
        assert!(MeasurementFile::parse(&format!("{good}abc\n")).is_err());
    }
}
