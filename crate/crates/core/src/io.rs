//! File formats: density-matrix blobs, CSV tables, 16-bit graymaps and
//! all-or-nothing output directories.
//!
//! Binary payloads are little-endian: u64 lengths followed by f64 values,
//! complex entries as interleaved (re, im).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{CountVector, ExpectationVector, OperatorSpec, SetKind};
use crate::noise::PhaseSpaceImage;
use crate::quantum::{DensityMatrix, DEFAULT_TOL};
use crate::tomography::ReconstructionResult;

pub(crate) fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f64s(buf: &mut Vec<u8>, values: &[f64]) {
    put_u64(buf, values.len() as u64);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Cursor over a little-endian byte buffer. Running off the end is an error
/// rather than a panic.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    pub(crate) fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn f64s(&mut self) -> Option<Vec<f64>> {
        let n = usize::try_from(self.u64()?).ok()?;
        if n.checked_mul(8)? > self.remaining() {
            return None;
        }
        Some(self.take(n * 8)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub(crate) fn put_dm(buf: &mut Vec<u8>, rho: &DensityMatrix) {
    let (re, im) = rho.to_row_major();
    let interleaved: Vec<f64> = re.iter().zip(&im).flat_map(|(&r, &i)| [r, i]).collect();
    put_u64(buf, rho.dim() as u64);
    put_f64s(buf, &interleaved);
}

pub(crate) fn get_dm(r: &mut Reader<'_>) -> Result<DensityMatrix> {
    let bad = || Error::Parse("truncated density matrix".into());
    let dim = usize::try_from(r.u64().ok_or_else(bad)?).map_err(|_| bad())?;
    let values = r.f64s().ok_or_else(bad)?;
    if Some(values.len()) != dim.checked_mul(dim).and_then(|n| n.checked_mul(2)) {
        return Err(Error::Parse(format!("density matrix of dim {dim} has {} values", values.len())));
    }
    let re: Vec<f64> = values.iter().step_by(2).copied().collect();
    let im: Vec<f64> = values.iter().skip(1).step_by(2).copied().collect();
    DensityMatrix::from_row_major(dim, &re, &im, DEFAULT_TOL)
}

/// Density matrix as `u64 dim | u64 2·dim² | (re, im) row-major`.
pub fn write_dm_blob(path: &Path, rho: &DensityMatrix) -> Result<()> {
    let mut buf = Vec::new();
    put_dm(&mut buf, rho);
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_dm_blob(path: &Path) -> Result<DensityMatrix> {
    let bytes = fs::read(path)?;
    let mut r = Reader::new(&bytes);
    let rho = get_dm(&mut r)?;
    if r.remaining() != 0 {
        return Err(Error::Parse(format!("{} trailing bytes after density matrix", r.remaining())));
    }
    Ok(rho)
}

/// Metadata line at the top of an expectation CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationHeader {
    pub set_kind: SetKind,
    pub operators: Option<OperatorSpec>,
}

/// `# {json header}` then `value` with one outcome per line.
pub fn expectation_csv(values: &ExpectationVector, operators: Option<&OperatorSpec>) -> String {
    let header = ExpectationHeader { set_kind: values.set_kind, operators: operators.cloned() };
    let mut out = format!("# {}\nvalue\n", serde_json::to_string(&header).expect("header serializes"));
    for v in &values.values {
        writeln!(out, "{v:e}").unwrap();
    }
    out
}

pub fn parse_expectation_csv(text: &str) -> Result<(ExpectationHeader, ExpectationVector)> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty expectation file".into()))?;
    let json = first.strip_prefix('#').ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
    let header: ExpectationHeader = serde_json::from_str(json.trim())?;
    if lines.next().map(str::trim) != Some("value") {
        return Err(Error::Parse("expected a 'value' column header".into()));
    }
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1))))
        .collect::<Result<Vec<_>>>()?;
    Ok((header.clone(), ExpectationVector { values, set_kind: header.set_kind }))
}

/// `outcome,count` rows.
pub fn counts_csv(counts: &CountVector) -> String {
    let mut out = String::from("outcome,count\n");
    for (k, c) in counts.counts.iter().enumerate() {
        writeln!(out, "{k},{c}").unwrap();
    }
    out
}

/// `epoch,loss,disc_loss,fidelity`; absent values are left blank.
pub fn history_csv(result: &ReconstructionResult) -> String {
    let mut out = String::from("epoch,loss,disc_loss,fidelity\n");
    let disc: std::collections::HashMap<usize, f64> = result.disc_loss_history.iter().copied().collect();
    let fid: std::collections::HashMap<usize, f64> = result.fidelity_history.iter().copied().collect();
    let cell = |m: &std::collections::HashMap<usize, f64>, e: usize| m.get(&e).map(|v| format!("{v:e}")).unwrap_or_default();
    for &(epoch, loss) in &result.loss_history {
        writeln!(out, "{epoch},{loss:e},{},{}", cell(&disc, epoch), cell(&fid, epoch)).unwrap();
    }
    out
}

/// Binary 16-bit PGM (P5, maxval 65535), scaled so the brightest pixel is
/// white. The first image row is the top row of the file.
pub fn pgm16(img: &PhaseSpaceImage) -> Vec<u8> {
    let max = img.max();
    let mut out = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for &v in img.pixels() {
        let level = if max > 0.0 { ((v.max(0.0) / max) * 65535.0).round() as u16 } else { 0 };
        // PGM stores 16-bit samples most significant byte first
        out.extend_from_slice(&level.to_be_bytes());
    }
    out
}

/// An output directory that only appears at its final path on
/// [`AtomicDir::commit`]. Until then files go to a hidden sibling, which is
/// removed if the value is dropped uncommitted.
pub struct AtomicDir {
    staging: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl AtomicDir {
    pub fn create(target: &Path) -> Result<Self> {
        if target.exists() {
            let empty = target.is_dir() && fs::read_dir(target)?.next().is_none();
            if !empty {
                return Err(Error::InvalidParameter(format!("output path {} already exists", target.display())));
            }
        }
        let name = target
            .file_name()
            .ok_or_else(|| Error::InvalidParameter(format!("bad output path {}", target.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        Ok(Self { staging, target: target.to_path_buf(), committed: false })
    }

    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let mut f = fs::File::create(self.staging.join(name))?;
        f.write_all(contents.as_ref())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        if self.target.is_dir() {
            // an empty directory was allowed as the target
            fs::remove_dir(&self.target)?;
        }
        fs::rename(&self.staging, &self.target)?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for AtomicDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}
