//! Labeled datasets of states and their noisy Husimi images, and the
//! on-disk directory format.
//!
//! A dataset directory holds `manifest.json` and `records.bin`. Each record in
//! `records.bin` is
//!
//! ```text
//! u64 body length | body | u32 CRC-32 of body
//! body = u64 index | u64 seed | u64 split (0 train, 1 test)
//!      | u64 label length | label JSON (UTF-8)
//!      | clean ρ | noisy ρ            (u64 dim, u64 2·dim², interleaved re/im)
//!      | u64 height | u64 width | u64 n | n pixels
//! ```
//!
//! with every integer and float little-endian.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{get_dm, put_dm, put_f64s, put_u64, Reader};
use crate::measurement::{husimi_image, husimi_operators_on, Grid, MeasurementSet};
use crate::noise::{apply_pipeline, mix_with_random, NoiseConfig, PhaseSpaceImage};
use crate::quantum::DensityMatrix;
use crate::rng::{rng_from_seed, substream_seed};
use crate::states::{BatchSpec, Family, StateLabel};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "records.bin";

/// The seven labeled families of the standard dataset.
pub const STANDARD_FAMILIES: [Family; 7] =
    [Family::Fock, Family::Coherent, Family::Thermal, Family::Cat, Family::Binomial, Family::Num, Family::Gkp];
pub const STANDARD_PER_FAMILY: usize = 1000;
pub const STANDARD_TEST_FRACTION: f64 = 0.2;

// Substreams of a record's seed.
const LABEL_STREAM: u64 = 0;
const MIX_STREAM: u64 = 1;
const PIPELINE_STREAM: u64 = 2;
// Substream of the dataset seed that owns the train/test shuffles.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub index: usize,
    /// Seed every random draw of this record derives from.
    pub seed: u64,
    pub label: StateLabel,
    pub clean_dm: DensityMatrix,
    pub noisy_dm: DensityMatrix,
    pub image: PhaseSpaceImage,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyPlan {
    pub spec: BatchSpec,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub n_records: usize,
    pub dim: usize,
    pub grid: Grid,
    /// Stage parameters. Its `seed` is not used: each record draws from its
    /// own seed.
    pub noise: NoiseConfig,
    pub seed: u64,
    pub split: SplitSizes,
    pub test_fraction: f64,
    /// Families in record order with the parameter ranges they were drawn
    /// from. For the standard dataset these ranges are this crate's defaults.
    pub families: Vec<FamilyPlan>,
}

impl DatasetManifest {
    fn check(&self) -> Result<()> {
        if self.split.train + self.split.test != self.n_records {
            return Err(Error::Parse(format!(
                "split sizes {} + {} do not add up to {} records",
                self.split.train, self.split.test, self.n_records
            )));
        }
        Ok(())
    }
}

/// Everything needed to generate a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPlan {
    pub families: Vec<FamilyPlan>,
    pub dim: usize,
    pub grid: Grid,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub test_fraction: f64,
}

impl DatasetPlan {
    pub fn n_records(&self) -> usize {
        self.families.iter().map(|f| f.count).sum()
    }

    fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return Err(Error::BadFraction(self.test_fraction));
        }
        if self.n_records() == 0 {
            return Err(Error::InvalidParameter("a dataset needs at least one record".into()));
        }
        for f in &self.families {
            f.spec.validate()?;
        }
        Ok(())
    }
}

/// Builds one record from its label and seed. Used for generation and for
/// provenance replay.
fn build_record(
    index: usize,
    seed: u64,
    label: StateLabel,
    split: Split,
    dim: usize,
    set: &MeasurementSet,
    noise: &NoiseConfig,
) -> Result<DatasetRecord> {
    let clean_dm = label.build(dim)?;
    let noisy_dm = mix_with_random(&clean_dm, noise.zeta, substream_seed(seed, MIX_STREAM))?;
    let clean_image = husimi_image(&noisy_dm, set)?;
    let image = apply_pipeline(&clean_image, &noise.clone().with_seed(substream_seed(seed, PIPELINE_STREAM)))?;
    Ok(DatasetRecord { index, seed, label, clean_dm, noisy_dm, image, split })
}

/// Per-family stratified split: within each family a seeded shuffle marks
/// round(count · test_fraction) records as test.
fn assign_splits(plan: &DatasetPlan) -> Vec<Split> {
    let mut splits = Vec::with_capacity(plan.n_records());
    let split_seed = substream_seed(plan.seed, SPLIT_STREAM);
    for (f, family) in plan.families.iter().enumerate() {
        let n_test = (family.count as f64 * plan.test_fraction).round() as usize;
        let mut order: Vec<usize> = (0..family.count).collect();
        order.shuffle(&mut rng_from_seed(substream_seed(split_seed, f as u64)));
        let mut local = vec![Split::Train; family.count];
        for &i in &order[..n_test] {
            local[i] = Split::Test;
        }
        splits.extend(local);
    }
    splits
}

/// Generates every record of `plan` in parallel. Record `i` uses the seed
/// substream `(plan.seed, i)` so the output does not depend on scheduling.
pub fn build_dataset(plan: &DatasetPlan) -> Result<(DatasetManifest, Vec<DatasetRecord>)> {
    plan.validate()?;
    let set = husimi_operators_on(plan.dim, plan.grid.clone())?;
    let splits = assign_splits(plan);
    let specs: Vec<&BatchSpec> = plan.families.iter().flat_map(|f| std::iter::repeat_n(&f.spec, f.count)).collect();
    let records = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let seed = substream_seed(plan.seed, i as u64);
            let label = spec.sample_label(plan.dim, &mut rng_from_seed(substream_seed(seed, LABEL_STREAM)));
            build_record(i, seed, label, splits[i], plan.dim, &set, &plan.noise)
                .map_err(|e| Error::Record { index: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let test = splits.iter().filter(|s| **s == Split::Test).count();
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        n_records: records.len(),
        dim: plan.dim,
        grid: plan.grid.clone(),
        noise: plan.noise.clone(),
        seed: plan.seed,
        split: SplitSizes { train: records.len() - test, test },
        test_fraction: plan.test_fraction,
        families: plan.families.clone(),
    };
    Ok((manifest, records))
}

/// 7 families × 1000 records with the default parameter ranges, split
/// 5600/1400 stratified by family.
pub fn standard_dataset(dim: usize, grid: Grid, cfg: &NoiseConfig, seed: u64) -> Result<(DatasetManifest, Vec<DatasetRecord>)> {
    let families = STANDARD_FAMILIES
        .iter()
        .map(|&f| FamilyPlan { spec: BatchSpec::dataset_default(f), count: STANDARD_PER_FAMILY })
        .collect();
    build_dataset(&DatasetPlan { families, dim, grid, noise: cfg.clone(), seed, test_fraction: STANDARD_TEST_FRACTION })
}

/// Regenerates `record` from its stored label and seed.
pub fn replay_record(manifest: &DatasetManifest, record: &DatasetRecord) -> Result<DatasetRecord> {
    let set = husimi_operators_on(manifest.dim, manifest.grid.clone())?;
    build_record(record.index, record.seed, record.label.clone(), record.split, manifest.dim, &set, &manifest.noise)
}

fn encode_record(r: &DatasetRecord) -> Vec<u8> {
    let mut body = Vec::new();
    put_u64(&mut body, r.index as u64);
    put_u64(&mut body, r.seed);
    put_u64(&mut body, if r.split == Split::Test { 1 } else { 0 });
    let label = serde_json::to_vec(&r.label).expect("labels serialize");
    put_u64(&mut body, label.len() as u64);
    body.extend_from_slice(&label);
    put_dm(&mut body, &r.clean_dm);
    put_dm(&mut body, &r.noisy_dm);
    put_u64(&mut body, r.image.height() as u64);
    put_u64(&mut body, r.image.width() as u64);
    put_f64s(&mut body, r.image.pixels());
    let mut out = Vec::with_capacity(body.len() + 12);
    put_u64(&mut out, body.len() as u64);
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc32fast::hash(&body).to_le_bytes());
    out
}

fn decode_body(body: &[u8], grid: &Grid) -> Result<DatasetRecord> {
    let bad = || Error::Parse("malformed record body".into());
    let mut r = Reader::new(body);
    let index = r.u64().ok_or_else(bad)? as usize;
    let seed = r.u64().ok_or_else(bad)?;
    let split = match r.u64().ok_or_else(bad)? {
        0 => Split::Train,
        1 => Split::Test,
        other => return Err(Error::Parse(format!("unknown split tag {other}"))),
    };
    let label_len = r.u64().ok_or_else(bad)? as usize;
    let label: StateLabel = serde_json::from_slice(r.take(label_len).ok_or_else(bad)?)?;
    let clean_dm = get_dm(&mut r)?;
    let noisy_dm = get_dm(&mut r)?;
    let height = r.u64().ok_or_else(bad)? as usize;
    let width = r.u64().ok_or_else(bad)? as usize;
    let pixels = r.f64s().ok_or_else(bad)?;
    if r.remaining() != 0 {
        return Err(bad());
    }
    let image = PhaseSpaceImage::new(height, width, pixels, grid.clone())?;
    Ok(DatasetRecord { index, seed, label, clean_dm, noisy_dm, image, split })
}

/// Serialized directory contents: (manifest.json, records.bin).
pub fn encode_dataset(manifest: &DatasetManifest, records: &[DatasetRecord]) -> Result<(String, Vec<u8>)> {
    manifest.check()?;
    if records.len() != manifest.n_records {
        return Err(Error::LengthMismatch { expected: manifest.n_records, got: records.len() });
    }
    let json = serde_json::to_string_pretty(manifest)? + "\n";
    let mut bin = Vec::new();
    for r in records {
        bin.extend(encode_record(r));
    }
    Ok((json, bin))
}

/// Writes the two dataset files into the existing directory `dir`.
pub fn save_dataset(manifest: &DatasetManifest, records: &[DatasetRecord], dir: &Path) -> Result<()> {
    let (json, bin) = encode_dataset(manifest, records)?;
    fs::write(dir.join(MANIFEST_FILE), json)?;
    fs::write(dir.join(RECORDS_FILE), bin)?;
    Ok(())
}

/// Reads only the manifest; no record is touched.
pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
    if found != u64::from(FORMAT_VERSION) {
        return Err(Error::FormatVersionMismatch { found: found as u32, expected: FORMAT_VERSION });
    }
    let manifest: DatasetManifest = serde_json::from_value(value)?;
    manifest.check()?;
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<DatasetRecord>)> {
    let manifest = read_manifest(dir)?;
    let bytes = fs::read(dir.join(RECORDS_FILE))?;
    let mut r = Reader::new(&bytes);
    let mut records = Vec::with_capacity(manifest.n_records);
    for i in 0..manifest.n_records {
        let body_len = r.u64().ok_or(Error::ChecksumMismatch(i))?;
        let body = usize::try_from(body_len).ok().and_then(|n| r.take(n)).ok_or(Error::ChecksumMismatch(i))?;
        let crc = r.u32().ok_or(Error::ChecksumMismatch(i))?;
        if crc32fast::hash(body) != crc {
            return Err(Error::ChecksumMismatch(i));
        }
        records.push(decode_body(body, &manifest.grid).map_err(|e| Error::Record { index: i, source: Box::new(e) })?);
    }
    if r.remaining() != 0 {
        return Err(Error::Parse(format!("{} bytes after the last record", r.remaining())));
    }
    Ok((manifest, records))
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// `index,family,split,seed,params` with the parameters as quoted JSON.
pub fn labels_csv(records: &[DatasetRecord]) -> String {
    let mut out = String::from("index,family,split,seed,params\n");
    for r in records {
        let split = if r.split == Split::Test { "test" } else { "train" };
        let params = serde_json::to_string(&r.label.params).expect("params serialize");
        out.push_str(&format!("{},{},{},{},{}\n", r.index, r.label.family.name(), split, r.seed, csv_quote(&params)));
    }
    out
}
