//! Command implementations behind the `tomokit` binary.
//!
//! Every command writes into a staging directory that is renamed into place
//! only after all outputs succeed, so a failed run leaves nothing behind.

pub mod params;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tomokit::benchmark::{run_benchmark, BenchmarkReport, BenchmarkScenario, Method};
use tomokit::dataset::{build_dataset, labels_csv, load_dataset, save_dataset, standard_dataset, DatasetPlan, FamilyPlan};
use tomokit::io::{counts_csv, expectation_csv, history_csv, parse_expectation_csv, pgm16, read_dm_blob, write_dm_blob, AtomicDir};
use tomokit::measurement::{
    expectation, husimi_image, sample_counts, ExpectationVector, Grid, MeasurementData, MeasurementSet, OperatorSpec,
};
use tomokit::noise::{
    additive_gaussian, affine_transform, apply_pipeline, gaussian_convolution, mix_with_random, salt_pepper, stage,
    NoiseConfig, PhaseSpaceImage,
};
use tomokit::rng::substream_seed;
use tomokit::states::{coherent, Family};
use tomokit::tomography::{gan_reconstruct, mle_reconstruct, GANConfig, MLEConfig, ReconstructionResult};
use tomokit::{fidelity, DensityMatrix, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tomokit", version, about = "Optical quantum state tomography toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labeled states into a dataset directory
    Generate(GenerateArgs),
    /// Compute Born-rule expectations (and optionally sampled counts) for a state
    Measure(MeasureArgs),
    /// Apply mixed-state noise and the image noise pipeline
    Noise(NoiseArgs),
    /// Reconstruct a density matrix from measurement data
    Reconstruct(ReconstructArgs),
    /// Compare MLE and GAN reconstructions over several runs
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Phase-space extent low:high shared by both axes
    #[arg(long, default_value = "-5:5", allow_hyphen_values = true)]
    pub grid_range: String,
    /// Grid points per axis
    #[arg(long, default_value_t = 20)]
    pub grid_n: usize,
}

impl GridArgs {
    pub fn grid(&self) -> Result<Grid> {
        let (low, high) = params::span("grid-range", &self.grid_range)?;
        Grid::square(low, high, self.grid_n)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// State family (fock, coherent, thermal, cat, binomial, num, gkp, random_mixed)
    #[arg(long, required_unless_present = "standard")]
    pub family: Option<String>,
    /// Generate the standard 7-family dataset instead of one family
    #[arg(long, conflicts_with = "family")]
    pub standard: bool,
    /// Parameter range as key=low:high or key=value (repeatable)
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// Shorthand for --param alpha_mag=low:high
    #[arg(long)]
    pub alpha_mag: Option<String>,
    /// Number of states
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise configuration JSON; default is no noise, or the default table
    /// for --standard
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Fraction of each family held out as test records
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value = "tomokit-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhichState {
    Clean,
    Noisy,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Density-matrix blob or dataset directory
    #[arg(long, conflicts_with = "family")]
    pub input: Option<PathBuf>,
    /// Record index when --input is a dataset
    #[arg(long, default_value_t = 0)]
    pub record: usize,
    /// Which state of a dataset record to measure
    #[arg(long, value_enum, default_value_t = WhichState::Clean)]
    pub which: WhichState,
    /// Build the state directly instead of reading it
    #[arg(long, required_unless_present = "input")]
    pub family: Option<String>,
    /// Fixed state parameter key=value, e.g. alpha=1 or alpha=0.5,0.2 (repeatable)
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// Truncation dimension when building the state with --family
    #[arg(long)]
    pub dim: Option<usize>,
    /// Measure in the photon-number basis instead of a Husimi grid
    #[arg(long)]
    pub number: bool,
    /// Operator recipe JSON; overrides --number and the grid flags
    #[arg(long)]
    pub operators: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Also sample this many shots
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Density-matrix blob, or an expectation CSV holding a Husimi image
    #[arg(long, required_unless_present_any = ["demo_exaggerated", "print_default_config"])]
    pub input: Option<PathBuf>,
    /// Noise configuration JSON (default: the default noise table)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration's seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Write one image per noise source at exaggerated strengths
    #[arg(long)]
    pub demo_exaggerated: bool,
    /// Print the default configuration JSON and exit
    #[arg(long)]
    pub print_default_config: bool,
    #[arg(long, required_unless_present = "print_default_config")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mle,
    Gan,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Expectation CSV as written by `measure`
    #[arg(long, required_unless_present = "counts")]
    pub data: Option<PathBuf>,
    /// Counts CSV (MLE only); needs --operators
    #[arg(long, conflicts_with = "data")]
    pub counts: Option<PathBuf>,
    /// Operator recipe JSON; defaults to the one in the data header
    #[arg(long)]
    pub operators: Option<PathBuf>,
    /// Solver configuration JSON (MLE or GAN fields; missing fields take defaults)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Reference state blob for fidelity tracking
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Scenario JSON; flags below override its fields
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Num-table entry to reconstruct
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub zeta: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_range: Option<String>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

/// 0 success, 2 bad input, 3 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Measure(a) => cmd_measure(&a),
        Command::Noise(a) => cmd_noise(&a),
        Command::Reconstruct(a) => cmd_reconstruct(&a),
        Command::Benchmark(a) => cmd_benchmark(&a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

fn read_noise_config(path: Option<&Path>, default: NoiseConfig) -> Result<NoiseConfig> {
    match path {
        Some(p) => NoiseConfig::from_json(&read_text(p)?),
        None => Ok(default),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let grid = a.grid.grid()?;
    let (manifest, records) = if a.standard {
        let noise = read_noise_config(a.noise.as_deref(), NoiseConfig::default())?;
        standard_dataset(a.dim, grid, &noise, a.seed)?
    } else {
        let family: Family = a.family.as_deref().unwrap_or_default().parse()?;
        let mut pairs = params::parse_pairs(&a.params)?;
        if let Some(m) = &a.alpha_mag {
            pairs.insert("alpha_mag".into(), m.clone());
        }
        let spec = params::batch_spec(family, &pairs)?;
        let noise = read_noise_config(a.noise.as_deref(), NoiseConfig::zero())?;
        if a.n == 0 {
            return Err(Error::InvalidParameter("--n must be at least 1".into()));
        }
        let plan = DatasetPlan {
            families: vec![FamilyPlan { spec, count: a.n }],
            dim: a.dim,
            grid,
            noise,
            seed: a.seed,
            test_fraction: a.test_fraction,
        };
        build_dataset(&plan)?
    };
    let out = AtomicDir::create(&a.out)?;
    save_dataset(&manifest, &records, out.path())?;
    out.write("labels.csv", labels_csv(&records))?;
    let path = out.commit()?;
    let mut start = 0;
    for f in &manifest.families {
        let slice = &records[start..start + f.count];
        let test = slice.iter().filter(|r| r.split == tomokit::dataset::Split::Test).count();
        println!("{}: {} records ({} train, {} test) -> {}", f.spec.family().name(), f.count, f.count - test, test, path.display());
        start += f.count;
    }
    Ok(())
}

fn load_state(a: &MeasureArgs) -> Result<DensityMatrix> {
    if let Some(input) = &a.input {
        if input.is_dir() {
            let (_, records) = load_dataset(input)?;
            let r = records.get(a.record).ok_or(Error::IndexOutOfRange { index: a.record, dim: records.len() })?;
            return Ok(match a.which {
                WhichState::Clean => r.clean_dm.clone(),
                WhichState::Noisy => r.noisy_dm.clone(),
            });
        }
        return read_dm_blob(input);
    }
    let family: Family = a.family.as_deref().unwrap_or_default().parse()?;
    let dim = a.dim.ok_or_else(|| Error::InvalidParameter("--dim is required with --family".into()))?;
    params::fixed_label(family, &params::parse_pairs(&a.params)?)?.build(dim)
}

fn read_operator_spec(path: &Path) -> Result<OperatorSpec> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

/// The Husimi grid as an image; other operator sets have no natural layout.
fn expectation_image(values: &ExpectationVector, set: &MeasurementSet) -> Result<Option<PhaseSpaceImage>> {
    set.grid()
        .map(|g| PhaseSpaceImage::new(g.pgrid.len(), g.xgrid.len(), values.values.clone(), g.clone()))
        .transpose()
}

#[derive(Serialize)]
struct MeasureManifest<'a> {
    input: String,
    operators: &'a OperatorSpec,
    shots: Option<u64>,
    seed: u64,
    outcomes: usize,
}

pub fn cmd_measure(a: &MeasureArgs) -> Result<()> {
    let rho = load_state(a)?;
    let spec = match &a.operators {
        Some(p) => read_operator_spec(p)?,
        None if a.number => OperatorSpec::PhotonNumber { dim: rho.dim() },
        None => OperatorSpec::HusimiGrid { dim: rho.dim(), grid: a.grid.grid()? },
    };
    if spec.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), spec.dim()));
    }
    let set = spec.build()?;
    let values = expectation(&rho, &set)?;
    let counts = a.shots.map(|shots| sample_counts(&values, shots, a.seed)).transpose()?;
    let image = expectation_image(&values, &set)?;

    let out = AtomicDir::create(&a.out)?;
    out.write("expectations.csv", expectation_csv(&values, Some(&spec)))?;
    if let Some(c) = &counts {
        out.write("counts.csv", counts_csv(c))?;
    }
    if let Some(img) = &image {
        out.write("preview.pgm", pgm16(img))?;
    }
    out.write("operators.json", to_json(&spec))?;
    write_dm_blob(&out.path().join("state.bin"), &rho)?;
    let input = match (&a.input, &a.family) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(f)) => format!("{f} {}", a.params.join(" ")),
        _ => String::new(),
    };
    let manifest = MeasureManifest { input, operators: &spec, shots: a.shots, seed: a.seed, outcomes: values.len() };
    out.write("manifest.json", to_json(&manifest))?;
    let path = out.commit()?;
    println!("{} outcomes -> {}", values.len(), path.display());
    Ok(())
}

/// Strengths for the per-source demonstration images, well above the
/// defaults so each effect is visible on its own.
pub fn exaggerated_config() -> NoiseConfig {
    NoiseConfig {
        zeta: 0.5,
        nth_conv: 6.0,
        rotation_deg: 45.0,
        translate_xy: (0.2, 0.2),
        additive_sigma: 0.02,
        salt_prop: 0.05,
        pepper_prop: 0.3,
        seed: 0,
    }
}

#[derive(Serialize)]
struct NoiseManifest<'a> {
    input: String,
    config: &'a NoiseConfig,
    mixing_seed: Option<u64>,
    outputs: Vec<&'static str>,
}

fn write_image(out: &AtomicDir, stem: &str, img: &PhaseSpaceImage) -> Result<()> {
    let values = ExpectationVector { values: img.pixels().to_vec(), set_kind: tomokit::measurement::SetKind::HusimiGrid };
    let spec = OperatorSpec::HusimiGrid { dim: 0, grid: img.grid().clone() };
    out.write(&format!("{stem}.csv"), expectation_csv(&values, Some(&spec)))?;
    out.write(&format!("{stem}.pgm"), pgm16(img))
}

fn demo(a: &NoiseArgs, out_path: &Path) -> Result<()> {
    let mut cfg = exaggerated_config();
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let rho = match &a.input {
        Some(p) => read_dm_blob(p)?,
        None => coherent(32, num_complex::Complex64::new(1.0, 0.0))?,
    };
    let set = OperatorSpec::HusimiGrid { dim: rho.dim(), grid: a.grid.grid()? }.build()?;
    let clean = husimi_image(&rho, &set)?;
    let mixed = husimi_image(&mix_with_random(&rho, cfg.zeta, substream_seed(cfg.seed, stage::MIXING))?, &set)?;
    let stages = [
        ("0_clean", clean.clone()),
        ("1_mixed_state", mixed),
        ("2_gaussian_convolution", gaussian_convolution(&clean, cfg.nth_conv)?),
        (
            "3_affine",
            affine_transform(&clean, cfg.rotation_deg, cfg.translate_xy.0, cfg.translate_xy.1, substream_seed(cfg.seed, stage::AFFINE))?,
        ),
        ("4_additive_gaussian", additive_gaussian(&clean, cfg.additive_sigma, substream_seed(cfg.seed, stage::ADDITIVE))?),
        ("5_salt_pepper", salt_pepper(&clean, cfg.salt_prop, cfg.pepper_prop, substream_seed(cfg.seed, stage::SALT_PEPPER))?),
        ("6_full_pipeline", apply_pipeline(&clean, &cfg)?),
    ];
    let out = AtomicDir::create(out_path)?;
    for (stem, img) in &stages {
        write_image(&out, stem, img)?;
    }
    out.write("demo_config.json", to_json(&cfg))?;
    let path = out.commit()?;
    println!("{} demo images -> {}", stages.len(), path.display());
    Ok(())
}

pub fn cmd_noise(a: &NoiseArgs) -> Result<()> {
    if a.print_default_config {
        print!("{}", NoiseConfig::defaults_json());
        return Ok(());
    }
    let out_path = a.out.as_deref().ok_or_else(|| Error::InvalidParameter("--out is required".into()))?;
    if a.demo_exaggerated {
        return demo(a, out_path);
    }
    let input = a.input.as_deref().ok_or_else(|| Error::InvalidParameter("--input is required".into()))?;
    let mut cfg = read_noise_config(a.config.as_deref(), NoiseConfig::default())?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut outputs = Vec::new();
    let mut mixing_seed = None;
    let out;
    if is_csv {
        let (header, values) = parse_expectation_csv(&read_text(input)?)?;
        let Some(OperatorSpec::HusimiGrid { grid, .. }) = header.operators else {
            return Err(Error::WrongKind { expected: "a Husimi-grid expectation file" });
        };
        let img = PhaseSpaceImage::new(grid.pgrid.len(), grid.xgrid.len(), values.values, grid)?;
        let noisy = apply_pipeline(&img, &cfg)?;
        out = AtomicDir::create(out_path)?;
        write_image(&out, "image", &noisy)?;
        outputs.extend(["image.csv", "image.pgm"]);
    } else {
        let rho = read_dm_blob(input)?;
        let seed = substream_seed(cfg.seed, stage::MIXING);
        let noisy = mix_with_random(&rho, cfg.zeta, seed)?;
        mixing_seed = Some(seed);
        let set = OperatorSpec::HusimiGrid { dim: rho.dim(), grid: a.grid.grid()? }.build()?;
        let img = apply_pipeline(&husimi_image(&noisy, &set)?, &cfg)?;
        out = AtomicDir::create(out_path)?;
        write_dm_blob(&out.path().join("noisy_state.bin"), &noisy)?;
        write_image(&out, "image", &img)?;
        outputs.extend(["noisy_state.bin", "image.csv", "image.pgm"]);
    }
    let manifest = NoiseManifest { input: input.display().to_string(), config: &cfg, mixing_seed, outputs };
    out.write("manifest.json", to_json(&manifest))?;
    let path = out.commit()?;
    println!("noise applied -> {}", path.display());
    Ok(())
}

fn parse_counts_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("outcome,count") {
        return Err(Error::Parse("expected an `outcome,count` header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (_, c) = l.split_once(',').ok_or_else(|| Error::Parse(format!("bad counts row `{l}`")))?;
            c.trim().parse::<u64>().map(|v| v as f64).map_err(|_| Error::Parse(format!("bad count `{c}`")))
        })
        .collect()
}

#[derive(Serialize)]
struct ReconstructManifest<'a> {
    method: &'static str,
    data: String,
    operators: &'a OperatorSpec,
    result: ResultSummary<'a>,
}

#[derive(Serialize)]
struct ResultSummary<'a> {
    config: &'a tomokit::tomography::SolverConfig,
    epochs_run: usize,
    selected_epoch: usize,
    converged: bool,
    wall_time_s: f64,
    final_fidelity: Option<f64>,
}

pub fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    let explicit_ops = a.operators.as_deref().map(read_operator_spec).transpose()?;
    let (data, header_ops, source) = match (&a.data, &a.counts) {
        (Some(p), _) => {
            let (header, values) = parse_expectation_csv(&read_text(p)?)?;
            (MeasurementData::Expectations(values), header.operators, p)
        }
        (None, Some(p)) => {
            let counts = parse_counts_csv(&read_text(p)?)?;
            let c = tomokit::measurement::CountVector {
                shots: counts.iter().sum::<f64>() as u64,
                counts: counts.iter().map(|&v| v as u64).collect(),
            };
            (MeasurementData::Counts(c), None, p)
        }
        (None, None) => return Err(Error::InvalidParameter("--data or --counts is required".into())),
    };
    let spec = explicit_ops
        .or(header_ops)
        .ok_or_else(|| Error::InvalidParameter("no operator recipe: pass --operators".into()))?;
    let set = spec.build()?;
    if data.len() != set.len() {
        return Err(Error::LengthMismatch { expected: set.len(), got: data.len() });
    }
    let reference = a.reference.as_deref().map(read_dm_blob).transpose()?;
    if let Some(r) = &reference {
        if r.dim() != set.dim() {
            return Err(Error::DimensionMismatch(r.dim(), set.dim()));
        }
    }
    let config_text = a.config.as_deref().map(read_text).transpose()?;
    let result: ReconstructionResult = match a.method {
        MethodArg::Mle => {
            let mut cfg: MLEConfig = match &config_text {
                Some(t) => serde_json::from_str(t)?,
                None => MLEConfig::default(),
            };
            if let Some(e) = a.epochs {
                cfg.max_epochs = e;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            mle_reconstruct(&data, &set, &cfg, reference.as_ref())?
        }
        MethodArg::Gan => {
            let MeasurementData::Expectations(values) = &data else {
                return Err(Error::WrongKind { expected: "expectation data for the GAN solver" });
            };
            let mut cfg: GANConfig = match &config_text {
                Some(t) => serde_json::from_str(t)?,
                None => GANConfig::default(),
            };
            if let Some(e) = a.epochs {
                cfg.epochs = e;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            gan_reconstruct(values, &set, &cfg, reference.as_ref())?
        }
    };
    let final_fidelity = reference.as_ref().map(|r| fidelity(&result.reconstructed_dm, r)).transpose()?;

    let out = AtomicDir::create(&a.out)?;
    write_dm_blob(&out.path().join("reconstructed.bin"), &result.reconstructed_dm)?;
    out.write("history.csv", history_csv(&result))?;
    let manifest = ReconstructManifest {
        method: match a.method {
            MethodArg::Mle => "mle",
            MethodArg::Gan => "gan",
        },
        data: source.display().to_string(),
        operators: &spec,
        result: ResultSummary {
            config: &result.config,
            epochs_run: result.epochs_run,
            selected_epoch: result.selected_epoch,
            converged: result.converged,
            wall_time_s: result.wall_time,
            final_fidelity,
        },
    };
    out.write("manifest.json", to_json(&manifest))?;
    let path = out.commit()?;
    match final_fidelity {
        Some(f) => println!("final fidelity: {f:.6} (epoch {}) -> {}", result.selected_epoch, path.display()),
        None => println!("reconstructed after {} epochs -> {}", result.epochs_run, path.display()),
    }
    Ok(())
}

pub fn benchmark_report(a: &BenchmarkArgs) -> Result<BenchmarkReport> {
    let mut scenario: BenchmarkScenario = match &a.scenario {
        Some(p) => serde_json::from_str(&read_text(p)?)?,
        None => BenchmarkScenario::default(),
    };
    if let Some(d) = a.dim {
        scenario.dim = d;
    }
    if let Some(s) = &a.state {
        scenario.state = s.clone();
    }
    if let Some(z) = a.zeta {
        scenario.zeta = z;
    }
    if let Some(r) = a.record_every {
        scenario.record_every = r;
    }
    if a.grid_range.is_some() || a.grid_n.is_some() {
        let (low, high) = match &a.grid_range {
            Some(r) => params::span("grid-range", r)?,
            None => (scenario.grid.xgrid[0], *scenario.grid.xgrid.last().unwrap()),
        };
        scenario.grid = Grid::square(low, high, a.grid_n.unwrap_or(scenario.grid.xgrid.len()))?;
    }
    run_benchmark(&scenario, a.runs, a.epochs, a.seed, &MLEConfig::default(), &GANConfig::default())
}

pub fn cmd_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let report = benchmark_report(a)?;
    let out = AtomicDir::create(&a.out)?;
    out.write("report.json", report.to_json())?;
    out.write("curves.csv", report.curves_csv())?;
    out.write("timings.csv", report.timings_csv())?;
    let path = out.commit()?;
    for (name, m, s) in [("mle", Method::Mle, &report.mle), ("gan", Method::Gan, &report.gan)] {
        let fmt = report.final_mean(m).map_or("n/a".to_string(), |v| format!("{v:.4}"));
        println!("{name}: final mean fidelity {fmt} over {} runs ({} failed)", report.runs - s.failures.len(), s.failures.len());
    }
    println!("report -> {}", path.display());
    Ok(())
}
