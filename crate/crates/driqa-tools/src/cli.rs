//! Command-line driver.
//!
//! A single static binary with subcommands covering the whole workflow:
//! synthesize source images (`corpus`), build and annotate two-stage
//! databases (`generate`), train the no-reference model (`train-niqe`),
//! fit the fusion models (`fit`), score a single degraded/final pair
//! (`score`), correlate fitted models against benchmark labels
//! (`evaluate`), and extract distortion-behavior curves (`behavior`).
//!
//! Every run is reproducible: outputs are written only under `--out`,
//! every file-writing command leaves a provenance record beside its
//! outputs, and a rerun with identical inputs and flags produces
//! byte-identical files. An optional `--config FILE` supplies `key=value`
//! defaults for the invoked subcommand's long flags; explicit flags win.
//! The `DRIQA_THREADS` environment variable caps worker parallelism.
//!
//! Exit codes: 0 success, 1 I/O or decode failure, 2 validation failure
//! (bad flags, inconsistent inputs, invalid architecture codes,
//! degenerate fits).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use driqa_core::arch::{partition_counts, ArchClass, ArchCode};
use driqa_core::corpus::{held_out_image, pristine_corpus, CORPUS_DIM, CORPUS_SIZE};
use driqa_core::distort::{
    ladder_entries, ComboType, ALL_COMBO_LABELS, GENERATING_COMBOS, LEVELS_STAGE1, LEVELS_STAGE2,
};
use driqa_core::eval::{detect_overshoot, extract_behavior, fit_samples, model1_groups, plcc, srcc};
use driqa_core::fr::FrBackend;
use driqa_core::fusion::{fit_model1, fit_model2, BackendPair, ScoreBackend};
use driqa_core::logistic::LogisticParams;
use driqa_core::nr::{niqe_score, train_niqe, NrBackend};
use driqa_core::svr::{svr_train, SvrGrid};

use crate::dataset::{
    annotate, build_database, dr_reference_scores, fit_nr_map, init_threads, map_as_dr,
    niqe_scores, score_database, triples, ScaleSpec, ScoredFd,
};
use crate::error::{Result, ToolError};
use crate::io::{load_luminance, save_plane};
use crate::manifest::{Manifest, Role, MANIFEST_FILE};
use crate::params::{
    f17, load_niqe_model, load_nr_map, save_niqe_model, save_nr_map, FitMeta, FittedModel,
    ModelKind, ParamFile,
};
use crate::provenance::Provenance;
use crate::report::{
    behavior_csv, behavior_svg, curves_csv, overshoot_csv, results_csv, write_text, EvalRow,
};

use std::sync::atomic::{AtomicBool, Ordering};

static STDOUT_GONE: AtomicBool = AtomicBool::new(false);

/// Writes to stdout, going permanently quiet instead of panicking once
/// the reader side of a pipe closes (`driqa arch | head`).
fn emit(args: std::fmt::Arguments, newline: bool) {
    use std::io::Write as _;
    if STDOUT_GONE.load(Ordering::Relaxed) {
        return;
    }
    let mut out = std::io::stdout().lock();
    let res = out
        .write_fmt(args)
        .and_then(|()| if newline { out.write_all(b"\n") } else { Ok(()) });
    if res.is_err() {
        STDOUT_GONE.store(true, Ordering::Relaxed);
    }
}

macro_rules! say {
    ($($arg:tt)*) => { emit(format_args!($($arg)*), true) };
}

#[derive(Parser)]
#[command(
    name = "driqa",
    version,
    about = "Degraded-reference image quality assessment toolkit"
)]
struct Cli {
    /// Config file of key=value lines supplying defaults for the
    /// subcommand's long flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the distortion parameter ladders.
    Ladders,
    /// List all 64 architecture codes with their classes.
    Arch,
    /// Write synthetic source images.
    Corpus(CorpusArgs),
    /// Train the no-reference scorer's natural-scene-statistics model.
    TrainNiqe(TrainNiqeArgs),
    /// Build and annotate a two-stage distortion database.
    Generate(GenerateArgs),
    /// Fit fusion models on a training database.
    Fit(FitArgs),
    /// Score one degraded/final image pair with a fitted model.
    Score(ScoreArgs),
    /// Correlate fitted models and baselines against benchmark labels.
    Evaluate(EvaluateArgs),
    /// Extract distortion-behavior curves and overshoot reports.
    Behavior(BehaviorArgs),
}

#[derive(Args)]
struct CorpusArgs {
    /// Output directory for the images.
    #[arg(long)]
    out: PathBuf,
    /// How many images to write.
    #[arg(long, default_value_t = CORPUS_SIZE)]
    count: usize,
    /// Square image side length in pixels.
    #[arg(long, default_value_t = CORPUS_DIM)]
    dim: usize,
    /// Draw from the held-out family (any size) instead of the pinned
    /// training corpus.
    #[arg(long)]
    held_out: bool,
}

#[derive(Args)]
struct TrainNiqeArgs {
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Directory of pristine training images; defaults to the pinned
    /// built-in corpus.
    #[arg(long)]
    pristine: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Directory of pristine source images (.png/.pgm/.ppm).
    #[arg(long)]
    pristine: PathBuf,
    /// Database directory to create.
    #[arg(long)]
    out: PathBuf,
    /// Master seed for all generated noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// First-stage levels: "all", a comma list, or ranges like "1-11".
    #[arg(long, default_value = "all")]
    levels1: String,
    /// Second-stage levels: "all", a comma list, or ranges like "1-17".
    #[arg(long, default_value = "all")]
    levels2: String,
    /// Generating combinations, e.g. "blur-jpeg,noise-jp2k", or "all".
    #[arg(long, alias = "combo", default_value = "all")]
    combos: String,
    /// Full-reference backend for benchmark labels.
    #[arg(long, default_value = "msssim")]
    backend: String,
}

#[derive(Args)]
struct FitArgs {
    /// Training database directory.
    #[arg(long)]
    train: PathBuf,
    /// Validation database directory (pristine-disjoint from training).
    #[arg(long)]
    val: PathBuf,
    /// Output directory for parameter files.
    #[arg(long)]
    out: PathBuf,
    /// Models to fit: "1", "2", "3", a comma list, or "all".
    #[arg(long, default_value = "all")]
    model: String,
    /// Groupings to fit: combination names (aggregates allowed), or "all".
    #[arg(long, alias = "combo", default_value = "all")]
    combos: String,
    /// Full-reference backend for the reference-based cells.
    #[arg(long, default_value = "ssim")]
    backend: String,
    /// No-reference model file; enables the mapped no-reference cells.
    #[arg(long)]
    niqe_model: Option<PathBuf>,
    /// No-reference backend for mapped cells.
    #[arg(long, default_value = "niqe")]
    nr: String,
}

#[derive(Args)]
struct ScoreArgs {
    /// Parameter file produced by `fit`.
    #[arg(long)]
    params: PathBuf,
    /// Degraded (midpoint) image.
    #[arg(long)]
    dr: PathBuf,
    /// Final image.
    #[arg(long)]
    fd: PathBuf,
    /// Pristine original, when available.
    #[arg(long)]
    pr: Option<PathBuf>,
    /// Six-bit architecture code to run (defaults to the parameter
    /// file's own).
    #[arg(long)]
    arch: Option<String>,
    /// No-reference model file (required by no-reference codes).
    #[arg(long)]
    niqe_model: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Annotated test database directory.
    #[arg(long)]
    test: PathBuf,
    /// Directory of parameter files produced by `fit`.
    #[arg(long)]
    params: PathBuf,
    /// Output directory for the results table.
    #[arg(long)]
    out: PathBuf,
    /// Full-reference backend for the reference-only baseline.
    #[arg(long, default_value = "msssim")]
    backend: String,
    /// No-reference model file; enables the no-reference baselines and
    /// mapped cells.
    #[arg(long)]
    niqe_model: Option<PathBuf>,
}

#[derive(Args)]
struct BehaviorArgs {
    /// Database directory.
    #[arg(long)]
    db: PathBuf,
    /// Output directory for tables and plots.
    #[arg(long)]
    out: PathBuf,
    /// Generating combinations to analyze, or "all".
    #[arg(long, alias = "combo", default_value = "all")]
    combos: String,
    /// Full-reference backend for the score triples.
    #[arg(long, default_value = "msssim")]
    backend: String,
    /// Outputs to write: "csv", "svg", or "csv,svg".
    #[arg(long, default_value = "csv,svg")]
    format: String,
}

/// Entry point: parses arguments (after merging config-file defaults) and
/// dispatches. Returns the process exit code.
pub fn run(raw: Vec<String>) -> i32 {
    let args = match apply_config(raw) {
        Ok(args) => args,
        Err(err) => {
            eprintln!("driqa: {err}");
            return err.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version parse as "errors" that print on stdout.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    init_threads();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("driqa: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Ladders => cmd_ladders(),
        Cmd::Arch => cmd_arch(),
        Cmd::Corpus(args) => cmd_corpus(args),
        Cmd::TrainNiqe(args) => cmd_train_niqe(args),
        Cmd::Generate(args) => cmd_generate(args),
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Score(args) => cmd_score(args),
        Cmd::Evaluate(args) => cmd_evaluate(args),
        Cmd::Behavior(args) => cmd_behavior(args),
    }
}

/// Merges `--config FILE` key=value pairs into the argument list as
/// trailing flags, skipping keys already given explicitly.
fn apply_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let mut config_path = None;
    for (i, arg) in args.iter().enumerate() {
        if arg == "--config" {
            config_path = args.get(i + 1).map(PathBuf::from);
            if config_path.is_none() {
                return Err(ToolError::Validation("--config needs a file path".into()));
            }
        } else if let Some(v) = arg.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(v));
        }
    }
    let Some(path) = config_path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| ToolError::io(&path, e))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ToolError::Validation(format!(
                "{}:{}: config lines must be key=value",
                path.display(),
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let flag = format!("--{key}");
        let given = args
            .iter()
            .any(|a| a == &flag || a.starts_with(&format!("{flag}=")));
        if !given {
            args.push(flag);
            args.push(value.to_string());
        }
    }
    Ok(args)
}

fn parse_levels(spec: &str, max: u8, name: &str) -> Result<Vec<u8>> {
    if spec == "all" {
        return Ok((1..=max).collect());
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let bad = || ToolError::Validation(format!("{name}: cannot parse level '{part}'"));
        if let Some((a, b)) = part.split_once('-') {
            let a: u8 = a.trim().parse().map_err(|_| bad())?;
            let b: u8 = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(ToolError::Validation(format!(
                    "{name}: empty range '{part}'"
                )));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn parse_combos(spec: &str, allow_aggregates: bool) -> Result<Vec<ComboType>> {
    if spec == "all" {
        return Ok(if allow_aggregates {
            ALL_COMBO_LABELS.to_vec()
        } else {
            GENERATING_COMBOS.to_vec()
        });
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let combo = ComboType::parse(part.trim())?;
        if !allow_aggregates && combo.stages().is_none() {
            return Err(ToolError::Validation(format!(
                "'{}' is an aggregate label; this command needs generating combinations",
                combo.name()
            )));
        }
        out.push(combo);
    }
    Ok(out)
}

fn parse_models(spec: &str) -> Result<Vec<ModelKind>> {
    if spec == "all" {
        return Ok(vec![ModelKind::Model1, ModelKind::Model2, ModelKind::Model3]);
    }
    let mut out: Vec<ModelKind> = spec
        .split(',')
        .map(|p| ModelKind::parse(p.trim()))
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn parse_fr_backend(s: &str) -> Result<FrBackend> {
    Ok(FrBackend::parse(s)?)
}

fn score_backend_of(fr: FrBackend) -> ScoreBackend {
    match fr {
        FrBackend::Ssim => ScoreBackend::Ssim,
        FrBackend::Msssim => ScoreBackend::Msssim,
    }
}

fn fr_of_score_backend(sb: ScoreBackend) -> Result<FrBackend> {
    match sb {
        ScoreBackend::Ssim => Ok(FrBackend::Ssim),
        ScoreBackend::Msssim => Ok(FrBackend::Msssim),
        ScoreBackend::MappedNr => Err(ToolError::Validation(
            "the second-stage backend must be a full-reference measure".into(),
        )),
    }
}

fn class_name(class: ArchClass) -> &'static str {
    match class {
        ArchClass::Invalid => "invalid",
        ArchClass::Type0 => "type-0",
        ArchClass::Type1 => "type-1",
    }
}

fn cmd_ladders() -> Result<()> {
    say!("kind\tstage\tlevel\tparam");
    for entry in ladder_entries() {
        say!(
            "{}\t{}\t{}\t{}",
            entry.kind.name(),
            match entry.stage {
                driqa_core::distort::Stage::One => 1,
                driqa_core::distort::Stage::Two => 2,
            },
            entry.level,
            entry.param
        );
    }
    Ok(())
}

fn cmd_arch() -> Result<()> {
    say!("code\tclass");
    for code in ArchCode::all() {
        say!("{code}\t{}", class_name(code.classify()));
    }
    let (invalid, type0, type1) = partition_counts();
    say!("# type-1: {type1}\ttype-0: {type0}\tinvalid: {invalid}");
    Ok(())
}

fn cmd_corpus(args: CorpusArgs) -> Result<()> {
    fs::create_dir_all(&args.out).map_err(|e| ToolError::io(&args.out, e))?;
    if args.count == 0 {
        return Err(ToolError::Validation("--count must be at least 1".into()));
    }
    let mut written = Vec::new();
    if args.held_out {
        if args.dim < 16 {
            return Err(ToolError::Validation("--dim must be at least 16".into()));
        }
        for i in 0..args.count {
            let img = held_out_image(i, args.dim, args.dim);
            let path = args.out.join(format!("held-{i:02}.png"));
            save_plane(&path, &img)?;
            written.push(path);
        }
    } else {
        if args.dim != CORPUS_DIM || args.count > CORPUS_SIZE {
            return Err(ToolError::Validation(format!(
                "the pinned corpus has {CORPUS_SIZE} images of {CORPUS_DIM}x{CORPUS_DIM}; \
                 pass --held-out for other sizes"
            )));
        }
        for (i, img) in pristine_corpus().iter().take(args.count).enumerate() {
            let path = args.out.join(format!("corpus-{i:02}.png"));
            save_plane(&path, img)?;
            written.push(path);
        }
    }
    let mut prov = Provenance::new("corpus");
    prov.arg("count", args.count)
        .arg("dim", args.dim)
        .arg("held-out", args.held_out);
    prov.write(&args.out)?;
    say!("wrote {} images to {}", written.len(), args.out.display());
    Ok(())
}

fn load_images_dir(dir: &Path) -> Result<Vec<driqa_core::ImagePlane>> {
    let entries = fs::read_dir(dir).map_err(|e| ToolError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(|e| ToolError::io(dir, e))?;
    paths.retain(|p| {
        matches!(
            p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
            Some("png" | "pgm" | "ppm")
        )
    });
    paths.sort();
    if paths.is_empty() {
        return Err(ToolError::Validation(format!(
            "no images (.png/.pgm/.ppm) in {}",
            dir.display()
        )));
    }
    paths.iter().map(|p| load_luminance(p)).collect()
}

fn cmd_train_niqe(args: TrainNiqeArgs) -> Result<()> {
    let (images, source) = match &args.pristine {
        Some(dir) => (load_images_dir(dir)?, dir.display().to_string()),
        None => (pristine_corpus(), "built-in corpus".to_string()),
    };
    let model = train_niqe(&images)?;
    save_niqe_model(&args.out, &model)?;
    let mut prov = Provenance::new("train-niqe");
    prov.arg("pristine", &source).arg("images", images.len());
    if let Some(dir) = &args.pristine {
        let mut inputs: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| ToolError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        inputs.sort();
        for input in inputs {
            prov.input(&input)?;
        }
    }
    let prov_path = provenance_sibling(&args.out);
    write_text(&prov_path, &prov.to_text())?;
    say!(
        "trained on {} images; {} features; model written to {}",
        images.len(),
        model.mean.len(),
        args.out.display()
    );
    Ok(())
}

/// Provenance path for a command whose output is a single file.
fn provenance_sibling(out_file: &Path) -> PathBuf {
    let stem = out_file
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("output");
    out_file.with_file_name(format!("{stem}.provenance.tsv"))
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let scale = ScaleSpec {
        levels1: parse_levels(&args.levels1, LEVELS_STAGE1, "--levels1")?,
        levels2: parse_levels(&args.levels2, LEVELS_STAGE2, "--levels2")?,
        combos: parse_combos(&args.combos, false)?,
    };
    let backend = parse_fr_backend(&args.backend)?;
    fs::create_dir_all(&args.out).map_err(|e| ToolError::io(&args.out, e))?;
    let mut manifest = build_database(&args.pristine, &args.out, args.seed, &scale)?;
    annotate(&args.out, &mut manifest, backend)?;
    manifest.save(&args.out.join(MANIFEST_FILE))?;

    let mut prov = Provenance::new("generate");
    let levels1: Vec<String> = scale.levels1.iter().map(|l| l.to_string()).collect();
    let levels2: Vec<String> = scale.levels2.iter().map(|l| l.to_string()).collect();
    let combos: Vec<&str> = scale.combos.iter().map(|c| c.name()).collect();
    prov.arg("seed", args.seed)
        .arg("levels1", levels1.join(","))
        .arg("levels2", levels2.join(","))
        .arg("combos", combos.join(","))
        .arg("backend", backend.name());
    let mut inputs: Vec<PathBuf> = fs::read_dir(&args.pristine)
        .map_err(|e| ToolError::io(&args.pristine, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    inputs.sort();
    for input in inputs {
        prov.input(&input)?;
    }
    prov.write(&args.out)?;

    let (pr, dr, fd) = manifest.role_counts();
    let counts = scale.counts(pr);
    debug_assert_eq!(dr, counts.dr_total);
    debug_assert_eq!(fd, counts.fd_total);
    say!(
        "{}: {pr} pristine, {dr} degraded, {fd} final images ({} distorted total)",
        args.out.display(),
        dr + fd
    );
    Ok(())
}

/// One backend pairing of a fit run: where first-stage scores come from,
/// which full-reference measure scores the second stage, and the score
/// data under that pairing.
struct PairData {
    as_backend: ScoreBackend,
    rs_backend: ScoreBackend,
    arch: ArchCode,
    nr_meta: Option<(NrBackend, LogisticParams)>,
    train: Vec<ScoredFd>,
    val: Vec<ScoredFd>,
    label: String,
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let nr_backend = NrBackend::parse(&args.nr)?;
    if args.niqe_model.is_some() && nr_backend != NrBackend::Niqe {
        return Err(ToolError::Validation(format!(
            "no-reference backend '{}' has no trainer in this toolkit; use niqe",
            nr_backend.name()
        )));
    }
    let models = parse_models(&args.model)?;
    let combos = parse_combos(&args.combos, true)?;
    let fr_backend = parse_fr_backend(&args.backend)?;

    let train_manifest = Manifest::load(&args.train.join(MANIFEST_FILE))?;
    let val_manifest = Manifest::load(&args.val.join(MANIFEST_FILE))?;

    // Fitting and validating on overlapping content would leak; require
    // disjoint pristine sets.
    let train_ids: BTreeSet<&str> = train_manifest.pristines().iter().map(|r| r.id.as_str()).collect();
    let val_ids: BTreeSet<&str> = val_manifest.pristines().iter().map(|r| r.id.as_str()).collect();
    let overlap: Vec<&str> = train_ids.intersection(&val_ids).copied().collect();
    if !overlap.is_empty() {
        return Err(ToolError::Validation(format!(
            "training and validation databases share pristine images: {}",
            overlap.join(", ")
        )));
    }

    fs::create_dir_all(&args.out).map_err(|e| ToolError::io(&args.out, e))?;

    // Score both databases under every full-reference backend any cell
    // needs.
    let mut needed: BTreeSet<&'static str> = BTreeSet::new();
    needed.insert(fr_backend.name());
    if args.niqe_model.is_some() {
        needed.insert(FrBackend::Ssim.name());
        needed.insert(FrBackend::Msssim.name());
    }
    let mut scored_train: BTreeMap<&'static str, Vec<ScoredFd>> = BTreeMap::new();
    let mut scored_val: BTreeMap<&'static str, Vec<ScoredFd>> = BTreeMap::new();
    for name in &needed {
        let b = FrBackend::parse(name)?;
        scored_train.insert(name, score_database(&args.train, &train_manifest, b)?);
        scored_val.insert(name, score_database(&args.val, &val_manifest, b)?);
    }

    let mut pairs: Vec<PairData> = vec![PairData {
        as_backend: score_backend_of(fr_backend),
        rs_backend: score_backend_of(fr_backend),
        arch: ArchCode::FR_BOTH_STAGES,
        nr_meta: None,
        train: scored_train[fr_backend.name()].clone(),
        val: scored_val[fr_backend.name()].clone(),
        label: format!("{0}/{0}", fr_backend.name()),
    }];

    if let Some(model_path) = &args.niqe_model {
        let niqe_model = load_niqe_model(model_path)?;
        let niqe_train = niqe_scores(&args.train, &train_manifest, &niqe_model, &[Role::Degraded])?;
        let niqe_val = niqe_scores(&args.val, &val_manifest, &niqe_model, &[Role::Degraded])?;
        for rs_fr in [FrBackend::Ssim, FrBackend::Msssim] {
            let fr_dr = dr_reference_scores(&args.train, &train_manifest, rs_fr)?;
            let map = fit_nr_map(&niqe_train, &fr_dr)?;
            save_nr_map(
                &args.out.join(format!("nr-map-{}-{}.tsv", nr_backend.name(), rs_fr.name())),
                nr_backend,
                rs_fr.name(),
                &map,
                fr_dr.len(),
            )?;
            pairs.push(PairData {
                as_backend: ScoreBackend::MappedNr,
                rs_backend: score_backend_of(rs_fr),
                arch: ArchCode::NR_MIDPOINT,
                nr_meta: Some((nr_backend, map.clone())),
                train: map_as_dr(&scored_train[rs_fr.name()], &niqe_train, &map)?,
                val: map_as_dr(&scored_val[rs_fr.name()], &niqe_val, &map)?,
                label: format!("{}/{}", nr_backend.name(), rs_fr.name()),
            });
        }
    }

    let mut summary = String::from(
        "model,combo,as_backend,rs_backend,train_samples,val_plcc,val_srcc\n",
    );
    say!("model    combo        backends        n_train  val_plcc  val_srcc");
    for pair in &pairs {
        let backends: BackendPair = (pair.as_backend, pair.rs_backend);
        let t_train = triples(&pair.train);
        for &model_kind in &models {
            for &combo in &combos {
                let model = match model_kind {
                    ModelKind::Model1 => {
                        let groups = model1_groups(&t_train, combo)?;
                        FittedModel::M1(fit_model1(&groups, combo, backends)?.params)
                    }
                    ModelKind::Model2 => {
                        let samples = fit_samples(&t_train, combo)?;
                        FittedModel::M2(fit_model2(&samples, combo, backends)?)
                    }
                    ModelKind::Model3 => {
                        let samples = fit_samples(&t_train, combo)?;
                        FittedModel::M3 {
                            combo,
                            backends,
                            svr: svr_train(&samples, &SvrGrid::coarse())?,
                        }
                    }
                };
                let members = combo.members();
                let subset: Vec<&ScoredFd> = pair
                    .val
                    .iter()
                    .filter(|s| members.contains(&s.triple.combo))
                    .collect();
                let train_samples = pair
                    .train
                    .iter()
                    .filter(|s| members.contains(&s.triple.combo))
                    .count();
                let mut preds = Vec::with_capacity(subset.len());
                let mut targets = Vec::with_capacity(subset.len());
                let mut file = ParamFile {
                    model,
                    meta: FitMeta {
                        arch: pair.arch,
                        nr: pair.nr_meta.clone(),
                        train_samples,
                        val_plcc: f64::NAN,
                        val_srcc: f64::NAN,
                    },
                };
                for s in &subset {
                    preds.push(file.predict(s.triple.as_dr, s.triple.rs_fd)?);
                    targets.push(s.label.ok_or_else(|| {
                        ToolError::Validation(format!(
                            "validation record '{}' has no benchmark label; \
                             regenerate the database with `driqa generate`",
                            s.fd_id
                        ))
                    })?);
                }
                file.meta.val_plcc = plcc(&preds, &targets)?;
                file.meta.val_srcc = srcc(&preds, &targets)?;
                file.save(&args.out.join(file.file_name()))?;
                summary.push_str(&format!(
                    "{},{},{},{},{},{:.4},{:.4}\n",
                    model_kind.name(),
                    combo.name(),
                    pair.as_backend.name(),
                    pair.rs_backend.name(),
                    train_samples,
                    file.meta.val_plcc,
                    file.meta.val_srcc
                ));
                say!(
                    "{:<8} {:<12} {:<15} {:>7}  {:>8.4}  {:>8.4}",
                    model_kind.name(),
                    combo.name(),
                    &pair.label,
                    train_samples,
                    file.meta.val_plcc,
                    file.meta.val_srcc
                );
            }
        }
    }
    write_text(&args.out.join("fit-summary.csv"), &summary)?;

    let mut prov = Provenance::new("fit");
    let model_names: Vec<&str> = models.iter().map(|m| m.name()).collect();
    let combo_names: Vec<&str> = combos.iter().map(|c| c.name()).collect();
    prov.arg("model", model_names.join(","))
        .arg("combos", combo_names.join(","))
        .arg("backend", fr_backend.name());
    prov.input(&args.train.join(MANIFEST_FILE))?;
    prov.input(&args.val.join(MANIFEST_FILE))?;
    if let Some(model_path) = &args.niqe_model {
        prov.arg("nr", nr_backend.name());
        prov.input(model_path)?;
    }
    prov.write(&args.out)?;
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let file = ParamFile::load(&args.params)?;
    let arch = match &args.arch {
        Some(s) => ArchCode::parse(s)?,
        None => file.meta.arch,
    };
    let class = arch.classify();
    let dr_img = load_luminance(&args.dr)?;
    let fd_img = load_luminance(&args.fd)?;
    let rs_fr = fr_of_score_backend(file.backends().1)?;
    let rs_fd = rs_fr.compare(&dr_img, &fd_img)?;

    let (as_label, as_input) = match class {
        ArchClass::Invalid => {
            return Err(ToolError::Validation(format!(
                "invalid architecture code {arch}: at least one stage is \
                 completely unobserved"
            )));
        }
        ArchClass::Type1 => {
            let pr_path = args.pr.as_ref().ok_or_else(|| {
                ToolError::Validation(format!(
                    "architecture {arch} measures the first stage against the \
                     original; provide --pr"
                ))
            })?;
            let as_fr = match file.backends().0 {
                ScoreBackend::MappedNr => {
                    return Err(ToolError::Validation(format!(
                        "parameter file {} was fitted on mapped no-reference \
                         scores; use a no-reference (type-0) code or refit",
                        args.params.display()
                    )));
                }
                sb => fr_of_score_backend(sb)?,
            };
            let pr_img = load_luminance(pr_path)?;
            ("as_dr", as_fr.compare(&pr_img, &dr_img)?)
        }
        ArchClass::Type0 => {
            let (_, map) = file.meta.nr.as_ref().ok_or_else(|| {
                ToolError::Validation(format!(
                    "parameter file {} carries no no-reference mapping; refit \
                     with --niqe-model to serve type-0 codes",
                    args.params.display()
                ))
            })?;
            let model_path = args.niqe_model.as_ref().ok_or_else(|| {
                ToolError::Validation(format!(
                    "architecture {arch} never sees the original; provide \
                     --niqe-model (train one with `driqa train-niqe`)"
                ))
            })?;
            let model = load_niqe_model(model_path)?;
            let nr = niqe_score(&dr_img, &model)?;
            ("as_dr_mapped", map.evaluate(nr).clamp(0.0, 1.0))
        }
    };

    let pred = file.predict(as_input, rs_fd)?;
    say!("arch\t{arch}\t{}", class_name(class));
    say!("model\t{}", file.kind().name());
    say!("combo\t{}", file.combo().name());
    say!("{as_label}\t{}", f17(as_input));
    say!("rs_fd\t{}", f17(rs_fd));
    say!("predicted_as_fd\t{}", f17(pred));
    if let Some(pr_path) = &args.pr {
        let pr_img = load_luminance(pr_path)?;
        let truth = rs_fr.compare(&pr_img, &fd_img)?;
        say!("true_as_fd\t{}", f17(truth));
        say!("prediction_error\t{}", f17(pred - truth));
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let manifest = Manifest::load(&args.test.join(MANIFEST_FILE))?;
    let baseline_fr = parse_fr_backend(&args.backend)?;

    // Load every parameter file in the directory, sorted by name.
    let mut param_paths: Vec<PathBuf> = fs::read_dir(&args.params)
        .map_err(|e| ToolError::io(&args.params, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("params-") && n.ends_with(".tsv"))
        })
        .collect();
    param_paths.sort();
    if param_paths.is_empty() {
        return Err(ToolError::Validation(format!(
            "no parameter files (params-*.tsv) in {}",
            args.params.display()
        )));
    }
    let files: Vec<ParamFile> = param_paths
        .iter()
        .map(|p| ParamFile::load(p))
        .collect::<Result<_>>()?;

    // Score the test database under every backend any method needs.
    let mut needed: BTreeSet<&'static str> = BTreeSet::new();
    needed.insert(baseline_fr.name());
    for file in &files {
        needed.insert(fr_of_score_backend(file.backends().1)?.name());
    }
    let niqe_model = args.niqe_model.as_deref().map(load_niqe_model).transpose()?;
    if niqe_model.is_some() {
        needed.insert(FrBackend::Msssim.name());
    }
    let mut scored: BTreeMap<&'static str, Vec<ScoredFd>> = BTreeMap::new();
    for name in &needed {
        let b = FrBackend::parse(name)?;
        scored.insert(name, score_database(&args.test, &manifest, b)?);
    }

    let (niqe_dr, niqe_fd) = match &niqe_model {
        Some(model) => (
            niqe_scores(&args.test, &manifest, model, &[Role::Degraded])?,
            niqe_scores(&args.test, &manifest, model, &[Role::Final])?,
        ),
        None => (BTreeMap::new(), BTreeMap::new()),
    };

    let label_of = |s: &ScoredFd| -> Result<f64> {
        s.label.ok_or_else(|| {
            ToolError::Validation(format!(
                "test record '{}' has no benchmark label; regenerate with `driqa generate`",
                s.fd_id
            ))
        })
    };

    // One row per (model kind, backend pairing); cells per grouping.
    let mut rows: BTreeMap<(ModelKind, String), EvalRow> = BTreeMap::new();
    for file in &files {
        let rs_fr = fr_of_score_backend(file.backends().1)?;
        let as_name = match &file.meta.nr {
            Some((nr, _)) => nr.name(),
            None => file.backends().0.name(),
        };
        let key = (file.kind(), format!("{}/{}", as_name, rs_fr.name()));
        let row = rows.entry(key.clone()).or_insert_with(|| EvalRow {
            method: format!("{} {}", file.kind().name(), key.1),
            cells: BTreeMap::new(),
        });
        let members = file.combo().members();
        let subset: Vec<&ScoredFd> = scored[rs_fr.name()]
            .iter()
            .filter(|s| members.contains(&s.triple.combo))
            .collect();
        if subset.is_empty() {
            return Err(ToolError::Validation(format!(
                "test database has no final images in grouping '{}'",
                file.combo().name()
            )));
        }
        let mut preds = Vec::with_capacity(subset.len());
        let mut targets = Vec::with_capacity(subset.len());
        for s in subset {
            let as_input = match &file.meta.nr {
                Some((_, map)) => {
                    let nr = niqe_dr.get(&s.dr_id).ok_or_else(|| {
                        ToolError::Validation(format!(
                            "parameter file {} needs no-reference scores; pass --niqe-model",
                            file.file_name()
                        ))
                    })?;
                    map.evaluate(*nr).clamp(0.0, 1.0)
                }
                None => s.triple.as_dr,
            };
            preds.push(file.predict(as_input, s.triple.rs_fd)?);
            targets.push(label_of(s)?);
        }
        row.cells.insert(
            file.combo().name(),
            (plcc(&preds, &targets)?, srcc(&preds, &targets)?),
        );
    }

    let mut out_rows: Vec<EvalRow> = rows.into_values().collect();

    // Baseline rows cover every grouping.
    let baseline_row = |name: String,
                        backend_name: &'static str,
                        pred: &dyn Fn(&ScoredFd) -> Result<f64>|
     -> Result<EvalRow> {
        let mut cells = BTreeMap::new();
        for combo in ALL_COMBO_LABELS {
            let members = combo.members();
            let subset: Vec<&ScoredFd> = scored[backend_name]
                .iter()
                .filter(|s| members.contains(&s.triple.combo))
                .collect();
            if subset.is_empty() {
                continue;
            }
            let mut preds = Vec::with_capacity(subset.len());
            let mut targets = Vec::with_capacity(subset.len());
            for s in subset {
                preds.push(pred(s)?);
                targets.push(label_of(s)?);
            }
            cells.insert(combo.name(), (plcc(&preds, &targets)?, srcc(&preds, &targets)?));
        }
        Ok(EvalRow { method: name, cells })
    };

    out_rows.push(baseline_row(
        format!("baseline1 rs-only ({})", baseline_fr.name()),
        baseline_fr.name(),
        &|s| Ok(s.triple.rs_fd),
    )?);
    if niqe_model.is_some() {
        // Raw no-reference distance of the final image; negated so that
        // larger means better, like every other method here.
        out_rows.push(baseline_row(
            "baseline2 niqe-fd".to_string(),
            baseline_fr.name(),
            &|s| {
                niqe_fd
                    .get(&s.fd_id)
                    .map(|v| -*v)
                    .ok_or_else(|| ToolError::Validation(format!("no NR score for '{}'", s.fd_id)))
            },
        )?);
        // Mapped midpoint estimate times the second-stage score.
        let map_path = args
            .params
            .join(format!("nr-map-niqe-{}.tsv", FrBackend::Msssim.name()));
        if map_path.is_file() {
            let (_, _, map) = load_nr_map(&map_path)?;
            out_rows.push(baseline_row(
                "baseline3 mapped-niqe-x-msssim".to_string(),
                FrBackend::Msssim.name(),
                &|s| {
                    let nr = niqe_dr.get(&s.dr_id).ok_or_else(|| {
                        ToolError::Validation(format!("no NR score for '{}'", s.dr_id))
                    })?;
                    Ok(map.evaluate(*nr).clamp(0.0, 1.0) * s.triple.rs_fd)
                },
            )?);
        }
    }

    let csv = results_csv(&out_rows);
    fs::create_dir_all(&args.out).map_err(|e| ToolError::io(&args.out, e))?;
    write_text(&args.out.join("results.csv"), &csv)?;
    emit(format_args!("{csv}"), false);

    let mut prov = Provenance::new("evaluate");
    prov.arg("backend", baseline_fr.name());
    prov.input(&args.test.join(MANIFEST_FILE))?;
    for path in &param_paths {
        prov.input(path)?;
    }
    if let Some(path) = &args.niqe_model {
        prov.input(path)?;
    }
    prov.write(&args.out)?;
    Ok(())
}

fn cmd_behavior(args: BehaviorArgs) -> Result<()> {
    let manifest = Manifest::load(&args.db.join(MANIFEST_FILE))?;
    let backend = parse_fr_backend(&args.backend)?;
    let combos = parse_combos(&args.combos, false)?;
    let mut want_csv = false;
    let mut want_svg = false;
    for part in args.format.split(',') {
        match part.trim() {
            "csv" => want_csv = true,
            "svg" => want_svg = true,
            other => {
                return Err(ToolError::Validation(format!(
                    "unknown format '{other}' (expected csv and/or svg)"
                )))
            }
        }
    }

    let scored = score_database(&args.db, &manifest, backend)?;
    let trips = triples(&scored);
    let names: BTreeMap<u64, String> = manifest
        .pristine_indices()
        .into_iter()
        .map(|(id, idx)| (idx, id))
        .collect();
    fs::create_dir_all(&args.out).map_err(|e| ToolError::io(&args.out, e))?;

    for &combo in &combos {
        let fits = extract_behavior(&trips, combo)?;
        let report = detect_overshoot(&fits)?;
        if want_csv {
            let subset: Vec<ScoredFd> = scored
                .iter()
                .filter(|s| s.triple.combo == combo)
                .cloned()
                .collect();
            write_text(
                &args.out.join(format!("curves-{}.csv", combo.name())),
                &curves_csv(&subset, &names),
            )?;
            write_text(
                &args.out.join(format!("behavior-{}.csv", combo.name())),
                &behavior_csv(&fits, &names),
            )?;
            write_text(
                &args.out.join(format!("overshoot-{}.csv", combo.name())),
                &overshoot_csv(&report, &names),
            )?;
        }
        if want_svg {
            write_text(
                &args.out.join(format!("behavior-{}.svg", combo.name())),
                &behavior_svg(combo, &fits),
            )?;
        }
        say!(
            "{}: {} curves, {} overshoot points",
            combo.name(),
            fits.len(),
            report.total_points
        );
    }

    let mut prov = Provenance::new("behavior");
    let combo_names: Vec<&str> = combos.iter().map(|c| c.name()).collect();
    prov.arg("combos", combo_names.join(","))
        .arg("backend", backend.name())
        .arg("format", &args.format);
    prov.input(&args.db.join(MANIFEST_FILE))?;
    prov.write(&args.out)?;
    Ok(())
}
