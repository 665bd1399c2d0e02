//! Command-line front end: generate synthetic datasets, preprocess heaps,
//! train and run the slice classifier, extract keys, evaluate and benchmark.
//!
//! Exit codes are a stable contract: 0 success, 2 usage or configuration
//! error, 3 key not found, 4 data error. Set KEYHUNT_LOG=debug for verbose
//! logging.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use keyhunt::bruteforce::{find_in_slices, find_iv_and_key, SearchOptions, SearchSpace};
use keyhunt::cipher::lookup_cipher;
use keyhunt::dataset::{load_entry, walk_dataset, DatasetEntry, DatasetFilter, Split};
use keyhunt::error::Error;
use keyhunt::eval::{
    bench_csv, bench_table, benchmark, evaluate_models, hardware_summary, metrics_csv,
    metrics_table, retrieval_by_key_length, retrieval_csv, retrieval_table, BenchConfig,
    BenchMethod,
};
use keyhunt::forest::{load_model, save_model, train_stacked, TrainingSet};
use keyhunt::heap::{HeapSnapshot, Scenario};
use keyhunt::packet::{load_raw_ciphertext, Direction, ValidationPacket};
use keyhunt::pcap::extract_first_encrypted_packet;
use keyhunt::preprocess::{
    page_filter, slices_for_heap, DiffSemantics, MarkPolarity, PreprocessConfig,
};
use keyhunt::synth::{generate_synthetic, write_entry, FillerProfile, SyntheticRecipe};
use keyhunt::{derive_seed, Result};

#[derive(Parser)]
#[command(
    name = "keyhunt",
    version,
    about = "Recover OpenSSH session keys from heap dumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset of heaps, key logs and traffic
    Generate(GenerateArgs),
    /// Run the entropy mask or page filter over one heap
    Preprocess(PreprocessArgs),
    /// Train the stacked slice classifier on a dataset
    Train(TrainArgs),
    /// Write predicted-positive slice offsets for one heap
    Classify(ClassifyArgs),
    /// Recover the (IV, key) pair of one heap against a captured packet
    Extract(ExtractArgs),
    /// Classifier metrics and per-key-length retrieval on a dataset split
    Evaluate(EvaluateArgs),
    /// Wall-clock comparison of the brute-force and ml paths
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PaperLiteral {
    /// Bitwise AND of the absolute differences in the mask
    Eq1Bitwise,
    /// Count equal (not differing) neighbors when marking rows
    Eq2Printed,
    /// Advance the outer search loop past the whole inner sweep
    Alg1Literal,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Ml,
    Brute,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    ClientToServer,
    ServerToClient,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Direction {
        match d {
            DirectionArg::ClientToServer => Direction::ClientToServer,
            DirectionArg::ServerToClient => Direction::ServerToClient,
        }
    }
}

/// Knobs shared by every pipeline stage that slices heaps.
#[derive(Args, Clone)]
struct PipelineArgs {
    /// Page filter threshold as a fraction of 8 bits
    #[arg(long = "page-threshold", default_value_t = 0.4)]
    page_threshold: f64,
    /// Slice width in bytes
    #[arg(long, default_value_t = 128)]
    window: usize,
    /// Slice stride in bytes
    #[arg(long, default_value_t = 64)]
    stride: usize,
    /// Use a formula exactly as printed instead of its corrected reading
    #[arg(long = "paper-literal", value_enum)]
    paper_literal: Vec<PaperLiteral>,
}

impl PipelineArgs {
    fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig {
            page_threshold: self.page_threshold,
            window: self.window,
            stride: self.stride,
            diff: if self.paper_literal.contains(&PaperLiteral::Eq1Bitwise) {
                DiffSemantics::BitwiseAbs
            } else {
                DiffSemantics::Logical
            },
            polarity: if self.paper_literal.contains(&PaperLiteral::Eq2Printed) {
                MarkPolarity::CountEqualPrinted
            } else {
                MarkPolarity::CountDiffering
            },
            ..Default::default()
        }
    }

    fn literal_outer_advance(&self) -> bool {
        self.paper_literal.contains(&PaperLiteral::Alg1Literal)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Dataset root to create
    #[arg(long)]
    out: PathBuf,
    /// Number of entries
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value = "training")]
    split: Split,
    #[arg(long, default_value = "basic-connect")]
    scenario: Scenario,
    /// Version directory name
    #[arg(long, default_value = "V_8_0_P1")]
    version: String,
    #[arg(long, default_value = "aes192-ctr")]
    cipher: String,
    /// Heap size in KB
    #[arg(long = "heap-kb", default_value_t = 132)]
    heap_kb: usize,
    #[arg(long, default_value = "mixed")]
    filler: FillerProfile,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write a session capture per entry
    #[arg(long)]
    pcap: bool,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Key log whose sibling heap to process
    #[arg(long, conflicts_with = "heap")]
    json: Option<PathBuf>,
    /// Raw heap dump to process
    #[arg(long)]
    heap: Option<PathBuf>,
    /// What to emit: candidate slice offsets or retained page regions
    #[arg(long, value_enum, default_value_t = PreprocessWhat::Slices)]
    what: PreprocessWhat,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreprocessWhat {
    Slices,
    Pages,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset root
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "training")]
    split: Split,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    version: Option<String>,
    #[arg(long = "key-len")]
    key_len: Option<usize>,
    /// Where to write the trained model
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of rows held out for the meta forest
    #[arg(long, default_value_t = 0.25)]
    holdout: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, conflicts_with = "heap")]
    json: Option<PathBuf>,
    #[arg(long)]
    heap: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "decision-threshold")]
    decision_threshold: Option<f64>,
    /// Output file for the offsets (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ExtractArgs {
    /// Key log; provides the heap, the cipher and (for synthetic data) the
    /// sibling packet file
    #[arg(long, conflicts_with = "heap")]
    json: Option<PathBuf>,
    /// Raw heap dump (requires --cipher)
    #[arg(long)]
    heap: Option<PathBuf>,
    /// Cipher name; mandatory with --heap, overrides the log otherwise
    #[arg(long)]
    cipher: Option<String>,
    /// Session capture to pull the first encrypted packet from
    #[arg(long)]
    pcap: Option<PathBuf>,
    /// Raw single-packet ciphertext file
    #[arg(long)]
    ciphertext: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
    /// Trained model (ml mode)
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long = "decision-threshold")]
    decision_threshold: Option<f64>,
    /// Traffic direction to attack (A/C pair or B/D pair)
    #[arg(long, value_enum, default_value_t = DirectionArg::ClientToServer)]
    direction: DirectionArg,
    /// Cap the search worker count
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 22)]
    port: u16,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "validation")]
    split: Split,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    version: Option<String>,
    #[arg(long = "key-len")]
    key_len: Option<usize>,
    #[arg(long)]
    model: PathBuf,
    /// Prefix for the report files
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "validation")]
    split: Split,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    version: Option<String>,
    #[arg(long = "key-len")]
    key_len: Option<usize>,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Workers per method (both methods get the same budget)
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KEYHUNT_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Train(args) => cmd_train(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("keyhunt: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 usage/config, 4 data; not-found is reported via Ok paths.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::UnknownCipher(_)
        | Error::EmptySelection
        | Error::OverlappingRegions
        | Error::UnsupportedCipher(_) => 2,
        _ => 4,
    }
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("keyhunt: {message}");
    ExitCode::from(2)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let spec = lookup_cipher(&args.cipher)?;
    let dir = args
        .out
        .join(args.split.dir_name())
        .join(args.scenario.dir_name())
        .join(&args.version)
        .join(spec.key_len.to_string());
    let heap_size = args.heap_kb * 1024;
    let mut manifest_entries = Vec::new();
    for index in 0..args.count {
        let entry_seed = derive_seed(args.seed, index as u64);
        let mut rng: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(entry_seed);
        let (iv_offset, key_offset) =
            random_offsets(&mut rng, heap_size, spec.iv_len, spec.key_len);
        let mut recipe = SyntheticRecipe::new(spec, heap_size, iv_offset, key_offset, entry_seed);
        recipe.filler_profile = args.filler;
        recipe.ssh_version = args.version.clone();
        recipe.scenario = args.scenario;
        let entry = generate_synthetic(&recipe)?;
        let stem = format!("{index:05}");
        let json_path = write_entry(&dir, &stem, &entry, args.pcap)?;
        manifest_entries.push(serde_json::json!({
            "stem": stem,
            "json": json_path.strip_prefix(&args.out).unwrap_or(&json_path).display().to_string(),
            "seed": entry_seed,
            "iv_offset": iv_offset,
            "key_offset": key_offset,
        }));
    }
    let manifest = serde_json::json!({
        "cipher": spec.name,
        "count": args.count,
        "filler": format!("{:?}", args.filler),
        "heap_kb": args.heap_kb,
        "seed": args.seed,
        "entries": manifest_entries,
    });
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(
        args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("static structure")
            + "
",
    )?;
    eprintln!("wrote {} entries under {}", args.count, args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Non-overlapping 8-aligned offsets for the recipe-pinned pair.
fn random_offsets(
    rng: &mut rand_chacha::ChaCha8Rng,
    heap_size: usize,
    iv_len: usize,
    key_len: usize,
) -> (usize, usize) {
    use rand::Rng;
    let max_len = iv_len.max(key_len).max(8);
    loop {
        let iv = rng.gen_range(0..(heap_size - max_len) / 8) * 8;
        let key = rng.gen_range(0..(heap_size - max_len) / 8) * 8;
        if iv.abs_diff(key) >= iv_len.max(8) + key_len {
            return (iv, key);
        }
    }
}

fn load_heap_arg(
    json: Option<&Path>,
    heap: Option<&Path>,
) -> Result<(HeapSnapshot, Option<DatasetEntry>)> {
    match (json, heap) {
        (Some(json_path), _) => {
            let entry = load_entry(json_path)?;
            Ok((entry.heap.clone(), Some(entry)))
        }
        (None, Some(heap_path)) => {
            let bytes = std::fs::read(heap_path)?;
            let heap = HeapSnapshot::new(
                bytes,
                0,
                "unknown",
                Scenario::BasicConnect,
                heap_path.display().to_string(),
            )?;
            Ok((heap, None))
        }
        (None, None) => unreachable!("callers check for one of --json/--heap"),
    }
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<ExitCode> {
    if args.json.is_none() && args.heap.is_none() {
        return Ok(usage_error("preprocess needs --json or --heap"));
    }
    let (heap, entry) = load_heap_arg(args.json.as_deref(), args.heap.as_deref())?;
    let config = args.pipeline.preprocess();
    let mut text = String::new();
    match args.what {
        PreprocessWhat::Slices => {
            let annotations = entry.as_ref().map(|e| e.annotations.as_slice());
            for slice in slices_for_heap(&heap, annotations, &config)? {
                text.push_str(&format!("{}\n", slice.offset));
            }
        }
        PreprocessWhat::Pages => {
            for region in page_filter(&heap, config.page_len, config.page_threshold) {
                text.push_str(&format!("{} {}\n", region.offset, region.len));
            }
        }
    }
    write_or_print(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode> {
    let filter = DatasetFilter {
        scenario: args.scenario,
        version: args.version.clone(),
        key_len: args.key_len,
    };
    let config = args.pipeline.preprocess();
    let mut set = TrainingSet::new(config.window);
    let mut entries = 0usize;
    for entry in walk_dataset(&args.dataset, args.split, &filter)? {
        for slice in slices_for_heap(&entry.heap, Some(&entry.annotations), &config)? {
            set.push(&slice.data, slice.label);
        }
        entries += 1;
    }
    eprintln!(
        "{} entries -> {} slices ({} positive)",
        entries,
        set.len(),
        set.positives()
    );
    let model = train_stacked(&set, args.holdout, args.seed)?;
    save_model(&args.model, &model)?;
    eprintln!("model written to {}", args.model.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_classify(args: ClassifyArgs) -> Result<ExitCode> {
    if args.json.is_none() && args.heap.is_none() {
        return Ok(usage_error("classify needs --json or --heap"));
    }
    if !args.model.exists() {
        return Ok(usage_error(format!(
            "model file {} does not exist",
            args.model.display()
        )));
    }
    let mut model = load_model(&args.model)?;
    if let Some(threshold) = args.decision_threshold {
        model.decision_threshold = threshold;
    }
    let (heap, _) = load_heap_arg(args.json.as_deref(), args.heap.as_deref())?;
    let config = args.pipeline.preprocess();
    let mut text = String::new();
    for slice in slices_for_heap(&heap, None, &config)? {
        if model.predict_positive(&slice.data)? {
            text.push_str(&format!("{}\n", slice.offset));
        }
    }
    write_or_print(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn resolve_packet(
    args: &ExtractArgs,
    entry: Option<&DatasetEntry>,
    cipher: &str,
) -> Result<Option<ValidationPacket>> {
    if let Some(pcap) = &args.pcap {
        return Ok(Some(extract_first_encrypted_packet(
            pcap,
            args.port,
            args.direction.into(),
            cipher,
        )?));
    }
    if let Some(raw) = &args.ciphertext {
        let mut packet = load_raw_ciphertext(raw, cipher)?;
        packet.direction = args.direction.into();
        return Ok(Some(packet));
    }
    if let Some(entry) = entry {
        if let Some(raw) = entry.packet_path() {
            let mut packet = load_raw_ciphertext(&raw, cipher)?;
            packet.direction = args.direction.into();
            return Ok(Some(packet));
        }
        if let Some(pcap) = entry.pcap_path() {
            return Ok(Some(extract_first_encrypted_packet(
                &pcap,
                args.port,
                args.direction.into(),
                cipher,
            )?));
        }
    }
    Ok(None)
}

fn cmd_extract(args: ExtractArgs) -> Result<ExitCode> {
    if args.json.is_none() && args.heap.is_none() {
        return Ok(usage_error("extract needs --json or --heap"));
    }
    let (heap, entry) = load_heap_arg(args.json.as_deref(), args.heap.as_deref())?;
    let cipher_name = match (&args.cipher, &entry) {
        (Some(name), _) => name.clone(),
        (None, Some(entry)) => entry.cipher_name().to_string(),
        (None, None) => {
            return Ok(usage_error(
                "--cipher is required when extracting from a bare heap",
            ))
        }
    };
    let spec = lookup_cipher(&cipher_name)?;
    let Some(packet) = resolve_packet(&args, entry.as_ref(), spec.name)? else {
        return Ok(usage_error("no packet source: pass --pcap or --ciphertext"));
    };

    let config = args.pipeline.preprocess();
    let options = SearchOptions {
        workers: args.workers,
        literal_outer_advance: args.pipeline.literal_outer_advance(),
    };
    let mut all_found = true;
    let run_ml = matches!(args.mode, Mode::Ml | Mode::Both);
    let run_brute = matches!(args.mode, Mode::Brute | Mode::Both);

    if run_ml {
        let Some(model_path) = &args.model else {
            return Ok(usage_error("--model is required for the ml path"));
        };
        if !model_path.exists() {
            return Ok(usage_error(format!(
                "model file {} does not exist",
                model_path.display()
            )));
        }
        let mut model = load_model(model_path)?;
        if let Some(threshold) = args.decision_threshold {
            model.decision_threshold = threshold;
        }
        let mut predicted = Vec::new();
        for slice in slices_for_heap(&heap, None, &config)? {
            if model.predict_positive(&slice.data)? {
                predicted.push(slice);
            }
        }
        let outcome = find_in_slices(&packet, &predicted, &heap, spec, &options)?;
        all_found &= print_outcome("ml", spec.name, &outcome);
    }
    if run_brute {
        let regions = page_filter(&heap, config.page_len, config.page_threshold);
        let space = SearchSpace::from_regions(regions);
        let outcome = find_iv_and_key(&packet, &space, &heap, spec, &options)?;
        all_found &= print_outcome("brute", spec.name, &outcome);
    }
    Ok(if all_found {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn print_outcome(method: &str, cipher: &str, outcome: &keyhunt::bruteforce::SearchOutcome) -> bool {
    use keyhunt::bruteforce::SearchOutcome;
    match outcome {
        SearchOutcome::Found(m) => {
            println!("method: {method}");
            println!("cipher: {cipher}");
            println!("iv_offset: {:#x}", m.iv_offset);
            println!("iv: {}", hex::encode(&m.iv));
            println!("key_offset: {:#x}", m.key_offset);
            println!("key: {}", hex::encode(&m.key));
            println!("probes: {}", m.probes_tried);
            println!("elapsed_seconds: {:.6}", m.elapsed.as_secs_f64());
            true
        }
        SearchOutcome::NotFound {
            probes_tried,
            elapsed,
        } => {
            println!("method: {method}");
            println!("cipher: {cipher}");
            println!("result: not-found");
            println!("probes: {probes_tried}");
            println!("elapsed_seconds: {:.6}", elapsed.as_secs_f64());
            false
        }
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<ExitCode> {
    if !args.model.exists() {
        return Ok(usage_error(format!(
            "model file {} does not exist",
            args.model.display()
        )));
    }
    let model = load_model(&args.model)?;
    let filter = DatasetFilter {
        scenario: args.scenario,
        version: args.version.clone(),
        key_len: args.key_len,
    };
    let entries: Vec<DatasetEntry> = walk_dataset(&args.dataset, args.split, &filter)?.collect();
    if entries.is_empty() {
        return Err(Error::EmptySelection);
    }
    let config = args.pipeline.preprocess();
    let counts = evaluate_models(&entries, &model, &config)?;
    let retrieval = retrieval_by_key_length(&entries, &model, &config)?;

    let metrics_text = metrics_table(&counts);
    let retrieval_text = retrieval_table(&retrieval);
    print!("{metrics_text}\n{retrieval_text}");
    let prefix = args.out.display();
    std::fs::write(format!("{prefix}-metrics.txt"), &metrics_text)?;
    std::fs::write(format!("{prefix}-metrics.csv"), metrics_csv(&counts))?;
    std::fs::write(format!("{prefix}-retrieval.txt"), &retrieval_text)?;
    std::fs::write(format!("{prefix}-retrieval.csv"), retrieval_csv(&retrieval))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    if args.runs < 3 {
        return Ok(usage_error("--runs must be at least 3"));
    }
    if !args.model.exists() {
        return Ok(usage_error(format!(
            "model file {} does not exist",
            args.model.display()
        )));
    }
    let filter = DatasetFilter {
        scenario: args.scenario,
        version: args.version.clone(),
        key_len: args.key_len,
    };
    let mut pairs = Vec::new();
    for entry in walk_dataset(&args.dataset, args.split, &filter)? {
        let spec = lookup_cipher(entry.cipher_name())?;
        if !spec.validatable {
            log::warn!(
                "skipping {}: {} is not validatable",
                entry.json_path.display(),
                spec.name
            );
            continue;
        }
        let Some(packet_path) = entry.packet_path() else {
            log::warn!("skipping {}: no packet file", entry.json_path.display());
            continue;
        };
        let packet = load_raw_ciphertext(&packet_path, spec.name)?;
        pairs.push((entry, packet));
    }
    if pairs.is_empty() {
        return Err(Error::EmptySelection);
    }
    let config = BenchConfig {
        runs: args.runs,
        workers: Some(args.workers),
        preprocess: args.pipeline.preprocess(),
    };
    let records = benchmark(
        &pairs,
        &args.model,
        &[BenchMethod::BruteForce, BenchMethod::Ml],
        &config,
    )?;
    let table = bench_table(&records, &hardware_summary());
    print!("{table}");
    let prefix = args.out.display();
    std::fs::write(format!("{prefix}-bench.txt"), &table)?;
    std::fs::write(format!("{prefix}-bench.csv"), bench_csv(&records))?;
    Ok(ExitCode::SUCCESS)
}
