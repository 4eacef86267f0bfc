use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use apex_lbp::bench::run_benchmark;
use apex_lbp::eval::{compare_with_quoted, render_table};
use apex_lbp::synth::random_spec;
use apex_lbp::volume::{write_pgm, ManifestFile};
use apex_lbp::{
    build_report, extract_descriptors, generate_sequence, load_corpus, load_sequence,
    per_plane_spots, DescriptorKind, Envelope, Error, EvalReport, PatternConfig, PlaneId,
    PlaneSpots, Radii, Result, SampleOutcome, SamplingPattern, SequenceManifest, SynthSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "apex-lbp",
    version,
    about = "Spatiotemporal LBP descriptors and apex-frame spotting"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the sampling offsets and interpolation taps of all nine planes.
    DumpGeometry {
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-frame descriptors as CSV (frame,plane,bin,value).
    Extract {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long, default_value = "lbp-sipl", value_parser = parse_kind)]
        kind: DescriptorKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feature-difference curves and the spotted apex of one sequence.
    Spot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long, default_value = "lbp-sipl", value_parser = parse_kind)]
        kind: DescriptorKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MAE, SE and hit rate over an annotated corpus.
    Eval {
        /// JSON array of sequence manifests with ground-truth apex frames.
        #[arg(long)]
        corpus: PathBuf,
        /// Spot result files (or directories of them) written by `spot`;
        /// when absent every corpus sequence is spotted here.
        #[arg(long)]
        spots: Vec<PathBuf>,
        #[command(flatten)]
        pattern: PatternArgs,
        /// Repeat to evaluate several methods.
        #[arg(long, value_parser = parse_kind)]
        kind: Vec<DescriptorKind>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic sequences with a planted apex as PGM frames, one
    /// manifest per sequence and a corpus manifest.json.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        /// Fixed apex frame; when absent depth and apex are drawn at random.
        #[arg(long)]
        apex: Option<usize>,
        /// Frames per sequence (default: twice the apex).
        #[arg(long, requires = "apex")]
        depth: Option<usize>,
        /// Peak bump height, or the lower bound of the drawn height when
        /// the apex is random.
        #[arg(long, default_value_t = 24.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = EnvelopeArg::Triangular)]
        envelope: EnvelopeArg,
    },
    /// Time descriptor extraction on a synthetic volume.
    Bench {
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 480)]
        height: usize,
        #[arg(long, default_value_t = 60)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[command(flatten)]
        pattern: PatternArgs,
        #[arg(long, default_value = "lbp-sipl", value_parser = parse_kind)]
        kind: DescriptorKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Frame directory or single-sequence manifest JSON.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct PatternArgs {
    /// Neighbours per plane: 4, 8, 16 or 24.
    #[arg(long, default_value_t = 8, value_parser = parse_np)]
    np: usize,
    /// rx,ry,rz
    #[arg(long, default_value = "1,1,1", value_parser = parse_radii)]
    radii: Radii,
}

impl PatternArgs {
    fn config(&self) -> Result<PatternConfig> {
        PatternConfig::new(self.np, self.radii)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EnvelopeArg {
    Triangular,
    RaisedCosine,
}

impl From<EnvelopeArg> for Envelope {
    fn from(e: EnvelopeArg) -> Self {
        match e {
            EnvelopeArg::Triangular => Envelope::Triangular,
            EnvelopeArg::RaisedCosine => Envelope::RaisedCosine,
        }
    }
}

fn parse_kind(s: &str) -> std::result::Result<DescriptorKind, String> {
    s.parse()
        .map_err(|_| format!("expected lbp-sipl, lbp-top or plane:<id>, got `{s}`"))
}

fn parse_np(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if apex_lbp::geometry::ADMISSIBLE_POINTS.contains(&n) => Ok(n),
        _ => Err(format!("expected 4, 8, 16 or 24, got `{s}`")),
    }
}

fn parse_radii(s: &str) -> std::result::Result<Radii, String> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("bad radius in `{s}`: {e}"))?;
    match parts[..] {
        [x, y, z] if x >= 1 && y >= 1 && z >= 1 => Ok(Radii { x, y, z }),
        _ => Err(format!(
            "expected three positive integers rx,ry,rz, got `{s}`"
        )),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn to_json<S: serde::Serialize + ?Sized>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

/// Writes `contents` to `out/name`, or to stdout when no directory is given.
fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => write_file(&dir.join(name), contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn dump_geometry(pattern: &PatternArgs, out: Option<&Path>) -> Result<()> {
    let config = pattern.config()?;
    let planes: Vec<SamplingPattern<f64>> = PlaneId::ALL
        .iter()
        .map(|&p| SamplingPattern::new(p, config))
        .collect();
    let doc = json!({ "config": config, "planes": planes });
    emit(out, "geometry.json", &to_json(&doc))
}

fn extract(
    input: &Path,
    pattern: &PatternArgs,
    kind: DescriptorKind,
    out: Option<&Path>,
) -> Result<()> {
    let manifest = SequenceManifest::open(input)?;
    let volume = load_sequence::<f64>(&manifest)?;
    let descriptors = extract_descriptors(&volume, kind, pattern.config()?)?;
    let mut csv = String::from("frame,plane,bin,value\n");
    for d in &descriptors {
        for (plane, seg) in d.segments() {
            for (bin, v) in seg.iter().enumerate() {
                let _ = writeln!(csv, "{},{plane},{bin},{v}", d.frame_index);
            }
        }
    }
    emit(out, "descriptors.csv", &csv)
}

fn scope_summary(spot: &apex_lbp::SpotResult<f64>) -> Value {
    json!({
        "apex_frame": spot.apex_frame,
        "peak_value": spot.peak_value,
        "flat": spot.flat,
    })
}

fn spot_document(
    manifest: &SequenceManifest,
    kind: DescriptorKind,
    config: PatternConfig,
    spots: &PlaneSpots<f64>,
) -> Value {
    let mut scopes = serde_json::Map::new();
    scopes.insert("all".into(), scope_summary(&spots.all));
    for (plane, s) in &spots.planes {
        scopes.insert(plane.to_string(), scope_summary(s));
    }
    let truth = manifest.ground_truth;
    json!({
        "sequence_id": manifest.sequence_id,
        "method": kind.label(),
        "kind": kind.to_string(),
        "config": config,
        "frames": spots.all.curve.len(),
        "apex_frame": spots.all.apex_frame,
        "peak_value": spots.all.peak_value,
        "flat": spots.all.flat,
        "scopes": scopes,
        "ground_truth": truth,
        "error": truth.map(|t| spots.all.apex_frame as i64 - t.apex as i64),
    })
}

fn fd_csv(spots: &PlaneSpots<f64>) -> String {
    let mut csv = String::from("frame,scope,fd\n");
    let scopes = std::iter::once(("all".to_string(), &spots.all))
        .chain(spots.planes.iter().map(|(p, s)| (p.to_string(), s)));
    for (scope, s) in scopes {
        for (i, v) in s.curve.values.iter().enumerate() {
            let _ = writeln!(csv, "{},{scope},{v}", i + 1);
        }
    }
    csv
}

fn spot_manifest(
    manifest: &SequenceManifest,
    kind: DescriptorKind,
    config: PatternConfig,
) -> Result<PlaneSpots<f64>> {
    let volume = load_sequence::<f64>(manifest)?;
    let spots = per_plane_spots(&extract_descriptors(&volume, kind, config)?)?;
    if spots.all.flat {
        eprintln!(
            "warning: feature-difference curve of `{}` is flat; reporting apex frame 1",
            manifest.sequence_id
        );
    }
    Ok(spots)
}

fn spot(
    input: &Path,
    pattern: &PatternArgs,
    kind: DescriptorKind,
    out: Option<&Path>,
) -> Result<()> {
    let config = pattern.config()?;
    let manifest = SequenceManifest::open(input)?;
    let spots = spot_manifest(&manifest, kind, config)?;
    let doc = to_json(&spot_document(&manifest, kind, config, &spots));
    match out {
        Some(dir) => {
            write_file(&dir.join("fd.csv"), &fd_csv(&spots))?;
            write_file(&dir.join("spot.json"), &doc)
        }
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

/// A spot document reduced to what evaluation needs.
struct SpotRecord {
    method: String,
    sequence_id: String,
    apex_frame: usize,
    flat: bool,
    per_plane: BTreeMap<PlaneId, usize>,
}

fn parse_spot(value: &Value, origin: &Path) -> Result<SpotRecord> {
    let bad =
        |what: &str| Error::Invalid(format!("{}: spot result lacks {what}", origin.display()));
    let text = |key: &str| {
        value[key]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| bad(key))
    };
    let mut per_plane = BTreeMap::new();
    if let Some(scopes) = value["scopes"].as_object() {
        for (name, s) in scopes.iter().filter(|(n, _)| *n != "all") {
            let plane: PlaneId = name.parse().map_err(|_| bad("valid scope names"))?;
            let apex = s["apex_frame"]
                .as_u64()
                .ok_or_else(|| bad("per-scope apex frames"))?;
            per_plane.insert(plane, apex as usize);
        }
    }
    Ok(SpotRecord {
        method: text("method")?,
        sequence_id: text("sequence_id")?,
        apex_frame: value["apex_frame"]
            .as_u64()
            .ok_or_else(|| bad("apex_frame"))? as usize,
        flat: value["flat"].as_bool().unwrap_or(false),
        per_plane,
    })
}

/// Reads spot results from files holding one document or an array of them,
/// and from directories of such files (`*.json`, sorted by name).
fn read_spots(paths: &[PathBuf]) -> Result<Vec<SpotRecord>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(io_err(path))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    let mut records = Vec::new();
    for file in files {
        let text = fs::read_to_string(&file).map_err(io_err(&file))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Invalid(format!("{}: {e}", file.display())))?;
        match &value {
            Value::Array(items) => {
                for item in items {
                    records.push(parse_spot(item, &file)?);
                }
            }
            _ => records.push(parse_spot(&value, &file)?),
        }
    }
    Ok(records)
}

fn outcome(
    manifest: &SequenceManifest,
    apex_frame: usize,
    flat: bool,
    per_plane: BTreeMap<PlaneId, usize>,
) -> Result<SampleOutcome> {
    let truth = manifest.ground_truth.ok_or_else(|| {
        Error::Invalid(format!(
            "corpus sequence `{}` has no ground-truth apex",
            manifest.sequence_id
        ))
    })?;
    Ok(SampleOutcome {
        sequence_id: manifest.sequence_id.clone(),
        spotted_apex: apex_frame,
        truth_apex: truth.apex,
        flat,
        per_plane: Some(per_plane),
    })
}

fn eval(
    corpus: &Path,
    spot_paths: &[PathBuf],
    pattern: &PatternArgs,
    kinds: &[DescriptorKind],
    out: Option<&Path>,
) -> Result<()> {
    let manifests = load_corpus(corpus)?;
    if manifests.is_empty() {
        return Err(Error::Invalid(format!(
            "{}: corpus is empty",
            corpus.display()
        )));
    }
    let mut by_method: BTreeMap<String, Vec<SampleOutcome>> = BTreeMap::new();
    let mut order = Vec::new();
    if spot_paths.is_empty() {
        let config = pattern.config()?;
        let kinds = if kinds.is_empty() {
            &[DescriptorKind::SipL][..]
        } else {
            kinds
        };
        for &kind in kinds {
            let mut outcomes = Vec::with_capacity(manifests.len());
            for m in &manifests {
                let spots = spot_manifest(m, kind, config)?;
                let planes = spots
                    .planes
                    .iter()
                    .map(|(p, s)| (*p, s.apex_frame))
                    .collect();
                outcomes.push(outcome(m, spots.all.apex_frame, spots.all.flat, planes)?);
            }
            order.push(kind.label());
            by_method.insert(kind.label(), outcomes);
        }
    } else {
        let mut records: BTreeMap<(String, String), SpotRecord> = BTreeMap::new();
        for r in read_spots(spot_paths)? {
            if !order.contains(&r.method) {
                order.push(r.method.clone());
            }
            records.insert((r.method.clone(), r.sequence_id.clone()), r);
        }
        for method in &order {
            let mut outcomes = Vec::with_capacity(manifests.len());
            for m in &manifests {
                let r = records
                    .remove(&(method.clone(), m.sequence_id.clone()))
                    .ok_or_else(|| {
                        Error::Invalid(format!(
                            "no {method} spot result for sequence `{}`",
                            m.sequence_id
                        ))
                    })?;
                outcomes.push(outcome(m, r.apex_frame, r.flat, r.per_plane)?);
            }
            by_method.insert(method.clone(), outcomes);
        }
    }

    let reports: Vec<EvalReport> = order
        .iter()
        .map(|m| build_report(&by_method[m], m))
        .collect::<Result<_>>()?;
    let comparisons: Vec<_> = reports.iter().filter_map(compare_with_quoted).collect();
    let table = render_table(&reports);
    print!("{table}");
    if let Some(dir) = out {
        let doc = json!({ "reports": reports, "comparisons": comparisons });
        write_file(&dir.join("report.json"), &to_json(&doc))?;
        write_file(&dir.join("table.txt"), &table)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn synth(
    out: &Path,
    seed: u64,
    count: usize,
    (width, height): (usize, usize),
    apex: Option<usize>,
    depth: Option<usize>,
    amplitude: f64,
    noise: f64,
    envelope: Envelope,
) -> Result<()> {
    if count == 0 {
        return Err(Error::Invalid("--count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(count);
    for i in 0..count {
        let mut spec = match apex {
            Some(k) => {
                let mut s = SynthSpec::centered(
                    width,
                    height,
                    depth.unwrap_or(2 * k),
                    k,
                    amplitude,
                    seed.wrapping_add(i as u64),
                );
                s.envelope = envelope;
                s
            }
            None => random_spec(&mut rng, (width, height), amplitude, envelope),
        };
        spec.noise = noise;
        spec.validate()?;
        specs.push(spec);
    }

    let mut entries = Vec::with_capacity(count);
    for (i, spec) in specs.iter().enumerate() {
        let (volume, truth) = generate_sequence::<f64>(spec)?;
        let id = format!("synth_{:03}", i + 1);
        let dir = out.join(&id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let digits = volume.depth().to_string().len().max(3);
        let mut frames = Vec::with_capacity(volume.depth());
        for z in 0..volume.depth() {
            let rel = PathBuf::from(&id).join(format!("{:0digits$}.pgm", z + 1));
            write_pgm(&volume, z, &out.join(&rel))?;
            frames.push(rel);
        }
        let entry = ManifestFile {
            sequence_id: id,
            frames,
            onset: Some(truth.onset),
            apex: Some(truth.apex),
            offset: Some(truth.offset),
        };
        write_file(
            &out.join(format!("{}.json", entry.sequence_id)),
            &to_json(&entry),
        )?;
        entries.push(entry);
    }
    write_file(&out.join("manifest.json"), &to_json(&entries))?;
    write_file(&out.join("specs.json"), &to_json(&specs))
}

fn bench(
    dims: (usize, usize, usize),
    repetitions: usize,
    pattern: &PatternArgs,
    kind: DescriptorKind,
    out: Option<&Path>,
) -> Result<()> {
    let result = run_benchmark(
        dims,
        kind,
        pattern.config()?,
        repetitions,
        rayon::current_num_threads(),
    )?;
    emit(out, "bench.json", &to_json(&result))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(usize::from(n))
            .build_global()
            .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    match cli.command {
        Command::DumpGeometry { pattern, out } => dump_geometry(&pattern, out.as_deref()),
        Command::Extract {
            input,
            pattern,
            kind,
            out,
        } => extract(&input.input, &pattern, kind, out.as_deref()),
        Command::Spot {
            input,
            pattern,
            kind,
            out,
        } => spot(&input.input, &pattern, kind, out.as_deref()),
        Command::Eval {
            corpus,
            spots,
            pattern,
            kind,
            out,
        } => eval(&corpus, &spots, &pattern, &kind, out.as_deref()),
        Command::Synth {
            out,
            seed,
            count,
            width,
            height,
            apex,
            depth,
            amplitude,
            noise,
            envelope,
        } => synth(
            &out,
            seed,
            count,
            (width, height),
            apex,
            depth,
            amplitude,
            noise,
            envelope.into(),
        ),
        Command::Bench {
            width,
            height,
            depth,
            repetitions,
            pattern,
            kind,
            out,
        } => bench(
            (width, height, depth),
            repetitions,
            &pattern,
            kind,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("apex-lbp: {msg}");
            ExitCode::FAILURE
        }
    }
}
