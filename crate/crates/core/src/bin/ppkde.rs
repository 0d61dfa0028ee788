use clap::{Args, Parser, Subcommand, ValueEnum};
use ppkde::attacks::{
    attack_recover_tuple, validate_no_signal, write_attack_report, AttackConfig, AttackReportRow,
    KnnOracle, OracleMode, ProbeRegion, SearchStrategy,
};
use ppkde::fixedpoint::{FixedPointConfig, FixedPointParams};
use ppkde::harness::{
    bench, compare, fit_fixed_point, load_csv, scaled_dataset, ComparisonReport, CsvSchema,
    ExperimentConfig, LabelColumn, MinMaxScaler,
};
use ppkde::kde::{kde_classify, DataTuple, Dataset};
use ppkde::math::{fork_rng, seeded_rng};
use ppkde::paillier::{keygen, PublicKey, SecretKey};
use ppkde::protocol::{
    read_frame, submit_tuple, write_frame, EncryptedTuple, Message, ProtocolConfig, Session,
    TransportKind,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::error::Error;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

type Res<T> = Result<T, Box<dyn Error>>;

/// Outsourced Gaussian KDE classification and k-NN attack tooling.
#[derive(Parser)]
#[command(name = "ppkde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Paillier key pair (`<out>.sk`, `<out>.pk`).
    Keygen(KeygenArgs),
    /// Encrypt a CSV dataset into an upload file for the data host.
    Outsource(OutsourceArgs),
    /// Classify a point against an upload file through the full protocol.
    Query(QueryArgs),
    /// Run the distance-learning attack against a k-NN or KDE oracle.
    Attack(AttackArgs),
    /// Compare k-NN and KDE accuracy and agreement on a dataset.
    Compare(CompareArgs),
    /// Time each protocol phase.
    Bench(BenchArgs),
}

#[derive(Args)]
struct KeygenArgs {
    /// Protocol config (TOML); `key_bits` and `seed` are read from it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "ppkde")]
    out: PathBuf,
}

#[derive(Args)]
struct CsvArgs {
    /// Label column: a header name or a zero-based index.
    #[arg(long, default_value = "class")]
    label: String,
    #[arg(long)]
    no_header: bool,
}

impl CsvArgs {
    fn schema(&self) -> CsvSchema {
        CsvSchema {
            has_header: !self.no_header,
            label: match self.label.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(self.label.clone()),
            },
            ..CsvSchema::default()
        }
    }
}

#[derive(Args)]
struct OutsourceArgs {
    /// Protocol config (TOML) with the fixed-point parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Public (or secret) key file.
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "store.bin")]
    out: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Secret key file (the CSP's).
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    store: PathBuf,
    /// Comma-separated raw feature values, scaled like the uploaded data.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, value_enum)]
    transport: Option<TransportArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also classify in plaintext against this CSV and report agreement.
    #[arg(long)]
    check: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
    /// Write every protocol message, length-framed, to this file.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    InProcess,
    Tcp,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModeArg {
    /// 1-NN, or k-NN returning all k labels.
    AllLabels,
    Majority,
    Distance,
    /// The same search against Gaussian KDE.
    Kde,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Binary,
    Linear,
    Restart,
    Auto,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, value_enum, default_value = "all-labels")]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long)]
    no_deletion: bool,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 5)]
    instances: usize,
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV report path; the table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shipped dataset preset: cancer1, cancer2, diabetes, mnist.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 3072)]
    bits: u32,
    /// Random data shape, unless `--data` is given.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
    #[arg(long, default_value_t = 0.25)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// First frame of an upload file.
#[derive(Serialize, Deserialize)]
struct StoreHeader {
    feature_names: Vec<String>,
    class_names: Vec<String>,
    min: Vec<f64>,
    max: Vec<f64>,
    fixed_point: FixedPointConfig,
}

fn protocol_config(path: Option<&Path>) -> Res<Option<ProtocolConfig>> {
    Ok(match path {
        Some(p) => Some(ProtocolConfig::load(p)?),
        None => None,
    })
}

fn read_public_key(path: &Path) -> Res<PublicKey> {
    let bytes = fs::read(path)?;
    Ok(match PublicKey::from_bytes(&bytes) {
        Ok(pk) => pk,
        Err(_) => SecretKey::from_bytes(&bytes)?.public_key().clone(),
    })
}

fn keygen_cmd(a: KeygenArgs) -> Res<()> {
    let cfg = protocol_config(a.config.as_deref())?;
    let bits = a.bits.or(cfg.as_ref().map(|c| c.key_bits)).unwrap_or(3072);
    let seed = a.seed.or(cfg.as_ref().and_then(|c| c.seed));
    let mut rng = match seed {
        Some(s) => seeded_rng(s),
        None => ppkde::math::secure_rng(),
    };
    let (pk, sk) = keygen(bits, &mut rng)?;
    let sk_path = a.out.with_extension("sk");
    let pk_path = a.out.with_extension("pk");
    fs::write(&sk_path, sk.to_bytes())?;
    fs::write(&pk_path, pk.to_bytes())?;
    println!(
        "{bits}-bit key: {} {}",
        sk_path.display(),
        pk_path.display()
    );
    Ok(())
}

fn outsource_cmd(a: OutsourceArgs) -> Res<()> {
    let pk = read_public_key(&a.key)?;
    let cfg = protocol_config(a.config.as_deref())?;
    let table = load_csv(&a.data, &a.csv.schema())?;
    let scaler = MinMaxScaler::fit(&table.rows)?;
    let data = scaler.dataset(&table)?;
    let params = match &cfg {
        Some(c) => {
            let mut fp = c.fixed_point.clone();
            if let Some(s) = a.sigma {
                fp.sigma = s;
            }
            FixedPointParams::new(fp, pk.n())?
        }
        None => fit_fixed_point(
            data.m(),
            data.c(),
            data.len() as u64,
            a.sigma.unwrap_or(0.25),
            None,
            pk.n(),
        )?,
    };
    if params.m() != data.m()
        || params.c() != data.c()
        || (params.config().n_max as usize) < data.len()
    {
        return Err(format!(
            "fixed-point parameters (m={}, c={}, n_max={}) do not fit the data (m={}, c={}, n={})",
            params.m(),
            params.c(),
            params.config().n_max,
            data.m(),
            data.c(),
            data.len()
        )
        .into());
    }
    let seed = a.seed.or(cfg.as_ref().and_then(|c| c.seed));
    let mut rng = match seed {
        Some(s) => seeded_rng(s),
        None => ppkde::math::secure_rng(),
    };
    let header = StoreHeader {
        feature_names: table.feature_names.clone(),
        class_names: table.class_names.clone(),
        min: scaler.min.clone(),
        max: scaler.max.clone(),
        fixed_point: params.config().clone(),
    };
    let mut w = BufWriter::new(fs::File::create(&a.out)?);
    write_frame(&mut w, toml::to_string(&header)?.as_bytes())?;
    for (i, t) in data.tuples().iter().enumerate() {
        let et = submit_tuple(i as u64, t, &pk, &params, &mut rng)?;
        let msg = Message::SubmitTuple {
            owner: et.owner,
            features: et.enc_features,
            class: et.enc_class,
        };
        write_frame(&mut w, &msg.encode(&pk)?)?;
    }
    w.flush()?;
    println!(
        "encrypted {} tuples (m={}, c={}, {} dropped for missing values) -> {}",
        data.len(),
        data.m(),
        data.c(),
        table.dropped_missing,
        a.out.display()
    );
    Ok(())
}

fn read_store(path: &Path, pk: &PublicKey) -> Res<(StoreHeader, Vec<EncryptedTuple>)> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let header: StoreHeader = toml::from_str(std::str::from_utf8(&read_frame(&mut r)?)?)?;
    let mut tuples = Vec::new();
    loop {
        let frame = match read_frame(&mut r) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        };
        match Message::decode(&frame, pk)? {
            Message::SubmitTuple {
                owner,
                features,
                class,
            } => tuples.push(EncryptedTuple {
                owner,
                enc_features: features,
                enc_class: class,
            }),
            other => return Err(format!("unexpected {:?} in upload file", other.kind()).into()),
        }
    }
    Ok((header, tuples))
}

fn parse_point(s: &str) -> Res<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate {v:?}: {e}").into())
        })
        .collect()
}

fn query_cmd(a: QueryArgs) -> Res<()> {
    let sk = SecretKey::from_bytes(&fs::read(&a.key)?)?;
    let pk = sk.public_key().clone();
    let mut cfg = protocol_config(a.config.as_deref())?;
    let (header, tuples) = read_store(&a.store, &pk)?;
    let raw = parse_point(&a.point)?;
    if raw.len() != header.min.len() {
        return Err(format!(
            "point has {} coordinates, data has {}",
            raw.len(),
            header.min.len()
        )
        .into());
    }
    let scaler = MinMaxScaler {
        min: header.min.clone(),
        max: header.max.clone(),
    };
    let q = scaler.transform(&raw);
    let pc = match cfg.take() {
        Some(mut c) => {
            c.fixed_point = header.fixed_point.clone();
            c
        }
        None => ProtocolConfig::new(header.fixed_point.clone()),
    };
    let mut pc = pc;
    if let Some(t) = a.transport {
        pc.transport = match t {
            TransportArg::InProcess => TransportKind::InProcess,
            TransportArg::Tcp => TransportKind::Tcp,
        };
    }
    if a.seed.is_some() {
        pc.seed = a.seed;
    }
    let params = FixedPointParams::new(pc.fixed_point.clone(), pk.n())?;
    let mut rng = pc.rng();
    let mut session = Session::start(sk, params, pc.options(), &mut rng)?;
    let n = tuples.len();
    for t in tuples {
        session.outsource_encrypted(t)?;
    }
    let class = session.query(&q)?;
    let (_, _, transcript) = session.finish()?;
    println!(
        "class {} (index {class}) from {n} encrypted tuples, {} messages, {} bytes",
        header.class_names[class],
        transcript.len(),
        transcript.total_bytes()
    );
    if let Some(path) = &a.transcript {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for e in transcript.entries() {
            write_frame(&mut w, &e.payload)?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.check {
        let table = load_csv(path, &a.csv.schema())?;
        let data = scaler.dataset(&table)?;
        let plain = kde_classify(&data, &q, pc.fixed_point.sigma)?;
        println!(
            "plaintext kde: class {} (index {plain}) {}",
            table.class_names[plain],
            if plain == class { "match" } else { "MISMATCH" }
        );
        if plain != class {
            return Err("encrypted and plaintext classes differ".into());
        }
    }
    Ok(())
}

fn attack_cmd(a: AttackArgs) -> Res<()> {
    let strategy = match a.strategy {
        StrategyArg::Binary => SearchStrategy::Binary,
        StrategyArg::Linear => SearchStrategy::Linear,
        StrategyArg::Restart => SearchStrategy::Restart,
        StrategyArg::Auto => SearchStrategy::Auto,
    };
    let mut rng = seeded_rng(a.seed);
    let mut rows = Vec::new();
    if a.mode == ModeArg::Kde {
        let mut leaked = 0;
        for i in 0..a.instances {
            let q: Vec<f64> = (0..a.dim).map(|_| rng.gen_range(0.2..0.8)).collect();
            let d1 = rng.gen_range(0.02..0.2);
            let background = vec![DataTuple::new(vec![0.98; a.dim], 1 % a.classes)];
            let cfg = AttackConfig {
                seed: a.seed.wrapping_add(i as u64),
                ..AttackConfig::with_epsilon(a.epsilon)
            };
            let r = validate_no_signal(&q, d1, a.sigma, &background, a.classes.max(2), &cfg)?;
            let ok = r.kde_leaks_nothing(4.0 * a.epsilon);
            if !ok {
                leaked += 1;
            }
            println!(
                "instance {i}: nn distances {:.6} vs {:.6}; kde transcripts equal={} ; knn estimates {:.6} / {:.6} -> {}",
                r.nn_distance_a,
                r.nn_distance_b,
                r.kde_transcripts_equal,
                r.knn_estimate_a,
                r.knn_estimate_b,
                if ok { "no signal" } else { "SIGNAL" }
            );
        }
        println!(
            "kde: {} of {} instances show no signal",
            a.instances - leaked,
            a.instances
        );
        return Ok(());
    }
    let mode = match (a.mode, a.k) {
        (ModeArg::Majority, _) => OracleMode::MajorityOnly,
        (ModeArg::Distance, _) => OracleMode::WithPlaintextDistance,
        _ => OracleMode::ReturnAllLabels,
    };
    for i in 0..a.instances {
        let target: Vec<f64> = (0..a.dim).map(|_| rng.gen()).collect();
        let label = rng.gen_range(0..a.classes);
        let hidden = Dataset::from_tuples(
            a.dim,
            a.classes,
            vec![DataTuple::new(target.clone(), label)],
        )?;
        let mut oracle = KnnOracle::new(hidden, mode, a.k, !a.no_deletion)?;
        let cfg = AttackConfig {
            strategy,
            seed: a.seed.wrapping_add(i as u64),
            ..AttackConfig::with_epsilon(a.epsilon)
        };
        let (error, queries, inserts, ok) =
            match attack_recover_tuple(&mut oracle, &ProbeRegion::unit_cube(a.dim), &cfg) {
                Ok(r) => {
                    let e = r.error_against(&target);
                    (e, r.queries_used, r.inserts_used, e < 10.0 * a.epsilon)
                }
                Err(e) => {
                    eprintln!("instance {i}: {e}");
                    (f64::NAN, 0, 0, false)
                }
            };
        rows.push(AttackReportRow {
            mode,
            k: a.k,
            deletion: !a.no_deletion,
            strategy,
            dim: a.dim,
            epsilon: a.epsilon,
            error,
            queries,
            inserts,
            success: ok,
        });
    }
    println!(
        "{:<24} {:>2} {:>3} {:>12} {:>8} {:>8}  ok",
        "mode", "k", "dim", "error", "queries", "inserts"
    );
    for r in &rows {
        println!(
            "{:<24} {:>2} {:>3} {:>12.3e} {:>8} {:>8}  {}",
            format!("{:?}", r.mode),
            r.k,
            r.dim,
            r.error,
            r.queries,
            r.inserts,
            r.success
        );
    }
    if let Some(path) = &a.out {
        write_attack_report(&rows, fs::File::create(path)?)?;
    }
    let failed = rows.iter().filter(|r| !r.success).count();
    if failed > 0 {
        return Err(format!("{failed} of {} attacks failed", rows.len()).into());
    }
    Ok(())
}

fn compare_cmd(a: CompareArgs) -> Res<()> {
    let mut configs = match (&a.config, &a.dataset) {
        (Some(p), _) => vec![ExperimentConfig::load(p)?],
        (None, Some(name)) if name == "all" => ["cancer1", "cancer2", "diabetes", "mnist"]
            .iter()
            .map(|n| ExperimentConfig::preset(n, &a.data_dir, a.seed.unwrap_or(7)))
            .collect::<Result<_, _>>()?,
        (None, Some(name)) => vec![ExperimentConfig::preset(
            name,
            &a.data_dir,
            a.seed.unwrap_or(7),
        )?],
        (None, None) => return Err("give --config or --dataset".into()),
    };
    let mut reports = Vec::new();
    for cfg in &mut configs {
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
        if a.k.is_some() {
            cfg.k = a.k;
        }
        if a.sigma.is_some() {
            cfg.sigma = a.sigma;
        }
        if let Some(t) = a.test_fraction {
            cfg.test_fraction = t;
        }
        if let Some(f) = a.folds {
            cfg.folds = f;
        }
        if a.out.is_some() {
            cfg.output = a.out.clone();
        }
        let r = compare(cfg)?;
        if let Some(p) = &r.protocol {
            eprintln!(
                "{}: protocol matched {}/{} queries, {:.2} s/query",
                r.dataset, p.matches, p.queries, p.seconds_per_query
            );
        }
        reports.push(r);
    }
    print!("{}", ComparisonReport::table(&reports));
    if let Some(path) = configs.first().and_then(|c| c.output.clone()) {
        ComparisonReport::write_csv(&reports, fs::File::create(path)?, true)?;
    }
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Res<()> {
    let mut rng = seeded_rng(a.seed);
    let data = match &a.data {
        Some(p) => scaled_dataset(&load_csv(p, &a.csv.schema())?)?,
        None => {
            let t = (0..a.n)
                .map(|_| {
                    DataTuple::new((0..a.m).map(|_| rng.gen()).collect(), rng.gen_range(0..a.c))
                })
                .collect();
            Dataset::from_tuples(a.m, a.c, t)?
        }
    };
    let q: Vec<f64> = (0..data.m()).map(|_| fork_rng(&mut rng).gen()).collect();
    let r = bench(&data, &q, a.sigma, a.bits, a.seed)?;
    print!("{}", r.table());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen(a) => keygen_cmd(a),
        Command::Outsource(a) => outsource_cmd(a),
        Command::Query(a) => query_cmd(a),
        Command::Attack(a) => attack_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
