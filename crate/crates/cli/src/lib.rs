//! The `abbe` multi-tool.
//!
//! One binary with subcommands. Invoked through a link named
//! `abbe-<subcommand>` (for example `abbe-keygen`), it behaves as that
//! subcommand alone, which gives the classic one-tool-per-step layout.
//!
//! Exit codes: 0 success, 1 usage error, 2 schema or validation error,
//! 3 not an intended recipient, 4 transport failure.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use abbe_bench::runner::{BenchOptions, DEFAULT_REPS};
use abbe_core::content::{decrypt_stream, encrypt_stream, ContentError};
use abbe_core::formats::{
    load_config, load_header, load_keys, save_curve, save_header, save_keys, FormatError, HeaderFile, KeysFile,
};
use abbe_core::ndn::{
    Consumer, Ed25519Signer, Face, FetchConfig, Forwarder, NdnError, Producer, TrustStore, VerifyingKey,
    DEFAULT_CHUNK_SIZE, PIT_LIFETIME,
};
use abbe_core::{
    decapsulate, encapsulate, generate_curve, keygen, setup, AbbeError, AttributeUniverse, Name, DEFAULT_CURVE_SEED,
};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_AUTHORIZED: i32 = 3;
pub const EXIT_TRANSPORT: i32 = 4;

pub const SUBCOMMANDS: [&str; 7] = ["curvegen", "keygen", "encrypt", "decrypt", "put", "get", "bench"];
const DEFAULT_HEADER_NAME: &str = "/headers/header.json";
const DEFAULT_ADDR: &str = "127.0.0.1:6363";
const DEFAULT_PRODUCER: &str = "publisher";

#[derive(Parser, Debug)]
#[command(name = "abbe", version, about = "Attribute-based broadcast encryption toolset")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search the Barreto-Naehrig family for a 128-bit curve.
    Curvegen(CurvegenArgs),
    /// Create the master key pair and every user's private key.
    Keygen(KeygenArgs),
    /// Wrap a fresh session key under the configured policy; prints the key.
    Encrypt(EncryptArgs),
    /// Recover the session key from a header as one user; prints the key.
    Decrypt(DecryptArgs),
    /// Host a forwarder on TCP and publish one file under a name.
    Put(PutArgs),
    /// Fetch a named object from a forwarder and verify every segment.
    Get(GetArgs),
    /// Run one of the benchmark experiments and write a CSV report.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct CurvegenArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 128)]
    bits: u32,
    /// Hex seed for the parameter search. Omitted: the pinned default curve.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[arg(long = "config", short = 'c')]
    config: PathBuf,
    #[arg(long = "out", short = 'o')]
    out: PathBuf,
    /// Write the master secret here instead of into the keys file.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct EncryptArgs {
    #[arg(long = "config", short = 'c')]
    config: PathBuf,
    #[arg(long = "keys", short = 'k')]
    keys: PathBuf,
    #[arg(long = "out", short = 'o')]
    out: PathBuf,
    /// Also encrypt this file into an `.aes` object.
    #[arg(long = "in", requires = "aes_out")]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    aes_out: Option<PathBuf>,
    /// Name the header is published under; bound into the `.aes` file.
    #[arg(long, default_value = DEFAULT_HEADER_NAME)]
    header_name: String,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct DecryptArgs {
    #[arg(long = "config", short = 'c')]
    config: PathBuf,
    #[arg(long = "keys", short = 'k')]
    keys: PathBuf,
    #[arg(long = "header", short = 'H')]
    header: PathBuf,
    #[arg(long = "user", short = 'u')]
    user: String,
    /// Also decrypt this `.aes` object.
    #[arg(long = "in", requires = "output")]
    input: Option<PathBuf>,
    #[arg(long = "out", requires = "input")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PutArgs {
    name: String,
    file: PathBuf,
    #[arg(long, default_value = DEFAULT_ADDR)]
    listen: String,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
    #[arg(long, default_value = DEFAULT_PRODUCER)]
    producer_id: String,
    /// Serve for this many seconds. Omitted: serve until stdin closes.
    #[arg(long)]
    serve_secs: Option<u64>,
    /// Hex seed for the signing key.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct GetArgs {
    name: String,
    #[arg(long = "out", short = 'o')]
    out: PathBuf,
    #[arg(long, default_value = DEFAULT_ADDR)]
    connect: String,
    /// Hex Ed25519 public key printed by `put`.
    #[arg(long)]
    trust: String,
    #[arg(long, default_value = DEFAULT_PRODUCER)]
    producer_id: String,
    #[arg(long, default_value_t = PIT_LIFETIME.as_millis() as u64)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    experiment: u8,
    #[arg(long)]
    out: PathBuf,
    /// Use the published sweeps and 50/100/500 MiB files.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, default_value = "00")]
    seed: String,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Validation(String),
    NotAuthorized(String),
    Transport(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::NotAuthorized(_) => EXIT_NOT_AUTHORIZED,
            CliError::Transport(_) => EXIT_TRANSPORT,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::NotAuthorized(m) | CliError::Transport(m) => m,
        }
    }
}

fn in_file(path: &Path, e: FormatError) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

impl From<AbbeError> for CliError {
    fn from(e: AbbeError) -> Self {
        match e {
            AbbeError::NotAuthorized => CliError::NotAuthorized(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ContentError> for CliError {
    fn from(e: ContentError) -> Self {
        match e {
            ContentError::Io(e) => CliError::Usage(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

impl From<NdnError> for CliError {
    fn from(e: NdnError) -> Self {
        match e {
            NdnError::SignatureInvalid(_) | NdnError::Inconsistent(_) => CliError::Validation(e.to_string()),
            NdnError::InvalidName(_) | NdnError::InvalidChunkSize(_) | NdnError::TooManySegments(_) => {
                CliError::Usage(e.to_string())
            }
            e => CliError::Transport(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn parse_hex(what: &str, s: &str) -> Result<Vec<u8>, CliError> {
    hex::decode(s.strip_prefix("0x").unwrap_or(s)).map_err(|e| CliError::Usage(format!("{what} is not hex: {e}")))
}

fn parse_name(s: &str) -> Result<Name, CliError> {
    s.parse().map_err(|e| CliError::Usage(format!("bad name {s:?}: {e}")))
}

/// Seeded runs are reproducible per subcommand; otherwise OS entropy.
fn rng_for(purpose: &str, seed: Option<&str>) -> Result<ChaCha20Rng, CliError> {
    Ok(match seed {
        Some(s) => {
            let bytes = parse_hex("--seed", s)?;
            let digest = Sha256::new_with_prefix(b"abbe-cli-seed\0").chain_update(purpose).chain_update([0]).chain_update(bytes);
            ChaCha20Rng::from_seed(digest.finalize().into())
        }
        None => ChaCha20Rng::from_entropy(),
    })
}

/// Writes through a sibling temporary file so a failed run leaves no
/// partial output behind.
fn write_atomically(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let file = File::create(&tmp).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", tmp.display())))?;
    let mut w = BufWriter::new(file);
    let result = f(&mut w).and_then(|()| w.flush().map_err(|e| CliError::Usage(e.to_string())));
    drop(w);
    match result {
        Ok(()) => std::fs::rename(&tmp, path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn curvegen(a: CurvegenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let seed = match &a.seed {
        Some(s) => parse_hex("--seed", s)?,
        None => DEFAULT_CURVE_SEED.to_vec(),
    };
    let curve = generate_curve(a.bits, &seed).map_err(|e| CliError::Validation(e.to_string()))?;
    write(&a.out, &save_curve(&curve))?;
    let _ = writeln!(stdout, "u = {:#x}", curve.u);
    Ok(())
}

fn cmd_keygen(a: KeygenArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(&read(&a.config)?).map_err(|e| in_file(&a.config, e))?;
    let mut rng = rng_for("keygen", a.seed.as_deref())?;
    let universe = AttributeUniverse::new(config.attribute_pool.iter())?;
    let (mpk, msk) = setup(&config.curve, &universe, &config.users, &mut rng)?;
    let user_keys = config.users.iter().map(|u| keygen(&msk, u)).collect::<Result<Vec<_>, _>>()?;
    match &a.split {
        Some(path) => {
            write(path, &save_keys(&KeysFile { mpk: mpk.clone(), msk: Some(msk), user_keys: Vec::new() }))?;
            write(&a.out, &save_keys(&KeysFile { mpk, msk: None, user_keys }))?;
        }
        None => write(&a.out, &save_keys(&KeysFile { mpk, msk: Some(msk), user_keys }))?,
    }
    let _ = writeln!(stdout, "{} user keys written to {}", config.users.len(), a.out.display());
    Ok(())
}

fn cmd_encrypt(a: EncryptArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(&read(&a.config)?).map_err(|e| in_file(&a.config, e))?;
    let keys = load_keys(&read(&a.keys)?).map_err(|e| in_file(&a.keys, e))?;
    if keys.mpk.curve != config.curve {
        return Err(CliError::Validation(format!("{} and {} use different curves", a.config.display(), a.keys.display())));
    }
    let header_name = parse_name(&a.header_name)?;
    let mut rng = rng_for("encrypt", a.seed.as_deref())?;
    let (session, header) = encapsulate(&keys.mpk, &config.policy, &mut rng)?;
    if let (Some(input), Some(out)) = (&a.input, &a.aes_out) {
        let reader = BufReader::new(
            File::open(input).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?,
        );
        write_atomically(out, |w| {
            encrypt_stream(&session, &header_name, reader, w, &mut rng)?;
            Ok(())
        })?;
    }
    write(&a.out, &save_header(&HeaderFile::new(header)))?;
    let _ = writeln!(stdout, "{}", session.to_hex());
    Ok(())
}

fn cmd_decrypt(a: DecryptArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(&read(&a.config)?).map_err(|e| in_file(&a.config, e))?;
    let keys = load_keys(&read(&a.keys)?).map_err(|e| in_file(&a.keys, e))?;
    let header = load_header(&read(&a.header)?).map_err(|e| in_file(&a.header, e))?;
    if config.user(&a.user).is_none() {
        return Err(CliError::Usage(format!("user {:?} is not in {}", a.user, a.config.display())));
    }
    let key = keys
        .user_key(&a.user)
        .ok_or_else(|| CliError::Usage(format!("{} holds no key for {:?}", a.keys.display(), a.user)))?;
    let session = decapsulate(&keys.mpk, key, &header.header).map_err(|e| match e {
        AbbeError::NotAuthorized => CliError::NotAuthorized(format!("{} is not an intended recipient", a.user)),
        e => e.into(),
    })?;
    if let (Some(input), Some(out)) = (&a.input, &a.output) {
        let reader = BufReader::new(
            File::open(input).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?,
        );
        write_atomically(out, |w| {
            decrypt_stream(&session, reader, w)?;
            Ok(())
        })?;
    }
    let _ = writeln!(stdout, "{}", session.to_hex());
    Ok(())
}

fn signer_for(producer_id: &str, seed: Option<&str>) -> Result<Ed25519Signer, CliError> {
    let mut rng = rng_for("put-signing-key", seed)?;
    Ok(Ed25519Signer::generate(producer_id, &mut rng))
}

fn cmd_put(a: PutArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), CliError> {
    let name = parse_name(&a.name)?;
    let payload = read(&a.file)?;
    let signer = Arc::new(signer_for(&a.producer_id, a.seed.as_deref())?);
    let public = hex::encode(signer.verifying_key().to_bytes());

    let forwarder = Forwarder::spawn_from_env();
    let listener = forwarder
        .listen_tcp(a.listen.as_str())
        .map_err(|e| CliError::Transport(format!("cannot listen on {}: {e}", a.listen)))?;
    let mut producer = Producer::attach(&forwarder, signer);
    producer.register_prefix(name.clone());
    let segments = producer.publish(&name, payload, a.chunk_size)?;

    let _ = writeln!(stdout, "listening {}", listener.local_addr());
    let _ = writeln!(stdout, "producer {}", a.producer_id);
    let _ = writeln!(stdout, "public-key {public}");
    let _ = writeln!(stdout, "segments {segments}");
    let _ = stdout.flush();

    match a.serve_secs {
        Some(s) => std::thread::sleep(Duration::from_secs(s)),
        None => {
            let _ = std::io::copy(stdin, &mut std::io::sink());
        }
    }
    drop(producer);
    drop(listener);
    Ok(())
}

fn cmd_get(a: GetArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let name = parse_name(&a.name)?;
    let key_bytes: [u8; 32] = parse_hex("--trust", &a.trust)?
        .try_into()
        .map_err(|_| CliError::Usage("--trust must be a 32-byte Ed25519 public key".into()))?;
    let key = VerifyingKey::from_bytes(&key_bytes).map_err(|e| CliError::Usage(format!("--trust: {e}")))?;
    let mut trust = TrustStore::new();
    trust.trust(name.clone(), a.producer_id.clone(), key);
    let face = Face::connect_tcp(a.connect.as_str())
        .map_err(|e| CliError::Transport(format!("cannot connect to {}: {e}", a.connect)))?;
    let config = FetchConfig { timeout: Duration::from_millis(a.timeout_ms), retries: a.retries, ..FetchConfig::default() };
    let mut consumer = Consumer::with_config(face, Arc::new(trust), config);
    let mut digest = Sha256::new();
    let mut total = 0u64;
    write_atomically(&a.out, |w| {
        let mut tee = Tee { out: w, digest: &mut digest, total: &mut total };
        consumer.fetch_into(&name, &mut tee)?;
        Ok(())
    })?;
    let _ = writeln!(stdout, "{total} bytes sha256 {}", hex::encode(digest.finalize()));
    Ok(())
}

struct Tee<'a, W: Write> {
    out: &'a mut W,
    digest: &'a mut Sha256,
    total: &'a mut u64,
}

impl<W: Write> Write for Tee<'_, W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.out.write(buf)?;
        self.digest.update(&buf[..n]);
        *self.total += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

fn cmd_bench(a: BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let opts = BenchOptions {
        experiment: a.experiment,
        out: a.out.clone(),
        paper_scale: a.paper_scale,
        reps: a.reps.max(1),
        seed: parse_hex("--seed", &a.seed)?,
    };
    let _ = writeln!(stderr, "running experiment {} (median of {})", opts.experiment, opts.reps);
    let records = abbe_bench::run(&opts).map_err(|e| match e {
        abbe_bench::BenchError::Ndn(e) => e.into(),
        abbe_bench::BenchError::Plan(m) => CliError::Usage(m),
        e => CliError::Validation(e.to_string()),
    })?;
    let _ = write!(stdout, "{}", abbe_bench::to_markdown(&records));
    Ok(())
}

/// `abbe-keygen args..` becomes `abbe keygen args..`.
fn expand_alias(argv: &[String]) -> Vec<String> {
    let Some(first) = argv.first() else { return vec!["abbe".into()] };
    let base = Path::new(first).file_stem().and_then(|s| s.to_str()).unwrap_or("");
    match base.strip_prefix("abbe-") {
        Some(sub) if SUBCOMMANDS.contains(&sub) => {
            let mut out = vec!["abbe".to_string(), sub.to_string()];
            out.extend(argv[1..].iter().cloned());
            out
        }
        _ => argv.to_vec(),
    }
}

/// Runs one invocation. Diagnostics go to `stderr`; the return value is
/// the process exit code.
pub fn run(argv: &[String], stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(expand_alias(argv)) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Curvegen(a) => curvegen(a, stdout),
        Command::Keygen(a) => cmd_keygen(a, stdout),
        Command::Encrypt(a) => cmd_encrypt(a, stdout),
        Command::Decrypt(a) => cmd_decrypt(a, stdout),
        Command::Put(a) => cmd_put(a, stdin, stdout),
        Command::Get(a) => cmd_get(a, stdout),
        Command::Bench(a) => cmd_bench(a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "abbe: {}", e.message());
            e.code()
        }
    }
}
