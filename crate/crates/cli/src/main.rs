use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use excursion_core::complex::{betti, build_complex, connected_components};
use excursion_core::field::{sample_field, CovarianceModel};
use excursion_core::montecarlo::{
    orthant_probability_shifted, read_report, regime_sweep, run_suite, write_report, ExperimentConfig, LevelMode,
    NuSchedule, Suite, SuiteOptions,
};
use excursion_core::patterns::{compute_counts, verify_sandwich, CatalogStore, Catalogs, Family, SearchCaps};
use excursion_core::theory::{
    lambda, level_schedule, make_params, savage_bracket, structured_det, structured_eig, structured_pd,
    transition_threshold, StructuredMatrixSpec,
};

/// Exit status for a failed verdict, as opposed to a tool error.
const VERDICT_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "excursion", version, about = "Betti numbers of Gaussian excursion sets on the integer lattice")]
struct Cli {
    /// Worker threads for replicate loops; outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for artifacts and the manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone)]
struct ModelArgs {
    /// Lattice dimension.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// `iid` or `geometric`; other families via --model-file.
    #[arg(long, default_value = "iid")]
    model: String,
    #[arg(long, default_value_t = 0.3)]
    rho1: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// JSON covariance model; overrides the flags above.
    #[arg(long)]
    model_file: Option<PathBuf>,
}

impl ModelArgs {
    fn build(&self) -> Result<CovarianceModel> {
        if let Some(path) = &self.model_file {
            return Ok(CovarianceModel::from_json(&read(path)?)?);
        }
        match self.model.as_str() {
            "iid" => Ok(CovarianceModel::iid(self.d)),
            "geometric" => Ok(CovarianceModel::geometric(self.d, self.rho1, self.theta)?),
            other => bail!("model: unknown family `{other}`; use iid, geometric or --model-file"),
        }
    }
}

#[derive(Args, Serialize)]
struct FieldArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Window radius; the field covers `[-n-1, n+1]^d`.
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Write one field sample as CSV.
    Sample(FieldArgs),
    /// Betti numbers of the excursion complex of one sample.
    Betti {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        u: f64,
        #[arg(long, default_value_t = 2)]
        prime: u32,
    },
    /// Approximator counts and the sandwich ledger for one sample.
    Counts {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        u: f64,
        /// Degree; all degrees below d when absent.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Constants, λ, threshold and level schedule.
    Theory(TheoryArgs),
    /// Savage bracket for a covariance matrix and level vector.
    Tailbound(TailboundArgs),
    /// Eigenvalues, determinant or definiteness of a structured matrix.
    Matrix(MatrixArgs),
    /// Build and cache pattern catalogs.
    Catalog(CatalogArgs),
    /// Run property suites; exit 2 when a verdict fails.
    Verify(VerifyArgs),
    /// Regime sweep over level schedules.
    Sweep(SweepArgs),
    /// Recompute summaries from persisted rows.
    Report {
        /// Directory holding config.json and rows.csv.
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args, Serialize)]
struct TheoryArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    rho1: f64,
    #[arg(long, default_value_t = 0.0)]
    rho2: f64,
    #[arg(long, default_value_t = 0.0)]
    rho3: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
}

#[derive(Args, Serialize)]
struct TailboundArgs {
    /// Row-major JSON matrix, e.g. `[[1,0.5],[0.5,1]]`.
    #[arg(long)]
    matrix: String,
    /// Comma-separated levels, one per row.
    #[arg(long, value_delimiter = ',')]
    u: Vec<f64>,
    /// Also estimate the probability by shifted Monte Carlo.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct MatrixArgs {
    /// Wm, Wm1m2, Q or QHat.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    mu_prime: Option<f64>,
    /// JSON matrix description; overrides the flags above.
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// eig, det or pd.
    #[arg(long, default_value = "eig")]
    op: String,
}

#[derive(Args, Serialize)]
struct CatalogArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    /// n, p or both.
    #[arg(long, default_value = "both")]
    family: String,
    /// Cache directory; defaults to EXCURSION_CACHE_DIR.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// sandwich, witness, catalog, mills or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Comma-separated levels.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    u: Vec<f64>,
    #[arg(long = "R", default_value_t = 100)]
    replicates: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = SearchCaps::default().expansions)]
    expansion_cap: u64,
    #[arg(long, default_value_t = SearchCaps::default().weight_work)]
    weight_cap: u64,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    /// JSON experiment config, or an array of them; overrides the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    n: Vec<usize>,
    /// Comma-separated schedules: `const:<nu>`, `plus:<c>`, `minus:<c>`.
    #[arg(long, value_delimiter = ',', default_value = "plus:0.5,minus:0.25")]
    schedules: Vec<String>,
    #[arg(long = "R", default_value_t = 200)]
    replicates: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Also compute N, L, D and the sandwich checks.
    #[arg(long)]
    approximators: bool,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn hash(value: &Value) -> String {
    let digest = Sha256::digest(value.to_string().as_bytes());
    hex::encode(&digest[..8])
}

fn manifest(command: &str, config: &Value, seed: Option<u64>) -> Value {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    json!({
        "tool": "excursion",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": hash(config),
        "config": config,
        "seed": seed,
        "created_unix": created,
    })
}

/// Print a line; a closed stdout is not an error.
fn say(line: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Write `body` as `<name>` and the manifest under `--out`, or print `body`
/// with the manifest attached.
fn emit(out: Option<&Path>, name: &str, command: &str, config: &Value, seed: Option<u64>, body: Value) -> Result<()> {
    let m = manifest(command, config, seed);
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_json(&dir.join(name), &body)?;
            write_json(&dir.join("manifest.json"), &m)?;
        }
        None => {
            let mut body = body;
            if let Value::Object(map) = &mut body {
                map.insert("manifest".into(), m);
            } else {
                body = json!({ "result": body, "manifest": m });
            }
            say(&serde_json::to_string_pretty(&body)?)?;
        }
    }
    Ok(())
}

fn structured_spec(a: &MatrixArgs) -> Result<StructuredMatrixSpec> {
    if let Some(path) = &a.spec_file {
        return serde_json::from_str(&read(path)?).context("matrix description");
    }
    let kind = a.kind.as_deref().ok_or_else(|| anyhow!("kind: required without --spec-file"))?;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| anyhow!("{name}: required for kind {kind}"));
    let size = |v: Option<usize>, name: &str| v.ok_or_else(|| anyhow!("{name}: required for kind {kind}"));
    Ok(match kind.to_ascii_lowercase().as_str() {
        "wm" => StructuredMatrixSpec::Wm { m: size(a.m, "m")?, rho: need(a.rho, "rho")? },
        "wm1m2" => StructuredMatrixSpec::Wm1m2 {
            m1: size(a.m1, "m1")?,
            m2: size(a.m2, "m2")?,
            rho: need(a.rho, "rho")?,
            mu: need(a.mu, "mu")?,
        },
        "q" => StructuredMatrixSpec::Q {
            m: size(a.m, "m")?,
            m1: size(a.m1, "m1")?,
            m2: size(a.m2, "m2")?,
            rho: need(a.rho, "rho")?,
            mu_prime: need(a.mu_prime, "mu_prime")?,
            mu: need(a.mu, "mu")?,
        },
        "qhat" => StructuredMatrixSpec::QHat { m: size(a.m, "m")?, mu: need(a.mu, "mu")? },
        other => bail!("kind: unknown matrix kind `{other}`; use Wm, Wm1m2, Q or QHat"),
    })
}

fn parse_schedule(s: &str) -> Result<NuSchedule> {
    let (tag, value) = s.split_once(':').ok_or_else(|| anyhow!("schedules: `{s}` is not `<kind>:<value>`"))?;
    let v: f64 = value.parse().with_context(|| format!("schedules: bad number in `{s}`"))?;
    Ok(match tag {
        "const" => NuSchedule::Constant { nu: v },
        "plus" => NuSchedule::PlusLog { c: v },
        "minus" => NuSchedule::MinusLog { c: v },
        _ => bail!("schedules: unknown kind `{tag}`; use const, plus or minus"),
    })
}

fn sweep_configs(a: &SweepArgs) -> Result<Vec<ExperimentConfig>> {
    if let Some(path) = &a.config {
        let text = read(path)?;
        let value: Value = serde_json::from_str(&text).context("config")?;
        let items = match value {
            Value::Array(items) => items,
            v => vec![v],
        };
        return items
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let c: ExperimentConfig = serde_json::from_value(v).with_context(|| format!("config[{i}]"))?;
                c.validate().with_context(|| format!("config[{i}]"))?;
                Ok(c)
            })
            .collect();
    }
    let seed = a.seed.ok_or_else(|| anyhow!("seed: required without --config"))?;
    let model = a.model.build()?;
    a.schedules
        .iter()
        .map(|s| {
            let mut c = ExperimentConfig::new(
                model.clone(),
                a.k.clone(),
                a.n.clone(),
                LevelMode::Schedule { schedule: parse_schedule(s)? },
                a.replicates,
                seed,
            );
            c.approximators = a.approximators;
            c.override_assumptions = true;
            c.validate()?;
            Ok(c)
        })
        .collect()
}

fn run(cli: Cli) -> Result<u8> {
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let out = cli.out.as_deref();
    match cli.command {
        Command::Sample(f) => {
            let sample = sample_field(&f.model.build()?, f.n, f.seed)?;
            let config = serde_json::to_value(&f)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    sample.write_csv(fs::File::create(dir.join("field.csv"))?)?;
                    write_json(&dir.join("manifest.json"), &manifest("sample", &config, Some(f.seed)))?;
                }
                None => {
                    if let Err(e) = sample.write_csv(std::io::stdout().lock()) {
                        if !e.to_string().contains("Broken pipe") {
                            return Err(e.into());
                        }
                    }
                }
            }
        }
        Command::Betti { field, u, prime } => {
            let model = field.model.build()?;
            let sample = sample_field(&model, field.n, field.seed)?;
            let complex = build_complex(&sample.excursion_vertices(u), model.d)?;
            let b = betti(&complex, model.d - 1, prime)?;
            let faces: Vec<usize> = (0..=complex.max_dim()).map(|i| complex.num_faces(i)).collect();
            let config = json!({ "field": field, "u": u, "prime": prime });
            let body = json!({
                "betti": b.values,
                "prime": b.prime,
                "faces": faces,
                "components": connected_components(&complex).len(),
            });
            emit(out, "betti.json", "betti", &config, Some(field.seed), body)?;
        }
        Command::Counts { field, u, k } => {
            let model = field.model.build()?;
            let sample = sample_field(&model, field.n, field.seed)?;
            let ks: Vec<usize> = match k {
                Some(k) => vec![k],
                None => (0..model.d).collect(),
            };
            let store = CatalogStore::from_env();
            let mut ledgers = Vec::new();
            let mut all_hold = true;
            for k in ks {
                let complex = build_complex(&sample.excursion_vertices(u), k + 1)?;
                let b = betti(&complex, k, 2)?;
                let cats = Catalogs::load(&store, model.d, k)?;
                let counts = compute_counts(&sample, &complex, u, k, &cats, SearchCaps::default())?;
                let ledger = verify_sandwich(&complex, &b, &counts);
                all_hold &= ledger.all_hold();
                ledgers.push(ledger);
            }
            let config = json!({ "field": field, "u": u, "k": k });
            emit(
                out,
                "counts.json",
                "counts",
                &config,
                Some(field.seed),
                json!({ "all_hold": all_hold, "ledgers": ledgers }),
            )?;
        }
        Command::Theory(a) => {
            let params = make_params(a.d, a.k, a.rho1, a.rho2, a.rho3)?;
            let mut body = json!({ "params": params, "invariants_hold": params.invariants_hold() });
            if let Some(n) = a.n {
                let nu = a.nu.unwrap_or(0.0);
                body["n"] = json!(n);
                body["nu"] = json!(nu);
                body["threshold"] = json!(transition_threshold(&params, n)?);
                let u_n = level_schedule(&params, n, nu)?;
                body["u"] = json!(u_n);
                body["lambda_at_u"] = json!(lambda(&params, n, u_n)?);
            }
            if let (Some(u), Some(n)) = (a.u, a.n) {
                body["lambda_at_given_u"] = json!(lambda(&params, n, u)?);
            }
            emit(out, "theory.json", "theory", &serde_json::to_value(&a)?, None, body)?;
        }
        Command::Tailbound(a) => {
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(&a.matrix).context("matrix: expected a JSON array of rows")?;
            let dim = rows.len();
            if rows.iter().any(|r| r.len() != dim) {
                bail!(
                    "matrix: expected a square array, got {dim} rows of lengths {:?}",
                    rows.iter().map(Vec::len).collect::<Vec<_>>()
                );
            }
            let m = DMatrix::from_row_iterator(dim, dim, rows.into_iter().flatten());
            let bracket = savage_bracket(&m, &a.u)?;
            let mut body = json!({ "bracket": bracket });
            if let Some(samples) = a.samples {
                body["monte_carlo"] = json!(orthant_probability_shifted(&m, &a.u, samples, a.seed)?);
            }
            emit(out, "tailbound.json", "tailbound", &serde_json::to_value(&a)?, Some(a.seed), body)?;
        }
        Command::Matrix(a) => {
            let spec = structured_spec(&a)?;
            let result = match a.op.as_str() {
                "eig" => serde_json::to_value(structured_eig(&spec)?)?,
                "det" => json!(structured_det(&spec)?),
                "pd" => serde_json::to_value(structured_pd(&spec)?)?,
                other => bail!("op: unknown operation `{other}`; use eig, det or pd"),
            };
            let body = json!({ "spec": spec, "op": a.op, "result": result });
            emit(out, "matrix.json", "matrix", &serde_json::to_value(&a)?, None, body)?;
        }
        Command::Catalog(a) => {
            let store = match &a.cache_dir {
                Some(dir) => CatalogStore::at(dir),
                None => CatalogStore::from_env(),
            };
            let families = match a.family.as_str() {
                "n" => vec![Family::N],
                "p" => vec![Family::P],
                "both" => vec![Family::N, Family::P],
                other => bail!("family: unknown family `{other}`; use n, p or both"),
            };
            let mut cats = Vec::new();
            for family in families {
                let c = store.load_or_build(a.d, a.k, family)?;
                cats.push(json!({
                    "family": format!("{family:?}"),
                    "enumeration": c.enumeration,
                    "patterns": c.patterns.len(),
                    "c_beta_1": c.c_beta_1,
                    "fingerprint": c.fingerprint,
                }));
            }
            emit(out, "catalog.json", "catalog", &serde_json::to_value(&a)?, None, json!({ "catalogs": cats }))?;
        }
        Command::Verify(a) => {
            let opts = SuiteOptions {
                model: a.model.build()?,
                n: a.n,
                levels: a.u.clone(),
                replicates: a.replicates,
                seed: a.seed,
                caps: SearchCaps { expansions: a.expansion_cap, weight_work: a.weight_cap },
            };
            let mut passed = true;
            let mut outcomes = Vec::new();
            for suite in Suite::parse(&a.suite)? {
                let o = run_suite(suite, &opts, workers)?;
                for line in &o.lines {
                    say(line)?;
                }
                if let Some(dir) = out {
                    for (report, u) in o.reports.iter().zip(&opts.levels) {
                        write_report(report, &dir.join(format!("{suite:?}").to_lowercase()).join(format!("u{u}")))?;
                    }
                }
                passed &= o.passed;
                outcomes.push(o);
            }
            if let Some(dir) = out {
                fs::create_dir_all(dir)?;
                write_json(&dir.join("verdicts.json"), &json!({ "passed": passed, "suites": outcomes }))?;
                write_json(&dir.join("manifest.json"), &manifest("verify", &serde_json::to_value(&a)?, Some(a.seed)))?;
            }
            say(if passed { "verify: all verdicts pass" } else { "verify: some verdicts fail" })?;
            if !passed {
                return Ok(VERDICT_FAILED);
            }
        }
        Command::Sweep(a) => {
            let configs = sweep_configs(&a)?;
            let table = regime_sweep(&configs, workers)?;
            let config = serde_json::to_value(&configs)?;
            let seed = configs.first().map(|c| c.seed);
            match out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
                    for row in &table.rows {
                        w.serialize(row)?;
                    }
                    w.flush()?;
                    write_json(&dir.join("trends.json"), &table.trends)?;
                    for (i, report) in table.reports.iter().enumerate() {
                        write_report(report, &dir.join(format!("run-{i}")))?;
                    }
                    write_json(&dir.join("manifest.json"), &manifest("sweep", &config, seed))?;
                }
                None => emit(None, "", "sweep", &config, seed, serde_json::to_value(&table)?)?,
            }
        }
        Command::Report { dir } => {
            let report = read_report(&dir)?;
            write_report(&report, &dir)?;
            let config = serde_json::to_value(&report.config)?;
            emit(
                out,
                "summary.json",
                "report",
                &config,
                Some(report.config.seed),
                json!({ "summaries": report.summaries }),
            )?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
