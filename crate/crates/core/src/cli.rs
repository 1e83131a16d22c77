//! Command line front end. The `symdist` binary is a thin wrapper around
//! [`run`].
//!
//! Exit codes: 0 success, 2 validation or range error, 3 audit failure,
//! 64 usage error, 1 anything else (I/O, parse, configuration).

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::codec::ElementSchema;
use crate::diagnosis::ListDistanceParams;
use crate::error::{Error, ErrorKind, Result};
use crate::kb::{BundleFiles, CaseInput, RawSymptom};
use crate::metric::RelationTableSet;
use crate::ontology::BodyOntology;
use crate::service::{self, ServiceConfig};
use crate::sim::{self, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "symdist", version, about = "Symptom encoding, symptom distances and nearest-distance diagnosis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pack element values into a characteristic value.
    Encode {
        #[arg(long)]
        schema: PathBuf,
        /// Comma separated element values, e.g. 100,002,3,4
        #[arg(long)]
        values: String,
    },
    /// Split a characteristic value into element values.
    Decode {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        code: String,
    },
    /// Distance between two symptoms (codes or comma separated values).
    Distance {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Audit a bundle's relation tables and disease records.
    Audit {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Rank the bundle's diseases against a patient case.
    Diagnose {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        case: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Generate a synthetic knowledge base and cases, and measure accuracy.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 64 * 1024)]
        max_body_bytes: usize,
        #[arg(long, default_value_t = 256)]
        max_symptoms: usize,
        #[arg(long, env = "SYMDIST_ADMIN_TOKEN")]
        admin_token: Option<String>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Validation | ErrorKind::Range => EXIT_VALIDATION,
        ErrorKind::Audit => EXIT_AUDIT,
        _ => EXIT_FAILURE,
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn raw_symptom(text: &str) -> RawSymptom {
    if text.contains(',') {
        RawSymptom::Values(
            text.split(',')
                .map(|v| crate::kb::RawValue::Text(v.trim().to_string()))
                .collect(),
        )
    } else {
        RawSymptom::Text(text.trim().to_string())
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stdout>".into(),
        source: e,
    }
}

/// Parse `args` (including the program name) and execute. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error [{:?}]: {e}", e.kind());
            if let Error::Audit { report: Some(r), .. } = &e {
                for v in r.blocking() {
                    let _ = writeln!(err, "  {:?} element {} witness {:?}: {}", v.kind, v.element_index, v.witness, v.detail);
                }
            }
            exit_code(&e)
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Encode { schema, values } => {
            let schema = ElementSchema::from_json(&read_text(&schema)?)?;
            let symptom = schema.parse_values(&values)?;
            let code = schema.encode(&symptom)?;
            writeln!(out, "{}", schema.render(code)).map_err(io_err)?;
        }
        Command::Decode { schema, code } => {
            let schema = ElementSchema::from_json(&read_text(&schema)?)?;
            let symptom = schema.decode(schema.parse_code(&code)?)?;
            writeln!(out, "{}", schema.format_values(&symptom)).map_err(io_err)?;
        }
        Command::Distance { bundle, a, b, format } => {
            let kb = crate::kb::KnowledgeBase::load(bundle)?;
            let report = service::distance_between(&kb, &raw_symptom(&a), &raw_symptom(&b))?;
            match format {
                Format::Json => write!(out, "{}", serde_json::to_string_pretty(&report).expect("serializes") + "\n"),
                _ => writeln!(out, "{}", report.distance),
            }
            .map_err(io_err)?;
        }
        Command::Audit { bundle, format } => return audit(&bundle, format, out),
        Command::Diagnose {
            bundle,
            case,
            k,
            lambda,
            format,
        } => {
            let kb = crate::kb::KnowledgeBase::load(bundle)?;
            let input = CaseInput::from_json(&read_text(&case)?)?;
            let ranking = service::diagnose_input(&kb, &input, &ListDistanceParams { lambda, k })?;
            match format {
                Format::Json => write!(out, "{}", ranking.to_json()),
                _ => write!(out, "{}", ranking.to_table()),
            }
            .map_err(io_err)?;
        }
        Command::Simulate { config, out: dir } => {
            let cfg: SimConfig =
                serde_json::from_str(&read_text(&config)?).map_err(|e| Error::format(config.display().to_string(), e))?;
            let report = sim::simulate(&cfg, &dir)?;
            writeln!(
                out,
                "seed {} cases {} top1 {:.4} top3 {:.4} top5 {:.4} -> {}",
                cfg.rng_seed,
                report.n_cases,
                report.top1,
                report.top3,
                report.top5,
                dir.display()
            )
            .map_err(io_err)?;
        }
        Command::Serve {
            bundle,
            bind,
            k,
            lambda,
            max_body_bytes,
            max_symptoms,
            admin_token,
        } => {
            let config = ServiceConfig {
                bind,
                bundle_dir: bundle,
                params: ListDistanceParams { lambda, k },
                max_body_bytes,
                max_symptoms,
                admin_token,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|source| Error::Io {
                path: "tokio runtime".into(),
                source,
            })?;
            runtime.block_on(service::serve(config))?;
        }
    }
    Ok(EXIT_OK)
}

fn audit(bundle: &Path, format: Format, out: &mut dyn Write) -> Result<i32> {
    let files = BundleFiles::read_dir(bundle)?;
    let schema = ElementSchema::new(files.schema.clone())?;
    let ontology = BodyOntology::new(files.ontology.clone())?;
    let relations = RelationTableSet::build(files.relations.clone(), &schema, &ontology)?;
    let report = relations.audit();
    match format {
        Format::Json => write!(out, "{}", serde_json::to_string_pretty(&report).expect("serializes") + "\n"),
        _ => (|| {
            for v in &report.violations {
                writeln!(
                    out,
                    "{} {:?} element {} witness {:?} distances {:?}: {}",
                    if v.blocking { "ERROR" } else { "WARN " },
                    v.kind,
                    v.element_index,
                    v.witness,
                    v.distances,
                    v.detail
                )?;
            }
            writeln!(
                out,
                "{} violation(s), {} blocking",
                report.violations.len(),
                report.blocking().count()
            )
        })(),
    }
    .map_err(io_err)?;
    if report.has_blocking() {
        return Ok(EXIT_AUDIT);
    }
    // tables are fine; surface disease-level problems too
    files.build()?;
    Ok(EXIT_OK)
}
