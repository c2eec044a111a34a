//! `sheetline validate|generate|serve|ingest|print`.
//!
//! Exit codes: 0 success, 1 invalid input (diagnostics on stderr), 2 I/O or
//! other runtime failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use sheetline_core::diagnostic::has_errors;
use sheetline_core::print::print_layout;
use sheetline_core::Diagnostic;

use crate::construct::{plan_batch, read_participants, spec_file_name};
use crate::export::{aggregate, from_csv, WideTable};
use crate::qspec::{check_spec, check_template};
use crate::server::{self, AppState, ServerConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_IO: u8 = 2;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const SVG: &str = "image/svg+xml";

#[derive(Debug, Parser)]
#[command(name = "sheetline", version, about = "Build, serve and collect questionnaires")]
pub struct Cli {
    /// Diagnostics as one JSON object per line instead of text.
    #[arg(long, value_enum, global = true, default_value = "human")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Structured,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a spec (or with --template, a template) file.
    Validate {
        path: PathBuf,
        #[arg(long)]
        template: bool,
    },
    /// Instantiate a template once per participant.
    Generate {
        template: PathBuf,
        /// One participant id per line.
        participants: PathBuf,
        /// Master seed, decimal or 0x-hex.
        #[arg(long, value_parser = parse_seed)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the collection server.
    Serve { config: PathBuf },
    /// Aggregate exported CSV files into one wide table.
    Ingest {
        /// Files or glob patterns.
        patterns: Vec<String>,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render a printable HTML version of a spec.
    Print {
        spec: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Directory SVG assets are resolved against; defaults to the spec's.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("`{s}` is not a decimal or 0x-hex u64"))
}

/// Where a command writes; tests pass buffers.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub format: Format,
}

impl Io<'_> {
    fn diagnostics(&mut self, diags: &[Diagnostic]) {
        for d in diags {
            let _ = match self.format {
                Format::Human => writeln!(self.err, "{d}"),
                Format::Structured => writeln!(self.err, "{}", serde_json::to_string(d).expect("serializable")),
            };
        }
    }

    fn failure(&mut self, code: &str, message: impl std::fmt::Display) {
        let _ = match self.format {
            Format::Human => writeln!(self.err, "error[{code}] {message}"),
            Format::Structured => writeln!(self.err, "{}", json!({ "code": code, "severity": "error", "message": message.to_string() })),
        };
    }

    fn io_failure(&mut self, path: &Path, e: impl std::fmt::Display) -> u8 {
        self.failure("IO_ERROR", format!("{}: {e}", path.display()));
        EXIT_IO
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let mut io = Io { out, err, format: cli.format };
    match cli.command {
        Command::Validate { path, template } => validate(&mut io, &path, template),
        Command::Generate {
            template,
            participants,
            seed,
            out,
        } => generate(&mut io, &template, &participants, seed, &out),
        Command::Serve { config } => serve(&mut io, &config),
        Command::Ingest { patterns, out } => ingest(&mut io, &patterns, out.as_deref()),
        Command::Print { spec, out, assets } => print(&mut io, &spec, &out, assets.as_deref()),
    }
}

pub fn validate(io: &mut Io, path: &Path, template: bool) -> u8 {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return io.io_failure(path, e),
    };
    let diags = if template { check_template(&bytes).1 } else { check_spec(&bytes).1 };
    io.diagnostics(&diags);
    if has_errors(&diags) {
        EXIT_INVALID
    } else {
        EXIT_OK
    }
}

pub fn generate(io: &mut Io, template: &Path, participants: &Path, seed: u64, out: &Path) -> u8 {
    let bytes = match fs::read(template) {
        Ok(b) => b,
        Err(e) => return io.io_failure(template, e),
    };
    let ids = match fs::read_to_string(participants) {
        Ok(t) => read_participants(&t),
        Err(e) => return io.io_failure(participants, e),
    };
    let (t, diags) = check_template(&bytes);
    io.diagnostics(&diags);
    let Some(t) = t else { return EXIT_INVALID };
    let batch = match plan_batch(&t, &ids, seed) {
        Ok(b) => b,
        Err(e) => {
            io.failure(e.code(), &e);
            return EXIT_INVALID;
        }
    };
    if let Err(e) = fs::create_dir_all(out) {
        return io.io_failure(out, e);
    }
    for entry in &batch.entries {
        let path = out.join(spec_file_name(&entry.participant_id));
        if let Err(e) = fs::write(&path, &entry.document) {
            return io.io_failure(&path, e);
        }
    }
    let manifest = out.join(MANIFEST_FILE);
    if let Err(e) = fs::write(&manifest, batch.manifest_csv()) {
        return io.io_failure(&manifest, e);
    }
    let _ = writeln!(io.out, "{} specs, manifest {}", batch.entries.len(), manifest.display());
    EXIT_OK
}

/// Files matched by the patterns, sorted and without repeats. A pattern
/// that is not a valid glob is an error; one that matches nothing is not.
pub fn expand(patterns: &[String]) -> Result<Vec<PathBuf>, String> {
    let mut paths = Vec::new();
    for p in patterns {
        let matches = glob::glob(p).map_err(|e| format!("`{p}`: {e}"))?;
        for m in matches {
            paths.push(m.map_err(|e| e.to_string())?);
        }
    }
    paths.sort();
    paths.dedup();
    Ok(paths)
}

/// The same table the server's `/export.csv` produces for these files.
pub fn ingest_files(paths: &[PathBuf]) -> Result<WideTable, (u8, String)> {
    let mut docs = Vec::new();
    for p in paths {
        let bytes = fs::read(p).map_err(|e| (EXIT_IO, format!("{}: {e}", p.display())))?;
        let doc = from_csv(&bytes).map_err(|e| (EXIT_INVALID, format!("{}: {e}", p.display())))?;
        docs.push(doc);
    }
    aggregate(&docs).map_err(|e| (EXIT_INVALID, e.to_string()))
}

pub fn ingest(io: &mut Io, patterns: &[String], out: Option<&Path>) -> u8 {
    let paths = match expand(patterns) {
        Ok(p) => p,
        Err(e) => {
            io.failure("BAD_PATTERN", e);
            return EXIT_INVALID;
        }
    };
    let table = match ingest_files(&paths) {
        Ok(t) => t,
        Err((code, msg)) => {
            io.failure(if code == EXIT_IO { "IO_ERROR" } else { "INVALID_INPUT" }, msg);
            return code;
        }
    };
    let csv = table.to_csv();
    match out {
        Some(path) => match fs::write(path, csv) {
            Ok(()) => EXIT_OK,
            Err(e) => io.io_failure(path, e),
        },
        None => match io.out.write_all(&csv) {
            Ok(()) => EXIT_OK,
            Err(e) => io.io_failure(Path::new("<stdout>"), e),
        },
    }
}

pub fn print(io: &mut Io, spec_path: &Path, out: &Path, assets: Option<&Path>) -> u8 {
    let bytes = match fs::read(spec_path) {
        Ok(b) => b,
        Err(e) => return io.io_failure(spec_path, e),
    };
    let (spec, diags) = check_spec(&bytes);
    io.diagnostics(&diags);
    let Some(spec) = spec else { return EXIT_INVALID };
    let base = assets.unwrap_or_else(|| spec_path.parent().unwrap_or(Path::new(".")));
    let mut svgs = BTreeMap::new();
    for a in spec.assets.iter().filter(|a| a.media_type == SVG && !a.src.contains("://")) {
        // unreadable assets surface as print warnings
        if let Ok(text) = fs::read_to_string(base.join(&a.src)) {
            svgs.insert(a.asset_id.clone(), text);
        }
    }
    let doc = print_layout(&spec, &svgs);
    io.diagnostics(&doc.warnings);
    if let Err(e) = fs::write(out, &doc.html) {
        return io.io_failure(out, e);
    }
    let _ = writeln!(io.out, "{} pages, {}", doc.pages, out.display());
    EXIT_OK
}

pub fn serve(io: &mut Io, config: &Path) -> u8 {
    let cfg = match ServerConfig::load(config) {
        Ok(c) => c,
        Err(e) => {
            io.failure("CONFIG_ERROR", &e);
            return EXIT_INVALID;
        }
    };
    let state = match AppState::load(cfg) {
        Ok(s) => s,
        Err(e @ server::ServerError::InvalidSpec(..)) => {
            if let server::ServerError::InvalidSpec(_, diags) = &e {
                io.diagnostics(diags);
            }
            io.failure("INVALID_SPEC", &e);
            return EXIT_INVALID;
        }
        Err(e) => {
            io.failure("IO_ERROR", &e);
            return EXIT_IO;
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return io.io_failure(Path::new("<runtime>"), e),
    };
    let result = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(state.config().listen).await?;
        let addr = listener.local_addr()?;
        let _ = writeln!(io.err, "listening on http://{addr}");
        let _ = io.err.flush();
        server::run(listener, state, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => io.io_failure(config, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("42"), Ok(42));
        assert_eq!(parse_seed("0x2A"), Ok(42));
        assert_eq!(parse_seed("0xffffffffffffffff"), Ok(u64::MAX));
        assert!(parse_seed("-1").is_err());
        assert!(parse_seed("0x").is_err());
        assert!(parse_seed("forty").is_err());
    }

    #[test]
    fn global_format_flag() {
        let cli = Cli::try_parse_from(["sheetline", "validate", "a.toml", "--format=structured"]).unwrap();
        assert_eq!(cli.format, Format::Structured);
        let cli = Cli::try_parse_from(["sheetline", "generate", "t", "p", "--seed", "0x10", "--out", "o"]).unwrap();
        assert!(matches!(cli.command, Command::Generate { seed: 16, .. }));
    }
}
