//! The `domim-client` command set.
//!
//! Exit codes: 0 success, 1 usage, 2 network, 3 not found, 4 data or parse
//! error, 5 server error. Command results print on standard output;
//! network and usage diagnostics go to the error stream.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::dicom::{self, Element};
use crate::server::{ExecuteOp, StatusText, QUERY_BY_ID};
use crate::wire::{PatientInfo, INFO_FIELD_NAMES};

use super::{ClientConfig, ClientError, Connection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NETWORK: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_SERVER: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "domim-client",
    version,
    about = "Client for the medical imaging server",
    disable_help_subcommand = true
)]
struct Cli {
    /// Server host name or address
    #[arg(long, global = true, env = "DOMIM_HOST", default_value = "127.0.0.1")]
    host: String,

    /// Server TCP port
    #[arg(long, global = true, env = "DOMIM_PORT", default_value_t = crate::server::DEFAULT_PORT)]
    port: u16,

    /// Per-request deadline in milliseconds
    #[arg(long = "timeout-ms", global = true, default_value_t = 10_000,
          value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Insert a new patient record
    AddPatient(PatientFields),
    /// Print a patient's record and attached files
    GetPatient {
        #[arg(long)]
        id: String,
    },
    /// Stream a local file to the server and attach it to a patient
    UploadImage {
        #[arg(long)]
        id: String,
        /// Local file to upload
        #[arg(long)]
        file: PathBuf,
        /// Logical name on the server (default: base name of the file)
        #[arg(long)]
        name: Option<String>,
    },
    /// Download a stored file by its logical name
    DownloadImage {
        #[arg(long)]
        name: String,
        /// Destination path
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a local DICOM file and write one frame as binary PGM
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frame index
        #[arg(long, default_value_t = 0)]
        frame: u32,
    },
    /// Subscribe to an event channel and print events until interrupted
    Watch {
        #[arg(long)]
        channel: String,
    },
    /// Dump the elements of a local DICOM file
    Inspect {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args, Debug)]
struct PatientFields {
    #[arg(long, value_parser = nonempty)]
    id: String,
    #[arg(long, default_value = "")]
    name: String,
    #[arg(long, default_value = "")]
    address: String,
    #[arg(long, default_value = "")]
    city: String,
    #[arg(long, default_value = "")]
    state: String,
    #[arg(long, default_value = "")]
    zip: String,
    #[arg(long, default_value = "")]
    country: String,
    #[arg(long, default_value = "")]
    email: String,
    #[arg(long, default_value = "")]
    phone: String,
    #[arg(long, default_value = "")]
    program: String,
}

fn nonempty(value: &str) -> Result<String, String> {
    if value.is_empty() {
        Err("must be nonempty".into())
    } else {
        Ok(value.to_string())
    }
}

impl PatientFields {
    fn into_info(self) -> PatientInfo {
        PatientInfo {
            name: self.name,
            patient_id: self.id,
            address: self.address,
            city: self.city,
            state: self.state,
            zip: self.zip,
            country: self.country,
            email: self.email,
            phone: self.phone,
            program: self.program,
        }
    }
}

/// A command failure: which exit code, what to print, and where.
struct Failure {
    code: i32,
    message: String,
    to_stderr: bool,
}

impl Failure {
    fn data(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
            to_stderr: false,
        }
    }
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Failure {
        match &e {
            ClientError::Network(_) => Failure {
                code: EXIT_NETWORK,
                message: e.to_string(),
                to_stderr: true,
            },
            ClientError::Server(status) => Failure {
                code: status_exit_code(status),
                message: status.to_string(),
                to_stderr: false,
            },
            ClientError::Protocol(_) | ClientError::Data(_) => Failure {
                code: EXIT_DATA,
                message: e.to_string(),
                to_stderr: false,
            },
        }
    }
}

fn status_exit_code(status: &StatusText) -> i32 {
    match status.error_code() {
        None => EXIT_OK,
        Some(404) => EXIT_NOT_FOUND,
        Some(_) => EXIT_SERVER,
    }
}

/// Parses `argv` and runs one subcommand, writing human-readable output to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };

    let config = ClientConfig {
        host: cli.host,
        port: cli.port,
        timeout_ms: cli.timeout_ms,
    };

    let result = match cli.command {
        Command::AddPatient(fields) => add_patient(&config, fields.into_info(), out),
        Command::GetPatient { id } => get_patient(&config, &id, out),
        Command::UploadImage { id, file, name } => upload_image(&config, &id, &file, name, out),
        Command::DownloadImage { name, out: path } => download_image(&config, &name, &path),
        Command::Export { input, out: path, frame } => export(&input, &path, frame, out),
        Command::Watch { channel } => watch(&config, &channel, out),
        Command::Inspect { input } => inspect(&input, out),
    };

    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            if !failure.message.is_empty() {
                let target: &mut dyn Write = if failure.to_stderr { err } else { out };
                let _ = writeln!(target, "{}", failure.message);
            }
            failure.code
        }
    }
}

fn add_patient(config: &ClientConfig, info: PatientInfo, out: &mut dyn Write) -> Result<(), Failure> {
    let mut conn = Connection::connect(config)?;
    let status = conn.execute(ExecuteOp::Insert as i16, &info)?;
    let _ = writeln!(out, "{status}");
    match status_exit_code(&status) {
        EXIT_OK => Ok(()),
        code => Err(Failure {
            code,
            message: String::new(),
            to_stderr: false,
        }),
    }
}

fn get_patient(config: &ClientConfig, id: &str, out: &mut dyn Write) -> Result<(), Failure> {
    let mut conn = Connection::connect(config)?;
    let info = conn.execute2(QUERY_BY_ID, &PatientInfo::with_id(id))?;

    let files_status = conn.execute(ExecuteOp::ListFiles as i16, &PatientInfo::with_id(id))?;
    let files = match &files_status {
        StatusText::Ok { payload } => payload
            .as_deref()
            .unwrap_or("")
            .lines()
            .map(str::to_string)
            .collect::<Vec<_>>(),
        StatusText::Err { .. } => return Err(ClientError::Server(files_status).into()),
    };

    for (field, value) in INFO_FIELD_NAMES.iter().zip(info.fields()) {
        let _ = writeln!(out, "{field}: {value}");
    }
    let _ = writeln!(out, "files: {}", files.join(","));
    Ok(())
}

fn upload_image(
    config: &ClientConfig,
    id: &str,
    file: &Path,
    name: Option<String>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let content = fs::read(file)
        .map_err(|e| Failure::data(format!("error: cannot read {}: {e}", file.display())))?;
    let logical = match name {
        Some(name) => name,
        None => file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| Failure::data(format!("error: no base name in {}", file.display())))?,
    };
    let mut conn = Connection::connect(config)?;
    let status = conn.upload(&logical, id, &content)?;
    let _ = writeln!(out, "{status}");
    match status_exit_code(&status) {
        EXIT_OK => Ok(()),
        code => Err(Failure {
            code,
            message: String::new(),
            to_stderr: false,
        }),
    }
}

fn download_image(config: &ClientConfig, name: &str, out_path: &Path) -> Result<(), Failure> {
    let mut conn = Connection::connect(config)?;
    let bytes = conn.download(name)?;
    fs::write(out_path, &bytes)
        .map_err(|e| Failure::data(format!("error: cannot write {}: {e}", out_path.display())))?;
    Ok(())
}

fn export(input: &Path, out_path: &Path, frame: u32, out: &mut dyn Write) -> Result<(), Failure> {
    let bytes = fs::read(input)
        .map_err(|e| Failure::data(format!("error: cannot read {}: {e}", input.display())))?;
    let object = dicom::parse(&bytes).map_err(|e| Failure::data(format!("error: {e}")))?;
    let descriptor = dicom::pixel_descriptor(&object).map_err(|e| Failure::data(format!("error: {e}")))?;
    let image = dicom::decode_frame(&object, frame).map_err(|e| Failure::data(format!("error: {e}")))?;
    let pgm = dicom::export_pgm(&image, descriptor.photometric);
    fs::write(out_path, &pgm)
        .map_err(|e| Failure::data(format!("error: cannot write {}: {e}", out_path.display())))?;
    let _ = writeln!(
        out,
        "rows={} cols={} frames={}",
        descriptor.rows, descriptor.cols, descriptor.frames
    );
    Ok(())
}

fn watch(config: &ClientConfig, channel: &str, out: &mut dyn Write) -> Result<(), Failure> {
    crate::signal::install(&[libc::SIGINT]);
    let mut conn = Connection::connect(config)?;
    conn.subscribe(channel)?;
    loop {
        if crate::signal::triggered() {
            return Ok(());
        }
        match conn.next_event(Duration::from_millis(200)) {
            Ok(Some(event)) => {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {}",
                    event.seq,
                    event.kind.as_str(),
                    event.patient_id,
                    event.file_name,
                    event.timestamp_ms
                );
                let _ = out.flush();
            }
            Ok(None) => {}
            Err(_) if crate::signal::triggered() => return Ok(()),
            Err(e) => return Err(e.into()),
        }
    }
}

fn inspect(input: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let bytes = fs::read(input)
        .map_err(|e| Failure::data(format!("error: cannot read {}: {e}", input.display())))?;
    let object = dicom::parse(&bytes).map_err(|e| Failure::data(format!("error: {e}")))?;
    let explicit = object.syntax().map(|s| s.is_explicit()).unwrap_or(true);
    for element in &object.meta {
        dump_element(element, 0, true, out);
    }
    for element in &object.dataset {
        dump_element(element, 0, explicit, out);
    }
    Ok(())
}

/// One line per element: tag, VR, value length, and for text VRs the first
/// 64 bytes of the trimmed value. Nested data sets indent two spaces per
/// level.
fn dump_element(element: &Element, depth: usize, explicit: bool, out: &mut dyn Write) {
    let indent = "  ".repeat(depth);
    let length = crate::dicom::encoded_value_len(element, explicit);
    let mut line = format!("{indent}{} {} {length}", element.tag, element.vr);
    if element.vr.is_text() {
        if let Some(text) = element.trimmed_text() {
            let shown: String = text.chars().take(64).collect();
            if !shown.is_empty() {
                line.push(' ');
                line.push_str(&shown);
            }
        }
    }
    let _ = writeln!(out, "{line}");
    for item in &element.items {
        for nested in item {
            dump_element(nested, depth + 1, explicit, out);
        }
    }
}
