//! Shared fixtures: synthetic DICOM objects, image files, and harness
//! helpers used across the integration suites.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{channel, Receiver};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand::rngs::StdRng;

use domim::dicom::{
    dictionary_entries, serialize, tags, DicomObject, Element, Tag, TransferSyntax, Vr,
};

/// Deterministic RNG for reproducible fixtures.
pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn random_text(rng: &mut StdRng, max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| char::from(rng.gen_range(b'A'..=b'Z')))
        .collect()
}

fn even_bytes(rng: &mut StdRng, max_pairs: usize) -> Vec<u8> {
    let pairs = rng.gen_range(0..=max_pairs);
    (0..pairs * 2).map(|_| rng.gen()).collect()
}

fn value_for(rng: &mut StdRng, tag: Tag, vr: Vr, depth: usize, explicit: bool) -> Element {
    match vr {
        Vr::SQ => {
            let item_count = if depth >= 2 { 0 } else { rng.gen_range(0..3) };
            let items = (0..item_count)
                .map(|_| {
                    let nested = rng.gen_range(0..4);
                    random_dataset(rng, depth + 1, nested, explicit)
                })
                .collect();
            Element::sequence(tag, items)
        }
        Vr::US => Element::new(tag, vr, rng.gen::<u16>().to_le_bytes().to_vec()),
        Vr::UL | Vr::SL => Element::new(tag, vr, rng.gen::<u32>().to_le_bytes().to_vec()),
        Vr::OB | Vr::OW | Vr::UN => Element::new(tag, vr, even_bytes(rng, 16)),
        Vr::IS => Element::text(tag, vr, &rng.gen_range(0..100_000).to_string()),
        _ => Element::text(tag, vr, &random_text(rng, 16)),
    }
}

/// Random strictly-ascending data set. In implicit syntax only dictionary
/// tags (plus UN-coded unknown tags) are generated, so the value
/// representation survives the syntax's round trip.
fn random_dataset(rng: &mut StdRng, depth: usize, count: usize, explicit: bool) -> Vec<Element> {
    let mut picks: Vec<(Tag, Vr)> = Vec::new();
    if explicit {
        while picks.len() < count {
            let group = rng.gen_range(0x0008..0xFFF0u16);
            let element = rng.gen();
            let tag = Tag::new(group, element);
            if picks.iter().any(|(t, _)| *t == tag) {
                continue;
            }
            let vr = *Vr::ALL.choose(rng).unwrap();
            picks.push((tag, vr));
        }
    } else {
        let dictionary: Vec<(Tag, Vr)> = dictionary_entries()
            .filter(|(tag, _)| !tag.is_meta())
            .collect();
        while picks.len() < count {
            if rng.gen_bool(0.8) {
                let &(tag, vr) = dictionary.choose(rng).unwrap();
                if picks.iter().any(|(t, _)| *t == tag) {
                    continue;
                }
                picks.push((tag, vr));
            } else {
                // Unknown tag: parses as UN from the dictionary default.
                let tag = Tag::new(rng.gen_range(0x0009..0xFFF0u16) | 0x0001, rng.gen());
                if picks.iter().any(|(t, _)| *t == tag)
                    || domim::dicom::implicit_vr(tag) != Vr::UN
                {
                    continue;
                }
                picks.push((tag, Vr::UN));
            }
        }
    }
    picks.sort_by_key(|(tag, _)| *tag);
    picks
        .into_iter()
        .map(|(tag, vr)| value_for(rng, tag, vr, depth, explicit))
        .collect()
}

/// Random valid object with defined lengths and even values, suitable for
/// byte-exact round trips.
pub fn random_object(rng: &mut StdRng, syntax: TransferSyntax) -> DicomObject {
    let mut object = DicomObject::new(syntax);
    // Transfer syntax is (0002,0010); anything above it keeps meta ascending.
    if rng.gen_bool(0.5) {
        object.meta.push(Element::text(
            Tag::new(0x0002, 0x0012),
            Vr::UI,
            "1.2.826.0.1.3680043.9999.1",
        ));
    }
    let count = rng.gen_range(0..9);
    object.dataset = random_dataset(rng, 0, count, syntax.is_explicit());
    object
}

/// Computed (0002,0000) group length for a meta group, excluding the group
/// length element itself. All meta elements here use short-form headers.
fn meta_group_length(elements: &[Element]) -> u32 {
    elements
        .iter()
        .map(|e| 8 + domim::dicom::encoded_value_len(e, true) as u32)
        .sum()
}

/// A complete monochrome image file with a realistic meta group, plus the
/// raw pixel bytes it carries.
pub fn image_file(rows: u16, cols: u16) -> (Vec<u8>, Vec<u8>) {
    let pixels: Vec<u8> = (0..rows as usize * cols as usize)
        .map(|i| (i % 256) as u8)
        .collect();
    let bytes = image_file_with_pixels(rows, cols, &pixels);
    (bytes, pixels)
}

pub fn image_file_with_pixels(rows: u16, cols: u16, pixels: &[u8]) -> Vec<u8> {
    let mut object = DicomObject::new(TransferSyntax::ExplicitVrLittleEndian);
    let tail = vec![
        Element::text(
            Tag::new(0x0002, 0x0002),
            Vr::UI,
            "1.2.840.10008.5.1.4.1.1.7",
        ),
        Element::text(Tag::new(0x0002, 0x0003), Vr::UI, "1.2.826.0.1.3680043.9999.2"),
        Element::text(tags::TRANSFER_SYNTAX_UID, Vr::UI, TransferSyntax::ExplicitVrLittleEndian.uid()),
    ];
    let mut meta = vec![Element::new(
        tags::FILE_META_GROUP_LENGTH,
        Vr::UL,
        meta_group_length(&tail).to_le_bytes().to_vec(),
    )];
    meta.extend(tail);
    object.meta = meta;

    object.dataset = vec![
        Element::text(Tag::new(0x0008, 0x0016), Vr::UI, "1.2.840.10008.5.1.4.1.1.7"),
        Element::text(Tag::new(0x0008, 0x0018), Vr::UI, "1.2.826.0.1.3680043.9999.2"),
        Element::text(Tag::new(0x0008, 0x0060), Vr::CS, "OT"),
        Element::text(tags::PATIENT_NAME, Vr::PN, "Test Patient"),
        Element::text(tags::PATIENT_ID, Vr::LO, "001"),
        Element::us(tags::SAMPLES_PER_PIXEL, 1),
        Element::text(tags::PHOTOMETRIC_INTERPRETATION, Vr::CS, "MONOCHROME2"),
        Element::us(tags::ROWS, rows),
        Element::us(tags::COLUMNS, cols),
        Element::us(tags::BITS_ALLOCATED, 8),
        Element::us(tags::BITS_STORED, 8),
        Element::us(tags::HIGH_BIT, 7),
        Element::us(tags::PIXEL_REPRESENTATION, 0),
        Element::new(tags::PIXEL_DATA, Vr::OB, pixels.to_vec()),
    ];
    serialize(&object).expect("fixture must serialize")
}

/// The minimal hand-built file from the interface definition: transfer
/// syntax in meta, one patient-id element in the data set, every byte
/// spelled out.
pub fn minimal_patient_file() -> Vec<u8> {
    let mut bytes = vec![0u8; 128];
    bytes.extend_from_slice(b"DICM");
    // (0002,0010) UI, length 20, "1.2.840.10008.1.2.1\0"
    bytes.extend_from_slice(&[0x02, 0x00, 0x10, 0x00, b'U', b'I', 0x14, 0x00]);
    bytes.extend_from_slice(b"1.2.840.10008.1.2.1\0");
    // (0010,0020) LO, length 4, "001 "
    bytes.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'L', b'O', 0x04, 0x00]);
    bytes.extend_from_slice(b"001 ");
    bytes
}

/// A running `domim-server` child with captured stdout lines.
pub struct TestServer {
    child: Child,
    pub port: u16,
    pub data_dir: PathBuf,
    lines: Arc<Mutex<Vec<String>>>,
    line_rx: Receiver<String>,
}

impl TestServer {
    /// Spawns the server binary on an ephemeral port over `data_dir` and
    /// waits for the ready banner.
    pub fn start(data_dir: &Path) -> TestServer {
        let mut child = Command::new(env!("CARGO_BIN_EXE_domim-server"))
            .args(["--port", "0", "--data-dir"])
            .arg(data_dir)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn domim-server");

        let stdout = child.stdout.take().expect("server stdout piped");
        let lines = Arc::new(Mutex::new(Vec::new()));
        let sink = Arc::clone(&lines);
        let (line_tx, line_rx) = channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines().map_while(Result::ok) {
                sink.lock().unwrap().push(line.clone());
                let _ = line_tx.send(line);
            }
        });

        let deadline = Instant::now() + Duration::from_secs(10);
        let mut port = None;
        let mut ready = false;
        while Instant::now() < deadline && !(ready && port.is_some()) {
            if let Ok(line) = line_rx.recv_timeout(Duration::from_millis(100)) {
                if let Some(p) = line.strip_prefix("listening on 0.0.0.0:") {
                    port = p.trim().parse().ok();
                }
                if line == "The Project Server is up and ready..." {
                    ready = true;
                }
            }
        }
        assert!(ready, "server did not print the ready line");
        TestServer {
            child,
            port: port.expect("server did not report its port"),
            data_dir: data_dir.to_path_buf(),
            lines,
            line_rx,
        }
    }

    pub fn stdout_lines(&self) -> Vec<String> {
        self.lines.lock().unwrap().clone()
    }

    /// SIGKILL, for crash-recovery harnesses.
    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    /// SIGTERM and wait for a graceful exit.
    pub fn terminate(&mut self) -> Option<i32> {
        unsafe {
            libc::kill(self.child.id() as libc::pid_t, libc::SIGTERM);
        }
        let deadline = Instant::now() + Duration::from_secs(10);
        while Instant::now() < deadline {
            match self.child.try_wait() {
                Ok(Some(status)) => return status.code(),
                Ok(None) => std::thread::sleep(Duration::from_millis(20)),
                Err(_) => return None,
            }
        }
        self.kill();
        None
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Runs `domim-client` against a port, returning (exit code, stdout,
/// stderr).
pub fn client(port: u16, args: &[&str]) -> (i32, String, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_domim-client"))
        .args(["--host", "127.0.0.1", "--port", &port.to_string()])
        .args(args)
        .env_remove("DOMIM_HOST")
        .env_remove("DOMIM_PORT")
        .output()
        .expect("run domim-client");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
