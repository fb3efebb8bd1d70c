//! Durable embedded store for patient records and named binary blobs.
//!
//! One directory holds everything: `index.bin` (all records and blob
//! entries, rewritten atomically on every mutation) and `blobs/` with one
//! content file per blob, named by the lowercase hex of the blob's UTF-8
//! logical name. Mutations are durable before they return: temp file,
//! fsync, rename, directory fsync. A crash between steps leaves either the
//! old or the new index, never a torn one.

mod index;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::util::now_ms;
use crate::wire::PatientInfo;

/// A stored demographic record with its attached blob names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientRecord {
    pub info: PatientInfo,
    /// Attached blob names in attachment order, no duplicates.
    pub files: Vec<String>,
    /// Milliseconds since epoch, stamped by the store on every mutation.
    pub updated_at: u64,
}

impl PatientRecord {
    pub fn new(info: PatientInfo) -> Self {
        PatientRecord {
            info,
            files: Vec::new(),
            updated_at: 0,
        }
    }
}

/// Metadata of one stored blob.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlobEntry {
    pub name: String,
    pub length: u64,
    pub sha256: [u8; 32],
}

/// Insert requires a fresh key, update an existing one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutMode {
    Insert,
    Update,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("DuplicateKey: patient {0:?} already exists")]
    DuplicateKey(String),
    #[error("NotFound: {0}")]
    NotFound(String),
    #[error("EmptyKey: {0}")]
    EmptyKey(&'static str),
    #[error("CorruptIndex: {0}")]
    CorruptIndex(String),
    #[error("CorruptBlob: {0}")]
    CorruptBlob(String),
    #[error("IoFailure: {0}")]
    IoFailure(#[from] io::Error),
}

struct State {
    records: BTreeMap<String, PatientRecord>,
    blobs: BTreeMap<String, BlobEntry>,
}

/// Store handle. Mutating operations serialize internally; reads may run
/// concurrently with each other.
pub struct Store {
    root: PathBuf,
    blobs_dir: PathBuf,
    state: RwLock<State>,
}

const INDEX_FILE: &str = "index.bin";
const TMP_SUFFIX: &str = ".tmp";

impl Store {
    /// Opens (or initializes) the store under `dir`. Leftover temporary
    /// files from interrupted writes are removed.
    pub fn open(dir: impl AsRef<Path>) -> Result<Store, StoreError> {
        let root = dir.as_ref().to_path_buf();
        let blobs_dir = root.join("blobs");
        fs::create_dir_all(&blobs_dir)?;
        remove_stale_tmp(&root)?;
        remove_stale_tmp(&blobs_dir)?;

        let index_path = root.join(INDEX_FILE);
        let (records, blobs) = if index_path.exists() {
            index::decode_index(&fs::read(&index_path)?)?
        } else {
            (BTreeMap::new(), BTreeMap::new())
        };

        Ok(Store {
            root,
            blobs_dir,
            state: RwLock::new(State { records, blobs }),
        })
    }

    pub fn record_count(&self) -> usize {
        self.state.read().unwrap().records.len()
    }

    pub fn blob_count(&self) -> usize {
        self.state.read().unwrap().blobs.len()
    }

    /// Snapshot of all records, in key order.
    pub fn records(&self) -> Vec<PatientRecord> {
        self.state.read().unwrap().records.values().cloned().collect()
    }

    /// Snapshot of all blob entries, in name order.
    pub fn blobs(&self) -> Vec<BlobEntry> {
        self.state.read().unwrap().blobs.values().cloned().collect()
    }

    /// Inserts or updates a record. The store stamps `updated_at`; on
    /// update the stamp strictly increases. Duplicate names in `files`
    /// collapse to the first occurrence, and every name must resolve to an
    /// existing blob.
    pub fn put_record(&self, record: PatientRecord, mode: PutMode) -> Result<(), StoreError> {
        let key = record.info.patient_id.clone();
        if key.is_empty() {
            return Err(StoreError::EmptyKey("patient_id must be nonempty"));
        }
        let mut state = self.state.write().unwrap();

        let mut files = Vec::with_capacity(record.files.len());
        for name in &record.files {
            if !state.blobs.contains_key(name) {
                return Err(StoreError::NotFound(format!("blob {name:?}")));
            }
            if !files.contains(name) {
                files.push(name.clone());
            }
        }

        let previous = state.records.get(&key);
        let updated_at = match (mode, previous) {
            (PutMode::Insert, Some(_)) => return Err(StoreError::DuplicateKey(key)),
            (PutMode::Insert, None) => now_ms(),
            (PutMode::Update, None) => return Err(StoreError::NotFound(format!("patient {key:?}"))),
            (PutMode::Update, Some(old)) => now_ms().max(old.updated_at + 1),
        };

        let mut records = state.records.clone();
        records.insert(
            key,
            PatientRecord {
                info: record.info,
                files,
                updated_at,
            },
        );
        self.persist(&records, &state.blobs)?;
        state.records = records;
        Ok(())
    }

    pub fn get_record(&self, patient_id: &str) -> Result<PatientRecord, StoreError> {
        self.state
            .read()
            .unwrap()
            .records
            .get(patient_id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(format!("patient {patient_id:?}")))
    }

    /// Removes a record. Attached blobs are retained; they are independent
    /// objects.
    pub fn delete_record(&self, patient_id: &str) -> Result<(), StoreError> {
        let mut state = self.state.write().unwrap();
        if !state.records.contains_key(patient_id) {
            return Err(StoreError::NotFound(format!("patient {patient_id:?}")));
        }
        let mut records = state.records.clone();
        records.remove(patient_id);
        self.persist(&records, &state.blobs)?;
        state.records = records;
        Ok(())
    }

    /// Stores blob content under a logical name, overwriting any previous
    /// content for the name.
    pub fn put_blob(&self, name: &str, content: &[u8]) -> Result<BlobEntry, StoreError> {
        if name.is_empty() {
            return Err(StoreError::EmptyKey("blob name must be nonempty"));
        }
        let mut state = self.state.write().unwrap();

        let path = self.blob_path(name);
        let tmp = path.with_extension("tmp");
        {
            let mut file = File::create(&tmp)?;
            file.write_all(content)?;
            file.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        sync_dir(&self.blobs_dir)?;

        let entry = BlobEntry {
            name: name.to_string(),
            length: content.len() as u64,
            sha256: Sha256::digest(content).into(),
        };
        let mut blobs = state.blobs.clone();
        blobs.insert(name.to_string(), entry.clone());
        self.persist(&state.records, &blobs)?;
        state.blobs = blobs;
        Ok(entry)
    }

    /// Reads back the exact stored bytes, verifying length and digest.
    pub fn get_blob(&self, name: &str) -> Result<Vec<u8>, StoreError> {
        let state = self.state.read().unwrap();
        let entry = state
            .blobs
            .get(name)
            .ok_or_else(|| StoreError::NotFound(format!("blob {name:?}")))?;
        let content = fs::read(self.blob_path(name))
            .map_err(|e| StoreError::CorruptBlob(format!("blob {name:?} unreadable: {e}")))?;
        if content.len() as u64 != entry.length
            || <[u8; 32]>::from(Sha256::digest(&content)) != entry.sha256
        {
            return Err(StoreError::CorruptBlob(format!(
                "blob {name:?} does not match its recorded digest"
            )));
        }
        Ok(content)
    }

    /// Entry metadata for a stored blob.
    pub fn blob_entry(&self, name: &str) -> Result<BlobEntry, StoreError> {
        self.state
            .read()
            .unwrap()
            .blobs
            .get(name)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(format!("blob {name:?}")))
    }

    /// Appends a blob name to a record's file list; attaching a name that
    /// is already present is a no-op.
    pub fn attach_file(&self, patient_id: &str, blob_name: &str) -> Result<(), StoreError> {
        let mut state = self.state.write().unwrap();
        if !state.blobs.contains_key(blob_name) {
            return Err(StoreError::NotFound(format!("blob {blob_name:?}")));
        }
        let record = state
            .records
            .get(patient_id)
            .ok_or_else(|| StoreError::NotFound(format!("patient {patient_id:?}")))?;
        if record.files.iter().any(|f| f == blob_name) {
            return Ok(());
        }
        let mut records = state.records.clone();
        let record = records.get_mut(patient_id).unwrap();
        record.files.push(blob_name.to_string());
        record.updated_at = now_ms().max(record.updated_at + 1);
        self.persist(&records, &state.blobs)?;
        state.records = records;
        Ok(())
    }

    /// The record's attached blob names, in attachment order.
    pub fn list_files(&self, patient_id: &str) -> Result<Vec<String>, StoreError> {
        Ok(self.get_record(patient_id)?.files)
    }

    fn blob_path(&self, name: &str) -> PathBuf {
        self.blobs_dir.join(hex::encode(name.as_bytes()))
    }

    /// Writes the index to a temp file, fsyncs, and renames it over the
    /// live one.
    fn persist(
        &self,
        records: &BTreeMap<String, PatientRecord>,
        blobs: &BTreeMap<String, BlobEntry>,
    ) -> Result<(), StoreError> {
        let bytes = index::encode_index(records, blobs);
        let path = self.root.join(INDEX_FILE);
        let tmp = self.root.join(format!("{INDEX_FILE}{TMP_SUFFIX}"));
        {
            let mut file = OpenOptions::new()
                .write(true)
                .create(true)
                .truncate(true)
                .open(&tmp)?;
            file.write_all(&bytes)?;
            file.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        sync_dir(&self.root)?;
        Ok(())
    }
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    File::open(dir)?.sync_all()
}

fn remove_stale_tmp(dir: &Path) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.path().extension().is_some_and(|e| e == "tmp") {
            fs::remove_file(entry.path())?;
        }
    }
    Ok(())
}
