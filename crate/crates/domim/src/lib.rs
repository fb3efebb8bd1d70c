//! Distributed object medical imaging suite.
//!
//! This crate bundles the pieces needed to move medical images and patient
//! records around a small network: a DICOM file codec, a compact binary
//! wire protocol with chunked octet streaming, a durable patient-record and
//! blob store, a named-channel event service, the server daemon that ties
//! them together, and the client used to drive it.
//!
//! Each capability has a runnable example under `examples/`:
//!
//! - `dicom_roundtrip`: build, serialize, and re-parse a DICOM object
//! - `export_image`: decode pixel data and export a PGM image
//! - `wire_protocol`: frame messages and marshal patient records
//! - `chunked_streaming`: split, shuffle, and reassemble an octet stream
//! - `blob_store`: durable records and content-addressed blobs
//! - `event_channels`: publish/subscribe with per-subscriber queues
//! - `end_to_end`: in-process server plus client covering the full flow
//!
//! Run one with `cargo run --example <name>`. The two installable binaries,
//! `domim-server` and `domim-client`, are thin wrappers over [`server`] and
//! [`client`].

pub mod blobstore;
pub mod client;
pub mod dicom;
pub mod events;
pub mod server;
pub mod signal;
pub mod util;
pub mod wire;
