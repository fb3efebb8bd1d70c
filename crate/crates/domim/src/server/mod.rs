//! The network daemon: accepts connections, dispatches the four interface
//! methods against the store, and pushes events to subscribers.
//!
//! Connections are handled concurrently, one thread per connection plus a
//! writer thread that serializes outgoing frames (replies, stream chunks,
//! and pushed events share one socket). Store mutations serialize inside
//! the store handle; the commit order is the order observers and events
//! see. Frames on one connection are processed in arrival order, with
//! request ids echoed on every reply, chunk, and error.

mod payload;
mod status;

pub use payload::{
    decode_status, decode_subscription_id, encode_status, encode_subscription_id, DownloadHeader,
    Request, METHOD_DOWNLOAD_FILE, METHOD_EXECUTE, METHOD_EXECUTE2, METHOD_UPLOAD_FILE,
};
pub use status::{ExecuteOp, StatusText, QUERY_BY_ID, STATUS_CODES};

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{sync_channel, SyncSender};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use thiserror::Error;

use crate::blobstore::{PatientRecord, PutMode, Store, StoreError};
use crate::events::{Event, EventKind, EventService, EventSink, SubscriptionId};
use crate::util::now_ms;
use crate::wire::{
    chunk_stream, frame_message, FeedOutcome, FrameDecoder, MessageKind, PatientInfo,
    StreamChunk, StreamReassembler, WireMessage, FLAG_LAST_CHUNK,
};

/// Default TCP port of the daemon.
pub const DEFAULT_PORT: u16 = 9047;
/// Default octet-stream chunk size in bytes.
pub const DEFAULT_CHUNK_SIZE: u32 = 65536;
/// Default connection limit.
pub const DEFAULT_MAX_CONNECTIONS: usize = 64;

/// Banner printed once the listener is ready.
pub const READY_LINE: &str = "The Project Server is up and ready...";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub port: u16,
    pub data_dir: PathBuf,
    pub chunk_size: u32,
    pub max_connections: usize,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            port: DEFAULT_PORT,
            data_dir: data_dir.into(),
            chunk_size: DEFAULT_CHUNK_SIZE,
            max_connections: DEFAULT_MAX_CONNECTIONS,
        }
    }

    fn validate(&self) -> Result<(), ServerError> {
        if self.chunk_size < 1024 {
            return Err(ServerError::Config("chunk-size must be at least 1024"));
        }
        if self.chunk_size as usize + 16 >= crate::wire::MAX_PAYLOAD_LEN {
            return Err(ServerError::Config("chunk-size exceeds the frame payload cap"));
        }
        if self.max_connections < 1 {
            return Err(ServerError::Config("max-connections must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("store error: {0}")]
    Store(#[from] StoreError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// One committed store mutation, reported to observers in commit order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommittedOp {
    Insert(PatientInfo),
    Update(PatientInfo),
    Delete(String),
    Upload {
        patient_id: String,
        file_name: String,
        length: u64,
        sha256: [u8; 32],
    },
}

/// Callback invoked after each committed mutation, before its reply is
/// sent. Calls arrive in commit order.
pub trait CommitObserver: Send + Sync {
    fn on_commit(&self, op: &CommittedOp);
}

/// Triggers a graceful stop: the server stops accepting, lets in-flight
/// requests drain, and closes the store.
#[derive(Clone)]
pub struct ShutdownHandle(Arc<AtomicBool>);

impl ShutdownHandle {
    pub fn trigger(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_triggered(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// A bound server, listening but not yet serving.
pub struct Server {
    listener: TcpListener,
    max_connections: usize,
    shared: Arc<Shared>,
}

struct Shared {
    store: Store,
    events: Arc<EventService>,
    chunk_size: u32,
    shutdown: Arc<AtomicBool>,
    observer: Option<Arc<dyn CommitObserver>>,
    active: AtomicUsize,
}

impl Server {
    /// Opens the store and binds the listener. Port 0 binds an ephemeral
    /// port; see [`Server::local_port`].
    pub fn bind(config: ServerConfig) -> Result<Server, ServerError> {
        config.validate()?;
        let store = Store::open(&config.data_dir)?;
        let listener = TcpListener::bind(("0.0.0.0", config.port))?;
        Ok(Server {
            listener,
            max_connections: config.max_connections,
            shared: Arc::new(Shared {
                store,
                events: Arc::new(EventService::new()),
                chunk_size: config.chunk_size,
                shutdown: Arc::new(AtomicBool::new(false)),
                observer: None,
                active: AtomicUsize::new(0),
            }),
        })
    }

    /// Attaches a commit observer. Only effective before [`Server::run`].
    pub fn with_observer(mut self, observer: Arc<dyn CommitObserver>) -> Server {
        Arc::get_mut(&mut self.shared)
            .expect("observer must be attached before serving")
            .observer = Some(observer);
        self
    }

    pub fn local_port(&self) -> u16 {
        self.listener.local_addr().map(|a| a.port()).unwrap_or(0)
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        ShutdownHandle(Arc::clone(&self.shared.shutdown))
    }

    /// Direct handle to the store, for embedding and test harnesses.
    pub fn store(&self) -> &Store {
        &self.shared.store
    }

    /// Prints the ready banner and serves until the shutdown handle fires.
    pub fn run(self) -> Result<(), ServerError> {
        println!("{READY_LINE}");
        io::stdout().flush().ok();
        self.listener.set_nonblocking(true)?;

        let mut workers: Vec<thread::JoinHandle<()>> = Vec::new();
        loop {
            if self.shared.shutdown.load(Ordering::SeqCst) {
                break;
            }
            match self.listener.accept() {
                Ok((stream, _addr)) => {
                    workers.retain(|w| !w.is_finished());
                    if self.shared.active.load(Ordering::SeqCst) >= self.max_connections {
                        // At capacity: refuse by closing immediately.
                        drop(stream);
                        continue;
                    }
                    self.shared.active.fetch_add(1, Ordering::SeqCst);
                    let shared = Arc::clone(&self.shared);
                    workers.push(thread::spawn(move || {
                        handle_connection(stream, &shared);
                        shared.active.fetch_sub(1, Ordering::SeqCst);
                    }));
                }
                Err(ref e) if e.kind() == io::ErrorKind::WouldBlock => {
                    thread::sleep(Duration::from_millis(10));
                }
                Err(e) => return Err(e.into()),
            }
        }
        for worker in workers {
            let _ = worker.join();
        }
        Ok(())
    }
}

/// Convenience entry point: bind with `config`, run until shutdown.
pub fn serve(config: ServerConfig) -> Result<(), ServerError> {
    Server::bind(config)?.run()
}

/// Event sink bound to one connection: event frames join the connection's
/// outgoing frame queue; disconnect tears the socket down.
struct ConnectionSink {
    out: SyncSender<Vec<u8>>,
    stream: TcpStream,
}

impl EventSink for ConnectionSink {
    fn deliver(&self, event: &Event) -> bool {
        match frame_message(MessageKind::Event, 0, 0, &event.encode()) {
            Ok(frame) => self.out.send(frame).is_ok(),
            Err(_) => false,
        }
    }

    fn disconnect(&self) {
        let _ = self.stream.shutdown(Shutdown::Both);
    }
}

enum UploadPhase {
    Active(StreamReassembler),
    /// Request already answered; swallow the rest of the stream.
    Discard,
}

struct UploadState {
    phase: UploadPhase,
    file_name: String,
    patient_id: String,
    total_length: u64,
}

struct Connection<'a> {
    shared: &'a Shared,
    out: SyncSender<Vec<u8>>,
    /// Socket handle handed to event sinks for overflow disconnects.
    stream: TcpStream,
    uploads: HashMap<u32, UploadState>,
    subscriptions: Vec<SubscriptionId>,
}

enum Flow {
    Continue,
    Close,
}

fn handle_connection(stream: TcpStream, shared: &Shared) {
    if stream.set_read_timeout(Some(Duration::from_millis(100))).is_err() {
        return;
    }
    // A peer that stops reading must not wedge the writer forever.
    if stream.set_write_timeout(Some(Duration::from_secs(30))).is_err() {
        return;
    }
    let mut writer_stream = match stream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    };
    let (out, out_rx) = sync_channel::<Vec<u8>>(64);
    let writer = thread::spawn(move || {
        for frame in out_rx {
            if writer_stream.write_all(&frame).is_err() {
                break;
            }
        }
        let _ = writer_stream.shutdown(Shutdown::Both);
    });

    let sink_stream = match stream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    };
    let mut conn = Connection {
        shared,
        out,
        stream: sink_stream,
        uploads: HashMap::new(),
        subscriptions: Vec::new(),
    };
    conn.read_loop(&stream);

    for id in conn.subscriptions.drain(..) {
        shared.events.unsubscribe(id);
    }
    drop(conn);
    let _ = writer.join();
}

impl Connection<'_> {
    fn read_loop(&mut self, stream: &TcpStream) {
        let mut stream = stream;
        let mut decoder = FrameDecoder::new();
        let mut buf = vec![0u8; 64 * 1024];
        loop {
            if self.shared.shutdown.load(Ordering::SeqCst) {
                return;
            }
            match stream.read(&mut buf) {
                Ok(0) => return,
                Ok(n) => {
                    decoder.extend(&buf[..n]);
                    loop {
                        match decoder.next_frame() {
                            Ok(Some(message)) => match self.process(message) {
                                Flow::Continue => {}
                                Flow::Close => return,
                            },
                            Ok(None) => break,
                            // Malformed framing: close this connection only.
                            Err(_) => return,
                        }
                    }
                }
                Err(ref e)
                    if matches!(
                        e.kind(),
                        io::ErrorKind::WouldBlock
                            | io::ErrorKind::TimedOut
                            | io::ErrorKind::Interrupted
                    ) => {}
                Err(_) => return,
            }
        }
    }

    fn send(&self, kind: MessageKind, flags: u8, request_id: u32, payload: &[u8]) -> Flow {
        match frame_message(kind, flags, request_id, payload) {
            Ok(frame) => {
                if self.out.send(frame).is_ok() {
                    Flow::Continue
                } else {
                    Flow::Close
                }
            }
            Err(_) => Flow::Close,
        }
    }

    fn reply_status(&self, request_id: u32, status: &StatusText) -> Flow {
        self.send(MessageKind::Reply, 0, request_id, &encode_status(status))
    }

    fn error_status(&self, request_id: u32, status: &StatusText) -> Flow {
        self.send(MessageKind::Error, 0, request_id, &encode_status(status))
    }

    fn process(&mut self, message: WireMessage) -> Flow {
        let request_id = message.header.request_id;
        match message.header.kind {
            MessageKind::Request => self.on_request(request_id, &message.payload),
            MessageKind::StreamChunk => self.on_chunk(&message),
            MessageKind::Subscribe => self.on_subscribe(request_id, &message.payload),
            MessageKind::Unsubscribe => self.on_unsubscribe(request_id, &message.payload),
            // Clients have no business sending server-side kinds.
            MessageKind::Reply | MessageKind::Error | MessageKind::Event => Flow::Close,
        }
    }

    fn on_request(&mut self, request_id: u32, payload: &[u8]) -> Flow {
        let request = match Request::decode(payload) {
            Ok(request) => request,
            Err(_) => {
                // Bad payload: answer, then drop the connection.
                self.error_status(request_id, &StatusText::err(400, "bad-request"));
                return Flow::Close;
            }
        };
        match request {
            Request::Execute { operation, info } => {
                println!("Sending query For PATIENT No: {}", info.patient_id);
                let status = self.handle_execute(operation, info);
                self.reply_status(request_id, &status)
            }
            Request::Execute2 { operation, info } => {
                println!("Sending query For PATIENT No: {}", info.patient_id);
                match self.handle_execute2(operation, &info) {
                    Ok(found) => match crate::wire::marshal_info(&found) {
                        Ok(bytes) => self.send(MessageKind::Reply, 0, request_id, &bytes),
                        Err(_) => {
                            self.error_status(request_id, &StatusText::err(500, "internal"))
                        }
                    },
                    Err(status) => self.error_status(request_id, &status),
                }
            }
            Request::DownloadFile { file_name } => {
                println!("Sending file: {file_name}");
                self.handle_download(request_id, &file_name)
            }
            Request::UploadFile {
                file_name,
                patient_id,
                total_length,
            } => {
                println!("Storing file {file_name} For PATIENT No: {patient_id}");
                self.handle_upload_request(request_id, file_name, patient_id, total_length)
            }
        }
    }

    fn handle_execute(&self, operation: i16, info: PatientInfo) -> StatusText {
        let store = &self.shared.store;
        let Some(op) = ExecuteOp::from_code(operation) else {
            return StatusText::err(400, "bad-operation");
        };
        if info.patient_id.is_empty() {
            return StatusText::err(400, "bad-request");
        }
        let patient_id = info.patient_id.clone();
        match op {
            ExecuteOp::Insert => match store.put_record(PatientRecord::new(info.clone()), PutMode::Insert)
            {
                Ok(()) => {
                    self.commit(CommittedOp::Insert(info));
                    self.publish(EventKind::PatientInserted, &patient_id, "");
                    StatusText::ok()
                }
                Err(e) => store_error_status(e),
            },
            ExecuteOp::Update => {
                let existing = match store.get_record(&patient_id) {
                    Ok(record) => record,
                    Err(e) => return store_error_status(e),
                };
                let record = PatientRecord {
                    info: info.clone(),
                    ..existing
                };
                match store.put_record(record, PutMode::Update) {
                    Ok(()) => {
                        self.commit(CommittedOp::Update(info));
                        self.publish(EventKind::PatientUpdated, &patient_id, "");
                        StatusText::ok()
                    }
                    Err(e) => store_error_status(e),
                }
            }
            ExecuteOp::Delete => match store.delete_record(&patient_id) {
                Ok(()) => {
                    self.commit(CommittedOp::Delete(patient_id.clone()));
                    self.publish(EventKind::PatientDeleted, &patient_id, "");
                    StatusText::ok()
                }
                Err(e) => store_error_status(e),
            },
            ExecuteOp::ListFiles => match store.list_files(&patient_id) {
                Ok(files) if files.is_empty() => StatusText::ok(),
                Ok(files) => StatusText::ok_with(files.join("\n")),
                Err(e) => store_error_status(e),
            },
        }
    }

    fn handle_execute2(&self, operation: i16, info: &PatientInfo) -> Result<PatientInfo, StatusText> {
        if operation != QUERY_BY_ID {
            return Err(StatusText::err(400, "bad-operation"));
        }
        match self.shared.store.get_record(&info.patient_id) {
            Ok(record) => Ok(record.info),
            Err(e) => Err(store_error_status(e)),
        }
    }

    fn handle_download(&self, request_id: u32, file_name: &str) -> Flow {
        let content = match self.shared.store.get_blob(file_name) {
            Ok(content) => content,
            Err(e) => return self.error_status(request_id, &store_error_status(e)),
        };
        let header = DownloadHeader {
            total_length: content.len() as u64,
            chunk_size: self.shared.chunk_size,
        };
        if let Flow::Close = self.send(MessageKind::Reply, 0, request_id, &header.encode()) {
            return Flow::Close;
        }
        for chunk in chunk_stream(&content, self.shared.chunk_size as usize) {
            let flags = if chunk.last { FLAG_LAST_CHUNK } else { 0 };
            if let Flow::Close =
                self.send(MessageKind::StreamChunk, flags, request_id, &chunk.encode_payload())
            {
                return Flow::Close;
            }
        }
        Flow::Continue
    }

    fn handle_upload_request(
        &mut self,
        request_id: u32,
        file_name: String,
        patient_id: String,
        total_length: u64,
    ) -> Flow {
        let mut phase = UploadPhase::Active(StreamReassembler::default());
        let mut early_reply: Option<StatusText> = None;

        if file_name.is_empty() || patient_id.is_empty() {
            early_reply = Some(StatusText::err(400, "bad-request"));
        } else if self.shared.store.get_record(&patient_id).is_err() {
            early_reply = Some(StatusText::err(404, "not-found"));
        }
        if let Some(status) = &early_reply {
            phase = UploadPhase::Discard;
            if let Flow::Close = self.reply_status(request_id, status) {
                return Flow::Close;
            }
        }
        self.uploads.insert(
            request_id,
            UploadState {
                phase,
                file_name,
                patient_id,
                total_length,
            },
        );
        Flow::Continue
    }

    fn on_chunk(&mut self, message: &WireMessage) -> Flow {
        let request_id = message.header.request_id;
        let Some(state) = self.uploads.get_mut(&request_id) else {
            // Chunk without an upload in progress: protocol violation.
            self.error_status(request_id, &StatusText::err(400, "bad-stream"));
            return Flow::Close;
        };
        let chunk = match StreamChunk::decode_payload(&message.payload, message.header.is_last_chunk())
        {
            Ok(chunk) => chunk,
            Err(_) => {
                self.uploads.remove(&request_id);
                self.error_status(request_id, &StatusText::err(400, "bad-stream"));
                return Flow::Close;
            }
        };

        let last = chunk.last;
        match &mut state.phase {
            UploadPhase::Discard => {
                if last {
                    self.uploads.remove(&request_id);
                }
                Flow::Continue
            }
            UploadPhase::Active(reassembler) => match reassembler.feed(chunk) {
                Ok(FeedOutcome::InProgress) => Flow::Continue,
                Ok(FeedOutcome::Complete(bytes)) => {
                    let state = self.uploads.remove(&request_id).unwrap();
                    let status = self.finish_upload(&state, bytes);
                    self.reply_status(request_id, &status)
                }
                Err(_) => {
                    // Stream out of contract; answer and swallow the rest.
                    state.phase = UploadPhase::Discard;
                    if !last {
                        self.reply_status(request_id, &StatusText::err(400, "bad-stream"))
                    } else {
                        self.uploads.remove(&request_id);
                        self.reply_status(request_id, &StatusText::err(400, "bad-stream"))
                    }
                }
            },
        }
    }

    fn finish_upload(&self, state: &UploadState, bytes: Vec<u8>) -> StatusText {
        if bytes.len() as u64 != state.total_length {
            return StatusText::err(400, "bad-stream");
        }
        let store = &self.shared.store;
        match store.put_blob(&state.file_name, &bytes) {
            Ok(entry) => {
                if let Err(e) = store.attach_file(&state.patient_id, &state.file_name) {
                    return store_error_status(e);
                }
                self.commit(CommittedOp::Upload {
                    patient_id: state.patient_id.clone(),
                    file_name: state.file_name.clone(),
                    length: entry.length,
                    sha256: entry.sha256,
                });
                self.publish(EventKind::ImageStored, &state.patient_id, &state.file_name);
                StatusText::ok()
            }
            Err(e) => store_error_status(e),
        }
    }

    fn on_subscribe(&mut self, request_id: u32, payload: &[u8]) -> Flow {
        let mut reader = crate::wire::codec::Reader::new(payload);
        let channel = match reader.get_str().and_then(|c| reader.finish().map(|_| c)) {
            Ok(channel) => channel,
            Err(_) => {
                self.error_status(request_id, &StatusText::err(400, "bad-request"));
                return Flow::Close;
            }
        };
        if channel.is_empty() {
            return self.error_status(request_id, &StatusText::err(400, "bad-channel"));
        }
        println!("Subscribing channel: {channel}");
        // The sink needs its own socket handle for overflow disconnects.
        let Some(sink_stream) = self.sink_stream() else {
            return self.error_status(request_id, &StatusText::err(500, "internal"));
        };
        let sink = Arc::new(ConnectionSink {
            out: self.out.clone(),
            stream: sink_stream,
        });
        let id = self.shared.events.subscribe(&channel, sink);
        self.subscriptions.push(id);
        self.send(MessageKind::Reply, 0, request_id, &encode_subscription_id(id.0))
    }

    fn on_unsubscribe(&mut self, request_id: u32, payload: &[u8]) -> Flow {
        let id = match decode_subscription_id(payload) {
            Ok(id) => id,
            Err(_) => {
                self.error_status(request_id, &StatusText::err(400, "bad-request"));
                return Flow::Close;
            }
        };
        self.shared.events.unsubscribe(SubscriptionId(id));
        self.subscriptions.retain(|s| s.0 != id);
        self.reply_status(request_id, &StatusText::ok())
    }

    fn commit(&self, op: CommittedOp) {
        if let Some(observer) = &self.shared.observer {
            observer.on_commit(&op);
        }
    }

    fn publish(&self, kind: EventKind, patient_id: &str, file_name: &str) {
        let mut event = Event::new(kind, patient_id, file_name);
        event.timestamp_ms = now_ms();
        self.shared.events.publish(event);
    }

    fn sink_stream(&self) -> Option<TcpStream> {
        self.stream.try_clone().ok()
    }
}

fn store_error_status(e: StoreError) -> StatusText {
    match e {
        StoreError::NotFound(_) => StatusText::err(404, "not-found"),
        StoreError::DuplicateKey(_) => StatusText::err(409, "duplicate"),
        StoreError::EmptyKey(_) => StatusText::err(400, "bad-request"),
        StoreError::CorruptIndex(_) | StoreError::CorruptBlob(_) | StoreError::IoFailure(_) => {
            StatusText::err(500, "internal")
        }
    }
}
