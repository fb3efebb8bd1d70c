//! Client side of the protocol: binding to a server, invoking the
//! interface methods, and receiving pushed events.

pub mod cli;

use std::io::{self, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::events::Event;
use crate::server::{
    decode_status, decode_subscription_id, DownloadHeader, Request, StatusText,
};
use crate::wire::{
    frame_message, FeedOutcome, FrameDecoder, MessageKind, PatientInfo, StreamChunk,
    StreamReassembler, WireError, WireMessage, FLAG_LAST_CHUNK,
};

/// How to reach the server and how long to wait per request.
#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub host: String,
    pub port: u16,
    pub timeout_ms: u64,
}

impl ClientConfig {
    pub fn new(host: impl Into<String>, port: u16) -> Self {
        ClientConfig {
            host: host.into(),
            port,
            timeout_ms: 10_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    /// Connection, read, or write failure, including request timeouts.
    #[error("network: {0}")]
    Network(String),
    /// The peer spoke the protocol incorrectly.
    #[error("protocol: {0}")]
    Protocol(String),
    /// The server answered with an error status.
    #[error("{0}")]
    Server(StatusText),
    /// The transferred data failed an integrity check.
    #[error("data: {0}")]
    Data(String),
}

impl From<WireError> for ClientError {
    fn from(e: WireError) -> Self {
        match e {
            WireError::WindowOverflow { .. } | WireError::StreamCorrupt(_) => {
                ClientError::Data(e.to_string())
            }
            other => ClientError::Protocol(other.to_string()),
        }
    }
}

impl From<io::Error> for ClientError {
    fn from(e: io::Error) -> Self {
        ClientError::Network(e.to_string())
    }
}

/// One connection to the server. Requests run one at a time; events pushed
/// for subscriptions are surfaced through [`Connection::next_event`].
pub struct Connection {
    stream: TcpStream,
    decoder: FrameDecoder,
    next_request_id: u32,
    timeout: Duration,
}

const POLL_INTERVAL: Duration = Duration::from_millis(100);

impl Connection {
    pub fn connect(config: &ClientConfig) -> Result<Connection, ClientError> {
        let timeout = Duration::from_millis(config.timeout_ms.max(1));
        let addrs: Vec<_> = (config.host.as_str(), config.port)
            .to_socket_addrs()
            .map_err(|e| ClientError::Network(format!("resolve {}: {e}", config.host)))?
            .collect();
        let mut last = None;
        for addr in addrs {
            match TcpStream::connect_timeout(&addr, timeout) {
                Ok(stream) => {
                    stream.set_read_timeout(Some(POLL_INTERVAL))?;
                    stream.set_nodelay(true).ok();
                    return Ok(Connection {
                        stream,
                        decoder: FrameDecoder::new(),
                        next_request_id: 1,
                        timeout,
                    });
                }
                Err(e) => last = Some(e),
            }
        }
        Err(ClientError::Network(match last {
            Some(e) => format!("connect {}:{}: {e}", config.host, config.port),
            None => format!("no addresses for {}", config.host),
        }))
    }

    fn fresh_id(&mut self) -> u32 {
        let id = self.next_request_id;
        self.next_request_id = self.next_request_id.wrapping_add(1);
        id
    }

    fn send_frame(
        &mut self,
        kind: MessageKind,
        flags: u8,
        request_id: u32,
        payload: &[u8],
    ) -> Result<(), ClientError> {
        let frame = frame_message(kind, flags, request_id, payload)?;
        self.stream.write_all(&frame)?;
        Ok(())
    }

    /// Reads one frame, waiting at most until `deadline`; `None` when the
    /// deadline passes first.
    fn read_frame(&mut self, deadline: Instant) -> Result<Option<WireMessage>, ClientError> {
        let mut buf = [0u8; 64 * 1024];
        loop {
            if let Some(message) = self.decoder.next_frame()? {
                return Ok(Some(message));
            }
            if Instant::now() >= deadline {
                return Ok(None);
            }
            match self.stream.read(&mut buf) {
                Ok(0) => return Err(ClientError::Network("connection closed by server".into())),
                Ok(n) => self.decoder.extend(&buf[..n]),
                Err(ref e)
                    if matches!(
                        e.kind(),
                        io::ErrorKind::WouldBlock
                            | io::ErrorKind::TimedOut
                            | io::ErrorKind::Interrupted
                    ) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn read_frame_required(&mut self, deadline: Instant) -> Result<WireMessage, ClientError> {
        self.read_frame(deadline)?
            .ok_or_else(|| ClientError::Network("request timed out".into()))
    }

    /// Reads frames until the terminal Reply or Error for `request_id`,
    /// ignoring interleaved event pushes.
    fn read_terminal(&mut self, request_id: u32) -> Result<WireMessage, ClientError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            let message = self.read_frame_required(deadline)?;
            match message.header.kind {
                MessageKind::Reply | MessageKind::Error
                    if message.header.request_id == request_id =>
                {
                    return Ok(message)
                }
                MessageKind::Event => {}
                _ => {
                    return Err(ClientError::Protocol(format!(
                        "unexpected {:?} frame for request {}",
                        message.header.kind, message.header.request_id
                    )))
                }
            }
        }
    }

    fn expect_reply(&mut self, request_id: u32) -> Result<WireMessage, ClientError> {
        let message = self.read_terminal(request_id)?;
        if message.header.kind == MessageKind::Error {
            let status = decode_status(&message.payload)?;
            return Err(ClientError::Server(status));
        }
        Ok(message)
    }

    /// Invokes `execute`. The status comes back verbatim, errors included.
    pub fn execute(&mut self, operation: i16, info: &PatientInfo) -> Result<StatusText, ClientError> {
        let id = self.fresh_id();
        let payload = Request::Execute {
            operation,
            info: info.clone(),
        }
        .encode()?;
        self.send_frame(MessageKind::Request, 0, id, &payload)?;
        let reply = self.read_terminal(id)?;
        Ok(decode_status(&reply.payload)?)
    }

    /// Invokes `execute2`, returning the stored record.
    pub fn execute2(&mut self, operation: i16, info: &PatientInfo) -> Result<PatientInfo, ClientError> {
        let id = self.fresh_id();
        let payload = Request::Execute2 {
            operation,
            info: info.clone(),
        }
        .encode()?;
        self.send_frame(MessageKind::Request, 0, id, &payload)?;
        let reply = self.expect_reply(id)?;
        Ok(crate::wire::unmarshal_info(&reply.payload)?)
    }

    /// Invokes `downloadFile` and reassembles the octet stream.
    pub fn download(&mut self, file_name: &str) -> Result<Vec<u8>, ClientError> {
        let id = self.fresh_id();
        let payload = Request::DownloadFile {
            file_name: file_name.into(),
        }
        .encode()?;
        self.send_frame(MessageKind::Request, 0, id, &payload)?;
        let reply = self.expect_reply(id)?;
        let header = DownloadHeader::decode(&reply.payload)?;

        let mut reassembler = StreamReassembler::default();
        // The deadline restarts on every received frame; the per-request
        // timeout bounds gaps, not the whole transfer.
        loop {
            let deadline = Instant::now() + self.timeout;
            let message = self.read_frame_required(deadline)?;
            match message.header.kind {
                MessageKind::StreamChunk if message.header.request_id == id => {
                    let chunk = StreamChunk::decode_payload(
                        &message.payload,
                        message.header.is_last_chunk(),
                    )?;
                    if let FeedOutcome::Complete(bytes) = reassembler.feed(chunk)? {
                        if bytes.len() as u64 != header.total_length {
                            return Err(ClientError::Data(format!(
                                "stream length {} does not match announced {}",
                                bytes.len(),
                                header.total_length
                            )));
                        }
                        return Ok(bytes);
                    }
                }
                MessageKind::Event => {}
                MessageKind::Error if message.header.request_id == id => {
                    let status = decode_status(&message.payload)?;
                    return Err(ClientError::Server(status));
                }
                _ => {
                    return Err(ClientError::Protocol(format!(
                        "unexpected {:?} frame during download",
                        message.header.kind
                    )))
                }
            }
        }
    }

    /// Invokes `uploadFile`, streaming `content` in chunks.
    pub fn upload(
        &mut self,
        file_name: &str,
        patient_id: &str,
        content: &[u8],
    ) -> Result<StatusText, ClientError> {
        let id = self.fresh_id();
        let payload = Request::UploadFile {
            file_name: file_name.into(),
            patient_id: patient_id.into(),
            total_length: content.len() as u64,
        }
        .encode()?;
        self.send_frame(MessageKind::Request, 0, id, &payload)?;
        for chunk in crate::wire::chunk_stream(content, crate::server::DEFAULT_CHUNK_SIZE as usize)
        {
            let flags = if chunk.last { FLAG_LAST_CHUNK } else { 0 };
            self.send_frame(MessageKind::StreamChunk, flags, id, &chunk.encode_payload())?;
        }
        let reply = self.read_terminal(id)?;
        Ok(decode_status(&reply.payload)?)
    }

    /// Subscribes this connection to a channel; events arrive as frames
    /// read by [`Connection::next_event`].
    pub fn subscribe(&mut self, channel: &str) -> Result<u64, ClientError> {
        let id = self.fresh_id();
        let mut payload = Vec::new();
        crate::wire::codec::put_str(&mut payload, channel);
        self.send_frame(MessageKind::Subscribe, 0, id, &payload)?;
        let reply = self.expect_reply(id)?;
        Ok(decode_subscription_id(&reply.payload)?)
    }

    /// Ends a subscription made on this connection.
    pub fn unsubscribe(&mut self, subscription_id: u64) -> Result<(), ClientError> {
        let id = self.fresh_id();
        let mut payload = Vec::new();
        crate::wire::codec::put_u64(&mut payload, subscription_id);
        self.send_frame(MessageKind::Unsubscribe, 0, id, &payload)?;
        let reply = self.read_terminal(id)?;
        decode_status(&reply.payload)?;
        Ok(())
    }

    /// Waits up to `wait` for the next pushed event; `None` on timeout.
    pub fn next_event(&mut self, wait: Duration) -> Result<Option<Event>, ClientError> {
        let deadline = Instant::now() + wait;
        match self.read_frame(deadline)? {
            None => Ok(None),
            Some(message) if message.header.kind == MessageKind::Event => {
                Ok(Some(Event::decode(&message.payload)?))
            }
            Some(message) => Err(ClientError::Protocol(format!(
                "unexpected {:?} frame while watching",
                message.header.kind
            ))),
        }
    }
}
