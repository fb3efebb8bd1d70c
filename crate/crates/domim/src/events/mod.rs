//! Named-channel publish/subscribe with per-subscriber FIFO push delivery.
//!
//! Each subscription owns a bounded queue and a delivery worker, so a slow
//! sink never delays the publisher or other sinks. When a subscriber's
//! queue overflows it is disconnected rather than letting it block
//! publishing; events are ephemeral, with no replay for late subscribers.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread;

use crate::wire::codec::{put_str, put_u64, Reader};
use crate::wire::WireError;

/// Queue depth per subscription before the subscriber is disconnected.
pub const DEFAULT_QUEUE_CAPACITY: usize = 256;

/// The four notification kinds the server publishes. Each kind doubles as
/// a built-in channel of the same name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    PatientInserted,
    PatientUpdated,
    PatientDeleted,
    ImageStored,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::PatientInserted => "patient.inserted",
            EventKind::PatientUpdated => "patient.updated",
            EventKind::PatientDeleted => "patient.deleted",
            EventKind::ImageStored => "image.stored",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "patient.inserted" => Some(EventKind::PatientInserted),
            "patient.updated" => Some(EventKind::PatientUpdated),
            "patient.deleted" => Some(EventKind::PatientDeleted),
            "image.stored" => Some(EventKind::ImageStored),
            _ => None,
        }
    }
}

/// One notification pushed to channel subscribers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub channel: String,
    pub kind: EventKind,
    pub patient_id: String,
    /// Blob name for `image.stored`, empty otherwise.
    pub file_name: String,
    pub timestamp_ms: u64,
    /// Channel-local sequence number, assigned by the service in publish
    /// order starting at 0.
    pub seq: u64,
}

impl Event {
    /// Event on the kind's built-in channel; `seq` is assigned on publish.
    pub fn new(kind: EventKind, patient_id: impl Into<String>, file_name: impl Into<String>) -> Self {
        Event {
            channel: kind.as_str().to_string(),
            kind,
            patient_id: patient_id.into(),
            file_name: file_name.into(),
            timestamp_ms: crate::util::now_ms(),
            seq: 0,
        }
    }

    /// Payload layout of an Event frame: channel, kind, patient id, and
    /// file name as length-prefixed strings, then timestamp and sequence
    /// number as 64-bit little-endian.
    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        put_str(&mut buf, &self.channel);
        put_str(&mut buf, self.kind.as_str());
        put_str(&mut buf, &self.patient_id);
        put_str(&mut buf, &self.file_name);
        put_u64(&mut buf, self.timestamp_ms);
        put_u64(&mut buf, self.seq);
        buf
    }

    pub fn decode(payload: &[u8]) -> Result<Event, WireError> {
        let mut reader = Reader::new(payload);
        let channel = reader.get_str()?;
        let kind = EventKind::parse(&reader.get_str()?)
            .ok_or(WireError::InvalidValue("unknown event kind"))?;
        let patient_id = reader.get_str()?;
        let file_name = reader.get_str()?;
        let timestamp_ms = reader.get_u64()?;
        let seq = reader.get_u64()?;
        reader.finish()?;
        Ok(Event {
            channel,
            kind,
            patient_id,
            file_name,
            timestamp_ms,
            seq,
        })
    }
}

/// Delivery endpoint for one subscriber.
///
/// `deliver` runs on the subscription's own worker thread and may block;
/// back-pressure accumulates in the subscription queue, never at the
/// publisher. Returning `false` ends the subscription.
pub trait EventSink: Send + Sync {
    fn deliver(&self, event: &Event) -> bool;

    /// Called when the service disconnects the subscriber (queue overflow).
    fn disconnect(&self) {}
}

/// Opaque subscription token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubscriptionId(pub u64);

struct SubControl {
    cancelled: AtomicBool,
    /// Held while a deliver call is in flight; unsubscribe takes it to
    /// guarantee no delivery continues past its return.
    delivering: Mutex<()>,
    sink: Arc<dyn EventSink>,
}

struct Subscriber {
    id: u64,
    queue: SyncSender<Event>,
    control: Arc<SubControl>,
}

#[derive(Default)]
struct ChannelState {
    next_seq: u64,
    subscribers: Vec<Subscriber>,
}

#[derive(Default)]
struct ServiceState {
    channels: HashMap<String, ChannelState>,
    /// Subscription id to channel name, for unsubscribe lookups.
    routes: HashMap<u64, String>,
    next_id: u64,
}

/// The event broker. Safe to share behind an [`Arc`] and call from many
/// threads.
pub struct EventService {
    state: Mutex<ServiceState>,
    queue_capacity: usize,
}

impl Default for EventService {
    fn default() -> Self {
        EventService::new()
    }
}

impl EventService {
    pub fn new() -> Self {
        EventService::with_queue_capacity(DEFAULT_QUEUE_CAPACITY)
    }

    pub fn with_queue_capacity(queue_capacity: usize) -> Self {
        assert!(queue_capacity >= 1);
        EventService {
            state: Mutex::new(ServiceState::default()),
            queue_capacity,
        }
    }

    /// Subscribes `sink` to a channel. The sink receives every event
    /// published after this call returns, in publish order; nothing is
    /// replayed.
    pub fn subscribe(self: &Arc<Self>, channel: &str, sink: Arc<dyn EventSink>) -> SubscriptionId {
        assert!(!channel.is_empty(), "channel name must be nonempty");
        let (queue, receiver) = sync_channel::<Event>(self.queue_capacity);
        let control = Arc::new(SubControl {
            cancelled: AtomicBool::new(false),
            delivering: Mutex::new(()),
            sink,
        });

        let id = {
            let mut state = self.state.lock().unwrap();
            let id = state.next_id;
            state.next_id += 1;
            state.routes.insert(id, channel.to_string());
            state
                .channels
                .entry(channel.to_string())
                .or_default()
                .subscribers
                .push(Subscriber {
                    id,
                    queue,
                    control: Arc::clone(&control),
                });
            id
        };

        let service = Arc::clone(self);
        thread::Builder::new()
            .name(format!("event-sub-{id}"))
            .spawn(move || {
                while let Ok(event) = receiver.recv() {
                    let _guard = control.delivering.lock().unwrap();
                    if control.cancelled.load(Ordering::SeqCst) {
                        break;
                    }
                    if !control.sink.deliver(&event) {
                        control.cancelled.store(true, Ordering::SeqCst);
                        service.remove(id);
                        break;
                    }
                }
            })
            .expect("spawn event delivery thread");

        SubscriptionId(id)
    }

    /// Ends a subscription; events queued but undelivered are dropped and
    /// none are delivered after this returns. Unknown ids are a no-op.
    pub fn unsubscribe(&self, id: SubscriptionId) {
        if let Some(control) = self.remove(id.0) {
            control.cancelled.store(true, Ordering::SeqCst);
            // Wait out any deliver already in flight.
            drop(control.delivering.lock().unwrap());
        }
    }

    /// Publishes to every current subscriber of the event's channel and
    /// returns how many subscriptions were targeted. A subscriber whose
    /// queue is full is disconnected; the publisher never blocks on sinks.
    pub fn publish(&self, mut event: Event) -> usize {
        let mut overflowed: Vec<Arc<SubControl>> = Vec::new();
        let targeted;
        {
            let mut state = self.state.lock().unwrap();
            let channel = state.channels.entry(event.channel.clone()).or_default();
            event.seq = channel.next_seq;
            channel.next_seq += 1;

            targeted = channel.subscribers.len();
            let mut dead: Vec<u64> = Vec::new();
            for sub in &channel.subscribers {
                match sub.queue.try_send(event.clone()) {
                    Ok(()) => {}
                    Err(TrySendError::Full(_)) | Err(TrySendError::Disconnected(_)) => {
                        sub.control.cancelled.store(true, Ordering::SeqCst);
                        overflowed.push(Arc::clone(&sub.control));
                        dead.push(sub.id);
                    }
                }
            }
            if !dead.is_empty() {
                channel.subscribers.retain(|s| !dead.contains(&s.id));
                for id in dead {
                    state.routes.remove(&id);
                }
            }
        }
        for control in overflowed {
            control.sink.disconnect();
        }
        targeted
    }

    fn remove(&self, id: u64) -> Option<Arc<SubControl>> {
        let mut state = self.state.lock().unwrap();
        let channel = state.routes.remove(&id)?;
        let subs = &mut state.channels.get_mut(&channel)?.subscribers;
        let pos = subs.iter().position(|s| s.id == id)?;
        Some(subs.remove(pos).control)
    }
}
