//! Publish/subscribe: two sinks on one channel, per-subscriber queues.
//!
//! ```bash
//! cargo run --example event_channels
//! ```

use std::sync::Arc;
use std::time::Duration;

use domim::events::{Event, EventKind, EventService, EventSink};

struct Printer(&'static str);

impl EventSink for Printer {
    fn deliver(&self, event: &Event) -> bool {
        println!(
            "[{}] seq {} kind {} patient {} file {:?}",
            self.0,
            event.seq,
            event.kind.as_str(),
            event.patient_id,
            event.file_name
        );
        true
    }
}

fn main() {
    let service = Arc::new(EventService::new());
    service.subscribe("image.stored", Arc::new(Printer("alpha")));
    let beta = service.subscribe("image.stored", Arc::new(Printer("beta")));

    for i in 0..3 {
        let n = service.publish(Event::new(EventKind::ImageStored, format!("p{i}"), "scan.dcm"));
        println!("published event {i} to {n} subscriber(s)");
    }

    service.unsubscribe(beta);
    let n = service.publish(Event::new(EventKind::ImageStored, "p3", "scan.dcm"));
    println!("after unsubscribe: published to {n} subscriber(s)");

    // Give the delivery workers a moment before the process ends.
    std::thread::sleep(Duration::from_millis(200));
}
