use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    ContentionStart,
    Request,
    Collision,
    Grant,
    Transmit,
    PiggybackRequest,
    Expire,
    Drop,
    Idle,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::ContentionStart => "contention_start",
            EventKind::Request => "request",
            EventKind::Collision => "collision",
            EventKind::Grant => "grant",
            EventKind::Transmit => "transmit",
            EventKind::PiggybackRequest => "piggyback_request",
            EventKind::Expire => "expire",
            EventKind::Drop => "drop",
            EventKind::Idle => "idle",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub frame: u64,
    pub ss: usize,
    pub kind: EventKind,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.frame, self.ss, self.kind, self.detail
        )
    }
}

/// Renders events one per line, tab separated, with a header.
pub fn render(events: &[TraceEvent]) -> String {
    let mut out = String::from("frame\tss\tevent\tdetail\n");
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}
