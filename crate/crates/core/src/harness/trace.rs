use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::hash::Hasher;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use crate::error::{Error, Result};
use crate::geometry::{NetworkTopology, StationId};
use crate::sinr::{Reception, SinrEngine, SinrParams};

pub const TRACE_HEADER: &str = "round,station,event,detail1,detail2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// `detail1` is a protocol-specific message tag.
    Transmit,
    /// `detail1` is the decoded sender.
    Receive,
    /// `detail1` is the color, `detail2` the doubling count.
    QuitColor,
    /// `detail1` is 1 for a spontaneous wake, 0 for a wake by message.
    Wake,
    /// `detail1` is the sender, `detail2` the payload.
    Inform,
    /// `detail1` is the station's local phase index, `detail2` the global one.
    PhaseBoundary,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Transmit => "transmit",
            EventKind::Receive => "receive",
            EventKind::QuitColor => "quit-color",
            EventKind::Wake => "wake",
            EventKind::Inform => "inform",
            EventKind::PhaseBoundary => "phase-boundary",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "transmit" => EventKind::Transmit,
            "receive" => EventKind::Receive,
            "quit-color" => EventKind::QuitColor,
            "wake" => EventKind::Wake,
            "inform" => EventKind::Inform,
            "phase-boundary" => EventKind::PhaseBoundary,
            other => return Err(Error::invalid(format!("unknown trace event `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub round: u64,
    pub station: StationId,
    pub kind: EventKind,
    pub detail1: f64,
    pub detail2: f64,
}

impl TraceEvent {
    /// The canonical CSV line, without newline. Reals use the shortest
    /// representation that round-trips.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:?},{:?}",
            self.round, self.station, self.kind, self.detail1, self.detail2
        )
    }
}

/// Event log of one trial plus a running digest of its canonical CSV.
///
/// With `keep_events` off only the digest is maintained, which is what
/// large sweeps use.
#[derive(Debug, Clone)]
pub struct Trace {
    events: Vec<TraceEvent>,
    keep_events: bool,
    hasher: XxHash64,
    count: u64,
    last_round: u64,
    line: String,
}

impl Trace {
    pub fn new(keep_events: bool) -> Self {
        let mut hasher = XxHash64::with_seed(0);
        hasher.write(TRACE_HEADER.as_bytes());
        hasher.write(b"\n");
        Trace {
            events: Vec::new(),
            keep_events,
            hasher,
            count: 0,
            last_round: 0,
            line: String::new(),
        }
    }

    pub fn push(&mut self, event: TraceEvent) -> Result<()> {
        if event.round < self.last_round {
            return Err(Error::InvariantViolation {
                invariant: "trace-rounds-nondecreasing",
                round: event.round,
                detail: format!("event after round {}", self.last_round),
            });
        }
        self.last_round = event.round;
        self.line.clear();
        let _ = writeln!(
            self.line,
            "{},{},{},{:?},{:?}",
            event.round, event.station, event.kind, event.detail1, event.detail2
        );
        self.hasher.write(self.line.as_bytes());
        self.count += 1;
        if self.keep_events {
            self.events.push(event);
        }
        Ok(())
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn keeps_events(&self) -> bool {
        self.keep_events
    }

    /// Number of events seen, kept or not.
    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// XxHash64 of the canonical CSV, header included.
    pub fn hash(&self) -> u64 {
        self.hasher.finish()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 24 + TRACE_HEADER.len() + 1);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for e in &self.events {
            out.push_str(&e.csv_line());
            out.push('\n');
        }
        out
    }
}

/// Hash of a CSV document as `Trace::hash` computes it.
pub fn csv_hash(csv: &str) -> u64 {
    let mut hasher = XxHash64::with_seed(0);
    hasher.write(csv.as_bytes());
    hasher.finish()
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceEvent>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{TRACE_HEADER}`"),
            })
        }
    }
    let mut events = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, found {}", fields.len())));
        }
        events.push(TraceEvent {
            round: fields[0].parse().map_err(|e| parse_err(format!("round: {e}")))?,
            station: fields[1].parse().map_err(|e| parse_err(format!("station: {e}")))?,
            kind: fields[2].parse().map_err(|e: Error| parse_err(e.to_string()))?,
            detail1: fields[3].parse().map_err(|e| parse_err(format!("detail1: {e}")))?,
            detail2: fields[4].parse().map_err(|e| parse_err(format!("detail2: {e}")))?,
        });
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub rounds_checked: u64,
    pub receptions_checked: u64,
    /// First round whose recorded receptions differ from the re-resolved ones.
    pub first_mismatch: Option<u64>,
}

impl ReplayReport {
    pub fn is_exact(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Re-resolves every recorded transmit set and compares the receptions.
pub fn replay_trace(events: &[TraceEvent], topology: &NetworkTopology, params: &SinrParams) -> Result<ReplayReport> {
    let mut by_round: BTreeMap<u64, (Vec<StationId>, Vec<Reception>)> = BTreeMap::new();
    for e in events {
        match e.kind {
            EventKind::Transmit => by_round.entry(e.round).or_default().0.push(e.station),
            EventKind::Receive => by_round.entry(e.round).or_default().1.push(Reception {
                receiver: e.station,
                sender: e.detail1 as StationId,
            }),
            _ => {}
        }
    }
    let mut engine = SinrEngine::new(topology, params)?;
    let mut report = ReplayReport {
        rounds_checked: 0,
        receptions_checked: 0,
        first_mismatch: None,
    };
    for (round, (transmitters, mut recorded)) in by_round {
        recorded.sort_unstable();
        let got = engine.resolve(round, &transmitters)?;
        report.rounds_checked += 1;
        report.receptions_checked += recorded.len() as u64;
        if got != recorded.as_slice() && report.first_mismatch.is_none() {
            report.first_mismatch = Some(round);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(round: u64, station: usize, kind: EventKind, d1: f64) -> TraceEvent {
        TraceEvent {
            round,
            station,
            kind,
            detail1: d1,
            detail2: 0.0,
        }
    }

    #[test]
    fn hash_matches_csv() {
        let mut t = Trace::new(true);
        t.push(ev(0, 1, EventKind::Transmit, 0.0)).unwrap();
        t.push(ev(0, 0, EventKind::Receive, 1.0)).unwrap();
        t.push(ev(3, 2, EventKind::QuitColor, 0.0125)).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv_hash(&csv), t.hash());
        assert!(csv.contains("3,2,quit-color,0.0125,0.0\n"));
        assert_eq!(parse_trace_csv(&csv).unwrap(), t.events());
    }

    #[test]
    fn rounds_must_not_decrease() {
        let mut t = Trace::new(false);
        t.push(ev(5, 0, EventKind::Wake, 1.0)).unwrap();
        assert!(matches!(
            t.push(ev(4, 0, EventKind::Wake, 1.0)),
            Err(Error::InvariantViolation { round: 4, .. })
        ));
        assert_eq!(t.len(), 1);
        assert!(t.events().is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = format!("{TRACE_HEADER}\n0,1,transmit,0.0,0.0\n1,x,receive,0.0,0.0\n");
        match parse_trace_csv(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
