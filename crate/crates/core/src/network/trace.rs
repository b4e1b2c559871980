use std::fmt;

use crate::rng::mix64;

use super::{JobClass, StationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceKind {
    ExternalArrival,
    StationArrival,
    ServiceStart,
    Preempted,
    ServiceCompletion,
    Lost,
    Dropped,
    Departure,
    EndOfWarmup,
    EndOfRun,
}

impl TraceKind {
    fn name(self) -> &'static str {
        match self {
            TraceKind::ExternalArrival => "external_arrival",
            TraceKind::StationArrival => "station_arrival",
            TraceKind::ServiceStart => "service_start",
            TraceKind::Preempted => "preempted",
            TraceKind::ServiceCompletion => "service_completion",
            TraceKind::Lost => "lost",
            TraceKind::Dropped => "dropped",
            TraceKind::Departure => "departure",
            TraceKind::EndOfWarmup => "end_of_warmup",
            TraceKind::EndOfRun => "end_of_run",
        }
    }
}

/// One line of the debug event trace.
///
/// `seq` is the sequence number of the calendar event being dispatched;
/// `serial` numbers jobs within their class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub seq: u64,
    pub kind: TraceKind,
    pub job: Option<(u64, JobClass, u64)>,
    pub station: Option<StationKind>,
}

impl TraceRecord {
    pub fn class(&self) -> Option<JobClass> {
        self.job.map(|(_, c, _)| c)
    }
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9} {} {}", self.time, self.seq, self.kind.name())?;
        match self.job {
            Some((id, class, serial)) => write!(f, " {id} {class}#{serial}")?,
            None => f.write_str(" - -")?,
        }
        match self.station {
            Some(s) => write!(f, " {s}"),
            None => f.write_str(" -"),
        }
    }
}

/// Order-sensitive hash of a trace, over exact bit patterns.
pub fn trace_hash(records: &[TraceRecord]) -> u64 {
    records.iter().fold(0u64, |h, r| {
        let mut h = mix64(h ^ r.time.to_bits());
        h = mix64(h ^ r.seq);
        h = mix64(h ^ r.kind as u64);
        if let Some((id, class, serial)) = r.job {
            h = mix64(h ^ id);
            h = mix64(h ^ class as u64);
            h = mix64(h ^ serial);
        }
        mix64(h ^ r.station.map_or(7, |s| s as u64))
    })
}
