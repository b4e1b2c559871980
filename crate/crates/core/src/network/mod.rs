//! The cognitive-radio queueing network.
//!
//! Primary (PU) and secondary (SU) requests pass through up to three
//! tandem stations: security (SEC, optional), admission control (AC) and
//! the channel stage (CH). PUs preempt SUs at every station. Under
//! [`Discipline::PreemptiveResume`] an interrupted SU later continues its
//! remaining work (a cloud buffer keeps it); under
//! [`Discipline::PreemptiveRepeatIdentical`] it starts over with the same
//! service requirement.

mod config;
mod sim;
mod trace;

pub use config::{NetworkConfig, StationConfig};
pub use sim::{run_replication, JobRecord, Network, Outcome, RunOptions, RunOutput, VisitRecord};
pub use trace::{trace_hash, TraceKind, TraceRecord};

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JobClass {
    Pu,
    Su,
}

impl JobClass {
    pub const ALL: [JobClass; 2] = [JobClass::Pu, JobClass::Su];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for JobClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JobClass::Pu => "PU",
            JobClass::Su => "SU",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StationKind {
    Sec,
    Ac,
    Ch,
}

impl StationKind {
    pub const ALL: [StationKind; 3] = [StationKind::Sec, StationKind::Ac, StationKind::Ch];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StationKind::Sec => "SEC",
            StationKind::Ac => "AC",
            StationKind::Ch => "CH",
        })
    }
}

/// Preemption discipline, applied at every station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Discipline {
    /// PR: the cloud platform stores interrupted work.
    PreemptiveResume,
    /// PRI: no cloud; interrupted work restarts with the identical demand.
    PreemptiveRepeatIdentical,
}

impl Discipline {
    pub fn short_name(self) -> &'static str {
        match self {
            Discipline::PreemptiveResume => "PR",
            Discipline::PreemptiveRepeatIdentical => "PRI",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Discipline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PR" => Ok(Discipline::PreemptiveResume),
            "PRI" => Ok(Discipline::PreemptiveRepeatIdentical),
            other => Err(format!("unknown discipline `{other}` (expected PR or PRI)")),
        }
    }
}
