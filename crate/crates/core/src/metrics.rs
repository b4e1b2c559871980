//! Per-replication observation and cross-replication aggregation.
//!
//! The network reports what happens as a stream of [`Observation`]s. An
//! [`Observer`] folds them into counters, sample sums and time-weighted
//! integrals over the window `[warmup, end]`; observations stamped before
//! the warmup update state (current queue lengths, busy servers) but do
//! not enter the statistics.

use std::collections::BTreeMap;
use std::fmt;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::network::{JobClass, StationKind};

/// Why a job left the network without completing its path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropKind {
    Security,
    Admission,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    ExternalArrival {
        class: JobClass,
        time: f64,
    },
    /// A job reached a station; `accepted` is false when the buffer was full.
    StationArrival {
        station: StationKind,
        class: JobClass,
        time: f64,
        accepted: bool,
    },
    QueueLength {
        station: StationKind,
        class: JobClass,
        time: f64,
        len: usize,
    },
    BusyServers {
        station: StationKind,
        time: f64,
        busy: usize,
    },
    Preempted {
        station: StationKind,
        class: JobClass,
        time: f64,
    },
    StationDeparture {
        station: StationKind,
        class: JobClass,
        time: f64,
        waiting: f64,
        sojourn: f64,
    },
    Dropped {
        station: StationKind,
        class: JobClass,
        time: f64,
        kind: DropKind,
    },
    SystemDeparture {
        class: JobClass,
        time: f64,
        waiting: f64,
        response: f64,
    },
}

impl Observation {
    pub fn time(&self) -> f64 {
        match *self {
            Observation::ExternalArrival { time, .. }
            | Observation::StationArrival { time, .. }
            | Observation::QueueLength { time, .. }
            | Observation::BusyServers { time, .. }
            | Observation::Preempted { time, .. }
            | Observation::StationDeparture { time, .. }
            | Observation::Dropped { time, .. }
            | Observation::SystemDeparture { time, .. } => time,
        }
    }
}

/// Piecewise-constant signal integrated over `[warmup, ∞)`.
#[derive(Debug, Clone, Copy, Default)]
struct TimeWeighted {
    value: f64,
    last: f64,
    area: f64,
}

impl TimeWeighted {
    fn advance(&mut self, t: f64, warmup: f64) {
        let from = self.last.max(warmup);
        if t > from {
            self.area += self.value * (t - from);
        }
        self.last = self.last.max(t);
    }

    fn set(&mut self, t: f64, value: f64, warmup: f64) {
        self.advance(t, warmup);
        self.value = value;
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassStationAcc {
    offered: u64,
    accepted: u64,
    lost: u64,
    dropped: u64,
    departures: u64,
    preemptions: u64,
    waiting_sum: f64,
    sojourn_sum: f64,
    queue: TimeWeighted,
}

#[derive(Debug, Clone, Copy, Default)]
struct StationAcc {
    servers: usize,
    on_path: bool,
    busy: TimeWeighted,
    classes: [ClassStationAcc; 2],
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassAcc {
    external_arrivals: u64,
    departures: u64,
    security_drops: u64,
    admission_drops: u64,
    waiting_sum: f64,
    response_sum: f64,
}

/// Accumulates the statistics of one replication.
#[derive(Debug, Clone)]
pub struct Observer {
    warmup: f64,
    stations: [StationAcc; 3],
    classes: [ClassAcc; 2],
}

impl Observer {
    /// `layout` lists the stations on the routing path with their server counts.
    pub fn new(layout: &[(StationKind, usize)], warmup: f64) -> Self {
        let mut stations = [StationAcc::default(); 3];
        for &(kind, servers) in layout {
            let s = &mut stations[kind.index()];
            s.servers = servers;
            s.on_path = true;
        }
        Self {
            warmup,
            stations,
            classes: [ClassAcc::default(); 2],
        }
    }

    pub fn warmup(&self) -> f64 {
        self.warmup
    }

    pub fn observe(&mut self, obs: &Observation) -> Result<()> {
        let warmup = self.warmup;
        let counted = obs.time() >= warmup;
        match *obs {
            Observation::ExternalArrival { class, .. } => {
                if counted {
                    self.classes[class.index()].external_arrivals += 1;
                }
            }
            Observation::StationArrival {
                station,
                class,
                accepted,
                ..
            } => {
                if counted {
                    let acc = &mut self.stations[station.index()].classes[class.index()];
                    acc.offered += 1;
                    if accepted {
                        acc.accepted += 1;
                    } else {
                        acc.lost += 1;
                    }
                }
            }
            Observation::QueueLength {
                station,
                class,
                time,
                len,
            } => {
                self.stations[station.index()].classes[class.index()]
                    .queue
                    .set(time, len as f64, warmup);
            }
            Observation::BusyServers {
                station, time, busy, ..
            } => {
                self.stations[station.index()]
                    .busy
                    .set(time, busy as f64, warmup);
            }
            Observation::Preempted { station, class, .. } => {
                if counted {
                    self.stations[station.index()].classes[class.index()].preemptions += 1;
                }
            }
            Observation::StationDeparture {
                station,
                class,
                waiting,
                sojourn,
                ..
            } => {
                if !(waiting >= 0.0) || !(sojourn >= 0.0) {
                    return Err(Error::Logic(format!(
                        "negative waiting ({waiting}) or sojourn ({sojourn}) at {station}"
                    )));
                }
                if counted {
                    let acc = &mut self.stations[station.index()].classes[class.index()];
                    acc.departures += 1;
                    acc.waiting_sum += waiting;
                    acc.sojourn_sum += sojourn;
                }
            }
            Observation::Dropped {
                station,
                class,
                kind,
                ..
            } => {
                if counted {
                    self.stations[station.index()].classes[class.index()].dropped += 1;
                    let c = &mut self.classes[class.index()];
                    match kind {
                        DropKind::Security => c.security_drops += 1,
                        DropKind::Admission => c.admission_drops += 1,
                    }
                }
            }
            Observation::SystemDeparture {
                class,
                waiting,
                response,
                ..
            } => {
                if !(waiting >= 0.0) || !(response >= 0.0) {
                    return Err(Error::Logic(format!(
                        "negative end-to-end waiting ({waiting}) or response ({response})"
                    )));
                }
                if counted {
                    let c = &mut self.classes[class.index()];
                    c.departures += 1;
                    c.waiting_sum += waiting;
                    c.response_sum += response;
                }
            }
        }
        Ok(())
    }

    /// Closes all integrals at `end` and computes the means.
    pub fn finalize(mut self, end: f64) -> Result<RunStats> {
        let window = end - self.warmup;
        if !(window > 0.0) {
            return Err(Error::Domain(format!(
                "observed window must be positive (end {end}, warmup {})",
                self.warmup
            )));
        }
        let warmup = self.warmup;
        let mut stations = Vec::new();
        let mut class_queue = [0.0f64; 2];
        let mut class_losses = [0u64; 2];
        for kind in StationKind::ALL {
            let acc = &mut self.stations[kind.index()];
            if !acc.on_path {
                continue;
            }
            acc.busy.advance(end, warmup);
            let mut classes = [ClassStationStats::default(); 2];
            for class in JobClass::ALL {
                let a = &mut acc.classes[class.index()];
                a.queue.advance(end, warmup);
                let l = a.queue.area / window;
                let wq = mean(a.waiting_sum, a.departures);
                let lambda = a.accepted as f64 / window;
                let residual = match wq {
                    Some(wq) if l > 0.0 => Some((l - lambda * wq).abs() / l),
                    _ => None,
                };
                class_queue[class.index()] += l;
                class_losses[class.index()] += a.lost;
                classes[class.index()] = ClassStationStats {
                    offered: a.offered,
                    accepted: a.accepted,
                    lost: a.lost,
                    dropped: a.dropped,
                    departures: a.departures,
                    preemptions: a.preemptions,
                    mean_waiting_time: wq,
                    mean_response_time: mean(a.sojourn_sum, a.departures),
                    mean_queue_length: l,
                    loss_probability: ratio(a.lost, a.offered),
                    littles_law_residual: residual,
                };
            }
            stations.push(StationStats {
                kind,
                servers: acc.servers,
                utilization: acc.busy.area / (acc.servers as f64 * window),
                classes,
            });
        }

        let classes = JobClass::ALL.map(|class| {
            let c = &self.classes[class.index()];
            ClassStats {
                external_arrivals: c.external_arrivals,
                departures: c.departures,
                losses: class_losses[class.index()],
                security_drops: c.security_drops,
                admission_drops: c.admission_drops,
                mean_waiting_time: mean(c.waiting_sum, c.departures),
                mean_response_time: mean(c.response_sum, c.departures),
                mean_queue_length: class_queue[class.index()],
                loss_probability: ratio(class_losses[class.index()], c.external_arrivals),
                throughput: c.departures as f64 / window,
            }
        });

        let departures: u64 = self.classes.iter().map(|c| c.departures).sum();
        let arrivals: u64 = self.classes.iter().map(|c| c.external_arrivals).sum();
        let total = TotalStats {
            mean_waiting_time: mean(self.classes.iter().map(|c| c.waiting_sum).sum(), departures),
            mean_response_time: mean(
                self.classes.iter().map(|c| c.response_sum).sum(),
                departures,
            ),
            mean_queue_length: class_queue.iter().sum(),
            loss_probability: ratio(class_losses.iter().sum(), arrivals),
            throughput: departures as f64 / window,
        };

        Ok(RunStats {
            replication: 0,
            config_fingerprint: 0,
            observed_window: window,
            stations,
            classes,
            total,
            conservation: [Conservation::default(); 2],
        })
    }
}

fn mean(sum: f64, n: u64) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// One class at one station. `None` marks "no data".
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassStationStats {
    pub offered: u64,
    pub accepted: u64,
    pub lost: u64,
    pub dropped: u64,
    pub departures: u64,
    pub preemptions: u64,
    pub mean_waiting_time: Option<f64>,
    pub mean_response_time: Option<f64>,
    pub mean_queue_length: f64,
    pub loss_probability: Option<f64>,
    /// `|L − λ·Wq| / L` with `λ` the accepted arrival rate.
    pub littles_law_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationStats {
    pub kind: StationKind,
    pub servers: usize,
    pub utilization: f64,
    pub classes: [ClassStationStats; 2],
}

impl StationStats {
    pub fn class(&self, class: JobClass) -> &ClassStationStats {
        &self.classes[class.index()]
    }
}

/// End-to-end statistics of one class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassStats {
    pub external_arrivals: u64,
    pub departures: u64,
    pub losses: u64,
    pub security_drops: u64,
    pub admission_drops: u64,
    pub mean_waiting_time: Option<f64>,
    pub mean_response_time: Option<f64>,
    pub mean_queue_length: f64,
    pub loss_probability: Option<f64>,
    pub throughput: f64,
}

impl ClassStats {
    pub fn no_data(&self) -> bool {
        self.departures == 0
    }
}

/// Both classes, all stations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TotalStats {
    pub mean_waiting_time: Option<f64>,
    pub mean_response_time: Option<f64>,
    pub mean_queue_length: f64,
    pub loss_probability: Option<f64>,
    pub throughput: f64,
}

/// Whole-run job accounting for one class (not restricted to the window).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Conservation {
    pub external_arrivals: u64,
    pub departures: u64,
    pub losses: u64,
    pub security_drops: u64,
    pub admission_drops: u64,
    pub in_system: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.external_arrivals
            == self.departures
                + self.losses
                + self.security_drops
                + self.admission_drops
                + self.in_system
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub replication: u64,
    /// Identifies the configuration (seed and replication excluded).
    pub config_fingerprint: u64,
    pub observed_window: f64,
    pub stations: Vec<StationStats>,
    pub classes: [ClassStats; 2],
    pub total: TotalStats,
    pub conservation: [Conservation; 2],
}

impl RunStats {
    pub fn station(&self, kind: StationKind) -> Option<&StationStats> {
        self.stations.iter().find(|s| s.kind == kind)
    }

    pub fn class(&self, class: JobClass) -> &ClassStats {
        &self.classes[class.index()]
    }

    /// Flattens the statistics into named metrics.
    pub fn metrics(&self) -> Vec<(MetricKey, Option<f64>)> {
        use Metric::*;
        let mut out = Vec::new();
        let mut push = |metric, class, station, v| {
            out.push((
                MetricKey {
                    metric,
                    class,
                    station,
                },
                v,
            ))
        };
        for s in &self.stations {
            let st = StationScope::Station(s.kind);
            let mut offered = 0;
            let mut lost = 0;
            let mut queue = 0.0;
            for class in JobClass::ALL {
                let c = s.class(class);
                let cs = ClassScope::Class(class);
                push(MeanWaitingTime, cs, st, c.mean_waiting_time);
                push(MeanResponseTime, cs, st, c.mean_response_time);
                push(MeanQueueLength, cs, st, Some(c.mean_queue_length));
                push(LossProbability, cs, st, c.loss_probability);
                offered += c.offered;
                lost += c.lost;
                queue += c.mean_queue_length;
            }
            push(Utilization, ClassScope::Total, st, Some(s.utilization));
            push(MeanQueueLength, ClassScope::Total, st, Some(queue));
            push(LossProbability, ClassScope::Total, st, ratio(lost, offered));
        }
        for class in JobClass::ALL {
            let c = self.class(class);
            let cs = ClassScope::Class(class);
            let st = StationScope::EndToEnd;
            push(MeanWaitingTime, cs, st, c.mean_waiting_time);
            push(MeanResponseTime, cs, st, c.mean_response_time);
            push(MeanQueueLength, cs, st, Some(c.mean_queue_length));
            push(LossProbability, cs, st, c.loss_probability);
            push(Throughput, cs, st, Some(c.throughput));
        }
        let t = &self.total;
        let (cs, st) = (ClassScope::Total, StationScope::Total);
        push(MeanWaitingTime, cs, st, t.mean_waiting_time);
        push(MeanResponseTime, cs, st, t.mean_response_time);
        push(MeanQueueLength, cs, st, Some(t.mean_queue_length));
        push(LossProbability, cs, st, t.loss_probability);
        push(Throughput, cs, st, Some(t.throughput));
        out
    }

    pub fn metric(&self, key: MetricKey) -> Option<f64> {
        self.metrics()
            .into_iter()
            .find(|(k, _)| *k == key)
            .and_then(|(_, v)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    MeanWaitingTime,
    MeanResponseTime,
    MeanQueueLength,
    LossProbability,
    Utilization,
    Throughput,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanWaitingTime => "mean_waiting_time",
            Metric::MeanResponseTime => "mean_response_time",
            Metric::MeanQueueLength => "mean_queue_length",
            Metric::LossProbability => "loss_probability",
            Metric::Utilization => "utilization",
            Metric::Throughput => "throughput",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassScope {
    Class(JobClass),
    Total,
}

impl fmt::Display for ClassScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassScope::Class(c) => write!(f, "{c}"),
            ClassScope::Total => f.write_str("total"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StationScope {
    Station(StationKind),
    EndToEnd,
    Total,
}

impl fmt::Display for StationScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StationScope::Station(s) => write!(f, "{s}"),
            StationScope::EndToEnd => f.write_str("end_to_end"),
            StationScope::Total => f.write_str("total"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricKey {
    pub metric: Metric,
    pub class: ClassScope,
    pub station: StationScope,
}

impl MetricKey {
    pub fn new(metric: Metric, class: ClassScope, station: StationScope) -> Self {
        Self {
            metric,
            class,
            station,
        }
    }

    pub fn total(metric: Metric) -> Self {
        Self::new(metric, ClassScope::Total, StationScope::Total)
    }

    pub fn end_to_end(metric: Metric, class: JobClass) -> Self {
        Self::new(metric, ClassScope::Class(class), StationScope::EndToEnd)
    }

    pub fn at(metric: Metric, class: JobClass, station: StationKind) -> Self {
        Self::new(metric, ClassScope::Class(class), StationScope::Station(station))
    }

    /// Name used for plot files, e.g. `mean_response_time_total` or
    /// `mean_queue_length_su_end_to_end`.
    pub fn plot_name(&self) -> String {
        match (self.class, self.station) {
            (ClassScope::Total, StationScope::Total) => format!("{}_total", self.metric.name()),
            (c, s) => format!(
                "{}_{}_{}",
                self.metric.name(),
                c.to_string().to_lowercase(),
                s.to_string().to_lowercase()
            ),
        }
    }
}

/// Mean, spread and 95% Student-t half-width over replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Summary {
    /// Requires at least two values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::Aggregate(format!(
                "a confidence interval needs at least 2 values, got {n}"
            )));
        }
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        let std_dev = var.sqrt();
        let half_width = t_quantile_975(n - 1) * std_dev / nf.sqrt();
        Ok(Self {
            mean,
            std_dev,
            half_width,
            n,
        })
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() <= x && x <= self.upper()
    }

    /// True when the two 95% intervals do not overlap.
    pub fn separated_from(&self, other: &Summary) -> bool {
        self.upper() < other.lower() || other.upper() < self.lower()
    }
}

/// Upper 97.5% quantile of Student's t with `dof` degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("dof >= 1")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStats {
    pub reps: usize,
    pub metrics: BTreeMap<MetricKey, Summary>,
}

impl AggregateStats {
    pub fn get(&self, key: MetricKey) -> Option<&Summary> {
        self.metrics.get(&key)
    }
}

/// Aggregates replications of one configuration.
///
/// Every run must carry the same config fingerprint, i.e. share one
/// configuration apart from the replication index. Metrics with fewer than
/// two replications carrying data are omitted.
pub fn aggregate(runs: &[RunStats]) -> Result<AggregateStats> {
    if runs.len() < 2 {
        return Err(Error::Aggregate(format!(
            "need at least 2 replications, got {}",
            runs.len()
        )));
    }
    if runs
        .iter()
        .any(|r| r.config_fingerprint != runs[0].config_fingerprint)
    {
        return Err(Error::Aggregate("replications have mismatched configs".into()));
    }
    let mut values: BTreeMap<MetricKey, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for (key, v) in run.metrics() {
            let slot = values.entry(key).or_default();
            if let Some(v) = v {
                slot.push(v);
            }
        }
    }
    let metrics = values
        .into_iter()
        .filter(|(_, vs)| vs.len() >= 2)
        .map(|(k, vs)| Summary::from_values(&vs).map(|s| (k, s)))
        .collect::<Result<_>>()?;
    Ok(AggregateStats {
        reps: runs.len(),
        metrics,
    })
}
