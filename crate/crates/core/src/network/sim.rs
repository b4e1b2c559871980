use std::collections::VecDeque;

use crate::des::{self, Calendar, Event, Handler};
use crate::error::{Error, Result};
use crate::ge::GeParams;
use crate::metrics::{Conservation, DropKind, Observation, Observer, RunStats};
use crate::rng::{stream_id, Purpose, RngStream};

use super::trace::{TraceKind, TraceRecord};
use super::{Discipline, JobClass, NetworkConfig, StationConfig, StationKind};

/// Debug and test switches that do not change the simulated trajectory.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub trace: bool,
    pub record_jobs: bool,
    pub record_observations: bool,
    /// Verify priority, capacity and work-conservation invariants after
    /// every event.
    pub check_invariants: bool,
    pub max_events: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Departed,
    Lost(StationKind),
    Dropped(StationKind),
}

/// One job's stay at one station.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitRecord {
    pub station: StationKind,
    pub arrival: f64,
    pub sampled_service: f64,
    /// Lengths of the in-service segments, in order; the last one is the
    /// segment that completed.
    pub segments: Vec<f64>,
    pub preempt_count: u32,
    pub waiting: f64,
    /// `None` when the job was lost on arrival.
    pub completion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub id: u64,
    pub class: JobClass,
    pub serial: u64,
    pub external_arrival: f64,
    pub end_time: f64,
    pub outcome: Outcome,
    pub visits: Vec<VisitRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub stats: RunStats,
    pub trace: Vec<TraceRecord>,
    pub jobs: Vec<JobRecord>,
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NetEvent {
    ExternalArrival(JobClass),
    ServiceCompletion {
        station: StationKind,
        server: usize,
        generation: u64,
    },
    EndOfWarmup,
    EndOfRun,
}

#[derive(Debug, Default)]
struct Visit {
    arrival: f64,
    enqueued_at: f64,
    waiting: f64,
    sampled: f64,
    remaining: f64,
    segment_start: f64,
    preempt_count: u32,
    segments: Vec<f64>,
}

#[derive(Debug)]
struct Job {
    id: u64,
    class: JobClass,
    serial: u64,
    external_arrival: f64,
    hop: usize,
    services: [f64; 3],
    drop_after: [bool; 3],
    waiting_total: f64,
    visit: Visit,
    history: Vec<VisitRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Server {
    job: Option<usize>,
    started: f64,
    generation: u64,
}

#[derive(Debug)]
struct Station {
    cfg: StationConfig,
    servers: Vec<Server>,
    queues: [VecDeque<usize>; 2],
    busy: usize,
}

/// One replication of the network, owning its random streams and
/// accumulators.
pub struct Network {
    config: NetworkConfig,
    replication: u64,
    options: RunOptions,
    path: Vec<StationKind>,
    stations: Vec<Station>,
    jobs: Vec<Option<Job>>,
    free_slots: Vec<usize>,
    next_id: u64,
    next_serial: [u64; 2],
    arrival_rng: [RngStream; 2],
    service_rng: [[RngStream; 3]; 2],
    drop_rng: [[RngStream; 3]; 2],
    observer: Observer,
    conservation: [Conservation; 2],
    live: [u64; 2],
    current_seq: u64,
    trace: Vec<TraceRecord>,
    job_log: Vec<JobRecord>,
    observations: Vec<Observation>,
}

impl Network {
    pub fn new(config: &NetworkConfig, replication: u64, options: RunOptions) -> Result<Self> {
        config.validate()?;
        let path = config.path();
        let seed = config.seed;
        let arrival_rng = JobClass::ALL.map(|c| {
            RngStream::new(seed, stream_id(replication, c.index(), 0, Purpose::Arrivals))
        });
        let per_station = |purpose| {
            JobClass::ALL.map(|c| {
                StationKind::ALL
                    .map(|s| RngStream::new(seed, stream_id(replication, c.index(), s.index(), purpose)))
            })
        };
        let stations = StationKind::ALL
            .iter()
            .map(|&kind| {
                let cfg = *config.station(kind);
                Station {
                    cfg,
                    servers: vec![Server::default(); cfg.servers],
                    queues: [VecDeque::new(), VecDeque::new()],
                    busy: 0,
                }
            })
            .collect();
        let layout: Vec<_> = path
            .iter()
            .map(|&k| (k, config.station(k).servers))
            .collect();
        Ok(Self {
            config: config.clone(),
            replication,
            options,
            observer: Observer::new(&layout, config.warmup),
            path,
            stations,
            jobs: Vec::new(),
            free_slots: Vec::new(),
            next_id: 0,
            next_serial: [0; 2],
            arrival_rng,
            service_rng: per_station(Purpose::Service),
            drop_rng: per_station(Purpose::Drops),
            conservation: [Conservation::default(); 2],
            live: [0; 2],
            current_seq: 0,
            trace: Vec::new(),
            job_log: Vec::new(),
            observations: Vec::new(),
        })
    }

    fn arrival_params(&self, class: JobClass) -> Option<GeParams> {
        match class {
            JobClass::Pu => self.config.pu_arrival,
            JobClass::Su => self.config.su_arrival,
        }
    }

    /// Runs to the horizon and returns the statistics of the observed window.
    pub fn run(mut self) -> Result<RunOutput> {
        let mut cal = Calendar::new();
        for class in JobClass::ALL {
            if let Some(p) = self.arrival_params(class) {
                let dt = crate::ge::ge_sample(&p, &mut self.arrival_rng[class.index()]);
                cal.schedule(dt, NetEvent::ExternalArrival(class))?;
            }
        }
        if self.config.warmup > 0.0 {
            cal.schedule(self.config.warmup, NetEvent::EndOfWarmup)?;
        }
        cal.schedule(self.config.horizon, NetEvent::EndOfRun)?;
        let horizon = self.config.horizon;
        let max_events = self.options.max_events;
        des::run(&mut cal, &mut self, horizon, max_events)?;

        let mut stats = self.observer.clone().finalize(horizon)?;
        stats.replication = self.replication;
        stats.config_fingerprint = self.config.fingerprint();
        for class in JobClass::ALL {
            let c = &mut self.conservation[class.index()];
            c.in_system = self.live[class.index()];
            if !c.holds() {
                return Err(Error::Logic(format!("{class} conservation violated: {c:?}")));
            }
        }
        stats.conservation = self.conservation;
        Ok(RunOutput {
            stats,
            trace: self.trace,
            jobs: self.job_log,
            observations: self.observations,
        })
    }

    fn observe(&mut self, obs: Observation) -> Result<()> {
        if self.options.record_observations {
            self.observations.push(obs);
        }
        self.observer.observe(&obs)
    }

    fn log(&mut self, time: f64, kind: TraceKind, job: Option<usize>, station: Option<StationKind>) {
        if !self.options.trace {
            return;
        }
        let job = job.map(|slot| {
            let j = self.job(slot);
            (j.id, j.class, j.serial)
        });
        self.trace.push(TraceRecord {
            time,
            seq: self.current_seq,
            kind,
            job,
            station,
        });
    }

    fn job(&self, slot: usize) -> &Job {
        self.jobs[slot].as_ref().expect("live job slot")
    }

    fn job_mut(&mut self, slot: usize) -> &mut Job {
        self.jobs[slot].as_mut().expect("live job slot")
    }

    fn station(&mut self, kind: StationKind) -> &mut Station {
        &mut self.stations[kind.index()]
    }

    fn on_external_arrival(&mut self, class: JobClass, now: f64, cal: &mut Calendar<NetEvent>) -> Result<()> {
        let ci = class.index();
        let params = self
            .arrival_params(class)
            .ok_or_else(|| Error::Logic(format!("arrival for disabled class {class}")))?;
        let dt = crate::ge::ge_sample(&params, &mut self.arrival_rng[ci]);
        cal.schedule(now + dt, NetEvent::ExternalArrival(class))?;

        // Demands and drop decisions come from per-(class, station) streams
        // so that they are tied to the job's serial number.
        let mut services = [0.0; 3];
        let mut drop_after = [false; 3];
        for &kind in &self.path {
            let si = kind.index();
            let svc = self.stations[si].cfg.service;
            services[si] = crate::ge::ge_sample(&svc, &mut self.service_rng[ci][si]);
            let p_drop = match (class, kind) {
                (JobClass::Pu, StationKind::Sec) => Some(self.config.p_malicious),
                (JobClass::Su, StationKind::Ac) => Some(self.config.p_admission_reject),
                _ => None,
            };
            if let Some(p) = p_drop {
                drop_after[si] = self.drop_rng[ci][si].bernoulli(p);
            }
        }

        let job = Job {
            id: self.next_id,
            class,
            serial: self.next_serial[ci],
            external_arrival: now,
            hop: 0,
            services,
            drop_after,
            waiting_total: 0.0,
            visit: Visit::default(),
            history: Vec::new(),
        };
        self.next_id += 1;
        self.next_serial[ci] += 1;
        let slot = match self.free_slots.pop() {
            Some(s) => {
                self.jobs[s] = Some(job);
                s
            }
            None => {
                self.jobs.push(Some(job));
                self.jobs.len() - 1
            }
        };
        self.conservation[ci].external_arrivals += 1;
        self.live[ci] += 1;
        self.log(now, TraceKind::ExternalArrival, Some(slot), None);
        self.observe(Observation::ExternalArrival { class, time: now })?;
        let first = self.path[0];
        self.on_station_arrival(first, slot, now, cal)
    }

    fn on_station_arrival(
        &mut self,
        kind: StationKind,
        slot: usize,
        now: f64,
        cal: &mut Calendar<NetEvent>,
    ) -> Result<()> {
        let si = kind.index();
        let (class, sampled) = {
            let job = self.job_mut(slot);
            let sampled = job.services[si];
            job.visit = Visit {
                arrival: now,
                enqueued_at: now,
                sampled,
                remaining: sampled,
                ..Visit::default()
            };
            (job.class, sampled)
        };
        debug_assert!(sampled >= 0.0);
        self.log(now, TraceKind::StationArrival, Some(slot), Some(kind));

        let station = &self.stations[si];
        let idle = station.servers.iter().position(|s| s.job.is_none());
        let accepted = idle.is_some()
            || (class == JobClass::Pu && self.victim(kind).is_some())
            || station.queues[class.index()].len() < station.cfg.capacity;
        self.observe(Observation::StationArrival {
            station: kind,
            class,
            time: now,
            accepted,
        })?;

        if let Some(server) = idle {
            self.start_service(kind, server, slot, now, cal)
        } else if class == JobClass::Pu && self.victim(kind).is_some() {
            self.preempt_su(kind, slot, now, cal)
        } else if accepted {
            let st = self.station(kind);
            st.queues[class.index()].push_back(slot);
            let len = st.queues[class.index()].len();
            self.observe(Observation::QueueLength {
                station: kind,
                class,
                time: now,
                len,
            })
        } else {
            self.log(now, TraceKind::Lost, Some(slot), Some(kind));
            self.conservation[class.index()].losses += 1;
            self.finish_job(slot, now, Outcome::Lost(kind));
            Ok(())
        }
    }

    /// Server holding the most recently started SU (ties: largest job id).
    fn victim(&self, kind: StationKind) -> Option<usize> {
        let station = &self.stations[kind.index()];
        station
            .servers
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let slot = s.job?;
                let job = self.job(slot);
                (job.class == JobClass::Su).then_some((i, s.started, job.id))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)))
            .map(|(i, _, _)| i)
    }

    fn start_service(
        &mut self,
        kind: StationKind,
        server: usize,
        slot: usize,
        now: f64,
        cal: &mut Calendar<NetEvent>,
    ) -> Result<()> {
        let duration = {
            let job = self.job_mut(slot);
            let v = &mut job.visit;
            v.waiting += now - v.enqueued_at;
            v.segment_start = now;
            v.remaining
        };
        let st = self.station(kind);
        let srv = &mut st.servers[server];
        debug_assert!(srv.job.is_none());
        srv.job = Some(slot);
        srv.started = now;
        srv.generation += 1;
        let generation = srv.generation;
        st.busy += 1;
        let busy = st.busy;
        cal.schedule(
            now + duration,
            NetEvent::ServiceCompletion {
                station: kind,
                server,
                generation,
            },
        )?;
        self.log(now, TraceKind::ServiceStart, Some(slot), Some(kind));
        self.observe(Observation::BusyServers {
            station: kind,
            time: now,
            busy,
        })
    }

    /// Removes the victim SU from its server, puts it back at the head of
    /// the SU queue and starts the arriving PU in its place.
    fn preempt_su(
        &mut self,
        kind: StationKind,
        pu_slot: usize,
        now: f64,
        cal: &mut Calendar<NetEvent>,
    ) -> Result<()> {
        let server = self
            .victim(kind)
            .ok_or_else(|| Error::Logic(format!("preemption at {kind} with no SU in service")))?;
        let discipline = self.config.discipline;
        let record = self.options.record_jobs;
        let st = self.station(kind);
        let srv = &mut st.servers[server];
        let su_slot = srv.job.take().expect("victim server busy");
        srv.generation += 1;
        st.busy -= 1;
        {
            let job = self.job_mut(su_slot);
            let v = &mut job.visit;
            let elapsed = now - v.segment_start;
            if record {
                v.segments.push(elapsed);
            }
            v.remaining = match discipline {
                Discipline::PreemptiveResume => (v.remaining - elapsed).max(0.0),
                Discipline::PreemptiveRepeatIdentical => v.sampled,
            };
            v.preempt_count += 1;
            v.enqueued_at = now;
        }
        let st = self.station(kind);
        st.queues[JobClass::Su.index()].push_front(su_slot);
        let len = st.queues[JobClass::Su.index()].len();
        self.log(now, TraceKind::Preempted, Some(su_slot), Some(kind));
        self.observe(Observation::Preempted {
            station: kind,
            class: JobClass::Su,
            time: now,
        })?;
        self.observe(Observation::QueueLength {
            station: kind,
            class: JobClass::Su,
            time: now,
            len,
        })?;
        self.start_service(kind, server, pu_slot, now, cal)
    }

    fn on_service_completion(
        &mut self,
        kind: StationKind,
        server: usize,
        generation: u64,
        now: f64,
        cal: &mut Calendar<NetEvent>,
    ) -> Result<()> {
        let st = self.station(kind);
        let srv = &mut st.servers[server];
        if srv.generation != generation {
            // invalidated by a preemption
            return Ok(());
        }
        let slot = srv.job.take().ok_or_else(|| {
            Error::Logic(format!("completion for idle server {server} at {kind}"))
        })?;
        st.busy -= 1;
        let busy = st.busy;
        self.log(now, TraceKind::ServiceCompletion, Some(slot), Some(kind));

        let record = self.options.record_jobs;
        let (class, waiting, sojourn) = {
            let job = self.job_mut(slot);
            let v = &mut job.visit;
            if record {
                v.segments.push(v.remaining);
            }
            job.waiting_total += v.waiting;
            let waiting = v.waiting;
            let sojourn = now - v.arrival;
            if record {
                let v = std::mem::take(&mut job.visit);
                job.history.push(VisitRecord {
                    station: kind,
                    arrival: v.arrival,
                    sampled_service: v.sampled,
                    segments: v.segments,
                    preempt_count: v.preempt_count,
                    waiting: v.waiting,
                    completion: Some(now),
                });
            }
            (job.class, waiting, sojourn)
        };
        self.observe(Observation::StationDeparture {
            station: kind,
            class,
            time: now,
            waiting,
            sojourn,
        })?;

        // refill the freed server: PU head first, then SU head
        let st = self.station(kind);
        let next = if let Some(s) = st.queues[JobClass::Pu.index()].pop_front() {
            Some((JobClass::Pu, s))
        } else {
            st.queues[JobClass::Su.index()]
                .pop_front()
                .map(|s| (JobClass::Su, s))
        };
        match next {
            Some((next_class, next_slot)) => {
                let len = self.stations[kind.index()].queues[next_class.index()].len();
                self.observe(Observation::QueueLength {
                    station: kind,
                    class: next_class,
                    time: now,
                    len,
                })?;
                self.start_service(kind, server, next_slot, now, cal)?;
            }
            None => self.observe(Observation::BusyServers {
                station: kind,
                time: now,
                busy,
            })?,
        }

        self.route(kind, slot, now, cal)
    }

    fn route(&mut self, from: StationKind, slot: usize, now: f64, cal: &mut Calendar<NetEvent>) -> Result<()> {
        let (class, dropped, hop) = {
            let job = self.job_mut(slot);
            job.hop += 1;
            (job.class, job.drop_after[from.index()], job.hop)
        };
        if dropped {
            let kind = match from {
                StationKind::Sec => DropKind::Security,
                _ => DropKind::Admission,
            };
            let c = &mut self.conservation[class.index()];
            match kind {
                DropKind::Security => c.security_drops += 1,
                DropKind::Admission => c.admission_drops += 1,
            }
            self.log(now, TraceKind::Dropped, Some(slot), Some(from));
            self.observe(Observation::Dropped {
                station: from,
                class,
                time: now,
                kind,
            })?;
            self.finish_job(slot, now, Outcome::Dropped(from));
            return Ok(());
        }
        if hop < self.path.len() {
            let next = self.path[hop];
            return self.on_station_arrival(next, slot, now, cal);
        }
        let job = self.job(slot);
        let waiting = job.waiting_total;
        let response = now - job.external_arrival;
        self.conservation[class.index()].departures += 1;
        self.log(now, TraceKind::Departure, Some(slot), None);
        self.observe(Observation::SystemDeparture {
            class,
            time: now,
            waiting,
            response,
        })?;
        self.finish_job(slot, now, Outcome::Departed);
        Ok(())
    }

    fn finish_job(&mut self, slot: usize, now: f64, outcome: Outcome) {
        let mut job = self.jobs[slot].take().expect("live job slot");
        self.free_slots.push(slot);
        self.live[job.class.index()] -= 1;
        if !self.options.record_jobs {
            return;
        }
        if let Outcome::Lost(station) = outcome {
            let v = std::mem::take(&mut job.visit);
            job.history.push(VisitRecord {
                station,
                arrival: v.arrival,
                sampled_service: v.sampled,
                segments: Vec::new(),
                preempt_count: 0,
                waiting: 0.0,
                completion: None,
            });
        }
        self.job_log.push(JobRecord {
            id: job.id,
            class: job.class,
            serial: job.serial,
            external_arrival: job.external_arrival,
            end_time: now,
            outcome,
            visits: job.history,
        });
    }

    fn check_invariants(&self) -> Result<()> {
        for &kind in &self.path {
            let st = &self.stations[kind.index()];
            let pu_waiting = !st.queues[JobClass::Pu.index()].is_empty();
            let any_waiting = pu_waiting || !st.queues[JobClass::Su.index()].is_empty();
            let idle = st.servers.iter().any(|s| s.job.is_none());
            if any_waiting && idle {
                return Err(Error::Logic(format!("{kind}: idle server while jobs wait")));
            }
            if pu_waiting
                && st
                    .servers
                    .iter()
                    .filter_map(|s| s.job)
                    .any(|j| self.job(j).class == JobClass::Su)
            {
                return Err(Error::Logic(format!("{kind}: SU in service while a PU waits")));
            }
            if st.queues[JobClass::Pu.index()].len() > st.cfg.capacity {
                return Err(Error::Logic(format!("{kind}: PU queue over capacity")));
            }
            if st.busy != st.servers.iter().filter(|s| s.job.is_some()).count() {
                return Err(Error::Logic(format!("{kind}: busy counter out of sync")));
            }
        }
        Ok(())
    }
}

impl Handler<NetEvent> for Network {
    fn handle(&mut self, event: Event<NetEvent>, cal: &mut Calendar<NetEvent>) -> Result<()> {
        self.current_seq = event.seq;
        let now = event.time;
        match event.kind {
            NetEvent::ExternalArrival(class) => self.on_external_arrival(class, now, cal)?,
            NetEvent::ServiceCompletion {
                station,
                server,
                generation,
            } => self.on_service_completion(station, server, generation, now, cal)?,
            NetEvent::EndOfWarmup => self.log(now, TraceKind::EndOfWarmup, None, None),
            NetEvent::EndOfRun => self.log(now, TraceKind::EndOfRun, None, None),
        }
        if self.options.check_invariants {
            self.check_invariants()?;
        }
        Ok(())
    }
}

/// Executes one seeded replication and returns its statistics.
pub fn run_replication(config: &NetworkConfig, replication: u64) -> Result<RunStats> {
    Ok(Network::new(config, replication, RunOptions::default())?
        .run()?
        .stats)
}
