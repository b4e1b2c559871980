use crate::error::{domain, Result};
use crate::ge::GeParams;
use crate::rng::mix64;

use super::{Discipline, StationKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationConfig {
    pub servers: usize,
    /// Waiting slots per class, excluding jobs in service.
    pub capacity: usize,
    pub service: GeParams,
}

impl StationConfig {
    pub fn new(servers: usize, capacity: usize, service: GeParams) -> Self {
        Self {
            servers,
            capacity,
            service,
        }
    }
}

/// One fully specified scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub security_enabled: bool,
    pub discipline: Discipline,
    /// `None` disables the class.
    pub pu_arrival: Option<GeParams>,
    pub su_arrival: Option<GeParams>,
    /// Indexed by [`StationKind::index`]; SEC is ignored when security is off.
    pub stations: [StationConfig; 3],
    /// Probability a PU is found malicious and dropped after the security check.
    pub p_malicious: f64,
    /// Probability an SU request is rejected after admission control.
    pub p_admission_reject: f64,
    pub seed: u64,
    pub horizon: f64,
    pub warmup: f64,
}

impl NetworkConfig {
    /// A scenario in the shape of the experiment grid: SEC and AC have one
    /// server, CH has `channels`; every station serves at rate `mu` with
    /// service SCV `scv_service` and holds `capacity` waiting jobs per class.
    /// A zero arrival rate disables that class.
    #[allow(clippy::too_many_arguments)]
    pub fn standard(
        discipline: Discipline,
        security_enabled: bool,
        channels: usize,
        capacity: usize,
        pu_rate: f64,
        su_rate: f64,
        scv_arrival: f64,
        scv_service: f64,
        mu: f64,
    ) -> Result<Self> {
        let arrival = |rate: f64| -> Result<Option<GeParams>> {
            if rate == 0.0 {
                Ok(None)
            } else {
                GeParams::new(rate, scv_arrival).map(Some)
            }
        };
        let service = GeParams::new(mu, scv_service)?;
        let cfg = Self {
            security_enabled,
            discipline,
            pu_arrival: arrival(pu_rate)?,
            su_arrival: arrival(su_rate)?,
            stations: [
                StationConfig::new(1, capacity, service),
                StationConfig::new(1, capacity, service),
                StationConfig::new(channels, capacity, service),
            ],
            p_malicious: 0.0,
            p_admission_reject: 0.0,
            seed: 1,
            horizon: 2e5,
            warmup: 2e4,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_run(mut self, seed: u64, horizon: f64, warmup: f64) -> Self {
        self.seed = seed;
        self.horizon = horizon;
        self.warmup = warmup;
        self
    }

    pub fn station(&self, kind: StationKind) -> &StationConfig {
        &self.stations[kind.index()]
    }

    pub fn station_mut(&mut self, kind: StationKind) -> &mut StationConfig {
        &mut self.stations[kind.index()]
    }

    /// Stations in routing order.
    pub fn path(&self) -> Vec<StationKind> {
        let mut p = Vec::with_capacity(3);
        if self.security_enabled {
            p.push(StationKind::Sec);
        }
        p.push(StationKind::Ac);
        p.push(StationKind::Ch);
        p
    }

    pub fn validate(&self) -> Result<()> {
        for kind in self.path() {
            if self.station(kind).servers == 0 {
                return Err(domain(format!("station {kind} needs at least one server")));
            }
        }
        for (name, p) in [
            ("p_malicious", self.p_malicious),
            ("p_admission_reject", self.p_admission_reject),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(domain(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(domain(format!("horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(domain(format!(
                "warmup must lie in [0, horizon), got {}",
                self.warmup
            )));
        }
        Ok(())
    }

    /// Hash of every field except the seed.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0u64;
        let mut feed = |x: u64| h = mix64(h ^ x);
        feed(self.security_enabled as u64);
        feed(self.discipline as u64);
        for arrival in [self.pu_arrival, self.su_arrival] {
            match arrival {
                Some(p) => {
                    feed(p.rate().to_bits());
                    feed(p.scv().to_bits());
                }
                None => feed(u64::MAX),
            }
        }
        for s in &self.stations {
            feed(s.servers as u64);
            feed(s.capacity as u64);
            feed(s.service.rate().to_bits());
            feed(s.service.scv().to_bits());
        }
        feed(self.p_malicious.to_bits());
        feed(self.p_admission_reject.to_bits());
        feed(self.horizon.to_bits());
        feed(self.warmup.to_bits());
        h
    }
}
