use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Result};
use crate::network::{Discipline, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    A,
    B,
    C,
    D,
    Custom,
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeId::A => "A",
            SchemeId::B => "B",
            SchemeId::C => "C",
            SchemeId::D => "D",
            SchemeId::Custom => "custom",
        })
    }
}

impl FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(SchemeId::A),
            "B" => Ok(SchemeId::B),
            "C" => Ok(SchemeId::C),
            "D" => Ok(SchemeId::D),
            "CUSTOM" => Ok(SchemeId::Custom),
            other => Err(format!("unknown scheme `{other}` (expected A, B, C, D or custom)")),
        }
    }
}

pub const DEFAULT_REPS: usize = 20;
pub const DEFAULT_HORIZON: f64 = 2e5;
pub const DEFAULT_WARMUP_FRACTION: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 1;

/// A grid of scenarios plus the replication protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub id: SchemeId,
    pub disciplines: Vec<Discipline>,
    pub security: Vec<bool>,
    /// Channel-stage server counts.
    pub servers: Vec<usize>,
    pub capacity: usize,
    pub pu_rates: Vec<f64>,
    pub su_rates: Vec<f64>,
    /// `(arrival SCV, service SCV)` pairs.
    pub scv: Vec<(f64, f64)>,
    pub mu: f64,
    pub reps: usize,
    pub horizon: f64,
    /// Fraction of the horizon discarded as warmup.
    pub warmup: f64,
    pub seed: u64,
    pub p_malicious: f64,
    pub p_admission_reject: f64,
}

impl SchemeConfig {
    /// The built-in experiment grids A–D.
    pub fn builtin(id: SchemeId) -> Result<Self> {
        use Discipline::*;
        let su_rates: Vec<f64> = (1..=6).map(f64::from).collect();
        let mut s = Self {
            id,
            disciplines: vec![PreemptiveResume],
            security: vec![true, false],
            servers: vec![1],
            capacity: 20,
            pu_rates: vec![3.0],
            su_rates,
            scv: vec![(1.0, 1.0)],
            mu: 13.0,
            reps: DEFAULT_REPS,
            horizon: DEFAULT_HORIZON,
            warmup: DEFAULT_WARMUP_FRACTION,
            seed: DEFAULT_SEED,
            p_malicious: 0.0,
            p_admission_reject: 0.0,
        };
        match id {
            SchemeId::A => s.disciplines = vec![PreemptiveResume, PreemptiveRepeatIdentical],
            SchemeId::B => s.pu_rates = vec![1.0, 3.0, 5.0],
            // one SCV knob drives both the arrival and the service process
            SchemeId::C => s.scv = vec![(4.0, 4.0), (8.0, 8.0), (10.0, 10.0)],
            SchemeId::D => s.servers = vec![1, 3],
            SchemeId::Custom => return Err(domain("`custom` has no built-in grid")),
        }
        Ok(s)
    }

    /// Grid points in a fixed order; the SU rate varies fastest.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &discipline in &self.disciplines {
            for &security in &self.security {
                for &servers in &self.servers {
                    for &pu_rate in &self.pu_rates {
                        for &(scv_arrival, scv_service) in &self.scv {
                            for &su_rate in &self.su_rates {
                                out.push(GridPoint {
                                    index: out.len(),
                                    discipline,
                                    security,
                                    servers,
                                    capacity: self.capacity,
                                    pu_rate,
                                    su_rate,
                                    scv_arrival,
                                    scv_service,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(domain(format!("reps must be >= 2, got {}", self.reps)));
        }
        if !(self.warmup >= 0.0 && self.warmup < 1.0) {
            return Err(domain(format!("warmup fraction must lie in [0, 1), got {}", self.warmup)));
        }
        if self.grid().is_empty() {
            return Err(domain("empty scenario grid"));
        }
        for p in self.grid() {
            p.network_config(self)?;
        }
        Ok(())
    }
}

/// One scenario of a scheme grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub discipline: Discipline,
    pub security: bool,
    pub servers: usize,
    pub capacity: usize,
    pub pu_rate: f64,
    pub su_rate: f64,
    pub scv_arrival: f64,
    pub scv_service: f64,
}

impl GridPoint {
    pub fn network_config(&self, scheme: &SchemeConfig) -> Result<NetworkConfig> {
        let mut cfg = NetworkConfig::standard(
            self.discipline,
            self.security,
            self.servers,
            self.capacity,
            self.pu_rate,
            self.su_rate,
            self.scv_arrival,
            self.scv_service,
            scheme.mu,
        )?
        .with_run(scheme.seed, scheme.horizon, scheme.horizon * scheme.warmup);
        cfg.p_malicious = scheme.p_malicious;
        cfg.p_admission_reject = scheme.p_admission_reject;
        cfg.validate()?;
        Ok(cfg)
    }
}
