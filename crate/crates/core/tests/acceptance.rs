//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! binding criterion fails. Run with `cargo test --test acceptance`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crnsim::experiments::{self, fmt_g, RunnerOptions, SchemeConfig, SchemeId};
use crnsim::metrics::{aggregate, AggregateStats, Metric, MetricKey, Summary};
use crnsim::network::{Network, Outcome, RunOptions, TraceRecord};
use crnsim::oracles::{erlang_c_wq, mm1, mm1_preemptive_resume, mm1n_loss, preemptive_resume_ctmc};
use crnsim::{ge_sample, run_replication, Discipline, GeParams, JobClass, NetworkConfig, RngStream, RunStats, StationKind};

use Discipline::{PreemptiveRepeatIdentical as Pri, PreemptiveResume as Pr};
use JobClass::{Pu, Su};
use StationKind::{Ac, Ch};

const SEED: u64 = 20_240_601;
/// Stands in for an unbounded buffer.
const LARGE_N: usize = 1_000_000;

// Replication protocol for the scheme-ordering criteria. The defaults of the
// CLI (2e5 s) are too slow for a test run on one core; the orderings rely on
// common random numbers rather than on long horizons.
const ORDER_REPS: usize = 20;
const ORDER_HORIZON: f64 = 5e4;
const SWEEP_REPS: usize = 10;
const SWEEP_HORIZON: f64 = 2e4;

const FOUR_METRICS: [Metric; 4] = [
    Metric::MeanWaitingTime,
    Metric::MeanResponseTime,
    Metric::MeanQueueLength,
    Metric::LossProbability,
];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Every replication executed by the suite, kept for the determinism re-run.
#[derive(Default)]
struct Registry {
    runs: Vec<(NetworkConfig, u64, String)>,
    conservation_failures: Vec<String>,
}

impl Registry {
    fn replicate(&mut self, config: &NetworkConfig, reps: usize) -> Vec<RunStats> {
        let stats: Vec<RunStats> = (0..reps as u64)
            .into_par_iter()
            .map(|r| run_replication(config, r).expect("replication failed"))
            .collect();
        for s in &stats {
            if !s.conservation.iter().all(|c| c.holds()) {
                self.conservation_failures
                    .push(format!("rep {} of {:?}", s.replication, config));
            }
            self.runs.push((config.clone(), s.replication, format!("{s:?}")));
        }
        stats
    }

    fn aggregate(&mut self, config: &NetworkConfig, reps: usize) -> AggregateStats {
        aggregate(&self.replicate(config, reps)).expect("aggregate")
    }
}

fn summary(agg: &AggregateStats, key: MetricKey) -> Summary {
    *agg.get(key).unwrap_or_else(|| panic!("no data for {key:?}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[allow(clippy::too_many_arguments)]
fn standard(
    discipline: Discipline,
    security: bool,
    channels: usize,
    capacity: usize,
    pu: f64,
    su: f64,
    scv: f64,
    horizon: f64,
) -> NetworkConfig {
    NetworkConfig::standard(discipline, security, channels, capacity, pu, su, scv, scv, 13.0)
        .expect("valid config")
        .with_run(SEED, horizon, horizon * 0.1)
}

fn c1_ge_moments() -> Verdict {
    let mut pass = true;
    let mut detail = String::new();
    for (i, scv) in [1.0, 4.0, 8.0, 10.0].into_iter().enumerate() {
        let start = Instant::now();
        let p = GeParams::new(13.0, scv).unwrap();
        let mut rng = RngStream::new(SEED, i as u64);
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = ge_sample(&p, &mut rng);
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let emp_scv = var / (mean * mean);
        let secs = start.elapsed().as_secs_f64();
        let ok = rel(mean, 1.0 / 13.0) <= 0.01 && rel(emp_scv, scv) <= 0.05 && secs < 5.0;
        pass &= ok;
        let _ = write!(detail, "C2={scv}: mean {mean:.6} scv {emp_scv:.3} {secs:.2}s; ");
    }
    Verdict::new(pass, detail)
}

fn c2_mm1(reg: &mut Registry) -> Verdict {
    let cfg = standard(Pr, false, 1, LARGE_N, 6.0, 0.0, 1.0, 1e5);
    let agg = reg.aggregate(&cfg, 20);
    let oracle = mm1(6.0, 13.0).unwrap();
    let w = summary(&agg, MetricKey::at(Metric::MeanResponseTime, Pu, Ac));
    let lq = summary(&agg, MetricKey::at(Metric::MeanQueueLength, Pu, Ac));
    let pass = w.contains(oracle.w) && rel(w.mean, oracle.w) <= 0.05 && rel(lq.mean, oracle.lq) <= 0.05;
    Verdict::new(
        pass,
        format!(
            "W {:.5} ± {:.5} vs {:.5}; Lq {:.5} vs {:.5}",
            w.mean, w.half_width, oracle.w, lq.mean, oracle.lq
        ),
    )
}

fn c3_mm1n(reg: &mut Registry) -> Verdict {
    // system size 8 = one in service + 7 waiting slots
    let cfg = standard(Pr, false, 1, 7, 12.0, 0.0, 1.0, 1e5);
    let agg = reg.aggregate(&cfg, 20);
    let oracle = mm1n_loss(12.0, 13.0, 8).unwrap();
    let loss = summary(&agg, MetricKey::at(Metric::LossProbability, Pu, Ac));
    Verdict::new(
        rel(loss.mean, oracle) <= 0.10,
        format!("loss {:.5} ± {:.5} vs {:.5}", loss.mean, loss.half_width, oracle),
    )
}

fn c4_erlang_c(reg: &mut Registry) -> Verdict {
    // The single-server AC stage feeds CH a Poisson stream (Burke), so CH is M/M/3.
    let cfg = standard(Pr, false, 3, LARGE_N, 12.0, 0.0, 1.0, 1e5);
    let agg = reg.aggregate(&cfg, 20);
    let oracle = erlang_c_wq(12.0, 13.0, 3).unwrap();
    let wq = summary(&agg, MetricKey::at(Metric::MeanWaitingTime, Pu, Ch));
    Verdict::new(
        rel(wq.mean, oracle) <= 0.10,
        format!("CH Wq {:.6} ± {:.6} vs {:.6}", wq.mean, wq.half_width, oracle),
    )
}

fn c5_two_class_pr(reg: &mut Registry) -> Verdict {
    let (w1, w2) = mm1_preemptive_resume(3.0, 6.0, 13.0).unwrap();
    let (c1, c2) = preemptive_resume_ctmc(3.0, 6.0, 13.0, 60, 400).unwrap();
    let formula_ok = rel(w1, c1) <= 1e-3 && rel(w2, c2) <= 1e-3;

    let cfg = standard(Pr, false, 1, LARGE_N, 3.0, 6.0, 1.0, 1e5);
    let agg = reg.aggregate(&cfg, 20);
    let pu = summary(&agg, MetricKey::at(Metric::MeanResponseTime, Pu, Ac));
    let su = summary(&agg, MetricKey::at(Metric::MeanResponseTime, Su, Ac));
    let pass = formula_ok && rel(pu.mean, 0.1) <= 0.05 && rel(su.mean, w2) <= 0.05;
    Verdict::new(
        pass,
        format!(
            "formula vs CTMC W1 {w1:.6}/{c1:.6} W2 {w2:.6}/{c2:.6}; sim W_PU {:.5} W_SU {:.5}",
            pu.mean, su.mean
        ),
    )
}

fn c6_scheme_a(reg: &mut Registry) -> Verdict {
    let key = MetricKey::total(Metric::MeanWaitingTime);
    let mut s = HashMap::new();
    for d in [Pr, Pri] {
        for sec in [true, false] {
            let cfg = standard(d, sec, 1, 20, 3.0, 6.0, 1.0, ORDER_HORIZON);
            s.insert((d, sec), summary(&reg.aggregate(&cfg, ORDER_REPS), key));
        }
    }
    let (best, on_pr, off_pri, worst) = (s[&(Pr, false)], s[&(Pr, true)], s[&(Pri, false)], s[&(Pri, true)]);
    let pass = best.mean < on_pr.mean
        && best.mean < off_pri.mean
        && on_pr.mean < worst.mean
        && off_pri.mean < worst.mean
        && best.separated_from(&worst);
    Verdict::new(
        pass,
        format!(
            "Wq total at SU=6: OFF+PR {:.4}±{:.4}, ON+PR {:.4}, OFF+PRI {:.4}, ON+PRI {:.4}±{:.4}",
            best.mean, best.half_width, on_pr.mean, off_pri.mean, worst.mean, worst.half_width
        ),
    )
}

fn c7_scheme_b(reg: &mut Registry) -> Verdict {
    let key = MetricKey::end_to_end(Metric::MeanQueueLength, Su);
    let mut pass = true;
    let mut worst_gap = f64::INFINITY;
    for sec in [true, false] {
        for su in 1..=6 {
            let l: Vec<f64> = [1.0, 3.0, 5.0]
                .iter()
                .map(|&pu| {
                    let cfg = standard(Pr, sec, 1, 20, pu, su as f64, 1.0, SWEEP_HORIZON);
                    summary(&reg.aggregate(&cfg, SWEEP_REPS), key).mean
                })
                .collect();
            for w in l.windows(2) {
                worst_gap = worst_gap.min(w[1] - w[0]);
                pass &= if su == 6 { w[1] > w[0] } else { w[1] >= w[0] };
            }
        }
    }
    Verdict::new(pass, format!("smallest increment of SU Lq across PU steps {worst_gap:.4}"))
}

fn c8_scheme_c(reg: &mut Registry) -> Verdict {
    let mut means = HashMap::new();
    for sec in [true, false] {
        for scv in [4.0, 8.0, 10.0] {
            let cfg = standard(Pr, sec, 1, 20, 3.0, 6.0, scv, ORDER_HORIZON);
            let agg = reg.aggregate(&cfg, SWEEP_REPS);
            for m in FOUR_METRICS {
                means.insert((sec, scv as u32, m), summary(&agg, MetricKey::total(m)).mean);
            }
        }
    }
    let mut violations = Vec::new();
    for m in FOUR_METRICS {
        for sec in [true, false] {
            let v: Vec<f64> = [4, 8, 10].iter().map(|&c| means[&(sec, c, m)]).collect();
            if !(v[0] <= v[1] && v[1] <= v[2]) {
                violations.push(format!("{} not monotone (SEC {sec}): {v:?}", m.name()));
            }
        }
        for scv in [4, 8, 10] {
            let (off, on) = (means[&(false, scv, m)], means[&(true, scv, m)]);
            if off > on {
                violations.push(format!("{} OFF > ON at SCV {scv}: {off} > {on}", m.name()));
            }
        }
    }
    let detail = if violations.is_empty() {
        format!(
            "ON Wq total {:.3} / {:.3} / {:.3}, loss {:.5} / {:.5} / {:.5}",
            means[&(true, 4, Metric::MeanWaitingTime)],
            means[&(true, 8, Metric::MeanWaitingTime)],
            means[&(true, 10, Metric::MeanWaitingTime)],
            means[&(true, 4, Metric::LossProbability)],
            means[&(true, 8, Metric::LossProbability)],
            means[&(true, 10, Metric::LossProbability)],
        )
    } else {
        violations.join("; ")
    };
    Verdict::new(violations.is_empty(), detail)
}

fn c9_scheme_d(reg: &mut Registry) -> Verdict {
    let mut violations = Vec::new();
    let mut at6 = String::new();
    for sec in [true, false] {
        for su in 1..=6 {
            // the CI comparison at SU=6 uses the longer protocol
            let (horizon, reps) = if su == 6 {
                (ORDER_HORIZON, ORDER_REPS)
            } else {
                (SWEEP_HORIZON, SWEEP_REPS)
            };
            let run = |reg: &mut Registry, c| {
                let cfg = standard(Pr, sec, c, 20, 3.0, su as f64, 1.0, horizon);
                reg.aggregate(&cfg, reps)
            };
            let (one, three) = (run(reg, 1), run(reg, 3));
            for m in FOUR_METRICS {
                let (a, b) = (summary(&one, MetricKey::total(m)), summary(&three, MetricKey::total(m)));
                if b.mean > a.mean {
                    violations.push(format!("{} c=3 > c=1 at SEC {sec} SU {su}", m.name()));
                }
                if su == 6 {
                    if !a.separated_from(&b) {
                        violations.push(format!(
                            "{} CIs overlap at SEC {sec} SU 6: c=1 {:.3e}±{:.1e}, c=3 {:.3e}±{:.1e}",
                            m.name(),
                            a.mean,
                            a.half_width,
                            b.mean,
                            b.half_width
                        ));
                    }
                    let _ = write!(at6, "{} {}/{} ", m.name(), fmt_g(a.mean), fmt_g(b.mean));
                }
            }
        }
    }
    let pass = violations.is_empty();
    Verdict::new(pass, if pass { format!("c=1/c=3 at SU=6: {at6}") } else { violations.join("; ") })
}

fn su_departures(config: &NetworkConfig) -> HashMap<u64, f64> {
    let options = RunOptions {
        record_jobs: true,
        ..Default::default()
    };
    Network::new(config, 0, options)
        .and_then(Network::run)
        .expect("run")
        .jobs
        .into_iter()
        .filter(|j| j.class == Su && j.outcome == Outcome::Departed)
        .map(|j| (j.serial, j.end_time))
        .collect()
}

fn c10_dominance() -> Verdict {
    let results: Vec<(usize, usize)> = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let mk = |d| standard(d, true, 1, LARGE_N, 3.0, 6.0, 1.0, 50.0).with_run(seed, 50.0, 0.0);
            let pr = su_departures(&mk(Pr));
            let pri = su_departures(&mk(Pri));
            // an SU that left under PRI must have left no later under PR
            let bad = pri
                .iter()
                .filter(|(serial, t)| pr.get(serial).is_none_or(|p| p > t))
                .count();
            (pri.len(), bad)
        })
        .collect();
    let compared: usize = results.iter().map(|r| r.0).sum();
    let bad: usize = results.iter().map(|r| r.1).sum();
    Verdict::new(bad == 0, format!("1000 seeded runs, {compared} SU departures compared, {bad} violations"))
}

fn pu_signature(trace: &[TraceRecord]) -> Vec<(u64, String, u64, Option<StationKind>)> {
    trace
        .iter()
        .filter_map(|r| match r.job {
            Some((_, Pu, serial)) => Some((r.time.to_bits(), format!("{:?}", r.kind), serial, r.station)),
            _ => None,
        })
        .collect()
}

fn c11_pu_invariance() -> Verdict {
    let mut pass = true;
    let mut events = 0;
    for sec in [true, false] {
        let traces: Vec<_> = (1..=6)
            .into_par_iter()
            .map(|su| {
                let cfg = standard(Pr, sec, 1, 20, 3.0, su as f64, 1.0, 5000.0);
                let options = RunOptions {
                    trace: true,
                    ..Default::default()
                };
                pu_signature(&Network::new(&cfg, 0, options).and_then(Network::run).expect("run").trace)
            })
            .collect();
        events = traces[0].len();
        pass &= traces.iter().all(|t| *t == traces[0]);
    }
    Verdict::new(pass, format!("{events} PU trace records per run, SU rates 1..6, SEC on and off"))
}

fn c12_loss_anchor(reg: &mut Registry) -> Verdict {
    let cfg = standard(Pr, true, 1, 20, 5.0, 6.0, 1.0, ORDER_HORIZON);
    let loss = summary(&reg.aggregate(&cfg, ORDER_REPS), MetricKey::total(Metric::LossProbability));
    Verdict::new(
        (0.002..=0.03).contains(&loss.mean),
        format!("total loss at SEC ON, PU 5, SU 6: {:.5} ± {:.5} (reference ~0.009)", loss.mean, loss.half_width),
    )
}

fn c13_determinism(reg: &Registry) -> Verdict {
    let mismatches = reg
        .runs
        .par_iter()
        .filter(|(cfg, rep, digest)| format!("{:?}", run_replication(cfg, *rep).expect("rerun")) != *digest)
        .count();

    // the scheme runner and the CSV writer: serial vs parallel, twice
    let mut scheme = SchemeConfig::builtin(SchemeId::A).unwrap();
    scheme.reps = 3;
    scheme.horizon = 2000.0;
    let csv = |parallel| {
        let opts = RunnerOptions {
            parallel,
            trace_dir: None,
        };
        let res = experiments::run_scheme(&scheme, &opts).expect("scheme run");
        experiments::csv_string(&experiments::rows(&res)).expect("csv")
    };
    let (a, b, c) = (csv(1), csv(0), csv(1));
    let csv_ok = a == b && a == c;

    let pass = mismatches == 0 && csv_ok && reg.conservation_failures.is_empty();
    let mut detail = format!(
        "{} replications re-executed, {mismatches} differ; scheme CSV identical: {csv_ok}; conservation failures: {}",
        reg.runs.len(),
        reg.conservation_failures.len()
    );
    for f in reg.conservation_failures.iter().take(3) {
        let _ = write!(detail, "; {f}");
    }
    Verdict::new(pass, detail)
}

fn main() {
    // `cargo test` passes harness flags such as `--quiet`; only `--list` matters.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    // ACCEPTANCE_ONLY=7 runs a single criterion
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut reg = Registry::default();
    let mut failed = Vec::new();
    let mut report = |id: u32, title: &str, binding: bool, f: &mut dyn FnMut() -> Verdict| {
        if only.is_some_and(|o| o != id) {
            return;
        }
        let start = Instant::now();
        let v = f();
        let tag = match (v.pass, binding) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (informational)",
        };
        println!(
            "criterion {id:>2} [{tag}] {title}: {} ({:.1} s)",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass && binding {
            failed.push(id);
        }
    };

    report(1, "GE moment fidelity", true, &mut c1_ge_moments);
    report(2, "M/M/1 degeneracy", true, &mut || c2_mm1(&mut reg));
    report(3, "M/M/1/N loss", true, &mut || c3_mm1n(&mut reg));
    report(4, "Erlang-C degeneracy", true, &mut || c4_erlang_c(&mut reg));
    report(5, "two-class PR degeneracy", true, &mut || c5_two_class_pr(&mut reg));
    report(6, "scheme A ordering", true, &mut || c6_scheme_a(&mut reg));
    report(7, "scheme B ordering", true, &mut || c7_scheme_b(&mut reg));
    report(8, "scheme C ordering", true, &mut || c8_scheme_c(&mut reg));
    report(9, "scheme D ordering", true, &mut || c9_scheme_d(&mut reg));
    report(10, "PR dominance per job", true, &mut c10_dominance);
    report(11, "PU trace invariance", true, &mut c11_pu_invariance);
    report(12, "loss anchor", false, &mut || c12_loss_anchor(&mut reg));
    report(13, "determinism and conservation", true, &mut || c13_determinism(&reg));

    if failed.is_empty() {
        println!("acceptance: all binding criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
