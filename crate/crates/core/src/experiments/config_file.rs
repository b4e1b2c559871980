//! Line-oriented `key = value` scenario files.
//!
//! ```text
//! # scheme A with a shorter run
//! scheme  = A
//! horizon = 50000
//! reps    = 10
//! ```
//!
//! Lists are comma separated; an integer range `1-6` expands to
//! `1,2,3,4,5,6`. Recognized keys and their defaults:
//!
//! | key                  | default   |
//! |----------------------|-----------|
//! | `scheme`             | custom    |
//! | `discipline`         | `PR`      |
//! | `security`           | `ON,OFF`  |
//! | `servers`            | `1`       |
//! | `capacity`           | `20`      |
//! | `pu_rate`            | `3`       |
//! | `su_rates`           | required for custom grids |
//! | `scv_arrival`        | `1`       |
//! | `scv_service`        | `1`       |
//! | `mu`                 | `13`      |
//! | `reps`               | `20`      |
//! | `horizon`            | `200000`  |
//! | `warmup`             | `0.1` (fraction of the horizon) |
//! | `seed`               | `1`       |
//! | `p_malicious`        | `0`       |
//! | `p_admission_reject` | `0`       |
//!
//! A built-in `scheme` (A–D) replaces every grid key (`discipline` through
//! `mu`); the run keys still apply.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::Discipline;

use super::scheme::{SchemeConfig, SchemeId, DEFAULT_HORIZON, DEFAULT_REPS, DEFAULT_SEED, DEFAULT_WARMUP_FRACTION};

const KEYS: [&str; 16] = [
    "scheme",
    "discipline",
    "security",
    "servers",
    "capacity",
    "pu_rate",
    "su_rates",
    "scv_arrival",
    "scv_service",
    "mu",
    "reps",
    "horizon",
    "warmup",
    "seed",
    "p_malicious",
    "p_admission_reject",
];

pub fn load_config(path: impl AsRef<Path>) -> Result<SchemeConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

fn err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn numbers(line: usize, key: &str, raw: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in list(raw) {
        if let Some((lo, hi)) = item.split_once('-').filter(|(lo, _)| !lo.is_empty()) {
            let parse = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| err(line, key, format!("malformed range `{item}`")))
            };
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo > hi {
                return Err(err(line, key, format!("empty range `{item}`")));
            }
            out.extend((lo..=hi).map(|v| v as f64));
        } else {
            let v: f64 = item
                .parse()
                .map_err(|_| err(line, key, format!("malformed number `{item}`")))?;
            if !v.is_finite() {
                return Err(err(line, key, format!("non-finite value `{item}`")));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(err(line, key, "empty value"));
    }
    Ok(out)
}

fn single<T: std::str::FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| err(line, key, format!("malformed value `{}`", raw.trim())))
}

fn check(ok: bool, line: usize, key: &str, rule: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(err(line, key, format!("out of domain: {rule}")))
    }
}

/// Parses the text of a scenario file.
pub fn parse_config(text: &str) -> Result<SchemeConfig> {
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, content, "expected `key = value`"))?;
        let key = key.trim();
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            return Err(err(line, key, "unknown key"));
        };
        if let Some(prev) = entries.insert(known, Entry { line, value: value.trim() }) {
            return Err(err(line, key, format!("duplicate key (first set on line {})", prev.line)));
        }
    }

    let scheme = match entries.get("scheme") {
        Some(e) => e
            .value
            .parse::<SchemeId>()
            .map_err(|m| err(e.line, "scheme", m))?,
        None if entries.contains_key("su_rates") => SchemeId::Custom,
        None => return Err(Error::NoScenario),
    };

    let mut cfg = match scheme {
        SchemeId::Custom => {
            let Some(e) = entries.get("su_rates") else {
                return Err(Error::NoScenario);
            };
            let mut cfg = SchemeConfig::builtin(SchemeId::A)?;
            cfg.id = SchemeId::Custom;
            cfg.disciplines = vec![Discipline::PreemptiveResume];
            cfg.su_rates = numbers(e.line, "su_rates", e.value)?;
            apply_grid_keys(&mut cfg, &entries)?;
            cfg
        }
        id => SchemeConfig::builtin(id)?,
    };
    apply_run_keys(&mut cfg, &entries)?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_grid_keys(cfg: &mut SchemeConfig, entries: &HashMap<&str, Entry>) -> Result<()> {
    if let Some(e) = entries.get("discipline") {
        cfg.disciplines = list(e.value)
            .map(|s| s.parse().map_err(|m: String| err(e.line, "discipline", m)))
            .collect::<Result<_>>()?;
    }
    if let Some(e) = entries.get("security") {
        cfg.security = list(e.value)
            .map(|s| match s.to_ascii_uppercase().as_str() {
                "ON" | "TRUE" | "1" => Ok(true),
                "OFF" | "FALSE" | "0" => Ok(false),
                other => Err(err(e.line, "security", format!("expected ON or OFF, got `{other}`"))),
            })
            .collect::<Result<_>>()?;
    }
    if let Some(e) = entries.get("servers") {
        let v = numbers(e.line, "servers", e.value)?;
        check(v.iter().all(|&c| c >= 1.0 && c.fract() == 0.0), e.line, "servers", "positive integers")?;
        cfg.servers = v.into_iter().map(|c| c as usize).collect();
    }
    if let Some(e) = entries.get("capacity") {
        cfg.capacity = single(e.line, "capacity", e.value)?;
    }
    if let Some(e) = entries.get("pu_rate") {
        let v = numbers(e.line, "pu_rate", e.value)?;
        check(v.iter().all(|&r| r >= 0.0), e.line, "pu_rate", "rates >= 0")?;
        cfg.pu_rates = v;
    }
    if let Some(e) = entries.get("su_rates") {
        check(cfg.su_rates.iter().all(|&r| r >= 0.0), e.line, "su_rates", "rates >= 0")?;
    }
    let scv_list = |key: &str| -> Result<Option<Vec<f64>>> {
        entries
            .get(key)
            .map(|e| {
                let v = numbers(e.line, key, e.value)?;
                check(v.iter().all(|&s| s >= 1.0), e.line, key, "GE requires C² >= 1")?;
                Ok(v)
            })
            .transpose()
    };
    let arrival = scv_list("scv_arrival")?.unwrap_or_else(|| vec![1.0]);
    let service = scv_list("scv_service")?.unwrap_or_else(|| vec![1.0]);
    cfg.scv = arrival
        .iter()
        .flat_map(|&a| service.iter().map(move |&s| (a, s)))
        .collect();
    if let Some(e) = entries.get("mu") {
        cfg.mu = single(e.line, "mu", e.value)?;
        check(cfg.mu > 0.0 && cfg.mu.is_finite(), e.line, "mu", "mu > 0")?;
    }
    Ok(())
}

fn apply_run_keys(cfg: &mut SchemeConfig, entries: &HashMap<&str, Entry>) -> Result<()> {
    cfg.reps = DEFAULT_REPS;
    cfg.horizon = DEFAULT_HORIZON;
    cfg.warmup = DEFAULT_WARMUP_FRACTION;
    cfg.seed = DEFAULT_SEED;
    if let Some(e) = entries.get("reps") {
        cfg.reps = single(e.line, "reps", e.value)?;
        check(cfg.reps >= 2, e.line, "reps", "reps >= 2")?;
    }
    if let Some(e) = entries.get("horizon") {
        cfg.horizon = single(e.line, "horizon", e.value)?;
        check(cfg.horizon > 0.0 && cfg.horizon.is_finite(), e.line, "horizon", "horizon > 0")?;
    }
    if let Some(e) = entries.get("warmup") {
        cfg.warmup = single(e.line, "warmup", e.value)?;
        check((0.0..1.0).contains(&cfg.warmup), e.line, "warmup", "fraction in [0, 1)")?;
    }
    if let Some(e) = entries.get("seed") {
        cfg.seed = single(e.line, "seed", e.value)?;
    }
    for (key, slot) in [
        ("p_malicious", &mut cfg.p_malicious),
        ("p_admission_reject", &mut cfg.p_admission_reject),
    ] {
        if let Some(e) = entries.get(key) {
            *slot = single(e.line, key, e.value)?;
            check((0.0..=1.0).contains(slot), e.line, key, "probability in [0, 1]")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scheme_alone() {
        let cfg = parse_config("scheme = A\n").unwrap();
        assert_eq!(cfg, SchemeConfig::builtin(SchemeId::A).unwrap());
        assert_eq!(cfg.reps, 20);
        assert_eq!(cfg.grid().len(), 24);
    }

    #[test]
    fn scheme_overrides_grid_keys_but_not_run_keys() {
        let cfg = parse_config("scheme = B\npu_rate = 7\nreps = 5\nhorizon = 1000\nseed = 9\n").unwrap();
        assert_eq!(cfg.pu_rates, vec![1.0, 3.0, 5.0]);
        assert_eq!((cfg.reps, cfg.horizon, cfg.seed), (5, 1000.0, 9));
    }

    #[test]
    fn scv_below_one_rejected() {
        let e = parse_config("su_rates = 1-6\nscv_arrival = 0.5\n").unwrap_err();
        match e {
            Error::Config { line, key, .. } => assert_eq!((line, key.as_str()), (2, "scv_arrival")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_has_no_scenario() {
        assert!(matches!(parse_config(""), Err(Error::NoScenario)));
        assert!(matches!(parse_config("# only a comment\nreps = 4\n"), Err(Error::NoScenario)));
    }

    #[test]
    fn unknown_and_malformed_keys() {
        let e = parse_config("scheme = A\nspeed = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, ref key, .. } if key == "speed"));
        let e = parse_config("su_rates = 1, x\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, ref key, .. } if key == "su_rates"));
        assert!(parse_config("scheme = Z\n").is_err());
        assert!(parse_config("scheme = A\nreps = 1\n").is_err());
        assert!(parse_config("scheme = A\nwarmup = 1.5\n").is_err());
        assert!(parse_config("scheme = A\nscheme = B\n").is_err());
        assert!(parse_config("scheme A\n").is_err());
    }

    #[test]
    fn custom_grid() {
        let text = "\
            discipline = PR, PRI\n\
            security = OFF\n\
            servers = 1,3\n\
            capacity = 10\n\
            pu_rate = 2\n\
            su_rates = 1-3, 4.5\n\
            scv_arrival = 1, 4\n\
            scv_service = 2\n\
            mu = 12\n\
            p_admission_reject = 0.1 # trailing comment\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.id, SchemeId::Custom);
        assert_eq!(cfg.su_rates, vec![1.0, 2.0, 3.0, 4.5]);
        assert_eq!(cfg.scv, vec![(1.0, 2.0), (4.0, 2.0)]);
        assert_eq!(cfg.security, vec![false]);
        assert_eq!(cfg.capacity, 10);
        assert_eq!(cfg.mu, 12.0);
        assert_eq!(cfg.p_admission_reject, 0.1);
        assert_eq!(cfg.grid().len(), 2 * 2 * 2 * 4);
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.conf");
        std::fs::write(&path, "scheme = D\nreps = 3\n").unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.servers, vec![1, 3]);
        assert!(load_config(dir.path().join("missing")).is_err());
    }
}
