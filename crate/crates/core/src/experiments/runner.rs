use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{aggregate, AggregateStats, RunStats};
use crate::network::{Network, RunOptions};

use super::scheme::{GridPoint, SchemeConfig};

#[derive(Debug, Clone, Default)]
pub struct RunnerOptions {
    /// Worker threads; 0 uses every available core, 1 runs serially.
    pub parallel: usize,
    /// When set, replication 0 of every grid point dumps its event trace here.
    pub trace_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct PointResult {
    pub point: GridPoint,
    pub outcome: Result<AggregateStats>,
}

#[derive(Debug)]
pub struct SchemeResult {
    pub scheme: SchemeConfig,
    pub points: Vec<PointResult>,
}

impl SchemeResult {
    pub fn failures(&self) -> impl Iterator<Item = (&GridPoint, &Error)> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().err().map(|e| (&p.point, e)))
    }

    pub fn succeeded(&self) -> impl Iterator<Item = (&GridPoint, &AggregateStats)> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|a| (&p.point, a)))
    }
}

/// Trace file for replication 0 of a grid point.
pub fn trace_path(dir: &Path, scheme: &SchemeConfig, point: &GridPoint) -> PathBuf {
    dir.join(format!("{}_point{:03}_rep0.trace", scheme.id, point.index))
}

fn run_task(scheme: &SchemeConfig, point: &GridPoint, rep: usize, trace_dir: Option<&Path>) -> Result<RunStats> {
    let config = point.network_config(scheme)?;
    let trace = rep == 0 && trace_dir.is_some();
    let options = RunOptions {
        trace,
        ..RunOptions::default()
    };
    let out = Network::new(&config, rep as u64, options)?.run()?;
    if let (true, Some(dir)) = (trace, trace_dir) {
        let file = std::fs::File::create(trace_path(dir, scheme, point))?;
        let mut w = BufWriter::new(file);
        for rec in &out.trace {
            writeln!(w, "{rec}")?;
        }
        w.flush()?;
    }
    Ok(out.stats)
}

/// Runs every replication of every grid point and aggregates per point.
///
/// Replication seeds depend only on the base seed and the replication index,
/// so all grid points share common random numbers and the result does not
/// depend on scheduling. A failing grid point is reported in its
/// [`PointResult`] without affecting the others.
pub fn run_scheme(scheme: &SchemeConfig, options: &RunnerOptions) -> Result<SchemeResult> {
    scheme.validate()?;
    if let Some(dir) = &options.trace_dir {
        std::fs::create_dir_all(dir)?;
    }
    let grid = scheme.grid();
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|p| (0..scheme.reps).map(move |r| (p, r)))
        .collect();
    let trace_dir = options.trace_dir.as_deref();
    let exec = |&(p, r): &(usize, usize)| run_task(scheme, &grid[p], r, trace_dir);

    let runs: Vec<Result<RunStats>> = if options.parallel == 1 {
        tasks.iter().map(exec).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.parallel)
            .build()
            .map_err(|e| Error::Logic(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(exec).collect())
    };

    let mut runs = runs.into_iter();
    let points = grid
        .iter()
        .map(|point| {
            let chunk: Vec<Result<RunStats>> = runs.by_ref().take(scheme.reps).collect();
            let outcome = chunk
                .into_iter()
                .collect::<Result<Vec<_>>>()
                .and_then(|stats| aggregate(&stats));
            PointResult {
                point: *point,
                outcome,
            }
        })
        .collect();
    Ok(SchemeResult {
        scheme: scheme.clone(),
        points,
    })
}
