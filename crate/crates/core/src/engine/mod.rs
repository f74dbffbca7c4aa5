//! Exact continuous-time simulation on tori and on `Z^d`.

mod graphical;
mod sim;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use graphical::{run_graphical, Arrow, ArrowRecord};
pub use sim::{CapReason, Caps, Simulator, Step};

use crate::error::{Error, Result};
use crate::lattice::{Site, SpinConfig};
use crate::rng::{stream, Purpose};
use crate::rules::RuleSet;
use crate::scalar::Scalar;
use crate::stats::{wilson, Estimate};

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// Reached the empty configuration (sparse runs) at `time`.
    Absorbed { time: f64 },
    /// Stopped by a cap at `time`.
    Capped { time: f64, particles: bool },
}

/// One non-null event.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub template: usize,
    pub anchor: Site,
    pub flips: Vec<Site>,
}

/// Samples of one run at the requested times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub label: String,
    pub seed: u64,
    pub replica: u64,
    pub initial: SpinConfig,
    pub sample_times: Vec<f64>,
    /// Configuration at each reached sample time.
    pub samples: Vec<SpinConfig>,
    pub events: Option<Vec<Event>>,
    pub status: RunStatus,
    pub event_count: u64,
}

impl Trajectory {
    /// Final sampled configuration.
    pub fn last(&self) -> &SpinConfig {
        self.samples.last().unwrap_or(&self.initial)
    }

    /// Columnar text export: `time ones sites`, one line per sample.
    pub fn to_table(&self) -> String {
        let mut out = String::from("time\tones\tsites\n");
        for (t, x) in self.sample_times.iter().zip(&self.samples) {
            let sites: Vec<String> = x
                .support_list()
                .iter()
                .map(|c| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
                .collect();
            let _ = writeln!(out, "{t}\t{}\t{}", x.ones(), sites.join(" "));
        }
        out
    }
}

/// Options common to single runs.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    pub replica: u64,
    /// Increasing, nonnegative sample times; the run stops at the last.
    pub sample_times: Vec<f64>,
    pub record_events: bool,
    /// Draw only from active instances (dense runs; sparse runs always skip).
    pub skip_null: bool,
    pub caps: Caps,
}

impl RunOptions {
    pub fn new(seed: u64, sample_times: Vec<f64>) -> Self {
        RunOptions {
            seed,
            replica: 0,
            sample_times,
            record_events: false,
            skip_null: true,
            caps: Caps::default(),
        }
    }

    pub fn replica(mut self, replica: u64) -> Self {
        self.replica = replica;
        self
    }

    pub fn record_events(mut self) -> Self {
        self.record_events = true;
        self
    }

    fn check(&self) -> Result<()> {
        if self.sample_times.is_empty() {
            return Err(Error::param("sample_times", "need at least one time"));
        }
        let mut prev = 0.0;
        for &t in &self.sample_times {
            if !t.is_finite() || t < prev {
                return Err(Error::param("sample_times", "must be finite, nonnegative and nondecreasing"));
            }
            prev = t;
        }
        Ok(())
    }
}

fn drive(mut sim: Simulator, label: String, initial: SpinConfig, opts: &RunOptions) -> Trajectory {
    let mut samples = Vec::with_capacity(opts.sample_times.len());
    let mut events = opts.record_events.then(Vec::new);
    let mut status = RunStatus::Completed;
    let mut count = 0u64;
    'outer: for &ts in &opts.sample_times {
        loop {
            match sim.step(ts) {
                Step::Event { template, anchor } => {
                    count += 1;
                    if let Some(ev) = events.as_mut() {
                        ev.push(Event {
                            time: sim.time(),
                            template,
                            anchor: sim.site_of(anchor),
                            flips: sim.last_toggled(),
                        });
                    }
                    if !sim.is_dense() && sim.ones() == 0 && status == RunStatus::Completed {
                        status = RunStatus::Absorbed { time: sim.time() };
                    }
                }
                Step::Null => {}
                Step::Horizon | Step::Frozen => break,
                Step::Capped(reason) => {
                    count += 1;
                    status = RunStatus::Capped {
                        time: sim.time(),
                        particles: reason == CapReason::Particles,
                    };
                    break 'outer;
                }
            }
        }
        samples.push(sim.config());
    }
    Trajectory {
        label,
        seed: opts.seed,
        replica: opts.replica,
        initial,
        sample_times: opts.sample_times[..samples.len()].to_vec(),
        samples,
        events,
        status,
        event_count: count,
    }
}

/// Runs `rules` on the torus of `x0`.
pub fn run_dense<S: Scalar>(rules: &RuleSet<S>, x0: &SpinConfig, opts: &RunOptions) -> Result<Trajectory> {
    opts.check()?;
    let rng = stream(opts.seed, opts.replica, Purpose::Dynamics);
    let sim = Simulator::dense(rules, x0, rng, opts.skip_null)?;
    Ok(drive(sim, rules.name().to_string(), x0.clone(), opts))
}

/// Runs `rules` on `Z^d` from the finite configuration `y0`.
pub fn run_sparse<S: Scalar>(rules: &RuleSet<S>, y0: &SpinConfig, opts: &RunOptions) -> Result<Trajectory> {
    opts.check()?;
    let rng = stream(opts.seed, opts.replica, Purpose::Dynamics);
    let sim = Simulator::sparse(rules, y0, rng, opts.caps)?;
    let mut traj = drive(sim, rules.name().to_string(), y0.clone(), opts);
    if y0.is_zero() {
        traj.status = RunStatus::Absorbed { time: 0.0 };
    }
    Ok(traj)
}

/// Replicas `0..n` of a run, dense or sparse according to `x0`; results in replica order.
pub fn run_replicas<S: Scalar>(
    rules: &RuleSet<S>,
    x0: &SpinConfig,
    opts: &RunOptions,
    replicas: u64,
) -> Result<Vec<Trajectory>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let o = opts.clone().replica(r);
            if x0.is_dense() {
                run_dense(rules, x0, &o)
            } else {
                run_sparse(rules, x0, &o)
            }
        })
        .collect()
}

/// Survival statistics of a sparse process.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Survival {
    /// `P[Y_t != 0]` with a 95% Wilson interval; capped runs count as alive.
    pub estimate: Estimate,
    pub capped: usize,
    /// Extinction times of the runs that died, in replica order.
    pub extinction_times: Vec<f64>,
}

/// Estimates `P[Y_t != 0]` from `replicas` independent runs.
pub fn sample_survival<S: Scalar>(
    rules: &RuleSet<S>,
    y0: &SpinConfig,
    t: f64,
    replicas: u64,
    seed: u64,
    caps: Caps,
) -> Result<Survival> {
    if y0.is_dense() {
        return Err(Error::Config("survival needs a finite-support start".into()));
    }
    let outcomes: Vec<Result<RunStatus>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut opts = RunOptions::new(seed, vec![t]).replica(r);
            opts.caps = caps;
            run_sparse(rules, y0, &opts).map(|tr| tr.status)
        })
        .collect();
    let mut alive = 0;
    let mut capped = 0;
    let mut times = Vec::new();
    for o in outcomes {
        match o? {
            RunStatus::Completed => alive += 1,
            RunStatus::Capped { .. } => {
                alive += 1;
                capped += 1;
            }
            RunStatus::Absorbed { time } => times.push(time),
        }
    }
    Ok(Survival {
        estimate: wilson(alive, replicas as usize),
        capped,
        extinction_times: times,
    })
}
