//! Seeded discrete-event simulation of the inspection queue.
//!
//! Competing exponential clocks drive the chain: arrivals at `lambda`
//! (sampling an action from the population mixture), services at `mu` while
//! the server is busy, and an independent Poisson stream of *probe* arrivals
//! at rate `lambda` that never joins. Each probe scores both actions from the
//! state it observes — join as `R - c_w (q+1)/mu`, inspect as the fee plus
//! the join payoff only below the threshold — so the estimates check the
//! stationary law and the utility integration, not the simulator's own
//! bookkeeping. Poisson arrivals see time averages, so any probe rate works.
//!
//! Everything is driven by a ChaCha8 generator seeded explicitly: the same
//! seed gives a bit-identical [`SimResult`].
//!
//! Probe scores within a busy period are strongly correlated, so standard
//! errors come from 64 batch means over the event horizon rather than an iid
//! formula (which would understate them several-fold).

use crate::params::ModelParams;
use crate::scalar::Scalar;
use crate::steady_state::Strategy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const BATCHES: usize = 64;

/// Simulation estimates with their uncertainty and provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult<S: Scalar> {
    pub seed: u64,
    /// Total clock firings simulated (arrivals + services + probes).
    pub horizon: u64,
    pub n_probes: u64,
    pub u_join_hat: S,
    pub u_join_se: S,
    pub u_inspect_hat: S,
    pub u_inspect_se: S,
    /// Time-weighted state occupancy, normalized to sum to one.
    pub empirical_pi: Vec<S>,
    pub mean_queue_hat: S,
}

struct BatchAcc {
    sums: [f64; BATCHES],
    counts: [u64; BATCHES],
}

impl BatchAcc {
    fn new() -> Self {
        BatchAcc { sums: [0.0; BATCHES], counts: [0; BATCHES] }
    }

    fn push(&mut self, batch: usize, value: f64) {
        self.sums[batch] += value;
        self.counts[batch] += 1;
    }

    /// Overall mean and batch-means standard error.
    fn summarize(&self) -> (f64, f64) {
        let total: f64 = self.sums.iter().sum();
        let n: u64 = self.counts.iter().sum();
        if n == 0 {
            return (0.0, f64::INFINITY);
        }
        let mean = total / n as f64;
        let mut filled = 0usize;
        let mut var_acc = 0.0;
        for b in 0..BATCHES {
            if self.counts[b] > 0 {
                let m = self.sums[b] / self.counts[b] as f64;
                var_acc += (m - mean) * (m - mean);
                filled += 1;
            }
        }
        if filled < 2 {
            return (mean, f64::INFINITY);
        }
        let se = (var_acc / (filled as f64 - 1.0) / filled as f64).sqrt();
        (mean, se)
    }
}

/// Run the simulation for `horizon` clock firings with the given seed.
///
/// Internal accumulation is in `f64` (the generator's native width); results
/// are converted to `S` at the end.
pub fn simulate<S: Scalar>(
    params: &ModelParams<S>,
    strategy: &Strategy<S>,
    horizon: u64,
    seed: u64,
) -> SimResult<S> {
    let lambda = params.lambda.to_f64().unwrap();
    let mu = params.mu.to_f64().unwrap();
    let c_w = params.c_w.to_f64().unwrap();
    let reward = params.reward.to_f64().unwrap();
    let fee = params.inspect_cost.to_f64().unwrap();
    let n_e = params.n_e;
    let p_inspect = strategy.p_inspect.to_f64().unwrap();
    let p_join = strategy.p_join.to_f64().unwrap();
    let probe_rate = lambda;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: u32 = 0;
    let mut occupancy: Vec<f64> = vec![0.0; 16];
    let mut total_time = 0.0;
    let mut join_scores = BatchAcc::new();
    let mut inspect_scores = BatchAcc::new();
    let mut n_probes = 0u64;

    let join_payoff = |q: u32| reward - c_w * (q as f64 + 1.0) / mu;

    for event in 0..horizon {
        let service = if q > 0 { mu } else { 0.0 };
        let total_rate = lambda + probe_rate + service;
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / total_rate;
        total_time += dt;
        if q as usize >= occupancy.len() {
            occupancy.resize(q as usize + 8, 0.0);
        }
        occupancy[q as usize] += dt;

        let pick: f64 = rng.random::<f64>() * total_rate;
        if pick < lambda {
            // Real arrival: sample its action from the mixture.
            let a: f64 = rng.random();
            let joins = if a < p_inspect {
                q < n_e
            } else {
                a < p_inspect + p_join
            };
            if joins {
                q += 1;
            }
        } else if pick < lambda + probe_rate {
            // Probe: score both actions from the observed state.
            let batch = ((event as u128 * BATCHES as u128) / horizon as u128) as usize;
            join_scores.push(batch, join_payoff(q));
            let inspect_score = if q < n_e { join_payoff(q) - fee } else { -fee };
            inspect_scores.push(batch, inspect_score);
            n_probes += 1;
        } else {
            // Service completion; unreachable at q = 0 where the rate is 0.
            q = q.saturating_sub(1);
        }
    }

    let (jm, jse) = join_scores.summarize();
    let (im, ise) = inspect_scores.summarize();
    let mut mean_queue = 0.0;
    if total_time > 0.0 {
        for (i, w) in occupancy.iter().enumerate() {
            mean_queue += i as f64 * w / total_time;
        }
    }
    while occupancy.len() > 1 && *occupancy.last().unwrap() == 0.0 {
        occupancy.pop();
    }
    let empirical_pi = occupancy.iter().map(|&w| S::of(w / total_time)).collect();

    SimResult {
        seed,
        horizon,
        n_probes,
        u_join_hat: S::of(jm),
        u_join_se: S::of(jse),
        u_inspect_hat: S::of(im),
        u_inspect_se: S::of(ise),
        empirical_pi,
        mean_queue_hat: S::of(mean_queue),
    }
}
