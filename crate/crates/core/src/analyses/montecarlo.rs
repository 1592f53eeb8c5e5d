use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::netlist::{AnalysisDirective, Circuit, Distribution, ElementKind};
use crate::par::{map_indexed, Exec};

use super::{AnalysisError, Result};

/// Keystream words reserved per device within a replica's stream.
const WORDS_PER_DEVICE: u128 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub count: usize,
    pub seed: u64,
    /// Additive threshold deviation, V.
    pub vth: Option<Distribution>,
    /// Multiplicative mobility factor.
    pub mu: Option<Distribution>,
}

impl McSpec {
    /// The first `.mc` directive of a circuit.
    pub fn from_circuit(c: &Circuit) -> Option<Self> {
        c.analyses.iter().find_map(|a| match *a {
            AnalysisDirective::Mc { count, seed, vth, mu } => Some(Self { count, seed, vth, mu }),
            _ => None,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(AnalysisError::Precondition("Monte Carlo count must be >= 1".into()));
        }
        for d in [self.vth, self.mu].into_iter().flatten() {
            let (Distribution::Normal { mean, sigma } | Distribution::LogNormal { mean, sigma }) = d;
            if !mean.is_finite() || !sigma.is_finite() || sigma < 0.0 {
                return Err(AnalysisError::Precondition(format!("invalid distribution {d:?}")));
            }
        }
        Ok(())
    }
}

/// Per-device deviations of one replica, in OTFT element order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSamples {
    pub dvth: Vec<f64>,
    pub mu_scale: Vec<f64>,
}

fn draw(d: Option<Distribution>, rng: &mut ChaCha8Rng, neutral: f64, multiplicative: bool) -> f64 {
    let Some(d) = d else { return neutral };
    let (mean, sigma, log) = match d {
        Distribution::Normal { mean, sigma } => (mean, sigma, false),
        Distribution::LogNormal { mean, sigma } => (mean, sigma, true),
    };
    let x = Normal::new(mean, sigma).expect("validated distribution").sample(rng);
    match (log, multiplicative) {
        (true, _) => x.exp(),
        (false, true) => x.max(1e-6),
        (false, false) => x,
    }
}

/// Samples for replica `replica`. Each (replica, device) pair reads its own
/// slice of a ChaCha keystream keyed by the seed, so results do not depend
/// on evaluation order or thread count.
pub fn replica_samples(spec: &McSpec, replica: usize, devices: usize) -> ReplicaSamples {
    let mut dvth = Vec::with_capacity(devices);
    let mut mu_scale = Vec::with_capacity(devices);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(replica as u64);
    for d in 0..devices {
        rng.set_word_pos(d as u128 * WORDS_PER_DEVICE);
        dvth.push(draw(spec.vth, &mut rng, 0.0, false));
        mu_scale.push(draw(spec.mu, &mut rng, 1.0, true));
    }
    ReplicaSamples { dvth, mu_scale }
}

/// Copy of `c` with the replica's deviations added to each OTFT.
pub fn apply_samples(c: &Circuit, s: &ReplicaSamples) -> Circuit {
    let mut out = c.clone();
    let otfts = out.elements.iter_mut().filter_map(|e| match &mut e.kind {
        ElementKind::Otft { overrides, .. } => Some(overrides),
        _ => None,
    });
    for (k, o) in otfts.enumerate() {
        o.dvth += s.dvth[k];
        o.mu_scale = Some(o.mu_scale.unwrap_or(1.0) * s.mu_scale[k]);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub samples: Vec<ReplicaSamples>,
    /// `None` where the replica's simulation failed.
    pub metrics: Vec<Option<f64>>,
    pub passed: Vec<bool>,
    #[serde(rename = "yield")]
    pub yield_fraction: f64,
}

/// Runs `metric` on `count` perturbed replicas. A replica passes when its
/// metric succeeds and satisfies `predicate`.
pub fn monte_carlo<F, P>(c: &Circuit, spec: &McSpec, exec: Exec, metric: F, predicate: P) -> Result<McResult>
where
    F: Fn(&Circuit) -> Result<f64> + Sync + Send,
    P: Fn(f64) -> bool + Sync + Send,
{
    spec.validate()?;
    let devices = c.otft_count();
    let runs = map_indexed(spec.count, exec, |r| {
        let s = replica_samples(spec, r, devices);
        let m = metric(&apply_samples(c, &s)).ok().filter(|v| v.is_finite());
        let ok = m.is_some_and(&predicate);
        (s, m, ok)
    });
    let mut samples = Vec::with_capacity(spec.count);
    let mut metrics = Vec::with_capacity(spec.count);
    let mut passed = Vec::with_capacity(spec.count);
    for (s, m, ok) in runs {
        samples.push(s);
        metrics.push(m);
        passed.push(ok);
    }
    let yield_fraction = passed.iter().filter(|&&p| p).count() as f64 / spec.count as f64;
    Ok(McResult { samples, metrics, passed, yield_fraction })
}
