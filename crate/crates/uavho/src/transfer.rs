//! Centralised weight averaging across per-path models, layer-frozen
//! fine-tuning on a new path, and weight-similarity diagnostics.
//!
//! Aggregation is a single offline round: the global model is the
//! element-wise arithmetic mean of the individual models' parameters. No
//! client/server machinery, no iterative rounds.

use std::path::Path;

use crate::agent::{self, AgentConfig, TrainReport};
use crate::env::{FlightPath, Scenario};
use crate::qnet::{FreezeMask, QNetwork};
use crate::{Error, Result};

/// Labeled, spec-identical models (one per training path).
#[derive(Debug, Clone)]
pub struct ModelSet {
    entries: Vec<(String, QNetwork)>,
}

impl ModelSet {
    /// Builds a set, requiring at least one model and identical layer specs.
    pub fn from_entries(entries: Vec<(String, QNetwork)>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::Config("model set is empty".into()))?;
        let spec = first.1.spec().clone();
        for (label, net) in &entries {
            if net.spec() != &spec {
                return Err(Error::Shape(format!(
                    "model '{label}' has layers {:?}, expected {:?}",
                    net.spec().layer_sizes,
                    spec.layer_sizes
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &QNetwork)> {
        self.entries.iter().map(|(l, n)| (l.as_str(), n))
    }
}

/// Neumaier-compensated mean over `n` values fed one at a time.
struct MeanAcc {
    sum: f64,
    comp: f64,
}

impl MeanAcc {
    fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn mean(&self, n: usize) -> f64 {
        (self.sum + self.comp) / n as f64
    }
}

/// Global model: element-wise arithmetic mean of every weight and bias.
/// Compensated summation keeps the result independent of model order to
/// well below 1e-15 per parameter.
pub fn average_weights(models: &ModelSet) -> Result<QNetwork> {
    let n = models.len();
    let (_, first) = models.entries.first().expect("ModelSet is non-empty");
    let mut global = first.copy_weights();
    let layers = global.spec().weight_layers();
    for l in 0..layers {
        for k in 0..global.w_t[l].len() {
            let mut acc = MeanAcc::new();
            for (_, net) in &models.entries {
                acc.add(net.w_t[l][k]);
            }
            global.w_t[l][k] = acc.mean(n);
        }
        for k in 0..global.b[l].len() {
            let mut acc = MeanAcc::new();
            for (_, net) in &models.entries {
                acc.add(net.b[l][k]);
            }
            global.b[l][k] = acc.mean(n);
        }
    }
    Ok(global)
}

/// Fine-tunes the global model on a new path with the first `freeze_layers`
/// weight layers frozen and the reduced learning rate `alpha_fine`. The
/// optimizer starts fresh; no moments carry over from pre-training.
///
/// Exploration stays at the floor (`epsilon_min`) for the whole run: the
/// transferred model already encodes a policy, and re-annealing ε from
/// `epsilon_start` would spend hundreds of episodes acting randomly no
/// matter how good that policy is.
#[allow(clippy::too_many_arguments)]
pub fn finetune(
    global: &QNetwork,
    scenario: &Scenario,
    new_path: &FlightPath,
    freeze_layers: usize,
    alpha_fine: f64,
    cfg: &AgentConfig,
    seed: u64,
    episodes: usize,
) -> Result<(QNetwork, TrainReport)> {
    let layers = global.spec().weight_layers();
    if freeze_layers >= layers {
        return Err(Error::Config(format!(
            "freeze_layers {freeze_layers} must be < {layers} weight layers"
        )));
    }
    let mut fine_cfg = cfg.clone();
    fine_cfg.alpha = alpha_fine;
    fine_cfg.epsilon_start = fine_cfg.epsilon_min;
    let mask = FreezeMask::freeze_first(freeze_layers, layers);
    agent::train(
        scenario,
        new_path,
        &fine_cfg,
        &scenario.reward,
        seed,
        episodes,
        Some(global.copy_weights()),
        Some(mask),
    )
}

/// Cosine similarity and Euclidean distance over the flattened parameters
/// (canonical layer order: row-major weights then biases, layer by layer).
pub fn similarity(a: &QNetwork, b: &QNetwork) -> Result<(f64, f64)> {
    if a.spec() != b.spec() {
        return Err(Error::Shape(format!(
            "similarity between layers {:?} and {:?}",
            a.spec().layer_sizes,
            b.spec().layer_sizes
        )));
    }
    let u = a.flatten();
    let v = b.flatten();
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    let mut dist_sq = 0.0;
    for (x, y) in u.iter().zip(&v) {
        dot += x * y;
        nu += x * x;
        nv += y * y;
        let d = x - y;
        dist_sq += d * d;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain(
            "cosine similarity undefined for a zero-parameter model".into(),
        ));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt()), dist_sq.sqrt()))
}

/// Measurement phase: before or after fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Pre,
    Post,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pre => "pre",
            Self::Post => "post",
        }
    }
}

/// One similarity measurement between two labeled models.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub model_a: String,
    pub model_b: String,
    pub phase: Phase,
    pub cosine: f64,
    pub euclidean: f64,
}

/// Collection of similarity measurements, exportable as CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimilarityReport {
    pub rows: Vec<SimilarityRow>,
}

impl SimilarityReport {
    /// Appends one row per model in `set`: `reference` vs each individual.
    pub fn push_reference_rows(
        &mut self,
        reference_label: &str,
        reference: &QNetwork,
        set: &ModelSet,
        phase: Phase,
    ) -> Result<()> {
        for (label, net) in set.iter() {
            let (cosine, euclidean) = similarity(reference, net)?;
            self.rows.push(SimilarityRow {
                model_a: reference_label.to_string(),
                model_b: label.to_string(),
                phase,
                cosine,
                euclidean,
            });
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_a,model_b,phase,cosine,euclidean\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.model_a,
                r.model_b,
                r.phase.as_str(),
                r.cosine,
                r.euclidean
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
