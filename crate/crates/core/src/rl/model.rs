use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{argmax, Mlp, RlError, TrainConfig};
use crate::dac::{ControlPolicy, DacError, Observation};

pub const MODEL_FORMAT: &str = "dacplan-q";
pub const MODEL_VERSION: u32 = 1;

/// Running mean and variance of the inputs (Welford).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Normalizer {
    pub fn new(len: usize) -> Self {
        Self { count: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    pub fn observe(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for (i, &v) in x.iter().enumerate() {
            let delta = v - self.mean[i];
            self.mean[i] += delta / n;
            self.m2[i] += delta * (v - self.mean[i]);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.count < 2 {
            return x.to_vec();
        }
        let n = self.count as f64;
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.mean[i]) / ((self.m2[i] / n).sqrt() + 1e-8))
            .collect()
    }
}

/// A frozen Q-network acting greedily.
#[derive(Debug, Clone, PartialEq)]
pub struct QPolicy {
    net: Mlp,
    normalizer: Option<Normalizer>,
    config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    activation: String,
    layer_sizes: Vec<usize>,
    num_actions: usize,
    params: Vec<f64>,
    normalizer: Option<Normalizer>,
    config: TrainConfig,
}

impl QPolicy {
    pub fn new(net: Mlp, normalizer: Option<Normalizer>, config: TrainConfig) -> Self {
        Self { net, normalizer, config }
    }

    pub fn network(&self) -> &Mlp {
        &self.net
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn num_actions(&self) -> usize {
        self.net.output_len()
    }

    pub fn input(&self, diff: &[f64]) -> Vec<f64> {
        match &self.normalizer {
            Some(n) => n.apply(diff),
            None => diff.to_vec(),
        }
    }

    pub fn q_values(&self, diff: &[f64]) -> Result<Vec<f64>, RlError> {
        self.net.forward(&self.input(diff))
    }

    pub fn act(&self, diff: &[f64]) -> Result<usize, RlError> {
        Ok(argmax(&self.q_values(diff)?))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            activation: "relu".into(),
            layer_sizes: self.net.sizes().to_vec(),
            num_actions: self.num_actions(),
            params: self.net.params().to_vec(),
            normalizer: self.normalizer.clone(),
            config: self.config.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RlError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| RlError::Model(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(RlError::Model(format!("unsupported model {} v{}", file.format, file.version)));
        }
        if file.activation != "relu" {
            return Err(RlError::Model(format!("unsupported activation {}", file.activation)));
        }
        if file.layer_sizes.last() != Some(&file.num_actions) {
            return Err(RlError::Model("output layer does not match the action count".into()));
        }
        let net = Mlp::from_params(&file.layer_sizes, file.params)?;
        Ok(Self { net, normalizer: file.normalizer, config: file.config })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RlError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RlError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

impl ControlPolicy for QPolicy {
    fn select(&mut self, obs: &Observation<'_>) -> Result<usize, DacError> {
        self.act(obs.diff.as_slice()).map_err(|e| DacError::Load(e.to_string()))
    }
}
