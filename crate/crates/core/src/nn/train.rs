use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, Adam, AdamParams, LayerSpec, Network, NetworkShape};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden layers followed by the output layer.
    pub layers: Vec<LayerSpec>,
    pub dropout_p: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    #[serde(default)]
    pub adam: AdamParams,
}

impl TrainConfig {
    /// Four ReLU hidden layers from `shape` plus a sigmoid output of width `output_dim`.
    pub fn for_shape(shape: NetworkShape, output_dim: usize) -> Result<Self> {
        let mut layers: Vec<LayerSpec> = shape
            .hidden_sizes()?
            .iter()
            .map(|&u| LayerSpec::relu(u))
            .collect();
        layers.push(LayerSpec::sigmoid(output_dim));
        Ok(Self {
            layers,
            ..Self::default()
        })
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layers.last().map(|l| l.units)
    }

    pub fn validate(&self) -> Result<()> {
        let Some((output, hidden)) = self.layers.split_last() else {
            return Err(Error::invalid("training config has no layers"));
        };
        if hidden.is_empty() {
            return Err(Error::invalid("at least one hidden layer is required"));
        }
        if self.layers.iter().any(|l| l.units == 0) {
            return Err(Error::invalid("layer units must be at least 1"));
        }
        if hidden.iter().any(|l| l.activation != Activation::Relu) {
            return Err(Error::invalid("hidden layers must use ReLU"));
        }
        if output.activation != Activation::Sigmoid {
            return Err(Error::invalid("the output layer must use a sigmoid"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::invalid(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::invalid(
                "batch size, max epochs and patience must be positive",
            ));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            layers: Vec::new(),
            dropout_p: 0.0,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 1000,
            patience: 20,
            validation_fraction: 0.2,
            seed: 0,
            adam: AdamParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_mae: f64,
    pub val_mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_val_mae: f64,
    pub loss_history: Vec<EpochStats>,
}

fn mae(pred: &Array2<f64>, target: ArrayView2<'_, f64>) -> f64 {
    let n = pred.len() as f64;
    pred.iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / n
}

/// Trains a network mapping `inputs` (N x 2) to `targets` (N x d) by
/// minimizing MAE with Adam, stopping once validation MAE has not improved
/// for `patience` epochs. The returned network is the best-validation
/// snapshot.
pub fn train(
    inputs: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    cfg: &TrainConfig,
) -> Result<(Network, TrainReport)> {
    cfg.validate()?;
    let n = inputs.nrows();
    if targets.nrows() != n {
        return Err(Error::shape(format!(
            "{} inputs but {} targets",
            n,
            targets.nrows()
        )));
    }
    if n < 10 {
        return Err(Error::invalid(format!(
            "at least 10 training pairs are required, got {n}"
        )));
    }
    let d = targets.ncols();
    if cfg.output_dim() != Some(d) {
        return Err(Error::shape(format!(
            "output layer has {:?} units but targets have {d} columns",
            cfg.output_dim()
        )));
    }
    if !inputs.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("inputs contain non-finite values"));
    }
    if !targets.iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err(Error::invalid("targets must be normalized to [0, 1]"));
    }

    let n_val = (n as f64 * cfg.validation_fraction).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::invalid(format!(
            "validation fraction {} leaves an empty split for {n} pairs",
            cfg.validation_fraction
        )));
    }

    let mut split_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    split_rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut split_rng);
    let (val_idx, train_idx) = order.split_at(n_val);
    let val_x = inputs.select(Axis(0), val_idx);
    let val_y = targets.select(Axis(0), val_idx);
    let train_x = inputs.select(Axis(0), train_idx);
    let train_y = targets.select(Axis(0), train_idx);

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(2);
    let mut net = Network::new(inputs.ncols(), &cfg.layers, &mut init_rng)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(3);

    let tensor_lens: Vec<usize> = net.param_slices_mut().iter().map(|s| s.len()).collect();
    let mut adam = Adam::new(cfg.adam, &tensor_lens);

    let mut best = net.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut history = Vec::new();
    let mut rows: Vec<usize> = (0..train_idx.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        rows.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in rows.chunks(cfg.batch_size) {
            let bx = train_x.select(Axis(0), batch);
            let by = train_y.select(Axis(0), batch);
            let trace = net.forward_train(bx.view(), cfg.dropout_p, &mut rng);
            let out = trace.output();
            let scale = 1.0 / out.len() as f64;
            let mut d_out = out - &by;
            loss_sum += d_out.iter().map(|v| v.abs()).sum::<f64>();
            d_out.mapv_inplace(|v| {
                if v > 0.0 {
                    scale
                } else if v < 0.0 {
                    -scale
                } else {
                    0.0
                }
            });
            let grads = net.backward(&trace, &d_out);
            adam.step(&mut net.param_slices_mut(), &grads.slices(), cfg.learning_rate)?;
        }
        let train_mae = loss_sum / (train_idx.len() * d) as f64;
        let val_mae = mae(&net.forward_unchecked(val_x.view()), val_y.view());
        if !train_mae.is_finite() || !val_mae.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochStats { train_mae, val_mae });

        if val_mae < best_val {
            best_val = val_mae;
            best_epoch = epoch;
            best.clone_from(&net);
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }

    let report = TrainReport {
        epochs_run: history.len(),
        best_epoch,
        best_val_mae: best_val,
        loss_history: history,
    };
    Ok((best, report))
}
