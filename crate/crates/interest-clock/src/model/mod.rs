//! The binary scoring model: embedding tables for all raw features, a small
//! feed-forward network over their concatenation, cross-entropy loss, and
//! single-sample adaptive-gradient updates for one-pass streaming training.

mod mlp;

pub use mlp::{LayerGradient, Mlp};

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clock::{self, ClockStrategy, RequestTime};
use crate::codec;
use crate::embedding::{mix_seed, EmbeddingTables, RowContribution, TableKey};
use crate::error::{Error, Result};
use crate::feature_store::InterestClockFeatures;
use crate::types::{Facet, Tag};

const CHECKPOINT_MAGIC: &[u8] = b"ICKP1";

/// Probabilities are clamped to this open interval before the loss so
/// saturated logits never produce log(0).
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub hidden: Vec<usize>,
    pub user_hash_bits: u32,
    pub item_hash_bits: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 8,
            hidden: vec![64, 32],
            user_hash_bits: 16,
            item_hash_bits: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimConfig {
    pub lr: f64,
    pub init_acc: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            lr: 0.05,
            init_acc: 0.1,
        }
    }
}

/// Everything the model needs to score one impression.
#[derive(Debug, Clone, Copy)]
pub struct EventInputs<'a> {
    pub user_id: u64,
    pub item_id: u64,
    /// The item's own tags, one per facet in facet order.
    pub item_tags: [Tag; 3],
    /// The user's hourly interest features at request time.
    pub clock: &'a InterestClockFeatures,
    pub req: RequestTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub logit: f64,
    pub probability: f64,
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy. The prediction must lie strictly inside (0, 1).
pub fn loss(label: bool, yhat: f64) -> Result<f64> {
    if !(yhat > 0.0 && yhat < 1.0) {
        return Err(Error::Domain(format!(
            "predicted probability must lie in (0, 1), got {yhat}"
        )));
    }
    Ok(if label {
        -yhat.ln()
    } else {
        -(1.0 - yhat).ln()
    })
}

/// The assembled input vector plus the row contributions that built it.
#[derive(Debug, Clone)]
pub struct InputAssembly {
    pub x: Vec<f64>,
    pub contributions: Vec<RowContribution>,
}

/// Full gradient of the loss for one sample: dense network gradients, the
/// gradient with respect to the assembled input, and sparse per-row gradients
/// for every touched embedding row.
#[derive(Debug, Clone)]
pub struct ModelGradients {
    pub mlp: Vec<LayerGradient>,
    pub dx: Vec<f64>,
    pub rows: Vec<(TableKey, usize, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct ScoringModel {
    strategy: ClockStrategy,
    tables: EmbeddingTables,
    mlp: Mlp,
    optim: OptimConfig,
}

impl ScoringModel {
    pub fn new(
        cfg: &ModelConfig,
        optim: OptimConfig,
        strategy: ClockStrategy,
        vocab_sizes: [usize; 3],
        seed: u64,
    ) -> ScoringModel {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x4d4f_4445));
        let tables = EmbeddingTables::new(
            cfg.embedding_dim,
            cfg.user_hash_bits,
            cfg.item_hash_bits,
            vocab_sizes,
            optim.init_acc,
            &mut rng,
        );
        let input_dim = 5 * cfg.embedding_dim + strategy.block_width(cfg.embedding_dim);
        let mlp = Mlp::new(input_dim, &cfg.hidden, optim.init_acc, &mut rng);
        ScoringModel {
            strategy,
            tables,
            mlp,
            optim,
        }
    }

    pub fn strategy(&self) -> ClockStrategy {
        self.strategy
    }

    pub fn tables(&self) -> &EmbeddingTables {
        &self.tables
    }

    pub fn input_width(&self) -> usize {
        self.mlp.input_dim()
    }

    /// Concatenate [user, item, item tags x3, time-aware block] embeddings.
    pub fn assemble(&self, inputs: &EventInputs) -> Result<InputAssembly> {
        let dim = self.tables.dim();
        let block = clock::time_block(inputs.clock, inputs.req, self.strategy, &self.tables)?;
        let width = 5 * dim + block.values.len();
        if width != self.mlp.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "assembled width {width} does not match network input {}",
                self.mlp.input_dim()
            )));
        }

        let mut x = vec![0.0; width];
        let mut contributions = Vec::with_capacity(block.contributions.len() + 5);
        let add = |x: &mut Vec<f64>,
                   contributions: &mut Vec<RowContribution>,
                   key: TableKey,
                   row: usize,
                   offset: usize|
         -> Result<()> {
            let src = self.tables.lookup(key, row)?;
            x[offset..offset + dim].copy_from_slice(src);
            contributions.push(RowContribution {
                table: key,
                row,
                offset,
                coeff: 1.0,
            });
            Ok(())
        };

        add(
            &mut x,
            &mut contributions,
            TableKey::User,
            self.tables.hash_user(inputs.user_id),
            0,
        )?;
        add(
            &mut x,
            &mut contributions,
            TableKey::Item,
            self.tables.hash_item(inputs.item_id),
            dim,
        )?;
        for (f, facet) in Facet::ALL.iter().enumerate() {
            let tag = inputs.item_tags[f];
            if tag.facet != *facet {
                return Err(Error::InvalidEvent(format!(
                    "item tag slot {f} carries facet {}",
                    tag.facet
                )));
            }
            add(
                &mut x,
                &mut contributions,
                TableKey::Facet(*facet),
                tag.id as usize,
                (2 + f) * dim,
            )?;
        }

        let base = 5 * dim;
        x[base..].copy_from_slice(&block.values);
        contributions.extend(block.contributions.into_iter().map(|mut c| {
            c.offset += base;
            c
        }));
        Ok(InputAssembly { x, contributions })
    }

    pub fn predict(&self, inputs: &EventInputs) -> Result<Prediction> {
        let assembly = self.assemble(inputs)?;
        let (logit, _) = self.mlp.forward(&assembly.x);
        if !logit.is_finite() {
            return Err(Error::Domain(format!("non-finite logit {logit}")));
        }
        Ok(Prediction {
            logit,
            probability: sigmoid(logit),
        })
    }

    fn clamped_probability(logit: f64) -> f64 {
        sigmoid(logit).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
    }

    /// Loss of one sample under the current parameters, without updating them.
    pub fn loss_at(&self, inputs: &EventInputs, label: bool) -> Result<f64> {
        let prediction = self.predict(inputs)?;
        loss(label, Self::clamped_probability(prediction.logit))
    }

    /// Loss and its full analytic gradient for one sample.
    pub fn loss_gradient(
        &self,
        inputs: &EventInputs,
        label: bool,
    ) -> Result<(f64, ModelGradients)> {
        let assembly = self.assemble(inputs)?;
        let (logit, activations) = self.mlp.forward(&assembly.x);
        let p = Self::clamped_probability(logit);
        let loss = loss(label, p)?;
        let dlogit = p - if label { 1.0 } else { 0.0 };
        let (mlp_grads, dx) = self.mlp.backward(&assembly.x, &activations, dlogit);

        // Accumulate per-row gradients before any update: the same row may be
        // touched through several contributions (item tag + clock slots).
        let dim = self.tables.dim();
        let mut rows: BTreeMap<(TableKey, usize), Vec<f64>> = BTreeMap::new();
        for c in &assembly.contributions {
            let grad = rows
                .entry((c.table, c.row))
                .or_insert_with(|| vec![0.0; dim]);
            for k in 0..dim {
                grad[k] += c.coeff * dx[c.offset + k];
            }
        }
        Ok((
            loss,
            ModelGradients {
                mlp: mlp_grads,
                dx,
                rows: rows.into_iter().map(|((t, r), g)| (t, r, g)).collect(),
            },
        ))
    }

    /// One streaming update: gradient of the cross-entropy on this sample,
    /// applied to the network and to every touched embedding row.
    pub fn train_step(&mut self, inputs: &EventInputs, label: bool, step: usize) -> Result<f64> {
        let (loss, grads) = self.loss_gradient(inputs, label)?;
        let finite = loss.is_finite()
            && grads.dx.iter().all(|v| v.is_finite())
            && grads
                .rows
                .iter()
                .all(|(_, _, g)| g.iter().all(|v| v.is_finite()))
            && grads.mlp.iter().all(|g| g.db.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::NonFiniteGradient {
                step,
                detail: format!(
                    "loss {loss}, user {}, item {}",
                    inputs.user_id, inputs.item_id
                ),
            });
        }
        self.mlp.apply_adagrad(&grads.mlp, self.optim.lr);
        for (table, row, grad) in &grads.rows {
            self.tables
                .table_mut(*table)
                .adagrad_step(*row, grad, self.optim.lr);
        }
        Ok(loss)
    }

    // -- flat parameter view (finite-difference harness) --------------------

    pub fn param_count(&self) -> usize {
        self.tables.param_count() + self.mlp.param_count()
    }

    pub fn param(&self, i: usize) -> f64 {
        let nt = self.tables.param_count();
        if i < nt {
            self.tables.param(i)
        } else {
            self.mlp.param(i - nt)
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        let nt = self.tables.param_count();
        if i < nt {
            self.tables.set_param(i, v);
        } else {
            self.mlp.set_param(i - nt, v);
        }
    }

    /// Dense flat gradient over all parameters, aligned with
    /// `param`/`set_param` indexing. Untouched embedding rows are zero.
    pub fn dense_gradient(&self, inputs: &EventInputs, label: bool) -> Result<(f64, Vec<f64>)> {
        let (loss, grads) = self.loss_gradient(inputs, label)?;
        let mut dense = vec![0.0; self.param_count()];
        for (table, row, grad) in &grads.rows {
            for (k, g) in grad.iter().enumerate() {
                dense[self.tables.flat_index(*table, *row, k)] += g;
            }
        }
        let flat_mlp = self.mlp.flatten_gradients(&grads.mlp);
        dense[self.tables.param_count()..].copy_from_slice(&flat_mlp);
        Ok((loss, dense))
    }

    // -- checkpoint ----------------------------------------------------------

    pub fn save<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        let (tag, sigma, mu) = match self.strategy {
            ClockStrategy::TimeEncoding => (0u8, 0.0, 0.0),
            ClockStrategy::Naive => (1, 0.0, 0.0),
            ClockStrategy::Adaptive => (2, 0.0, 0.0),
            ClockStrategy::Gaussian { sigma, mu } => (3, sigma, mu),
        };
        codec::write_u8(w, tag)?;
        codec::write_f64(w, sigma)?;
        codec::write_f64(w, mu)?;
        codec::write_f64(w, self.optim.lr)?;
        codec::write_f64(w, self.optim.init_acc)?;
        self.tables.write(w)?;
        self.mlp.write(w)?;
        Ok(())
    }

    pub fn load<R: Read>(r: &mut R) -> Result<ScoringModel> {
        codec::expect_magic(r, CHECKPOINT_MAGIC)
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        let tag = codec::read_u8(r, "strategy tag")?;
        let sigma = codec::read_f64(r, "sigma")?;
        let mu = codec::read_f64(r, "mu")?;
        let strategy = match tag {
            0 => ClockStrategy::TimeEncoding,
            1 => ClockStrategy::Naive,
            2 => ClockStrategy::Adaptive,
            3 => ClockStrategy::gaussian(sigma, mu)
                .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?,
            other => {
                return Err(Error::CorruptCheckpoint(format!(
                    "unknown strategy tag {other}"
                )))
            }
        };
        let lr = codec::read_f64(r, "lr")?;
        let init_acc = codec::read_f64(r, "init_acc")?;
        let optim = OptimConfig { lr, init_acc };
        let tables = EmbeddingTables::read(r, init_acc)?;
        let mlp = Mlp::read(r, init_acc)?;
        let model = ScoringModel {
            strategy,
            tables,
            mlp,
            optim,
        };
        let expected = 5 * model.tables.dim() + strategy.block_width(model.tables.dim());
        if model.mlp.input_dim() != expected {
            return Err(Error::CorruptCheckpoint(format!(
                "network input {} does not match strategy width {expected}",
                model.mlp.input_dim()
            )));
        }
        Ok(model)
    }
}
