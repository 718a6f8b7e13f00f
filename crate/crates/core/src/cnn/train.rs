use serde::{Deserialize, Serialize};

use super::model::cross_entropy;
use super::{AdamState, CnnConfig, CnnModel, CnnParams, Mode};
use crate::corpus::{Department, LabeledQuery};
use crate::encode::{encode_ids, tokenize, Vocabulary};
use crate::rng::{seeded, shuffle};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_origin_acc: f64,
    pub val_destination_acc: f64,
    pub val_total_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub validation_size: usize,
}

struct Example {
    ids: Vec<usize>,
    origin: usize,
    destination: usize,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean cross-entropy and head accuracies under inference mode.
fn validate(model: &CnnModel, examples: &[&Example]) -> Result<(f64, f64, f64)> {
    let (mut loss, mut origin, mut destination) = (0.0, 0usize, 0usize);
    for ex in examples {
        let trace = model.infer(model.sentence(&ex.ids)?)?;
        loss += cross_entropy(&trace, ex.origin, ex.destination);
        origin += usize::from(argmax(&trace.origin.probs) == ex.origin);
        destination += usize::from(argmax(&trace.destination.probs) == ex.destination);
    }
    let n = examples.len() as f64;
    Ok((loss / n, origin as f64 / n, destination as f64 / n))
}

/// Mini-batch Adam training with early stopping on a held-out slice of
/// `data`. Returns the parameters of the epoch with the lowest validation
/// loss.
pub fn train(config: &CnnConfig, departments: &[Department], data: &[LabeledQuery]) -> Result<(CnnModel, History)> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    let names = departments.iter().map(|d| d.name.clone()).collect();
    let vocab = Vocabulary::build(data.iter().map(|q| q.text.as_str()));
    let mut model = CnnModel::init(config.clone(), vocab, names)?;
    let config = model.config.clone();

    let mut examples = Vec::with_capacity(data.len());
    for q in data {
        if q.origin_id >= config.num_departments || q.destination_id >= config.num_departments {
            return Err(Error::UnknownDepartment(q.origin_id.max(q.destination_id)));
        }
        let tokens = tokenize(&q.text).tokens;
        if tokens.is_empty() {
            return Err(Error::Data(format!("query {:?} has no tokens", q.text)));
        }
        examples.push(Example {
            ids: encode_ids(&tokens, &model.vocab, config.max_len),
            origin: q.origin_id,
            destination: q.destination_id,
        });
    }

    let mut rng = seeded(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    shuffle(&mut order, &mut rng);
    let val_len = ((config.validation_fraction * order.len() as f64).round() as usize).min(order.len() - 1);
    let (val_idx, train_idx) = order.split_at(val_len);
    let val: Vec<&Example> = val_idx.iter().map(|&i| &examples[i]).collect();
    let mut train_idx = train_idx.to_vec();

    let mut adam = AdamState::new(&model.params);
    let mut grads = CnnParams::zeros_like(&model.params);
    let mut history = History {
        validation_size: val.len(),
        ..Default::default()
    };
    let mut best: Option<(f64, CnnParams)> = None;
    let mut bad_epochs = 0;

    for epoch in 1..=config.epochs {
        shuffle(&mut train_idx, &mut rng);
        let mut epoch_loss = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            grads.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &examples[i];
                let sentence = model.sentence(&ex.ids)?;
                let trace = model.params.forward(sentence, Mode::Train, config.dropout_keep, &mut rng)?;
                epoch_loss += cross_entropy(&trace, ex.origin, ex.destination);
                model.params.accumulate_grads(&trace, ex.origin, ex.destination, scale, &mut grads);
            }
            model.params.add_l2_grad(&mut grads, config.l2);
            adam.step(&mut model.params, &grads, config.lr);
        }
        let train_loss = epoch_loss / train_idx.len() as f64;

        let (val_loss, vo, vd) = if val.is_empty() {
            (train_loss, f64::NAN, f64::NAN)
        } else {
            validate(&model, &val)?
        };
        log::info!(
            "epoch {epoch}: train loss {train_loss:.5}, val loss {val_loss:.5}, val acc {:.4}/{:.4}",
            vo,
            vd
        );
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            val_origin_acc: vo,
            val_destination_acc: vd,
            val_total_acc: (vo + vd) / 2.0,
        });

        if best.as_ref().is_none_or(|(b, _)| val_loss < *b) {
            best = Some((val_loss, model.params.clone()));
            history.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            // patience 0 and 1 both stop at the first epoch without improvement
            if bad_epochs >= config.patience.max(1) {
                history.stopped_early = epoch < config.epochs;
                break;
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, history))
}
