use wayfind::cnn::{train, CnnConfig, CnnModel};
use wayfind::corpus::{default_templates, generate_corpus, parse_departments, Department, LabeledQuery};
use wayfind::eval::evaluate;

fn setup() -> (Vec<Department>, Vec<LabeledQuery>) {
    let d = parse_departments("Admitting\nFracture Clinic\nMRI\nReception\nCardiology").unwrap();
    let q = generate_corpus(&d, &default_templates(), 4).unwrap().queries;
    (d, q)
}

fn small(epochs: usize, patience: usize) -> CnnConfig {
    CnnConfig {
        embedding_dim: 16,
        feature_maps: 12,
        epochs,
        patience,
        lr: 0.005,
        batch_size: 32,
        ..Default::default()
    }
}

#[test]
fn learns_small_lexicon_and_keeps_pad_zero() {
    let (d, q) = setup();
    let (model, history) = train(&small(15, 3), &d, &q).unwrap();
    let dim = model.params.dim;
    assert!(model.params.embeddings[..dim].iter().all(|&x| x == 0.0));
    assert!(model.params.is_finite());
    let first = &history.epochs[0];
    let last = history.epochs.last().unwrap();
    assert!(last.train_loss < first.train_loss);
    assert!(evaluate(&model, &q, "train").unwrap().total_acc > 0.95);
    assert_eq!(history.validation_size, (q.len() as f64 * 0.1).round() as usize);
}

#[test]
fn same_seed_same_model() {
    let (d, q) = setup();
    let a = train(&small(2, 2), &d, &q).unwrap().0;
    let b = train(&small(2, 2), &d, &q).unwrap().0;
    assert_eq!(a.params, b.params);
    let c = train(&CnnConfig { seed: 9, ..small(2, 2) }, &d, &q).unwrap().0;
    assert_ne!(a.params, c.params);
}

#[test]
fn early_stopping_contract() {
    let (d, q) = setup();
    for patience in [0, 1, 2] {
        let (_, h) = train(&small(25, patience), &d, &q).unwrap();
        let n = h.epochs.len();
        let best = h.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(h.epochs[h.best_epoch - 1].val_loss, best);
        if h.stopped_early {
            // the run ends exactly max(patience, 1) epochs after the best one
            assert_eq!(n - h.best_epoch, patience.max(1), "patience {patience}");
            assert!(h.epochs[h.best_epoch..].iter().all(|e| e.val_loss >= best));
        } else {
            assert_eq!(n, 25);
        }
    }
}

#[test]
fn trained_checkpoint_round_trip() {
    let (d, q) = setup();
    let (model, _) = train(&small(3, 2), &d, &q).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    model.save(&path).unwrap();
    let back = CnnModel::load(&path).unwrap();
    for query in q.iter().take(50) {
        assert_eq!(model.predict(&query.text).unwrap(), back.predict(&query.text).unwrap());
    }
    assert_eq!(back.to_checkpoint().fingerprint().unwrap(), model.to_checkpoint().fingerprint().unwrap());
}

#[test]
fn rejects_bad_input() {
    let (d, _) = setup();
    assert!(train(&small(1, 1), &d, &[]).is_err());
    let bad = vec![LabeledQuery { text: "to x".into(), origin_id: 0, destination_id: 17 }];
    assert!(train(&small(1, 1), &d, &bad).is_err());
    let blank = vec![LabeledQuery { text: " ?! ".into(), origin_id: 0, destination_id: 1 }];
    assert!(train(&small(1, 1), &d, &blank).is_err());
}
