use uvkit_core::losses::{recon_loss, similarity_align};
use uvkit_refiner::checkpoint::Checkpoint;
use uvkit_refiner::train::{write_history_csv, HistoryRow};
use uvkit_refiner::{make_synthetic_pair, synthetic_dataset, train, TrainConfig};

fn quick(steps: usize, seed: u64) -> TrainConfig {
    let mut c = TrainConfig {
        steps,
        seed,
        width_scale: 0.125,
        ..Default::default()
    };
    c.adam.lr = 1e-3;
    c
}

#[test]
fn unwarped_pair_is_a_similarity() {
    let p = make_synthetic_pair(11, 7, 0.0).unwrap();
    let fit = similarity_align(&p.q_init, &p.q_gt).unwrap();
    let (loss, _) = recon_loss(&fit, &p.q_gt).unwrap();
    assert!(loss < 1e-6, "recon {loss}");
}

#[test]
fn single_pair_is_memorized() {
    let pairs = vec![make_synthetic_pair(3, 8, 0.3).unwrap()];
    let out = train(&pairs, &quick(500, 2)).unwrap();
    let first = out.history[0].total;
    let last = out.history.last().unwrap().total;
    assert!(last <= 0.05 * first, "first {first} last {last}");
}

#[test]
fn zero_learning_rate_freezes_everything() {
    let pairs = vec![make_synthetic_pair(3, 5, 0.3).unwrap()];
    let mut c = quick(5, 2);
    c.adam.lr = 0.0;
    let out = train(&pairs, &c).unwrap();
    let mut init_cfg = c.clone();
    init_cfg.steps = 1;
    let init = train(&pairs, &init_cfg).unwrap();
    assert_eq!(out.params, init.params);
    assert!(out.history.windows(2).all(|w| w[0].total == w[1].total));
}

#[test]
fn same_seed_same_parameters_and_history() {
    let pairs = synthetic_dataset(40, 4, 5, 0.3).unwrap();
    let mut c = quick(6, 8);
    c.batch_size = 2;
    let a = train(&pairs, &c).unwrap();
    let b = train(&pairs, &c).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.history, b.history);
    assert_eq!(
        Checkpoint::new(&a.params, Some(&c)).to_json().unwrap(),
        Checkpoint::new(&b.params, Some(&c)).to_json().unwrap()
    );
    c.parallel = true;
    let p = train(&pairs, &c).unwrap();
    assert_eq!(p.history, a.history);
}

#[test]
fn history_csv_layout() {
    let pairs = vec![make_synthetic_pair(3, 4, 0.3).unwrap()];
    let out = train(&pairs, &quick(1, 0)).unwrap();
    assert_eq!(out.history.len(), 1);
    let mut buf = Vec::new();
    write_history_csv(&out.history, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,recon,silhouette,distortion,overlap_soft,overlap_count,total"
    );
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<HistoryRow> = r.deserialize().map(|x| x.unwrap()).collect();
    assert_eq!(rows, out.history);
}

#[test]
fn invalid_configs_are_rejected() {
    let pairs = vec![make_synthetic_pair(3, 4, 0.3).unwrap()];
    let mut c = quick(0, 0);
    assert!(train(&pairs, &c).is_err());
    c.steps = 1;
    c.adam.lr = -1.0;
    assert!(train(&pairs, &c).is_err());
    assert!(train(&[], &quick(1, 0)).is_err());
}
