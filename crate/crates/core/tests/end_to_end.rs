use randlink::data::{load_csv, synthetic, write_csv, LabelColumn};
use randlink::harness::{cross_validate, grid_search, GridSpec};
use randlink::method::train;
use randlink::{Classifier, Config32, Dataset32, MethodId, Spec, Spec32};

#[test]
fn every_method_trains_in_single_precision() {
    let ds: Dataset32 = synthetic::gaussian_blobs(120, 4, 3, 0.4, 8).unwrap();
    for id in MethodId::ALL {
        let network = Config32 {
            hidden_nodes: 20,
            layers: 3,
            lambda: 0.05,
            seed: 2,
            ..Default::default()
        };
        let model = train(&Spec32::with_network(id, network), &ds).unwrap();
        let pred = model.predict(ds.features()).unwrap();
        let correct = pred.labels.iter().zip(ds.labels()).filter(|(a, b)| a == b).count();
        assert!(correct >= 108, "{id}: {correct}/120 on well separated blobs");
    }
}

#[test]
fn precisions_agree_on_clear_cases() {
    let wide = synthetic::gaussian_blobs::<f64>(150, 3, 2, 0.3, 14).unwrap();
    let narrow: Dataset32 = synthetic::gaussian_blobs(150, 3, 2, 0.3, 14).unwrap();
    let mut spec = Spec::new(MethodId::Edrvfl).with_seed(5);
    spec.network.hidden_nodes = 30;
    spec.network.layers = 3;
    let mut spec32 = Spec32::new(MethodId::Edrvfl).with_seed(5);
    spec32.network.hidden_nodes = 30;
    spec32.network.layers = 3;
    let a = train(&spec, &wide).unwrap().predict(wide.features()).unwrap().labels;
    let b = train(&spec32, &narrow).unwrap().predict(narrow.features()).unwrap().labels;
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    assert!(same >= 147, "{same}/150");
}

#[test]
fn csv_round_trip_feeds_the_harness() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("halves.csv");
    let ds = synthetic::separable_halves::<f64>(100, 3, 0.2, 6).unwrap();
    write_csv(&path, &ds, true).unwrap();
    let back = load_csv::<f64>(&path, &LabelColumn::Name("label".into()), true).unwrap();
    assert_eq!(back.features(), ds.features());
    assert_eq!(back.name(), "halves");

    let report = cross_validate(&Spec::new(MethodId::Rvfl), &back, 5, 1).unwrap();
    assert_eq!(report.fold_accuracies.len(), 5);
    assert!(report.mean_accuracy >= 0.95, "{}", report.mean_accuracy);

    let grid = GridSpec {
        c_exponents: vec![0, 4],
        l_values: vec![1, 2],
        n_values: vec![10, 20],
    };
    let result = grid_search(&Spec::new(MethodId::Drvfl), &back, &grid, 5, 1).unwrap();
    assert_eq!(result.cells.len(), 8);
    assert!(result.best_cell().report.mean_accuracy >= report.mean_accuracy - 0.05);
}
