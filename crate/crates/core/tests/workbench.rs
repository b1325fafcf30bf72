mod common;

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use rbmortar_core::material::ParamId;
use rbmortar_core::reduced::{greedy_enrich, pod_init, ReducedModel};
use rbmortar_core::workbench::store::{self, HISTORY_FILE, TRAINING_FILE};
use rbmortar_core::workbench::{cmd_offline, cmd_online, cmd_validate, read_samples, BoxPreset, GeometrySource, StudyConfig};
use rbmortar_core::{DetailedModel, Error, ParameterSample};

fn study(geometry: &str, out: &Path) -> StudyConfig {
    let mut cfg = StudyConfig::new(GeometrySource::Named(geometry.into()), out);
    cfg.varied = Some(vec![ParamId::EY, ParamId::GXy, ParamId::Thickness]);
    cfg.seed = 17;
    cfg
}

fn small_slab(out: &Path) -> StudyConfig {
    let mut cfg = study("slab2", out);
    cfg.k = 3;
    cfg.training_size = 30;
    cfg.n_init = 6;
    cfg.n_max = 24;
    cfg
}

#[test]
fn minimal_config_uses_defaults_and_resolves_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    fs::write(&path, r#"{"geometry": "slab2", "output": "run"}"#).unwrap();
    let cfg = StudyConfig::load(&path).unwrap();
    assert_eq!((cfg.k, cfg.n_init, cfg.n_max, cfg.training_size), (5, 25, 60, 200));
    assert_eq!(cfg.preset, BoxPreset::P1);
    assert_eq!(cfg.output, dir.path().join("run"));
    assert_eq!(cfg.parameter_box().unwrap().upper.thickness, 2.0);

    fs::write(&path, r#"{"geometry": {"file": "g.json"}, "output": "/abs", "fixed_thickness": true}"#).unwrap();
    let cfg = StudyConfig::load(&path).unwrap();
    assert_eq!(cfg.geometry, GeometrySource::File { file: dir.path().join("g.json") });
    let bx = cfg.parameter_box().unwrap();
    assert_eq!((bx.lower.thickness, bx.upper.thickness), (1.0, 1.0));

    fs::write(&path, r#"{"geometry": "slab2", "output": "x", "n_maximum": 3}"#).unwrap();
    assert!(matches!(StudyConfig::load(&path), Err(Error::Parse { .. })));
}

#[test]
fn varied_parameters_pin_the_rest() {
    let cfg = study("bracket3", Path::new("unused"));
    let bx = cfg.parameter_box().unwrap();
    let r = ParameterSample::reference();
    for id in ParamId::ALL {
        let (lo, hi) = (bx.lower.get(id), bx.upper.get(id));
        if [ParamId::EY, ParamId::GXy, ParamId::Thickness].contains(&id) {
            assert!(lo < hi, "{id}");
        } else {
            assert_eq!((lo, hi), (r.get(id), r.get(id)), "{id}");
        }
    }
}

#[test]
fn unit_cube_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = study("unit_cube", dir.path());
    cfg.k = 1;
    cfg.n_init = 1;
    cfg.n_max = 5;
    cfg.training_size = 10;
    let s = cmd_offline(&cfg).unwrap();
    assert!(s.n <= 5);
    let rows = csv::Reader::from_path(dir.path().join(HISTORY_FILE)).unwrap().records().count();
    assert!((1..=5).contains(&rows), "{rows} rows");
}

#[test]
fn offline_is_deterministic_and_round_trips_exactly() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small_slab(a.path());
    cmd_offline(&cfg).unwrap();
    cmd_offline(&small_slab(b.path())).unwrap();
    for f in [HISTORY_FILE, TRAINING_FILE, "reduced/basis.mtx", "reduced/estimator_gram.mtx"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }

    let detailed = DetailedModel::new(cfg.model().unwrap()).unwrap();
    let loaded = store::load_detailed(a.path()).unwrap();
    assert_eq!(loaded.dim(), detailed.dim());
    assert_eq!(loaded.stiffness_components(), detailed.stiffness_components());
    assert_eq!(loaded.mass_components(), detailed.mass_components());

    let gcfg = cfg.greedy_config(cfg.training_set().unwrap());
    let fresh = greedy_enrich(&detailed, pod_init(&detailed, &gcfg).unwrap(), &gcfg).unwrap();
    let (rm, meta) = store::load_reduced(a.path(), true).unwrap();
    assert_eq!(meta.k, 3);
    assert_eq!(rm.basis, fresh.basis);
    assert_eq!(rm.stiffness, fresh.stiffness);
    assert_eq!(rm.mass, fresh.mass);
    assert_eq!(rm.estimator.gram(), fresh.estimator.gram());
    assert_eq!(rm.history, fresh.history);
    let training: Vec<ParameterSample> = store::read_json(&a.path().join(TRAINING_FILE)).unwrap();
    assert_eq!(training, gcfg.training);
}

#[test]
fn online_queries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_slab(dir.path());
    cmd_offline(&cfg).unwrap();
    let meta = store::load_reduced_metadata(dir.path()).unwrap();

    let selected: Vec<ParameterSample> = meta.history.iter().filter(|s| s.added > 0).map(|s| s.mu).collect();
    assert!(!selected.is_empty());
    let rep = cmd_online(dir.path(), &selected, None, None, false).unwrap();
    for q in &rep.queries {
        assert!(q.in_box);
        assert!(q.estimates.iter().all(|&e| e <= 1e-9), "{:?}", q.estimates);
    }

    let mu = cfg.training_set().unwrap()[3];
    let light = cmd_online(dir.path(), &[mu], None, Some(720.0), true).unwrap();
    let heavy = cmd_online(dir.path(), &[mu], None, Some(1440.0), false).unwrap();
    for (l, h) in light.queries[0].eigenvalues.iter().zip(&heavy.queries[0].eigenvalues) {
        assert!(common::rel(*h, l / 2.0) <= 1e-12);
    }
    let vecs = light.queries[0].eigenvectors.as_ref().unwrap();
    assert_eq!((vecs.len(), vecs[0].len()), (3, meta.n_constrained));
    assert!(heavy.queries[0].eigenvectors.is_none());

    let outside = mu.with_thickness(3.0);
    assert!(!cmd_online(dir.path(), &[outside], Some(2), None, false).unwrap().queries[0].in_box);

    let mut bad = mu;
    bad.nu_xy = 5.0;
    assert!(matches!(cmd_online(dir.path(), &[bad], None, None, false), Err(Error::Inadmissible(_))));

    let file = dir.path().join("mu.json");
    fs::write(&file, serde_json::to_string(&vec![mu, mu]).unwrap()).unwrap();
    assert_eq!(read_samples(&file).unwrap().len(), 2);
    fs::write(&file, serde_json::to_string(&mu).unwrap()).unwrap();
    assert_eq!(read_samples(&file).unwrap(), vec![mu]);
}

#[test]
fn thousand_online_queries_are_fast() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_slab(dir.path());
    cfg.n_max = 60;
    cfg.k = 5;
    cfg.n_init = 10;
    cmd_offline(&cfg).unwrap();
    let mus = common::samples(&cfg.parameter_box().unwrap(), 1000, 3);
    let rep = cmd_online(dir.path(), &mus, None, None, false).unwrap();
    assert_eq!(rep.queries.len(), 1000);
    assert!(rep.seconds < 10.0, "{} s", rep.seconds);
}

#[test]
fn validation_errors_decay_and_vanish_on_the_full_space() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_slab(dir.path());
    cmd_offline(&cfg).unwrap();
    let rep = cmd_validate(dir.path(), 12, 4, None).unwrap();
    assert!(rep.csv.exists());
    let sizes: Vec<usize> = {
        let mut s: Vec<usize> = rep.rows.iter().map(|r| r.n).collect();
        s.dedup();
        s
    };
    assert_eq!(*sizes.last().unwrap(), 24);
    for i in 1..=3 {
        let errs: Vec<f64> = sizes.iter().map(|&n| rep.at(n)[i - 1].mean_rel).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] * 1.1, "index {i}: {errs:?}");
        }
    }
    let again = cmd_validate(dir.path(), 12, 4, None).unwrap();
    assert_eq!(again.rows, rep.rows);

    let detailed = store::load_detailed(dir.path()).unwrap();
    let reference = ParameterSample::reference();
    let all = detailed.solve(&reference, detailed.dim()).unwrap();
    let mut full = ReducedModel::empty(&detailed, reference, 1.0).unwrap();
    full.enrich(&detailed, &all.vectors, detailed.dim()).unwrap();
    assert_eq!(full.len(), detailed.dim());
    store::save_reduced(dir.path(), &full, 3).unwrap();
    let n = detailed.dim();
    let rep = cmd_validate(dir.path(), 3, 5, Some(&[n])).unwrap();
    for r in rep.at(n) {
        assert!(r.max_rel.abs() <= 1e-10 && r.max_eigfun <= 1e-10, "{r:?}");
    }
}

#[test]
fn bracket3_indicator_drops_four_orders() {
    let dir = tempfile::tempdir().unwrap();
    let s = cmd_offline(&study("bracket3", dir.path())).unwrap();
    assert_eq!(s.n, 60);
    let (first, last) = (s.initial_indicator.unwrap(), s.final_indicator.unwrap());
    assert!(last <= first * 1e-4, "indicator {first:e} -> {last:e}");
}

#[test]
fn kernel_matrix_file_is_dense_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_slab(dir.path());
    cfg.n_max = 6;
    cmd_offline(&cfg).unwrap();
    let z: DMatrix<f64> = rbmortar_core::mtx::read_dense(&dir.path().join("detailed/kernel.mtx")).unwrap();
    let meta = store::load_reduced_metadata(dir.path()).unwrap();
    assert_eq!(z.ncols(), meta.n_constrained);
}
