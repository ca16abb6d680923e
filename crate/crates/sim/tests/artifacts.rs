use uam_core::fno::Layout;
use uam_sim::config::{RadiusConfig, RunnerChoice, StalenessSourceChoice};
use uam_sim::experiments;
use uam_sim::io::{read_checkpoint, CsvTable, TRACE_COLUMNS};
use uam_sim::ExperimentConfig;

fn cfg_in(dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.out_dir = dir.display().to_string();
    cfg
}

#[test]
fn realization_dump_lists_every_entity() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path());
    cfg.model.lambda_c_per_km2 = 0.01;
    let real = experiments::realization(&cfg).unwrap();
    experiments::cmd_realization(&cfg).unwrap();
    let t = CsvTable::read(&dir.path().join("realization.csv")).unwrap();
    assert_eq!(t.columns, ["kind", "cluster_id", "corridor_id", "x", "y", "r", "theta", "u"]);
    let count = |k: &str| t.rows.iter().filter(|r| r[0] == k).count();
    assert_eq!(count("gbs"), real.gbs.len());
    assert_eq!(count("cp"), real.clusters.len());
    assert_eq!(count("corridor"), real.corridor_count());
    assert_eq!(count("aircraft"), real.aircraft_count());
    assert!(real.aircraft_count() > 0);
    let (x, y) = (t.column_f64("x").unwrap(), t.column_f64("y").unwrap());
    let radius = cfg.params().sampling_radius();
    for (row, (x, y)) in t.rows.iter().zip(x.iter().zip(&y)) {
        if row[0] != "corridor" {
            assert!(x.hypot(*y) <= radius * (1.0 + 1e-12));
        }
    }
}

#[test]
fn staleness_header_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path());
    cfg.staleness.trials = 3000;
    experiments::cmd_staleness(&cfg).unwrap();
    let t = CsvTable::read(&dir.path().join("staleness_cdf.csv")).unwrap();
    assert_eq!(t.get_meta("t_comp_s"), Some("0.001"));
    assert_eq!(t.get_meta("k_theorem2"), Some("0"));
    assert_eq!(t.get_meta("seed"), Some("1"));
    assert_eq!(t.get_meta("config_hash"), Some(cfg.hash().as_str()));
    assert_eq!(t.rows.len(), 50);
    let tau = t.column_f64("tau_s").unwrap();
    let a = t.column_f64("cdf_analytical").unwrap();
    assert!(tau.windows(2).all(|w| w[0] < w[1]));
    assert!(a.windows(2).all(|w| w[0] <= w[1]));
    let raw = CsvTable::read(&dir.path().join("staleness_samples.csv")).unwrap();
    assert_eq!(raw.rows.len().to_string(), t.get_meta("samples").unwrap());
}

#[test]
fn empty_sweep_gives_a_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path());
    cfg.connectivity.trials = 500;
    cfg.connectivity.sweep.lambda_b_per_km2.clear();
    let pts = experiments::connectivity_sweep(&cfg, "lambda_b_per_km2").unwrap();
    assert_eq!(pts.len(), 1);
    assert_eq!(pts[0].value, cfg.model.lambda_b_per_km2);
}

#[test]
fn connectivity_curves_use_one_file_per_radius_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path());
    cfg.connectivity.trials = 500;
    cfg.connectivity.gammas_db = vec![0.0, 10.0];
    cfg.connectivity.radius_models = vec![RadiusConfig::Uniform { r_hat_km: 2.0 }];
    let s = &mut cfg.connectivity.sweep;
    s.lambda_l = vec![5.0];
    s.lambda_c_per_km2.clear();
    s.lambda_b_per_km2.clear();
    s.lambda_t_per_km.clear();
    let files = experiments::cmd_connectivity(&cfg).unwrap();
    assert_eq!(files.len(), 5);
    let t = CsvTable::read(&dir.path().join("connectivity_uniform.csv")).unwrap();
    assert_eq!(t.columns, ["gamma_db", "p_conn_analytical", "p_conn_mc", "mc_stderr"]);
    let a = t.column_f64("p_conn_analytical").unwrap();
    assert!(a[0] > a[1]);
}

#[test]
fn train_writes_trace_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path());
    cfg.train.min_clients = 2;
    cfg.train.samples_per_client = 3;
    cfg.train.test_samples = 2;
    cfg.train.staleness_source = StalenessSourceChoice::Constant;
    cfg.train.runner = RunnerChoice::AflStaleFree;
    cfg.train.stop.max_rounds = Some(6);
    experiments::cmd_train(&cfg).unwrap();
    let t = CsvTable::read(&dir.path().join("trace_afl-stale-free.csv")).unwrap();
    assert_eq!(t.columns, TRACE_COLUMNS);
    assert_eq!(t.rows.len(), 7);
    assert_eq!(t.rows[0][2], "");
    assert!(t.column_f64("g1_weight").unwrap()[1..].iter().all(|&g| g == 1.0));
    let (header, params) = read_checkpoint(&dir.path().join("checkpoint_afl-stale-free.bin")).unwrap();
    assert_eq!(params.len(), Layout::new(&cfg.fno).len);
    assert!(header.contains("rounds = 6"));
    assert!(header.contains(&cfg.hash()));
}

#[test]
fn dataset_rows_hold_input_and_target() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cfg_in(dir.path());
    cfg.train.min_clients = 2;
    cfg.train.samples_per_client = 3;
    cfg.train.test_samples = 2;
    cfg.train.heterogeneity = 0.5;
    experiments::cmd_dataset(&cfg).unwrap();
    let t = CsvTable::read(&dir.path().join("dataset_train.csv")).unwrap();
    assert_eq!(t.columns.len(), 2 + 2 * cfg.burgers.n_grid);
    assert_eq!(t.rows.len(), 6);
    assert_eq!(t.get_meta("client_decay"), Some("1 3"));
    let back = ExperimentConfig::from_toml(&t.get_meta("config").unwrap().replace("\\n", "\n")).unwrap();
    assert_eq!(back.hash(), cfg.hash());
    let (datasets, _) = experiments::build_datasets(&cfg, 2).unwrap();
    let x: f64 = t.rows[4][2].parse().unwrap();
    assert_eq!(x, datasets[1].samples[1].input.values[0]);
}
