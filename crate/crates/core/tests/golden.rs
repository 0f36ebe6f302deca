use std::path::PathBuf;

use photonloop::channels::{max_success_probability, DetectorModel};
use photonloop::fock::Truncation;
use photonloop::sweep::{parse_config, run_sweep, to_csv_string, THREADS_VAR};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn golden_csv() -> String {
    let text = std::fs::read_to_string(data("golden_sqz6.conf")).unwrap();
    let config = parse_config(&text).unwrap();
    to_csv_string(&run_sweep(&config).unwrap()).unwrap()
}

#[test]
fn reproduces_reference_csv_under_any_pool_size() {
    let expected = std::fs::read_to_string(data("golden_sqz6.csv")).unwrap();
    assert_eq!(golden_csv(), expected);
    for threads in ["1", "3", "0"] {
        std::env::set_var(THREADS_VAR, threads);
        assert_eq!(golden_csv(), expected, "{THREADS_VAR}={threads}");
    }
    std::env::remove_var(THREADS_VAR);
}

#[test]
fn reference_rows_respect_probability_bound() {
    let text = std::fs::read_to_string(data("golden_sqz6.conf")).unwrap();
    let config = parse_config(&text).unwrap();
    let rho = config
        .state
        .density(Truncation::new(config.cutoff).with_tail_limit(config.tail_limit))
        .unwrap();
    let bound = max_success_probability(&rho, &DetectorModel::new(config.eta).unwrap()).unwrap();
    let records = run_sweep(&config).unwrap();
    assert_eq!(records.len(), 16);
    for r in &records {
        assert!(r.p_success >= 0.0 && r.p_success <= bound);
        assert!(r.wigner_origin.unwrap() < 0.0);
        assert!(r.fidelity.is_none() && r.log_negativity.is_none());
    }
}
