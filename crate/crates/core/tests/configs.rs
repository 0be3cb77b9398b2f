//! Every shipped sample config parses against its experiment's parameters.

use std::path::PathBuf;

use spinbus::runner::{load_config, CATALOG};

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn one_sample_per_kind() {
    for entry in CATALOG.iter() {
        let path = config_dir().join(format!("{}.toml", entry.kind));
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cfg.kind, entry.kind);
        assert_eq!(cfg.seed, 2024);
    }
}
