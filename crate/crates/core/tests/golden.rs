//! Byte comparison of the report files for a fixed tiny scenario
//! (`golden/tiny.toml`).
//! Regenerate with `UPDATE_GOLDEN=1 cargo test --test golden`.

use std::fs;
use std::path::Path;

use monotone_sdi::harness::Execution;
use monotone_sdi::report::{execute, write_report};
use monotone_sdi::scenario::parse_scenario;

#[test]
fn report_files_match_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let scenario = parse_scenario(&fs::read_to_string(golden.join("tiny.toml")).unwrap()).unwrap();
    let outcome = execute(&scenario, Execution::Sequential).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = write_report(tmp.path(), &scenario, &outcome).unwrap();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (produced, frozen) in [
        ("ensemble.csv", "ensemble.csv"),
        ("checks.csv", "checks.csv"),
        ("paths/path_0.csv", "path_0.csv"),
    ] {
        let bytes = fs::read(dir.join(produced)).unwrap();
        if update {
            fs::write(golden.join(frozen), &bytes).unwrap();
        }
        let expected = fs::read(golden.join(frozen)).unwrap();
        assert!(bytes == expected, "{produced} differs from tests/golden/{frozen}");
    }
}
