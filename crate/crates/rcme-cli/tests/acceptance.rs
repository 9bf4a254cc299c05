//! Harness-level acceptance: report determinism across thread counts
//! (the library-level criteria live in the core crate's acceptance suite).

mod common;

use common::*;
use tempfile::TempDir;

#[test]
fn criterion_10_reports_are_thread_count_invariant() {
    let result = std::panic::catch_unwind(|| {
        let dir = TempDir::new().unwrap();
        write_clip(dir.path(), "clip.y4m", &translation_y4m(96, 64, 4, 6, 0));
        let base = [
            "run",
            "--input",
            "clip.y4m",
            "--qp",
            "22,27,32,37",
            "--range",
            "16",
            "--threshold",
            "10",
            "--block-sizes",
            "16x16,8x8",
        ];

        let mut one = base.to_vec();
        one.extend(["--out", "one", "--threads", "1"]);
        run_ok(&one, dir.path());

        let mut eight = base.to_vec();
        eight.extend(["--out", "eight", "--threads", "8"]);
        run_ok(&eight, dir.path());

        for name in ["report.csv", "detail.csv", "report.json", "effective.cfg"] {
            let a = std::fs::read(dir.path().join("one").join(name)).unwrap();
            let b = std::fs::read(dir.path().join("eight").join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between --threads 1 and --threads 8");
        }
    });
    match result {
        Ok(()) => println!("acceptance 10 (thread-count invariant CSV reports): PASS"),
        Err(panic) => {
            println!("acceptance 10 (thread-count invariant CSV reports): FAIL");
            std::panic::resume_unwind(panic);
        }
    }
}
