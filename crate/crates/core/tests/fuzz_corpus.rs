//! Replays the checked-in fuzz seeds through the same properties the fuzz
//! targets assert, so the corpus stays meaningful without a nightly toolchain.

use std::fs;
use std::path::PathBuf;

use mbs_core::bench::{parse_table_csv, ratio_summary, BenchResult};
use mbs_core::instance::{build_instance, parse_records, write_records, Instance, Scaling};
use mbs_core::qubo::{Assignment, Qubo};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.display().to_string(), fs::read(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn parse_records_seeds() {
    let mut accepted = 0;
    for (_, data) in seeds("parse_records") {
        let Ok(records) = parse_records(data.as_slice()) else { continue };
        accepted += 1;
        let mut out = Vec::new();
        write_records(&records, &mut out).unwrap();
        assert_eq!(parse_records(out.as_slice()).unwrap(), records);
        let _ = build_instance(&records, Scaling::Auto);
    }
    assert!(accepted >= 1);
}

#[test]
fn instance_json_seeds() {
    for (name, data) in seeds("instance_json") {
        let instance = Instance::from_json(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(Instance::from_json(&instance.to_json().unwrap()).unwrap(), instance);
    }
}

#[test]
fn qubo_text_seeds() {
    for (name, data) in seeds("qubo_text") {
        let q = Qubo::from_text(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(Qubo::from_text(&q.to_text(None)).unwrap(), q);
    }
}

#[test]
fn bench_report_seeds() {
    for (name, data) in seeds("bench_report_json") {
        let result = BenchResult::from_json(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(BenchResult::from_json(&result.to_json().unwrap()).unwrap(), result);
        ratio_summary(&result.table(), "cim").unwrap();
    }
}

#[test]
fn bench_table_seeds() {
    for (name, data) in seeds("bench_table_csv") {
        let rows = parse_table_csv(data.as_slice()).unwrap_or_else(|e| panic!("{name}: {e}"));
        ratio_summary(&rows, "cim").unwrap();
    }
}

#[test]
fn assignment_seeds() {
    for (_, data) in seeds("assignment_bits") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(x) = text.trim_end().parse::<Assignment>() {
            assert_eq!(x.to_string().parse::<Assignment>().unwrap(), x);
        }
    }
}
