use std::path::{Path, PathBuf};

use accmd::error::Error;
use accmd::objective::{load_dataset, write_dataset, DataFormat, Dataset};
use accmd::rng::SeededRng;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn csv_with_header() {
    let ds = load_dataset(&fixture("tiny.csv"), DataFormat::Csv, None).unwrap();
    assert_eq!((ds.samples(), ds.features()), (3, 2));
    assert_eq!(ds.b.as_slice(), &[1.0, -2.0, 0.5]);
    assert_eq!(ds.a.row(1), &[1.5, 0.25]);
}

#[test]
fn round_trip_is_bitwise() {
    let mut rng = SeededRng::new(4);
    let mut a = rng.normal_matrix(10, 20);
    // some exact zeros for the sparse format
    for j in (0..20).step_by(3) {
        a[(j % 10, j)] = 0.0;
    }
    let ds = Dataset {
        a,
        b: rng.normal_vector(10),
    };
    let dir = tempfile::tempdir().unwrap();
    for (format, name) in [(DataFormat::Csv, "d.csv"), (DataFormat::Svmlight, "d.svm")] {
        let path = dir.path().join(name);
        write_dataset(&ds, &path, format).unwrap();
        let back = load_dataset(&path, format, Some(20)).unwrap();
        assert_eq!(back, ds, "{name}");
    }
}

#[test]
fn svmlight_sparse_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.svm");
    std::fs::write(&path, "# comment\n1 3:0.5\n-1 1:2 4:-1 # trailing\n").unwrap();
    let ds = load_dataset(&path, DataFormat::Svmlight, Some(4)).unwrap();
    assert_eq!((ds.samples(), ds.features()), (2, 4));
    assert_eq!(ds.a.row(0), &[0.0, 0.0, 0.5, 0.0]);
    assert_eq!(ds.a.row(1), &[2.0, 0.0, 0.0, -1.0]);
    assert_eq!(ds.b.as_slice(), &[1.0, -1.0]);
}

#[test]
fn parse_errors_carry_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad.csv", DataFormat::Csv, "b,f1\n1,2\n3,x\n", 3),
        ("ragged.csv", DataFormat::Csv, "1,2,3\n4,5\n", 2),
        ("bad.svm", DataFormat::Svmlight, "1 1:2\n\n1 0:3\n", 3),
        ("wide.svm", DataFormat::Svmlight, "1 5:1\n", 1),
    ];
    for (name, format, text, want) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        match load_dataset(&path, format, Some(4)) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{name}"),
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn missing_file_is_io_error() {
    let err = load_dataset(Path::new("/nonexistent/x.csv"), DataFormat::Csv, None).unwrap_err();
    assert!(!matches!(err, Error::Parse { .. }), "{err:?}");
}
