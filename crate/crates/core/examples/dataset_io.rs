//! Write a synthetic regression dataset in both supported formats and read
//! it back.

use accmd::linalg::Vector;
use accmd::objective::{load_dataset, write_dataset, DataFormat, Dataset};
use accmd::rng::SeededRng;

fn main() -> accmd::Result<()> {
    let mut rng = SeededRng::new(5);
    let a = rng.normal_matrix(6, 3);
    let b = Vector::from((0..6).map(|_| rng.normal()).collect::<Vec<_>>());
    let ds = Dataset { a, b };

    let dir = std::env::temp_dir().join("accmd-dataset-io");
    std::fs::create_dir_all(&dir)?;
    for (format, name) in [(DataFormat::Csv, "data.csv"), (DataFormat::Svmlight, "data.svm")] {
        let path = dir.join(name);
        write_dataset(&ds, &path, format)?;
        let back = load_dataset(&path, format, Some(3))?;
        println!(
            "{}: {}x{}, round trip exact: {}",
            path.display(),
            back.samples(),
            back.features(),
            back == ds
        );
    }
    Ok(())
}
