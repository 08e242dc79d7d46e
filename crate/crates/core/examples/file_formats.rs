//! The two on-disk formats: SPKM text matrices and SPKE binary snapshots.
//!
//! `cargo run --release -p spiky --example file_formats`

use std::error::Error;

use nalgebra::DMatrix;

use spiky::{Embeddings, SparseSymmetric};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dense = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 0.0, 1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0]);
    let m = SparseSymmetric::from_dense(&dense, Some(vec!["a".into(), "b".into(), "c".into()]))?;
    let mut text = Vec::new();
    m.write_spkm(&mut text)?;
    print!("{}", String::from_utf8(text.clone())?);
    let back = SparseSymmetric::read_spkm(text.as_slice())?;
    assert_eq!(back.to_dense(), m.to_dense());

    let e = Embeddings::new(
        DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.25, 2.0]),
        0.5,
        vec!["track-1".into(), "track-2".into()],
        Some("2024-06-01".into()),
    )?;
    let mut bytes = Vec::new();
    e.write_snapshot_to(&mut bytes)?;
    println!("snapshot: {} bytes, header {:02x?}", bytes.len(), &bytes[..8]);
    assert_eq!(Embeddings::read_snapshot_from(bytes.as_slice())?, e);

    match Embeddings::read_snapshot_from(&bytes[..40]) {
        Err(err) => println!("truncated snapshot: {err}"),
        Ok(_) => unreachable!("a truncated snapshot must not parse"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
