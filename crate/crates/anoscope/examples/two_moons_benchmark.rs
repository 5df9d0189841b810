//! The full method roster on one two-moons draw: train on 1000 unlabeled
//! points, test on held-out normals plus uniform box anomalies, one AUROC
//! per detector family. (Release mode recommended: the neural rows train
//! for 300 epochs.)

use anoscope::bench::{toy_benchmark, BenchConfig};
use anoscope::Result;

fn main() -> Result<()> {
    let rows = toy_benchmark(&BenchConfig {
        seed: 7,
        ..Default::default()
    })?;
    println!("{:<14} auroc", "method");
    for row in rows {
        println!("{:<14} {:.4}", row.method, row.auroc);
    }
    Ok(())
}
