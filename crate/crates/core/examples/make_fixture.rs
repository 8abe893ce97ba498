//! Writes the synthetic traffic fixture used by the integration tests.
//!
//! Usage: `cargo run --example make_fixture -- <dir> [rows cols days period seed]`

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use piecewise_gsp::series::write_series;
use piecewise_gsp::synthetic::traffic_fixture;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let dir = PathBuf::from(args.first().map(String::as_str).unwrap_or("fixture"));
    let num = |i: usize, default: u64| -> Result<u64, std::num::ParseIntError> {
        args.get(i).map_or(Ok(default), |s| s.parse())
    };
    let (rows, cols, days, period, seed) = (num(1, 5)?, num(2, 6)?, num(3, 20)?, num(4, 24)?, num(5, 3)?);

    let fx = traffic_fixture(rows as usize, cols as usize, days as usize, period as usize, seed)?;
    std::fs::create_dir_all(&dir)?;

    let mut graph = File::create(dir.join("graph.csv"))?;
    writeln!(graph, "src,dst,weight")?;
    for e in fx.graph.edges() {
        writeln!(graph, "{},{},{}", fx.graph.label(e.src), fx.graph.label(e.dst), e.weight)?;
    }

    let labels: Vec<String> = (0..fx.graph.order()).map(|v| fx.graph.label(v)).collect();
    write_series(File::create(dir.join("series.csv"))?, &labels, fx.series.values())?;
    eprintln!("wrote {} vertices x {} samples to {}", labels.len(), fx.series.len(), dir.display());
    Ok(())
}
