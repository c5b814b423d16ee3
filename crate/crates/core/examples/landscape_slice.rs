//! Export a 2D slice of the rugged function and of the bounce task as
//! plot-ready CSV, with unit gradient directions and magnitudes.

use boleap::harness::landscape;
use boleap::problems::{by_name, ProblemOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("boleap-landscapes");
    std::fs::create_dir_all(&out)?;
    for (name, dim) in [("synthetic", 10), ("bounce", 2)] {
        let problem = by_name(name, &ProblemOptions { dimension: dim, ..Default::default() })?;
        let slice = landscape(problem.as_ref(), (0, 1), 50, None)?;
        let best = slice.cells.iter().min_by(|a, b| a.loss.total_cmp(&b.loss)).unwrap();
        let path = out.join(format!("{name}.csv"));
        slice.write_csv(&path)?;
        println!(
            "{name}: {} cells, best {:.4} at ({:.3}, {:.3}) -> {}",
            slice.cells.len(),
            best.loss,
            best.x_i,
            best.x_j,
            path.display()
        );
    }
    Ok(())
}
