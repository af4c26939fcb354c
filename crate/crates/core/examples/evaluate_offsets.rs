//! Offset table and histogram for the three-commentary hand fixture.

use matchalign::model::{compute_offset_stats, render_report, DEFAULT_WINDOWS};

fn main() -> matchalign::Result<()> {
    let predicted = [65.0, 108.0, 331.0];
    let truth = [60.0, 120.0, 300.0];
    let stats = compute_offset_stats(&predicted, &truth, &DEFAULT_WINDOWS)?;
    let report = render_report(&stats, 10.0);
    print!("{}", report.table);
    println!();
    print!("{}", report.histogram_csv());
    Ok(())
}
