//! Ranking metrics with tie handling, and the F-measure of crisp predictions.

use homtask::metrics::{auc, aupr, f_measure};

fn main() -> homtask::Result<()> {
    let scores = [0.9, 0.8, 0.8, 0.7, 0.4, 0.4, 0.2, 0.1];
    let labels = [true, false, true, true, false, false, true, false];
    println!("AUC  {:.4}", auc(&scores, &labels)?);
    println!("AUPR {:.4}", aupr(&scores, &labels)?);

    let predicted: Vec<bool> = scores.iter().map(|&s| s > 0.5).collect();
    println!("F    {:.4} at threshold 0.5", f_measure(&predicted, &labels)?);

    match auc(&scores, &[false; 8]) {
        Ok(v) => println!("unexpected AUC {v}"),
        Err(e) => println!("no positives: {e}"),
    }
    Ok(())
}
