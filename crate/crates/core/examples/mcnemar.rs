//! McNemar's test on discordant counts and on paired predictions.
//!
//! ```text
//! cargo run --example mcnemar -- [b] [c]
//! ```

use newswatch::eval::{mcnemar, mcnemar_from_counts};

fn main() -> newswatch::Result<()> {
    let mut args = std::env::args().skip(1);
    let b = args.next().map_or(10, |a| a.parse().expect("b"));
    let c = args.next().map_or(2, |a| a.parse().expect("c"));
    for corrected in [true, false] {
        let r = mcnemar_from_counts(b, c, corrected);
        println!(
            "b={b} c={c} corrected={corrected}: statistic {:.4}, p {:.4}",
            r.statistic, r.p_value
        );
    }

    // Ten examples where A is right and B wrong, two the other way round,
    // and eight where both agree.
    let gold = vec![true; 20];
    let a: Vec<bool> = (0..20).map(|i| !(10..12).contains(&i)).collect();
    let b_pred: Vec<bool> = (0..20).map(|i| i >= 10).collect();
    let r = mcnemar(&a, &b_pred, &gold, true)?;
    println!("from predictions: b={} c={} p {:.4}", r.b, r.c, r.p_value);
    Ok(())
}
