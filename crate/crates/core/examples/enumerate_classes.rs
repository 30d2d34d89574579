//! Signal-count classes for a few sender counts, with their sizes.

use symic::game::{class_of_profile, enumerate_classes};

fn main() -> symic::Result<()> {
    let signals: Vec<String> = ["lo", "mid", "hi"].iter().map(|s| s.to_string()).collect();
    for n in 1..=4 {
        let p = enumerate_classes(n, signals.len())?;
        let total: u64 = p.sizes().iter().sum();
        println!(
            "n = {n}: {} classes covering {total} = 3^{n} profiles",
            p.len()
        );
        for c in 0..p.len() {
            println!("  {:<24} |c| = {}", p.label(c, &signals), p.size(c));
        }
    }

    // any permutation of a profile lands in the same class
    let p = enumerate_classes(4, 3)?;
    let a = class_of_profile(&[2, 0, 0, 1], &p)?;
    let b = class_of_profile(&[0, 1, 2, 0], &p)?;
    println!("[hi, lo, lo, mid] and [lo, mid, hi, lo] -> class {a} and {b}");
    Ok(())
}
