//! Log-log growth rate of a metric across horizons, from synthetic data.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symic::slope::fit_slope;

fn main() -> symic::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // 2 sqrt(T) with multiplicative noise, 20 seeds per horizon
    let groups: BTreeMap<u64, Vec<f64>> = [1_000u64, 3_000, 10_000, 30_000, 100_000]
        .into_iter()
        .map(|t| {
            let v = (0..20)
                .map(|_| 2.0 * (t as f64).sqrt() * rng.random_range(0.7..1.3))
                .collect();
            (t, v)
        })
        .collect();
    let fit = fit_slope(&groups, 1_000)?;
    println!(
        "slope {:.3}, 95% band [{:.3}, {:.3}]",
        fit.slope, fit.band.0, fit.band.1
    );
    for (t, m) in &fit.medians {
        println!("  T = {t:>6}: median {m:.1}");
    }
    Ok(())
}
