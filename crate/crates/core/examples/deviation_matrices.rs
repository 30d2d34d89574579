//! Deviation sets and the matrices that push a mechanism forward under a
//! single sender's misreport.

use symic::enumerate_classes;
use symic::mechanisms::{build_deviation_matrix, build_deviation_set, DeviationKind};

fn main() -> symic::Result<()> {
    let (n, nsig) = (2, 2);
    let p = enumerate_classes(n, nsig)?;
    let names: Vec<String> = vec!["s1".into(), "s2".into()];
    let labels: Vec<String> = (0..p.len()).map(|c| p.label(c, &names)).collect();

    for kind in [
        DeviationKind::ExAnte,
        DeviationKind::InterimReduced,
        DeviationKind::InterimFull,
    ] {
        let set = build_deviation_set(kind, nsig)?;
        println!("{kind:?}: {} maps", set.len());
        for phi in set.functions() {
            let m = build_deviation_matrix(phi, &p, 1)?;
            println!("  phi = {phi}   rows: reported class, columns: true class");
            for (r, label) in labels.iter().enumerate() {
                let row: Vec<String> = (0..p.len())
                    .map(|t| format!("{:.3}", m.get(r, t)))
                    .collect();
                println!("    {label:<14} {}", row.join("  "));
            }
        }
    }
    Ok(())
}
