//! Traces seeded null rays in both time directions and tallies their radial limits.

use wicklab_core::bichar::*;

fn main() {
    let opts = FlowOptions::default();
    for n in [2usize, 3, 4] {
        let rays = sample_null_covectors(n, 20, 7).unwrap();
        let (mut hits, mut total, mut drift) = (0, 0, 0.0f64);
        for c in &rays {
            let pt = compactify(c).unwrap();
            let component = c.component().unwrap();
            for t in [100.0, -100.0] {
                let tr = flow(&pt, t, &opts).unwrap();
                let limit = classify_limit(&tr, CLASSIFY_THRESHOLD).unwrap();
                hits += usize::from(limit == Some(component.limit(t > 0.0)));
                total += 1;
                drift = drift.max(tr.lambda_drift());
            }
        }
        println!("n = {n}: {hits}/{total} rays reach the expected radial set, max lambda drift {drift:.2e}");
    }
}
