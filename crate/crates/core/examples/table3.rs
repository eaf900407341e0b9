//! Plans the bundled table3-small and table3-large profiles with and
//! without products.
//!
//! `cargo run --release -p embedplan-core --example table3 [seed]`

use embedplan_core::model::{generate_synthetic, MemoryHierarchySpec, SizeProfile};
use embedplan_core::planner::{heuristic_plan, no_cartesian_plan, PlannerConfig};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let h = MemoryHierarchySpec::default();
    println!("profile       tables  off-chip/rounds  physical  off-chip/rounds  pairs  overhead");
    for (n, profile) in [
        (47, SizeProfile::table3_small()),
        (98, SizeProfile::table3_large()),
    ] {
        let model = generate_synthetic(n, &profile, seed).expect("profile generates");
        let (_, base) = no_cartesian_plan(&model, &h).expect("baseline plans");
        let (plan, c) =
            heuristic_plan(&model, &h, &PlannerConfig::default()).expect("heuristic plans");
        println!(
            "{:<13} {:>6}  {:>8}/{:<6}  {:>8}  {:>8}/{:<6}  {:>5}  {:>7.2}%",
            profile.name,
            n,
            base.offchip_tables,
            base.dram_rounds,
            c.physical_tables,
            c.offchip_tables,
            c.dram_rounds,
            plan.cartesian_pairs().len(),
            c.overhead_ratio * 100.0
        );
    }
}
