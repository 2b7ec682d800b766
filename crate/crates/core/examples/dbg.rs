use mrfgc_core::fpt::*;
use mrfgc_core::formation::ConstraintBackend;
use mrfgc_core::graph::Graph;
use mrfgc_core::instance::Instance;
use mrfgc_core::model::{Configuration, RobotTypes};
use std::time::Instant;

fn main() {
    for (n, k) in [(5usize, 1u32), (6, 1), (5, 2), (6, 2), (7, 2), (5, 3), (6, 3)] {
        let g = Graph::from_edges(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap();
        let types = RobotTypes::homogeneous(k);
        let x0 = Configuration::all_at(0, &types);
        let inst = Instance::new(g, types, ConstraintBackend::ImplicitConnected, x0.clone(), x0)
            .unwrap()
            .with_root(0);
        let ctx = build_context(&inst).unwrap();
        let t0 = Instant::now();
        match update_all_tables(&ctx, &FptBudget::capped(3_000_000)) {
            Ok(tables) => {
                let mx = tables.per_bag.iter().map(|t| t.rows.len()).max().unwrap();
                println!("P{n} k={k}: syms={} cap={} total={} maxbag={} t={:?}",
                    ctx.symbols.len(), ctx.length_cap, tables.total_rows, mx, t0.elapsed());
            }
            Err(e) => println!("P{n} k={k}: syms={} cap={} ERROR {e} t={:?}", ctx.symbols.len(), ctx.length_cap, t0.elapsed()),
        }
    }
}
