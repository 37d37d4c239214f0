// temp diagnostic: single-eval timing breakdown
use gicgrid::dataset::GmdScenario;
use gicgrid::gic::{BlockerVector, EField};
use gicgrid::mld::{evaluate_mld, MldOptions};
use gicgrid::model;
use std::time::Instant;

fn main() {
    let net = model::epri21();
    let scenario = GmdScenario::nominal(&net, EField::new(20.0, 45.0));
    let opts = MldOptions::default();

    for ids in [vec![], vec![1u32], vec![2u32], vec![1u32, 2, 3]] {
        let z = BlockerVector::binary(&net, &ids).unwrap();
        let t0 = Instant::now();
        let r = evaluate_mld(&net, &scenario, &z, &opts).unwrap();
        println!(
            "z={ids:?}: shed {:>9.1} pf_iters {:>5} conv {} viol {} in {:?}",
            r.shed_cost, r.pf_iterations, r.converged, r.violations.len(), t0.elapsed()
        );
        let mut o2 = opts.clone();
        o2.abort_above = Some(0.0);
        let t0 = Instant::now();
        let r = evaluate_mld(&net, &scenario, &z, &o2).unwrap();
        println!("   bounded: aborted {} pf_iters {:>5} in {:?}", r.aborted, r.pf_iterations, t0.elapsed());
    }
}
