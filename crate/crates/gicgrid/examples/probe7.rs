// temp diagnostic: single UIUC evals at high field
use gicgrid::dataset::GmdScenario;
use gicgrid::gic::{BlockerVector, EField};
use gicgrid::mld::{evaluate_mld, MldOptions};
use gicgrid::model;
use std::time::Instant;

fn main() {
    let net = model::uiuc150();
    for mag in [10.0, 15.0, 20.0] {
        let scenario = GmdScenario::nominal(&net, EField::new(mag, 45.0));
        let t0 = Instant::now();
        let r = evaluate_mld(&net, &scenario, &BlockerVector::none(), &MldOptions::labeling()).unwrap();
        println!(
            "mag {mag}: shed {:>10.1} conv {} viol {:>3} pf_iters {:>6} shed_frac_sum {:>6.2} in {:?}",
            r.shed_cost, r.converged, r.violations.len(), r.pf_iterations,
            r.shed_fraction.iter().sum::<f64>(), t0.elapsed()
        );
    }
}
