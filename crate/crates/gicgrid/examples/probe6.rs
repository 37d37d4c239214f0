// temp diagnostic: UIUC greedy labeling cost
use gicgrid::dataset;
use gicgrid::mld::MldOptions;
use gicgrid::model;
use gicgrid::placement::label_scenarios;
use std::time::Instant;

fn main() {
    let net = model::uiuc150();
    let per_cell: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let budget: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(10.0);
    let scenarios = dataset::generate(&net, &[45.0, 135.0], &[5.0, 10.0, 15.0, 20.0], per_cell, 2024, false);
    let t0 = Instant::now();
    let labels = label_scenarios(&net, &scenarios, budget, &MldOptions::labeling()).unwrap();
    println!("labeled {} in {:.1}s", labels.len(), t0.elapsed().as_secs_f64());
    let mut ones = 0; let mut tot = 0;
    for (s, l) in scenarios.iter().zip(&labels) {
        ones += l.z.iter().filter(|&&b| b==1).count();
        tot += l.z.len();
        println!("dir {:>5} mag {:>4}: placed {:>2} shed {:>9.1} evals {:>5} [{:.1}s]",
            s.field.direction_deg, s.field.magnitude,
            l.z.iter().filter(|&&b| b==1).count(), l.shed_cost, l.evaluations, l.solver_seconds);
    }
    println!("positive rate {:.3}", ones as f64 / tot as f64);
}
