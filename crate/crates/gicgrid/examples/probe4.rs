// temp diagnostic: label structure over the scenario grid
use gicgrid::dataset;
use gicgrid::mld::MldOptions;
use gicgrid::model;
use gicgrid::placement::label_scenarios;
use std::time::Instant;

fn main() {
    let net = model::epri21();
    let per_cell: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let scenarios = dataset::generate(&net, &[45.0, 135.0], &[5.0, 10.0, 15.0, 20.0], per_cell, 2024, false);
    let t0 = Instant::now();
    let labels = label_scenarios(&net, &scenarios, 4.0, &MldOptions::default()).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("labeled {} scenarios in {:.1}s ({:.2}s each)", labels.len(), dt, dt / labels.len() as f64);
    let mut ones = 0usize;
    let mut total = 0usize;
    for (s, l) in scenarios.iter().zip(&labels) {
        ones += l.z.iter().filter(|&&b| b == 1).count();
        total += l.z.len();
        println!(
            "dir {:>5} mag {:>4} scales[0..3] {:.2},{:.2},{:.2} -> z {:?} shed {:>9.1} evals {:>4} [{:.2}s]",
            s.field.direction_deg, s.field.magnitude, s.scale_p[0], s.scale_p[1], s.scale_p[2],
            l.z, l.shed_cost, l.evaluations, l.solver_seconds
        );
    }
    println!("positive rate {:.3}", ones as f64 / total as f64);
}
