// Scratch probe for fixture tuning (not part of the deliverable surface).
use gicgrid::dataset::GmdScenario;
use gicgrid::gic::{self, BlockerVector, EField};
use gicgrid::mld::{evaluate_mld, MldOptions};
use gicgrid::model;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "epri21".into());
    let net = match which.as_str() {
        "uiuc150" => model::uiuc150(),
        "b4gic" => model::b4gic(),
        _ => model::epri21(),
    };
    println!("== {} ==", net.name);
    println!(
        "total pd {:.1} MW, gens pg {:.1} MW",
        net.total_pd(),
        net.gens.iter().map(|g| g.pg).sum::<f64>()
    );
    let opts = MldOptions::default();

    for dir in [45.0, 135.0] {
        for mag in [0.0, 5.0, 10.0, 15.0, 20.0] {
            let t0 = Instant::now();
            let scenario = GmdScenario::nominal(&net, EField::new(mag, dir));
            let feats =
                gic::physics_features(&net, &scenario.field, &BlockerVector::none()).unwrap();
            let r = evaluate_mld(&net, &scenario, &BlockerVector::none(), &opts).unwrap();
            let z_all = BlockerVector::binary(
                &net,
                &net.candidate_ids()[..net.candidate_ids().len() / 2],
            )
            .unwrap();
            let r_half = evaluate_mld(&net, &scenario, &z_all, &opts).unwrap();
            println!(
                "dir {dir:>3} mag {mag:>4}: qloss {:8.1} Mvar  maxGIC {:7.1} A  shed(none) {:>10.1}$ conv {} viol {:>2}  shed(half) {:>10.1}$  [{} ms]",
                feats[0],
                feats[1],
                r.shed_cost,
                r.converged,
                r.violations.len(),
                r_half.shed_cost,
                t0.elapsed().as_millis()
            );
        }
    }
}
