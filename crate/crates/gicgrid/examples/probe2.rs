// temp diagnostic
use gicgrid::mld::{power_flow, check_limits, PfOptions};
use gicgrid::model;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "epri21".into());
    let net = match which.as_str() {
        "uiuc150" => model::uiuc150(),
        _ => model::epri21(),
    };
    let n = net.buses.len();
    let pos = |id: u32| net.buses.iter().position(|x| x.id == id).unwrap();
    let mut pd = vec![0.0; n];
    let mut qd = vec![0.0; n];
    for l in &net.loads {
        pd[pos(l.bus)] += l.pd;
        qd[pos(l.bus)] += l.qd;
    }
    let qe = vec![0.0; n];
    let sol = power_flow(&net, &pd, &qd, &qe, None, &PfOptions::default()).unwrap();
    println!("converged {} iters {}", sol.converged, sol.iterations);
    for (i, b) in net.buses.iter().enumerate() {
        println!("bus {:>3} kv {:>6} vm {:.4} va {:>7.2}deg  genP {:>7.1} genQ {:>7.1}", b.id, b.base_kv, sol.vm[i], sol.va[i].to_degrees(), sol.gen_p_bus[i], sol.gen_q_bus[i]);
    }
    for v in check_limits(&net, &sol) {
        println!("VIOL {:?} {} sev {:.4} at {:?}", v.kind, v.entity_id, v.severity, v.at_buses);
    }
    for (bi, br) in net.branches.iter().enumerate() {
        let f = &sol.flows[bi];
        if f.mva_from().max(f.mva_to()) > br.rate * 0.8 {
            println!("branch {} {}-{} loading {:.0}/{:.0} MVA", br.id, br.from_bus, br.to_bus, f.mva_from().max(f.mva_to()), br.rate);
        }
    }
}
