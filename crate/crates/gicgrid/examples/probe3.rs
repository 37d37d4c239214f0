// temp diagnostic: stressed operating point
use gicgrid::dataset::GmdScenario;
use gicgrid::gic::{self, BlockerVector, EField};
use gicgrid::mld::{power_flow, PfOptions};
use gicgrid::model::{self, XfmrConfig};

fn main() {
    let net = model::epri21();
    let mag: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let dir: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(45.0);
    let scenario = GmdScenario::nominal(&net, EField::new(mag, dir));
    let n = net.buses.len();
    let pos = |id: u32| net.buses.iter().position(|x| x.id == id).unwrap();
    let (pdl, qdl) = scenario.scaled_loads(&net);
    let mut pd = vec![0.0; n];
    let mut qd = vec![0.0; n];
    for (li, l) in net.loads.iter().enumerate() {
        pd[pos(l.bus)] += pdl[li];
        qd[pos(l.bus)] += qdl[li];
    }
    let vbr = gic::induced_voltages(&net, &scenario.field);
    let dc = gic::solve_dc(&net, &vbr, &BlockerVector::none()).unwrap();
    let eff = gic::effective_gic(&net, &dc.branch_current).unwrap();
    let effm: std::collections::BTreeMap<u32, f64> = eff.iter().map(|(&k,&v)|(k,v.abs())).collect();
    let vm0 = vec![1.0; n];
    let (qp, qn) = gic::qloss(&net, &effm, &vm0).unwrap();
    let mut qe = vec![0.0; n];
    for c in &net.couplings {
        if c.config == XfmrConfig::Line { continue; }
        let q = qp[&c.ac_branch] + qn[&c.ac_branch];
        let (hb, _) = gic::hi_side_bus(&net, c.ac_branch).unwrap();
        qe[pos(hb)] += q;
        if q > 1.0 {
            println!("xfmr branch {:>2} ({:?}) eff {:>7.1} A -> {:>6.1} Mvar at bus {}", c.ac_branch, c.config, effm[&c.ac_branch], q, hb);
        }
    }
    let sol = power_flow(&net, &pd, &qd, &qe, None, &PfOptions::default()).unwrap();
    println!("mag {mag} dir {dir}: converged {} iters {}", sol.converged, sol.iterations);
    for (i, b) in net.buses.iter().enumerate() {
        println!("bus {:>3} kv {:>6} vm {:.4}  genQ {:>7.1} (q_extra {:>6.1})", b.id, b.base_kv, sol.vm[i], sol.gen_q_bus[i], qe[i]);
    }
    // grounding currents per substation
    for g in net.gmd_buses.iter().filter(|g| g.g_gnd > 0.0) {
        println!("sub gnd {}: I_gnd {:>8.1} A", g.id, dc.grounding_current[&g.id]);
    }
}
