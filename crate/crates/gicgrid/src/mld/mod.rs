//! Heuristic maximum-load-delivered evaluation.
//!
//! [`power_flow`] is a polar Newton-Raphson solve with PV/PQ switching on
//! generator reactive limits. [`evaluate_mld`] couples it to the dc GIC solve
//! through the transformer reactive losses, then sheds load greedily until
//! the operating limits hold, returning the weighted shed cost. This is the
//! non-differentiable arm of the surrogate evaluator.

#[cfg(test)]
mod tests;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataset::GmdScenario;
use crate::error::{Error, Result};
use crate::gic::{self, BlockerVector};
use crate::linalg::lu_solve;
use crate::model::{BranchId, BusType, NetworkModel, XfmrConfig};

#[derive(Debug, Clone)]
pub struct PfOptions {
    /// Infinity-norm power mismatch tolerance, per unit.
    pub tol: f64,
    pub max_iter: usize,
    /// Outer rounds of PV->PQ switching on generator Q limits.
    pub q_limit_rounds: usize,
}

impl Default for PfOptions {
    fn default() -> Self {
        PfOptions {
            tol: 1e-8,
            max_iter: 30,
            q_limit_rounds: 10,
        }
    }
}

/// Complex power at both branch ends, MVA, oriented into the branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchFlow {
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

impl BranchFlow {
    pub fn mva_from(&self) -> f64 {
        self.p_from.hypot(self.q_from)
    }
    pub fn mva_to(&self) -> f64 {
        self.p_to.hypot(self.q_to)
    }
}

#[derive(Debug, Clone)]
pub struct PfSolution {
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Voltage magnitude / angle aligned with `net.buses`.
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    /// Flows aligned with `net.branches`.
    pub flows: Vec<BranchFlow>,
    /// Net generator output per bus, MW / Mvar (slack P, all Q solved).
    pub gen_p_bus: Vec<f64>,
    pub gen_q_bus: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitKind {
    VoltageLow,
    VoltageHigh,
    ThermalFrom,
    ThermalTo,
    AngleLow,
    AngleHigh,
    GenP,
    GenQ,
    NonConvergence,
}

/// One violated operating limit; `severity` is the relative excess.
#[derive(Debug, Clone, Serialize)]
pub struct LimitViolation {
    pub kind: LimitKind,
    pub entity_id: u32,
    pub severity: f64,
    /// Buses the violation is located at, for shedding proximity.
    pub at_buses: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MldResult {
    /// Weighted load-shed cost, $.
    pub shed_cost: f64,
    /// Shed fraction per load, model load order.
    pub shed_fraction: Vec<f64>,
    pub converged: bool,
    /// Total Newton iterations across every solve in the evaluation.
    pub pf_iterations: usize,
    /// Limit violations remaining after shedding.
    pub violations: Vec<LimitViolation>,
    pub branch_flows: BTreeMap<BranchId, BranchFlow>,
    /// Total GIC reactive loss at the final operating point, Mvar.
    pub total_qloss: f64,
    /// True when the evaluation stopped early at `MldOptions::abort_above`.
    pub aborted: bool,
}

#[derive(Debug, Clone)]
pub struct MldOptions {
    pub shed_step: f64,
    pub coupling_rounds: usize,
    pub qloss_tol: f64,
    pub pf: PfOptions,
    /// Stop shedding once the cost provably exceeds this bound; the result
    /// carries `aborted = true` and a shed cost at or above the bound.
    /// Placement search uses this to prune dominated evaluations.
    pub abort_above: Option<f64>,
}

impl Default for MldOptions {
    fn default() -> Self {
        MldOptions {
            shed_step: 0.05,
            coupling_rounds: 10,
            qloss_tol: 1e-6,
            pf: PfOptions::default(),
            abort_above: None,
        }
    }
}

impl MldOptions {
    /// Faster settings for bulk label generation: the qloss fixed point stops
    /// at 0.05 Mvar instead of 1e-6, saving roughly half the coupling rounds
    /// at no observable effect on the chosen placements.
    pub fn labeling() -> Self {
        MldOptions {
            qloss_tol: 5e-2,
            ..MldOptions::default()
        }
    }
}

struct YBus {
    n: usize,
    /// Dense (G, B) matrix, row major.
    g: Vec<f64>,
    b: Vec<f64>,
    /// Per-branch admittance blocks for flow recovery.
    blocks: Vec<YBlock>,
}

struct YBlock {
    f: usize,
    t: usize,
    gff: f64,
    bff: f64,
    gft: f64,
    bft: f64,
    gtf: f64,
    btf: f64,
    gtt: f64,
    btt: f64,
}

fn build_ybus(net: &NetworkModel) -> YBus {
    let n = net.buses.len();
    let idx: BTreeMap<u32, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let mut g = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    let mut blocks = Vec::with_capacity(net.branches.len());
    for br in &net.branches {
        let f = idx[&br.from_bus];
        let t = idx[&br.to_bus];
        if !br.status {
            blocks.push(YBlock {
                f,
                t,
                gff: 0.0,
                bff: 0.0,
                gft: 0.0,
                bft: 0.0,
                gtf: 0.0,
                btf: 0.0,
                gtt: 0.0,
                btt: 0.0,
            });
            continue;
        }
        let den = br.r * br.r + br.x * br.x;
        let (ys_g, ys_b) = (br.r / den, -br.x / den);
        let bc = br.b_sh / 2.0;
        let tap = if br.tap > 0.0 { br.tap } else { 1.0 };
        let (cs, sn) = (br.shift.cos(), br.shift.sin());
        // from side sees y/tap^2, coupling through tap*e^{+-j shift}
        let t2 = tap * tap;
        let gff = ys_g / t2;
        let bff = (ys_b + bc) / t2;
        // y_ft = -y / (tap e^{-j shift}) = -(y * e^{j shift}) / tap
        let gft = -(ys_g * cs - ys_b * sn) / tap;
        let bft = -(ys_b * cs + ys_g * sn) / tap;
        let gtf = -(ys_g * cs + ys_b * sn) / tap;
        let btf = -(ys_b * cs - ys_g * sn) / tap;
        let gtt = ys_g;
        let btt = ys_b + bc;
        g[f * n + f] += gff;
        b[f * n + f] += bff;
        g[f * n + t] += gft;
        b[f * n + t] += bft;
        g[t * n + f] += gtf;
        b[t * n + f] += btf;
        g[t * n + t] += gtt;
        b[t * n + t] += btt;
        blocks.push(YBlock {
            f,
            t,
            gff,
            bff,
            gft,
            bft,
            gtf,
            btf,
            gtt,
            btt,
        });
    }
    for (i, bus) in net.buses.iter().enumerate() {
        g[i * n + i] += bus.gs;
        b[i * n + i] += bus.bs;
    }
    YBus { n, g, b, blocks }
}

fn injections(y: &YBus, vm: &[f64], va: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = y.n;
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let mut pi = 0.0;
        let mut qi = 0.0;
        for k in 0..n {
            let gik = y.g[i * n + k];
            let bik = y.b[i * n + k];
            if gik == 0.0 && bik == 0.0 {
                continue;
            }
            let th = va[i] - va[k];
            let (s, c) = th.sin_cos();
            pi += vm[k] * (gik * c + bik * s);
            qi += vm[k] * (gik * s - bik * c);
        }
        p[i] = vm[i] * pi;
        q[i] = vm[i] * qi;
    }
    (p, q)
}

/// Newton-Raphson ac power flow.
///
/// `pd_bus`/`qd_bus` are bus-aggregated demands in MW/Mvar (already scaled
/// and shed); `q_extra` is additional reactive demand per bus in Mvar (the
/// GIC transformer losses). `start` warm-starts the voltage profile.
pub fn power_flow(
    net: &NetworkModel,
    pd_bus: &[f64],
    qd_bus: &[f64],
    q_extra: &[f64],
    start: Option<(&[f64], &[f64])>,
    opts: &PfOptions,
) -> Result<PfSolution> {
    let n = net.buses.len();
    if pd_bus.len() != n || qd_bus.len() != n || q_extra.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "bus arrays must have length {n}"
        )));
    }
    let base = net.base_mva;
    let y = build_ybus(net);

    // Bus classification and generator aggregates per bus.
    let idx: BTreeMap<u32, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let mut bus_type: Vec<BusType> = net.buses.iter().map(|b| b.bus_type).collect();
    let mut pg_bus = vec![0.0; n];
    let mut qg_bus = vec![0.0; n]; // fixed Q for PQ-bus generators
    let mut qmin_bus = vec![0.0; n];
    let mut qmax_bus = vec![0.0; n];
    let mut vset = vec![f64::NAN; n];
    for gen in net.gens.iter().filter(|g| g.status) {
        let i = idx[&gen.bus];
        pg_bus[i] += gen.pg;
        qg_bus[i] += gen.qg;
        qmin_bus[i] += gen.qmin;
        qmax_bus[i] += gen.qmax;
        if vset[i].is_nan() {
            vset[i] = gen.vg;
        }
    }

    let mut vm: Vec<f64> = net.buses.iter().map(|b| b.vm).collect();
    let mut va: Vec<f64> = net.buses.iter().map(|b| b.va).collect();
    if let Some((vm0, va0)) = start {
        vm.copy_from_slice(vm0);
        va.copy_from_slice(va0);
    }
    for i in 0..n {
        if matches!(bus_type[i], BusType::Pv | BusType::Slack) && !vset[i].is_nan() {
            vm[i] = vset[i];
        }
    }

    let p_spec: Vec<f64> = (0..n).map(|i| (pg_bus[i] - pd_bus[i]) / base).collect();
    let mut q_spec: Vec<f64> = (0..n)
        .map(|i| (qg_bus[i] - qd_bus[i] - q_extra[i]) / base)
        .collect();

    let mut total_iters = 0;
    let mut converged = false;
    let mut max_mismatch = f64::INFINITY;

    for _round in 0..opts.q_limit_rounds.max(1) {
        // index sets for this round
        let p_buses: Vec<usize> = (0..n)
            .filter(|&i| !matches!(bus_type[i], BusType::Slack | BusType::Isolated))
            .collect();
        let q_buses: Vec<usize> = (0..n)
            .filter(|&i| bus_type[i] == BusType::Pq)
            .collect();
        let np = p_buses.len();
        let nq = q_buses.len();
        let nv = np + nq;

        converged = false;
        for _ in 0..opts.max_iter {
            total_iters += 1;
            let (p_calc, q_calc) = injections(&y, &vm, &va);
            let mut mis = vec![0.0; nv];
            max_mismatch = 0.0;
            for (k, &i) in p_buses.iter().enumerate() {
                mis[k] = p_spec[i] - p_calc[i];
                max_mismatch = max_mismatch.max(mis[k].abs());
            }
            for (k, &i) in q_buses.iter().enumerate() {
                mis[np + k] = q_spec[i] - q_calc[i];
                max_mismatch = max_mismatch.max(mis[np + k].abs());
            }
            if max_mismatch <= opts.tol {
                converged = true;
                break;
            }
            if nv == 0 {
                converged = true;
                break;
            }

            // Jacobian in (theta, vm) blocks; off-diagonal entries are zero
            // wherever the admittance matrix is.
            let zero_ij = |i: usize, j: usize| {
                i != j && y.g[i * y.n + j] == 0.0 && y.b[i * y.n + j] == 0.0
            };
            let mut jac = vec![0.0; nv * nv];
            for (row, &i) in p_buses.iter().enumerate() {
                for (col, &j) in p_buses.iter().enumerate() {
                    if !zero_ij(i, j) {
                        jac[row * nv + col] = dp_dtheta(&y, &vm, &va, &q_calc, i, j);
                    }
                }
                for (col, &j) in q_buses.iter().enumerate() {
                    if !zero_ij(i, j) {
                        jac[row * nv + np + col] = dp_dv(&y, &vm, &va, &p_calc, i, j);
                    }
                }
            }
            for (row, &i) in q_buses.iter().enumerate() {
                for (col, &j) in p_buses.iter().enumerate() {
                    if !zero_ij(i, j) {
                        jac[(np + row) * nv + col] = dq_dtheta(&y, &vm, &va, &p_calc, i, j);
                    }
                }
                for (col, &j) in q_buses.iter().enumerate() {
                    if !zero_ij(i, j) {
                        jac[(np + row) * nv + np + col] = dq_dv(&y, &vm, &va, &q_calc, i, j);
                    }
                }
            }
            if lu_solve(&mut jac, &mut mis).is_none() {
                // Singular on the first step means a structural defect;
                // later it is the iterate collapsing, reported as
                // non-convergence.
                if total_iters == 1 {
                    return Err(Error::SingularJacobian(total_iters));
                }
                converged = false;
                break;
            }
            for (k, &i) in p_buses.iter().enumerate() {
                va[i] += mis[k];
            }
            for (k, &i) in q_buses.iter().enumerate() {
                vm[i] += mis[np + k];
                if vm[i] < 0.05 {
                    vm[i] = 0.05; // keep the iterate physical
                }
            }
        }

        if !converged {
            break;
        }

        // Enforce generator Q limits by switching violating PV buses to PQ
        // with Q clamped at the limit.
        let (_, q_calc) = injections(&y, &vm, &va);
        let mut switched = false;
        for i in 0..n {
            if bus_type[i] != BusType::Pv {
                continue;
            }
            let q_gen = q_calc[i] * base + qd_bus[i] + q_extra[i];
            let clamp = if q_gen > qmax_bus[i] + 1e-7 {
                Some(qmax_bus[i])
            } else if q_gen < qmin_bus[i] - 1e-7 {
                Some(qmin_bus[i])
            } else {
                None
            };
            if let Some(qlim) = clamp {
                bus_type[i] = BusType::Pq;
                q_spec[i] = (qlim - qd_bus[i] - q_extra[i]) / base;
                switched = true;
            }
        }
        if !switched {
            break;
        }
    }

    // Branch flows and bus-level generator outputs.
    let (p_calc, q_calc) = injections(&y, &vm, &va);
    let mut flows = Vec::with_capacity(net.branches.len());
    for blk in &y.blocks {
        let (f, t) = (blk.f, blk.t);
        let thf = va[f] - va[t];
        let (sf, cf) = thf.sin_cos();
        let p_from = vm[f] * vm[f] * blk.gff + vm[f] * vm[t] * (blk.gft * cf + blk.bft * sf);
        let q_from = -vm[f] * vm[f] * blk.bff + vm[f] * vm[t] * (blk.gft * sf - blk.bft * cf);
        let (st, ct) = (-thf).sin_cos();
        let p_to = vm[t] * vm[t] * blk.gtt + vm[t] * vm[f] * (blk.gtf * ct + blk.btf * st);
        let q_to = -vm[t] * vm[t] * blk.btt + vm[t] * vm[f] * (blk.gtf * st - blk.btf * ct);
        flows.push(BranchFlow {
            p_from: p_from * base,
            q_from: q_from * base,
            p_to: p_to * base,
            q_to: q_to * base,
        });
    }
    let mut gen_p_bus = vec![0.0; n];
    let mut gen_q_bus = vec![0.0; n];
    for i in 0..n {
        if pg_bus[i] != 0.0 || qmax_bus[i] != 0.0 || qmin_bus[i] != 0.0 || vset[i].is_finite() {
            gen_p_bus[i] = p_calc[i] * base + pd_bus[i];
            gen_q_bus[i] = q_calc[i] * base + qd_bus[i] + q_extra[i];
        }
    }

    Ok(PfSolution {
        converged,
        iterations: total_iters,
        max_mismatch,
        vm,
        va,
        flows,
        gen_p_bus,
        gen_q_bus,
    })
}

fn dp_dtheta(y: &YBus, vm: &[f64], va: &[f64], q_calc: &[f64], i: usize, j: usize) -> f64 {
    let n = y.n;
    if i == j {
        -q_calc[i] - y.b[i * n + i] * vm[i] * vm[i]
    } else {
        let th = va[i] - va[j];
        let (s, c) = th.sin_cos();
        vm[i] * vm[j] * (y.g[i * n + j] * s - y.b[i * n + j] * c)
    }
}

fn dp_dv(y: &YBus, vm: &[f64], va: &[f64], p_calc: &[f64], i: usize, j: usize) -> f64 {
    let n = y.n;
    if i == j {
        p_calc[i] / vm[i] + y.g[i * n + i] * vm[i]
    } else {
        let th = va[i] - va[j];
        let (s, c) = th.sin_cos();
        vm[i] * (y.g[i * n + j] * c + y.b[i * n + j] * s)
    }
}

fn dq_dtheta(y: &YBus, vm: &[f64], va: &[f64], p_calc: &[f64], i: usize, j: usize) -> f64 {
    let n = y.n;
    if i == j {
        p_calc[i] - y.g[i * n + i] * vm[i] * vm[i]
    } else {
        let th = va[i] - va[j];
        let (s, c) = th.sin_cos();
        -vm[i] * vm[j] * (y.g[i * n + j] * c + y.b[i * n + j] * s)
    }
}

fn dq_dv(y: &YBus, vm: &[f64], va: &[f64], q_calc: &[f64], i: usize, j: usize) -> f64 {
    let n = y.n;
    if i == j {
        q_calc[i] / vm[i] - y.b[i * n + i] * vm[i]
    } else {
        let th = va[i] - va[j];
        let (s, c) = th.sin_cos();
        vm[i] * (y.g[i * n + j] * s - y.b[i * n + j] * c)
    }
}

/// Check the ac operating limits at a solved point; tolerance is relative.
pub fn check_limits(net: &NetworkModel, sol: &PfSolution) -> Vec<LimitViolation> {
    const TOL: f64 = 1e-6;
    let mut out = Vec::new();
    let idx: BTreeMap<u32, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();

    for (i, bus) in net.buses.iter().enumerate() {
        if bus.bus_type == BusType::Isolated {
            continue;
        }
        if sol.vm[i] < bus.vmin * (1.0 - TOL) {
            out.push(LimitViolation {
                kind: LimitKind::VoltageLow,
                entity_id: bus.id,
                severity: (bus.vmin - sol.vm[i]) / bus.vmin,
                at_buses: vec![bus.id],
            });
        } else if sol.vm[i] > bus.vmax * (1.0 + TOL) {
            out.push(LimitViolation {
                kind: LimitKind::VoltageHigh,
                entity_id: bus.id,
                severity: (sol.vm[i] - bus.vmax) / bus.vmax,
                at_buses: vec![bus.id],
            });
        }
    }
    for (bi, br) in net.branches.iter().enumerate() {
        if !br.status || br.rate <= 0.0 {
            continue;
        }
        let flow = &sol.flows[bi];
        for (kind, mva) in [
            (LimitKind::ThermalFrom, flow.mva_from()),
            (LimitKind::ThermalTo, flow.mva_to()),
        ] {
            if mva > br.rate * (1.0 + TOL) {
                out.push(LimitViolation {
                    kind,
                    entity_id: br.id,
                    severity: (mva - br.rate) / br.rate,
                    at_buses: vec![br.from_bus, br.to_bus],
                });
            }
        }
        let dth = sol.va[idx[&br.to_bus]] - sol.va[idx[&br.from_bus]];
        if dth < br.angmin - TOL {
            out.push(LimitViolation {
                kind: LimitKind::AngleLow,
                entity_id: br.id,
                severity: (br.angmin - dth).abs(),
                at_buses: vec![br.from_bus, br.to_bus],
            });
        } else if dth > br.angmax + TOL {
            out.push(LimitViolation {
                kind: LimitKind::AngleHigh,
                entity_id: br.id,
                severity: (dth - br.angmax).abs(),
                at_buses: vec![br.from_bus, br.to_bus],
            });
        }
    }
    // Generator capacity, aggregated per bus (fixtures carry one unit each).
    let mut pmin = BTreeMap::new();
    let mut pmax = BTreeMap::new();
    let mut qmin = BTreeMap::new();
    let mut qmax = BTreeMap::new();
    for g in net.gens.iter().filter(|g| g.status) {
        *pmin.entry(g.bus).or_insert(0.0) += g.pmin;
        *pmax.entry(g.bus).or_insert(0.0) += g.pmax;
        *qmin.entry(g.bus).or_insert(0.0) += g.qmin;
        *qmax.entry(g.bus).or_insert(0.0) += g.qmax;
    }
    for (&bus, &px) in &pmax {
        let i = idx[&bus];
        let p = sol.gen_p_bus[i];
        let pn = pmin[&bus];
        if p > px * (1.0 + TOL) + TOL || p < pn - px.abs() * TOL - TOL {
            out.push(LimitViolation {
                kind: LimitKind::GenP,
                entity_id: bus,
                severity: ((p - px).max(pn - p)) / px.abs().max(1.0),
                at_buses: vec![bus],
            });
        }
        let q = sol.gen_q_bus[i];
        let (qn, qx) = (qmin[&bus], qmax[&bus]);
        let qspan = (qx - qn).abs().max(1.0);
        if q > qx + qspan * TOL + 1e-4 || q < qn - qspan * TOL - 1e-4 {
            out.push(LimitViolation {
                kind: LimitKind::GenQ,
                entity_id: bus,
                severity: ((q - qx).max(qn - q)) / qspan,
                at_buses: vec![bus],
            });
        }
    }
    out
}

/// Hop distances from a set of buses over in-service branches.
fn bus_distances(net: &NetworkModel, from: &[u32]) -> BTreeMap<u32, usize> {
    let mut dist: BTreeMap<u32, usize> = BTreeMap::new();
    let mut frontier: Vec<u32> = Vec::new();
    for &b in from {
        if dist.insert(b, 0).is_none() {
            frontier.push(b);
        }
    }
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        let mut next = Vec::new();
        for br in net.branches.iter().filter(|b| b.status) {
            for (a, b) in [(br.from_bus, br.to_bus), (br.to_bus, br.from_bus)] {
                if dist.contains_key(&a) && dist[&a] == level - 1 && !dist.contains_key(&b) {
                    dist.insert(b, level);
                    next.push(b);
                }
            }
        }
        frontier = next;
    }
    dist
}

/// Evaluate the maximum-load-delivered objective for a scenario and blocker
/// placement: fixed-point couple the GIC losses with the power flow, then
/// shed load in `shed_step` increments, nearest to the worst violation first
/// (cheapest shed cost breaking ties), until the limits hold.
pub fn evaluate_mld(
    net: &NetworkModel,
    scenario: &GmdScenario,
    z: &BlockerVector,
    opts: &MldOptions,
) -> Result<MldResult> {
    let n = net.buses.len();
    let idx: BTreeMap<u32, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();

    // The dc side depends only on the field and the blockers.
    let vbr = gic::induced_voltages(net, &scenario.field);
    let dc = gic::solve_dc(net, &vbr, z)?;
    let eff = gic::effective_gic(net, &dc.branch_current)?;
    let eff_mag: BTreeMap<BranchId, f64> = eff.iter().map(|(&k, &v)| (k, v.abs())).collect();

    let (pd_load, qd_load) = scenario.scaled_loads(net);
    let mut shed = vec![0.0f64; net.loads.len()];
    let mut pf_iterations = 0;

    // One coupled solve at the given shed fractions; returns the pf solution
    // and the total applied qloss.
    let solve_at = |shed: &[f64],
                    start: Option<(&[f64], &[f64])>,
                    pf_iterations: &mut usize|
     -> Result<(PfSolution, f64)> {
        let mut pd_bus = vec![0.0; n];
        let mut qd_bus = vec![0.0; n];
        for (li, l) in net.loads.iter().enumerate() {
            let keep = 1.0 - shed[li];
            pd_bus[idx[&l.bus]] += pd_load[li] * keep;
            qd_bus[idx[&l.bus]] += qd_load[li] * keep;
        }
        let mut vm: Vec<f64> = match start {
            Some((vm0, _)) => vm0.to_vec(),
            None => net.buses.iter().map(|b| b.vm).collect(),
        };
        let mut va_start: Option<Vec<f64>> = start.map(|(_, va0)| va0.to_vec());
        let mut last_q_total = f64::INFINITY;
        let mut sol = None;
        let mut q_total = 0.0;
        for _ in 0..opts.coupling_rounds {
            let (qp, qn) = gic::qloss(net, &eff_mag, &vm)?;
            let mut q_extra = vec![0.0; n];
            q_total = 0.0;
            for c in &net.couplings {
                if c.config == XfmrConfig::Line {
                    continue;
                }
                let q = qp[&c.ac_branch] + qn[&c.ac_branch];
                if q == 0.0 {
                    continue;
                }
                let (hi_bus, _) = gic::hi_side_bus(net, c.ac_branch).unwrap();
                q_extra[idx[&hi_bus]] += q;
                q_total += q;
            }
            let s = power_flow(
                net,
                &pd_bus,
                &qd_bus,
                &q_extra,
                va_start.as_ref().map(|va| (vm.as_slice(), va.as_slice())),
                &opts.pf,
            )?;
            *pf_iterations += s.iterations;
            let done = !s.converged || (q_total - last_q_total).abs() <= opts.qloss_tol;
            last_q_total = q_total;
            vm = s.vm.clone();
            va_start = Some(s.va.clone());
            sol = Some(s);
            if done {
                break;
            }
        }
        Ok((sol.expect("at least one coupling round"), q_total))
    };

    let (mut sol, mut q_total) = solve_at(&shed, None, &mut pf_iterations)?;
    let mut violations = current_violations(net, &sol);
    let mut aborted = false;

    let running_cost = |shed: &[f64]| -> f64 {
        net.loads
            .iter()
            .enumerate()
            .map(|(li, l)| pd_load[li].abs() * l.shed_cost * shed[li])
            .sum()
    };

    // Greedy proportional shedding toward feasibility. Some violations do
    // not respond to load shedding at all (saturation losses holding a bus
    // down); the stall guard stops the loop once progress dries up.
    let severity_total = |v: &[LimitViolation]| -> f64 {
        v.iter().map(|x| x.severity.min(1e12)).sum()
    };
    let mut stall = 0usize;
    let mut last_sev = severity_total(&violations);
    let mut last_count = violations.len();
    let max_steps = net.loads.len() * ((1.0 / opts.shed_step).ceil() as usize + 1);
    for _ in 0..max_steps {
        if violations.is_empty() {
            break;
        }
        if sol.converged {
            let sev = severity_total(&violations);
            if violations.len() >= last_count && sev > last_sev - 1e-3 * last_sev.max(1e-9) {
                stall += 1;
                if stall >= 8 {
                    break;
                }
            } else {
                stall = 0;
            }
            last_sev = sev;
            last_count = violations.len();
        }
        if let Some(bound) = opts.abort_above {
            // Any remaining violation forces at least one more shed step, so
            // prune as soon as the next cheapest step would cross the bound.
            let min_next_step: f64 = net
                .loads
                .iter()
                .enumerate()
                .filter(|(li, _)| shed[*li] < 1.0 - 1e-12)
                .map(|(li, l)| {
                    let head = (1.0 - shed[li]).min(opts.shed_step);
                    pd_load[li].abs() * l.shed_cost * head
                })
                .fold(f64::INFINITY, f64::min);
            if running_cost(&shed) + min_next_step > bound {
                aborted = true;
                break;
            }
        }
        // Worst violation first; ties resolve by enumeration order.
        let worst = violations
            .iter()
            .max_by(|a, b| a.severity.partial_cmp(&b.severity).unwrap())
            .unwrap();
        let dist = bus_distances(net, &worst.at_buses);
        if worst.kind == LimitKind::NonConvergence {
            // Divergence is a system-wide emergency: step every remaining
            // load together instead of crawling one at a time.
            let mut any = false;
            for li in 0..net.loads.len() {
                if shed[li] < 1.0 - 1e-12 {
                    shed[li] = (shed[li] + opts.shed_step).min(1.0);
                    any = true;
                }
            }
            if !any {
                break;
            }
            let (s, q) = solve_at(&shed, None, &mut pf_iterations)?;
            sol = s;
            q_total = q;
            violations = current_violations(net, &sol);
            continue;
        }
        // Nearest load, then cheapest, then lowest index.
        let candidate = net
            .loads
            .iter()
            .enumerate()
            .filter(|(li, _)| shed[*li] < 1.0 - 1e-12)
            .min_by(|(i, a), (j, b)| {
                let da = dist.get(&a.bus).copied().unwrap_or(usize::MAX);
                let db = dist.get(&b.bus).copied().unwrap_or(usize::MAX);
                da.cmp(&db)
                    .then(a.shed_cost.partial_cmp(&b.shed_cost).unwrap())
                    .then(i.cmp(j))
            })
            .map(|(i, _)| i);
        let Some(li) = candidate else {
            break; // everything shed, violations stand
        };
        shed[li] = (shed[li] + opts.shed_step).min(1.0);
        // Warm-start only from a converged point; a diverged profile is not a
        // useful initial guess.
        let warm = sol.converged.then(|| (sol.vm.clone(), sol.va.clone()));
        let (s, q) = solve_at(
            &shed,
            warm.as_ref().map(|(vm, va)| (vm.as_slice(), va.as_slice())),
            &mut pf_iterations,
        )?;
        sol = s;
        q_total = q;
        violations = current_violations(net, &sol);
    }

    let shed_cost = running_cost(&shed);

    let branch_flows = net
        .branches
        .iter()
        .enumerate()
        .map(|(bi, b)| (b.id, sol.flows[bi]))
        .collect();

    Ok(MldResult {
        shed_cost,
        shed_fraction: shed,
        converged: sol.converged,
        pf_iterations,
        violations,
        branch_flows,
        total_qloss: q_total,
        aborted,
    })
}

fn current_violations(net: &NetworkModel, sol: &PfSolution) -> Vec<LimitViolation> {
    if !sol.converged {
        // Treat divergence as a global emergency located at every load bus.
        return vec![LimitViolation {
            kind: LimitKind::NonConvergence,
            entity_id: 0,
            severity: f64::MAX,
            at_buses: net.loads.iter().map(|l| l.bus).collect(),
        }];
    }
    check_limits(net, sol)
}
