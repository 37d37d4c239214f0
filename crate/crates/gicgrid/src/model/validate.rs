//! Invariant checks over a [`NetworkModel`].

use std::collections::HashMap;
use std::fmt;

use super::{BusType, GmdBranchKind, GmdBusKind, NetworkModel, XfmrConfig};
use crate::error::Error;

/// One violated invariant. `id` is absent for model-level rules that have no
/// single offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: &'static str,
    pub id: Option<u32>,
    pub rule: &'static str,
}

impl Violation {
    fn new(entity: &'static str, id: u32, rule: &'static str) -> Self {
        Violation {
            entity,
            id: Some(id),
            rule,
        }
    }

    pub(crate) fn into_error(self) -> Error {
        Error::Validation {
            entity: self.entity,
            id: self.id.unwrap_or(0),
            rule: self.rule,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.id {
            Some(id) => write!(f, "{} {}: {}", self.entity, id, self.rule),
            None => write!(f, "{}: {}", self.entity, self.rule),
        }
    }
}

/// Check the first dangling cross-reference, if any.
pub(crate) fn check_references(net: &NetworkModel) -> Result<(), Error> {
    let bus_ok = |id| net.buses.iter().any(|b| b.id == id);
    let gmd_bus_ok = |id| net.gmd_buses.iter().any(|b| b.id == id);
    let gmd_branch_ok = |id| net.gmd_branches.iter().any(|b| b.id == id);
    let branch_ok = |id| net.branches.iter().any(|b| b.id == id);

    let dangle = |entity, id, target, target_id| Error::DanglingReference {
        entity,
        id,
        target,
        target_id,
    };

    for (i, l) in net.loads.iter().enumerate() {
        if !bus_ok(l.bus) {
            return Err(dangle("load", i as u32, "bus", l.bus));
        }
    }
    for (i, g) in net.gens.iter().enumerate() {
        if !bus_ok(g.bus) {
            return Err(dangle("gen", i as u32, "bus", g.bus));
        }
    }
    for b in &net.branches {
        if !bus_ok(b.from_bus) {
            return Err(dangle("branch", b.id, "bus", b.from_bus));
        }
        if !bus_ok(b.to_bus) {
            return Err(dangle("branch", b.id, "bus", b.to_bus));
        }
    }
    for b in &net.gmd_buses {
        if let Some(parent) = b.parent_ac_bus {
            if !bus_ok(parent) {
                return Err(dangle("gmd_bus", b.id, "bus", parent));
            }
        }
    }
    for b in &net.gmd_branches {
        if !gmd_bus_ok(b.from_node) {
            return Err(dangle("gmd_branch", b.id, "gmd_bus", b.from_node));
        }
        if !gmd_bus_ok(b.to_node) {
            return Err(dangle("gmd_branch", b.id, "gmd_bus", b.to_node));
        }
    }
    for c in &net.couplings {
        if !branch_ok(c.ac_branch) {
            return Err(dangle("branch_gmd", c.ac_branch, "branch", c.ac_branch));
        }
        for w in [
            c.hi_node,
            c.lo_node,
            c.series_node,
            c.common_node,
            c.tertiary_node,
        ]
        .into_iter()
        .flatten()
        {
            if !gmd_branch_ok(w) {
                return Err(dangle("branch_gmd", c.ac_branch, "gmd_branch", w));
            }
        }
        if let Some(n) = c.neutral_gmd_bus {
            if !gmd_bus_ok(n) {
                return Err(dangle("branch_gmd", c.ac_branch, "gmd_bus", n));
            }
        }
    }
    for (i, b) in net.blockers.iter().enumerate() {
        if !gmd_bus_ok(b.gmd_bus) {
            return Err(dangle("blocker", i as u32, "gmd_bus", b.gmd_bus));
        }
    }
    Ok(())
}

/// Report every violated invariant; an empty list means the model is valid.
/// Dangling references are reported with rule `"resolves"`.
pub fn validate(net: &NetworkModel) -> Vec<Violation> {
    let mut out = Vec::new();

    if let Err(Error::DanglingReference { entity, id, .. }) = check_references(net) {
        out.push(Violation::new(entity, id, "resolves"));
        // Structural checks below assume references hold.
        return out;
    }

    for b in &net.buses {
        if !(b.vmin <= b.vmax) {
            out.push(Violation::new("bus", b.id, "vmin<=vmax"));
        }
        if !(b.base_kv > 0.0) {
            out.push(Violation::new("bus", b.id, "base_kv>0"));
        }
    }
    for (i, l) in net.loads.iter().enumerate() {
        if !(l.shed_cost >= 0.0) {
            out.push(Violation::new("load", i as u32, "shed_cost>=0"));
        }
        if !(0.0..=1.0).contains(&l.shed_fraction) {
            out.push(Violation::new("load", i as u32, "shed_fraction in [0,1]"));
        }
    }
    for (i, g) in net.gens.iter().enumerate() {
        if !(g.pmin <= g.pmax) {
            out.push(Violation::new("gen", i as u32, "pmin<=pmax"));
        }
        if !(g.qmin <= g.qmax) {
            out.push(Violation::new("gen", i as u32, "qmin<=qmax"));
        }
    }
    for b in &net.branches {
        if b.r * b.r + b.x * b.x <= 0.0 {
            out.push(Violation::new("branch", b.id, "r^2+x^2>0"));
        }
        if !(b.rate >= 0.0) {
            out.push(Violation::new("branch", b.id, "rate>=0"));
        }
        if !(b.angmin <= b.angmax) {
            out.push(Violation::new("branch", b.id, "angmin<=angmax"));
        }
    }
    for b in &net.gmd_buses {
        if !(b.g_gnd >= 0.0) {
            out.push(Violation::new("gmd_bus", b.id, "g_gnd>=0"));
        }
        if b.kind == GmdBusKind::SubstationGround && b.parent_ac_bus.is_some() {
            out.push(Violation::new("gmd_bus", b.id, "substation has no parent bus"));
        }
    }
    for b in &net.gmd_branches {
        if !(b.a > 0.0) {
            out.push(Violation::new("gmd_branch", b.id, "a>0"));
        }
        if b.kind != GmdBranchKind::Line
            && (b.disp_east_km != 0.0 || b.disp_north_km != 0.0)
        {
            out.push(Violation::new("gmd_branch", b.id, "winding displacement=0"));
        }
    }

    let winding_kind: HashMap<u32, GmdBranchKind> = net
        .gmd_branches
        .iter()
        .map(|b| (b.id, b.kind))
        .collect();
    for c in &net.couplings {
        let required: &[(&'static str, Option<u32>)] = match c.config {
            XfmrConfig::GwyeDelta => &[("hi", c.hi_node)],
            XfmrConfig::GwyeGwye => &[("hi", c.hi_node), ("lo", c.lo_node)],
            XfmrConfig::Auto => &[("series", c.series_node), ("common", c.common_node)],
            XfmrConfig::ThreeWinding => &[
                ("hi", c.hi_node),
                ("lo", c.lo_node),
                ("tertiary", c.tertiary_node),
            ],
            XfmrConfig::Line => &[],
        };
        for (_, slot) in required {
            match slot {
                None => out.push(Violation::new("branch_gmd", c.ac_branch, "winding present")),
                Some(id) => {
                    if winding_kind.get(id) != Some(&GmdBranchKind::Winding) {
                        out.push(Violation::new(
                            "branch_gmd",
                            c.ac_branch,
                            "winding kind=winding",
                        ));
                    }
                }
            }
        }
        let alpha_required = matches!(
            c.config,
            XfmrConfig::GwyeGwye | XfmrConfig::Auto | XfmrConfig::ThreeWinding
        );
        if alpha_required && !(c.alpha > 0.0) {
            out.push(Violation::new("branch_gmd", c.ac_branch, "alpha>0"));
        }
        if c.config == XfmrConfig::ThreeWinding && !(c.beta > 0.0) {
            out.push(Violation::new("branch_gmd", c.ac_branch, "beta>0"));
        }
        if !(c.k >= 0.0) {
            out.push(Violation::new("branch_gmd", c.ac_branch, "K>=0"));
        }
        // Transformers carry their charging on the windings, not the branch.
        if c.config != XfmrConfig::Line {
            if let Some(b) = net.branches.iter().find(|b| b.id == c.ac_branch) {
                if b.b_sh != 0.0 {
                    out.push(Violation::new("branch", b.id, "transformer b_sh=0"));
                }
            }
        }
    }

    for (i, b) in net.blockers.iter().enumerate() {
        if !(b.cost > 0.0) {
            out.push(Violation::new("blocker", i as u32, "cost>0"));
        }
    }
    if let Some(budget) = net.blocker_budget {
        if !(budget >= 0.0) {
            out.push(Violation {
                entity: "network",
                id: None,
                rule: "budget>=0",
            });
        }
    }

    check_slack_per_component(net, &mut out);
    check_dc_grounding(net, &mut out);

    out
}

/// Every connected ac component (over in-service branches, ignoring isolated
/// buses) must contain exactly one slack bus.
fn check_slack_per_component(net: &NetworkModel, out: &mut Vec<Violation>) {
    let idx: HashMap<u32, usize> = net
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let n = net.buses.len();
    let mut adj = vec![Vec::new(); n];
    for b in net.branches.iter().filter(|b| b.status) {
        let (i, j) = (idx[&b.from_bus], idx[&b.to_bus]);
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0;
    for start in 0..n {
        if comp[start] != usize::MAX || net.buses[start].bus_type == BusType::Isolated {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = n_comp;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = n_comp;
                    stack.push(w);
                }
            }
        }
        n_comp += 1;
    }
    let mut slack_count = vec![0usize; n_comp];
    for (i, b) in net.buses.iter().enumerate() {
        if b.bus_type == BusType::Slack && comp[i] != usize::MAX {
            slack_count[comp[i]] += 1;
        }
    }
    for count in slack_count {
        if count != 1 {
            out.push(Violation {
                entity: "bus",
                id: None,
                rule: "single slack",
            });
        }
    }
}

/// A dc component that can carry induced sources (it contains a line branch)
/// needs at least one grounding path or the nodal system over it is singular.
/// Source-free components (isolated nodes, pure winding chains) default to
/// zero volts and are fine.
fn check_dc_grounding(net: &NetworkModel, out: &mut Vec<Violation>) {
    let idx: HashMap<u32, usize> = net
        .gmd_buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let n = net.gmd_buses.len();
    let mut adj = vec![Vec::new(); n];
    for b in &net.gmd_branches {
        let (i, j) = (idx[&b.from_node], idx[&b.to_node]);
        let is_line = b.kind == GmdBranchKind::Line;
        adj[i].push((j, is_line));
        adj[j].push((i, is_line));
    }
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut grounded = false;
        let mut has_line = false;
        let mut rep = net.gmd_buses[start].id;
        while let Some(v) = stack.pop() {
            rep = rep.min(net.gmd_buses[v].id);
            if net.gmd_buses[v].g_gnd > 0.0 {
                grounded = true;
            }
            for &(w, is_line) in &adj[v] {
                has_line |= is_line;
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if has_line && !grounded {
            out.push(Violation::new("gmd_bus", rep, "dc component grounded"));
        }
    }
}
