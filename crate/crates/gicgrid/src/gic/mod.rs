//! Dc GIC network solve and the GIC/ac coupling formulas.
//!
//! A uniform storm E-field projected onto each line's displacement induces a
//! series voltage; the resulting quasi-dc flows solve the sparse symmetric
//! nodal system `G V = J`, where a blocker at node `i` scales its grounding
//! conductance to `(1 - z_i) a_i^s`. Winding currents combine per transformer
//! configuration into the effective GIC driving the reactive loss each unit
//! adds at its high-voltage terminal.

pub mod sparse;

#[cfg(test)]
mod tests;

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{
    BranchId, BusId, GmdBranchId, GmdBranchKind, GmdBusId, NetworkModel, XfmrConfig,
};
use sparse::{factor, LdltFactor, SparseSym};

pub const SQRT_2_3: f64 = 0.816_496_580_927_726;

/// Uniform storm electric field.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EField {
    /// V/km.
    pub magnitude: f64,
    /// Degrees clockwise from geographic north.
    pub direction_deg: f64,
}

impl EField {
    pub fn new(magnitude: f64, direction_deg: f64) -> Self {
        let mut d = direction_deg % 360.0;
        if d < 0.0 {
            d += 360.0;
        }
        EField {
            magnitude,
            direction_deg: d,
        }
    }

    /// (east, north) components in V/km.
    pub fn components(&self) -> (f64, f64) {
        let theta = self.direction_deg.to_radians();
        (self.magnitude * theta.sin(), self.magnitude * theta.cos())
    }
}

/// Blocker placement over the candidate gmd buses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockerMode {
    /// z in {0, 1}.
    Binary,
    /// z in [0, 1], for the differentiable solve.
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockerVector {
    pub mode: BlockerMode,
    values: BTreeMap<GmdBusId, f64>,
}

impl BlockerVector {
    /// No blockers anywhere.
    pub fn none() -> Self {
        BlockerVector {
            mode: BlockerMode::Binary,
            values: BTreeMap::new(),
        }
    }

    /// Binary vector placing blockers at `ids`; keys must be candidates.
    pub fn binary(net: &NetworkModel, ids: &[GmdBusId]) -> Result<Self> {
        let candidates = net.candidate_ids();
        for &id in ids {
            if !candidates.contains(&id) {
                return Err(Error::InvalidConfig(format!(
                    "gmd bus {id} is not a blocker candidate"
                )));
            }
        }
        Ok(BlockerVector {
            mode: BlockerMode::Binary,
            values: ids.iter().map(|&id| (id, 1.0)).collect(),
        })
    }

    /// Soft vector from per-candidate values in [0, 1].
    pub fn soft(net: &NetworkModel, values: &BTreeMap<GmdBusId, f64>) -> Result<Self> {
        let candidates = net.candidate_ids();
        for (&id, &v) in values {
            if !candidates.contains(&id) {
                return Err(Error::InvalidConfig(format!(
                    "gmd bus {id} is not a blocker candidate"
                )));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "soft blocker value {v} for gmd bus {id} outside [0,1]"
                )));
            }
        }
        Ok(BlockerVector {
            mode: BlockerMode::Soft,
            values: values.clone(),
        })
    }

    pub fn value(&self, id: GmdBusId) -> f64 {
        self.values.get(&id).copied().unwrap_or(0.0)
    }

    pub fn placed_ids(&self) -> Vec<GmdBusId> {
        self.values
            .iter()
            .filter(|(_, &v)| v >= 0.5)
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GmdBusId, &f64)> {
        self.values.iter()
    }
}

/// Everything the dc solve produces, keyed by entity ids. `effective_gic`
/// and the losses are keyed by the coupling's ac branch.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GicSolution {
    pub node_voltage: BTreeMap<GmdBusId, f64>,
    pub branch_current: BTreeMap<GmdBranchId, f64>,
    pub grounding_current: BTreeMap<GmdBusId, f64>,
    pub effective_gic: BTreeMap<BranchId, f64>,
    pub effective_gic_mag: BTreeMap<BranchId, f64>,
    pub qloss_pos: BTreeMap<BranchId, f64>,
    pub qloss_neg: BTreeMap<BranchId, f64>,
}

/// Induced series voltage per gmd branch: the field components projected on
/// the branch displacement. Windings and grounding leads see no field.
pub fn induced_voltages(net: &NetworkModel, field: &EField) -> BTreeMap<GmdBranchId, f64> {
    let (e_east, e_north) = field.components();
    net.gmd_branches
        .iter()
        .map(|b| {
            let v = if b.kind == GmdBranchKind::Line {
                e_east * b.disp_east_km + e_north * b.disp_north_km
            } else {
                0.0
            };
            (b.id, v)
        })
        .collect()
}

struct DcSystem {
    node_pos: HashMap<GmdBusId, usize>,
    /// (from position, to position) per gmd branch, model order.
    ends: Vec<(usize, usize)>,
    comp: Vec<usize>,
    n_comp: usize,
}

impl DcSystem {
    fn new(net: &NetworkModel) -> Self {
        let node_pos: HashMap<GmdBusId, usize> = net
            .gmd_buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect();
        let ends: Vec<(usize, usize)> = net
            .gmd_branches
            .iter()
            .map(|b| (node_pos[&b.from_node], node_pos[&b.to_node]))
            .collect();

        let n = net.gmd_buses.len();
        let mut adj = vec![Vec::new(); n];
        for &(f, t) in &ends {
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut comp = vec![usize::MAX; n];
        let mut n_comp = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
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

        DcSystem {
            node_pos,
            ends,
            comp,
            n_comp,
        }
    }
}

/// Internal solved state; keeps the factorization for adjoint solves.
struct DcSolve {
    sys: DcSystem,
    /// Effective grounding conductance (1-z) a^s per node position.
    ground_eff: Vec<f64>,
    /// Compact index into the factored system; usize::MAX for nodes solved by
    /// the zero-volt convention.
    compact: Vec<usize>,
    factor: Option<LdltFactor>,
    /// Node voltage per position.
    v: Vec<f64>,
    /// Branch current per gmd branch, model order.
    i: Vec<f64>,
}

fn solve_dc_internal(
    net: &NetworkModel,
    vbr_map: &BTreeMap<GmdBranchId, f64>,
    z: &BlockerVector,
) -> Result<DcSolve> {
    let sys = DcSystem::new(net);
    let n = net.gmd_buses.len();

    if vbr_map.len() != net.gmd_branches.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} induced voltages for {} gmd branches",
            vbr_map.len(),
            net.gmd_branches.len()
        )));
    }
    let vbr: Vec<f64> = net
        .gmd_branches
        .iter()
        .map(|b| vbr_map.get(&b.id).copied().unwrap_or(0.0))
        .collect();

    let ground_eff: Vec<f64> = net
        .gmd_buses
        .iter()
        .map(|b| (1.0 - z.value(b.id)) * b.g_gnd)
        .collect();

    // A component is factored only when it has an unblocked grounding path;
    // a source-free ungrounded component sits at zero volts by convention.
    let mut comp_ground = vec![0.0; sys.n_comp];
    let mut comp_src = vec![0.0f64; sys.n_comp];
    for (pos, g) in ground_eff.iter().enumerate() {
        comp_ground[sys.comp[pos]] += g;
    }
    for (bi, &(f, _)) in sys.ends.iter().enumerate() {
        let c = sys.comp[f];
        comp_src[c] = comp_src[c].max(vbr[bi].abs());
    }

    let mut solved = vec![false; sys.n_comp];
    for c in 0..sys.n_comp {
        if comp_ground[c] > 1e-12 {
            solved[c] = true;
        } else if comp_src[c] != 0.0 {
            let rep = net
                .gmd_buses
                .iter()
                .enumerate()
                .filter(|(pos, _)| sys.comp[*pos] == c)
                .map(|(_, b)| b.id)
                .min()
                .unwrap();
            return Err(Error::SingularDcSystem(rep));
        }
    }

    let mut compact = vec![usize::MAX; n];
    let mut m = 0;
    for pos in 0..n {
        if solved[sys.comp[pos]] {
            compact[pos] = m;
            m += 1;
        }
    }

    let mut v = vec![0.0; n];
    let fact = if m > 0 {
        let mut trips = Vec::with_capacity(3 * sys.ends.len() + n);
        let mut rhs = vec![0.0; m];
        for (bi, &(f, t)) in sys.ends.iter().enumerate() {
            let (cf, ct) = (compact[f], compact[t]);
            if cf == usize::MAX || cf == ct {
                continue;
            }
            let a = net.gmd_branches[bi].a;
            trips.push((cf, cf, a));
            trips.push((ct, ct, a));
            trips.push((cf.min(ct), cf.max(ct), -a));
            rhs[ct] += a * vbr[bi];
            rhs[cf] -= a * vbr[bi];
        }
        for pos in 0..n {
            if compact[pos] != usize::MAX {
                trips.push((compact[pos], compact[pos], ground_eff[pos]));
            }
        }
        let mat = SparseSym::from_triplets(m, &trips);
        let fact = factor(&mat, 1e-14).ok_or_else(|| {
            Error::SingularDcSystem(net.gmd_buses.iter().map(|b| b.id).min().unwrap_or(0))
        })?;
        fact.solve(&mut rhs);
        for pos in 0..n {
            if compact[pos] != usize::MAX {
                v[pos] = rhs[compact[pos]];
            }
        }
        Some(fact)
    } else {
        None
    };

    let i: Vec<f64> = sys
        .ends
        .iter()
        .enumerate()
        .map(|(bi, &(f, t))| net.gmd_branches[bi].a * (v[f] - v[t] + vbr[bi]))
        .collect();

    Ok(DcSolve {
        sys,
        ground_eff,
        compact,
        factor: fact,
        v,
        i,
    })
}

/// Solve the dc network under the given induced voltages and blocker vector.
/// Only voltages and currents are filled; couple with [`effective_gic`] and
/// [`qloss`] for the transformer quantities.
pub fn solve_dc(
    net: &NetworkModel,
    vbr: &BTreeMap<GmdBranchId, f64>,
    z: &BlockerVector,
) -> Result<GicSolution> {
    let s = solve_dc_internal(net, vbr, z)?;
    Ok(GicSolution {
        node_voltage: net
            .gmd_buses
            .iter()
            .enumerate()
            .map(|(pos, b)| (b.id, s.v[pos]))
            .collect(),
        branch_current: net
            .gmd_branches
            .iter()
            .enumerate()
            .map(|(bi, b)| (b.id, s.i[bi]))
            .collect(),
        grounding_current: net
            .gmd_buses
            .iter()
            .enumerate()
            .map(|(pos, b)| (b.id, s.ground_eff[pos] * s.v[pos]))
            .collect(),
        effective_gic: BTreeMap::new(),
        effective_gic_mag: BTreeMap::new(),
        qloss_pos: BTreeMap::new(),
        qloss_neg: BTreeMap::new(),
    })
}

fn winding_current(
    currents: &BTreeMap<GmdBranchId, f64>,
    slot: Option<GmdBranchId>,
    branch: BranchId,
    role: &'static str,
) -> Result<f64> {
    let id = slot.ok_or(Error::MissingWinding { branch, role })?;
    currents
        .get(&id)
        .copied()
        .ok_or(Error::MissingWinding { branch, role })
}

/// Effective GIC per coupling record (plain lines report 0).
pub fn effective_gic(
    net: &NetworkModel,
    currents: &BTreeMap<GmdBranchId, f64>,
) -> Result<BTreeMap<BranchId, f64>> {
    let mut out = BTreeMap::new();
    for c in &net.couplings {
        let b = c.ac_branch;
        let eff = match c.config {
            XfmrConfig::GwyeDelta => winding_current(currents, c.hi_node, b, "hi")?,
            XfmrConfig::GwyeGwye => {
                let ih = winding_current(currents, c.hi_node, b, "hi")?;
                let il = winding_current(currents, c.lo_node, b, "lo")?;
                (c.alpha * ih + il) / c.alpha
            }
            XfmrConfig::Auto => {
                let is = winding_current(currents, c.series_node, b, "series")?;
                let ic = winding_current(currents, c.common_node, b, "common")?;
                (c.alpha * is + ic) / (c.alpha + 1.0)
            }
            XfmrConfig::ThreeWinding => {
                let ih = winding_current(currents, c.hi_node, b, "hi")?;
                let il = winding_current(currents, c.lo_node, b, "lo")?;
                let it = winding_current(currents, c.tertiary_node, b, "tertiary")?;
                ih + il / c.alpha + it / c.beta
            }
            XfmrConfig::Line => 0.0,
        };
        out.insert(b, eff);
    }
    Ok(out)
}

/// High-voltage side bus of a coupling's ac branch.
pub fn hi_side_bus(net: &NetworkModel, branch: BranchId) -> Option<(BusId, bool)> {
    let b = net.branches.iter().find(|b| b.id == branch)?;
    let kv_from = net.buses.iter().find(|x| x.id == b.from_bus)?.base_kv;
    let kv_to = net.buses.iter().find(|x| x.id == b.to_bus)?.base_kv;
    // bool: hi side is the to-bus
    if kv_to > kv_from {
        Some((b.to_bus, true))
    } else {
        Some((b.from_bus, false))
    }
}

/// GIC-driven reactive loss per transformer, split by which branch end the
/// high side is: `qloss_pos` when the to-bus is high, `qloss_neg` when the
/// from-bus is. `ac_vm` is per-unit voltage aligned with `net.buses`.
pub fn qloss(
    net: &NetworkModel,
    effective_gic_mag: &BTreeMap<BranchId, f64>,
    ac_vm: &[f64],
) -> Result<(BTreeMap<BranchId, f64>, BTreeMap<BranchId, f64>)> {
    if ac_vm.len() != net.buses.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} voltages for {} buses",
            ac_vm.len(),
            net.buses.len()
        )));
    }
    let mut pos = BTreeMap::new();
    let mut neg = BTreeMap::new();
    for c in &net.couplings {
        if c.config == XfmrConfig::Line {
            pos.insert(c.ac_branch, 0.0);
            neg.insert(c.ac_branch, 0.0);
            continue;
        }
        let i_eff = effective_gic_mag.get(&c.ac_branch).copied().unwrap_or(0.0);
        let (hi_bus, hi_is_to) = hi_side_bus(net, c.ac_branch)
            .ok_or_else(|| Error::InvalidConfig(format!("coupling {} has no branch", c.ac_branch)))?;
        let hi_idx = net.bus_index(hi_bus).unwrap();
        let q = SQRT_2_3 * (c.s_base / c.v_base_hi) * ac_vm[hi_idx].abs() * c.k * i_eff;
        if hi_is_to {
            pos.insert(c.ac_branch, q);
            neg.insert(c.ac_branch, 0.0);
        } else {
            pos.insert(c.ac_branch, 0.0);
            neg.insert(c.ac_branch, q);
        }
    }
    Ok((pos, neg))
}

/// Solve the dc network and fill in all coupling quantities at the model's
/// nominal ac voltage profile.
pub fn solve_gic(
    net: &NetworkModel,
    field: &EField,
    z: &BlockerVector,
) -> Result<GicSolution> {
    let vbr = induced_voltages(net, field);
    let mut sol = solve_dc(net, &vbr, z)?;
    let eff = effective_gic(net, &sol.branch_current)?;
    let eff_mag: BTreeMap<BranchId, f64> = eff.iter().map(|(&k, &v)| (k, v.abs())).collect();
    let vm: Vec<f64> = net.buses.iter().map(|b| b.vm).collect();
    let (qp, qn) = qloss(net, &eff_mag, &vm)?;
    sol.effective_gic = eff;
    sol.effective_gic_mag = eff_mag;
    sol.qloss_pos = qp;
    sol.qloss_neg = qn;
    Ok(sol)
}

/// The three-feature physics summary consumed by the physics-informed loss:
/// (total reactive loss, worst effective GIC, total grounding current
/// magnitude), evaluated at the model's nominal voltage profile.
pub fn physics_features(
    net: &NetworkModel,
    field: &EField,
    z: &BlockerVector,
) -> Result<[f64; 3]> {
    let sol = solve_gic(net, field, z)?;
    Ok(features_of(&sol))
}

fn features_of(sol: &GicSolution) -> [f64; 3] {
    let total_qloss: f64 =
        sol.qloss_pos.values().sum::<f64>() + sol.qloss_neg.values().sum::<f64>();
    let max_eff = sol
        .effective_gic_mag
        .values()
        .cloned()
        .fold(0.0f64, f64::max);
    let total_ground: f64 = sol.grounding_current.values().map(|g| g.abs()).sum();
    [total_qloss, max_eff, total_ground]
}

/// Gradient of each physics feature with respect to the soft blocker values,
/// via the adjoint of the linear dc solve. Kinks of |.| and max use
/// subgradient zero / first-argmax.
pub fn physics_features_grad(
    net: &NetworkModel,
    field: &EField,
    z: &BlockerVector,
) -> Result<BTreeMap<GmdBusId, [f64; 3]>> {
    let vbr_map = induced_voltages(net, field);
    let s = solve_dc_internal(net, &vbr_map, z)?;
    let n = net.gmd_buses.len();

    // Forward quantities needed by the feature derivatives.
    let currents: BTreeMap<GmdBranchId, f64> = net
        .gmd_branches
        .iter()
        .enumerate()
        .map(|(bi, b)| (b.id, s.i[bi]))
        .collect();
    let eff = effective_gic(net, &currents)?;
    let vm: Vec<f64> = net.buses.iter().map(|b| b.vm).collect();

    // d feature / d V, one dense vector per feature over node positions.
    let mut dfdv = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];

    // Per-transformer weighted winding stencils for qloss (feature 0) and the
    // argmax transformer (feature 1).
    let branch_pos: HashMap<GmdBranchId, usize> = net
        .gmd_branches
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i))
        .collect();
    let mut max_eff = 0.0f64;
    let mut argmax: Option<&crate::model::TransformerCoupling> = None;
    for c in &net.couplings {
        if c.config == XfmrConfig::Line {
            continue;
        }
        let e = eff[&c.ac_branch];
        if e.abs() > max_eff {
            max_eff = e.abs();
            argmax = Some(c);
        }
    }
    let add_eff_stencil = |c: &crate::model::TransformerCoupling,
                               weight: f64,
                               dfdv: &mut Vec<f64>| {
        // d(effective)/d V through each winding current I = a (V_f - V_t).
        let winding_coeffs: Vec<(Option<GmdBranchId>, f64)> = match c.config {
            XfmrConfig::GwyeDelta => vec![(c.hi_node, 1.0)],
            XfmrConfig::GwyeGwye => vec![(c.hi_node, 1.0), (c.lo_node, 1.0 / c.alpha)],
            XfmrConfig::Auto => vec![
                (c.series_node, c.alpha / (c.alpha + 1.0)),
                (c.common_node, 1.0 / (c.alpha + 1.0)),
            ],
            XfmrConfig::ThreeWinding => vec![
                (c.hi_node, 1.0),
                (c.lo_node, 1.0 / c.alpha),
                (c.tertiary_node, 1.0 / c.beta),
            ],
            XfmrConfig::Line => vec![],
        };
        for (slot, coef) in winding_coeffs {
            if let Some(id) = slot {
                let bi = branch_pos[&id];
                let (f, t) = s.sys.ends[bi];
                let a = net.gmd_branches[bi].a;
                dfdv[f] += weight * coef * a;
                dfdv[t] -= weight * coef * a;
            }
        }
    };

    for c in &net.couplings {
        if c.config == XfmrConfig::Line {
            continue;
        }
        let e = eff[&c.ac_branch];
        let sign = if e > 0.0 {
            1.0
        } else if e < 0.0 {
            -1.0
        } else {
            0.0
        };
        let (hi_bus, _) = hi_side_bus(net, c.ac_branch).unwrap();
        let hi_idx = net.bus_index(hi_bus).unwrap();
        let coef = SQRT_2_3 * (c.s_base / c.v_base_hi) * vm[hi_idx].abs() * c.k;
        add_eff_stencil(c, coef * sign, &mut dfdv[0]);
    }
    if let Some(c) = argmax {
        let e = eff[&c.ac_branch];
        let sign = if e >= 0.0 { 1.0 } else { -1.0 };
        add_eff_stencil(c, sign, &mut dfdv[1]);
    }
    for (pos, _b) in net.gmd_buses.iter().enumerate() {
        let g = s.ground_eff[pos] * s.v[pos];
        let sign = if g > 0.0 {
            1.0
        } else if g < 0.0 {
            -1.0
        } else {
            0.0
        };
        dfdv[2][pos] = sign * s.ground_eff[pos];
    }

    // Adjoint solves: G lambda = df/dV over the factored nodes.
    let m = s.compact.iter().filter(|&&c| c != usize::MAX).count();
    let mut lambdas = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    if let Some(fact) = &s.factor {
        for (f, dfdv_f) in dfdv.iter().enumerate() {
            let mut rhs = vec![0.0; m];
            for pos in 0..n {
                if s.compact[pos] != usize::MAX {
                    rhs[s.compact[pos]] = dfdv_f[pos];
                }
            }
            fact.solve(&mut rhs);
            for pos in 0..n {
                if s.compact[pos] != usize::MAX {
                    lambdas[f][pos] = rhs[s.compact[pos]];
                }
            }
        }
    }

    // dF/dz_k = direct term + a^s_k V_k lambda_k.
    let mut out = BTreeMap::new();
    for &cand in &net.candidate_ids() {
        let pos = s.sys.node_pos[&cand];
        let a_s = net.gmd_buses[pos].g_gnd;
        let vk = s.v[pos];
        let mut grads = [0.0; 3];
        for f in 0..3 {
            grads[f] = a_s * vk * lambdas[f][pos];
        }
        // Direct dependence of the grounding-current feature on z_k.
        let g = s.ground_eff[pos] * vk;
        let sign = if g > 0.0 {
            1.0
        } else if g < 0.0 {
            -1.0
        } else {
            0.0
        };
        grads[2] += sign * (-a_s * vk);
        out.insert(cand, grads);
    }
    Ok(out)
}
