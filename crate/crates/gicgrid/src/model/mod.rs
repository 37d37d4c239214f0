//! Coupled ac/dc network data model.
//!
//! A [`NetworkModel`] carries the ac transmission system (buses, generators,
//! loads, branches), the dc system the geomagnetic disturbance drives
//! (gmd buses and gmd branches), and the coupling records that tie each ac
//! branch to its dc windings. Models are immutable once loaded; every solver
//! in this crate takes them by shared reference.

mod fixtures;
mod io;
mod validate;

pub use fixtures::{b4gic, epri21, uiuc150};
pub use io::{load_network, network_from_json, network_to_json, save_network};
pub use validate::{validate, Violation};

use serde::{Deserialize, Serialize};

pub type BusId = u32;
pub type BranchId = u32;
pub type GmdBusId = u32;
pub type GmdBranchId = u32;

/// Role of an ac bus in the power-flow problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusType {
    Pq,
    Pv,
    Slack,
    Isolated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcBus {
    pub id: BusId,
    pub bus_type: BusType,
    /// Voltage magnitude, per unit.
    pub vm: f64,
    /// Voltage angle, radians.
    pub va: f64,
    pub vmin: f64,
    pub vmax: f64,
    pub base_kv: f64,
    /// Shunt conductance, per unit.
    #[serde(default)]
    pub gs: f64,
    /// Shunt susceptance, per unit.
    #[serde(default)]
    pub bs: f64,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Load {
    pub bus: BusId,
    /// Scheduled active demand, MW.
    pub pd: f64,
    /// Scheduled reactive demand, Mvar.
    pub qd: f64,
    /// Cost of shedding this load, $/MW.
    pub shed_cost: f64,
    /// Solution field: fraction of the load shed, in [0, 1].
    #[serde(default)]
    pub shed_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    /// Active setpoint, MW.
    pub pg: f64,
    /// Reactive setpoint, Mvar.
    pub qg: f64,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    /// Voltage setpoint, per unit.
    pub vg: f64,
    pub status: bool,
    /// Machine MVA base.
    #[serde(default = "default_mbase")]
    pub mbase: f64,
    // Remaining fields mirror the common case-table columns (quadratic cost,
    // startup/shutdown, ramps, capability-curve points) so the gen feature
    // vector is 20 wide; they default to zero when absent.
    #[serde(default)]
    pub c2: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub startup_cost: f64,
    #[serde(default)]
    pub shutdown_cost: f64,
    #[serde(default)]
    pub ramp_agc: f64,
    #[serde(default)]
    pub ramp_10: f64,
    #[serde(default)]
    pub ramp_30: f64,
    #[serde(default)]
    pub ramp_q: f64,
    #[serde(default)]
    pub pc1: f64,
    #[serde(default)]
    pub pc2: f64,
}

fn default_mbase() -> f64 {
    100.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcBranch {
    pub id: BranchId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Series resistance, per unit.
    pub r: f64,
    /// Series reactance, per unit.
    pub x: f64,
    /// Total line-charging susceptance, per unit (0 for transformers).
    #[serde(default)]
    pub b_sh: f64,
    /// Thermal limit, MVA.
    pub rate: f64,
    /// Transformer off-nominal tap ratio (1.0 for lines).
    #[serde(default = "default_tap")]
    pub tap: f64,
    /// Transformer phase shift, radians.
    #[serde(default)]
    pub shift: f64,
    pub angmin: f64,
    pub angmax: f64,
    pub status: bool,
}

fn default_tap() -> f64 {
    1.0
}

/// Kind of node in the dc (GIC) network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmdBusKind {
    /// Substation grounding grid; carries conductance to remote earth.
    SubstationGround,
    /// Dc image of an ac bus.
    BusNode,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmdBus {
    pub id: GmdBusId,
    pub kind: GmdBusKind,
    /// Conductance to remote earth, siemens (0 for ungrounded nodes).
    #[serde(default)]
    pub g_gnd: f64,
    /// The ac bus this dc node mirrors; absent for substation grounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_ac_bus: Option<BusId>,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GmdBranchKind {
    Line,
    Winding,
    GroundingLead,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmdBranch {
    pub id: GmdBranchId,
    pub from_node: GmdBusId,
    pub to_node: GmdBusId,
    /// Dc conductance, siemens (three phases lumped).
    pub a: f64,
    #[serde(default)]
    pub len_km: f64,
    /// Eastward displacement from from-node to to-node, km.
    #[serde(default)]
    pub disp_east_km: f64,
    /// Northward displacement from from-node to to-node, km.
    #[serde(default)]
    pub disp_north_km: f64,
    pub kind: GmdBranchKind,
}

/// Transformer winding arrangement for the effective-GIC formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XfmrConfig {
    GwyeDelta,
    GwyeGwye,
    Auto,
    ThreeWinding,
    /// Plain line: no windings, no GIC reactive loss.
    Line,
}

/// Per-ac-branch GIC coupling record (the `branch_gmd` table).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformerCoupling {
    pub ac_branch: BranchId,
    pub config: XfmrConfig,
    /// High-side winding gmd branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi_node: Option<GmdBranchId>,
    /// Low-side winding gmd branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo_node: Option<GmdBranchId>,
    /// Series winding gmd branch (autotransformers).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_node: Option<GmdBranchId>,
    /// Common winding gmd branch (autotransformers).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub common_node: Option<GmdBranchId>,
    /// Tertiary winding gmd branch (three-winding units).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tertiary_node: Option<GmdBranchId>,
    /// Turns ratio, high over low base voltage.
    #[serde(default = "default_turns")]
    pub alpha: f64,
    /// Turns ratio, high over tertiary base voltage.
    #[serde(default = "default_turns")]
    pub beta: f64,
    /// GIC reactive-loss coefficient, Mvar per amp per p.u. volt (scaled by base).
    #[serde(default)]
    pub k: f64,
    /// Transformer MVA base.
    pub s_base: f64,
    pub v_base_hi: f64,
    pub v_base_lo: f64,
    /// Neutral grounding point, when the unit has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neutral_gmd_bus: Option<GmdBusId>,
    #[serde(default)]
    pub is_blocker_candidate: bool,
}

fn default_turns() -> f64 {
    1.0
}

/// Economics of one candidate blocker location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockerEconomics {
    /// Candidate gmd bus (a substation grounding point).
    pub gmd_bus: GmdBusId,
    /// Installation cost, $.
    pub cost: f64,
}

/// The full coupled ac/dc network description.
///
/// Field names follow the case-table naming so the JSON document carries
/// top-level arrays `bus`, `gen`, `load`, `branch`, `gmd_bus`, `gmd_branch`,
/// `branch_gmd`, and `blocker`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkModel {
    pub name: String,
    pub base_mva: f64,
    #[serde(rename = "bus")]
    pub buses: Vec<AcBus>,
    #[serde(rename = "gen")]
    pub gens: Vec<Generator>,
    #[serde(rename = "load")]
    pub loads: Vec<Load>,
    #[serde(rename = "branch")]
    pub branches: Vec<AcBranch>,
    #[serde(rename = "gmd_bus")]
    pub gmd_buses: Vec<GmdBus>,
    #[serde(rename = "gmd_branch")]
    pub gmd_branches: Vec<GmdBranch>,
    #[serde(rename = "branch_gmd")]
    pub couplings: Vec<TransformerCoupling>,
    #[serde(rename = "blocker", default)]
    pub blockers: Vec<BlockerEconomics>,
    /// Total placement budget, $; placement solvers may override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocker_budget: Option<f64>,
}

impl NetworkModel {
    /// Candidate gmd buses in ascending id order.
    pub fn candidate_ids(&self) -> Vec<GmdBusId> {
        let mut ids: Vec<GmdBusId> = self.blockers.iter().map(|b| b.gmd_bus).collect();
        ids.sort_unstable();
        ids
    }

    /// Cost of one candidate; candidates absent from the table cost 1.0.
    pub fn blocker_cost(&self, gmd_bus: GmdBusId) -> f64 {
        self.blockers
            .iter()
            .find(|b| b.gmd_bus == gmd_bus)
            .map(|b| b.cost)
            .unwrap_or(1.0)
    }

    /// Default budget: half the candidate count (unit costs), rounded up.
    pub fn default_budget(&self) -> f64 {
        self.blocker_budget
            .unwrap_or_else(|| ((self.blockers.len() + 1) / 2) as f64)
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn gmd_bus_index(&self, id: GmdBusId) -> Option<usize> {
        self.gmd_buses.iter().position(|b| b.id == id)
    }

    pub fn gmd_branch_index(&self, id: GmdBranchId) -> Option<usize> {
        self.gmd_branches.iter().position(|b| b.id == id)
    }

    pub fn branch_index(&self, id: BranchId) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    /// Total scheduled active demand, MW.
    pub fn total_pd(&self) -> f64 {
        self.loads.iter().map(|l| l.pd).sum()
    }
}
