//! Built-in test networks.
//!
//! `b4gic` is the small two-substation fixture used throughout the tests and
//! docs. `epri21` and `uiuc150` are synthetic cases sized to the published
//! statistics of the equally named benchmark systems (entity counts match;
//! the electrical data is our own, tuned so the base case is feasible and
//! strong GMD fields stress it).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

const KM_PER_DEG_LAT: f64 = 110.57;
const KM_PER_DEG_LON_EQ: f64 = 111.32;

/// East/north displacement and straight-line length between two coordinates.
pub fn geo_displacement(from: (f64, f64), to: (f64, f64)) -> (f64, f64, f64) {
    let mean_lat = 0.5 * (from.0 + to.0);
    let east = (to.1 - from.1) * KM_PER_DEG_LON_EQ * mean_lat.to_radians().cos();
    let north = (to.0 - from.0) * KM_PER_DEG_LAT;
    (east, north, east.hypot(north))
}

fn bus(id: BusId, bus_type: BusType, base_kv: f64, coord: (f64, f64)) -> AcBus {
    AcBus {
        id,
        bus_type,
        vm: 1.0,
        va: 0.0,
        vmin: 0.94,
        vmax: 1.08,
        base_kv,
        gs: 0.0,
        bs: 0.0,
        lat: coord.0,
        lon: coord.1,
    }
}

fn gen(bus: BusId, pg: f64, pmax: f64, qmin: f64, qmax: f64, vg: f64) -> Generator {
    Generator {
        bus,
        pg,
        qg: 0.0,
        pmin: 0.0,
        pmax,
        qmin,
        qmax,
        vg,
        status: true,
        mbase: 100.0,
        c2: 0.01,
        c1: 25.0,
        c0: 0.0,
        startup_cost: 0.0,
        shutdown_cost: 0.0,
        ramp_agc: 0.0,
        ramp_10: pmax / 2.0,
        ramp_30: pmax,
        ramp_q: 0.0,
        pc1: 0.0,
        pc2: 0.0,
    }
}

fn load(bus: BusId, pd: f64, qd: f64, shed_cost: f64) -> Load {
    Load {
        bus,
        pd,
        qd,
        shed_cost,
        shed_fraction: 0.0,
    }
}

struct CaseBuilder {
    net: NetworkModel,
    next_branch: BranchId,
    next_gmd_branch: GmdBranchId,
}

impl CaseBuilder {
    fn new(name: &str) -> Self {
        CaseBuilder {
            net: NetworkModel {
                name: name.into(),
                base_mva: 100.0,
                buses: Vec::new(),
                gens: Vec::new(),
                loads: Vec::new(),
                branches: Vec::new(),
                gmd_buses: Vec::new(),
                gmd_branches: Vec::new(),
                couplings: Vec::new(),
                blockers: Vec::new(),
                blocker_budget: None,
            },
            next_branch: 1,
            next_gmd_branch: 1,
        }
    }

    fn bus_coord(&self, id: BusId) -> (f64, f64) {
        let b = self.net.buses.iter().find(|b| b.id == id).expect("bus");
        (b.lat, b.lon)
    }

    fn gmd_node_of_bus(&self, bus: BusId) -> GmdBusId {
        self.net
            .gmd_buses
            .iter()
            .find(|g| g.parent_ac_bus == Some(bus))
            .expect("dc node for bus")
            .id
    }

    /// Transmission line: ac branch plus its dc image between the bus nodes.
    /// `r_km`/`x_km` are ohms per km per phase; `b_km` is line charging in
    /// microsiemens per km per phase.
    fn line(&mut self, from: BusId, to: BusId, r_km: f64, x_km: f64, b_km: f64, rate: f64) {
        let (east, north, len) = geo_displacement(self.bus_coord(from), self.bus_coord(to));
        let kv = self
            .net
            .buses
            .iter()
            .find(|b| b.id == from)
            .map(|b| b.base_kv)
            .unwrap();
        let z_base = kv * kv / self.net.base_mva;
        let id = self.next_branch;
        self.next_branch += 1;
        self.net.branches.push(AcBranch {
            id,
            from_bus: from,
            to_bus: to,
            r: r_km * len / z_base,
            x: x_km * len / z_base,
            b_sh: b_km * 1e-6 * len * z_base,
            rate,
            tap: 1.0,
            shift: 0.0,
            angmin: -0.5236,
            angmax: 0.5236,
            status: true,
        });
        let gid = self.next_gmd_branch;
        self.next_gmd_branch += 1;
        self.net.gmd_branches.push(GmdBranch {
            id: gid,
            from_node: self.gmd_node_of_bus(from),
            to_node: self.gmd_node_of_bus(to),
            a: 3.0 / (r_km * len),
            len_km: len,
            disp_east_km: east,
            disp_north_km: north,
            kind: GmdBranchKind::Line,
        });
        self.net.couplings.push(TransformerCoupling {
            ac_branch: id,
            config: XfmrConfig::Line,
            hi_node: None,
            lo_node: None,
            series_node: None,
            common_node: None,
            tertiary_node: None,
            alpha: 1.0,
            beta: 1.0,
            k: 0.0,
            s_base: self.net.base_mva,
            v_base_hi: kv,
            v_base_lo: kv,
            neutral_gmd_bus: None,
            is_blocker_candidate: false,
        });
    }

    fn winding(&mut self, from_node: GmdBusId, to_node: GmdBusId, r_ohm: f64) -> GmdBranchId {
        let id = self.next_gmd_branch;
        self.next_gmd_branch += 1;
        self.net.gmd_branches.push(GmdBranch {
            id,
            from_node,
            to_node,
            a: 3.0 / r_ohm,
            len_km: 0.0,
            disp_east_km: 0.0,
            disp_north_km: 0.0,
            kind: GmdBranchKind::Winding,
        });
        id
    }

    /// Two- or three-winding transformer. Winding resistances are ohms per
    /// phase; `None` skips the winding (delta side, no dc path).
    #[allow(clippy::too_many_arguments)]
    fn transformer(
        &mut self,
        hi_bus: BusId,
        lo_bus: BusId,
        config: XfmrConfig,
        ground: GmdBusId,
        r_pu: f64,
        x_pu: f64,
        rate: f64,
        k: f64,
        windings: XfmrWindings,
    ) {
        let hi_kv = self
            .net
            .buses
            .iter()
            .find(|b| b.id == hi_bus)
            .map(|b| b.base_kv)
            .unwrap();
        let lo_kv = self
            .net
            .buses
            .iter()
            .find(|b| b.id == lo_bus)
            .map(|b| b.base_kv)
            .unwrap();
        let id = self.next_branch;
        self.next_branch += 1;
        self.net.branches.push(AcBranch {
            id,
            from_bus: hi_bus,
            to_bus: lo_bus,
            r: r_pu,
            x: x_pu,
            b_sh: 0.0,
            rate,
            tap: 1.0,
            shift: 0.0,
            angmin: -0.5236,
            angmax: 0.5236,
            status: true,
        });

        let hi_node = self.gmd_node_of_bus(hi_bus);
        let lo_node = self.gmd_node_of_bus(lo_bus);
        let mut c = TransformerCoupling {
            ac_branch: id,
            config,
            hi_node: None,
            lo_node: None,
            series_node: None,
            common_node: None,
            tertiary_node: None,
            alpha: hi_kv / lo_kv,
            beta: 1.0,
            k,
            s_base: self.net.base_mva,
            v_base_hi: hi_kv,
            v_base_lo: lo_kv,
            neutral_gmd_bus: Some(ground),
            is_blocker_candidate: false,
        };
        match windings {
            XfmrWindings::HiOnly { r_hi } => {
                c.hi_node = Some(self.winding(hi_node, ground, r_hi));
            }
            XfmrWindings::HiLo { r_hi, r_lo } => {
                c.hi_node = Some(self.winding(hi_node, ground, r_hi));
                c.lo_node = Some(self.winding(lo_node, ground, r_lo));
            }
            XfmrWindings::Auto { r_series, r_common } => {
                c.series_node = Some(self.winding(hi_node, lo_node, r_series));
                c.common_node = Some(self.winding(lo_node, ground, r_common));
            }
            XfmrWindings::ThreeWinding {
                r_hi,
                r_lo,
                tertiary_bus,
                r_tertiary,
                tertiary_kv,
            } => {
                let tert_node = self.gmd_node_of_bus(tertiary_bus);
                c.hi_node = Some(self.winding(hi_node, ground, r_hi));
                c.lo_node = Some(self.winding(lo_node, ground, r_lo));
                c.tertiary_node = Some(self.winding(tert_node, ground, r_tertiary));
                c.beta = hi_kv / tertiary_kv;
            }
        }
        c.is_blocker_candidate = self.net.blockers.iter().any(|b| b.gmd_bus == ground);
        self.net.couplings.push(c);
    }
}

enum XfmrWindings {
    HiOnly {
        r_hi: f64,
    },
    HiLo {
        r_hi: f64,
        r_lo: f64,
    },
    Auto {
        r_series: f64,
        r_common: f64,
    },
    ThreeWinding {
        r_hi: f64,
        r_lo: f64,
        tertiary_bus: BusId,
        r_tertiary: f64,
        tertiary_kv: f64,
    },
}

/// Four-bus, two-substation fixture: generator, step-up transformer, one long
/// east-west line, step-down transformer, load. One blocker candidate at the
/// load-side substation.
pub fn b4gic() -> NetworkModel {
    let sub_a = (40.0, -89.0);
    let sub_b = (40.0, -87.0);
    let mut b = CaseBuilder::new("b4gic");

    b.net.buses.push(bus(1, BusType::Slack, 22.0, sub_a));
    b.net.buses.push(bus(2, BusType::Pq, 345.0, sub_a));
    b.net.buses.push(bus(3, BusType::Pq, 345.0, sub_b));
    b.net.buses.push(bus(4, BusType::Pq, 22.0, sub_b));

    b.net.gens.push(gen(1, 100.0, 250.0, -100.0, 100.0, 1.03));
    b.net.loads.push(load(4, 100.0, 30.0, 1000.0));

    // gmd buses: grounds 1-2, dc bus nodes 3-6.
    for (id, coord) in [(1, sub_a), (2, sub_b)] {
        b.net.gmd_buses.push(GmdBus {
            id,
            kind: GmdBusKind::SubstationGround,
            g_gnd: 2.0,
            parent_ac_bus: None,
            lat: coord.0,
            lon: coord.1,
        });
    }
    for bus_id in 1..=4u32 {
        let coord = b.bus_coord(bus_id);
        b.net.gmd_buses.push(GmdBus {
            id: 2 + bus_id,
            kind: GmdBusKind::BusNode,
            g_gnd: 0.0,
            parent_ac_bus: Some(bus_id),
            lat: coord.0,
            lon: coord.1,
        });
    }

    b.net.blockers.push(BlockerEconomics {
        gmd_bus: 2,
        cost: 1.0,
    });

    b.line(2, 3, 0.032, 0.35, 4.3, 400.0);
    b.transformer(
        2,
        1,
        XfmrConfig::GwyeGwye,
        1,
        0.003,
        0.08,
        250.0,
        1.8,
        XfmrWindings::HiLo {
            r_hi: 0.3,
            r_lo: 0.06,
        },
    );
    b.transformer(
        3,
        4,
        XfmrConfig::GwyeGwye,
        2,
        0.003,
        0.08,
        250.0,
        1.8,
        XfmrWindings::HiLo {
            r_hi: 0.3,
            r_lo: 0.06,
        },
    );

    b.net
}

/// Synthetic 19-bus, 8-substation case with the EPRI21 benchmark statistics:
/// 7 generators, 31 ac branches, 27 gmd buses, 37 gmd branches, 8 blocker
/// candidates.
pub fn epri21() -> NetworkModel {
    let subs: [(f64, f64); 8] = [
        (41.6, -90.6), // S1
        (41.9, -88.9), // S2
        (41.3, -87.4), // S3
        (40.2, -86.9), // S4
        (39.2, -87.8), // S5
        (39.0, -89.5), // S6
        (39.9, -90.9), // S7
        (40.4, -89.0), // S8
    ];
    let mut b = CaseBuilder::new("epri21");

    // (id, substation, kv, type)
    let bus_table: [(BusId, usize, f64, BusType); 19] = [
        (1, 0, 22.0, BusType::Pv),
        (2, 0, 345.0, BusType::Pq),
        (3, 1, 345.0, BusType::Pq),
        (4, 1, 138.0, BusType::Pv),
        (5, 2, 22.0, BusType::Slack),
        (6, 2, 345.0, BusType::Pq),
        (7, 2, 138.0, BusType::Pq),
        (8, 3, 345.0, BusType::Pq),
        (9, 3, 138.0, BusType::Pv),
        (10, 4, 22.0, BusType::Pv),
        (11, 4, 345.0, BusType::Pq),
        (12, 5, 345.0, BusType::Pq),
        (13, 5, 138.0, BusType::Pq),
        (14, 5, 22.0, BusType::Pv),
        (15, 6, 345.0, BusType::Pq),
        (16, 6, 138.0, BusType::Pq),
        (17, 7, 345.0, BusType::Pv),
        (18, 7, 138.0, BusType::Pq),
        (19, 2, 13.8, BusType::Pq),
    ];
    for &(id, s, kv, bt) in &bus_table {
        b.net.buses.push(bus(id, bt, kv, subs[s]));
    }

    b.net.gens.push(gen(5, 150.0, 280.0, -250.0, 300.0, 1.03));
    b.net.gens.push(gen(1, 120.0, 250.0, -150.0, 180.0, 1.02));
    b.net.gens.push(gen(10, 120.0, 220.0, -150.0, 170.0, 1.02));
    b.net.gens.push(gen(14, 100.0, 200.0, -120.0, 150.0, 1.02));
    b.net.gens.push(gen(17, 60.0, 150.0, -100.0, 120.0, 1.02));
    b.net.gens.push(gen(4, 25.0, 80.0, -60.0, 80.0, 1.01));
    b.net.gens.push(gen(9, 25.0, 80.0, -60.0, 80.0, 1.01));

    b.net.loads.push(load(4, 70.0, 20.0, 1000.0));
    b.net.loads.push(load(7, 85.0, 25.0, 1400.0));
    b.net.loads.push(load(9, 80.0, 22.0, 900.0));
    b.net.loads.push(load(13, 105.0, 30.0, 1600.0));
    b.net.loads.push(load(16, 95.0, 28.0, 1200.0));
    b.net.loads.push(load(18, 85.0, 24.0, 1000.0));
    b.net.loads.push(load(19, 35.0, 10.0, 2000.0));

    // gmd buses: substation grounds 1-8, dc bus nodes 9-27.
    let ground_g = [0.30, 0.45, 0.22, 0.38, 0.28, 0.50, 0.20, 0.35];
    for (i, &coord) in subs.iter().enumerate() {
        b.net.gmd_buses.push(GmdBus {
            id: (i + 1) as u32,
            kind: GmdBusKind::SubstationGround,
            g_gnd: ground_g[i],
            parent_ac_bus: None,
            lat: coord.0,
            lon: coord.1,
        });
    }
    for &(id, s, _, _) in &bus_table {
        b.net.gmd_buses.push(GmdBus {
            id: 8 + id,
            kind: GmdBusKind::BusNode,
            g_gnd: 0.0,
            parent_ac_bus: Some(id),
            lat: subs[s].0,
            lon: subs[s].1,
        });
    }
    for ground in 1..=8u32 {
        b.net.blockers.push(BlockerEconomics {
            gmd_bus: ground,
            cost: 1.0,
        });
    }

    // 345 kV ring, three chords, 138 kV ring (17 lines).
    for (f, t) in [
        (2, 3),
        (3, 6),
        (6, 8),
        (8, 11),
        (11, 12),
        (12, 15),
        (15, 17),
        (17, 2),
        (3, 12),
        (6, 15),
        (8, 17),
    ] {
        b.line(f, t, 0.032, 0.35, 1.2, 450.0);
    }
    for (f, t) in [(4, 7), (7, 9), (9, 13), (13, 16), (16, 18), (18, 4)] {
        b.line(f, t, 0.12, 0.42, 0.6, 160.0);
    }

    // Generator step-up units (gwye-delta, high side grounded).
    for (hi, lo, ground) in [(2, 1, 1), (6, 5, 3), (11, 10, 5), (12, 14, 6)] {
        b.transformer(
            hi,
            lo,
            XfmrConfig::GwyeDelta,
            ground,
            0.003,
            0.08,
            300.0,
            1.7,
            XfmrWindings::HiOnly { r_hi: 0.6 },
        );
    }
    // 345/138 gwye-gwye ties.
    for (hi, lo, ground) in [(3, 4, 2), (8, 9, 4), (12, 13, 6)] {
        b.transformer(
            hi,
            lo,
            XfmrConfig::GwyeGwye,
            ground,
            0.004,
            0.10,
            220.0,
            1.4,
            XfmrWindings::HiLo {
                r_hi: 0.4,
                r_lo: 0.15,
            },
        );
    }
    // Autotransformer at S7.
    b.transformer(
        15,
        16,
        XfmrConfig::Auto,
        7,
        0.003,
        0.06,
        220.0,
        1.0,
        XfmrWindings::Auto {
            r_series: 0.3,
            r_common: 0.1,
        },
    );
    // Three-winding unit at S3 with a grounded 13.8 kV tertiary.
    b.transformer(
        6,
        7,
        XfmrConfig::ThreeWinding,
        3,
        0.004,
        0.10,
        220.0,
        1.85,
        XfmrWindings::ThreeWinding {
            r_hi: 0.5,
            r_lo: 0.18,
            tertiary_bus: 19,
            r_tertiary: 0.5,
            tertiary_kv: 13.8,
        },
    );
    // 138/13.8 feed for the tertiary bus and the remaining gwye-delta banks.
    b.transformer(
        7,
        19,
        XfmrConfig::GwyeDelta,
        3,
        0.006,
        0.12,
        80.0,
        1.4,
        XfmrWindings::HiOnly { r_hi: 0.8 },
    );
    b.transformer(
        17,
        18,
        XfmrConfig::GwyeDelta,
        8,
        0.004,
        0.10,
        220.0,
        1.4,
        XfmrWindings::HiOnly { r_hi: 0.4 },
    );
    for (hi, lo, ground) in [(8, 9, 4), (17, 18, 8), (12, 13, 6)] {
        b.transformer(
            hi,
            lo,
            XfmrConfig::GwyeDelta,
            ground,
            0.004,
            0.10,
            220.0,
            1.4,
            XfmrWindings::HiOnly { r_hi: 0.4 },
        );
    }

    b.net
}

/// Synthetic 150-bus, 98-substation case with the UIUC150 benchmark
/// statistics: 27 generators, 218 ac branches, 248 gmd buses, 250 gmd
/// branches, 98 blocker candidates. Deterministically generated.
pub fn uiuc150() -> NetworkModel {
    let mut rng = ChaCha8Rng::seed_from_u64(150);
    let mut b = CaseBuilder::new("uiuc150");

    // 98 substations on a jittered 10x10 grid (two cells dropped); the first
    // 52 are "major" (345+138 buses, tie transformer), the rest minor (138).
    let mut coords: Vec<(f64, f64)> = Vec::with_capacity(98);
    'grid: for row in 0..10 {
        for col in 0..10 {
            if (row == 9 && col == 9) || (row == 0 && col == 9) {
                continue;
            }
            let lat = 37.2 + row as f64 * 0.52 + rng.gen_range(-0.12..0.12);
            let lon = -93.8 + col as f64 * 0.72 + rng.gen_range(-0.15..0.15);
            coords.push((lat, lon));
            if coords.len() == 98 {
                break 'grid;
            }
        }
    }
    // Interleave majors across the map: every sub at an even index in a
    // centroid-angle ordering is major until 52 are chosen.
    let centroid = (
        coords.iter().map(|c| c.0).sum::<f64>() / 98.0,
        coords.iter().map(|c| c.1).sum::<f64>() / 98.0,
    );
    let mut by_angle: Vec<usize> = (0..98).collect();
    by_angle.sort_by(|&i, &j| {
        let ai = (coords[i].0 - centroid.0).atan2(coords[i].1 - centroid.1);
        let aj = (coords[j].0 - centroid.0).atan2(coords[j].1 - centroid.1);
        ai.partial_cmp(&aj).unwrap()
    });
    let mut is_major = vec![false; 98];
    let mut picked = 0;
    for (pos, &s) in by_angle.iter().enumerate() {
        if pos % 2 == 0 && picked < 52 {
            is_major[s] = true;
            picked += 1;
        }
    }
    for (pos, &s) in by_angle.iter().enumerate() {
        if picked == 52 {
            break;
        }
        if pos % 2 == 1 && !is_major[s] {
            is_major[s] = true;
            picked += 1;
        }
    }

    // Buses: majors get a 345 and a 138 bus, minors a single 138 bus.
    let mut hv_bus = vec![0u32; 98]; // 345 bus id per major, 0 otherwise
    let mut lv_bus = vec![0u32; 98]; // 138 bus id per sub
    let mut next = 1u32;
    for s in 0..98 {
        if is_major[s] {
            hv_bus[s] = next;
            b.net.buses.push(bus(next, BusType::Pq, 345.0, coords[s]));
            next += 1;
        }
        lv_bus[s] = next;
        b.net.buses.push(bus(next, BusType::Pq, 138.0, coords[s]));
        next += 1;
    }
    assert_eq!(b.net.buses.len(), 150);

    // gmd buses: grounds 1..98, then one dc node per ac bus.
    for (s, &coord) in coords.iter().enumerate() {
        b.net.gmd_buses.push(GmdBus {
            id: (s + 1) as u32,
            kind: GmdBusKind::SubstationGround,
            g_gnd: rng.gen_range(0.18..0.55),
            parent_ac_bus: None,
            lat: coord.0,
            lon: coord.1,
        });
        b.net.blockers.push(BlockerEconomics {
            gmd_bus: (s + 1) as u32,
            cost: 1.0,
        });
    }
    for bus_ref in b.net.buses.clone() {
        b.net.gmd_buses.push(GmdBus {
            id: 98 + bus_ref.id,
            kind: GmdBusKind::BusNode,
            g_gnd: 0.0,
            parent_ac_bus: Some(bus_ref.id),
            lat: bus_ref.lat,
            lon: bus_ref.lon,
        });
    }

    // 345 kV backbone: ring over the majors in centroid-angle order plus ten
    // chords (62 lines).
    let majors: Vec<usize> = by_angle.iter().copied().filter(|&s| is_major[s]).collect();
    for i in 0..52 {
        let f = hv_bus[majors[i]];
        let t = hv_bus[majors[(i + 1) % 52]];
        b.line(f, t, 0.032, 0.35, 1.2, 500.0);
    }
    for i in 0..10 {
        let f = hv_bus[majors[i * 5]];
        let t = hv_bus[majors[(i * 5 + 13) % 52]];
        b.line(f, t, 0.032, 0.35, 1.2, 500.0);
    }

    // 138 kV network: nearest-neighbour spanning tree over all 98 low-voltage
    // buses plus seven loop closures (104 lines).
    let mut in_tree = vec![false; 98];
    in_tree[0] = true;
    let dist = |i: usize, j: usize| geo_displacement(coords[i], coords[j]).2;
    for _ in 1..98 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in 0..98 {
            if !in_tree[i] {
                continue;
            }
            for j in 0..98 {
                if in_tree[j] {
                    continue;
                }
                let d = dist(i, j);
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        in_tree[best.1] = true;
        b.line(lv_bus[best.0], lv_bus[best.1], 0.12, 0.34, 0.6, 170.0);
    }
    for i in 0..7 {
        let f = by_angle[i * 14];
        let t = by_angle[i * 14 + 7];
        b.line(lv_bus[f], lv_bus[t], 0.12, 0.34, 0.6, 170.0);
    }
    assert_eq!(b.net.branches.len(), 166);

    // Tie transformers at every major: 28 gwye-gwye, 20 gwye-delta, 4 auto.
    let mut gg_left = 28;
    for (i, &s) in majors.iter().enumerate() {
        let ground = (s + 1) as u32;
        if i % 13 == 6 {
            b.transformer(
                hv_bus[s],
                lv_bus[s],
                XfmrConfig::Auto,
                ground,
                0.003,
                0.06,
                260.0,
                0.95,
                XfmrWindings::Auto {
                    r_series: 0.3,
                    r_common: 0.1,
                },
            );
        } else if gg_left > 0 {
            gg_left -= 1;
            b.transformer(
                hv_bus[s],
                lv_bus[s],
                XfmrConfig::GwyeGwye,
                ground,
                0.004,
                0.10,
                260.0,
                1.30,
                XfmrWindings::HiLo {
                    r_hi: 0.4,
                    r_lo: 0.15,
                },
            );
        } else {
            b.transformer(
                hv_bus[s],
                lv_bus[s],
                XfmrConfig::GwyeDelta,
                ground,
                0.004,
                0.10,
                260.0,
                1.30,
                XfmrWindings::HiOnly { r_hi: 0.4 },
            );
        }
    }
    assert_eq!(b.net.branches.len(), 218);
    assert_eq!(b.net.gmd_branches.len(), 250);

    // Generators on every other major 345 bus; the first is the slack.
    for (k, i) in (0..52).step_by(2).chain(std::iter::once(1)).enumerate() {
        let s = majors[i];
        let bus_id = hv_bus[s];
        let idx = b.net.buses.iter().position(|x| x.id == bus_id).unwrap();
        b.net.buses[idx].bus_type = if k == 0 { BusType::Slack } else { BusType::Pv };
        let pmax = rng.gen_range(120.0..260.0);
        b.net
            .gens
            .push(gen(bus_id, pmax * 0.55, pmax, -pmax * 0.8, pmax * 0.9, 1.02));
    }
    assert_eq!(b.net.gens.len(), 27);

    // Loads on all minor buses and on half of the major 138 buses.
    for s in 0..98 {
        let place = !is_major[s] || s % 2 == 0;
        if !place {
            continue;
        }
        let pd = rng.gen_range(16.0..40.0);
        let qd = pd * rng.gen_range(0.25..0.35);
        let cost = rng.gen_range(800.0..1800.0);
        b.net.loads.push(load(lv_bus[s], pd, qd, cost));
        // distribution-side power-factor compensation
        let idx = b.net.buses.iter().position(|x| x.id == lv_bus[s]).unwrap();
        b.net.buses[idx].bs += 1.0 * qd / b.net.base_mva;
    }

    // Scale generation to cover load plus a margin.
    let total_pd: f64 = b.net.loads.iter().map(|l| l.pd).sum();
    let total_pg: f64 = b.net.gens.iter().map(|g| g.pg).sum();
    let scale = total_pd * 1.0 / total_pg;
    for g in &mut b.net.gens {
        g.pg *= scale;
    }

    b.net
}
