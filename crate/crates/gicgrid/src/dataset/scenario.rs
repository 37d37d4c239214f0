//! GMD scenario definition and synthetic scenario generation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gic::EField;
use crate::model::NetworkModel;

pub const SCALE_LO: f64 = 0.8;
pub const SCALE_HI: f64 = 1.2;

/// One storm instance: a uniform E-field plus per-load demand perturbations.
/// Together with a network this fully determines a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmdScenario {
    pub id: u32,
    pub field: EField,
    /// Active-demand scale per load, aligned with the model's load list.
    pub scale_p: Vec<f64>,
    /// Reactive-demand scale per load.
    pub scale_q: Vec<f64>,
    pub seed: u64,
}

impl GmdScenario {
    /// All scales at 1.0.
    pub fn nominal(net: &NetworkModel, field: EField) -> Self {
        GmdScenario {
            id: 0,
            field,
            scale_p: vec![1.0; net.loads.len()],
            scale_q: vec![1.0; net.loads.len()],
            seed: 0,
        }
    }

    /// Scaled (pd, qd) per load in MW/Mvar, model load order.
    pub fn scaled_loads(&self, net: &NetworkModel) -> (Vec<f64>, Vec<f64>) {
        let pd = net
            .loads
            .iter()
            .zip(&self.scale_p)
            .map(|(l, s)| l.pd * s)
            .collect();
        let qd = net
            .loads
            .iter()
            .zip(&self.scale_q)
            .map(|(l, s)| l.qd * s)
            .collect();
        (pd, qd)
    }
}

/// Draw `samples_per_cell` scenarios for every (direction, magnitude) cell.
/// Each load gets one uniform scale in [0.8, 1.2] shared between pd and qd
/// unless `independent_pq` splits them.
pub fn generate(
    net: &NetworkModel,
    directions: &[f64],
    magnitudes: &[f64],
    samples_per_cell: usize,
    seed: u64,
    independent_pq: bool,
) -> Vec<GmdScenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(directions.len() * magnitudes.len() * samples_per_cell);
    let mut id = 0u32;
    for &dir in directions {
        for &mag in magnitudes {
            for _ in 0..samples_per_cell {
                let scale_p: Vec<f64> = (0..net.loads.len())
                    .map(|_| rng.gen_range(SCALE_LO..SCALE_HI))
                    .collect();
                let scale_q = if independent_pq {
                    (0..net.loads.len())
                        .map(|_| rng.gen_range(SCALE_LO..SCALE_HI))
                        .collect()
                } else {
                    scale_p.clone()
                };
                out.push(GmdScenario {
                    id,
                    field: EField::new(mag, dir),
                    scale_p,
                    scale_q,
                    seed: seed.wrapping_add(id as u64),
                });
                id += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;

    #[test]
    fn generates_the_full_grid() {
        let net = model::b4gic();
        let s = generate(&net, &[45.0, 135.0], &[5.0, 10.0, 15.0, 20.0], 50, 1, false);
        assert_eq!(s.len(), 400);
        assert!(s
            .iter()
            .all(|sc| sc.scale_p.iter().all(|&v| (SCALE_LO..SCALE_HI).contains(&v))));
        assert_eq!(s[0].field, EField::new(5.0, 45.0));
    }

    #[test]
    fn single_cell_exact_field() {
        let net = model::b4gic();
        let s = generate(&net, &[90.0], &[7.5], 1, 3, false);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].field, EField::new(7.5, 90.0));
    }

    #[test]
    fn seeded_and_deterministic() {
        let net = model::b4gic();
        let a = generate(&net, &[45.0], &[10.0], 5, 42, false);
        let b = generate(&net, &[45.0], &[10.0], 5, 42, false);
        assert_eq!(a, b);
        let c = generate(&net, &[45.0], &[10.0], 5, 43, false);
        assert_ne!(a, c);
    }
}
