//! Bundled fixture models.

use super::{EnergyGrid, FormFactorSet, GasState, Model, SystemModel};
use crate::linalg::{c, r, zeros, CMat, CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoModel {
    /// Two-level system, 16 bins of multiplicity 2, Gaussian amplitude
    /// profiles and a Gibbs gas.
    TwoLevel,
    /// The two-level fixture with `D = 0`.
    Null,
    /// Multiplicity-1 bins, so every Gram matrix has rank one.
    RankDeficient,
}

impl DemoModel {
    pub const ALL: [DemoModel; 3] = [DemoModel::TwoLevel, DemoModel::Null, DemoModel::RankDeficient];

    pub fn name(self) -> &'static str {
        match self {
            DemoModel::TwoLevel => "two-level",
            DemoModel::Null => "null",
            DemoModel::RankDeficient => "rank-deficient",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

fn gaussian(e: f64, center: f64, sigma: f64) -> f64 {
    (-(e - center).powi(2) / (2.0 * sigma * sigma)).exp()
}

fn demo_coupling() -> CMat {
    CMat::from_row_slice(2, 2, &[r(0.2), r(0.7), c(0.0, 0.4), r(-0.1)])
}

pub fn demo_model(which: DemoModel) -> Model {
    let system = SystemModel::diagonal(
        vec![0.0, 1.0],
        match which {
            DemoModel::Null => zeros(2, 2),
            _ => demo_coupling(),
        },
    )
    .expect("demo system is valid");
    let (grid, form_factors) = match which {
        DemoModel::TwoLevel | DemoModel::Null => {
            let grid = EnergyGrid::uniform(0.0, 4.0, 16, 2).expect("demo grid is valid");
            let ff = FormFactorSet::from_fn(&grid, |_, b| {
                let a0 = 0.5 * gaussian(b.center, 1.5, 0.6);
                let a1 = 0.45 * gaussian(b.center, 2.2, 0.7);
                [
                    CVec::from_vec(vec![r(a0), r(0.25 * a0)]),
                    CVec::from_vec(vec![c(0.0, 0.3 * a1), r(a1)]),
                ]
            })
            .expect("demo form factors are valid");
            (grid, ff)
        }
        DemoModel::RankDeficient => {
            let grid = EnergyGrid::uniform(0.0, 4.0, 16, 1).expect("demo grid is valid");
            let ff = FormFactorSet::from_fn(&grid, |_, b| {
                let a0 = 0.55 * gaussian(b.center, 1.8, 0.7);
                let ratio = C64::from_polar(0.6, 0.4 * b.center);
                [CVec::from_vec(vec![r(a0)]), CVec::from_vec(vec![ratio * a0])]
            })
            .expect("demo form factors are valid");
            (grid, ff)
        }
    };
    let gas = GasState::gibbs(&grid, 1.0, 0.05).expect("demo gas is valid");
    Model { name: which.name().to_string(), system, grid, form_factors, gas }
}
