//! Modal identification, forced-response prediction and energy analysis.

mod backbone;
mod circle_fit;
mod energy;
mod frc;
mod power_balance;

pub use backbone::{backbone_from_prt, Backbone, BackbonePoint, Direction};
pub use circle_fit::{circle_fit, fit_circle, Circle, CircleFit, NyquistPoint, NyquistSet};
pub use energy::{energy_decomposition, EnergyTable};
pub use frc::{
    frc_bounds, predict_frc, resonance_points, Branch, Containment, Frc, FrcBounds, FrcPoint,
};
pub use power_balance::{power_balance_damping, NOISE_FLOOR};
