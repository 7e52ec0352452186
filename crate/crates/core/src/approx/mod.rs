//! Inner-approximation bound catalog and the convex constraint sketches built
//! from it at an expansion point.

pub mod bounds;
pub mod builders;
mod expansion;
mod sketch;

pub use bounds::{
    log_majorant, normsq_minorant, quad_over_lin_minorant, quotient_minorant, ratio_majorant, sqrt_prod_majorant, zeta,
    zeta_minorant,
};
pub use builders::{
    dl_minorant_constraint, eve_dl_majorant_constraints, eve_ul_majorant_constraints, power_constraints, scsi_constraints,
    ul_filter_constraint, ul_minorant_constraint, wcs_constraints, wcs_trust, User,
};
pub use expansion::{psd_root, ExpansionPoint, OMEGA_EIG_TOL};
pub use sketch::{ConstraintSketch, Family, FamilyKind};
