//! Linear and Fisher separability of random points in the spherical layer
//! `B_d \ rB_d`: exact samplers, certified separability checks, the closed-form
//! probability bounds and admissible point counts, their asymptotics, and a
//! seeded Monte Carlo runner that sets empirical frequencies against them.

pub mod geometry;
pub mod lp;
pub mod bounds;
pub mod separability;
pub mod asymptotics;
pub mod experiments;
pub mod io_cli;
