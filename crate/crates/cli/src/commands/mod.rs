pub mod correlators;
pub mod evolve;
pub mod fock;
pub mod model;
pub mod smatrix;
pub mod trajectories;
pub mod verify;
