pub mod analysis;
pub mod equations;
pub mod error;
pub mod hamiltonian;
pub mod integrators;
pub mod io;
pub mod nit;
pub mod noise;
pub mod runner;
pub mod spectral;
pub mod trajectory;
