pub mod hamiltonian;
pub mod linalg;
pub mod measurement;
pub mod pauli;
pub mod planner;
pub mod protocol;
pub mod reconstruction;
pub mod states;
pub mod verification;
