//! Search for and certification of Weyl-Heisenberg covariant SIC-POVM
//! fiducials carrying the anti-unitary Fibonacci symmetry, together with the
//! number theory behind the Lucas dimension sequence `d_k = L_{2k} + 1`.

pub mod cli;
pub mod fibonacci;
pub mod io;
pub mod modmat;
pub mod search;
pub mod verify;
pub mod weyl;
