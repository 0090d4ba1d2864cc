//! Pure-state quantum simulation: amplitude vectors, seeded randomness and a
//! component-factored register manager.

mod rng;
mod state;
mod system;

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use thiserror::Error;

pub use rng::RngStream;
pub use state::{fidelity, purify_rank_one, StateVector};
pub use system::{QuantumSystem, QubitId, RegisterSnapshot};

/// Largest register a single amplitude vector may hold.
pub const QUBIT_CAP: usize = 24;

/// Numerical tolerance for norms, fidelities and matrix entries.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("register of {requested} qubits exceeds cap {cap}")]
    CapExceeded { requested: usize, cap: usize },
    #[error("qubit {qubit} out of range for {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("two-qubit operation needs distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("bad register initializer: {0}")]
    BadInit(String),
    #[error("amplitude table of length {0} is not a power of two")]
    BadLength(usize),
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("qubit {0} is not in a computational basis state")]
    NotClassical(usize),
    #[error("unknown qubit handle {0:?}")]
    UnknownQubit(QubitId),
    #[error("requested qubits are entangled with qubits outside the request")]
    Entangled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn symbol(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasOutcome {
    pub bit: bool,
    pub basis: Basis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    X,
    Y,
    Z,
    H,
    /// Phase gate `diag(1, i)`.
    P,
    /// `diag(1, e^{i pi/4})`.
    T,
}

impl Gate {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            Gate::X => [[o, l], [l, o]],
            Gate::Y => [[o, -i], [i, o]],
            Gate::Z => [[l, o], [o, -l]],
            Gate::H => [[h, h], [h, -h]],
            Gate::P => [[l, o], [o, i]],
            Gate::T => [[l, o], [o, Complex64::from_polar(1.0, FRAC_PI_4)]],
        }
    }
}
