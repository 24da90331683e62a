use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{kron, Mat2, Mat4};

/// Pauli eigenbasis used for a projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliBasis {
    Z,
    X,
    Y,
}

impl PauliBasis {
    pub const ORDER: [PauliBasis; 3] = [PauliBasis::Z, PauliBasis::X, PauliBasis::Y];

    /// Pauli index `1..=3` of the basis axis.
    pub fn pauli_index(self) -> usize {
        match self {
            PauliBasis::X => 1,
            PauliBasis::Y => 2,
            PauliBasis::Z => 3,
        }
    }
}

/// Which eigenvector of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Eigen {
    Plus,
    Minus,
}

impl Eigen {
    pub fn sign(self) -> f64 {
        match self {
            Eigen::Plus => 1.0,
            Eigen::Minus => -1.0,
        }
    }
}

impl fmt::Display for PauliBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl fmt::Display for Eigen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Eigen::Plus => "+",
            Eigen::Minus => "-",
        })
    }
}

impl FromStr for PauliBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Z" | "z" => Ok(PauliBasis::Z),
            "X" | "x" => Ok(PauliBasis::X),
            "Y" | "y" => Ok(PauliBasis::Y),
            other => Err(Error::Record(format!("unknown basis `{other}`"))),
        }
    }
}

impl FromStr for Eigen {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" => Ok(Eigen::Plus),
            "-" => Ok(Eigen::Minus),
            other => Err(Error::Record(format!("unknown eigenvector `{other}`"))),
        }
    }
}

/// One of the six mutually-unbiased qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QubitProjector {
    pub basis: PauliBasis,
    pub eigen: Eigen,
}

impl QubitProjector {
    pub fn new(basis: PauliBasis, eigen: Eigen) -> Self {
        QubitProjector { basis, eigen }
    }

    pub fn ket(&self) -> Vector2<Complex64> {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let sign = self.eigen.sign();
        match self.basis {
            PauliBasis::Z => match self.eigen {
                Eigen::Plus => Vector2::new(one, zero),
                Eigen::Minus => Vector2::new(zero, one),
            },
            PauliBasis::X => Vector2::new(s, s * sign),
            PauliBasis::Y => Vector2::new(s, Complex64::new(0.0, FRAC_1_SQRT_2 * sign)),
        }
    }

    pub fn projector(&self) -> Mat2 {
        let k = self.ket();
        k * k.adjoint()
    }

    /// `Tr(Π σ_μ)` for `μ` in `0..=3`.
    pub(crate) fn pauli_trace(&self, mu: usize) -> f64 {
        if mu == 0 {
            1.0
        } else if mu == self.basis.pauli_index() {
            self.eigen.sign()
        } else {
            0.0
        }
    }
}

impl fmt::Display for QubitProjector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.basis, self.eigen)
    }
}

/// Product projection `Π_A ⊗ Π_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeasurementSetting {
    /// On photon A's two-mode OAM subspace (`z+` is `|l1>`).
    pub a: QubitProjector,
    /// On photon B's polarization (`z+` is `P1`).
    pub b: QubitProjector,
}

impl MeasurementSetting {
    pub fn projector(&self) -> Mat4 {
        kron(&self.a.projector(), &self.b.projector())
    }

    /// Index `0..9` of the (basis A, basis B) pair.
    pub fn basis_pair(&self) -> usize {
        let pos = |b| {
            PauliBasis::ORDER
                .iter()
                .position(|&x| x == b)
                .expect("listed")
        };
        3 * pos(self.a.basis) + pos(self.b.basis)
    }
}

/// The six states per side: `z+, z-, x+, x-, y+, y-`.
pub fn mub_states() -> [QubitProjector; 6] {
    let mut out = [QubitProjector::new(PauliBasis::Z, Eigen::Plus); 6];
    for (i, basis) in PauliBasis::ORDER.into_iter().enumerate() {
        out[2 * i] = QubitProjector::new(basis, Eigen::Plus);
        out[2 * i + 1] = QubitProjector::new(basis, Eigen::Minus);
    }
    out
}

/// All 36 product settings, photon A's state varying slowest.
pub fn settings_36() -> Vec<MeasurementSetting> {
    let states = mub_states();
    states
        .iter()
        .flat_map(|&a| states.iter().map(move |&b| MeasurementSetting { a, b }))
        .collect()
}
