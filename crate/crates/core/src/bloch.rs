//! Single-qubit states as Bloch vectors, and the two measurement-basis
//! families whose diameters sweep the `xoy` and `xoz` circles.
//!
//! The Bloch vector is the authoritative representation: every quantity the
//! layer protocol consumes reduces to an inner product `r . d` between the
//! state vector `r` and a basis direction `d`. The 2x2 matrix form is
//! derived on demand.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this Bloch norm a state counts as maximally mixed and its
/// eigen-axis is reported as undefined instead of a noise-driven direction.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

/// Slack accepted on |r| <= 1 before an input is rejected as unphysical.
pub const NORM_SLACK: f64 = 1e-12;

#[inline]
fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// A qubit density operator (Hermitian, PSD, unit trace), stored as its
/// Bloch vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOperator {
    bloch: [f64; 3],
}

impl DensityOperator {
    /// Builds `rho = (I + r . sigma) / 2`. Rejects |r| > 1 (+ slack).
    pub fn from_bloch(bloch: [f64; 3]) -> Result<Self> {
        let norm = norm3(bloch);
        if !norm.is_finite() || norm > 1.0 + NORM_SLACK {
            return Err(Error::NotAState { norm });
        }
        Ok(Self { bloch })
    }

    /// I/2, the center of the Bloch ball.
    pub fn maximally_mixed() -> Self {
        Self { bloch: [0.0; 3] }
    }

    /// Accepts a 2x2 matrix after validating Hermiticity, unit trace and
    /// positivity (each to 1e-12).
    pub fn from_matrix(m: [[Complex64; 2]; 2]) -> Result<Self> {
        const TOL: f64 = 1e-12;
        let herm_dev = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if herm_dev > TOL {
            return Err(Error::InvalidMatrix(format!(
                "not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let trace_dev = (m[0][0].re + m[1][1].re - 1.0).abs();
        if trace_dev > TOL {
            return Err(Error::InvalidMatrix(format!(
                "trace differs from 1 by {trace_dev:.3e}"
            )));
        }
        let bloch = [
            2.0 * m[1][0].re,
            2.0 * m[1][0].im,
            m[0][0].re - m[1][1].re,
        ];
        Self::from_bloch(bloch).map_err(|_| {
            Error::InvalidMatrix("not positive semidefinite (|r| > 1)".into())
        })
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let [x, y, z] = self.bloch;
        [
            [c((1.0 + z) / 2.0, 0.0), c(x / 2.0, -y / 2.0)],
            [c(x / 2.0, y / 2.0), c((1.0 - z) / 2.0, 0.0)],
        ]
    }

    /// |r|; 1 for pure states, 0 at the center.
    pub fn bloch_norm(&self) -> f64 {
        norm3(self.bloch)
    }

    /// Spectral decomposition `rho = p |e0><e0| + (1-p) |e1><e1|` with
    /// p >= 1/2 and `e0` on the axis `r / |r|`.
    pub fn eigendecompose(&self) -> Eigendecomposition {
        let r = self.bloch_norm();
        if r < DEGENERACY_THRESHOLD {
            return Eigendecomposition::Degenerate;
        }
        let axis = [self.bloch[0] / r, self.bloch[1] / r, self.bloch[2] / r];
        let (e0, e1) = eigenstates_on_axis(axis);
        Eigendecomposition::Resolved {
            p: (1.0 + r) / 2.0,
            axis,
            e0,
            e1,
        }
    }
}

/// Result of [`DensityOperator::eigendecompose`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Eigendecomposition {
    /// rho = I/2: every direction is an eigen-axis, none is reported.
    Degenerate,
    Resolved {
        /// Larger eigenvalue, p = (1 + |r|) / 2.
        p: f64,
        /// Unit vector r / |r|.
        axis: [f64; 3],
        e0: [Complex64; 2],
        e1: [Complex64; 2],
    },
}

/// The antipodal pair of pure states on a unit Bloch axis.
pub fn eigenstates_on_axis(axis: [f64; 3]) -> ([Complex64; 2], [Complex64; 2]) {
    let polar = axis[2].clamp(-1.0, 1.0).acos();
    let azimuth = axis[1].atan2(axis[0]);
    let (s, co) = ((polar / 2.0).sin(), (polar / 2.0).cos());
    let phase = Complex64::from_polar(1.0, azimuth);
    ([c(co, 0.0), phase * s], [c(s, 0.0), -(phase * co)])
}

/// Bloch vector of a pure state (a0, a1).
pub fn bloch_of_pure(amps: [Complex64; 2]) -> [f64; 3] {
    let cross = amps[0].conj() * amps[1];
    [
        2.0 * cross.re,
        2.0 * cross.im,
        amps[0].norm_sqr() - amps[1].norm_sqr(),
    ]
}

/// Which circle of the Bloch sphere the basis diameter lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisFamily {
    /// Diameter of the circle `xoy`; sweeping it rotates the layer about z.
    Phi,
    /// Diameter of the circle `xoz`; sweeping it rotates the layer about y.
    Theta,
}

/// An orthonormal qubit basis from one of the two sweep families.
///
/// Global phases are fixed exactly by the defining formulas (including the
/// -|1> sign of the theta family at angle 0) so that operators built from
/// the amplitudes are reproducible bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasBasis {
    family: BasisFamily,
    angle: f64,
    e0: [Complex64; 2],
    e1: [Complex64; 2],
}

impl MeasBasis {
    /// Basis at `angle`, normalized into [0, pi): antipodal angles span the
    /// same diameter, so they measure the same layer.
    pub fn new(family: BasisFamily, angle: f64) -> Self {
        let a = normalize_angle(angle);
        let (e0, e1) = match family {
            BasisFamily::Phi => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let ph = Complex64::from_polar(s, a);
                ([c(s, 0.0), ph], [c(s, 0.0), -ph])
            }
            BasisFamily::Theta => {
                let (sh, ch) = ((a / 2.0).sin(), (a / 2.0).cos());
                ([c(ch, 0.0), c(sh, 0.0)], [c(sh, 0.0), c(-ch, 0.0)])
            }
        };
        Self {
            family,
            angle: a,
            e0,
            e1,
        }
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn e0(&self) -> [Complex64; 2] {
        self.e0
    }

    pub fn e1(&self) -> [Complex64; 2] {
        self.e1
    }

    /// Bloch direction of `e0`: the diameter this basis measures along.
    /// Phi family: (cos a, sin a, 0); theta family: (sin a, 0, cos a).
    pub fn direction(&self) -> [f64; 3] {
        match self.family {
            BasisFamily::Phi => [self.angle.cos(), self.angle.sin(), 0.0],
            BasisFamily::Theta => [self.angle.sin(), 0.0, self.angle.cos()],
        }
    }

    /// Diagonal weights of the projection of `rho` onto this basis:
    /// `q0 = <e0|rho|e0> = (1 + r . d) / 2`.
    pub fn project(&self, rho: &DensityOperator) -> ProjectedDistribution {
        let q0 = (1.0 + dot3(rho.bloch(), self.direction())) / 2.0;
        ProjectedDistribution::new(q0.clamp(0.0, 1.0)).expect("q0 in range by construction")
    }

    /// Trace-norm distance of the projected state from I/2,
    /// `2 |q0 - 1/2| = |r . d|`. This is the quantity compared against the
    /// layer thickness.
    pub fn layer_distance(&self, rho: &DensityOperator) -> f64 {
        dot3(rho.bloch(), self.direction()).abs()
    }

    /// Unitary with columns (e0, e1): maps the computational basis onto
    /// this one.
    pub fn unitary(&self) -> [[Complex64; 2]; 2] {
        [[self.e0[0], self.e1[0]], [self.e0[1], self.e1[1]]]
    }
}

fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(std::f64::consts::PI);
    if r >= std::f64::consts::PI {
        0.0
    } else {
        r
    }
}

/// The binary distribution (q0, q1) induced by projecting a state onto a
/// measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectedDistribution {
    q0: f64,
    q1: f64,
}

impl ProjectedDistribution {
    pub fn new(q0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q0) {
            return Err(Error::InvalidParameter(format!(
                "q0 = {q0} outside [0, 1]"
            )));
        }
        Ok(Self { q0, q1: 1.0 - q0 })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }
}
