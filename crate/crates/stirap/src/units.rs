//! Reduced unit conventions.
//!
//! Every formula in the crate carries the reduced Planck constant explicitly
//! as [`HBAR`], fixed to one. Masses, energies (as angular frequencies),
//! times, lengths and momenta are all expressed in one consistent reduced
//! system; the only additional scale is the speed of light, which converts a
//! carrier angular frequency into a wave number.

use serde::{Deserialize, Serialize};

/// Reduced Planck constant. Fixed to one in the reduced unit system.
pub const HBAR: f64 = 1.0;

/// Unit-system parameters that are not fixed by the reduced convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Speed of light [length/time]. `inf` decouples wave numbers from carriers.
    pub speed_of_light: f64,
}

impl UnitSystem {
    /// Creates a unit system with the given speed of light.
    pub fn new(speed_of_light: f64) -> Self {
        Self { speed_of_light }
    }

    /// Wave number `k = ω / c` [1/length] of a carrier angular frequency [1/time].
    pub fn wavenumber(&self, carrier: f64) -> f64 {
        if self.speed_of_light.is_infinite() {
            0.0
        } else {
            carrier / self.speed_of_light
        }
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self {
            speed_of_light: 100.0,
        }
    }
}
