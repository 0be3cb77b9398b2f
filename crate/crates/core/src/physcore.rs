//! Physical constants, unit conversions and deterministic random streams.
//!
//! Every quantity in this crate lives in one fixed unit system: energies in
//! μeV, times in ns, lengths in nm and magnetic fields in mT.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Bohr magneton in μeV/T (CODATA).
pub const BOHR_MAGNETON_UEV_PER_T: f64 = 57.883_818_060;
/// Reduced Planck constant in μeV·ns.
pub const HBAR_UEV_NS: f64 = 0.658_211_956_9;
/// Planck constant in μeV·ns.
pub const PLANCK_UEV_NS: f64 = 2.0 * std::f64::consts::PI * HBAR_UEV_NS;
/// ħ²/(2 m_e) in μeV·nm².
pub const HBAR2_OVER_2ME_UEV_NM2: f64 = 38_099.821_6;
/// e²/(4π ε₀) in μeV·nm.
pub const COULOMB_UEV_NM: f64 = 1.439_964_548e6;
/// Electron mass is the unit of effective mass; this converts a voltage in mV
/// acting on charge −e into a potential energy in μeV.
pub const UEV_PER_MV: f64 = 1000.0;

/// The fixed μeV / ns / nm / mT unit system with a configurable g-factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub g_factor: f64,
    pub bohr_magneton: f64,
    pub hbar: f64,
    pub h: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::with_g_factor(2.0)
    }
}

impl UnitSystem {
    pub fn with_g_factor(g_factor: f64) -> Self {
        assert!(g_factor > 0.0, "g-factor must be positive");
        Self { g_factor, bohr_magneton: BOHR_MAGNETON_UEV_PER_T, hbar: HBAR_UEV_NS, h: PLANCK_UEV_NS }
    }

    /// Zeeman energy g·μ_B·B in μeV for a field in mT.
    pub fn field_to_energy(&self, field_mt: f64) -> f64 {
        self.g_factor * self.bohr_magneton * field_mt * 1e-3
    }

    pub fn energy_to_field(&self, energy_uev: f64) -> f64 {
        energy_uev / (self.g_factor * self.bohr_magneton * 1e-3)
    }

    /// Energy in μeV to an ordinary frequency in GHz.
    pub fn energy_to_frequency(&self, energy_uev: f64) -> f64 {
        energy_uev / self.h
    }

    pub fn frequency_to_energy(&self, frequency_ghz: f64) -> f64 {
        frequency_ghz * self.h
    }
}

/// Convert an amplitude spectral density quoted per √Hz into a one-sided PSD
/// in units²/GHz (the internal convention, time in ns).
///
/// `asd_per_sqrt_hz` is in the same parameter unit as the output squared, e.g.
/// μeV/√Hz gives μeV²/GHz.
pub fn psd_from_asd_per_sqrt_hz(asd_per_sqrt_hz: f64) -> f64 {
    // 1/Hz = 1 s = 1e9 ns = 1e9 / GHz
    asd_per_sqrt_hz * asd_per_sqrt_hz * 1e9
}

/// Parent seed plus a stream selector. Identical pairs replay identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, stream_id: 0 }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// SplitMix64 finalizer. A bijection on u64.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child stream for one shot. Injective in `shot_index` for a fixed parent.
pub fn derive_stream(seed: SeedSpec, shot_index: u64) -> SeedSpec {
    let base = mix64(seed.stream_id ^ 0x5851_f42d_4c95_7f2d);
    SeedSpec { master_seed: seed.master_seed, stream_id: mix64(base.wrapping_add(shot_index)) }
}

/// Neumaier-compensated sum; used wherever Monte Carlo results are aggregated.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
