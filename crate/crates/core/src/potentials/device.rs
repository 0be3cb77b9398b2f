use super::gates::{basis_by_binding, compose_potential, BasisPotential, Grid2, PotentialField};
use super::layout::DeviceLayout;
use super::waveform::{shuttle_voltages, WaveformProgram};
use crate::Result;

/// A layout with its basis potentials precomputed on one grid.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    pub layout: DeviceLayout,
    pub basis: Vec<BasisPotential>,
}

impl DeviceModel {
    pub fn new(layout: DeviceLayout, grid: &Grid2) -> Result<Self> {
        layout.validate()?;
        let basis = basis_by_binding(&layout.gates, grid)?;
        Ok(Self { layout, basis })
    }

    pub fn grid(&self) -> Grid2 {
        self.basis[0].grid
    }

    /// Potential energy landscape at time `t` of `program`.
    pub fn field_at(&self, program: &WaveformProgram, t: f64) -> Result<PotentialField> {
        let v = shuttle_voltages(program, t)?;
        let mut f = compose_potential(&self.basis, &v)?;
        f.time = t;
        Ok(f)
    }

    pub fn frames(&self, program: &WaveformProgram, n: usize) -> Result<Vec<PotentialField>> {
        program.frame_times(n).into_iter().map(|t| self.field_at(program, t)).collect()
    }
}
