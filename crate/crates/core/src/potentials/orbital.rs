use super::gates::PotentialField;
use crate::eigen::{lowest_eigenpairs, LanczosOptions, SymmetricOperator};
use crate::physcore::HBAR2_OVER_2ME_UEV_NM2;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalOptions {
    /// Effective mass in units of m_e.
    pub effective_mass: f64,
    /// Side length of the square solver window (nm).
    pub window: f64,
    /// Solver grid spacing (nm).
    pub spacing: f64,
}

impl Default for OrbitalOptions {
    fn default() -> Self {
        Self { effective_mass: 0.19, window: 200.0, spacing: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalSplitting {
    pub e0: f64,
    pub e1: f64,
    /// E1 − E0 (μeV).
    pub splitting: f64,
    /// Smallest per-axis ħω from the Hessian at the minimum (μeV).
    pub harmonic: f64,
    /// The window boundary dips below E1: the states are not bound by the window.
    pub unbound_warning: bool,
}

struct WindowHamiltonian {
    n: usize,
    kinetic: f64,
    potential: Vec<f64>,
}

impl SymmetricOperator for WindowHamiltonian {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let c = self.kinetic;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                let mut acc = (4.0 * c + self.potential[k]) * x[k];
                if i > 0 {
                    acc -= c * x[k - 1];
                }
                if i + 1 < n {
                    acc -= c * x[k + 1];
                }
                if j > 0 {
                    acc -= c * x[k - n];
                }
                if j + 1 < n {
                    acc -= c * x[k + n];
                }
                y[k] = acc;
            }
        }
    }
}

/// Per-axis harmonic energies ħω from the Hessian of V at `minimum`, smallest first.
pub fn harmonic_estimate(field: &PotentialField, minimum: (f64, f64), effective_mass: f64) -> Result<[f64; 2]> {
    let h = field.grid.spacing;
    let (x, y) = minimum;
    let s = |dx: f64, dy: f64| {
        field.sample(x + dx, y + dy).ok_or_else(|| Error::OutOfDomain("Hessian stencil leaves the grid".into()))
    };
    let v0 = s(0.0, 0.0)?;
    let vxx = (s(h, 0.0)? - 2.0 * v0 + s(-h, 0.0)?) / (h * h);
    let vyy = (s(0.0, h)? - 2.0 * v0 + s(0.0, -h)?) / (h * h);
    let vxy = (s(h, h)? - s(h, -h)? - s(-h, h)? + s(-h, -h)?) / (4.0 * h * h);
    let tr = vxx + vyy;
    let disc = ((vxx - vyy).powi(2) / 4.0 + vxy * vxy).sqrt();
    let curvatures = [tr / 2.0 - disc, tr / 2.0 + disc];
    let to_energy = |k: f64| (k.max(0.0) * 2.0 * HBAR2_OVER_2ME_UEV_NM2 / effective_mass).sqrt();
    Ok([to_energy(curvatures[0]), to_energy(curvatures[1])])
}

/// Lowest two single-particle levels on a Dirichlet window around `minimum`.
pub fn orbital_splitting(
    field: &PotentialField,
    minimum: (f64, f64),
    opts: &OrbitalOptions,
) -> Result<OrbitalSplitting> {
    if !(opts.effective_mass > 0.0 && opts.spacing > 0.0 && opts.window > 2.0 * opts.spacing) {
        return Err(Error::InvalidParameter("orbital solver options".into()));
    }
    let n = (opts.window / opts.spacing).round() as usize - 1;
    let half = 0.5 * opts.window;
    let x0 = minimum.0 - half + opts.spacing;
    let y0 = minimum.1 - half + opts.spacing;
    let g = &field.grid;
    let clamp_sample = |x: f64, y: f64| {
        let xc = x.clamp(g.x0, g.x_max());
        let yc = y.clamp(g.y0, g.y_max());
        field.sample(xc, yc).expect("clamped point is inside the grid")
    };
    let mut potential = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            potential.push(clamp_sample(x0 + i as f64 * opts.spacing, y0 + j as f64 * opts.spacing));
        }
    }
    let op = WindowHamiltonian {
        n,
        kinetic: HBAR2_OVER_2ME_UEV_NM2 / (opts.effective_mass * opts.spacing * opts.spacing),
        potential,
    };
    let res = lowest_eigenpairs(&op, 2, &LanczosOptions::default(), None)?;
    let (e0, e1) = (res.values[0], res.values[1]);

    let mut boundary_min = f64::INFINITY;
    for k in 0..n {
        for (i, j) in [(k, 0), (k, n - 1), (0, k), (n - 1, k)] {
            boundary_min = boundary_min.min(op.potential[j * n + i]);
        }
    }
    let harmonic = harmonic_estimate(field, minimum, opts.effective_mass)?[0];
    Ok(OrbitalSplitting { e0, e1, splitting: e1 - e0, harmonic, unbound_warning: boundary_min < e1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Grid2;

    fn quadratic(hw_x: f64, hw_y: f64, mass: f64, cubic: f64) -> PotentialField {
        let grid = Grid2::covering(-150.0, 150.0, -150.0, 150.0, 1.0);
        let kx = hw_x * hw_x * mass / (2.0 * HBAR2_OVER_2ME_UEV_NM2);
        let ky = hw_y * hw_y * mass / (2.0 * HBAR2_OVER_2ME_UEV_NM2);
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (grid.x(i), grid.y(j));
                values.push(0.5 * kx * x * x + 0.5 * ky * y * y + cubic * x * x * x);
            }
        }
        PotentialField { grid, values, time: 0.0 }
    }

    #[test]
    fn isotropic_harmonic_well() {
        let f = quadratic(1000.0, 1000.0, 0.19, 0.0);
        let r = orbital_splitting(&f, (0.0, 0.0), &OrbitalOptions::default()).unwrap();
        assert!((r.splitting - 1000.0).abs() < 10.0, "{}", r.splitting);
        assert!((r.harmonic - 1000.0).abs() < 10.0, "{}", r.harmonic);
        assert!(!r.unbound_warning);
    }

    #[test]
    fn separable_anisotropic_well() {
        let f = quadratic(1500.0, 800.0, 0.19, 0.0);
        let r = orbital_splitting(&f, (0.0, 0.0), &OrbitalOptions::default()).unwrap();
        assert!((r.splitting - 800.0).abs() / 800.0 < 0.01, "{}", r.splitting);
        assert!((r.e0 - 0.5 * (1500.0 + 800.0)).abs() / 1150.0 < 0.01);
    }

    #[test]
    fn harmonic_estimate_tracks_weak_anharmonicity() {
        // cubic term well below 10% of the quadratic one across the ground-state extent
        let f = quadratic(1000.0, 1200.0, 0.19, 0.002);
        let r = orbital_splitting(&f, (0.0, 0.0), &OrbitalOptions::default()).unwrap();
        assert!((r.harmonic - r.splitting).abs() / r.splitting < 0.15);
    }

    #[test]
    fn shallow_window_is_flagged() {
        let f = quadratic(1000.0, 1000.0, 0.19, 0.0);
        let opts = OrbitalOptions { window: 40.0, ..Default::default() };
        let r = orbital_splitting(&f, (0.0, 0.0), &opts).unwrap();
        assert!(r.unbound_warning);
    }
}
