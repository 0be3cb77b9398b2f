use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::physcore::UEV_PER_MV;
use crate::{Error, Result};

/// Signal a gate is wired to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    /// One of the four periodically connected clavier sets (1..=4) of a lane.
    Clavier {
        lane: u8,
        set: u8,
    },
    Screening,
    TopGate,
    Individual(u32),
    SetPlunger,
    SetBarrier,
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Clavier { lane, set } => write!(f, "clavier:{lane}:{set}"),
            Binding::Screening => write!(f, "screening"),
            Binding::TopGate => write!(f, "top"),
            Binding::Individual(k) => write!(f, "gate:{k}"),
            Binding::SetPlunger => write!(f, "set_plunger"),
            Binding::SetBarrier => write!(f, "set_barrier"),
        }
    }
}

impl FromStr for Binding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown binding '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["screening"] => Ok(Binding::Screening),
            ["top"] => Ok(Binding::TopGate),
            ["set_plunger"] => Ok(Binding::SetPlunger),
            ["set_barrier"] => Ok(Binding::SetBarrier),
            ["gate", k] => Ok(Binding::Individual(k.parse().map_err(|_| bad())?)),
            ["clavier", lane, set] => {
                let lane = lane.parse().map_err(|_| bad())?;
                let set: u8 = set.parse().map_err(|_| bad())?;
                if !(1..=4).contains(&set) {
                    return Err(bad());
                }
                Ok(Binding::Clavier { lane, set })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for Binding {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Binding {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A gate: polygonal footprint in the surface plane (nm), its height above the
/// 2DEG and the signal it is wired to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub footprint: Vec<[f64; 2]>,
    pub depth: f64,
    pub binding: Binding,
}

impl GateSpec {
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, depth: f64, binding: Binding) -> Self {
        Self { footprint: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]], depth, binding }
    }

    /// Signed shoelace area.
    pub fn signed_area(&self) -> f64 {
        let p = &self.footprint;
        let n = p.len();
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                p[i][0] * p[j][1] - p[j][0] * p[i][1]
            })
            .sum::<f64>()
            * 0.5
    }

    pub fn validate(&self) -> Result<()> {
        if self.footprint.len() < 3 {
            return Err(Error::InvalidGeometry("footprint needs at least 3 vertices".into()));
        }
        if self.signed_area().abs() <= 1e-9 {
            return Err(Error::InvalidGeometry("footprint has zero area".into()));
        }
        if !(self.depth > 0.0) {
            return Err(Error::InvalidGeometry(format!("depth {} must be positive", self.depth)));
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> [f64; 4] {
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for v in &self.footprint {
            bb[0] = bb[0].min(v[0]);
            bb[1] = bb[1].max(v[0]);
            bb[2] = bb[2].min(v[1]);
            bb[3] = bb[3].max(v[1]);
        }
        bb
    }

    /// Unit-voltage potential at lateral point (x, y) in the 2DEG plane.
    pub fn unit_potential_at(&self, x: f64, y: f64) -> f64 {
        polygon_solid_angle(&self.footprint, x, y, self.depth).abs() / (2.0 * std::f64::consts::PI)
    }
}

/// Solid angle subtended by a planar polygon from a point `depth` below (x, y).
/// Signed by the polygon orientation.
fn polygon_solid_angle(poly: &[[f64; 2]], x: f64, y: f64, depth: f64) -> f64 {
    let rel = |p: &[f64; 2]| [p[0] - x, p[1] - y, depth];
    let r0 = rel(&poly[0]);
    let n0 = norm3(&r0);
    let mut total = 0.0;
    for i in 1..poly.len() - 1 {
        let r1 = rel(&poly[i]);
        let r2 = rel(&poly[i + 1]);
        let n1 = norm3(&r1);
        let n2 = norm3(&r2);
        let triple = r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
            + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0]);
        let den = n0 * n1 * n2 + dot3(&r0, &r1) * n2 + dot3(&r0, &r2) * n1 + dot3(&r1, &r2) * n0;
        total += 2.0 * triple.atan2(den);
    }
    total
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Closed-form unit potential of an axis-aligned rectangle `[x0,x1]×[y0,y1]`.
pub fn rectangle_potential(x0: f64, x1: f64, y0: f64, y1: f64, depth: f64, x: f64, y: f64) -> f64 {
    let g = |u: f64, v: f64| (u * v / (depth * (u * u + v * v + depth * depth).sqrt())).atan();
    (g(x - x0, y - y0) + g(x - x0, y1 - y) + g(x1 - x, y - y0) + g(x1 - x, y1 - y)) / (2.0 * std::f64::consts::PI)
}

/// Regular 2D sampling grid. Values are stored row-major with x fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub x0: f64,
    pub y0: f64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2 {
    pub fn covering(x_min: f64, x_max: f64, y_min: f64, y_max: f64, spacing: f64) -> Self {
        let nx = ((x_max - x_min) / spacing).round() as usize + 1;
        let ny = ((y_max - y_min) / spacing).round() as usize + 1;
        Self { x0: x_min, y0: y_min, spacing, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.spacing
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.spacing
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x_max() && y >= self.y0 && y <= self.y_max()
    }

    fn same_as(&self, other: &Grid2) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.x0 - other.x0).abs() < 1e-9
            && (self.y0 - other.y0).abs() < 1e-9
            && (self.spacing - other.spacing).abs() < 1e-12
    }
}

/// Unit-voltage potential of one binding sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPotential {
    pub grid: Grid2,
    pub binding: Binding,
    pub values: Vec<f64>,
}

pub fn gate_basis_potential(gate: &GateSpec, grid: &Grid2) -> Result<BasisPotential> {
    gate.validate()?;
    if grid.spacing > 10.0 {
        return Err(Error::InvalidParameter(format!("grid spacing {} nm exceeds 10 nm", grid.spacing)));
    }
    let mut values = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            values.push(gate.unit_potential_at(grid.x(i), grid.y(j)));
        }
    }
    Ok(BasisPotential { grid: *grid, binding: gate.binding, values })
}

/// One basis potential per distinct binding, summing gates that share a signal.
pub fn basis_by_binding(gates: &[GateSpec], grid: &Grid2) -> Result<Vec<BasisPotential>> {
    let mut acc: BTreeMap<Binding, Vec<f64>> = BTreeMap::new();
    for gate in gates {
        let b = gate_basis_potential(gate, grid)?;
        let entry = acc.entry(gate.binding).or_insert_with(|| vec![0.0; grid.len()]);
        entry.iter_mut().zip(&b.values).for_each(|(a, v)| *a += v);
    }
    Ok(acc.into_iter().map(|(binding, values)| BasisPotential { grid: *grid, binding, values }).collect())
}

/// Potential energy landscape V = −e·Φ in μeV referenced to the band edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub grid: Grid2,
    pub values: Vec<f64>,
    pub time: f64,
}

impl PotentialField {
    pub fn at_index(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        if !g.contains(x, y) {
            return None;
        }
        let fx = (x - g.x0) / g.spacing;
        let fy = (y - g.y0) / g.spacing;
        let i = (fx.floor() as usize).min(g.nx - 2);
        let j = (fy.floor() as usize).min(g.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.at_index(i, j);
        let v10 = self.at_index(i + 1, j);
        let v01 = self.at_index(i, j + 1);
        let v11 = self.at_index(i + 1, j + 1);
        Some(v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty)
    }

    /// CSV dump with columns `x_nm,y_nm,V_ueV`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x_nm,y_nm,V_ueV")?;
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                writeln!(w, "{},{},{}", self.grid.x(i), self.grid.y(j), self.at_index(i, j))?;
            }
        }
        Ok(())
    }
}

/// V(x,y) = −e·Σ V_i·Φ_i with voltages in mV.
pub fn compose_potential(basis: &[BasisPotential], voltages: &BTreeMap<Binding, f64>) -> Result<PotentialField> {
    let first = basis.first().ok_or_else(|| Error::InvalidParameter("no basis potentials".into()))?;
    for b in basis {
        if !b.grid.same_as(&first.grid) {
            return Err(Error::GridMismatch(format!("basis for {} is sampled on a different grid", b.binding)));
        }
    }
    for key in voltages.keys() {
        if !basis.iter().any(|b| b.binding == *key) {
            return Err(Error::MissingBasis(key.to_string()));
        }
    }
    let mut values = vec![0.0; first.grid.len()];
    for b in basis {
        if let Some(&v) = voltages.get(&b.binding) {
            if v != 0.0 {
                let scale = -UEV_PER_MV * v;
                values.iter_mut().zip(&b.values).for_each(|(a, phi)| *a += scale * phi);
            }
        }
    }
    Ok(PotentialField { grid: first.grid, values, time: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, x1: f64, y0: f64, y1: f64, depth: f64) -> GateSpec {
        GateSpec::rectangle(x0, x1, y0, y1, depth, Binding::Individual(0))
    }

    /// Midpoint-rule integral of the half-space kernel d/(2π(ρ²+d²)^{3/2})
    /// over the rectangle. Independent of the solid-angle route.
    fn surface_integral_oracle(x0: f64, x1: f64, y0: f64, y1: f64, d: f64, x: f64, y: f64) -> f64 {
        let n = 800;
        let hx = (x1 - x0) / n as f64;
        let hy = (y1 - y0) / n as f64;
        let mut s = 0.0;
        for a in 0..n {
            let u = x0 + (a as f64 + 0.5) * hx - x;
            for b in 0..n {
                let v = y0 + (b as f64 + 0.5) * hy - y;
                s += d / (u * u + v * v + d * d).powf(1.5);
            }
        }
        s * hx * hy / (2.0 * std::f64::consts::PI)
    }

    #[test]
    fn rectangle_center_matches_surface_integral() {
        let g = rect(-50.0, 50.0, -100.0, 100.0, 50.0);
        let phi = g.unit_potential_at(0.0, 0.0);
        let oracle = surface_integral_oracle(-50.0, 50.0, -100.0, 100.0, 50.0, 0.0, 0.0);
        assert!((phi - oracle).abs() / oracle < 0.01, "{phi} vs {oracle}");
        let closed = rectangle_potential(-50.0, 50.0, -100.0, 100.0, 50.0, 0.0, 0.0);
        assert!((phi - closed).abs() < 1e-12);
    }

    #[test]
    fn polygon_agrees_with_closed_form_off_center() {
        let g = rect(-50.0, 50.0, -100.0, 100.0, 30.0);
        for (x, y) in [(0.0, 0.0), (70.0, 10.0), (-200.0, 150.0), (49.0, -99.0)] {
            let a = g.unit_potential_at(x, y);
            let b = rectangle_potential(-50.0, 50.0, -100.0, 100.0, 30.0, x, y);
            assert!((a - b).abs() < 1e-12, "({x},{y}): {a} vs {b}");
        }
    }

    #[test]
    fn far_field_decays() {
        let g = rect(0.0, 100.0, 0.0, 200.0, 50.0);
        let r = 20.0 * (200.0 + 50.0);
        assert!(g.unit_potential_at(50.0 + r, 100.0).abs() < 0.01);
    }

    #[test]
    fn pinned_limit_under_large_gate() {
        let g = rect(-5000.0, 5000.0, -5000.0, 5000.0, 1e-3);
        assert!((g.unit_potential_at(0.0, 0.0) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn mirror_symmetry_of_symmetric_gate() {
        let g = GateSpec {
            footprint: vec![[-40.0, 0.0], [40.0, 0.0], [20.0, 90.0], [-20.0, 90.0]],
            depth: 40.0,
            binding: Binding::Screening,
        };
        for (x, y) in [(10.0, 5.0), (33.0, -20.0), (77.0, 140.0)] {
            let a = g.unit_potential_at(x, y);
            let b = g.unit_potential_at(-x, y);
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn orientation_does_not_matter() {
        let mut g = rect(0.0, 80.0, 0.0, 30.0, 20.0);
        let a = g.unit_potential_at(10.0, 10.0);
        g.footprint.reverse();
        assert!((a - g.unit_potential_at(10.0, 10.0)).abs() < 1e-14);
    }

    #[test]
    fn degenerate_footprint_is_rejected() {
        let g =
            GateSpec { footprint: vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], depth: 50.0, binding: Binding::TopGate };
        let grid = Grid2::covering(0.0, 10.0, 0.0, 10.0, 1.0);
        assert!(matches!(gate_basis_potential(&g, &grid), Err(Error::InvalidGeometry(_))));
        let g = rect(0.0, 1.0, 0.0, 1.0, 0.0);
        assert!(matches!(gate_basis_potential(&g, &grid), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn binding_strings_round_trip() {
        for b in [
            Binding::Clavier { lane: 1, set: 3 },
            Binding::Screening,
            Binding::TopGate,
            Binding::Individual(7),
            Binding::SetPlunger,
            Binding::SetBarrier,
        ] {
            assert_eq!(b.to_string().parse::<Binding>().unwrap(), b);
        }
        assert!("clavier:0:5".parse::<Binding>().is_err());
    }

    #[test]
    fn compose_basics() {
        let grid = Grid2::covering(-100.0, 100.0, -100.0, 100.0, 5.0);
        let gates = vec![
            GateSpec::rectangle(-50.0, 0.0, -50.0, 50.0, 40.0, Binding::Individual(1)),
            GateSpec::rectangle(0.0, 50.0, -50.0, 50.0, 40.0, Binding::Individual(2)),
        ];
        let basis = basis_by_binding(&gates, &grid).unwrap();
        let zero: BTreeMap<_, _> = [(Binding::Individual(1), 0.0)].into_iter().collect();
        assert!(compose_potential(&basis, &zero).unwrap().values.iter().all(|v| *v == 0.0));

        let one: BTreeMap<_, _> = [(Binding::Individual(1), 1000.0)].into_iter().collect();
        let f = compose_potential(&basis, &one).unwrap();
        for (a, b) in f.values.iter().zip(&basis[0].values) {
            assert!((a + 1e6 * b).abs() < 1e-6);
        }

        let missing: BTreeMap<_, _> = [(Binding::SetBarrier, 1.0)].into_iter().collect();
        assert!(matches!(compose_potential(&basis, &missing), Err(Error::MissingBasis(_))));

        let mut other = basis.clone();
        other[1].grid.spacing = 4.0;
        assert!(matches!(compose_potential(&other, &one), Err(Error::GridMismatch(_))));
    }
}
