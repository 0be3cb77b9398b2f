use serde::{Deserialize, Serialize};

use super::gates::{Binding, GateSpec, Grid2};
use crate::{Error, Result};

/// Geometric defaults shared by the layout factories (all nm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDefaults {
    pub pitch: f64,
    pub channel_width: f64,
    pub depth: f64,
    /// Lateral extent of each screening gate away from the channel.
    pub screening_extent: f64,
}

impl Default for DeviceDefaults {
    fn default() -> Self {
        Self { pitch: 100.0, channel_width: 200.0, depth: 50.0, screening_extent: 800.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    StraightLane,
    TJunction,
    IrZone,
    ManipulationZone,
}

/// Gates plus the centerlines of the shuttle lanes they form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceLayout {
    pub kind: LayoutKind,
    pub defaults: DeviceDefaults,
    pub gates: Vec<GateSpec>,
    /// Lane centerlines as (start, end) points, one per lane index.
    pub lane_axes: Vec<[[f64; 2]; 2]>,
}

fn clavier(lane: u8, k: i64) -> Binding {
    Binding::Clavier { lane, set: (k.rem_euclid(4) + 1) as u8 }
}

impl DeviceLayout {
    /// Lane 0 along x with clavier fingers centred on `x = k·pitch` for
    /// `k_min..=k_max`; finger `k` is wired to set `k mod 4 + 1`.
    pub fn straight_lane(d: DeviceDefaults, k_min: i64, k_max: i64) -> Self {
        let p = d.pitch;
        let w = d.channel_width / 2.0;
        let mut gates: Vec<GateSpec> = (k_min..=k_max)
            .map(|k| {
                let c = k as f64 * p;
                GateSpec::rectangle(c - p / 2.0, c + p / 2.0, -w, w, d.depth, clavier(0, k))
            })
            .collect();
        let x0 = (k_min as f64 - 0.5) * p;
        let x1 = (k_max as f64 + 0.5) * p;
        gates.push(GateSpec::rectangle(x0, x1, w, w + d.screening_extent, d.depth, Binding::Screening));
        gates.push(GateSpec::rectangle(x0, x1, -w - d.screening_extent, -w, d.depth, Binding::Screening));
        Self { kind: LayoutKind::StraightLane, defaults: d, gates, lane_axes: vec![[[x0, 0.0], [x1, 0.0]]] }
    }

    /// Three-way junction: lane 0 runs along x through the junction at the
    /// origin, lane 1 branches off towards +y. `n_along` fingers on each side of
    /// the junction on lane 0 and `n_branch` fingers on lane 1.
    pub fn t_junction(d: DeviceDefaults, n_along: i64, n_branch: i64) -> Self {
        let p = d.pitch;
        let w = d.channel_width / 2.0;
        let s = d.screening_extent;
        let mut gates: Vec<GateSpec> = (-n_along..=n_along)
            .map(|k| {
                let c = k as f64 * p;
                GateSpec::rectangle(c - p / 2.0, c + p / 2.0, -w, w, d.depth, clavier(0, k))
            })
            .collect();
        for j in 0..n_branch {
            let y0 = w + j as f64 * p;
            gates.push(GateSpec::rectangle(-w, w, y0, y0 + p, d.depth, clavier(1, j)));
        }
        let x0 = (-n_along as f64 - 0.5) * p;
        let x1 = (n_along as f64 + 0.5) * p;
        let y_top = w + n_branch as f64 * p;
        gates.push(GateSpec::rectangle(x0, x1, -w - s, -w, d.depth, Binding::Screening));
        gates.push(GateSpec::rectangle(x0, -w, w, y_top, d.depth, Binding::Screening));
        gates.push(GateSpec::rectangle(w, x1, w, y_top, d.depth, Binding::Screening));
        Self {
            kind: LayoutKind::TJunction,
            defaults: d,
            gates,
            lane_axes: vec![[[x0, 0.0], [x1, 0.0]], [[0.0, 0.0], [0.0, y_top]]],
        }
    }

    /// Two collinear lanes meeting at a central barrier gate (`Individual(0)`).
    /// Lane 0 occupies x < 0, lane 1 x > 0; each has `n_side` fingers, the one
    /// closest to the barrier being set 1.
    pub fn manipulation_zone(d: DeviceDefaults, n_side: i64) -> Self {
        let p = d.pitch;
        let w = d.channel_width / 2.0;
        let mut gates = vec![GateSpec::rectangle(-p / 2.0, p / 2.0, -w, w, d.depth, Binding::Individual(0))];
        for k in 1..=n_side {
            let c = k as f64 * p;
            // lane 0 counts outward from the barrier towards −x, lane 1 towards +x
            gates.push(GateSpec::rectangle(-c - p / 2.0, -c + p / 2.0, -w, w, d.depth, clavier(0, k - 1)));
            gates.push(GateSpec::rectangle(c - p / 2.0, c + p / 2.0, -w, w, d.depth, clavier(1, k - 1)));
        }
        let x1 = (n_side as f64 + 0.5) * p;
        gates.push(GateSpec::rectangle(-x1, x1, w, w + d.screening_extent, d.depth, Binding::Screening));
        gates.push(GateSpec::rectangle(-x1, x1, -w - d.screening_extent, -w, d.depth, Binding::Screening));
        Self {
            kind: LayoutKind::ManipulationZone,
            defaults: d,
            gates,
            lane_axes: vec![[[-x1, 0.0], [0.0, 0.0]], [[0.0, 0.0], [x1, 0.0]]],
        }
    }

    /// Lane ending in a charge-sensor pocket: a straight lane along −x towards
    /// the origin, two individually controlled entry gates, the SET plunger
    /// beside the lane end flanked by two SET barriers, and the reservoir
    /// represented as a grounded-region gate (`Individual(2)`).
    pub fn ir_zone(d: DeviceDefaults, n_lane: i64) -> Self {
        let p = d.pitch;
        let w = d.channel_width / 2.0;
        let s = d.screening_extent;
        let mut gates = Vec::new();
        for k in 0..n_lane {
            let c = -(k as f64 + 2.5) * p;
            gates.push(GateSpec::rectangle(c - p / 2.0, c + p / 2.0, -w, w, d.depth, clavier(0, k)));
        }
        gates.push(GateSpec::rectangle(-2.0 * p, -p, -w, w, d.depth, Binding::Individual(0)));
        gates.push(GateSpec::rectangle(-p, 0.0, -w, w, d.depth, Binding::Individual(1)));
        gates.push(GateSpec::rectangle(0.0, p, -w, w, d.depth, Binding::Individual(2)));
        gates.push(GateSpec::rectangle(-p, 0.0, w, w + p, d.depth, Binding::SetPlunger));
        gates.push(GateSpec::rectangle(-2.0 * p, -p, w, w + p, d.depth, Binding::SetBarrier));
        gates.push(GateSpec::rectangle(0.0, p, w, w + p, d.depth, Binding::SetBarrier));
        let x0 = -(n_lane as f64 + 2.0) * p;
        gates.push(GateSpec::rectangle(x0, p, -w - s, -w, d.depth, Binding::Screening));
        gates.push(GateSpec::rectangle(x0, -2.0 * p, w, w + s, d.depth, Binding::Screening));
        gates.push(GateSpec::rectangle(p, 2.0 * p, -w - s, w + s, d.depth, Binding::Screening));
        Self { kind: LayoutKind::IrZone, defaults: d, gates, lane_axes: vec![[[x0, 0.0], [0.0, 0.0]]] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gates.is_empty() {
            return Err(Error::InvalidGeometry("layout has no gates".into()));
        }
        self.gates.iter().try_for_each(GateSpec::validate)
    }

    /// Grid covering every lane with `margin` nm around the lane axes.
    pub fn lane_grid(&self, margin: f64, spacing: f64) -> Grid2 {
        let mut bb = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for [a, b] in &self.lane_axes {
            for p in [a, b] {
                bb[0] = bb[0].min(p[0]);
                bb[1] = bb[1].max(p[0]);
                bb[2] = bb[2].min(p[1]);
                bb[3] = bb[3].max(p[1]);
            }
        }
        Grid2::covering(bb[0] - margin, bb[1] + margin, bb[2] - margin, bb[3] + margin, spacing)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("layout serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let layout: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        layout.validate()?;
        Ok(layout)
    }
}
