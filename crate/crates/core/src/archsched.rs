//! Unit-cell grid, surface-code stabilizer scheduling and wiring budget.
//!
//! Positions along x use half-cell units. Odd rows are shifted by half a cell,
//! so cell `(r, c)` spans `x2 ∈ [2c + r%2, 2c + r%2 + 2]` with its manipulation
//! zone (MZ) at the centre. Green lanes run vertically on every half-cell line
//! and share one global drive. Red (left half) and blue (right half) lanes are
//! cell-local and meet at the MZ.
//!
//! Each working cell holds one stationary data qubit in its MZ and one ancilla
//! whose home is the IR junction at the right end of the blue lane. The ancilla
//! of cell `(r, c)` sits on the line `x2 = 2c + r%2 + 2` and checks the data
//! qubits of its own cell (left), the next cell (right) and the cells above and
//! below whose centres lie on that line. Even rows carry X checks, odd rows Z.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default coaxial-line budget of a current dilution refrigerator.
pub const DEFAULT_COAX_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellId {
    pub row: usize,
    pub col: usize,
}

impl CellId {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneColor {
    /// Vertical, driven by the shared global signal set.
    Green,
    Red,
    Blue,
}

/// Exclusive resources of the lane graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Ir(CellId),
    Mz(CellId),
    /// Left half-lane, from the left boundary junction to the MZ.
    Red(CellId),
    /// Right half-lane, from the MZ to the right boundary.
    Blue(CellId),
    /// Branch point of the IR zone near the right end of the blue lane.
    IrJunction(CellId),
    /// Junction of a horizontal lane with the green line `x2` in `row`.
    Junction {
        x2: usize,
        row: usize,
    },
    /// Green piece on line `x2` between `row` and `row + 1`.
    Green {
        x2: usize,
        row: usize,
    },
}

impl Segment {
    pub fn color(&self) -> Option<LaneColor> {
        match self {
            Segment::Red(_) => Some(LaneColor::Red),
            Segment::Blue(_) => Some(LaneColor::Blue),
            Segment::Green { .. } => Some(LaneColor::Green),
            _ => None,
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Segment::Ir(c) => write!(f, "ir{c}"),
            Segment::Mz(c) => write!(f, "mz{c}"),
            Segment::Red(c) => write!(f, "red{c}"),
            Segment::Blue(c) => write!(f, "blue{c}"),
            Segment::IrJunction(c) => write!(f, "irj{c}"),
            Segment::Junction { x2, row } => write!(f, "junction(x2={x2},r={row})"),
            Segment::Green { x2, row } => write!(f, "green(x2={x2},r={row}..{})", row + 1),
        }
    }
}

/// Components of one unit cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellComponents {
    pub ir: Segment,
    pub mz: Segment,
    pub junctions: [Segment; 3],
    pub lanes: Vec<(Segment, LaneColor)>,
}

/// Brick-wall array of unit cells with an optional set of faulty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCellGrid {
    rows: usize,
    cols: usize,
    faulty: BTreeSet<CellId>,
}

impl UnitCellGrid {
    pub fn new(rows: usize, cols: usize, faulty: &[CellId]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!("grid {rows}×{cols} is empty")));
        }
        for c in faulty {
            if c.row >= rows || c.col >= cols {
                return Err(Error::InvalidParameter(format!("faulty cell {c} outside {rows}×{cols} grid")));
            }
        }
        Ok(Self { rows, cols, faulty: faulty.iter().copied().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn faulty(&self) -> impl Iterator<Item = CellId> + '_ {
        self.faulty.iter().copied()
    }

    pub fn contains(&self, cell: CellId) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn is_faulty(&self, cell: CellId) -> bool {
        self.faulty.contains(&cell)
    }

    fn is_working(&self, cell: CellId) -> bool {
        self.contains(cell) && !self.is_faulty(cell)
    }

    pub fn working_cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| CellId::new(r, c))).filter(|c| !self.is_faulty(*c))
    }

    /// Two qubits per working cell.
    pub fn operable_qubits(&self) -> usize {
        2 * self.working_cells().count()
    }

    pub fn left_x2(cell: CellId) -> usize {
        2 * cell.col + cell.row % 2
    }

    pub fn center_x2(cell: CellId) -> usize {
        Self::left_x2(cell) + 1
    }

    /// Line on which the ancilla of `cell` sits.
    pub fn ancilla_x2(cell: CellId) -> usize {
        Self::left_x2(cell) + 2
    }

    /// Cell in `row` whose centre lies on line `x2`.
    pub fn cell_centered_at(&self, row: usize, x2: usize) -> Option<CellId> {
        let base = 1 + row % 2;
        if row >= self.rows || x2 < base || (x2 - base) % 2 != 0 {
            return None;
        }
        let cell = CellId::new(row, (x2 - base) / 2);
        self.contains(cell).then_some(cell)
    }

    /// Cells sharing an edge with `cell` in the brick-wall tiling.
    pub fn adjacent(&self, cell: CellId) -> Vec<CellId> {
        let mut out = Vec::new();
        if cell.col > 0 {
            out.push(CellId::new(cell.row, cell.col - 1));
        }
        if cell.col + 1 < self.cols {
            out.push(CellId::new(cell.row, cell.col + 1));
        }
        let l = Self::left_x2(cell) as isize;
        for row in [cell.row.checked_sub(1), Some(cell.row + 1)].into_iter().flatten() {
            if row >= self.rows {
                continue;
            }
            for left in [l - 1, l + 1] {
                let x = left - (row % 2) as isize;
                if x >= 0 && x % 2 == 0 && ((x / 2) as usize) < self.cols {
                    out.push(CellId::new(row, (x / 2) as usize));
                }
            }
        }
        out.sort();
        out
    }

    pub fn components(&self, cell: CellId) -> CellComponents {
        let mut lanes = vec![(Segment::Red(cell), LaneColor::Red), (Segment::Blue(cell), LaneColor::Blue)];
        if cell.row + 1 < self.rows {
            for x2 in [Self::left_x2(cell), Self::center_x2(cell)] {
                lanes.push((Segment::Green { x2, row: cell.row }, LaneColor::Green));
            }
        }
        CellComponents {
            ir: Segment::Ir(cell),
            mz: Segment::Mz(cell),
            junctions: [
                Segment::Junction { x2: Self::left_x2(cell), row: cell.row },
                Segment::Junction { x2: Self::center_x2(cell), row: cell.row },
                Segment::IrJunction(cell),
            ],
            lanes,
        }
    }

    pub fn stabilizer_kind(cell: CellId) -> StabilizerKind {
        if cell.row % 2 == 0 {
            StabilizerKind::X
        } else {
            StabilizerKind::Z
        }
    }

    /// Data cell reached from the ancilla of `cell` in `dir`, if it is working.
    pub fn neighbor(&self, cell: CellId, dir: Direction) -> Option<CellId> {
        let x2 = Self::ancilla_x2(cell);
        let target = match dir {
            Direction::Left => Some(cell),
            Direction::Right => Some(CellId::new(cell.row, cell.col + 1)),
            Direction::Up => cell.row.checked_sub(1).and_then(|r| self.cell_centered_at(r, x2)),
            Direction::Down => self.cell_centered_at(cell.row + 1, x2),
        }?;
        self.is_working(target).then_some(target)
    }
}

impl fmt::Display for UnitCellGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows = {}", self.rows)?;
        writeln!(f, "cols = {}", self.cols)?;
        writeln!(f, "cells = {}", self.cell_count())?;
        let faulty: Vec<String> = self.faulty.iter().map(|c| format!("[{}, {}]", c.row, c.col)).collect();
        writeln!(f, "faulty = [{}]", faulty.join(", "))?;
        writeln!(f, "operable_qubits = {}", self.operable_qubits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilizerKind {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Left,
    Right,
    Down,
}

/// Order in which an ancilla visits its data qubits `a, b, c, d`.
///
/// The default `[Up, Left, Right, Down]` interleaves every overlapping X/Z pair
/// consistently, so the checks commute when run simultaneously.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitOrder(pub [Direction; 4]);

impl Default for VisitOrder {
    fn default() -> Self {
        Self([Direction::Up, Direction::Left, Direction::Right, Direction::Down])
    }
}

impl VisitOrder {
    pub fn validate(&self) -> Result<()> {
        let set: BTreeSet<_> = self.0.iter().map(|d| *d as u8).collect();
        if set.len() != 4 {
            return Err(Error::InvalidParameter(format!("visit order {:?} repeats a direction", self.0)));
        }
        Ok(())
    }
}

/// Timing and error constants of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timing {
    pub velocity_m_per_s: f64,
    /// Lane length of one unit cell in μm.
    pub lane_um: f64,
    pub single_qubit_ns: f64,
    pub two_qubit_ns: f64,
    pub init_ns: f64,
    pub readout_ns: f64,
    pub shuttle_error_per_10um: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            velocity_m_per_s: 8.0,
            lane_um: 10.0,
            single_qubit_ns: 50.0,
            two_qubit_ns: 50.0,
            init_ns: 200.0,
            readout_ns: 10_000.0,
            shuttle_error_per_10um: 1e-3,
        }
    }
}

impl Timing {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.velocity_m_per_s,
            self.lane_um,
            self.single_qubit_ns,
            self.two_qubit_ns,
            self.init_ns,
            self.readout_ns,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v <= 0.0)
            || !(self.shuttle_error_per_10um >= 0.0 && self.shuttle_error_per_10um.is_finite())
        {
            return Err(Error::InvalidParameter(format!("timing {self:?}")));
        }
        Ok(())
    }

    pub fn traversal_ns(&self, distance_um: f64) -> f64 {
        distance_um * 1e3 / self.velocity_m_per_s
    }

    /// CNOT as a CZ between two single-qubit rotations.
    pub fn cnot_ns(&self) -> f64 {
        2.0 * self.single_qubit_ns + self.two_qubit_ns
    }

    fn leg_um(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Up | Direction::Down => self.lane_um,
            Direction::Left | Direction::Right => 0.5 * self.lane_um,
        }
    }

    fn slot_ns(&self, dir: Direction) -> f64 {
        2.0 * self.traversal_ns(self.leg_um(dir)) + 2.0 * self.single_qubit_ns + self.cnot_ns()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Data,
    Ancilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Qubit {
    pub role: Role,
    pub cell: CellId,
}

impl Qubit {
    pub fn data(cell: CellId) -> Self {
        Self { role: Role::Data, cell }
    }

    pub fn ancilla(cell: CellId) -> Self {
        Self { role: Role::Ancilla, cell }
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.role == Role::Data { 'D' } else { 'A' };
        write!(f, "{p}{}", self.cell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Init,
    Readout,
    Park,
    Idle,
    /// Instantaneous passage through a junction.
    Pass,
    /// `direction` is −1 for up/left and +1 for down/right.
    Shuttle {
        distance_um: f64,
        direction: i8,
    },
    Gate1q,
    Cnot {
        partner: Qubit,
        control: bool,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Init => "init",
            Action::Readout => "readout",
            Action::Park => "park",
            Action::Idle => "idle",
            Action::Pass => "pass",
            Action::Shuttle { .. } => "shuttle",
            Action::Gate1q => "gate1q",
            Action::Cnot { .. } => "cnot",
        }
    }
}

/// One qubit occupying one segment over `[t0, t1)` ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub qubit: Qubit,
    pub action: Action,
    pub segment: Segment,
    pub t0: f64,
    pub t1: f64,
}

impl Event {
    fn is_instant(&self) -> bool {
        self.t0 == self.t1
    }
}

fn overlaps(a: &Event, b: &Event) -> bool {
    match (a.is_instant(), b.is_instant()) {
        (false, false) => a.t0 < b.t1 && b.t0 < a.t1,
        (true, true) => a.t0 == b.t0,
        (true, false) => b.t0 <= a.t0 && a.t0 < b.t1,
        (false, true) => a.t0 <= b.t0 && b.t0 < a.t1,
    }
}

/// Event history of one qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitTrack {
    pub qubit: Qubit,
    pub events: Vec<Event>,
}

impl QubitTrack {
    pub fn shuttle_um(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e.action {
                Action::Shuttle { distance_um, .. } => distance_um,
                _ => 0.0,
            })
            .sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    events: Vec<Event>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events(events: Vec<Event>) -> Self {
        Self { events }
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn extend(&mut self, other: Schedule) {
        self.events.extend(other.events);
    }

    pub fn shifted(&self, dt: f64) -> Schedule {
        let events = self.events.iter().map(|e| Event { t0: e.t0 + dt, t1: e.t1 + dt, ..*e }).collect();
        Schedule { events }
    }

    pub fn without_qubit(&self, q: Qubit) -> Schedule {
        Schedule { events: self.events.iter().filter(|e| e.qubit != q).copied().collect() }
    }

    pub fn span(&self) -> (f64, f64) {
        if self.events.is_empty() {
            return (0.0, 0.0);
        }
        let t0 = self.events.iter().map(|e| e.t0).fold(f64::INFINITY, f64::min);
        let t1 = self.events.iter().map(|e| e.t1).fold(f64::NEG_INFINITY, f64::max);
        (t0, t1)
    }

    pub fn tracks(&self) -> Vec<QubitTrack> {
        let mut map: BTreeMap<Qubit, Vec<Event>> = BTreeMap::new();
        for e in &self.events {
            map.entry(e.qubit).or_default().push(*e);
        }
        map.into_iter()
            .map(|(qubit, mut events)| {
                events.sort_by(|a, b| a.t0.total_cmp(&b.t0).then(a.t1.total_cmp(&b.t1)));
                QubitTrack { qubit, events }
            })
            .collect()
    }

    fn sorted(&self) -> Vec<Event> {
        let mut ev = self.events.clone();
        ev.sort_by(|a, b| a.t0.total_cmp(&b.t0).then(a.t1.total_cmp(&b.t1)).then(a.qubit.cmp(&b.qubit)));
        ev
    }

    /// Columns `event,qubit,segment,t0_ns,t1_ns`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "event,qubit,segment,t0_ns,t1_ns")?;
        for e in self.sorted() {
            writeln!(w, "{},{},\"{}\",{},{}", e.action.name(), e.qubit, e.segment, e.t0, e.t1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.sorted() {
            writeln!(
                f,
                "{{ event = \"{}\", qubit = \"{}\", segment = \"{}\", t0_ns = {}, t1_ns = {} }}",
                e.action.name(),
                e.qubit,
                e.segment,
                e.t0,
                e.t1
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictKind {
    InvalidTime,
    /// A qubit's own events overlap.
    QubitOverlap,
    DoubleOccupancy,
    /// Simultaneous green moves that disagree on timing or direction.
    GreenAsync,
    /// IR zone in use while its cell's red or blue lane is occupied.
    IrExclusion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub events: Vec<Event>,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:", self.kind)?;
        for e in &self.events {
            write!(f, " {} {} on {} [{}, {}]", e.qubit, e.action.name(), e.segment, e.t0, e.t1)?;
        }
        Ok(())
    }
}

/// All conflicts in `schedule`; empty iff the schedule is valid.
pub fn validate_schedule(schedule: &Schedule) -> Vec<Conflict> {
    let ev = schedule.events();
    let mut out = Vec::new();
    let conflict = |kind, a: &Event, b: &Event| Conflict { kind, events: vec![*a, *b] };

    for e in ev {
        if !(e.t0.is_finite() && e.t1.is_finite() && e.t0 >= 0.0 && e.t1 >= e.t0) {
            out.push(Conflict { kind: ConflictKind::InvalidTime, events: vec![*e] });
        }
    }

    for track in schedule.tracks() {
        for w in track.events.windows(2) {
            if w[0].t1 > w[1].t0 {
                out.push(conflict(ConflictKind::QubitOverlap, &w[0], &w[1]));
            }
        }
    }

    let mut by_segment: BTreeMap<Segment, Vec<&Event>> = BTreeMap::new();
    for e in ev {
        by_segment.entry(e.segment).or_default().push(e);
    }
    for (seg, list) in &by_segment {
        for (i, a) in list.iter().enumerate() {
            for b in &list[i + 1..] {
                if a.qubit == b.qubit || !overlaps(a, b) {
                    continue;
                }
                // an MZ holds its parked data qubit plus one visitor
                if matches!(seg, Segment::Mz(_)) && a.qubit.role != b.qubit.role {
                    continue;
                }
                out.push(conflict(ConflictKind::DoubleOccupancy, a, b));
            }
        }
    }

    let green: Vec<&Event> = ev
        .iter()
        .filter(|e| matches!(e.segment, Segment::Green { .. }) && matches!(e.action, Action::Shuttle { .. }))
        .collect();
    for (i, a) in green.iter().enumerate() {
        for b in &green[i + 1..] {
            let dir = |e: &Event| match e.action {
                Action::Shuttle { direction, .. } => direction,
                _ => 0,
            };
            let same = a.t0 == b.t0 && a.t1 == b.t1 && dir(a) == dir(b);
            if overlaps(a, b) && !same {
                out.push(conflict(ConflictKind::GreenAsync, a, b));
            }
        }
    }

    for e in ev.iter().filter(|e| matches!(e.action, Action::Init | Action::Readout)) {
        let Segment::Ir(cell) = e.segment else { continue };
        for seg in [Segment::Red(cell), Segment::Blue(cell), Segment::IrJunction(cell)] {
            for o in by_segment.get(&seg).into_iter().flatten() {
                if o.qubit != e.qubit && overlaps(e, o) {
                    out.push(conflict(ConflictKind::IrExclusion, e, o));
                }
            }
        }
    }
    out
}

/// One data-qubit interaction of a stabilizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visit {
    /// Position 1..=4 in the visit order.
    pub step: usize,
    pub direction: Direction,
    pub data: CellId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerPlan {
    pub ancilla: CellId,
    pub kind: StabilizerKind,
    pub visits: Vec<Visit>,
    pub schedule: Schedule,
}

impl StabilizerPlan {
    pub fn weight(&self) -> usize {
        self.visits.len()
    }

    pub fn two_qubit_gates(&self) -> usize {
        self.schedule
            .events()
            .iter()
            .filter(|e| e.qubit.role == Role::Ancilla && matches!(e.action, Action::Cnot { .. }))
            .count()
    }
}

/// Route of one leg from the ancilla home to a data MZ, as segments with lengths.
fn leg_route(anc: CellId, dir: Direction, data: CellId) -> Vec<(Segment, f64, i8)> {
    let x2 = UnitCellGrid::ancilla_x2(anc);
    let jc = Segment::Junction { x2: UnitCellGrid::center_x2(data), row: data.row };
    match dir {
        Direction::Left => vec![(Segment::Blue(anc), 0.5, -1), (jc, 0.0, 0)],
        Direction::Right => {
            vec![(Segment::Junction { x2, row: anc.row }, 0.0, 0), (Segment::Red(data), 0.5, 1), (jc, 0.0, 0)]
        }
        Direction::Up => vec![
            (Segment::Junction { x2, row: anc.row }, 0.0, 0),
            (Segment::Green { x2, row: data.row }, 1.0, -1),
            (jc, 0.0, 0),
        ],
        Direction::Down => vec![
            (Segment::Junction { x2, row: anc.row }, 0.0, 0),
            (Segment::Green { x2, row: anc.row }, 1.0, 1),
            (jc, 0.0, 0),
        ],
    }
}

/// Ancilla initialization, visits in `order` with a CNOT at each data MZ,
/// return home and readout. Times are absolute within one cycle.
pub fn plan_stabilizer(
    grid: &UnitCellGrid,
    ancilla: CellId,
    kind: StabilizerKind,
    order: VisitOrder,
    timing: &Timing,
) -> Result<StabilizerPlan> {
    order.validate()?;
    timing.validate()?;
    if !grid.contains(ancilla) {
        return Err(Error::InvalidParameter(format!("ancilla cell {ancilla} outside grid")));
    }
    if grid.is_faulty(ancilla) {
        return Err(Error::Unschedulable(format!("ancilla cell {ancilla} is faulty")));
    }
    let visits: Vec<Visit> = order
        .0
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| grid.neighbor(ancilla, d).map(|data| Visit { step: i + 1, direction: d, data }))
        .collect();
    if visits.is_empty() {
        return Err(Error::Unschedulable(format!("ancilla {ancilla} has no working neighbour")));
    }

    let a = Qubit::ancilla(ancilla);
    let home = Segment::IrJunction(ancilla);
    let mut b = Builder::default();
    let t1q = timing.single_qubit_ns;
    let first = visits.first().map(|v| v.step);
    let last = visits.last().map(|v| v.step);

    b.add(a, Segment::Ir(ancilla), Action::Init, timing.init_ns);
    b.add(a, home, Action::Pass, 0.0);
    for (i, &dir) in order.0.iter().enumerate() {
        let step = i + 1;
        let Some(v) = visits.iter().find(|v| v.step == step) else {
            b.add(a, home, Action::Idle, timing.slot_ns(dir));
            continue;
        };
        let route = leg_route(ancilla, dir, v.data);
        for &(seg, frac, d) in &route {
            b.travel(a, seg, frac * timing.lane_um, d, timing);
        }
        let mz = Segment::Mz(v.data);
        let x = kind == StabilizerKind::X;
        b.add(a, mz, if x && Some(step) == first { Action::Gate1q } else { Action::Idle }, t1q);
        let d = Qubit::data(v.data);
        let t0 = b.t;
        b.add(a, mz, Action::Cnot { partner: d, control: x }, timing.cnot_ns());
        b.events.push(Event { qubit: d, action: Action::Cnot { partner: a, control: !x }, segment: mz, t0, t1: b.t });
        b.add(a, mz, if x && Some(step) == last { Action::Gate1q } else { Action::Idle }, t1q);
        for &(seg, frac, d) in route.iter().rev() {
            b.travel(a, seg, frac * timing.lane_um, -d, timing);
        }
        b.add(a, home, Action::Pass, 0.0);
    }
    b.add(a, Segment::Ir(ancilla), Action::Readout, timing.readout_ns);
    Ok(StabilizerPlan { ancilla, kind, visits, schedule: Schedule::from_events(b.events) })
}

#[derive(Default)]
struct Builder {
    t: f64,
    events: Vec<Event>,
}

impl Builder {
    fn add(&mut self, qubit: Qubit, segment: Segment, action: Action, dt: f64) {
        self.events.push(Event { qubit, action, segment, t0: self.t, t1: self.t + dt });
        self.t += dt;
    }

    fn travel(&mut self, q: Qubit, seg: Segment, um: f64, direction: i8, timing: &Timing) {
        if um == 0.0 {
            self.add(q, seg, Action::Pass, 0.0);
        } else {
            self.add(q, seg, Action::Shuttle { distance_um: um, direction }, timing.traversal_ns(um));
        }
    }
}

/// Full error-detection cycle over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub schedule: Schedule,
    pub stabilizers: Vec<StabilizerPlan>,
    /// Working cells whose ancilla has no working neighbour.
    pub omitted: Vec<CellId>,
    /// No stabilizer reaches weight two, so the cycle detects nothing.
    pub degenerate: bool,
}

impl Cycle {
    pub fn stabilizer(&self, ancilla: CellId) -> Option<&StabilizerPlan> {
        self.stabilizers.iter().find(|p| p.ancilla == ancilla)
    }
}

/// Merges every ancilla fragment and parks data qubits between interactions.
///
/// All ancillas run the same slot layout, so green moves coincide globally.
/// The merged schedule is validated; any conflict is an error.
pub fn plan_cycle(grid: &UnitCellGrid, order: VisitOrder, timing: &Timing) -> Result<Cycle> {
    plan_cycle_staggered(grid, order, timing, 0.0)
}

/// As [`plan_cycle`], with odd-row ancillas delayed by `row_stagger_ns`.
///
/// Any nonzero stagger splits the green moves into two programs and is
/// reported as a conflict.
pub fn plan_cycle_staggered(
    grid: &UnitCellGrid,
    order: VisitOrder,
    timing: &Timing,
    row_stagger_ns: f64,
) -> Result<Cycle> {
    if !(row_stagger_ns.is_finite() && row_stagger_ns >= 0.0) {
        return Err(Error::InvalidParameter(format!("row stagger {row_stagger_ns} ns")));
    }
    let mut stabilizers = Vec::new();
    let mut omitted = Vec::new();
    for cell in grid.working_cells() {
        match plan_stabilizer(grid, cell, UnitCellGrid::stabilizer_kind(cell), order, timing) {
            Ok(mut p) => {
                if cell.row % 2 == 1 && row_stagger_ns > 0.0 {
                    p.schedule = p.schedule.shifted(row_stagger_ns);
                }
                stabilizers.push(p)
            }
            Err(Error::Unschedulable(_)) => omitted.push(cell),
            Err(e) => return Err(e),
        }
    }
    if stabilizers.is_empty() {
        return Err(Error::Unschedulable("no ancilla has a working neighbour".into()));
    }
    let mut schedule = Schedule::new();
    for p in &stabilizers {
        schedule.extend(p.schedule.clone());
    }
    let (_, end) = schedule.span();
    let mut parks = Vec::new();
    for cell in grid.working_cells() {
        let d = Qubit::data(cell);
        let mut busy: Vec<(f64, f64)> =
            schedule.events().iter().filter(|e| e.qubit == d).map(|e| (e.t0, e.t1)).collect();
        busy.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut t = 0.0;
        for (t0, t1) in busy.into_iter().chain(std::iter::once((end, end))) {
            if t0 > t {
                parks.push(Event { qubit: d, action: Action::Park, segment: Segment::Mz(cell), t0: t, t1: t0 });
            }
            t = t.max(t1);
        }
    }
    for e in parks {
        schedule.push(e);
    }
    let conflicts = validate_schedule(&schedule);
    if !conflicts.is_empty() {
        let list: Vec<String> = conflicts.iter().map(|c| c.to_string()).collect();
        return Err(Error::ScheduleConflict(list.join("; ")));
    }
    let degenerate = stabilizers.iter().all(|p| p.weight() < 2);
    Ok(Cycle { schedule, stabilizers, omitted, degenerate })
}

/// Duration, per-phase breakdown and accumulated shuttle error of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub duration_ns: f64,
    /// `(phase, ns)`: time covered by init, shuttle, gate and readout events;
    /// `idle` is the remainder.
    pub phases: Vec<(&'static str, f64)>,
    pub shuttle_um: f64,
    /// Summed over all qubits at the configured error per 10 μm.
    pub shuttle_error: f64,
    /// Largest single-qubit shuttle error.
    pub worst_qubit_error: f64,
}

impl CycleReport {
    pub fn phase(&self, name: &str) -> f64 {
        self.phases.iter().find(|p| p.0 == name).map_or(0.0, |p| p.1)
    }
}

impl fmt::Display for CycleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "duration_ns = {}", self.duration_ns)?;
        for (name, ns) in &self.phases {
            writeln!(f, "phase_{name}_ns = {ns}")?;
        }
        writeln!(f, "shuttle_um = {}", self.shuttle_um)?;
        writeln!(f, "shuttle_error = {:e}", self.shuttle_error)?;
        writeln!(f, "worst_qubit_error = {:e}", self.worst_qubit_error)
    }
}

fn union_length(mut iv: Vec<(f64, f64)>) -> f64 {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in iv {
        match cur {
            Some((c0, c1)) if a <= c1 => cur = Some((c0, c1.max(b))),
            _ => {
                if let Some((c0, c1)) = cur {
                    total += c1 - c0;
                }
                cur = Some((a, b));
            }
        }
    }
    total + cur.map_or(0.0, |(a, b)| b - a)
}

pub fn cycle_time(schedule: &Schedule, timing: &Timing) -> CycleReport {
    let (t0, t1) = schedule.span();
    let duration_ns = t1 - t0;
    let covered = |f: &dyn Fn(&Action) -> bool| {
        union_length(schedule.events().iter().filter(|e| f(&e.action)).map(|e| (e.t0, e.t1)).collect())
    };
    let init = covered(&|a| matches!(a, Action::Init));
    let shuttle = covered(&|a| matches!(a, Action::Shuttle { .. }));
    let gate = covered(&|a| matches!(a, Action::Gate1q | Action::Cnot { .. }));
    let readout = covered(&|a| matches!(a, Action::Readout));
    let idle = (duration_ns - init - shuttle - gate - readout).max(0.0);
    let per_um = timing.shuttle_error_per_10um / 10.0;
    let tracks = schedule.tracks();
    let shuttle_um: f64 = tracks.iter().map(QubitTrack::shuttle_um).sum();
    let worst = tracks.iter().map(QubitTrack::shuttle_um).fold(0.0, f64::max);
    CycleReport {
        duration_ns,
        phases: vec![("init", init), ("shuttle", shuttle), ("gate", gate), ("readout", readout), ("idle", idle)],
        shuttle_um,
        shuttle_error: shuttle_um * per_um,
        worst_qubit_error: worst * per_um,
    }
}

/// Control-signal count of a chip with `cells` unit cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalBudget {
    pub cells: usize,
    pub ac: usize,
    pub dc: usize,
    /// MHz-bandwidth readout lines, one per cell, counted within `ac`.
    pub readout_lines: usize,
    pub coax_budget: usize,
}

impl SignalBudget {
    /// AC lines fit the coax budget.
    pub fn fits(&self) -> bool {
        self.ac <= self.coax_budget
    }
}

impl fmt::Display for SignalBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cells = {}", self.cells)?;
        writeln!(f, "ac = {}", self.ac)?;
        writeln!(f, "dc = {}", self.dc)?;
        writeln!(f, "readout_lines = {}", self.readout_lines)?;
        writeln!(f, "coax_budget = {}", self.coax_budget)?;
        writeln!(f, "fits = {}", self.fits())
    }
}

pub fn signal_count(cells: usize) -> SignalBudget {
    SignalBudget {
        cells,
        ac: 14 * cells + 4,
        dc: 3 * cells + 4,
        readout_lines: cells,
        coax_budget: DEFAULT_COAX_BUDGET,
    }
}

/// Largest cell count whose AC lines fit `coax_budget`; `None` below the four
/// global signals.
pub fn max_unit_cells(coax_budget: usize) -> Option<usize> {
    coax_budget.checked_sub(4).map(|b| b / 14)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(r: usize, c: usize) -> UnitCellGrid {
        UnitCellGrid::new(r, c, &[]).unwrap()
    }

    fn cycle(g: &UnitCellGrid) -> Cycle {
        plan_cycle(g, VisitOrder::default(), &Timing::default()).unwrap()
    }

    #[test]
    fn single_cell_components() {
        let g = grid(1, 1);
        let c = g.components(CellId::new(0, 0));
        assert_eq!(c.ir, Segment::Ir(CellId::new(0, 0)));
        assert_eq!(c.mz, Segment::Mz(CellId::new(0, 0)));
        assert_eq!(c.junctions.len(), 3);
        assert!(c.lanes.iter().all(|(_, col)| *col != LaneColor::Green));
    }

    #[test]
    fn brick_wall_adjacency_from_overlapping_spans() {
        // oracle: cells in neighbouring rows touch iff their x spans overlap
        let g = grid(4, 4);
        let span = |c: CellId| {
            let l = c.col as f64 + 0.5 * (c.row % 2) as f64;
            (l, l + 1.0)
        };
        for a in g.working_cells() {
            let mut expect: Vec<CellId> = g
                .working_cells()
                .filter(|b| {
                    let (a0, a1) = span(a);
                    let (b0, b1) = span(*b);
                    match a.row.abs_diff(b.row) {
                        0 => a.col.abs_diff(b.col) == 1,
                        1 => a0 < b1 && b0 < a1,
                        _ => false,
                    }
                })
                .collect();
            expect.sort();
            assert_eq!(g.adjacent(a), expect, "cell {a}");
        }
        assert_eq!(g.adjacent(CellId::new(0, 0)), vec![CellId::new(0, 1), CellId::new(1, 0)]);
        assert_eq!(
            g.adjacent(CellId::new(1, 0)),
            vec![CellId::new(0, 0), CellId::new(0, 1), CellId::new(1, 1), CellId::new(2, 0), CellId::new(2, 1)]
        );
    }

    #[test]
    fn nine_by_eight_grid() {
        let g = grid(9, 8);
        assert_eq!(g.cell_count(), 72);
        assert_eq!(g.operable_qubits(), 144);
    }

    #[test]
    fn faulty_cell_outside_grid_rejected() {
        assert!(UnitCellGrid::new(2, 2, &[CellId::new(2, 0)]).is_err());
        assert!(UnitCellGrid::new(0, 2, &[]).is_err());
    }

    #[test]
    fn green_lanes_connect_rows_on_one_line() {
        let g = grid(3, 3);
        let mut lines: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for c in g.working_cells() {
            for (seg, col) in g.components(c).lanes {
                if let (Segment::Green { x2, row }, LaneColor::Green) = (seg, col) {
                    lines.entry(x2).or_default().insert(row);
                }
            }
        }
        // interior lines are continuous from the top row to the bottom row
        for x2 in 2..=5 {
            assert_eq!(lines[&x2], BTreeSet::from([0, 1]), "line {x2}");
        }
    }

    /// Data cells checked by an ancilla, from raw coordinates.
    fn support_oracle(g: &UnitCellGrid, a: CellId) -> Vec<(CellId, usize)> {
        let ax = 2 * a.col + a.row % 2 + 2;
        let mut out = Vec::new();
        for d in g.working_cells() {
            let dx = 2 * d.col + d.row % 2 + 1;
            let touch = (d.row == a.row && dx.abs_diff(ax) == 1) || (d.row.abs_diff(a.row) == 1 && dx == ax);
            if touch {
                let step = if d.row + 1 == a.row {
                    1
                } else if d.row == a.row + 1 {
                    4
                } else if dx < ax {
                    2
                } else {
                    3
                };
                out.push((d, step));
            }
        }
        out
    }

    #[test]
    fn stabilizers_commute_with_consistent_interleaving() {
        let g = grid(5, 5);
        let c = cycle(&g);
        let sup =
            |p: &StabilizerPlan| -> BTreeMap<CellId, usize> { p.visits.iter().map(|v| (v.data, v.step)).collect() };
        for p in &c.stabilizers {
            let mut want = support_oracle(&g, p.ancilla);
            want.sort();
            let got: Vec<(CellId, usize)> = sup(p).into_iter().collect();
            assert_eq!(got, want);
        }
        // truncated edge checks depend on how the patch boundary is cut
        let full = |k| c.stabilizers.iter().filter(move |p| p.kind == k && p.weight() == 4);
        for x in full(StabilizerKind::X) {
            for z in full(StabilizerKind::Z) {
                let (sx, sz) = (sup(x), sup(z));
                let shared: Vec<_> = sx.keys().filter(|k| sz.contains_key(k)).collect();
                assert_eq!(shared.len() % 2, 0, "{} vs {}", x.ancilla, z.ancilla);
                let orders: BTreeSet<bool> = shared.iter().map(|k| sx[k] < sz[k]).collect();
                assert!(orders.len() <= 1, "inconsistent interleaving {} vs {}", x.ancilla, z.ancilla);
            }
        }
    }

    #[test]
    fn interior_ancilla_visits_four_in_order() {
        let g = grid(3, 3);
        let t = Timing::default();
        let p = plan_stabilizer(&g, CellId::new(1, 0), StabilizerKind::Z, VisitOrder::default(), &t).unwrap();
        assert_eq!(p.two_qubit_gates(), 4);
        let steps: Vec<usize> = p.visits.iter().map(|v| v.step).collect();
        assert_eq!(steps, vec![1, 2, 3, 4]);
        let gate_targets: Vec<CellId> = p
            .schedule
            .events()
            .iter()
            .filter_map(|e| match e.action {
                Action::Cnot { partner, .. } if e.qubit.role == Role::Ancilla => Some(partner.cell),
                _ => None,
            })
            .collect();
        assert_eq!(gate_targets, vec![CellId::new(0, 1), CellId::new(1, 0), CellId::new(1, 1), CellId::new(2, 1)]);
    }

    #[test]
    fn corner_ancilla_visits_two() {
        let g = grid(3, 3);
        let p = plan_stabilizer(&g, CellId::new(0, 2), StabilizerKind::X, VisitOrder::default(), &Timing::default())
            .unwrap();
        assert_eq!(p.weight(), 2);
        assert_eq!(p.two_qubit_gates(), 2);
    }

    #[test]
    fn x_and_z_share_routing_with_flipped_control() {
        let g = grid(3, 3);
        let t = Timing::default();
        let cell = CellId::new(1, 0);
        let x = plan_stabilizer(&g, cell, StabilizerKind::X, VisitOrder::default(), &t).unwrap();
        let z = plan_stabilizer(&g, cell, StabilizerKind::Z, VisitOrder::default(), &t).unwrap();
        let route = |p: &StabilizerPlan| -> Vec<(Segment, f64, f64)> {
            p.schedule
                .events()
                .iter()
                .filter(|e| matches!(e.action, Action::Shuttle { .. }))
                .map(|e| (e.segment, e.t0, e.t1))
                .collect()
        };
        assert_eq!(route(&x), route(&z));
        let ctrl = |p: &StabilizerPlan| -> Vec<bool> {
            p.schedule
                .events()
                .iter()
                .filter_map(|e| match e.action {
                    Action::Cnot { control, .. } if e.qubit.role == Role::Ancilla => Some(control),
                    _ => None,
                })
                .collect()
        };
        assert!(ctrl(&x).iter().all(|c| *c));
        assert!(ctrl(&z).iter().all(|c| !*c));
    }

    #[test]
    fn single_cell_cycle_is_degenerate() {
        let c = cycle(&grid(1, 1));
        assert!(c.degenerate);
        assert!(!cycle(&grid(2, 2)).degenerate);
    }

    #[test]
    fn ancilla_without_neighbours_is_unschedulable() {
        // the only neighbour of a 1×2 grid's right ancilla is its own data qubit
        let g = UnitCellGrid::new(2, 1, &[CellId::new(1, 0)]).unwrap();
        let p = plan_stabilizer(&g, CellId::new(0, 0), StabilizerKind::X, VisitOrder::default(), &Timing::default());
        assert_eq!(p.unwrap().weight(), 1);
        let bad = plan_stabilizer(&g, CellId::new(1, 0), StabilizerKind::Z, VisitOrder::default(), &Timing::default());
        assert!(matches!(bad, Err(Error::Unschedulable(_))));
    }

    #[test]
    fn three_by_three_cycle_is_conflict_free() {
        let c = cycle(&grid(3, 3));
        assert!(validate_schedule(&c.schedule).is_empty());
        assert_eq!(c.stabilizers.len(), 9);
        assert!(c.omitted.is_empty());
    }

    #[test]
    fn faulty_cell_drops_only_its_interactions() {
        let full = cycle(&grid(3, 3));
        let bad = CellId::new(1, 1);
        let g = UnitCellGrid::new(3, 3, &[bad]).unwrap();
        let c = cycle(&g);
        assert!(validate_schedule(&c.schedule).is_empty());
        assert!(c.stabilizer(bad).is_none());
        for p in &full.stabilizers {
            if p.ancilla == bad {
                continue;
            }
            let q = c.stabilizer(p.ancilla).unwrap();
            let expect: Vec<CellId> = p.visits.iter().map(|v| v.data).filter(|d| *d != bad).collect();
            let got: Vec<CellId> = q.visits.iter().map(|v| v.data).collect();
            assert_eq!(got, expect);
        }
        assert!(c.schedule.events().iter().all(|e| e.qubit.cell != bad && e.segment != Segment::Mz(bad)));
    }

    #[test]
    fn validator_cases() {
        assert!(validate_schedule(&Schedule::new()).is_empty());
        let q = |c| Qubit::ancilla(CellId::new(0, c));
        let seg = Segment::Red(CellId::new(0, 0));
        let sh = Action::Shuttle { distance_um: 5.0, direction: 1 };
        let s = Schedule::from_events(vec![
            Event { qubit: q(0), action: sh, segment: seg, t0: 0.0, t1: 10.0 },
            Event { qubit: q(1), action: sh, segment: seg, t0: 5.0, t1: 15.0 },
        ]);
        let c = validate_schedule(&s);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, ConflictKind::DoubleOccupancy);
    }

    #[test]
    fn green_programs_must_agree() {
        let q = |c| Qubit::ancilla(CellId::new(0, c));
        let g = |x2, dir, t0| Event {
            qubit: q(x2),
            action: Action::Shuttle { distance_um: 10.0, direction: dir },
            segment: Segment::Green { x2, row: 0 },
            t0,
            t1: t0 + 1250.0,
        };
        let ok = Schedule::from_events(vec![g(2, 1, 0.0), g(4, 1, 0.0)]);
        assert!(validate_schedule(&ok).is_empty());
        let opposite = Schedule::from_events(vec![g(2, 1, 0.0), g(4, -1, 0.0)]);
        assert_eq!(validate_schedule(&opposite)[0].kind, ConflictKind::GreenAsync);
        let staggered = Schedule::from_events(vec![g(2, 1, 0.0), g(4, 1, 300.0)]);
        assert_eq!(validate_schedule(&staggered)[0].kind, ConflictKind::GreenAsync);
    }

    #[test]
    fn ir_zone_excludes_its_lanes() {
        let cell = CellId::new(0, 1);
        let s = Schedule::from_events(vec![
            Event {
                qubit: Qubit::ancilla(cell),
                action: Action::Readout,
                segment: Segment::Ir(cell),
                t0: 0.0,
                t1: 100.0,
            },
            Event {
                qubit: Qubit::ancilla(CellId::new(0, 0)),
                action: Action::Shuttle { distance_um: 5.0, direction: 1 },
                segment: Segment::Red(cell),
                t0: 50.0,
                t1: 60.0,
            },
        ]);
        let c = validate_schedule(&s);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, ConflictKind::IrExclusion);
    }

    #[test]
    fn staggered_rows_desynchronize_green_lanes() {
        let g = grid(3, 3);
        let r = plan_cycle_staggered(&g, VisitOrder::default(), &Timing::default(), 100.0);
        assert!(matches!(r, Err(Error::ScheduleConflict(_))));
    }

    #[test]
    fn lane_traversal_time() {
        let t = Timing::default();
        assert!((t.traversal_ns(10.0) - 10e-6 / 8.0 * 1e9).abs() < 1e-9);
        let s = Schedule::from_events(vec![Event {
            qubit: Qubit::ancilla(CellId::new(0, 0)),
            action: Action::Shuttle { distance_um: 10.0, direction: 1 },
            segment: Segment::Green { x2: 2, row: 0 },
            t0: 0.0,
            t1: t.traversal_ns(10.0),
        }]);
        let r = cycle_time(&s, &t);
        assert!((r.duration_ns - 1250.0).abs() < 1e-9);
        assert!((r.shuttle_error - 1e-3).abs() < 1e-15);
        assert_eq!(cycle_time(&Schedule::new(), &t).duration_ns, 0.0);
    }

    #[test]
    fn three_by_three_timing_and_budget() {
        let t = Timing::default();
        let c = cycle(&grid(3, 3));
        let r = cycle_time(&c.schedule, &t);
        // two vertical slots, two horizontal slots, init and readout
        let v = 2.0 * 10.0 / 8.0 * 1e3;
        let h = 2.0 * 5.0 / 8.0 * 1e3;
        let slot_extra = 2.0 * 50.0 + 150.0;
        let expect = 200.0 + 2.0 * (v + slot_extra) + 2.0 * (h + slot_extra) + 10_000.0;
        assert!((r.duration_ns - expect).abs() < 1e-6, "{}", r.duration_ns);
        let phase_sum: f64 = r.phases.iter().map(|p| p.1).sum();
        assert!((phase_sum - r.duration_ns).abs() < 1e-6);
        assert!(r.phase("readout") > 0.5 * r.duration_ns);
        for (name, ns) in &r.phases {
            if *name != "readout" {
                assert!(*ns < r.phase("readout"), "{name}");
            }
        }
        // interior ancilla: 2×10 μm up, 2×5 left, 2×5 right, 2×10 down
        let interior =
            c.schedule.tracks().into_iter().find(|tr| tr.qubit == Qubit::ancilla(CellId::new(1, 0))).unwrap();
        assert!((interior.shuttle_um() - 60.0).abs() < 1e-9);
        let total: f64 =
            c.stabilizers.iter().map(|p| p.visits.iter().map(|v| 2.0 * t.leg_um(v.direction)).sum::<f64>()).sum();
        assert!((r.shuttle_error - total / 10.0 * 1e-3).abs() < 1e-12);
        assert!((r.worst_qubit_error - 6e-3).abs() < 1e-12);
    }

    #[test]
    fn signal_counts() {
        assert_eq!((signal_count(0).ac, signal_count(0).dc), (4, 4));
        let b = signal_count(72);
        assert_eq!((b.ac, b.dc), (1012, 220));
        assert!(!b.fits());
        assert_eq!(max_unit_cells(1000), Some(71));
        assert_eq!(max_unit_cells(1012), Some(72));
        assert_eq!(max_unit_cells(3), None);
    }

    proptest! {
        #[test]
        fn signal_count_closed_form(n in 0usize..100_000) {
            let b = signal_count(n);
            prop_assert_eq!(b.ac, 14 * n + 4);
            prop_assert_eq!(b.dc, 3 * n + 4);
            if let Some(m) = max_unit_cells(b.ac) {
                prop_assert_eq!(m, n);
            }
        }

        #[test]
        fn planned_cycles_validate(rows in 1usize..=5, cols in 1usize..=5, mask in any::<u32>(), dt in 0.0f64..1e6) {
            let faulty: Vec<CellId> = (0..rows * cols)
                .filter(|i| mask >> (i % 32) & 1 == 1 && i % 3 == 0)
                .map(|i| CellId::new(i / cols, i % cols))
                .collect();
            let g = UnitCellGrid::new(rows, cols, &faulty).unwrap();
            if let Ok(c) = plan_cycle(&g, VisitOrder::default(), &Timing::default()) {
                prop_assert!(validate_schedule(&c.schedule).is_empty());
                prop_assert!(validate_schedule(&c.schedule.shifted(dt)).is_empty());
                for tr in c.schedule.tracks().iter().step_by(3) {
                    prop_assert!(validate_schedule(&c.schedule.without_qubit(tr.qubit)).is_empty());
                }
            }
        }
    }
}
