//! Surface-code cycle on a 3×3 brick-wall grid: ancilla routing, conflict
//! check, timing breakdown and the effect of a faulty cell.

use spinbus::archsched::*;

fn main() -> spinbus::Result<()> {
    let timing = Timing::default();
    let grid = UnitCellGrid::new(3, 3, &[])?;
    let cycle = plan_cycle(&grid, VisitOrder::default(), &timing)?;
    println!("conflicts: {}", validate_schedule(&cycle.schedule).len());
    let p = cycle.stabilizer(CellId::new(1, 0)).expect("interior ancilla");
    for v in &p.visits {
        println!("  step {}: {:?} -> data {}", v.step, v.direction, v.data);
    }
    print!("{}", cycle_time(&cycle.schedule, &timing));

    let faulty = UnitCellGrid::new(3, 3, &[CellId::new(1, 1)])?;
    let c = plan_cycle(&faulty, VisitOrder::default(), &timing)?;
    let weights: Vec<usize> = c.stabilizers.iter().map(|s| s.weight()).collect();
    println!("with (1,1) faulty: {} stabilizers, weights {weights:?}", c.stabilizers.len());
    Ok(())
}
