//! Control-signal count against the coaxial-line budget.

use spinbus::archsched::*;

fn main() {
    for n in [1, 10, 72, 100] {
        let b = signal_count(n);
        println!("N = {n:>3}: AC {:>5}, DC {:>4}, fits {} lines: {}", b.ac, b.dc, b.coax_budget, b.fits());
    }
    for budget in [1000, 1012] {
        println!("{budget} lines -> at most {:?} unit cells", max_unit_cells(budget));
    }
}
