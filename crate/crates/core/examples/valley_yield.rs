//! Fraction of random valley-splitting landscapes that still allow a 99.9%
//! EDSR gate after calibration.

use num_complex::Complex64;
use spinbus::gatesim::*;
use spinbus::physcore::*;

fn main() -> spinbus::Result<()> {
    let units = UnitSystem::default();
    let field = SpinField::linear_mt(&units, 20.0, 0.0, 0.0, 0.075);
    let base = SingleQubitModel::uniform(field, Complex64::new(50.0, 0.0), 0.0);
    for mean in [10.0, 100.0] {
        let opts = YieldOptions { ensemble: 20, mean_splitting: mean, ..Default::default() };
        let r = valley_yield(&base, &opts, SeedSpec::new(2024))?;
        println!(
            "<E_VS> = {mean:>5} ueV: {}/{} draws pass, 95% interval [{:.2}, {:.2}]",
            r.successes, r.ensemble, r.wilson_low, r.wilson_high
        );
    }
    Ok(())
}
