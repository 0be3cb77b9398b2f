use num_complex::Complex64;

use super::propagate::CMat;
use crate::{Error, Result};

/// Computational subspace given by an orthonormal basis (columns of `basis`).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub basis: CMat,
}

impl Subspace {
    /// Span of the listed standard basis vectors of a `full`-dimensional space.
    pub fn from_indices(full: usize, indices: &[usize]) -> Result<Self> {
        if indices.len() > full || indices.iter().any(|&i| i >= full) {
            return Err(Error::Dimension(format!("indices {indices:?} do not fit dimension {full}")));
        }
        let mut basis = CMat::zeros(full, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            basis[(i, c)] = Complex64::new(1.0, 0.0);
        }
        Ok(Self { basis })
    }

    pub fn from_basis(basis: CMat) -> Result<Self> {
        let d = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let err = (gram - CMat::identity(d, d)).norm();
        if err > 1e-9 {
            return Err(Error::NotUnitary(err));
        }
        Ok(Self { basis })
    }

    pub fn full_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Projector P = B·B† on the full space.
    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }
}

/// Average gate fidelity and leakage of `u` against `target` on `subspace`.
///
/// With `M = V†·B†·U·B`: `F = (Tr(M†M) + |Tr M|²)/(d(d+1))`, `L = 1 − Tr(M†M)/d`.
pub fn process_fidelity_with_leakage(u: &CMat, target: &CMat, subspace: &Subspace) -> Result<(f64, f64)> {
    let d = subspace.dim();
    let full = subspace.full_dim();
    if u.nrows() != full || u.ncols() != full {
        return Err(Error::Dimension(format!("propagator is {}×{}, subspace lives in {full}", u.nrows(), u.ncols())));
    }
    if target.nrows() != d || target.ncols() != d {
        return Err(Error::Dimension(format!(
            "target is {}×{}, subspace has dimension {d}",
            target.nrows(),
            target.ncols()
        )));
    }
    let uerr = (target.adjoint() * target - CMat::identity(d, d)).norm();
    if uerr > 1e-9 {
        return Err(Error::NotUnitary(uerr));
    }
    let m = target.adjoint() * subspace.basis.adjoint() * u * &subspace.basis;
    let mm = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let tr = m.trace().norm_sqr();
    let df = d as f64;
    let f = ((mm + tr) / (df * (df + 1.0))).clamp(0.0, 1.0);
    let l = (1.0 - mm / df).clamp(0.0, 1.0);
    Ok((f, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physcore::SeedSpec;
    use nalgebra::DVector;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
        let g = CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let mut q = q;
        for j in 0..n {
            let ph = r[(j, j)] / r[(j, j)].norm();
            for i in 0..n {
                q[(i, j)] *= ph;
            }
        }
        q
    }

    #[test]
    fn direct_sum_with_leaked_block_is_perfect() {
        let mut rng = SeedSpec::new(3).rng();
        let v = haar_unitary(2, &mut rng);
        let w = haar_unitary(2, &mut rng);
        let mut u = CMat::zeros(4, 4);
        u.view_mut((0, 0), (2, 2)).copy_from(&v);
        u.view_mut((2, 2), (2, 2)).copy_from(&w);
        let s = Subspace::from_indices(4, &[0, 1]).unwrap();
        let (f, l) = process_fidelity_with_leakage(&u, &v, &s).unwrap();
        assert!((f - 1.0).abs() < 1e-12 && l.abs() < 1e-12);
    }

    #[test]
    fn full_leakage_gives_zero() {
        let mut u = CMat::zeros(4, 4);
        for (a, b) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
            u[(a, b)] = Complex64::new(1.0, 0.0);
        }
        let s = Subspace::from_indices(4, &[0, 1]).unwrap();
        let (f, l) = process_fidelity_with_leakage(&u, &CMat::identity(2, 2), &s).unwrap();
        assert!(f.abs() < 1e-15 && (l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_haar_state_average() {
        let mut rng = SeedSpec::new(11).rng();
        let u = haar_unitary(4, &mut rng);
        let v = haar_unitary(2, &mut rng);
        let s = Subspace::from_indices(4, &[0, 1]).unwrap();
        let (f, _) = process_fidelity_with_leakage(&u, &v, &s).unwrap();
        let n = 100_000;
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let psi = haar_unitary(2, &mut rng).column(0).into_owned();
            let full = &s.basis * &psi;
            let out = &u * full;
            let ideal: DVector<Complex64> = &s.basis * (&v * &psi);
            let x = ideal.dotc(&out).norm_sqr();
            acc += x;
            acc2 += x * x;
        }
        let mean = acc / n as f64;
        let se = ((acc2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - f).abs() < 4.0 * se, "oracle {mean} ± {se}, formula {f}");
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let s = Subspace::from_indices(4, &[0, 1]).unwrap();
        assert!(process_fidelity_with_leakage(&CMat::identity(2, 2), &CMat::identity(2, 2), &s).is_err());
        assert!(Subspace::from_indices(2, &[0, 1, 2]).is_err());
    }
}
