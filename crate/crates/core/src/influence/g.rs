use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::McConfig;
use crate::numerics::{EllipticalModel, Metric, RhoSpec};
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

/// Distribution whose estimating function is evaluated.
#[derive(Debug, Clone)]
pub enum Sampler {
    PointMass(DVector<f64>),
    Core(EllipticalModel),
    /// `H(I, z)`: a core draw with the cells in `cells` replaced by `z`.
    Replace { model: EllipticalModel, cells: Vec<usize>, z: DVector<f64> },
}

impl Sampler {
    fn dim(&self) -> usize {
        match self {
            Sampler::PointMass(z) => z.len(),
            Sampler::Core(m) => m.dim(),
            Sampler::Replace { model, .. } => model.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GValue {
    pub value: DVector<f64>,
    pub stderr: DVector<f64>,
}

/// `g(H, m, Σ) = E_H[ψ(d²(X, m, Σ)) (X − m)]`, exact for a point mass and by
/// Monte Carlo otherwise.
pub fn g_function(
    sampler: &Sampler,
    m: &DVector<f64>,
    sigma: &DMatrix<f64>,
    rho: &RhoSpec,
    mc: &McConfig,
) -> Result<GValue> {
    let d = sampler.dim();
    if m.len() != d || sigma.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, found: m.len() });
    }
    let metric = Metric::new(sigma)?;
    let term = |x: &DVector<f64>| -> DVector<f64> {
        let r = x - m;
        let s = metric.whiten(&r).norm_squared();
        r * rho.psi_sq(s)
    };
    let (model, cells, z) = match sampler {
        Sampler::PointMass(z) => return Ok(GValue { value: term(z), stderr: DVector::zeros(d) }),
        Sampler::Core(model) => (model, &[][..], None),
        Sampler::Replace { model, cells, z } => {
            if z.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: z.len() });
            }
            if let Some(&k) = cells.iter().find(|&&k| k >= d) {
                return Err(Error::invalid(format!("cell index {k} out of range for d = {d}")));
            }
            (model, &cells[..], Some(z))
        }
    };
    mc.validate()?;
    let key = StreamKey::new(mc.seed).child(tag("g-function"));
    let sums: Vec<(DVector<f64>, DVector<f64>)> = mc
        .batches()
        .par_iter()
        .enumerate()
        .map(|(b, &(s, e))| {
            let mut rng = key.stream(b as u64);
            let mut s1 = DVector::zeros(d);
            let mut s2 = DVector::zeros(d);
            for _ in s..e {
                let mut x = model.sample(&mut rng);
                if let Some(z) = z {
                    for &k in cells {
                        x[k] = z[k];
                    }
                }
                let t = term(&x);
                s2 += t.component_mul(&t);
                s1 += t;
            }
            (s1, s2)
        })
        .collect();
    let n = mc.n_draws as f64;
    let (s1, s2) = sums.into_iter().fold((DVector::zeros(d), DVector::zeros(d)), |a, b| (a.0 + b.0, a.1 + b.1));
    let mean = s1 / n;
    let stderr = (s2 / n - mean.component_mul(&mean)).map(|v| (v.max(0.0) / n).sqrt());
    Ok(GValue { value: mean, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho() -> RhoSpec {
        RhoSpec::tukey_c2(6.0).unwrap()
    }

    #[test]
    fn point_mass_is_exact() {
        let z = DVector::from_vec(vec![1.0, -0.5]);
        let m = DVector::from_vec(vec![0.2, 0.1]);
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let g = g_function(&Sampler::PointMass(z.clone()), &m, &sigma, &rho(), &McConfig::default()).unwrap();
        let s = crate::numerics::mahalanobis_sq(&z, &m, &sigma).unwrap();
        assert_eq!(g.value, (&z - &m) * rho().psi_sq(s));
        assert_eq!(g.stderr, DVector::zeros(2));
    }

    #[test]
    fn vanishes_at_the_model() {
        let model = EllipticalModel::equicorrelated(3, 0.5).unwrap();
        let mc = McConfig { n_draws: 50_000, seed: 4, batch: 1000 };
        let g = g_function(&Sampler::Core(model.clone()), model.mu0(), model.sigma0(), &rho(), &mc).unwrap();
        for k in 0..3 {
            assert!(g.value[k].abs() < 3.0 * g.stderr[k], "{} ± {}", g.value[k], g.stderr[k]);
        }
    }

    #[test]
    fn replacing_by_the_center_in_an_independent_cell() {
        let model = EllipticalModel::standard(2);
        let z = DVector::from_vec(vec![0.0, 7.0]);
        let mc = McConfig { n_draws: 50_000, seed: 5, batch: 1000 };
        let s = Sampler::Replace { model: model.clone(), cells: vec![0], z };
        let g = g_function(&s, model.mu0(), model.sigma0(), &rho(), &mc).unwrap();
        assert_eq!(g.value[0], 0.0);
        assert!(g.value[1].abs() < 3.0 * g.stderr[1]);
    }
}
