use nalgebra::DVector;
use rayon::prelude::*;

use super::{Functional, InfluenceContext, InfluenceResult};
use crate::Result;

/// Running first and second moments of per-draw contribution vectors.
struct Moments {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Moments { s1: vec![0.0; d], s2: vec![0.0; d] }
    }

    fn push(&mut self, v: &[f64]) {
        for ((a, b), x) in self.s1.iter_mut().zip(self.s2.iter_mut()).zip(v) {
            *a += x;
            *b += x * x;
        }
    }

    fn merge(mut self, other: Moments) -> Self {
        for (a, b) in self.s1.iter_mut().zip(&other.s1) {
            *a += b;
        }
        for (a, b) in self.s2.iter_mut().zip(&other.s2) {
            *a += b;
        }
        self
    }

    /// Mean and its standard error, both divided by `scale`.
    fn finish(self, n: usize, scale: f64) -> (DVector<f64>, DVector<f64>) {
        let n = n as f64;
        let mean: Vec<f64> = self.s1.iter().map(|s| s / n).collect();
        let se: Vec<f64> =
            self.s2.iter().zip(&mean).map(|(s2, m)| ((s2 / n - m * m).max(0.0) / n).sqrt() / scale).collect();
        let d = mean.len();
        (DVector::from_iterator(d, mean.into_iter().map(|m| m / scale)), DVector::from_vec(se))
    }
}

impl InfluenceContext {
    /// Row-wise (point-mass) influence `ψ(d²(z, μ₀, Σ₀))(z − μ₀)/A_ψ`; for the
    /// coordinatewise functional, the univariate formula in each coordinate.
    pub fn if_fdcm(&self, z: &DVector<f64>) -> Result<InfluenceResult> {
        self.check_z(z)?;
        let a = z - self.model().mu0();
        let value = match self.functional() {
            Functional::Multivariate => {
                let s = a.dot(&(self.precision() * &a));
                &a * (self.rho().psi_sq(s) / self.a_psi())
            }
            Functional::Coordinatewise => {
                let sigma = self.model().sigma0();
                DVector::from_fn(a.len(), |j, _| self.rho().psi_sq(a[j] * a[j] / sigma[(j, j)]) * a[j] / self.a_psi())
            }
        };
        Ok(InfluenceResult { z: z.clone(), stderr: DVector::zeros(value.len()), value })
    }

    /// Cellwise influence `Σₖ g(H({k}, z), μ₀, Σ₀)/A_ψ`, by Monte Carlo over
    /// the context's common core draws.
    pub fn if_ficm(&self, z: &DVector<f64>) -> Result<InfluenceResult> {
        self.check_z(z)?;
        let d = self.dim();
        let a = z - self.model().mu0();
        let draws = self.draws();
        let rho = *self.rho();
        let p_diag: Vec<f64> = self.precision().diagonal().iter().copied().collect();
        let var: Vec<f64> = self.model().sigma0().diagonal().iter().copied().collect();
        let functional = self.functional();
        let point: Vec<f64> = (0..d).map(|j| rho.psi_sq(a[j] * a[j] / var[j]) * a[j]).collect();

        let batches = self.mc().batches();
        let moments = batches
            .par_iter()
            .map(|&(s, e)| {
                let mut m = Moments::new(d);
                let mut v = vec![0.0; d];
                for i in s..e {
                    let r = draws.r.column(i);
                    match functional {
                        Functional::Multivariate => {
                            let pr = draws.pr.column(i);
                            let q = draws.q[i];
                            let mut total = 0.0;
                            for k in 0..d {
                                let delta = a[k] - r[k];
                                let s2 = q + 2.0 * delta * pr[k] + delta * delta * p_diag[k];
                                let psi = rho.psi_sq(s2);
                                total += psi;
                                v[k] = psi * delta;
                            }
                            for k in 0..d {
                                v[k] += total * r[k];
                            }
                        }
                        Functional::Coordinatewise => {
                            for j in 0..d {
                                let rj = r[j];
                                v[j] = point[j] + (d - 1) as f64 * rho.psi_sq(rj * rj / var[j]) * rj;
                            }
                        }
                    }
                    m.push(&v);
                }
                m
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Moments::new(d), Moments::merge);
        let (value, stderr) = moments.finish(self.mc().n_draws, self.a_psi());
        Ok(InfluenceResult { z: z.clone(), value, stderr })
    }

    /// Influence along the partially spoiled path: the average of the
    /// row-wise and cellwise influence functions.
    pub fn if_psicm(&self, z: &DVector<f64>) -> Result<InfluenceResult> {
        let fd = self.if_fdcm(z)?;
        let fi = self.if_ficm(z)?;
        Ok(InfluenceResult { z: z.clone(), value: (fd.value + fi.value) * 0.5, stderr: fi.stderr * 0.5 })
    }

    /// Influence along the partially clean path, identical to the cellwise one.
    pub fn if_pcicm(&self, z: &DVector<f64>) -> Result<InfluenceResult> {
        self.if_ficm(z)
    }
}

/// Influence function on a grid of contamination points.
pub fn if_surface(ctx: &InfluenceContext, grid: &[DVector<f64>]) -> Result<Vec<InfluenceResult>> {
    grid.iter().map(|z| ctx.evaluate(z)).collect()
}
