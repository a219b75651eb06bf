use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Metric;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Radial {
    Gaussian,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    mu0: Vec<f64>,
    sigma0: Vec<Vec<f64>>,
    radial: Radial,
}

/// Core elliptical model with location `mu0`, scatter `sigma0` and a radial
/// generator. Only the Gaussian generator is provided.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct EllipticalModel {
    mu0: DVector<f64>,
    sigma0: DMatrix<f64>,
    radial: Radial,
    lower: DMatrix<f64>,
}

impl EllipticalModel {
    pub fn new(mu0: DVector<f64>, sigma0: DMatrix<f64>) -> Result<Self> {
        if sigma0.nrows() != mu0.len() {
            return Err(crate::Error::DimensionMismatch { expected: mu0.len(), found: sigma0.nrows() });
        }
        let metric = Metric::new(&sigma0)?;
        Ok(EllipticalModel { lower: metric.lower(), mu0, sigma0, radial: Radial::Gaussian })
    }

    /// Multivariate standard normal in `d` dimensions.
    pub fn standard(d: usize) -> Self {
        Self::new(DVector::zeros(d), DMatrix::identity(d, d)).expect("identity is SPD")
    }

    /// Equicorrelated unit-variance normal with correlation `r`.
    pub fn equicorrelated(d: usize, r: f64) -> Result<Self> {
        let sigma = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { r });
        Self::new(DVector::zeros(d), sigma)
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    pub fn radial(&self) -> Radial {
        self.radial
    }

    /// Lower Cholesky factor of `sigma0`.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn metric(&self) -> Metric {
        Metric::new(&self.sigma0).expect("validated at construction")
    }

    /// A standard spherical draw `w`; the observation is `mu0 + L w`.
    pub fn sample_spherical<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(self.dim(), |_, _| rng.sample(StandardNormal))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let w = self.sample_spherical(rng);
        &self.mu0 + &self.lower * w
    }
}

impl TryFrom<ModelRepr> for EllipticalModel {
    type Error = crate::Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let d = r.mu0.len();
        if r.sigma0.len() != d || r.sigma0.iter().any(|row| row.len() != d) {
            return Err(crate::Error::Parse("sigma0 must be a d×d nested array".into()));
        }
        let sigma = DMatrix::from_fn(d, d, |i, j| r.sigma0[i][j]);
        let mut m = Self::new(DVector::from_vec(r.mu0), sigma)?;
        m.radial = r.radial;
        Ok(m)
    }
}

impl From<EllipticalModel> for ModelRepr {
    fn from(m: EllipticalModel) -> Self {
        let d = m.dim();
        ModelRepr {
            mu0: m.mu0.iter().copied().collect(),
            sigma0: (0..d).map(|i| (0..d).map(|j| m.sigma0[(i, j)]).collect()).collect(),
            radial: m.radial,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standardized_draws_are_spherical() {
        let model = EllipticalModel::new(
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            DMatrix::from_row_slice(3, 3, &[2.0, 0.6, 0.2, 0.6, 1.0, -0.3, 0.2, -0.3, 1.5]),
        )
        .unwrap();
        let metric = model.metric();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40_000;
        let mut sum = DVector::<f64>::zeros(3);
        let mut outer = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n {
            let w = metric.whiten(&(model.sample(&mut rng) - model.mu0()));
            sum += &w;
            outer += &w * w.transpose();
        }
        let mean = sum / n as f64;
        let cov = outer / n as f64;
        assert!(mean.amax() < 0.03, "{mean}");
        assert!((cov - DMatrix::identity(3, 3)).amax() < 0.04);
    }

    #[test]
    fn serde_roundtrip_rejects_bad_scatter() {
        let m = EllipticalModel::equicorrelated(2, 0.9).unwrap();
        let js = serde_json::to_string(&m).unwrap();
        let back: EllipticalModel = serde_json::from_str(&js).unwrap();
        assert_eq!(back.sigma0(), m.sigma0());
        let bad = r#"{"mu0":[0,0],"sigma0":[[1,2],[2,1]],"radial":"gaussian"}"#;
        assert!(serde_json::from_str::<EllipticalModel>(bad).is_err());
    }
}
