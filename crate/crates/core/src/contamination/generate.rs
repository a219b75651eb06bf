use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{ContaminationSpec, IndicatorLaw, OutlierGen};
use crate::numerics::EllipticalModel;
use crate::rng::{tag, StreamKey};
use crate::{Error, Result};

/// One draw of `diag(B)`.
pub fn sample_indicators<R: Rng + ?Sized>(
    spec: &ContaminationSpec,
    d: usize,
    rng: &mut R,
) -> Result<Vec<bool>> {
    Ok(draw_indicators(&spec.law()?, d, rng))
}

fn draw_indicators<R: Rng + ?Sized>(law: &IndicatorLaw, d: usize, rng: &mut R) -> Vec<bool> {
    let branch: f64 = rng.random();
    let cells: Vec<f64> = (0..d).map(|_| rng.random()).collect();
    if branch < law.p_all {
        vec![true; d]
    } else if branch < law.p_all + law.p_none {
        vec![false; d]
    } else {
        cells.into_iter().map(|u| u < law.beta).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Contaminated {
    pub x: DMatrix<f64>,
    pub b: DMatrix<u8>,
}

impl Contaminated {
    /// Number of contaminated cells in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        self.b.row_iter().map(|r| r.iter().filter(|&&v| v == 1).count()).collect()
    }
}

/// Applies `X = (I − B)Y + BZ` row by row. Row `i` uses its own substream of
/// `key`, so the output does not depend on the thread schedule.
pub fn contaminate(y: &DMatrix<f64>, spec: &ContaminationSpec, key: StreamKey) -> Result<Contaminated> {
    let (n, d) = y.shape();
    let law = spec.validate(d)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "clean data", value: f64::NAN });
    }
    let key = key.child(tag("contaminate"));
    let rows: Vec<(Vec<f64>, Vec<bool>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i as u64);
            let b = draw_indicators(&law, d, &mut rng);
            let z: Vec<f64> = match &spec.outlier {
                OutlierGen::PointMass { z } => z.clone(),
                OutlierGen::GaussianShift { mean, var } => {
                    let sd = var.sqrt();
                    mean.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect()
                }
                OutlierGen::AdditiveShift { t } => (0..d).map(|j| y[(i, j)] + t).collect(),
            };
            let x = (0..d).map(|j| if b[j] { z[j] } else { y[(i, j)] }).collect();
            (x, b)
        })
        .collect();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i].0[j]);
    let b = DMatrix::from_fn(n, d, |i, j| rows[i].1[j] as u8);
    Ok(Contaminated { x, b })
}

/// `n` clean rows from the core model, one substream per row.
pub fn sample_clean(model: &EllipticalModel, n: usize, key: StreamKey) -> DMatrix<f64> {
    let key = key.child(tag("clean"));
    let d = model.dim();
    let rows: Vec<DVector<f64>> =
        (0..n).into_par_iter().map(|i| model.sample(&mut key.stream(i as u64))).collect();
    DMatrix::from_fn(n, d, |i, j| rows[i][j])
}

/// A draw from `H(I, z)`: `Y ~ H₀` with the coordinates in `cells` set to `z`.
pub fn sample_h_i_z<R: Rng + ?Sized>(
    cells: &[usize],
    z: &DVector<f64>,
    model: &EllipticalModel,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let d = model.dim();
    if z.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: z.len() });
    }
    if let Some(&bad) = cells.iter().find(|&&k| k >= d) {
        return Err(Error::invalid(format!("cell index {bad} out of range for d = {d}")));
    }
    let mut y = model.sample(rng);
    for &k in cells {
        y[k] = z[k];
    }
    Ok(y)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::contamination::{delta_k, ContaminationModel};
    use crate::experiments::theorem1_transform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(model: ContaminationModel, eps: f64) -> ContaminationSpec {
        ContaminationSpec::new(model, eps, OutlierGen::AdditiveShift { t: 5.0 }).unwrap()
    }

    fn models() -> Vec<ContaminationModel> {
        vec![
            ContaminationModel::Fdcm,
            ContaminationModel::Ficm,
            ContaminationModel::Psicm,
            ContaminationModel::PcicmI { gamma: 0.4 },
            ContaminationModel::PcicmIi,
        ]
    }

    #[test]
    fn degenerate_epsilons() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in models() {
            for _ in 0..100 {
                assert!(sample_indicators(&spec(m, 0.0), 6, &mut rng).unwrap().iter().all(|b| !b));
            }
        }
        for _ in 0..100 {
            let b = sample_indicators(&spec(ContaminationModel::Fdcm, 1.0), 6, &mut rng).unwrap();
            assert!(b.iter().all(|&b| b));
        }
    }

    #[test]
    fn empirical_marginals_and_cell_counts() {
        let (d, eps, n) = (5usize, 0.1, 100_000usize);
        for (mi, m) in models().into_iter().enumerate() {
            let s = spec(m, eps);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + mi as u64);
            let mut cell_hits = vec![0usize; d];
            let mut counts = vec![0usize; d + 1];
            for _ in 0..n {
                let b = sample_indicators(&s, d, &mut rng).unwrap();
                for (j, &v) in b.iter().enumerate() {
                    cell_hits[j] += v as usize;
                }
                counts[b.iter().filter(|&&v| v).count()] += 1;
            }
            let se = (eps * (1.0 - eps) / n as f64).sqrt();
            for h in cell_hits {
                assert!((h as f64 / n as f64 - eps).abs() < 3.0 * se, "{m:?} marginal");
            }
            for (k, &c) in counts.iter().enumerate() {
                let p = delta_k(&s, d, k).unwrap();
                let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
                assert!((c as f64 / n as f64 - p).abs() < 4.0 * se + 1e-12, "{m:?} k={k}");
            }
        }
    }

    #[test]
    fn psicm_counts_match_closed_form() {
        let s = spec(ContaminationModel::Psicm, 0.2);
        let (d, n) = (3, 100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_indicators(&s, d, &mut rng).unwrap().iter().filter(|&&v| v).count()] += 1;
        }
        let total: f64 = (0..=d).map(|k| delta_k(&s, d, k).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for k in 0..=d {
            let p = delta_k(&s, d, k).unwrap();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[k] as f64 / n as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn contaminate_preserves_clean_cells() {
        let model = EllipticalModel::standard(4);
        let y = sample_clean(&model, 500, StreamKey::new(3));
        let s = spec(ContaminationModel::Ficm, 0.3);
        let out = contaminate(&y, &s, StreamKey::new(4)).unwrap();
        for i in 0..500 {
            for j in 0..4 {
                if out.b[(i, j)] == 0 {
                    assert_eq!(out.x[(i, j)], y[(i, j)]);
                } else {
                    assert!((out.x[(i, j)] - y[(i, j)] - 5.0).abs() < 1e-12);
                }
            }
        }
        let none = contaminate(&y, &spec(ContaminationModel::Ficm, 0.0), StreamKey::new(4)).unwrap();
        assert_eq!(none.x, y);
    }

    #[test]
    fn fdcm_point_mass_replaces_whole_row() {
        let model = EllipticalModel::standard(3);
        let y = sample_clean(&model, 300, StreamKey::new(8));
        let s = ContaminationSpec::new(
            ContaminationModel::Fdcm,
            0.4,
            OutlierGen::PointMass { z: vec![7.0, -1.0, 2.5] },
        )
        .unwrap();
        let out = contaminate(&y, &s, StreamKey::new(9)).unwrap();
        let mut hit = 0;
        for i in 0..300 {
            let flags: Vec<u8> = out.b.row(i).iter().copied().collect();
            assert!(flags.iter().all(|&f| f == flags[0]));
            if flags[0] == 1 {
                hit += 1;
                assert_eq!(out.x.row(i).iter().copied().collect::<Vec<_>>(), vec![7.0, -1.0, 2.5]);
            }
        }
        assert!(hit > 0);
    }

    #[test]
    fn ficm_cell_count_fractions() {
        let model = EllipticalModel::standard(2);
        let n = 100_000;
        let y = sample_clean(&model, n, StreamKey::new(21));
        let s = ContaminationSpec::new(
            ContaminationModel::Ficm,
            0.3,
            OutlierGen::GaussianShift { mean: vec![10.0, 10.0], var: 1.0 },
        )
        .unwrap();
        let out = contaminate(&y, &s, StreamKey::new(22)).unwrap();
        let mut frac = [0.0; 3];
        for c in out.row_counts() {
            frac[c] += 1.0 / n as f64;
        }
        for (f, target) in frac.iter().zip([0.49, 0.42, 0.09]) {
            assert!((f - target).abs() < 0.01, "{f} vs {target}");
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let model = EllipticalModel::standard(3);
        let y = sample_clean(&model, 2000, StreamKey::new(5));
        let s = spec(ContaminationModel::Psicm, 0.2);
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let wide = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let a = serial.install(|| contaminate(&y, &s, StreamKey::new(6)).unwrap());
        let b = wide.install(|| contaminate(&y, &s, StreamKey::new(6)).unwrap());
        assert_eq!(a.x, b.x);
        assert_eq!(a.b, b.b);
        let ya = serial.install(|| sample_clean(&model, 1000, StreamKey::new(1)));
        let yb = wide.install(|| sample_clean(&model, 1000, StreamKey::new(1)));
        assert_eq!(ya, yb);
    }

    #[test]
    fn ficm_is_not_affine_equivariant() {
        let (d, eps, n) = (5usize, 0.1, 50_000usize);
        let model = EllipticalModel::standard(d);
        let y = sample_clean(&model, n, StreamKey::new(31));
        let out = contaminate(&y, &spec(ContaminationModel::Ficm, eps), StreamKey::new(32)).unwrap();
        let a = theorem1_transform(d);
        let ax = &out.x * a.transpose();
        let ay = &y * a.transpose();
        let changed = (0..n)
            .filter(|&i| (0..d).any(|j| (ax[(i, j)] - ay[(i, j)]).abs() > 1e-9))
            .count() as f64
            / n as f64;
        let expected = 1.0 - (1.0 - eps).powi(d as i32);
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((changed - expected).abs() < 4.0 * se, "{changed} vs {expected}");
        assert!(changed > 3.0 * eps);
    }

    #[test]
    fn h_i_z_overwrites_cells() {
        let model = EllipticalModel::standard(3);
        let z = DVector::from_vec(vec![4.0, -2.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(sample_h_i_z(&[0, 1, 2], &z, &model, &mut rng).unwrap(), z);
        let draws: Vec<DVector<f64>> =
            (0..10_000).map(|_| sample_h_i_z(&[1], &z, &model, &mut rng).unwrap()).collect();
        assert!(draws.iter().all(|x| x[1] == -2.0));
        let mean0 = draws.iter().map(|x| x[0]).sum::<f64>() / 10_000.0;
        let var0 = draws.iter().map(|x| (x[0] - mean0).powi(2)).sum::<f64>() / 9_999.0;
        assert!(mean0.abs() < 0.05 && (var0 - 1.0).abs() < 0.05);
        let clean: Vec<DVector<f64>> =
            (0..10_000).map(|_| sample_h_i_z(&[], &z, &model, &mut rng).unwrap()).collect();
        let m = clean.iter().fold(DVector::zeros(3), |a, x| a + x) / 10_000.0;
        assert!(m.amax() < 0.05);
        assert!(sample_h_i_z(&[3], &z, &model, &mut rng).is_err());
    }
}
