use super::{bisect_decreasing, ArgConvention, RadialQuadrature, RhoSpec, DEFAULT_NODES};
use crate::{Error, Result};

/// Largest truncation constant tried while widening the bisection bracket.
pub const BRACKET_CAP: f64 = 1e4;

/// Tuning constant `c` solving `E ρ_c(‖w‖) = bp` for `w` standard normal in `d`
/// dimensions. Since `sup ρ = 1`, this is the constraint level that gives an
/// S-estimator breakdown point `bp`.
pub fn calibrate_c(d: usize, bp: f64, convention: ArgConvention) -> Result<f64> {
    if !(bp > 0.0 && bp <= 0.5) {
        return Err(Error::invalid(format!("breakdown point must lie in (0, 0.5], got {bp}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let residual = |c: f64| -> Result<f64> {
        let rho = RhoSpec::tukey(c, convention)?;
        let q = RadialQuadrature::new(d, DEFAULT_NODES, &[c * c])?;
        Ok(q.expect(|u| rho.loss_of_sq(u))? - bp)
    };
    let start_hi = 2.0 * (d as f64).sqrt() + 2.0;
    bisect_decreasing(residual, 1e-6, start_hi, BRACKET_CAP, 1e-10, 200, "calibrate_c")
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference roots from an adaptive-quadrature (QUADPACK) + Brent solve of
    // the same defining equation.
    const REFERENCE: [(usize, f64); 4] = [
        (1, 1.547_644_980_928_224_7),
        (2, 2.660_803_392_947_349_4),
        (5, 4.652_023_341_220_806),
        (15, 8.376_256_278_304_263),
    ];

    #[test]
    fn matches_reference_roots() {
        for (d, c_ref) in REFERENCE {
            let c = calibrate_c(d, 0.5, ArgConvention::ScaledDistance).unwrap();
            assert!((c - c_ref).abs() < 1e-8, "d={d}: {c} vs {c_ref}");
        }
    }

    #[test]
    fn residual_and_convention_independence() {
        for d in [1, 3, 8] {
            let a = calibrate_c(d, 0.5, ArgConvention::ScaledDistance).unwrap();
            let b = calibrate_c(d, 0.5, ArgConvention::SquaredDistance).unwrap();
            assert!((a - b).abs() < 1e-12);
            let rho = RhoSpec::tukey(a, ArgConvention::ScaledDistance).unwrap();
            let q = RadialQuadrature::new(d, DEFAULT_NODES, &[a * a]).unwrap();
            let e = q.expect(|u| rho.loss_of_sq(u)).unwrap();
            assert!((e - 0.5).abs() < 1e-8);
        }
    }

    #[test]
    fn monotone_in_breakdown_point() {
        let c25 = calibrate_c(1, 0.25, ArgConvention::ScaledDistance).unwrap();
        let c50 = calibrate_c(1, 0.5, ArgConvention::ScaledDistance).unwrap();
        assert!(c25 > c50);
        assert!((c25 - 2.937_014_555_142_453_4).abs() < 1e-8);
        let c05 = calibrate_c(1, 0.05, ArgConvention::ScaledDistance).unwrap();
        assert!(c05 > c25);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(calibrate_c(2, 0.0, ArgConvention::ScaledDistance).is_err());
        assert!(calibrate_c(2, 0.6, ArgConvention::ScaledDistance).is_err());
        assert!(calibrate_c(0, 0.5, ArgConvention::ScaledDistance).is_err());
    }
}
