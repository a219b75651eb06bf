use crate::numerics::RhoSpec;
use crate::{Error, Result};

fn mean_loss(d2: &[f64], c2s2: f64) -> f64 {
    let total: f64 = d2
        .iter()
        .map(|&v| {
            let x = v / c2s2;
            if x >= 1.0 {
                1.0
            } else {
                x * (3.0 - 3.0 * x + x * x)
            }
        })
        .sum();
    total / d2.len() as f64
}

/// Scale `s > 0` solving `mean ρ(√d²ᵢ / s) = b` for squared distances `d2`.
///
/// Uses the Illinois variant of regula falsi on `ln s`; the returned scale
/// satisfies the constraint to roughly machine precision.
pub fn solve_scale(d2: &[f64], rho: &RhoSpec, b: f64) -> Result<f64> {
    if d2.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(format!("constraint level must lie in (0, 1), got {b}")));
    }
    let nonzero = d2.iter().filter(|&&v| v > 0.0).count() as f64 / d2.len() as f64;
    if nonzero <= b {
        return Err(Error::Degenerate(format!(
            "only {:.3} of the distances are positive, need more than {b}",
            nonzero
        )));
    }
    let c2 = rho.c * rho.c;
    let g = |ls: f64| mean_loss(d2, c2 * (2.0 * ls).exp()) - b;

    let positive: Vec<f64> = d2.iter().copied().filter(|&v| v > 0.0).collect();
    let mean_pos = positive.iter().sum::<f64>() / positive.len() as f64;
    let start = 0.5 * mean_pos.sqrt().ln();
    let (mut lo, mut hi) = (start, start);
    let (mut glo, mut ghi) = (g(lo), g(hi));
    let mut guard = 0;
    while glo <= 0.0 {
        lo -= 1.0;
        glo = g(lo);
        guard += 1;
        if guard > 2000 {
            return Err(Error::NoRoot { context: "scale equation", lo: lo.exp(), hi: hi.exp() });
        }
    }
    while ghi > 0.0 {
        hi += 1.0;
        ghi = g(hi);
        guard += 1;
        if guard > 2000 {
            return Err(Error::NoRoot { context: "scale equation", lo: lo.exp(), hi: hi.exp() });
        }
    }
    if glo == 0.0 {
        return Ok(lo.exp());
    }
    if ghi == 0.0 {
        return Ok(hi.exp());
    }
    let mut side = 0i8;
    for _ in 0..300 {
        let x = (lo * ghi - hi * glo) / (ghi - glo);
        let gx = g(x);
        if gx == 0.0 || (hi - lo) < 1e-15 * (1.0 + x.abs()) {
            return Ok(x.exp());
        }
        if gx > 0.0 {
            lo = x;
            glo = gx;
            if side == 1 {
                ghi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            ghi = gx;
            if side == -1 {
                glo *= 0.5;
            }
            side = -1;
        }
        if gx.abs() < 1e-16 {
            return Ok(x.exp());
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
