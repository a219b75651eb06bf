use std::f64::consts::PI;

use crate::{Error, Result};

pub const DEFAULT_NODES: usize = 256;
const PANEL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `ln Γ(d/2)` for a positive integer `d`.
fn ln_gamma_half(d: usize) -> f64 {
    let (mut acc, mut k) = if d % 2 == 0 { (0.0, 1.0) } else { (0.5 * PI.ln(), 0.5) };
    while k + 1e-9 < d as f64 / 2.0 {
        acc += k.ln();
        k += 1.0;
    }
    acc
}

/// Fixed-node quadrature for `E f(‖w‖²)` with `w` standard normal in `d`
/// dimensions, i.e. `‖w‖² ~ χ²_d`.
///
/// Nodes are placed on the radius `r = ‖w‖` (which removes the `u^{-1/2}`
/// singularity of the χ²₁ density) as composite Gauss–Legendre panels over
/// `[0, √d + 10]`. Kinks of the integrand, such as a loss truncation point,
/// can be passed as breakpoints on the `u` scale so that no panel straddles
/// them.
#[derive(Debug, Clone)]
pub struct RadialQuadrature {
    dim: usize,
    u: Vec<f64>,
    w: Vec<f64>,
}

impl RadialQuadrature {
    pub fn new(d: usize, n_nodes: usize, breakpoints_u: &[f64]) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if n_nodes < PANEL_ORDER {
            return Err(Error::invalid(format!("need at least {PANEL_ORDER} nodes")));
        }
        let r_max = (d as f64).sqrt() + 10.0;
        let mut cuts: Vec<f64> = breakpoints_u
            .iter()
            .filter(|u| u.is_finite() && **u > 0.0)
            .map(|u| u.sqrt())
            .filter(|r| *r < r_max)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut edges = vec![0.0];
        edges.extend(cuts);
        edges.push(r_max);

        let n_panels = (n_nodes / PANEL_ORDER).max(edges.len() - 1);
        let segs = edges.len() - 1;
        // one panel per segment, the rest proportional to length
        let mut alloc = vec![1usize; segs];
        let spare = n_panels - segs;
        let lens: Vec<f64> = edges.windows(2).map(|e| e[1] - e[0]).collect();
        let mut given = 0;
        for (a, l) in alloc.iter_mut().zip(&lens) {
            let extra = (spare as f64 * l / r_max).floor() as usize;
            *a += extra;
            given += extra;
        }
        let mut order: Vec<usize> = (0..segs).collect();
        order.sort_by(|&a, &b| lens[b].total_cmp(&lens[a]));
        for &i in order.iter().cycle().take(spare - given) {
            alloc[i] += 1;
        }

        let (gx, gw) = gauss_legendre(PANEL_ORDER);
        let log_norm = (d as f64 / 2.0 - 1.0) * 2f64.ln() + ln_gamma_half(d);
        let mut u = Vec::with_capacity(n_panels * PANEL_ORDER);
        let mut w = Vec::with_capacity(n_panels * PANEL_ORDER);
        for (s, &k) in alloc.iter().enumerate() {
            let h = lens[s] / k as f64;
            for p in 0..k {
                let a = edges[s] + p as f64 * h;
                for (x, wt) in gx.iter().zip(&gw) {
                    let r = a + 0.5 * h * (x + 1.0);
                    let dens = ((d as f64 - 1.0) * r.ln() - 0.5 * r * r - log_norm).exp();
                    u.push(r * r);
                    w.push(0.5 * h * wt * dens);
                }
            }
        }
        Ok(RadialQuadrature { dim: d, u, w })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (&u, &w) in self.u.iter().zip(&self.w) {
            let v = f(u);
            if !v.is_finite() {
                return Err(Error::NonFinite { context: "radial quadrature integrand", value: v });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// `E f(U)` for `U ~ χ²_d` with the default node count.
pub fn radial_expectation<F: FnMut(f64) -> f64>(f: F, d: usize) -> Result<f64> {
    RadialQuadrature::new(d, DEFAULT_NODES, &[])?.expect(f)
}
