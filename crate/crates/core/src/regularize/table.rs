//! Fast evaluation of `φ̃`: a cubic Hermite interpolant of `ln φ̃` in `ln t`
//! over the table, with the nodal slopes `tφ̃'/φ̃` known exactly.

use super::RegularizedPhi;
use crate::error::Result;
use crate::phi::PhiFn;

/// `φ̃` on `(0, ∞)` as `c + k t^p` beyond the table.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Tail {
    c: f64,
    k: f64,
    p: f64,
}

impl Tail {
    fn eval(&self, t: f64) -> f64 {
        self.c + self.k * t.powf(self.p)
    }

    fn deriv_ratio(&self, t: f64) -> f64 {
        self.k * self.p * t.powf(self.p - 2.0)
    }
}

#[derive(Debug, Clone)]
pub struct TabulatedPhi {
    dim: usize,
    ln_t: Vec<f64>,
    ln_v: Vec<f64>,
    /// `d ln φ̃ / d ln t` at the nodes.
    slope: Vec<f64>,
    step: f64,
    lower: Tail,
    upper: Tail,
    exponents: (f64, f64),
}

impl TabulatedPhi {
    pub fn new(reg: &RegularizedPhi) -> Self {
        let table = reg.table();
        let ln_t: Vec<f64> = table.iter().map(|n| n.t.ln()).collect();
        let ln_v: Vec<f64> = table.iter().map(|n| n.value.ln()).collect();
        let slope: Vec<f64> = table.iter().map(|n| n.t * n.deriv / n.value).collect();
        let (first, last) = (table[0], table[table.len() - 1]);
        let (p, _) = reg.psi_b().exponents();
        // below the table: the exact p-power tail when t₁ > 0, else the
        // power with the first node's log slope
        let lower = if reg.psi_b().thresholds().0 > 0.0 {
            Tail {
                c: 0.0,
                k: first.value / first.t.powf(p),
                p,
            }
        } else {
            Tail {
                c: 0.0,
                k: first.value / first.t.powf(slope[0]),
                p: slope[0],
            }
        };
        let k = last.deriv / (p * last.t.powf(p - 1.0));
        let upper = Tail {
            c: last.value - k * last.t.powf(p),
            k,
            p,
        };
        TabulatedPhi {
            dim: reg.dim(),
            step: (ln_t[ln_t.len() - 1] - ln_t[0]) / (ln_t.len() - 1) as f64,
            ln_t,
            ln_v,
            slope,
            lower,
            upper,
            exponents: reg.psi_b().exponents(),
        }
    }

    fn cell(&self, x: f64) -> usize {
        let n = self.ln_t.len();
        let mut k = (((x - self.ln_t[0]) / self.step).floor().max(0.0) as usize).min(n - 2);
        while k > 0 && x < self.ln_t[k] {
            k -= 1;
        }
        while k + 2 < n && x > self.ln_t[k + 1] {
            k += 1;
        }
        k
    }

    /// `(φ̃(t), φ̃'(t)/t)`.
    pub fn value_and_ratio(&self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (0.0, self.lower.deriv_ratio(0.0));
        }
        let x = t.ln();
        let n = self.ln_t.len();
        if x <= self.ln_t[0] {
            return (self.lower.eval(t), self.lower.deriv_ratio(t));
        }
        if x >= self.ln_t[n - 1] {
            return (self.upper.eval(t), self.upper.deriv_ratio(t));
        }
        let k = self.cell(x);
        let d = self.ln_t[k + 1] - self.ln_t[k];
        let s = (x - self.ln_t[k]) / d;
        let (y0, y1) = (self.ln_v[k], self.ln_v[k + 1]);
        let (m0, m1) = (self.slope[k] * d, self.slope[k + 1] * d);
        let (s2, s3) = (s * s, s * s * s);
        let h = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        let dh = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1) / d;
        let v = h.exp();
        (v, v * dh / (t * t))
    }
}

impl PhiFn for TabulatedPhi {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64], t: f64) -> Result<f64> {
        crate::phi::check_t(t)?;
        Ok(self.value_and_ratio(t).0)
    }

    fn deriv(&self, _x: &[f64], t: f64) -> Result<f64> {
        crate::phi::check_t(t)?;
        Ok(self.value_and_ratio(t).1 * t)
    }

    fn deriv_ratio(&self, _x: &[f64], t: f64) -> Result<f64> {
        Ok(self.value_and_ratio(t).1)
    }

    fn is_autonomous(&self) -> bool {
        true
    }

    fn exponents(&self) -> Option<(f64, f64)> {
        Some(self.exponents)
    }
}
