//! Reverse-Hölder diagnostics of `φ(x, |Du|)`.

use super::Field;
use crate::error::{Error, Result};
use crate::geometry::Ball;
use crate::phi::{PhiFn, SamplingOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct HigherIntegrability {
    pub sigma: f64,
    /// `∫_{B_{2r}} φ(x, |Du|)`; the ratios are only computed when it is at
    /// most 1.
    pub energy_2r: f64,
    /// `(⨍_{B_r} φ^{1+σ})^{1/(1+σ)} / (⨍_{B_{2r}} φ + 1)`.
    pub ratio: Option<f64>,
    /// The same numerator over `φ⁻_{B_{2r}}(⨍_{B_{2r}}|Du|) + 1`.
    pub reverse_ratio: Option<f64>,
}

impl HigherIntegrability {
    pub fn precondition_holds(&self) -> bool {
        self.ratio.is_some()
    }
}

pub fn higher_integrability_ratio(field: &Field, phi: &dyn PhiFn, x0: &[f64], r: f64, sigma: f64) -> Result<HigherIntegrability> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let outer = field
        .ball_cells(x0, 2.0 * r)
        .ok_or_else(|| Error::InvalidArgument(format!("ball of radius {} leaves the grid", 2.0 * r)))?;
    let inner = field.ball_cells(x0, r).expect("inside the larger ball");
    let g = field.grid;
    let energy = |c: usize| phi.eval(&g.cell_center(c), field.gradient_norm(c));
    let mut outer_sum = 0.0;
    let mut grad_sum = 0.0;
    for &c in &outer {
        outer_sum += energy(c)?;
        grad_sum += field.gradient_norm(c);
    }
    let energy_2r = outer_sum * g.cell_volume();
    if energy_2r > 1.0 {
        return Ok(HigherIntegrability {
            sigma,
            energy_2r,
            ratio: None,
            reverse_ratio: None,
        });
    }
    let mut top = 0.0;
    for &c in &inner {
        top += energy(c)?.powf(1.0 + sigma);
    }
    let numerator = (top / inner.len() as f64).powf(1.0 / (1.0 + sigma));
    let mean_phi = outer_sum / outer.len() as f64;
    let mean_grad = grad_sum / outer.len() as f64;
    let env = phi.envelope(&Ball::new(x0.to_vec(), 2.0 * r)?, &SamplingOptions::default())?;
    let lower = env.inf(mean_grad)?.value;
    Ok(HigherIntegrability {
        sigma,
        energy_2r,
        ratio: Some(numerator / (mean_phi + 1.0)),
        reverse_ratio: Some(numerator / (lower + 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::phi::PhiSpec;
    use crate::solver::Grid;

    #[test]
    fn constant_gradient_is_below_one() {
        let g = Grid::new(&Domain::unit_box(2), 64).unwrap();
        let v: Vec<f64> = (0..g.num_nodes()).map(|k| 0.5 * g.node(k)[0]).collect();
        let f = Field::new(&g, &v).unwrap();
        let phi = PhiSpec::double_phase(2.0, 2.5, "abs(x1)", 2).unwrap();
        for sigma in [0.1, 0.2, 0.5] {
            let h = higher_integrability_ratio(&f, &phi, &[0.0, 0.0], 0.25, sigma).unwrap();
            assert!(h.precondition_holds());
            assert!(h.ratio.unwrap() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn large_energy_is_reported_not_computed() {
        let g = Grid::new(&Domain::unit_box(2), 32).unwrap();
        let v: Vec<f64> = (0..g.num_nodes()).map(|k| 10.0 * g.node(k)[0]).collect();
        let f = Field::new(&g, &v).unwrap();
        let phi = PhiSpec::power(2.0, 2).unwrap();
        let h = higher_integrability_ratio(&f, &phi, &[0.0, 0.0], 0.25, 0.2).unwrap();
        assert!(h.energy_2r > 1.0 && h.ratio.is_none());
    }
}
