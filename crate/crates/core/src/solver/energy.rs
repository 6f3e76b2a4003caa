//! The discrete energy `E(u) = Σ_elements |T| φ(x_T, |∇u|_T)` and its gradient.

use rayon::prelude::*;

use super::grid::{Element, ElementKind, Grid, NodeKind};
use crate::error::{Error, Result};
use crate::phi::{LocalPhi, PhiFn};

/// Elements per parallel chunk; fixed so that sums do not depend on the
/// thread count.
const CHUNK: usize = 2048;

enum Local<'a> {
    /// One profile sum per element.
    Profiles(Vec<LocalPhi>),
    /// The same function everywhere, or a general `φ(x, t)`.
    Direct(&'a dyn PhiFn, Vec<Vec<f64>>),
}

pub struct Energy<'a> {
    local: Local<'a>,
    elements: Vec<Element>,
    weight: f64,
    h: f64,
    interior: Vec<usize>,
    is_interior: Vec<bool>,
    grad_floor: f64,
}

impl<'a> Energy<'a> {
    pub fn new(phi: &'a dyn PhiFn, grid: &Grid, grad_floor: f64) -> Result<Self> {
        if phi.dim() != grid.dim() {
            return Err(Error::InvalidArgument(format!(
                "energy has dimension {} but the grid has {}",
                phi.dim(),
                grid.dim()
            )));
        }
        let elements = grid.elements();
        let centers: Vec<Vec<f64>> = elements.iter().map(|e| grid.cell_center(e.cell)).collect();
        let local = if phi.is_autonomous() {
            Local::Direct(phi, vec![centers.first().cloned().unwrap_or_default()])
        } else {
            match centers.iter().map(|x| phi.localize(x)).collect::<Option<Vec<_>>>() {
                Some(l) => Local::Profiles(l),
                None => Local::Direct(phi, centers),
            }
        };
        let interior = grid.interior_nodes();
        let mut is_interior = vec![false; grid.num_nodes()];
        for &i in &interior {
            is_interior[i] = true;
        }
        Ok(Energy {
            local,
            elements,
            weight: grid.element_weight(),
            h: grid.h(),
            interior,
            is_interior,
            grad_floor,
        })
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    fn grad(&self, e: &Element, u: &[f64]) -> (f64, f64) {
        let [a, b, c] = e.nodes;
        let h = self.h;
        match e.kind {
            ElementKind::Interval => ((u[b] - u[a]) / h, 0.0),
            ElementKind::Lower => ((u[b] - u[a]) / h, (u[c] - u[b]) / h),
            ElementKind::Upper => ((u[c] - u[b]) / h, (u[b] - u[a]) / h),
        }
    }

    /// `(φ(x_T, t), φ'(x_T, t)/t)` with the ratio evaluated at
    /// `t + grad_floor` below the floor.
    fn phi_and_ratio(&self, k: usize, t: f64, want_ratio: bool) -> Result<(f64, f64)> {
        let floored = t < self.grad_floor;
        let s = if floored { t + self.grad_floor } else { t };
        match &self.local {
            Local::Profiles(l) => {
                let l = &l[k];
                let r = if want_ratio {
                    if floored {
                        l.deriv(s) / s
                    } else {
                        l.deriv_ratio(s)
                    }
                } else {
                    0.0
                };
                Ok((l.eval(t), r))
            }
            Local::Direct(phi, xs) => {
                let x = if xs.len() == 1 { &xs[0] } else { &xs[k] };
                let r = if want_ratio {
                    if floored {
                        phi.deriv(x, s)? / s
                    } else {
                        phi.deriv_ratio(x, s)?
                    }
                } else {
                    0.0
                };
                Ok((phi.eval(x, t)?, r))
            }
        }
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        let parts: Vec<Result<f64>> = self
            .elements
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(ci, chunk)| {
                let mut sum = 0.0;
                for (j, e) in chunk.iter().enumerate() {
                    let (gx, gy) = self.grad(e, u);
                    sum += self.phi_and_ratio(ci * CHUNK + j, gx.hypot(gy), false)?.0;
                }
                Ok(sum)
            })
            .collect();
        let mut total = 0.0;
        for p in parts {
            total += p?;
        }
        Ok(total * self.weight)
    }

    /// Energy and its gradient with respect to the nodal values; the
    /// gradient vanishes off the interior nodes.
    pub fn value_and_gradient(&self, u: &[f64], grad: &mut [f64]) -> Result<f64> {
        let w = self.weight;
        let h = self.h;
        let parts: Vec<Result<(f64, Vec<[f64; 3]>)>> = self
            .elements
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(ci, chunk)| {
                let mut sum = 0.0;
                let mut flux = Vec::with_capacity(chunk.len());
                for (j, e) in chunk.iter().enumerate() {
                    let (gx, gy) = self.grad(e, u);
                    let (v, rho) = self.phi_and_ratio(ci * CHUNK + j, gx.hypot(gy), true)?;
                    sum += v;
                    let (fx, fy) = (rho * gx * w / h, rho * gy * w / h);
                    flux.push(match e.kind {
                        ElementKind::Interval => [-fx, fx, 0.0],
                        ElementKind::Lower => [-fx, fx - fy, fy],
                        ElementKind::Upper => [-fy, fy - fx, fx],
                    });
                }
                Ok((sum, flux))
            })
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        let mut k = 0;
        for p in parts {
            let (s, flux) = p?;
            total += s;
            for f in flux {
                let e = &self.elements[k];
                let n = if e.kind == ElementKind::Interval { 2 } else { 3 };
                for i in 0..n {
                    grad[e.nodes[i]] += f[i];
                }
                k += 1;
            }
        }
        for (g, &keep) in grad.iter_mut().zip(&self.is_interior) {
            if !keep {
                *g = 0.0;
            }
        }
        Ok(total * w)
    }

    /// Discrete Euler–Lagrange residual: `max |∂E/∂u_i| / hⁿ` over interior
    /// nodes, the nodal divergence of `φ'(x,|∇u|)/|∇u| ∇u`.
    pub fn residual(&self, grad: &[f64], dim: usize) -> f64 {
        let scale = self.h.powi(dim as i32);
        self.interior.iter().fold(0.0f64, |m, &i| m.max(grad[i].abs())) / scale
    }
}

/// Nodal values with Dirichlet data on the boundary and zeros elsewhere.
pub(crate) fn with_boundary(grid: &Grid, data: &[f64]) -> Vec<f64> {
    (0..grid.num_nodes())
        .map(|k| if grid.node_kind(k) == NodeKind::Boundary { data[k] } else { 0.0 })
        .collect()
}
