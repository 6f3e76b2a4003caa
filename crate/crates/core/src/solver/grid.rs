//! Uniform grids with cell masks, and the P1 elements on them.

use crate::error::{Error, Result};
use crate::geometry::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Outside,
    Interior,
    Boundary,
}

/// Square cells of side `h`; a cell is active when its center passes the
/// mask. Nodes of active cells are interior when every cell around them
/// is active, boundary otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    nx: usize,
    /// 1 in one dimension.
    ny: usize,
    h: f64,
    origin: [f64; 2],
    active: Vec<bool>,
    kind: Vec<NodeKind>,
}

/// One linear piece of the energy: a 1D interval or a triangle of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Element {
    /// Interval `[a, b]`: `g = (u_b − u_a)/h`. Lower triangle `a, b, c`
    /// (right, then up): `g = ((u_b − u_a)/h, (u_c − u_b)/h)`. Upper
    /// triangle (up, then right): `g = ((u_c − u_b)/h, (u_b − u_a)/h)`.
    pub kind: ElementKind,
    pub nodes: [usize; 3],
    pub cell: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ElementKind {
    Interval,
    Lower,
    Upper,
}

impl Grid {
    /// `cells` cells across the longer side of the bounding box.
    pub fn new(domain: &Domain, cells: usize) -> Result<Self> {
        domain.validate()?;
        if cells < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 cells, got {cells}")));
        }
        let b = domain.bounds();
        let dim = domain.dim();
        let widths: Vec<f64> = b.iter().map(|r| r[1] - r[0]).collect();
        let h = widths.iter().fold(0.0f64, |a, &w| a.max(w)) / cells as f64;
        let count = |w: f64| ((w / h).round() as usize).max(1);
        let (nx, ny) = if dim == 1 { (cells, 1) } else { (count(widths[0]), count(widths[1])) };
        let origin = [b[0][0], if dim == 2 { b[1][0] } else { 0.0 }];
        let mut g = Grid {
            dim,
            nx,
            ny,
            h,
            origin,
            active: vec![true; nx * ny],
            kind: vec![],
        };
        if matches!(domain, Domain::Disc { .. } | Domain::Annulus { .. }) {
            g = g.restrict(|x| domain.contains(x))?;
        } else {
            g.classify()?;
        }
        Ok(g)
    }

    /// The same grid with cells whose centers fail `keep` deactivated.
    pub fn restrict(&self, keep: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let mut g = self.clone();
        for c in 0..g.active.len() {
            if g.active[c] && !keep(&g.cell_center(c)) {
                g.active[c] = false;
            }
        }
        g.classify()?;
        Ok(g)
    }

    fn classify(&mut self) -> Result<()> {
        let mut kind = vec![NodeKind::Outside; self.num_nodes()];
        for (k, slot) in kind.iter_mut().enumerate() {
            let around = self.cells_around(k);
            let on = around.iter().filter(|c| c.is_some_and(|c| self.active[c])).count();
            *slot = if on == 0 {
                NodeKind::Outside
            } else if on == around.len() && around.iter().all(Option::is_some) {
                NodeKind::Interior
            } else {
                NodeKind::Boundary
            };
        }
        self.kind = kind;
        if !self.kind.contains(&NodeKind::Interior) {
            return Err(Error::InvalidArgument("grid has no interior nodes".into()));
        }
        Ok(())
    }

    /// Cells touching node `k` (`None` past the grid edge).
    fn cells_around(&self, k: usize) -> Vec<Option<usize>> {
        if self.dim == 1 {
            let i = k;
            return vec![i.checked_sub(1), (i < self.nx).then_some(i)];
        }
        let (i, j) = (k % (self.nx + 1), k / (self.nx + 1));
        let mut out = Vec::with_capacity(4);
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let c = match (i.checked_sub(di), j.checked_sub(dj)) {
                (Some(a), Some(b)) if a < self.nx && b < self.ny => Some(b * self.nx + a),
                _ => None,
            };
            out.push(c);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cells along each axis.
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Lower-left node and the far corner.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let far = [
            self.origin[0] + self.nx as f64 * self.h,
            self.origin[1] + if self.dim == 2 { self.ny as f64 * self.h } else { 0.0 },
        ];
        (self.origin, far)
    }

    pub fn num_nodes(&self) -> usize {
        if self.dim == 1 {
            self.nx + 1
        } else {
            (self.nx + 1) * (self.ny + 1)
        }
    }

    pub fn num_cells(&self) -> usize {
        self.active.len()
    }

    pub fn node_kind(&self, k: usize) -> NodeKind {
        self.kind[k]
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.active[cell]
    }

    pub fn active_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.active.len()).filter(|&c| self.active[c])
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.kind.len()).filter(|&k| self.kind[k] == NodeKind::Interior).collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.kind.len()).filter(|&k| self.kind[k] == NodeKind::Boundary).collect()
    }

    /// Cell measure `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.origin[0] + k as f64 * self.h];
        }
        let (i, j) = (k % (self.nx + 1), k / (self.nx + 1));
        vec![self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn cell_center(&self, c: usize) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.origin[0] + (c as f64 + 0.5) * self.h];
        }
        let (i, j) = (c % self.nx, c / self.nx);
        vec![
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    /// Corner nodes of a cell: `[(i,j), (i+1,j), (i,j+1), (i+1,j+1)]`, or
    /// the two ends in 1D.
    pub fn cell_nodes(&self, c: usize) -> Vec<usize> {
        if self.dim == 1 {
            return vec![c, c + 1];
        }
        let (i, j) = (c % self.nx, c / self.nx);
        let w = self.nx + 1;
        vec![j * w + i, j * w + i + 1, (j + 1) * w + i, (j + 1) * w + i + 1]
    }

    /// Cell-average of `u` (mean of the corners).
    pub fn cell_value(&self, u: &[f64], c: usize) -> f64 {
        let nodes = self.cell_nodes(c);
        nodes.iter().map(|&k| u[k]).sum::<f64>() / nodes.len() as f64
    }

    /// Cell gradient: the average of the two forward differences along
    /// each axis (the mean of the two triangle gradients).
    pub fn cell_gradient(&self, u: &[f64], c: usize) -> Vec<f64> {
        let n = self.cell_nodes(c);
        let h = self.h;
        if self.dim == 1 {
            return vec![(u[n[1]] - u[n[0]]) / h];
        }
        vec![
            0.5 * ((u[n[1]] - u[n[0]]) + (u[n[3]] - u[n[2]])) / h,
            0.5 * ((u[n[2]] - u[n[0]]) + (u[n[3]] - u[n[1]])) / h,
        ]
    }

    pub(crate) fn elements(&self) -> Vec<Element> {
        let mut out = Vec::new();
        for c in self.active_cells() {
            let n = self.cell_nodes(c);
            if self.dim == 1 {
                out.push(Element {
                    kind: ElementKind::Interval,
                    nodes: [n[0], n[1], n[1]],
                    cell: c,
                });
            } else {
                out.push(Element {
                    kind: ElementKind::Lower,
                    nodes: [n[0], n[1], n[3]],
                    cell: c,
                });
                out.push(Element {
                    kind: ElementKind::Upper,
                    nodes: [n[0], n[2], n[3]],
                    cell: c,
                });
            }
        }
        out
    }

    /// Measure of one element.
    pub(crate) fn element_weight(&self) -> f64 {
        if self.dim == 1 {
            self.h
        } else {
            0.5 * self.h * self.h
        }
    }
}
