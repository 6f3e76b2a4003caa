//! Domains, balls and quasi-uniform point sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EDGE_SLACK: f64 = 1e-12;

/// A bounded domain Ω ⊂ Rⁿ with n ∈ {1, 2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rect { x: [f64; 2], y: [f64; 2] },
    Disc { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
}

impl Domain {
    /// The cube `[-1, 1]ⁿ`.
    pub fn unit_box(dim: usize) -> Self {
        match dim {
            1 => Domain::Interval { a: -1.0, b: 1.0 },
            _ => Domain::Rect {
                x: [-1.0, 1.0],
                y: [-1.0, 1.0],
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Domain::Interval { a, b } => a < b,
            Domain::Rect { x, y } => x[0] < x[1] && y[0] < y[1],
            Domain::Disc { radius, .. } => *radius > 0.0,
            Domain::Annulus { inner, outer, .. } => *inner >= 0.0 && inner < outer,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("degenerate domain {self:?}")))
        }
    }

    /// Axis-aligned bounding box as `(lo, hi)` per axis.
    pub fn bounds(&self) -> Vec<[f64; 2]> {
        match self {
            Domain::Interval { a, b } => vec![[*a, *b]],
            Domain::Rect { x, y } => vec![*x, *y],
            Domain::Disc { center, radius } | Domain::Annulus { center, outer: radius, .. } => vec![
                [center[0] - radius, center[0] + radius],
                [center[1] - radius, center[1] + radius],
            ],
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Rect { x: bx, y: by } => (x[0] - bx[0]).min(bx[1] - x[0]).min(x[1] - by[0]).min(by[1] - x[1]),
            Domain::Disc { center, radius } => radius - dist(x, center),
            Domain::Annulus { center, inner, outer } => {
                let d = dist(x, center);
                (outer - d).min(d - inner)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && self.depth(x) >= -EDGE_SLACK
    }

    /// A representative interior point (the domain center, or the mid radius
    /// of an annulus).
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Interval { a, b } => vec![0.5 * (a + b)],
            Domain::Rect { x, y } => vec![0.5 * (x[0] + x[1]), 0.5 * (y[0] + y[1])],
            Domain::Disc { center, .. } => center.to_vec(),
            Domain::Annulus { center, inner, outer } => vec![center[0] + 0.5 * (inner + outer), center[1]],
        }
    }
}

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Volume of the unit ball in Rⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// An open ball `B_r(x₀)`, optionally clipped to a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<Domain>,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("ball center must be finite".into()));
        }
        Ok(Ball {
            center,
            radius,
            clip: None,
        })
    }

    /// Restricts the ball to `domain`; fails when the intersection is empty.
    pub fn clipped(mut self, domain: &Domain) -> Result<Self> {
        if domain.depth(&self.center) <= -self.radius {
            return Err(Error::InvalidArgument("ball misses the domain".into()));
        }
        self.clip = Some(domain.clone());
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `|B_r|`, the Lebesgue measure of the unclipped ball.
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        dist(x, &self.center) <= self.radius * (1.0 + EDGE_SLACK)
            && self.clip.as_ref().map_or(true, |d| d.contains(x))
    }

    /// Nearest point of the closed ball (ignores the clip).
    pub fn project(&self, x: &mut [f64]) {
        let d = dist(x, &self.center);
        if d > self.radius {
            let s = self.radius / d;
            for (xi, ci) in x.iter_mut().zip(&self.center) {
                *xi = ci + (*xi - ci) * s;
            }
        }
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        let mut b = Ball::new(self.center.clone(), radius)?;
        b.clip = self.clip.clone();
        Ok(b)
    }

    /// Quasi-uniform points of the ball: the center, boundary points, and
    /// `count` Halton points starting at sequence index `offset + 1`.
    /// Points outside the clip domain are dropped.
    pub fn sample(&self, count: usize, offset: u64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut pts = vec![self.center.clone()];
        match n {
            1 => {
                pts.push(vec![self.center[0] - self.radius]);
                pts.push(vec![self.center[0] + self.radius]);
                for k in 0..count as u64 {
                    let u = halton(offset + k + 1, 2);
                    pts.push(vec![self.center[0] + self.radius * (2.0 * u - 1.0)]);
                }
            }
            2 => {
                let ring = 64;
                for k in 0..ring {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / ring as f64;
                    pts.push(vec![
                        self.center[0] + self.radius * a.cos(),
                        self.center[1] + self.radius * a.sin(),
                    ]);
                }
                for k in 0..count as u64 {
                    let rho = self.radius * halton(offset + k + 1, 2).sqrt();
                    let a = 2.0 * std::f64::consts::PI * halton(offset + k + 1, 3);
                    pts.push(vec![self.center[0] + rho * a.cos(), self.center[1] + rho * a.sin()]);
                }
            }
            _ => {
                // rejection from the bounding cube
                let mut k = offset;
                let mut got = 0;
                while got < count && k < offset + 64 * count as u64 + 64 {
                    k += 1;
                    let p: Vec<f64> = (0..n)
                        .map(|i| self.center[i] + self.radius * (2.0 * halton(k, PRIMES[i % PRIMES.len()]) - 1.0))
                        .collect();
                    if dist(&p, &self.center) <= self.radius {
                        pts.push(p);
                        got += 1;
                    }
                }
            }
        }
        match &self.clip {
            Some(d) => pts.into_iter().filter(|p| d.contains(p)).collect(),
            None => pts,
        }
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in `base` (the Halton/van der Corput sequence).
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Quasi-uniform points of a domain (Halton in the bounding box, filtered).
pub fn domain_samples(domain: &Domain, count: usize, offset: u64) -> Vec<Vec<f64>> {
    let bounds = domain.bounds();
    let mut out = vec![domain.center()];
    let mut k = offset;
    while out.len() < count && k < offset + 64 * count as u64 + 64 {
        k += 1;
        let p: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(i, [lo, hi])| lo + (hi - lo) * halton(k, PRIMES[i]))
            .collect();
        if domain.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Centers of a quasi-uniform family of balls `B_r ⋐ Ω`: the domain center
/// first (when admissible), then Halton points of the bounding box shrunk
/// by `r`, keeping those at depth greater than `r`.
pub fn ball_centers(domain: &Domain, r: f64, count: usize, offset: u64) -> Vec<Vec<f64>> {
    let bounds = domain.bounds();
    let mut out = Vec::with_capacity(count);
    let c = domain.center();
    if domain.depth(&c) > r {
        out.push(c);
    }
    let mut k = offset;
    while out.len() < count && k < offset + 256 * count as u64 + 256 {
        k += 1;
        let p: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(i, [lo, hi])| {
                let (lo, hi) = (lo + r, hi - r);
                lo + (hi - lo) * halton(k, PRIMES[i])
            })
            .collect();
        if domain.depth(&p) > r {
            out.push(p);
        }
    }
    out
}
