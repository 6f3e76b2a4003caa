//! Run configuration: one TOML file, strict keys, one optional block per
//! subcommand.

use std::path::{Path, PathBuf};

use musielak::expr::Expr;
use musielak::phi::PhiSpec;
use serde::Deserialize;

/// Smallest admissible grid resolution.
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Halton offset for every sampled point set.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub phi: PhiSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub regularize: RegularizeConfig,
    pub solve: Option<SolveConfig>,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub holder: HolderConfig,
    pub sweep: Option<SweepConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("musielak-out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Cells across the longer side of the domain.
    pub cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { cells: 64 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    /// Ball radii, decreasing; defaults to `0.1 · 2^{-k}`, k = 0..4.
    pub radii: Option<Vec<f64>>,
    /// `ε` of (wVA1); `--eps` overrides it.
    pub eps: f64,
    pub balls: usize,
    pub l_cap: f64,
    pub x_points: usize,
    pub t_range: [f64; 2],
    pub t_points: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            radii: None,
            eps: 0.25,
            balls: 32,
            l_cap: 10.0,
            x_points: 64,
            t_range: [1e-2, 1e2],
            t_points: 97,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularizeConfig {
    /// Ball center; defaults to the domain center.
    pub center: Option<Vec<f64>>,
    pub table_nodes: usize,
    pub t_samples: usize,
    pub x_samples: usize,
    /// `σ` of the transfer function θ.
    pub sigma: f64,
    /// Rows of `phi_tilde.csv`.
    pub csv_points: usize,
}

impl Default for RegularizeConfig {
    fn default() -> Self {
        RegularizeConfig {
            center: None,
            table_nodes: 512,
            t_samples: 120,
            x_samples: 32,
            sigma: 0.25,
            csv_points: 201,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Dirichlet data as an expression in `x1, x2`.
    pub boundary: Expr,
    #[serde(default = "default_tol_e")]
    pub tol_e: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    pub tol_el: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_grad_floor")]
    pub grad_floor: f64,
    /// Regularization `ε ≥ 0` of an autonomous `φ`.
    #[serde(default)]
    pub eps: f64,
}

fn default_tol_e() -> f64 {
    1e-12
}

fn default_window() -> usize {
    10
}

fn default_max_iter() -> usize {
    200_000
}

fn default_grad_floor() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    /// Center of `B_r`; defaults to the domain center.
    pub center: Option<Vec<f64>>,
    /// `r/h` of the grid on `B_{2r}`.
    pub cells_per_radius: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            center: None,
            cells_per_radius: 16,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolderConfig {
    /// Largest radius of the dyadic ladder.
    pub rho_max: f64,
    /// Explicit radii instead of the ladder.
    pub radii: Option<Vec<f64>>,
    /// Also report the higher-integrability ratio at `r = rho_max / 2`.
    pub sigma: Option<f64>,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig {
            rho_max: 0.5,
            radii: None,
            sigma: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p: f64,
    pub q: Vec<f64>,
    /// Exponent of the coefficient `|x1|^β`.
    pub beta: f64,
    /// Add an `a ≡ 1` row per `q`.
    #[serde(default)]
    pub autonomous: bool,
    #[serde(default = "default_sweep_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_sweep_eps")]
    pub eps: f64,
    #[serde(default = "default_sweep_balls")]
    pub balls: usize,
    /// Center and largest radius of the gradient-Hölder fit.
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_fit_radius")]
    pub fit_radius: f64,
}

fn default_sweep_radii() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125, 0.00625]
}

fn default_sweep_eps() -> f64 {
    0.1
}

fn default_sweep_balls() -> usize {
    16
}

fn default_fit_radius() -> f64 {
    0.5
}

/// A configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        let dim = self.phi.domain().dim();
        if self.grid.cells < MIN_CELLS {
            return bad(format!("grid.cells must be at least {MIN_CELLS}, got {}", self.grid.cells));
        }
        if let Some(s) = &self.solve {
            if s.boundary.min_dim() > dim {
                return bad(format!("solve.boundary uses x{} on a {dim}D domain", s.boundary.min_dim()));
            }
            if s.boundary.uses_t() {
                return bad("solve.boundary must not use t".into());
            }
        }
        let check_center = |name: &str, c: &Option<Vec<f64>>| match c {
            Some(c) if c.len() != dim => bad(format!("{name} has {} coordinates on a {dim}D domain", c.len())),
            Some(c) if !self.phi.domain().contains(c) => bad(format!("{name} {c:?} lies outside the domain")),
            _ => Ok(()),
        };
        check_center("regularize.center", &self.regularize.center)?;
        check_center("compare.center", &self.compare.center)?;
        if let Some(r) = &self.check.radii {
            if r.is_empty() || r.iter().any(|v| !(*v > 0.0)) {
                return bad("check.radii must be positive".into());
            }
        }
        if !(self.check.eps > 0.0 && self.check.eps < 1.0) {
            return bad(format!("check.eps must lie in (0, 1), got {}", self.check.eps));
        }
        if !(self.check.t_range[0] > 0.0 && self.check.t_range[0] < self.check.t_range[1]) {
            return bad("check.t_range must be increasing and positive".into());
        }
        if self.compare.cells_per_radius < 8 {
            return bad("compare.cells_per_radius must be at least 8".into());
        }
        if let Some(s) = &self.sweep {
            if s.q.is_empty() {
                return bad("sweep.q must not be empty".into());
            }
            if dim != 2 {
                return bad("sweep needs a 2D domain".into());
            }
            check_center("sweep.center", &s.center)?;
        }
        Ok(())
    }

    pub fn solve_block(&self) -> Result<&SolveConfig, ConfigError> {
        self.solve
            .as_ref()
            .ok_or_else(|| ConfigError("this subcommand needs a [solve] block".into()))
    }

    pub fn sweep_block(&self) -> Result<&SweepConfig, ConfigError> {
        self.sweep
            .as_ref()
            .ok_or_else(|| ConfigError("sweep needs a [sweep] block".into()))
    }
}
