//! Scene configuration parsing and validation, built-in refraction-index
//! profiles, and result serialization.
//!
//! A scene document is a single JSON file with top-level keys `scene`,
//! `scatterers[]`, `disks[]`, `index`, `solver`, `outputs`. Lengths are
//! nondimensional, angles in radians. Validation is total: every invalid
//! document yields a structured error listing all violations, never a crash.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ArtificialDisk, BoundaryKind, Point2, ScattererSpec, ShapeSpec};
use crate::multiscatter::{SceneDef, SceneIndex, SceneMode, SceneSolution};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scene:\n{}", violations.join("\n"))]
    Validation { violations: Vec<String> },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// Document schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneDoc {
    pub scene: SceneHeader,
    pub scatterers: Vec<ScattererDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disks: Option<Vec<DiskDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneHeader {
    pub kappa: f64,
    pub mode: ModeDoc,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ModeDoc {
    Homogeneous,
    Inhomogeneous,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScattererDoc {
    pub center: [f64; 2],
    pub shape: ShapeDoc,
    #[serde(default)]
    pub bc: BcDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ShapeDoc {
    /// Amplitude a of r(theta) = a sin(k (theta - theta0)) + b.
    pub a: f64,
    /// Base radius b.
    pub b: f64,
    /// Petal count k.
    #[serde(default)]
    pub k: u32,
    /// Phase theta0 in radians.
    #[serde(default)]
    pub theta0: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BcDoc {
    #[default]
    Dirichlet,
    Neumann,
    Robin {
        /// Impedance constant h as [re, im].
        h: [f64; 2],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiskDoc {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Refraction-index profile, radial around each scatterer center.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum IndexDoc {
    #[default]
    ConstantOne,
    /// n(d) = exp(-1/(1 - 16 (d - r_ref)^2)) + 1 on r_in < d < r_out, else 1.
    BumpAnnulus { r_ref: f64, r_in: f64, r_out: f64 },
    /// n(x) = x * exp(-1/(1 - 16 (d - r_ref)^2)) + 1 on r_in < d < r_out
    /// (x the Cartesian abscissa of the point, as printed in the source
    /// formula; n < 1 is possible for x < 0).
    XWeightedBump { r_ref: f64, r_in: f64, r_out: f64 },
    /// Tabulated radial samples on [r_in, r_out] with natural cubic spline
    /// interpolation; exactly 1 outside.
    CustomTable {
        r_in: f64,
        r_out: f64,
        radii: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverDoc {
    pub p: usize,
    pub e_r: usize,
    /// 0 means "derive from the petal count" (max(8, 4k)).
    pub e_theta: usize,
    /// 0 means "derive from kappa R" (ceil(kappa R_max) + 20).
    pub n_modes: i32,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverDoc {
    fn default() -> Self {
        SolverDoc {
            p: 20,
            e_r: 2,
            e_theta: 0,
            n_modes: 0,
            tol: 1e-11,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct OutputsDoc {
    /// Grid window [x0, x1, y0, y1].
    pub window: [f64; 4],
    /// Grid resolution [nx, ny].
    pub grid: [usize; 2],
    /// Extra probe points.
    pub probes: Vec<[f64; 2]>,
}

impl Default for OutputsDoc {
    fn default() -> Self {
        OutputsDoc {
            window: [-3.0, 6.0, -3.0, 3.0],
            grid: [200, 200],
            probes: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Validated configuration
// ---------------------------------------------------------------------------

/// Fully validated scene: the normalized document (defaults applied) plus
/// typed geometry, profile and solver data.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub doc: SceneDoc,
    pub kappa: f64,
    pub mode: SceneMode,
    pub scatterers: Vec<ScattererSpec>,
    pub disks: Vec<ArtificialDisk>,
    pub index: RefractionIndexSpec,
    pub solver: SolverDoc,
    pub outputs: OutputsDoc,
    pub warnings: Vec<String>,
}

/// Refraction-index profile with evaluation data.
#[derive(Debug, Clone)]
pub enum RefractionIndexSpec {
    ConstantOne,
    BumpAnnulus {
        r_ref: f64,
        r_in: f64,
        r_out: f64,
    },
    XWeightedBump {
        r_ref: f64,
        r_in: f64,
        r_out: f64,
    },
    CustomTable {
        r_in: f64,
        r_out: f64,
        radii: Vec<f64>,
        values: Vec<f64>,
        second_derivs: Vec<f64>,
    },
}

fn bump(d: f64, r_ref: f64) -> f64 {
    let q = 16.0 * (d - r_ref) * (d - r_ref);
    if q >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - q)).exp()
    }
}

impl RefractionIndexSpec {
    /// n at point x for the profile attached to a scatterer at `center`.
    /// Exact piecewise formula, exactly 1 outside the annulus.
    pub fn eval(&self, center: Point2, x: Point2) -> f64 {
        let d = x.dist(center);
        match self {
            RefractionIndexSpec::ConstantOne => 1.0,
            RefractionIndexSpec::BumpAnnulus { r_ref, r_in, r_out } => {
                if d > *r_in && d < *r_out {
                    bump(d, *r_ref) + 1.0
                } else {
                    1.0
                }
            }
            RefractionIndexSpec::XWeightedBump { r_ref, r_in, r_out } => {
                if d > *r_in && d < *r_out {
                    x.x * bump(d, *r_ref) + 1.0
                } else {
                    1.0
                }
            }
            RefractionIndexSpec::CustomTable {
                r_in,
                r_out,
                radii,
                values,
                second_derivs,
            } => {
                if d <= *r_in || d >= *r_out {
                    return 1.0;
                }
                spline_eval(radii, values, second_derivs, d)
            }
        }
    }

    /// Convert to the solver-facing index.
    pub fn to_scene_index(&self, scatterers: &[ScattererSpec]) -> SceneIndex {
        match self {
            RefractionIndexSpec::ConstantOne => SceneIndex::ConstantOne,
            RefractionIndexSpec::BumpAnnulus { r_ref, r_in, r_out } => {
                let (r_ref, r_in, r_out) = (*r_ref, *r_in, *r_out);
                SceneIndex::Radial(Arc::new(move |d| {
                    if d > r_in && d < r_out {
                        bump(d, r_ref) + 1.0
                    } else {
                        1.0
                    }
                }))
            }
            RefractionIndexSpec::XWeightedBump { .. } => {
                let spec = self.clone();
                SceneIndex::PerScatterer(
                    scatterers
                        .iter()
                        .map(|sc| {
                            let spec = spec.clone();
                            let c = sc.center;
                            Arc::new(move |x: Point2| spec.eval(c, x))
                                as Arc<dyn Fn(Point2) -> f64 + Send + Sync>
                        })
                        .collect(),
                )
            }
            RefractionIndexSpec::CustomTable { .. } => {
                let spec = self.clone();
                SceneIndex::Radial(Arc::new(move |d| {
                    spec.eval(Point2::new(0.0, 0.0), Point2::new(d, 0.0))
                }))
            }
        }
    }
}

/// Natural cubic spline second derivatives.
fn spline_setup(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y2 = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let p = sig * y2[i - 1] + 2.0;
        y2[i] = (sig - 1.0) / p;
        let d = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        u[i] = (6.0 * d / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
    }
    for i in (0..n - 1).rev() {
        y2[i] = y2[i] * y2[i + 1] + u[i];
    }
    y2
}

fn spline_eval(x: &[f64], y: &[f64], y2: &[f64], t: f64) -> f64 {
    let n = x.len();
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if x[mid] > t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h = x[hi] - x[lo];
    let a = (x[hi] - t) / h;
    let b = (t - x[lo]) / h;
    a * y[lo] + b * y[hi] + ((a * a * a - a) * y2[lo] + (b * b * b - b) * y2[hi]) * h * h / 6.0
}

// ---------------------------------------------------------------------------
// Parsing and validation
// ---------------------------------------------------------------------------

/// Parse and fully validate a scene document. All invariant violations are
/// reported together.
pub fn parse_scene(text: &str) -> Result<SceneConfig, SceneError> {
    let mut doc: SceneDoc = serde_json::from_str(text)?;
    let mut violations = Vec::new();
    let mut warnings = Vec::new();

    if !(doc.scene.kappa > 0.0) {
        violations.push(format!("scene.kappa must be > 0, got {}", doc.scene.kappa));
    }
    if doc.scatterers.is_empty() {
        violations.push("scene needs at least one scatterer".to_string());
    }
    let mode = match doc.scene.mode {
        ModeDoc::Homogeneous => SceneMode::Homogeneous,
        ModeDoc::Inhomogeneous => SceneMode::Inhomogeneous,
    };

    let mut scatterers = Vec::new();
    for (i, s) in doc.scatterers.iter().enumerate() {
        if !(s.shape.b > s.shape.a && s.shape.a >= 0.0) {
            violations.push(format!(
                "scatterer {i}: shape needs b > a >= 0, got a = {}, b = {}",
                s.shape.a, s.shape.b
            ));
        }
        let bc = match s.bc {
            BcDoc::Dirichlet => BoundaryKind::Dirichlet,
            BcDoc::Neumann => BoundaryKind::Neumann,
            BcDoc::Robin { h } => {
                let h = Complex64::new(h[0], h[1]);
                if doc.scene.kappa * h.im < 0.0 {
                    warnings.push(format!(
                        "scatterer {i}: impedance h = {h} violates Im(conj(kappa) h) >= 0"
                    ));
                }
                BoundaryKind::Robin { h }
            }
        };
        scatterers.push(ScattererSpec {
            center: Point2::new(s.center[0], s.center[1]),
            shape: ShapeSpec {
                amplitude: s.shape.a,
                base_radius: s.shape.b,
                petals: s.shape.k,
                phase: s.shape.theta0,
            },
            bc,
        });
    }

    // default disks: concentric, radius 1.05 * max boundary radius
    let disks: Vec<ArtificialDisk> = match &doc.disks {
        Some(dd) => {
            if dd.len() != doc.scatterers.len() {
                violations.push(format!(
                    "disks: expected one per scatterer ({}), got {}",
                    doc.scatterers.len(),
                    dd.len()
                ));
            }
            dd.iter()
                .map(|d| ArtificialDisk {
                    center: Point2::new(d.center[0], d.center[1]),
                    radius: d.radius,
                })
                .collect()
        }
        None => {
            let dd: Vec<ArtificialDisk> = scatterers
                .iter()
                .map(|s| ArtificialDisk {
                    center: s.center,
                    radius: 1.05 * s.shape.max_radius(),
                })
                .collect();
            doc.disks = Some(
                dd.iter()
                    .map(|d| DiskDoc {
                        center: [d.center.x, d.center.y],
                        radius: d.radius,
                    })
                    .collect(),
            );
            dd
        }
    };
    for (i, (s, d)) in scatterers.iter().zip(&disks).enumerate() {
        if i >= disks.len() {
            break;
        }
        if d.center.dist(s.center) > 1e-12 {
            violations.push(format!(
                "disk {i} must be concentric with its scatterer (got offset {})",
                d.center.dist(s.center)
            ));
        }
        if s.shape.max_radius() >= d.radius {
            violations.push(format!(
                "disk {i} (R = {}) does not strictly contain its scatterer (max radius {})",
                d.radius,
                s.shape.max_radius()
            ));
        }
    }
    if mode == SceneMode::Inhomogeneous {
        for i in 0..disks.len() {
            for j in i + 1..disks.len() {
                if disks[i].center.dist(disks[j].center) <= disks[i].radius + disks[j].radius {
                    violations.push(format!(
                        "disks {i} and {j} overlap; inhomogeneous mode needs pairwise disjoint disks"
                    ));
                }
            }
        }
    }

    // index profile
    let index = match doc.index.clone().unwrap_or_default() {
        IndexDoc::ConstantOne => RefractionIndexSpec::ConstantOne,
        IndexDoc::BumpAnnulus { r_ref, r_in, r_out } => {
            if !(r_out > r_in && r_in >= 0.0) {
                violations.push(format!(
                    "index: annulus needs 0 <= r_in < r_out, got [{r_in}, {r_out}]"
                ));
            }
            RefractionIndexSpec::BumpAnnulus { r_ref, r_in, r_out }
        }
        IndexDoc::XWeightedBump { r_ref, r_in, r_out } => {
            if !(r_out > r_in && r_in >= 0.0) {
                violations.push(format!(
                    "index: annulus needs 0 <= r_in < r_out, got [{r_in}, {r_out}]"
                ));
            }
            RefractionIndexSpec::XWeightedBump { r_ref, r_in, r_out }
        }
        IndexDoc::CustomTable {
            r_in,
            r_out,
            radii,
            values,
        } => {
            if radii.len() != values.len() || radii.len() < 3 {
                violations.push(format!(
                    "index: custom table needs >= 3 matching radii/values, got {}/{}",
                    radii.len(),
                    values.len()
                ));
                RefractionIndexSpec::ConstantOne
            } else if radii.windows(2).any(|w| w[1] <= w[0]) {
                violations.push("index: custom table radii must be strictly increasing".into());
                RefractionIndexSpec::ConstantOne
            } else {
                let second_derivs = spline_setup(&radii, &values);
                RefractionIndexSpec::CustomTable {
                    r_in,
                    r_out,
                    radii,
                    values,
                    second_derivs,
                }
            }
        }
    };

    // inhomogeneity must vanish outside the union of disks: sample 1000
    // exterior points on rings just outside each disk and on a coarse grid
    if !matches!(index, RefractionIndexSpec::ConstantOne) && violations.is_empty() {
        let global_n = |x: Point2| -> f64 {
            let mut n = 1.0;
            for s in &scatterers {
                n += index.eval(s.center, x) - 1.0;
            }
            n
        };
        let mut checked = 0usize;
        'outer: for (i, d) in disks.iter().enumerate() {
            for k in 0..(1000 / disks.len()).max(1) {
                let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.37) / 167.0;
                let r = d.radius * (1.0 + 1e-9 + 0.5 * ((k * 7) % 13) as f64 / 13.0);
                let x = d.center + Point2::new(r * th.cos(), r * th.sin());
                if disks.iter().any(|o| x.dist(o.center) < o.radius) {
                    continue;
                }
                checked += 1;
                let n = global_n(x);
                if (n - 1.0).abs() >= 1e-12 {
                    violations.push(format!(
                        "index: refraction index differs from 1 outside the disks at ({}, {}) near disk {i} (n = {n})",
                        x.x, x.y
                    ));
                    break 'outer;
                }
            }
        }
        let _ = checked;
        // bounded and measurable: finite at quadrature-like samples; warn on n <= 0
        let mut min_n = f64::INFINITY;
        for (s, d) in scatterers.iter().zip(&disks) {
            for k in 0..400 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 49.0;
                let r = s.shape.max_radius()
                    + (d.radius - s.shape.max_radius()) * ((k % 23) as f64 + 0.5) / 23.0;
                let x = s.center + Point2::new(r * th.cos(), r * th.sin());
                let n = global_n(x);
                if !n.is_finite() {
                    violations.push(format!("index: non-finite value at ({}, {})", x.x, x.y));
                }
                min_n = min_n.min(n);
            }
        }
        if min_n <= 0.0 {
            warnings.push(format!(
                "index: minimum sampled refraction index is {min_n} <= 0"
            ));
        }
    }

    let mut solver = doc.solver.clone().unwrap_or_default();
    if solver.p < 2 {
        violations.push(format!("solver.p must be >= 2, got {}", solver.p));
    }
    if solver.e_r < 1 {
        violations.push(format!("solver.e_r must be >= 1, got {}", solver.e_r));
    }
    let petals = scatterers.iter().map(|s| s.shape.petals).max().unwrap_or(0);
    if solver.e_theta == 0 {
        solver.e_theta = crate::geometry::default_e_theta(petals);
    } else if solver.e_theta < 4 {
        violations.push(format!(
            "solver.e_theta must be >= 4 (or 0 for the default), got {}",
            solver.e_theta
        ));
    }
    let rmax = disks.iter().map(|d| d.radius).fold(0.0f64, f64::max);
    if solver.n_modes == 0 {
        solver.n_modes = (doc.scene.kappa * rmax).ceil() as i32 + 20;
    } else {
        for (i, d) in disks.iter().enumerate() {
            if (solver.n_modes as f64) < doc.scene.kappa * d.radius {
                warnings.push(format!(
                    "solver.n_modes = {} is below kappa R = {:.2} for disk {i}; truncation may be unsafe",
                    solver.n_modes,
                    doc.scene.kappa * d.radius
                ));
            }
        }
    }
    if !(solver.tol > 0.0) {
        violations.push(format!("solver.tol must be > 0, got {}", solver.tol));
    }

    if !violations.is_empty() {
        return Err(SceneError::Validation { violations });
    }

    // normalize the retained document so round trips reproduce the config
    doc.solver = Some(solver.clone());
    let outputs = doc.outputs.clone().unwrap_or_default();
    doc.outputs = Some(outputs.clone());
    doc.index = Some(doc.index.clone().unwrap_or_default());

    Ok(SceneConfig {
        kappa: doc.scene.kappa,
        mode,
        scatterers,
        disks,
        index,
        solver,
        outputs,
        warnings,
        doc,
    })
}

impl SceneConfig {
    /// Solver-level scene definition.
    pub fn to_scene_def(&self) -> SceneDef {
        SceneDef {
            kappa: self.kappa,
            mode: self.mode,
            scatterers: self.scatterers.clone(),
            disks: self.disks.clone(),
            index: self.index.to_scene_index(&self.scatterers),
            degree: self.solver.p,
            e_r: self.solver.e_r,
            e_theta: self.solver.e_theta,
            n_modes: self.solver.n_modes,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SceneError + '_ {
    move |source| SceneError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write the field grids, residual history, probe table and run metadata
/// into `dir`. Deterministic for a fixed scene at worker count one.
pub fn write_outputs(
    dir: &Path,
    config: &SceneConfig,
    solution: &SceneSolution,
) -> Result<(), SceneError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    // residual history
    let respath = dir.join("residuals.dat");
    {
        let mut f = std::fs::File::create(&respath).map_err(io_err(&respath))?;
        writeln!(f, "# iter residual").map_err(io_err(&respath))?;
        for (i, r) in solution.report.residuals.iter().enumerate() {
            writeln!(f, "{} {:.16e}", i + 1, r).map_err(io_err(&respath))?;
        }
    }

    // field grids, row-major over y then x
    let [x0, x1, y0, y1] = config.outputs.window;
    let [nx, ny] = config.outputs.grid;
    let rows: Vec<(Vec<String>, Vec<String>)> = (0..ny)
        .into_par_iter()
        .map(|jy| {
            let y = if ny > 1 {
                y0 + (y1 - y0) * jy as f64 / (ny - 1) as f64
            } else {
                y0
            };
            let mut total_rows = Vec::with_capacity(nx);
            let mut scat_rows = Vec::with_capacity(nx);
            for ix in 0..nx {
                let x = if nx > 1 {
                    x0 + (x1 - x0) * ix as f64 / (nx - 1) as f64
                } else {
                    x0
                };
                let s = solution
                    .eval(Point2::new(x, y))
                    .unwrap_or(crate::multiscatter::FieldSample {
                        scattered: Complex64::new(0.0, 0.0),
                        total: Complex64::new(0.0, 0.0),
                        masked: true,
                    });
                let m = if s.masked { 1 } else { 0 };
                total_rows.push(format!(
                    "{x:.8e} {y:.8e} {:.8e} {:.8e} {m}",
                    s.total.re, s.total.im
                ));
                scat_rows.push(format!(
                    "{x:.8e} {y:.8e} {:.8e} {:.8e} {m}",
                    s.scattered.re, s.scattered.im
                ));
            }
            (total_rows, scat_rows)
        })
        .collect();
    for (name, pick) in [("field_total.dat", 0usize), ("field_scattered.dat", 1)] {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).map_err(io_err(&path))?;
        writeln!(f, "# x y re im masked").map_err(io_err(&path))?;
        for row in &rows {
            let lines = if pick == 0 { &row.0 } else { &row.1 };
            for line in lines {
                writeln!(f, "{line}").map_err(io_err(&path))?;
            }
        }
    }

    // probes
    if !config.outputs.probes.is_empty() {
        let path = dir.join("probes.dat");
        let mut f = std::fs::File::create(&path).map_err(io_err(&path))?;
        writeln!(f, "# x y re_scattered im_scattered re_total im_total masked")
            .map_err(io_err(&path))?;
        for p in &config.outputs.probes {
            let s = solution
                .eval(Point2::new(p[0], p[1]))
                .unwrap_or(crate::multiscatter::FieldSample {
                    scattered: Complex64::new(0.0, 0.0),
                    total: Complex64::new(0.0, 0.0),
                    masked: true,
                });
            writeln!(
                f,
                "{:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {}",
                p[0],
                p[1],
                s.scattered.re,
                s.scattered.im,
                s.total.re,
                s.total.im,
                if s.masked { 1 } else { 0 }
            )
            .map_err(io_err(&path))?;
        }
    }

    // run metadata with the full scene block for round trips
    let meta = serde_json::json!({
        "scene": config.doc,
        "iterations": solution.report.iterations,
        "converged": solution.report.converged,
        "wall_time_s": solution.report.wall_time.as_secs_f64(),
        "final_residual": solution.report.residuals.last(),
        "warnings": config.warnings,
    });
    let path = dir.join("run_meta.json");
    std::fs::write(&path, serde_json::to_string_pretty(&meta).unwrap()).map_err(io_err(&path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub fn example1_json(kappa: f64, p: usize) -> String {
        format!(
            r#"{{
  "scene": {{ "kappa": {kappa}, "mode": "homogeneous" }},
  "scatterers": [
    {{ "center": [0.0, 0.0], "shape": {{ "a": 0.3, "b": 0.7, "k": 2, "theta0": {t0} }}, "bc": "dirichlet" }},
    {{ "center": [2.6, 0.0], "shape": {{ "a": 0.3, "b": 0.7, "k": 2, "theta0": {t0} }}, "bc": "dirichlet" }}
  ],
  "disks": [
    {{ "center": [0.0, 0.0], "radius": 1.05 }},
    {{ "center": [2.6, 0.0], "radius": 1.05 }}
  ],
  "solver": {{ "p": {p} }}
}}"#,
            t0 = PI / 4.0
        )
    }

    #[test]
    fn example1_parses_and_defaults_apply() {
        let cfg = parse_scene(&example1_json(10.0, 20)).unwrap();
        assert_eq!(cfg.scatterers.len(), 2);
        assert_eq!(cfg.solver.e_theta, 8); // max(8, 4k) with k = 2
        assert_eq!(cfg.solver.n_modes, 31); // ceil(10 * 1.05) + 20
        assert!(cfg.warnings.is_empty());
        assert_eq!(cfg.mode, SceneMode::Homogeneous);
    }

    #[test]
    fn overlapping_disks_rejected_in_inhom_mode_with_both_ids() {
        let text = r#"{
  "scene": { "kappa": 10.0, "mode": "inhomogeneous" },
  "scatterers": [
    { "center": [0.0, 0.0], "shape": { "a": 0.0, "b": 0.5 } },
    { "center": [1.5, 0.0], "shape": { "a": 0.0, "b": 0.5 } }
  ],
  "disks": [
    { "center": [0.0, 0.0], "radius": 0.9 },
    { "center": [1.5, 0.0], "radius": 0.9 }
  ]
}"#;
        match parse_scene(text) {
            Err(SceneError::Validation { violations }) => {
                assert!(violations.iter().any(|v| v.contains("disks 0 and 1")), "{violations:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn index_outside_disks_rejected_with_sample_point() {
        // bump annulus reaching far outside the disks
        let text = r#"{
  "scene": { "kappa": 10.0, "mode": "inhomogeneous" },
  "scatterers": [ { "center": [0.0, 0.0], "shape": { "a": 0.0, "b": 0.5 } } ],
  "disks": [ { "center": [0.0, 0.0], "radius": 0.9 } ],
  "index": { "profile": "bump-annulus", "r_ref": 1.0, "r_in": 1.0, "r_out": 1.25 }
}"#;
        match parse_scene(text) {
            Err(SceneError::Validation { violations }) => {
                assert!(
                    violations.iter().any(|v| v.contains("outside the disks")),
                    "{violations:?}"
                );
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn multiple_violations_reported_together() {
        let text = r#"{
  "scene": { "kappa": -1.0, "mode": "homogeneous" },
  "scatterers": [ { "center": [0.0, 0.0], "shape": { "a": 0.9, "b": 0.7 } } ],
  "disks": [ { "center": [0.5, 0.0], "radius": 0.1 } ]
}"#;
        match parse_scene(text) {
            Err(SceneError::Validation { violations }) => {
                assert!(violations.len() >= 3, "{violations:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(
            parse_scene("{ not json"),
            Err(SceneError::Parse(_))
        ));
        // missing required keys
        assert!(matches!(
            parse_scene("{}"),
            Err(SceneError::Parse(_))
        ));
    }

    #[test]
    fn bump_annulus_values() {
        let spec = RefractionIndexSpec::BumpAnnulus {
            r_ref: 1.0,
            r_in: 1.0,
            r_out: 1.25,
        };
        let c = Point2::new(0.0, 0.0);
        // midpoint: 16 (0.125)^2 = 0.25 -> 1 + exp(-4/3)
        let v = spec.eval(c, Point2::new(1.125, 0.0));
        assert!((v - (1.0 + (-4.0f64 / 3.0).exp())).abs() < 1e-15);
        // far outside
        assert_eq!(spec.eval(c, Point2::new(3.0, 0.0)), 1.0);
        // exactly at the annulus endpoints the piecewise branch gives 1
        assert_eq!(spec.eval(c, Point2::new(1.0, 0.0)), 1.0);
        assert_eq!(spec.eval(c, Point2::new(1.25, 0.0)), 1.0);
        // outer seam is continuous (the bump vanishes with all derivatives)
        let eps = 1e-8;
        let inside = spec.eval(c, Point2::new(1.25 - eps, 0.0));
        assert!((inside - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetric_bump_is_continuous_at_both_seams() {
        let spec = RefractionIndexSpec::BumpAnnulus {
            r_ref: 0.5,
            r_in: 0.25,
            r_out: 0.75,
        };
        let c = Point2::new(0.0, 0.0);
        let eps = 1e-8;
        for seam in [0.25, 0.75] {
            let lo = spec.eval(c, Point2::new(seam - eps, 0.0));
            let hi = spec.eval(c, Point2::new(seam + eps, 0.0));
            assert!((lo - hi).abs() < 1e-10, "seam {seam}: {lo} vs {hi}");
        }
        // peak value 1 + exp(-1)
        let v = spec.eval(c, Point2::new(0.5, 0.0));
        assert!((v - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn x_weighted_bump_uses_cartesian_abscissa() {
        let spec = RefractionIndexSpec::XWeightedBump {
            r_ref: 0.5,
            r_in: 0.25,
            r_out: 0.75,
        };
        let c = Point2::new(0.0, 0.0);
        let v_pos = spec.eval(c, Point2::new(0.5, 0.0));
        let v_neg = spec.eval(c, Point2::new(-0.5, 0.0));
        assert!((v_pos - (1.0 + 0.5 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((v_neg - (1.0 - 0.5 * (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn custom_table_interpolates_smoothly() {
        let radii: Vec<f64> = (0..=10).map(|i| 0.5 + 0.05 * i as f64).collect();
        let values: Vec<f64> = radii.iter().map(|r| 1.0 + (r - 0.5) * (1.0 - r)).collect();
        let text = format!(
            r#"{{
  "scene": {{ "kappa": 5.0, "mode": "inhomogeneous" }},
  "scatterers": [ {{ "center": [0.0, 0.0], "shape": {{ "a": 0.0, "b": 0.4 }} }} ],
  "disks": [ {{ "center": [0.0, 0.0], "radius": 1.1 }} ],
  "index": {{ "profile": "custom-table", "r_in": 0.5, "r_out": 1.0,
              "radii": {radii:?}, "values": {values:?} }}
}}"#
        );
        let cfg = parse_scene(&text).unwrap();
        let c = Point2::new(0.0, 0.0);
        // at the table nodes the spline reproduces the values
        let v = cfg.index.eval(c, Point2::new(0.75, 0.0));
        assert!((v - (1.0 + 0.25 * 0.25)).abs() < 1e-12);
        // continuity across the seam sampled from both sides
        let eps = 1e-9;
        let a = cfg.index.eval(c, Point2::new(1.0 - eps, 0.0));
        let b = cfg.index.eval(c, Point2::new(1.0 + eps, 0.0));
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn doc_round_trip_reproduces_config() {
        let cfg = parse_scene(&example1_json(10.0, 15)).unwrap();
        let text = serde_json::to_string_pretty(&cfg.doc).unwrap();
        let cfg2 = parse_scene(&text).unwrap();
        assert_eq!(cfg.doc, cfg2.doc);
        assert_eq!(cfg.solver, cfg2.solver);
    }
}
