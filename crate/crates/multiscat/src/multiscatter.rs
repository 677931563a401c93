//! The coupled outer system and its GMRES solution: the homogeneous-media
//! algorithm (traces on the scatterer boundaries) and the locally
//! inhomogeneous algorithm (traces on the artificial circles), plus final
//! field assembly.
//!
//! Per outer iteration, only independent single-scatterer subproblems are
//! solved: one interior SEM solve per scatterer against its stored
//! factorization, plus analytic Hankel propagation between disks. The outer
//! unknown is the concatenation of all scatterers' traces; the inner product
//! is the arc-length-weighted discrete L2 summed over blocks.
//!
//! One structural note: the circle-data interior problem is affine in the
//! foreign-field datum (the incident term enters every solve). Krylov
//! iteration needs a strictly linear operator, so the incident-driven solve
//! is computed once and folded into the right-hand side; operator
//! applications pass the foreign-field datum alone.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{
    build_annular_mesh, default_e_theta, ArtificialDisk, BoundaryKind, GeometryError, Point2,
    ScattererSpec,
};
use crate::harmonics::{
    outgoing_from_trace, HarmonicsError, IncidentWave, OutgoingExpansion, TraceSpace,
};
use crate::sem::{
    assemble_subdomain, InteriorSolution, NodalBasis, SemError, SubdomainOperator, SubdomainRhs,
};
use crate::specfun::SpecFunError;

#[derive(Debug, Error)]
pub enum MultiscatterError {
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("evaluation point ({x}, {y}) lies inside scatterer {scatterer}")]
    EvalInsideScatterer { scatterer: usize, x: f64, y: f64 },
    #[error("artificial disks {i} and {j} overlap; the inhomogeneous-media mode needs pairwise disjoint disks")]
    DisksOverlap { i: usize, j: usize },
    #[error("scene has no scatterers")]
    EmptyScene,
    #[error("scene has {scatterers} scatterers but {disks} disks")]
    DiskCount { scatterers: usize, disks: usize },
}

/// Which coupled formulation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneMode {
    Homogeneous,
    Inhomogeneous,
}

/// Refraction index of the scene. Radial profiles are given in the distance
/// to each scatterer's center and apply identically around every scatterer;
/// per-scatterer profiles take global coordinates.
#[derive(Clone)]
pub enum SceneIndex {
    ConstantOne,
    Radial(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    PerScatterer(Vec<Arc<dyn Fn(Point2) -> f64 + Send + Sync>>),
}

impl SceneIndex {
    /// Index value around scatterer `i` at global point x.
    pub fn eval(&self, i: usize, center: Point2, x: Point2) -> f64 {
        match self {
            SceneIndex::ConstantOne => 1.0,
            SceneIndex::Radial(f) => f(x.dist(center)),
            SceneIndex::PerScatterer(fs) => fs[i](x),
        }
    }
}

/// Full solver-level description of a scene.
#[derive(Clone)]
pub struct SceneDef {
    pub kappa: f64,
    pub mode: SceneMode,
    pub scatterers: Vec<ScattererSpec>,
    pub disks: Vec<ArtificialDisk>,
    pub index: SceneIndex,
    pub degree: usize,
    pub e_r: usize,
    pub e_theta: usize,
    pub n_modes: i32,
    pub tol: f64,
    pub max_iter: usize,
}

impl SceneDef {
    /// Convenience constructor with the solver defaults: E_r = 2, E_theta
    /// scaled to the petal count, N = ceil(kappa R_max) + 20.
    pub fn new(
        kappa: f64,
        mode: SceneMode,
        scatterers: Vec<ScattererSpec>,
        disks: Vec<ArtificialDisk>,
        index: SceneIndex,
        degree: usize,
    ) -> Self {
        let petals = scatterers.iter().map(|s| s.shape.petals).max().unwrap_or(0);
        let rmax = disks.iter().map(|d| d.radius).fold(0.0f64, f64::max);
        SceneDef {
            kappa,
            mode,
            scatterers,
            disks,
            index,
            degree,
            e_r: 2,
            e_theta: default_e_theta(petals),
            n_modes: (kappa * rmax).ceil() as i32 + 20,
            tol: 1e-11,
            max_iter: 100,
        }
    }
}

/// Ordered list of per-scatterer trace blocks; the GMRES unknown.
#[derive(Debug, Clone)]
pub struct TraceVector {
    pub blocks: Vec<Vec<Complex64>>,
}

impl TraceVector {
    pub fn zeros_like(&self) -> TraceVector {
        TraceVector {
            blocks: self
                .blocks
                .iter()
                .map(|b| vec![Complex64::new(0.0, 0.0); b.len()])
                .collect(),
        }
    }

    fn axpy(&mut self, alpha: Complex64, other: &TraceVector) {
        for (b, ob) in self.blocks.iter_mut().zip(&other.blocks) {
            for (v, ov) in b.iter_mut().zip(ob) {
                *v += alpha * ov;
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for b in self.blocks.iter_mut() {
            for v in b.iter_mut() {
                *v *= s;
            }
        }
    }
}

/// Block-weighted discrete L2 inner product (fixed reduction order).
pub struct TraceInner {
    pub weights: Vec<Vec<f64>>,
}

impl TraceInner {
    pub fn dot(&self, u: &TraceVector, v: &TraceVector) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (bw, (bu, bv)) in self.weights.iter().zip(u.blocks.iter().zip(&v.blocks)) {
            for ((w, a), b) in bw.iter().zip(bu).zip(bv) {
                acc += *w * a * b.conj();
            }
        }
        acc
    }

    pub fn norm(&self, u: &TraceVector) -> f64 {
        let mut acc = 0.0;
        for (bw, bu) in self.weights.iter().zip(&u.blocks) {
            for (w, a) in bw.iter().zip(bu) {
                acc += *w * a.norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Outer-iteration record.
#[derive(Debug, Clone)]
pub struct IterationReport {
    /// Relative residual after each outer iteration.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub wall_time: Duration,
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// GMRES (Arnoldi with modified Gram-Schmidt, Givens least squares, no restart)
// ---------------------------------------------------------------------------

pub fn gmres<F>(
    mut apply: F,
    b: &TraceVector,
    inner: &TraceInner,
    tol: f64,
    max_iter: usize,
    w0: Option<TraceVector>,
) -> Result<(TraceVector, IterationReport), MultiscatterError>
where
    F: FnMut(&TraceVector) -> Result<TraceVector, MultiscatterError>,
{
    let t0 = Instant::now();
    let b_norm = inner.norm(b);
    if b_norm == 0.0 {
        return Ok((
            b.zeros_like(),
            IterationReport {
                residuals: vec![],
                iterations: 0,
                wall_time: t0.elapsed(),
                converged: true,
            },
        ));
    }
    let w0 = w0.unwrap_or_else(|| b.zeros_like());
    let r0 = {
        let mut r = b.clone();
        let aw = apply(&w0)?;
        // r = b - A w0; skip the apply when w0 is exactly zero
        let w0_zero = w0.blocks.iter().all(|bl| bl.iter().all(|v| v.norm_sqr() == 0.0));
        if !w0_zero {
            r.axpy(Complex64::new(-1.0, 0.0), &aw);
        }
        r
    };
    let beta = inner.norm(&r0);
    if beta <= tol * b_norm {
        return Ok((
            w0,
            IterationReport {
                residuals: vec![beta / b_norm],
                iterations: 0,
                wall_time: t0.elapsed(),
                converged: true,
            },
        ));
    }

    let mut basis: Vec<TraceVector> = Vec::with_capacity(max_iter + 1);
    {
        let mut v0 = r0;
        v0.scale(1.0 / beta);
        basis.push(v0);
    }
    // Hessenberg columns after Givens reduction, and the rotations
    let mut r_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut givens: Vec<(Complex64, Complex64)> = Vec::new(); // (c, s)
    let mut g = vec![Complex64::new(0.0, 0.0); max_iter + 1];
    g[0] = Complex64::new(beta, 0.0);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut m = 0usize;

    for j in 0..max_iter {
        let mut w = apply(&basis[j])?;
        let mut h = vec![Complex64::new(0.0, 0.0); j + 2];
        for (i, vi) in basis.iter().enumerate() {
            let hij = inner.dot(&w, vi);
            h[i] = hij;
            w.axpy(-hij, vi);
        }
        let hlast = inner.norm(&w);
        h[j + 1] = Complex64::new(hlast, 0.0);

        // apply the accumulated rotations, then a new one to kill h[j+1]
        for (i, (c, s)) in givens.iter().enumerate() {
            let t = c * h[i] + s * h[i + 1];
            h[i + 1] = -s.conj() * h[i] + c.conj() * h[i + 1];
            h[i] = t;
        }
        let (c, s) = {
            let a = h[j];
            let bb = h[j + 1];
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if denom == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (a.conj() / denom, bb.conj() / denom)
            }
        };
        let t = c * h[j] + s * h[j + 1];
        h[j] = t;
        h[j + 1] = Complex64::new(0.0, 0.0);
        givens.push((c, s));
        let gt = c * g[j] + s * g[j + 1];
        g[j + 1] = -s.conj() * g[j] + c.conj() * g[j + 1];
        g[j] = gt;

        r_cols.push(h[..=j].to_vec());
        m = j + 1;
        let rel = g[j + 1].norm() / b_norm;
        residuals.push(rel);
        if rel <= tol {
            converged = true;
            break;
        }
        if hlast == 0.0 {
            // lucky breakdown: the Krylov space is invariant
            converged = true;
            break;
        }
        let mut v = w;
        v.scale(1.0 / hlast);
        basis.push(v);
    }

    // back substitution R y = g
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    for i in (0..m).rev() {
        let mut acc = g[i];
        for k in i + 1..m {
            acc -= r_cols[k][i] * y[k];
        }
        y[i] = acc / r_cols[i][i];
    }
    let mut w_out = w0;
    for (i, yv) in y.iter().enumerate() {
        w_out.axpy(*yv, &basis[i]);
    }
    Ok((
        w_out,
        IterationReport {
            residuals,
            iterations: m,
            wall_time: t0.elapsed(),
            converged,
        },
    ))
}

// ---------------------------------------------------------------------------
// Prepared scenes and the coupled operators
// ---------------------------------------------------------------------------

/// A validated scene with every subdomain assembled and factorized.
pub struct PreparedScene {
    pub def: SceneDef,
    pub ops: Vec<SubdomainOperator>,
    pub inc: IncidentWave,
}

pub fn prepare_scene(def: SceneDef) -> Result<PreparedScene, MultiscatterError> {
    if def.scatterers.is_empty() {
        return Err(MultiscatterError::EmptyScene);
    }
    if def.scatterers.len() != def.disks.len() {
        return Err(MultiscatterError::DiskCount {
            scatterers: def.scatterers.len(),
            disks: def.disks.len(),
        });
    }
    if def.mode == SceneMode::Inhomogeneous {
        for i in 0..def.disks.len() {
            for j in i + 1..def.disks.len() {
                let d = def.disks[i].center.dist(def.disks[j].center);
                if d <= def.disks[i].radius + def.disks[j].radius {
                    return Err(MultiscatterError::DisksOverlap { i, j });
                }
            }
        }
    }
    for sc in &def.scatterers {
        if let BoundaryKind::Robin { h } = sc.bc {
            if def.kappa * h.im < 0.0 {
                eprintln!(
                    "warning: impedance constant h = {h} has Im(conj(kappa) h) < 0; well-posedness is not guaranteed"
                );
            }
        }
    }
    let basis = NodalBasis::new(def.degree);
    let ops = def
        .scatterers
        .par_iter()
        .zip(def.disks.par_iter())
        .enumerate()
        .map(|(i, (sc, disk))| {
            let mesh = build_annular_mesh(sc, disk, def.e_r, def.e_theta)?;
            let trace = TraceSpace::build(*disk, def.kappa, def.n_modes, def.e_theta, &basis)
                .map_err(SemError::from)?;
            let center = sc.center;
            let index = def.index.clone();
            let sampler = move |x: Point2| index.eval(i, center, x);
            Ok(assemble_subdomain(&mesh, &basis, &trace, def.kappa, &sampler)?)
        })
        .collect::<Result<Vec<_>, MultiscatterError>>()?;
    Ok(PreparedScene {
        inc: IncidentWave { kappa: def.kappa },
        def,
        ops,
    })
}

impl PreparedScene {
    /// Inner-product weights of the outer trace space for the scene's mode.
    pub fn trace_inner(&self) -> TraceInner {
        let weights = match self.def.mode {
            SceneMode::Homogeneous => self.ops.iter().map(|op| op.body.weights.clone()).collect(),
            SceneMode::Inhomogeneous => {
                self.ops.iter().map(|op| op.trace.weights.clone()).collect()
            }
        };
        TraceInner { weights }
    }

    pub fn zero_trace(&self) -> TraceVector {
        TraceVector {
            blocks: self
                .ops
                .iter()
                .map(|op| vec![Complex64::new(0.0, 0.0); op.n_theta()])
                .collect(),
        }
    }

    /// Discrete norm of the incident wave per scatterer block.
    pub fn incident_norms(&self) -> Vec<f64> {
        let inner = self.trace_inner();
        self.ops
            .iter()
            .enumerate()
            .map(|(i, op)| {
                let pts = match self.def.mode {
                    SceneMode::Homogeneous => op.body.points.clone(),
                    SceneMode::Inhomogeneous => op.trace.points(),
                };
                let mut acc = 0.0;
                for (w, p) in inner.weights[i].iter().zip(&pts) {
                    acc += w * self.inc.value(*p).norm_sqr();
                }
                acc.sqrt()
            })
            .collect()
    }
}

struct SubSolve {
    sol: InteriorSolution,
    exp: OutgoingExpansion,
}

/// Solve every scatterer's subproblem for given boundary data and build its
/// outgoing expansion from the circle trace of the solve.
fn solve_all_hom(
    scene: &PreparedScene,
    w: &TraceVector,
) -> Result<Vec<SubSolve>, MultiscatterError> {
    scene
        .ops
        .par_iter()
        .zip(w.blocks.par_iter())
        .map(|(op, data)| {
            let sol = op.solve(&SubdomainRhs::ScattererData(data))?;
            let gtrace = op.gamma_trace(&sol);
            let coeffs = op.trace.fourier_coeffs(&gtrace)?;
            let exp = outgoing_from_trace(&op.trace, coeffs).map_err(SemError::from)?;
            Ok(SubSolve { sol, exp })
        })
        .collect()
}

/// Boundary-operator sample of a foreign wave at one scatterer-boundary
/// point: value for sound-soft, normal derivative for sound-hard, combined
/// for impedance.
fn boundary_operator_sample(
    bc: BoundaryKind,
    value: Complex64,
    grad: Option<[Complex64; 2]>,
    normal: Point2,
) -> Complex64 {
    match bc {
        BoundaryKind::Dirichlet => value,
        BoundaryKind::Neumann => {
            let g = grad.expect("gradient required for Neumann data");
            g[0] * normal.x + g[1] * normal.y
        }
        BoundaryKind::Robin { h } => {
            let g = grad.expect("gradient required for Robin data");
            g[0] * normal.x + g[1] * normal.y + h * value
        }
    }
}

/// Evaluate scatterer j's wave (solve + expansion) at a point: analytic
/// expansion outside its disk, SEM interpolation inside the annulus.
fn eval_foreign_wave(
    scene: &PreparedScene,
    j: usize,
    sub: &SubSolve,
    x: Point2,
    want_grad: bool,
) -> Result<(Complex64, Option<[Complex64; 2]>), MultiscatterError> {
    let disk = &scene.def.disks[j];
    if x.dist(disk.center) >= disk.radius * (1.0 - 1e-12) {
        if want_grad {
            let (v, g) = sub.exp.eval_with_gradient(x)?;
            Ok((v, Some(g)))
        } else {
            Ok((sub.exp.eval(x)?, None))
        }
    } else {
        scene.ops[j].eval_solution(&sub.sol, x, want_grad).map_err(|e| match e {
            SemError::Geometry(GeometryError::NotInDomain(px, py)) => {
                MultiscatterError::EvalInsideScatterer {
                    scatterer: j,
                    x: px,
                    y: py,
                }
            }
            other => other.into(),
        })
    }
}

/// One application of the homogeneous-media coupled operator:
/// out_i = W_i + sum_{j != i} B_i[w_j] on the scatterer grids, where w_j is
/// the outgoing wave driven by scatterer data W_j.
pub fn apply_operator_hom(
    scene: &PreparedScene,
    w: &TraceVector,
) -> Result<TraceVector, MultiscatterError> {
    let subs = solve_all_hom(scene, w)?;
    let blocks = scene
        .ops
        .par_iter()
        .enumerate()
        .map(|(i, op)| {
            let bc = scene.def.scatterers[i].bc;
            let want_grad = !matches!(bc, BoundaryKind::Dirichlet);
            let mut out = w.blocks[i].clone();
            for (a, (&x, &nm)) in op.body.points.iter().zip(&op.body.normals).enumerate() {
                for (j, sub) in subs.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let (v, g) = eval_foreign_wave(scene, j, sub, x, want_grad)?;
                    out[a] += boundary_operator_sample(bc, v, g, nm);
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, MultiscatterError>>()?;
    Ok(TraceVector { blocks })
}

/// Foreign-field values and normal derivatives on disk i's circle grid.
fn foreign_field_on_circle(
    scene: &PreparedScene,
    exps: &[OutgoingExpansion],
    i: usize,
) -> Result<(Vec<Complex64>, Vec<Complex64>), MultiscatterError> {
    let op = &scene.ops[i];
    let pts = op.trace.points();
    let nms = op.trace.normals();
    let mut values = vec![Complex64::new(0.0, 0.0); pts.len()];
    let mut derivs = vec![Complex64::new(0.0, 0.0); pts.len()];
    for (j, exp) in exps.iter().enumerate() {
        if j == i {
            continue;
        }
        for (a, (&x, &nm)) in pts.iter().zip(&nms).enumerate() {
            let (v, g) = exp.eval_with_gradient(x)?;
            values[a] += v;
            derivs[a] += g[0] * nm.x + g[1] * nm.y;
        }
    }
    Ok((values, derivs))
}

/// One application of the inhomogeneous-media coupled operator (linear part):
/// out_i = W_i + f_i - S'_lin(T' f_i)|_Gamma_i with f_i the foreign outgoing
/// fields on circle i.
pub fn apply_operator_inhom(
    scene: &PreparedScene,
    w: &TraceVector,
) -> Result<TraceVector, MultiscatterError> {
    let exps: Vec<OutgoingExpansion> = scene
        .ops
        .par_iter()
        .zip(w.blocks.par_iter())
        .map(|(op, data)| {
            let coeffs = op.trace.fourier_coeffs(data)?;
            Ok(outgoing_from_trace(&op.trace, coeffs).map_err(SemError::from)?)
        })
        .collect::<Result<Vec<_>, MultiscatterError>>()?;
    let blocks = scene
        .ops
        .par_iter()
        .enumerate()
        .map(|(i, op)| {
            let (f_vals, f_derivs) = foreign_field_on_circle(scene, &exps, i)?;
            let psi = op.trace.tprime_apply(&f_vals, &f_derivs)?;
            let sol = op.solve(&SubdomainRhs::GammaData(&psi))?;
            let t = op.gamma_trace(&sol);
            let out: Vec<Complex64> = w.blocks[i]
                .iter()
                .zip(f_vals.iter().zip(&t))
                .map(|(wv, (fv, tv))| wv + fv - tv)
                .collect();
            Ok(out)
        })
        .collect::<Result<Vec<_>, MultiscatterError>>()?;
    Ok(TraceVector { blocks })
}

/// Right-hand side of the coupled system. In the inhomogeneous mode the
/// incident-driven interior solve is folded in here so the operator stays
/// linear: b_i = -u_in|_Gamma_i + S'_lin(T' u_in)|_Gamma_i.
pub fn build_rhs(scene: &PreparedScene) -> Result<TraceVector, MultiscatterError> {
    let inc = scene.inc;
    let blocks = match scene.def.mode {
        SceneMode::Homogeneous => scene
            .ops
            .par_iter()
            .enumerate()
            .map(|(i, op)| {
                let bc = scene.def.scatterers[i].bc;
                let out = op
                    .body
                    .points
                    .iter()
                    .zip(&op.body.normals)
                    .map(|(&x, &nm)| {
                        let v = inc.value(x);
                        let g = inc.gradient(x);
                        -boundary_operator_sample(bc, v, Some(g), nm)
                    })
                    .collect::<Vec<_>>();
                Ok(out)
            })
            .collect::<Result<Vec<_>, MultiscatterError>>()?,
        SceneMode::Inhomogeneous => scene
            .ops
            .par_iter()
            .map(|op| {
                let pts = op.trace.points();
                let nms = op.trace.normals();
                let (v_inc, d_inc) = inc.data(&pts, &nms);
                let psi = op.trace.tprime_apply(&v_inc, &d_inc)?;
                let sol = op.solve(&SubdomainRhs::GammaData(&psi))?;
                let t = op.gamma_trace(&sol);
                let out: Vec<Complex64> = v_inc
                    .iter()
                    .zip(&t)
                    .map(|(vi, ti)| -vi + ti)
                    .collect();
                Ok(out)
            })
            .collect::<Result<Vec<_>, MultiscatterError>>()?,
    };
    Ok(TraceVector { blocks })
}

// ---------------------------------------------------------------------------
// Scene solution and field evaluation
// ---------------------------------------------------------------------------

/// A point sample of the solved field.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub scattered: Complex64,
    pub total: Complex64,
    /// True when the point lies inside a scatterer; field values are zeroed.
    pub masked: bool,
}

/// Converged scene with per-scatterer subdomain solutions and outgoing
/// expansions; evaluates the field anywhere.
pub struct SceneSolution {
    pub scene: PreparedScene,
    pub w: TraceVector,
    pub report: IterationReport,
    subs: Vec<SubSolve>,
}

/// Run the full pipeline: right-hand side, GMRES on the mode's operator,
/// final subdomain solves.
pub fn solve_scene(scene: PreparedScene) -> Result<SceneSolution, MultiscatterError> {
    let t0 = Instant::now();
    let b = build_rhs(&scene)?;
    let inner = scene.trace_inner();
    let mode = scene.def.mode;
    let apply = |v: &TraceVector| match mode {
        SceneMode::Homogeneous => apply_operator_hom(&scene, v),
        SceneMode::Inhomogeneous => apply_operator_inhom(&scene, v),
    };
    let (w, mut report) = gmres(apply, &b, &inner, scene.def.tol, scene.def.max_iter, None)?;
    if !report.converged {
        eprintln!(
            "warning: GMRES did not reach tol {:.1e} in {} iterations (residual {:.3e})",
            scene.def.tol,
            report.iterations,
            report.residuals.last().copied().unwrap_or(f64::NAN)
        );
    }

    // final subdomain fields
    let subs = match mode {
        SceneMode::Homogeneous => solve_all_hom(&scene, &w)?,
        SceneMode::Inhomogeneous => {
            let exps: Vec<OutgoingExpansion> = scene
                .ops
                .par_iter()
                .zip(w.blocks.par_iter())
                .map(|(op, data)| {
                    let coeffs = op.trace.fourier_coeffs(data)?;
                    Ok(outgoing_from_trace(&op.trace, coeffs).map_err(SemError::from)?)
                })
                .collect::<Result<Vec<_>, MultiscatterError>>()?;
            let inc = scene.inc;
            scene
                .ops
                .par_iter()
                .enumerate()
                .map(|(i, op)| {
                    // total interior field: incident T' datum plus foreign datum
                    let pts = op.trace.points();
                    let nms = op.trace.normals();
                    let (v_inc, d_inc) = inc.data(&pts, &nms);
                    let (f_vals, f_derivs) = foreign_field_on_circle(&scene, &exps, i)?;
                    let vals: Vec<Complex64> =
                        v_inc.iter().zip(&f_vals).map(|(a, b)| a + b).collect();
                    let ders: Vec<Complex64> =
                        d_inc.iter().zip(&f_derivs).map(|(a, b)| a + b).collect();
                    let psi = op.trace.tprime_apply(&vals, &ders)?;
                    let sol = op.solve(&SubdomainRhs::GammaData(&psi))?;
                    Ok(SubSolve {
                        sol,
                        exp: exps[i].clone(),
                    })
                })
                .collect::<Result<Vec<_>, MultiscatterError>>()?
        }
    };
    report.wall_time = t0.elapsed();
    Ok(SceneSolution {
        scene,
        w,
        report,
        subs,
    })
}

impl SceneSolution {
    /// Scattered and total field at a point. Points inside a scatterer are
    /// reported masked.
    pub fn eval(&self, x: Point2) -> Result<FieldSample, MultiscatterError> {
        let def = &self.scene.def;
        for sc in &def.scatterers {
            let rel = x - sc.center;
            let th = rel.y.atan2(rel.x);
            if rel.norm() < sc.shape.radius(th) * (1.0 - 1e-12) {
                return Ok(FieldSample {
                    scattered: Complex64::new(0.0, 0.0),
                    total: Complex64::new(0.0, 0.0),
                    masked: true,
                });
            }
        }
        let u_in = self.scene.inc.value(x);
        match def.mode {
            SceneMode::Homogeneous => {
                let mut u_sc = Complex64::new(0.0, 0.0);
                for (j, sub) in self.subs.iter().enumerate() {
                    let (v, _) = eval_foreign_wave(&self.scene, j, sub, x, false)?;
                    u_sc += v;
                }
                Ok(FieldSample {
                    scattered: u_sc,
                    total: u_sc + u_in,
                    masked: false,
                })
            }
            SceneMode::Inhomogeneous => {
                for (i, disk) in def.disks.iter().enumerate() {
                    if x.dist(disk.center) < disk.radius * (1.0 - 1e-12) {
                        // the interior solve carries the total field
                        let (total, _) = self.scene.ops[i]
                            .eval_solution(&self.subs[i].sol, x, false)
                            .map_err(|e| match e {
                                SemError::Geometry(GeometryError::NotInDomain(px, py)) => {
                                    MultiscatterError::EvalInsideScatterer {
                                        scatterer: i,
                                        x: px,
                                        y: py,
                                    }
                                }
                                other => other.into(),
                            })?;
                        return Ok(FieldSample {
                            scattered: total - u_in,
                            total,
                            masked: false,
                        });
                    }
                }
                let mut u_sc = Complex64::new(0.0, 0.0);
                for sub in &self.subs {
                    u_sc += sub.exp.eval(x)?;
                }
                Ok(FieldSample {
                    scattered: u_sc,
                    total: u_sc + u_in,
                    masked: false,
                })
            }
        }
    }

    /// Fresh residual of the coupled equation at the converged iterate,
    /// per scatterer, relative to the incident-wave norm of the same block.
    /// For the homogeneous mode this is exactly the boundary-condition
    /// residual ||B_i[u_total]|| / ||u_in|| with the own-wave term taken from
    /// its imposed data.
    pub fn bc_residuals(&self) -> Result<Vec<f64>, MultiscatterError> {
        let b = build_rhs(&self.scene)?;
        let aw = match self.scene.def.mode {
            SceneMode::Homogeneous => apply_operator_hom(&self.scene, &self.w)?,
            SceneMode::Inhomogeneous => apply_operator_inhom(&self.scene, &self.w)?,
        };
        let inner = self.scene.trace_inner();
        let inc_norms = self.scene.incident_norms();
        Ok((0..self.scene.ops.len())
            .map(|i| {
                let mut acc = 0.0;
                for ((w, a), bb) in inner.weights[i]
                    .iter()
                    .zip(&aw.blocks[i])
                    .zip(&b.blocks[i])
                {
                    acc += w * (a - bb).norm_sqr();
                }
                acc.sqrt() / inc_norms[i]
            })
            .collect())
    }

    /// Scatterer-boundary trace residual of the interior solves (the strong
    /// form of the scatterer condition for the inhomogeneous mode).
    pub fn ring0_residuals(&self) -> Vec<f64> {
        self.scene
            .ops
            .iter()
            .zip(&self.subs)
            .map(|(op, sub)| {
                let tr = op.ring0_trace(&sub.sol);
                let mut acc = 0.0;
                for (w, v) in op.body.weights.iter().zip(&tr) {
                    acc += w * v.norm_sqr();
                }
                acc.sqrt()
            })
            .collect()
    }
}
