//! High-order spectral element discretization and direct solution of the
//! annular subdomain problems, sharing one factorization per subdomain across
//! unlimited right-hand sides.
//!
//! Discretization: tensor Legendre-Gauss-Lobatto (LGL) collocation on each
//! Gordon-Hall quad, which keeps the volume mass diagonal per element. The
//! weak form is
//!   A(v, w) = -(grad v, grad w) + kappa^2 (n v, w) + <T v, w>_Gamma
//!             [+ <h v, w>_{dOmega} for impedance scatterers]
//! with a truncated DtN operator T on the artificial circle. The DtN coupling
//! is assembled semi-analytically: nodal -> Legendre -> closed-form
//! oscillatory integrals, dense only on the circle nodes.
//!
//! The direct solve uses static condensation: element-interior blocks are
//! factorized once (real LU, the volume operator is real), and the assembled
//! skeleton system (element edges, where the complex DtN and impedance terms
//! live) is factorized once as a dense complex LU. Solves against new
//! right-hand sides reuse both factorizations.

use ndarray::{Array1, Array2};
use ndarray_linalg::{FactorizeInto, LUFactorized, Solve};
use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{
    scatterer_boundary_grid, AnnularMesh, ArcEdge, BoundaryGrid, BoundaryKind, GeometryError,
    Point2,
};
use crate::harmonics::TraceSpace;
use crate::specfun::{spherical_j_array, SpecFunError};

#[derive(Debug, Error)]
pub enum SemError {
    #[error("singular subdomain factorization (kappa = {kappa}, p = {p}, N = {n_modes}): resonance or under-resolution")]
    Singular { kappa: f64, p: usize, n_modes: i32 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trace space does not match the mesh (e_theta {trace} vs {mesh})")]
    TraceMismatch { trace: usize, mesh: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("linear algebra backend: {0}")]
    Backend(String),
}

// ---------------------------------------------------------------------------
// Legendre-Gauss-Lobatto rule and nodal basis
// ---------------------------------------------------------------------------

/// LGL quadrature rule of degree p: p+1 nodes (roots of (1-x^2) P_p'(x)),
/// weights w_k = 2 / (p (p+1) P_p(x_k)^2). Exact through degree 2p-1.
#[derive(Debug, Clone)]
pub struct LglRule {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre values P_0(x) .. P_p(x).
pub fn legendre_all(p: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(p + 1);
    out.push(1.0);
    if p >= 1 {
        out.push(x);
    }
    for k in 1..p {
        let next = ((2 * k + 1) as f64 * x * out[k] - k as f64 * out[k - 1]) / (k + 1) as f64;
        out.push(next);
    }
    out
}

/// (P_p(x), P_p'(x)).
fn legendre_with_deriv(p: usize, x: f64) -> (f64, f64) {
    let v = legendre_all(p, x);
    if p == 0 {
        return (1.0, 0.0);
    }
    let d = if x.abs() < 1.0 {
        p as f64 * (v[p - 1] - x * v[p]) / (1.0 - x * x)
    } else {
        // P_p'(+-1) = (+-1)^{p-1} p (p+1) / 2
        let sign = if x > 0.0 || p % 2 == 1 { 1.0 } else { -1.0 };
        sign * p as f64 * (p + 1) as f64 / 2.0
    };
    (v[p], d)
}

pub fn lgl_rule(p: usize) -> LglRule {
    assert!(p >= 1, "LGL rule needs degree >= 1");
    let mut nodes = vec![0.0; p + 1];
    nodes[0] = -1.0;
    nodes[p] = 1.0;
    for k in 1..p {
        // Newton on P_p'(x) with Chebyshev-Lobatto initial guess
        let mut x = -(std::f64::consts::PI * k as f64 / p as f64).cos();
        for _ in 0..100 {
            let v = legendre_all(p, x);
            let dp = p as f64 * (v[p - 1] - x * v[p]) / (1.0 - x * x);
            // P_p'' from the Legendre ODE
            let ddp = (2.0 * x * dp - (p * (p + 1)) as f64 * v[p]) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = x;
    }
    let scale = 2.0 / (p as f64 * (p + 1) as f64);
    let weights = nodes
        .iter()
        .map(|&x| {
            let (v, _) = legendre_with_deriv(p, x);
            scale / (v * v)
        })
        .collect();
    LglRule {
        degree: p,
        nodes,
        weights,
    }
}

/// Lagrange nodal basis on the LGL nodes: barycentric evaluation, the
/// differentiation matrix, and the exact nodal -> Legendre change of basis.
#[derive(Debug, Clone)]
pub struct NodalBasis {
    pub rule: LglRule,
    bary: Vec<f64>,
    /// deriv[[i, j]] = l_j'(x_i)
    pub deriv: Array2<f64>,
    /// to_legendre[[k, m]]: coefficient of P_m in l_k
    pub to_legendre: Array2<f64>,
}

impl NodalBasis {
    pub fn new(p: usize) -> Self {
        let rule = lgl_rule(p);
        let n = p + 1;
        let mut bary = vec![1.0; n];
        for k in 0..n {
            for j in 0..n {
                if j != k {
                    bary[k] *= rule.nodes[k] - rule.nodes[j];
                }
            }
        }
        let mut scale = 0.0f64;
        for b in &bary {
            scale = scale.max(b.abs());
        }
        for b in bary.iter_mut() {
            *b = scale / *b;
        }

        let mut deriv = Array2::zeros((n, n));
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (rule.nodes[i] - rule.nodes[j]);
                    deriv[[i, j]] = d;
                    diag -= d;
                }
            }
            deriv[[i, i]] = diag;
        }

        // discrete Legendre transform: a_{km} = w_k P_m(x_k) / gamma_m with
        // gamma_m the discrete norm; exact for the interpolation space
        let mut legvals = Array2::zeros((n, n)); // [node, m]
        for (k, &x) in rule.nodes.iter().enumerate() {
            for (m, v) in legendre_all(p, x).into_iter().enumerate() {
                legvals[[k, m]] = v;
            }
        }
        let mut to_legendre = Array2::zeros((n, n));
        for m in 0..n {
            let gamma: f64 = (0..n).map(|j| rule.weights[j] * legvals[[j, m]].powi(2)).sum();
            for k in 0..n {
                to_legendre[[k, m]] = rule.weights[k] * legvals[[k, m]] / gamma;
            }
        }

        NodalBasis {
            rule,
            bary,
            deriv,
            to_legendre,
        }
    }

    pub fn degree(&self) -> usize {
        self.rule.degree
    }

    /// Values of all Lagrange basis functions at t.
    pub fn lagrange_all(&self, t: f64) -> Vec<f64> {
        let n = self.rule.nodes.len();
        for (k, &x) in self.rule.nodes.iter().enumerate() {
            if (t - x).abs() < 1e-14 {
                let mut e = vec![0.0; n];
                e[k] = 1.0;
                return e;
            }
        }
        let terms: Vec<f64> = (0..n)
            .map(|k| self.bary[k] / (t - self.rule.nodes[k]))
            .collect();
        let denom: f64 = terms.iter().sum();
        terms.iter().map(|&v| v / denom).collect()
    }

    /// Derivatives of all Lagrange basis functions at t.
    pub fn lagrange_deriv_all(&self, t: f64) -> Vec<f64> {
        let n = self.rule.nodes.len();
        for (k, &x) in self.rule.nodes.iter().enumerate() {
            if (t - x).abs() < 1e-14 {
                return (0..n).map(|j| self.deriv[[k, j]]).collect();
            }
        }
        let lv = self.lagrange_all(t);
        let s: f64 = self.rule.nodes.iter().map(|&x| 1.0 / (t - x)).sum();
        (0..n)
            .map(|k| lv[k] * (s - 1.0 / (t - self.rule.nodes[k])))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Analytic oscillatory boundary integrals
// ---------------------------------------------------------------------------

/// q_m(z) = int_{-1}^{1} P_m(xi) e^{-i z xi} dxi = 2 (-i)^m j_m(z) for z > 0,
/// with q_m(-z) = conj(q_m(z)) and q_m(0) = 2 delta_{m0}.
fn plane_wave_legendre_row(z: f64, m_max: usize) -> Result<Vec<Complex64>, SpecFunError> {
    if z == 0.0 {
        let mut out = vec![Complex64::new(0.0, 0.0); m_max + 1];
        out[0] = Complex64::new(2.0, 0.0);
        return Ok(out);
    }
    let j = spherical_j_array(m_max, z.abs())?;
    let unit = if z > 0.0 {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::new(0.0, 1.0)
    };
    let mut factor = Complex64::new(2.0, 0.0);
    Ok(j
        .into_iter()
        .map(|jm| {
            let v = factor * jm;
            factor *= unit;
            v
        })
        .collect())
}

/// I_nm for one arc edge and all Legendre degrees m = 0..m_max:
/// I_nm = ha e^{-i n beta} int_{-1}^{1} P_m(xi) e^{-i n ha xi} dxi.
pub fn dtn_integral_row(edge: &ArcEdge, n: i32, m_max: usize) -> Result<Vec<Complex64>, SpecFunError> {
    let ha = edge.half_aperture;
    let z = n as f64 * ha;
    let q = plane_wave_legendre_row(z, m_max)?;
    let front = ha * Complex64::new(0.0, -(n as f64) * edge.mid_angle).exp();
    Ok(q.into_iter().map(|v| front * v).collect())
}

/// Single analytic integral I_nm (see [`dtn_integral_row`]).
pub fn dtn_integrals(edge: &ArcEdge, n: i32, m: usize) -> Result<Complex64, SpecFunError> {
    Ok(dtn_integral_row(edge, n, m)?[m])
}

// ---------------------------------------------------------------------------
// Subdomain operator
// ---------------------------------------------------------------------------

/// Right-hand-side data for one subdomain solve.
pub enum SubdomainRhs<'a> {
    /// Scatterer-data-driven problem (homogeneous-media mode): boundary data
    /// psi on the scatterer grid, with the DtN condition homogeneous.
    ScattererData(&'a [Complex64]),
    /// Circle-data-driven problem (inhomogeneous-media mode): the full linear
    /// datum g in T' v = g on the circle, with the scatterer condition
    /// homogeneous. The incident contribution is the caller's business.
    GammaData(&'a [Complex64]),
}

/// Per-element nodal coefficients of one subdomain solve (global numbering:
/// node (r, a) at index r * n_theta + a, shared nodes stored once).
#[derive(Debug, Clone)]
pub struct InteriorSolution {
    pub values: Vec<Complex64>,
}

struct ElemFactor {
    lu: LUFactorized<ndarray::OwnedRepr<f64>>,
    a_ib: Array2<f64>,
    interior_nodes: Vec<usize>,
    boundary_nodes: Vec<usize>,
    boundary_skel: Vec<usize>,
    // metric data for on-demand reassembly of the local volume matrix
    g11: Vec<f64>,
    g12: Vec<f64>,
    g22: Vec<f64>,
    mass: Vec<f64>, // kappa^2 n(x) w_a w_b |det J| on the diagonal
}

/// Assembled and factorized discrete operator of one annular subdomain,
/// reusable across unlimited right-hand sides without refactorization.
pub struct SubdomainOperator {
    pub mesh: AnnularMesh,
    pub basis: NodalBasis,
    pub trace: TraceSpace,
    pub kappa: f64,
    pub bc: BoundaryKind,
    pub body: BoundaryGrid,
    n_theta: usize,
    n_rad: usize,
    node_of_skel: Vec<usize>,
    elems: Vec<ElemFactor>,
    skeleton_lu: LUFactorized<ndarray::OwnedRepr<Complex64>>,
    /// Minimum refraction-index sample seen during assembly.
    pub min_index_sample: f64,
}

impl SubdomainOperator {
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_nodes(&self) -> usize {
        self.n_rad * self.n_theta
    }

    fn node(&self, r: usize, a: usize) -> usize {
        r * self.n_theta + a
    }
}

/// Assemble and factorize the subdomain operator. The boundary condition is
/// taken from the mesh's scatterer; the DtN cutoff and symbols come from the
/// trace space (which must match the mesh's disk and angular partition).
pub fn assemble_subdomain(
    mesh: &AnnularMesh,
    basis: &NodalBasis,
    trace: &TraceSpace,
    kappa: f64,
    index: &dyn Fn(Point2) -> f64,
) -> Result<SubdomainOperator, SemError> {
    let p = basis.degree();
    if trace.e_theta != mesh.e_theta || trace.degree != p {
        return Err(SemError::TraceMismatch {
            trace: trace.e_theta,
            mesh: mesh.e_theta,
        });
    }
    if (trace.n_modes as f64) < kappa * mesh.disk.radius {
        eprintln!(
            "warning: DtN cutoff N = {} below kappa R = {:.2}; truncation may be unsafe",
            trace.n_modes,
            kappa * mesh.disk.radius
        );
    }
    let n_theta = mesh.e_theta * p;
    let n_rad = mesh.e_r * p + 1;
    let n_nodes = n_rad * n_theta;

    // skeleton numbering: nodes on any element boundary
    let mut skel_of_node = vec![None; n_nodes];
    let mut node_of_skel = Vec::new();
    for r in 0..n_rad {
        for a in 0..n_theta {
            if r % p == 0 || a % p == 0 {
                skel_of_node[r * n_theta + a] = Some(node_of_skel.len());
                node_of_skel.push(r * n_theta + a);
            }
        }
    }
    let n_skel = node_of_skel.len();
    let gamma_skel: Vec<usize> = (0..n_theta)
        .map(|a| skel_of_node[(n_rad - 1) * n_theta + a].unwrap())
        .collect();
    let ring0_skel: Vec<usize> = (0..n_theta).map(|a| skel_of_node[a].unwrap()).collect();

    let mut skeleton = Array2::<Complex64>::zeros((n_skel, n_skel));
    let mut elems = Vec::with_capacity(mesh.elements.len());
    let mut min_index = f64::INFINITY;

    let nn = (p + 1) * (p + 1);
    for er in 0..mesh.e_r {
        for et in 0..mesh.e_theta {
            let el = mesh.element(er, et);
            // metric terms at the tensor nodes
            let mut g11 = vec![0.0; nn];
            let mut g12 = vec![0.0; nn];
            let mut g22 = vec![0.0; nn];
            let mut mass = vec![0.0; nn];
            for b in 0..=p {
                for a in 0..=p {
                    let (x, jac) = el.map(basis.rule.nodes[a], basis.rule.nodes[b]);
                    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                    let jd = det.abs();
                    let idx = b * (p + 1) + a;
                    // |det J| Jinv Jinv^T
                    g11[idx] = (jac[1][1] * jac[1][1] + jac[0][1] * jac[0][1]) / jd;
                    g12[idx] = -(jac[1][1] * jac[1][0] + jac[0][1] * jac[0][0]) / jd;
                    g22[idx] = (jac[1][0] * jac[1][0] + jac[0][0] * jac[0][0]) / jd;
                    let nx = index(x);
                    min_index = min_index.min(nx);
                    mass[idx] = kappa * kappa * nx * basis.rule.weights[a] * basis.rule.weights[b] * jd;
                }
            }
            let a_local = local_volume_matrix(basis, &g11, &g12, &g22, &mass);

            // interior/boundary split
            let mut int_loc = Vec::new();
            let mut bnd_loc = Vec::new();
            for l in 0..=p {
                for k in 0..=p {
                    let loc = l * (p + 1) + k;
                    if k > 0 && k < p && l > 0 && l < p {
                        int_loc.push(loc);
                    } else {
                        bnd_loc.push(loc);
                    }
                }
            }
            let glob = |loc: usize| -> usize {
                let k = loc % (p + 1);
                let l = loc / (p + 1);
                let a = (et * p + k) % n_theta;
                let r = er * p + l;
                r * n_theta + a
            };
            let ni = int_loc.len();
            let nb = bnd_loc.len();
            let mut a_ii = Array2::<f64>::zeros((ni, ni));
            let mut a_ib = Array2::<f64>::zeros((ni, nb));
            let mut a_bi = Array2::<f64>::zeros((nb, ni));
            let mut a_bb = Array2::<f64>::zeros((nb, nb));
            for (i, &li) in int_loc.iter().enumerate() {
                for (j, &lj) in int_loc.iter().enumerate() {
                    a_ii[[i, j]] = a_local[[li, lj]];
                }
                for (j, &lj) in bnd_loc.iter().enumerate() {
                    a_ib[[i, j]] = a_local[[li, lj]];
                }
            }
            for (i, &li) in bnd_loc.iter().enumerate() {
                for (j, &lj) in int_loc.iter().enumerate() {
                    a_bi[[i, j]] = a_local[[li, lj]];
                }
                for (j, &lj) in bnd_loc.iter().enumerate() {
                    a_bb[[i, j]] = a_local[[li, lj]];
                }
            }
            let lu = a_ii
                .factorize_into()
                .map_err(|_| SemError::Singular {
                    kappa,
                    p,
                    n_modes: trace.n_modes,
                })?;
            // G = A_ii^{-1} A_ib, column by column
            let mut g = Array2::<f64>::zeros((ni, nb));
            for j in 0..nb {
                let col = lu
                    .solve_into(a_ib.column(j).to_owned())
                    .map_err(|e| SemError::Backend(e.to_string()))?;
                g.column_mut(j).assign(&col);
            }
            let schur = &a_bb - &a_bi.dot(&g);

            let boundary_nodes: Vec<usize> = bnd_loc.iter().map(|&l| glob(l)).collect();
            let boundary_skel: Vec<usize> = boundary_nodes
                .iter()
                .map(|&gn| skel_of_node[gn].unwrap())
                .collect();
            for (i, &si) in boundary_skel.iter().enumerate() {
                for (j, &sj) in boundary_skel.iter().enumerate() {
                    skeleton[[si, sj]] += Complex64::new(schur[[i, j]], 0.0);
                }
            }
            elems.push(ElemFactor {
                lu,
                a_ib,
                interior_nodes: int_loc.iter().map(|&l| glob(l)).collect(),
                boundary_nodes,
                boundary_skel,
                g11,
                g12,
                g22,
                mass,
            });
        }
    }

    // DtN coupling, dense on the circle nodes:
    // D = 2 pi R sum_n z_n conj(C[n, l]) C[n, k]
    let two_pi_r = 2.0 * std::f64::consts::PI * mesh.disk.radius;
    for (row, &z) in trace.c_matrix.iter().zip(&trace.dtn_symbols) {
        let zc = z * two_pi_r;
        for (l, &cl) in row.iter().enumerate() {
            if cl.norm_sqr() == 0.0 {
                continue;
            }
            let w = zc * cl.conj();
            let sl = gamma_skel[l];
            for (k, &ck) in row.iter().enumerate() {
                skeleton[[sl, gamma_skel[k]]] += w * ck;
            }
        }
    }

    // scatterer boundary grid and boundary condition
    let body = scatterer_boundary_grid(
        &mesh.scatterer,
        mesh.e_theta,
        &basis.rule.nodes,
        &basis.rule.weights,
    );
    match mesh.scatterer.bc {
        BoundaryKind::Dirichlet => {
            for &s in &ring0_skel {
                for j in 0..n_skel {
                    skeleton[[s, j]] = Complex64::new(0.0, 0.0);
                }
                skeleton[[s, s]] = Complex64::new(1.0, 0.0);
            }
        }
        BoundaryKind::Neumann => {}
        BoundaryKind::Robin { h } => {
            for (a, &s) in ring0_skel.iter().enumerate() {
                skeleton[[s, s]] += h * body.weights[a];
            }
        }
    }

    let skeleton_lu = skeleton.factorize_into().map_err(|_| SemError::Singular {
        kappa,
        p,
        n_modes: trace.n_modes,
    })?;

    Ok(SubdomainOperator {
        mesh: mesh.clone(),
        basis: basis.clone(),
        trace: trace.clone(),
        kappa,
        bc: mesh.scatterer.bc,
        body,
        n_theta,
        n_rad,
        node_of_skel,
        elems,
        skeleton_lu,
        min_index_sample: min_index,
    })
}

/// Local volume matrix -K + kappa^2 M on one element from its metric data.
fn local_volume_matrix(
    basis: &NodalBasis,
    g11: &[f64],
    g12: &[f64],
    g22: &[f64],
    mass: &[f64],
) -> Array2<f64> {
    let p = basis.degree();
    let n = p + 1;
    let w = &basis.rule.weights;
    let d = &basis.deriv;
    let mut k = Array2::<f64>::zeros((n * n, n * n));
    // (d_xi phi1)(d_xi phi2) term: test/trial share the eta index b
    for b in 0..n {
        for k1 in 0..n {
            for k2 in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    acc += w[a] * g11[b * n + a] * d[[a, k1]] * d[[a, k2]];
                }
                k[[b * n + k1, b * n + k2]] += w[b] * acc;
            }
        }
    }
    // (d_eta phi1)(d_eta phi2) term: share the xi index a
    for a in 0..n {
        for l1 in 0..n {
            for l2 in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    acc += w[b] * g22[b * n + a] * d[[b, l1]] * d[[b, l2]];
                }
                k[[l1 * n + a, l2 * n + a]] += w[a] * acc;
            }
        }
    }
    // cross terms
    for k1 in 0..n {
        for l1 in 0..n {
            for k2 in 0..n {
                for l2 in 0..n {
                    let t1 = w[k2] * w[l1] * g12[l1 * n + k2] * d[[k2, k1]] * d[[l1, l2]];
                    let t2 = w[k1] * w[l2] * g12[l2 * n + k1] * d[[l2, l1]] * d[[k1, k2]];
                    k[[l1 * n + k1, l2 * n + k2]] += t1 + t2;
                }
            }
        }
    }
    let mut a = -k;
    for i in 0..n * n {
        a[[i, i]] += mass[i];
    }
    a
}

impl SubdomainOperator {
    /// Full-length right-hand-side vector for a solve (nonzero only on
    /// boundary nodes; Dirichlet slots carry the data itself).
    pub fn assemble_rhs(&self, rhs: &SubdomainRhs) -> Result<Vec<Complex64>, SemError> {
        let mut f = vec![Complex64::new(0.0, 0.0); self.n_nodes()];
        match rhs {
            SubdomainRhs::ScattererData(psi) => {
                if psi.len() != self.n_theta {
                    return Err(SemError::DimensionMismatch {
                        expected: self.n_theta,
                        got: psi.len(),
                    });
                }
                match self.bc {
                    BoundaryKind::Dirichlet => {
                        for a in 0..self.n_theta {
                            f[self.node(0, a)] = psi[a];
                        }
                    }
                    _ => {
                        for a in 0..self.n_theta {
                            f[self.node(0, a)] = psi[a] * self.body.weights[a];
                        }
                    }
                }
            }
            SubdomainRhs::GammaData(g) => {
                if g.len() != self.n_theta {
                    return Err(SemError::DimensionMismatch {
                        expected: self.n_theta,
                        got: g.len(),
                    });
                }
                for a in 0..self.n_theta {
                    f[self.node(self.n_rad - 1, a)] = -g[a] * self.trace.weights[a];
                }
            }
        }
        Ok(f)
    }

    /// Direct solve against the stored factorizations.
    pub fn solve(&self, rhs: &SubdomainRhs) -> Result<InteriorSolution, SemError> {
        let f = self.assemble_rhs(rhs)?;
        // all loads live on skeleton nodes; no interior condensation needed
        let mut skel_rhs = Array1::<Complex64>::zeros(self.node_of_skel.len());
        for (s, &g) in self.node_of_skel.iter().enumerate() {
            skel_rhs[s] = f[g];
        }
        let u_s = self
            .skeleton_lu
            .solve_into(skel_rhs)
            .map_err(|e| SemError::Backend(e.to_string()))?;

        let mut values = vec![Complex64::new(0.0, 0.0); self.n_nodes()];
        for (s, &g) in self.node_of_skel.iter().enumerate() {
            values[g] = u_s[s];
        }
        for el in &self.elems {
            let nb = el.boundary_nodes.len();
            let mut ub_re = Array1::<f64>::zeros(nb);
            let mut ub_im = Array1::<f64>::zeros(nb);
            for (j, &s) in el.boundary_skel.iter().enumerate() {
                ub_re[j] = u_s[s].re;
                ub_im[j] = u_s[s].im;
            }
            let t_re = el.a_ib.dot(&ub_re);
            let t_im = el.a_ib.dot(&ub_im);
            let v_re = el
                .lu
                .solve_into(t_re)
                .map_err(|e| SemError::Backend(e.to_string()))?;
            let v_im = el
                .lu
                .solve_into(t_im)
                .map_err(|e| SemError::Backend(e.to_string()))?;
            for (i, &g) in el.interior_nodes.iter().enumerate() {
                values[g] = Complex64::new(-v_re[i], -v_im[i]);
            }
        }
        Ok(InteriorSolution { values })
    }

    /// Trace of a solution on the artificial circle (nodal, angular order).
    pub fn gamma_trace(&self, sol: &InteriorSolution) -> Vec<Complex64> {
        (0..self.n_theta)
            .map(|a| sol.values[self.node(self.n_rad - 1, a)])
            .collect()
    }

    /// Trace of a solution on the scatterer boundary.
    pub fn ring0_trace(&self, sol: &InteriorSolution) -> Vec<Complex64> {
        (0..self.n_theta)
            .map(|a| sol.values[self.node(0, a)])
            .collect()
    }

    /// Evaluate a solution (and optionally its gradient) at a point of the
    /// annulus.
    pub fn eval_solution(
        &self,
        sol: &InteriorSolution,
        x: Point2,
        want_grad: bool,
    ) -> Result<(Complex64, Option<[Complex64; 2]>), SemError> {
        let p = self.basis.degree();
        let (idx, (xi, eta)) = self.mesh.locate(x)?;
        let er = idx / self.mesh.e_theta;
        let et = idx % self.mesh.e_theta;
        let lx = self.basis.lagrange_all(xi);
        let ly = self.basis.lagrange_all(eta);
        let mut val = Complex64::new(0.0, 0.0);
        let mut dxi = Complex64::new(0.0, 0.0);
        let mut deta = Complex64::new(0.0, 0.0);
        let (dlx, dly) = if want_grad {
            (
                self.basis.lagrange_deriv_all(xi),
                self.basis.lagrange_deriv_all(eta),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        for l in 0..=p {
            let r = er * p + l;
            for k in 0..=p {
                let a = (et * p + k) % self.n_theta;
                let v = sol.values[self.node(r, a)];
                val += v * (lx[k] * ly[l]);
                if want_grad {
                    dxi += v * (dlx[k] * ly[l]);
                    deta += v * (lx[k] * dly[l]);
                }
            }
        }
        if !want_grad {
            return Ok((val, None));
        }
        let (_, jac) = self.mesh.elements[idx].map(xi, eta);
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // grad = J^{-T} grad_ref
        let gx = (jac[1][1] * dxi - jac[1][0] * deta) / det;
        let gy = (-jac[0][1] * dxi + jac[0][0] * deta) / det;
        Ok((val, Some([gx, gy])))
    }

    /// Action of the assembled DtN block on circle nodal values (the Galerkin
    /// coupling, including the boundary mass). Dividing by the arc-length
    /// weights recovers nodal samples of T v.
    pub fn dtn_block_apply(&self, gamma_values: &[Complex64]) -> Vec<Complex64> {
        let two_pi_r = 2.0 * std::f64::consts::PI * self.mesh.disk.radius;
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_theta];
        for (row, &z) in self.trace.c_matrix.iter().zip(&self.trace.dtn_symbols) {
            let coeff: Complex64 = row.iter().zip(gamma_values).map(|(c, v)| c * v).sum();
            let zc = z * coeff * two_pi_r;
            for (l, &cl) in row.iter().enumerate() {
                out[l] += zc * cl.conj();
            }
        }
        out
    }

    /// Action of the full assembled matrix on a global nodal vector
    /// (reassembles local volume matrices on demand; test and diagnostics
    /// support, not the solve path).
    pub fn apply_assembled(&self, u: &[Complex64]) -> Vec<Complex64> {
        let p = self.basis.degree();
        let n = p + 1;
        let mut f = vec![Complex64::new(0.0, 0.0); self.n_nodes()];
        for (ei, el) in self.elems.iter().enumerate() {
            let a_local = local_volume_matrix(&self.basis, &el.g11, &el.g12, &el.g22, &el.mass);
            let er = ei / self.mesh.e_theta;
            let et = ei % self.mesh.e_theta;
            let glob = |loc: usize| -> usize {
                let k = loc % n;
                let l = loc / n;
                ((er * p + l) * self.n_theta) + (et * p + k) % self.n_theta
            };
            for li in 0..n * n {
                let gi = glob(li);
                let mut acc = Complex64::new(0.0, 0.0);
                for lj in 0..n * n {
                    acc += a_local[[li, lj]] * u[glob(lj)];
                }
                f[gi] += acc;
            }
        }
        let gamma: Vec<Complex64> = (0..self.n_theta)
            .map(|a| u[self.node(self.n_rad - 1, a)])
            .collect();
        for (a, v) in self.dtn_block_apply(&gamma).into_iter().enumerate() {
            f[self.node(self.n_rad - 1, a)] += v;
        }
        match self.bc {
            BoundaryKind::Dirichlet => {
                for a in 0..self.n_theta {
                    f[self.node(0, a)] = u[self.node(0, a)];
                }
            }
            BoundaryKind::Neumann => {}
            BoundaryKind::Robin { h } => {
                for a in 0..self.n_theta {
                    f[self.node(0, a)] += h * self.body.weights[a] * u[self.node(0, a)];
                }
            }
        }
        f
    }

    /// Relative residual ||A u - f|| / ||f|| of a solve.
    pub fn residual_norm(&self, sol: &InteriorSolution, rhs: &SubdomainRhs) -> f64 {
        let f = self.assemble_rhs(rhs).expect("rhs checked by solve");
        let au = self.apply_assembled(&sol.values);
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in au.iter().zip(&f) {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
        (num / den.max(1e-300)).sqrt()
    }
}
