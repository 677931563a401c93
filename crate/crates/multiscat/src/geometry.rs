//! Scatterer boundary parametrization, artificial disks, structured annular
//! quadrilateral meshing with Gordon-Hall curvilinear maps, and inverse point
//! location.
//!
//! Every scatterer boundary is the star-shaped curve
//! r(theta) = a sin(k (theta - theta0)) + b around its center, enclosed by a
//! concentric artificial circle of radius R. The annulus in between is meshed
//! with E_r x E_theta conforming quads: ring curves blend linearly in radius
//! between the scatterer curve and the circle, radial edges are straight. The
//! outer ring edges are exact circular arcs with theta(xi) = ha*xi + beta, the
//! property the analytic DtN integrals rely on.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("artificial disk (R = {disk_radius}) does not strictly contain the scatterer (max radius {scatterer_max})")]
    Containment {
        disk_radius: f64,
        scatterer_max: f64,
    },
    #[error("disk center ({0}, {1}) must coincide with the scatterer center ({2}, {3}) for annular meshing")]
    OffCenterDisk(f64, f64, f64, f64),
    #[error("invalid shape: requires b > a >= 0, got a = {a}, b = {b}")]
    InvalidShape { a: f64, b: f64 },
    #[error("mesh resolution too coarse: need E_r >= 1 and E_theta >= 4, got {er} x {et}")]
    Resolution { er: usize, et: usize },
    #[error("point ({0}, {1}) is not inside the meshed annulus")]
    NotInDomain(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Boundary condition on a scatterer: sound-soft, sound-hard or impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Robin { h: Complex64 },
}

/// Star-shaped boundary r(theta) = a sin(k (theta - theta0)) + b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec {
    pub amplitude: f64,
    pub base_radius: f64,
    pub petals: u32,
    pub phase: f64,
}

impl ShapeSpec {
    pub fn circle(radius: f64) -> Self {
        ShapeSpec {
            amplitude: 0.0,
            base_radius: radius,
            petals: 0,
            phase: 0.0,
        }
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.amplitude * (self.petals as f64 * (theta - self.phase)).sin() + self.base_radius
    }

    pub fn radius_deriv(&self, theta: f64) -> f64 {
        let k = self.petals as f64;
        self.amplitude * k * (k * (theta - self.phase)).cos()
    }

    /// Largest boundary radius (a + b, or b for the degenerate circle).
    pub fn max_radius(&self) -> f64 {
        if self.petals == 0 {
            self.base_radius
        } else {
            self.base_radius + self.amplitude
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.amplitude < 0.0 || self.base_radius <= self.amplitude {
            return Err(GeometryError::InvalidShape {
                a: self.amplitude,
                b: self.base_radius,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScattererSpec {
    pub center: Point2,
    pub shape: ShapeSpec,
    pub bc: BoundaryKind,
}

impl ScattererSpec {
    /// Boundary point and unit outward normal at parameter theta.
    pub fn boundary_point(&self, theta: f64) -> (Point2, Point2) {
        let r = self.shape.radius(theta);
        let rd = self.shape.radius_deriv(theta);
        let (s, c) = theta.sin_cos();
        let point = self.center + Point2::new(r * c, r * s);
        // tangent = r' u + r u_perp; outward normal = (t_y, -t_x)/|t|
        let tx = rd * c - r * s;
        let ty = rd * s + r * c;
        let len = tx.hypot(ty);
        (point, Point2::new(ty / len, -tx / len))
    }
}

/// Circular artificial boundary enclosing one scatterer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtificialDisk {
    pub center: Point2,
    pub radius: f64,
}

/// One arc of an artificial circle, parametrized as theta(xi) = ha*xi + beta.
#[derive(Debug, Clone, Copy)]
pub struct ArcEdge {
    pub center: Point2,
    pub radius: f64,
    /// Half-aperture of the arc.
    pub half_aperture: f64,
    /// Midpoint angle of the arc.
    pub mid_angle: f64,
}

impl ArcEdge {
    pub fn point(&self, xi: f64) -> Point2 {
        let th = self.half_aperture * xi + self.mid_angle;
        self.center + Point2::new(self.radius * th.cos(), self.radius * th.sin())
    }
}

/// Element edge roles following the corner-compatibility convention:
/// outer (eta = +1), right (xi = +1), inner (eta = -1), left (xi = -1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSide {
    Outer,
    Right,
    Inner,
    Left,
}

/// Boundary role of an element edge within the annular mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTag {
    Scatterer,
    Gamma,
    Interior,
}

/// One curvilinear quad of the annulus, radial fractions [s0, s1] and angular
/// span [theta0, theta1]. Ring curves: rho(s, theta) = (1-s) r(theta) + s R.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub shape: ShapeSpec,
    pub center: Point2,
    pub disk_radius: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub s0: f64,
    pub s1: f64,
}

impl Element {
    fn rho(&self, s: f64, theta: f64) -> f64 {
        (1.0 - s) * self.shape.radius(theta) + s * self.disk_radius
    }

    fn rho_deriv(&self, s: f64, theta: f64) -> f64 {
        (1.0 - s) * self.shape.radius_deriv(theta)
    }

    fn ring_point(&self, s: f64, t: f64) -> (Point2, Point2) {
        let ha = 0.5 * (self.theta1 - self.theta0);
        let beta = 0.5 * (self.theta1 + self.theta0);
        let th = ha * t + beta;
        let (sn, cs) = th.sin_cos();
        let rho = self.rho(s, th);
        let drho = self.rho_deriv(s, th) * ha;
        let p = self.center + Point2::new(rho * cs, rho * sn);
        let d = Point2::new(drho * cs - rho * sn * ha, drho * sn + rho * cs * ha);
        (p, d)
    }

    fn radial_point(&self, theta: f64, t: f64) -> (Point2, Point2) {
        let (sn, cs) = theta.sin_cos();
        let r0 = self.rho(self.s0, theta);
        let r1 = self.rho(self.s1, theta);
        let rho = r0 + 0.5 * (1.0 + t) * (r1 - r0);
        let p = self.center + Point2::new(rho * cs, rho * sn);
        let d = Point2::new(0.5 * (r1 - r0) * cs, 0.5 * (r1 - r0) * sn);
        (p, d)
    }

    /// Edge parametrization (point, d/dt). Corner convention: outer(-1) =
    /// left(+1), outer(+1) = right(+1), right(-1) = inner(+1),
    /// inner(-1) = left(-1).
    pub fn edge(&self, side: EdgeSide, t: f64) -> (Point2, Point2) {
        match side {
            EdgeSide::Outer => self.ring_point(self.s1, t),
            EdgeSide::Inner => self.ring_point(self.s0, t),
            EdgeSide::Right => self.radial_point(self.theta1, t),
            EdgeSide::Left => self.radial_point(self.theta0, t),
        }
    }

    /// Gordon-Hall transfinite map with analytic Jacobian.
    pub fn map(&self, xi: f64, eta: f64) -> (Point2, [[f64; 2]; 2]) {
        gordon_hall(
            &|t| self.edge(EdgeSide::Outer, t),
            &|t| self.edge(EdgeSide::Right, t),
            &|t| self.edge(EdgeSide::Inner, t),
            &|t| self.edge(EdgeSide::Left, t),
            xi,
            eta,
        )
    }
}

type EdgeFn<'a> = &'a dyn Fn(f64) -> (Point2, Point2);

/// Transfinite blend of four parametric edges (outer, right, inner, left),
/// with the corner-compatibility convention of [`Element::edge`]. Returns the
/// mapped point and the Jacobian [[dx/dxi, dx/deta], [dy/dxi, dy/deta]].
pub fn gordon_hall(
    outer: EdgeFn,
    right: EdgeFn,
    inner: EdgeFn,
    left: EdgeFn,
    xi: f64,
    eta: f64,
) -> (Point2, [[f64; 2]; 2]) {
    let (p1, d1) = outer(xi);
    let (p3, d3) = inner(xi);
    let (p2, d2) = right(eta);
    let (p4, d4) = left(eta);
    let (c_tl, _) = outer(-1.0);
    let (c_tr, _) = outer(1.0);
    let (c_bl, _) = inner(-1.0);
    let (c_br, _) = inner(1.0);

    let up = 0.5 * (1.0 + eta);
    let dn = 0.5 * (1.0 - eta);
    let rt = 0.5 * (1.0 + xi);
    let lf = 0.5 * (1.0 - xi);

    let top_blend = c_tl * lf + c_tr * rt;
    let bot_blend = c_bl * lf + c_br * rt;
    let p = p1 * up + p3 * dn + p2 * rt + p4 * lf - top_blend * up - bot_blend * dn;

    // d/dxi
    let dtop = (c_tr - c_tl) * 0.5;
    let dbot = (c_br - c_bl) * 0.5;
    let dxi = d1 * up + d3 * dn + (p2 - p4) * 0.5 - dtop * up - dbot * dn;
    // d/deta
    let deta = (p1 - p3) * 0.5 + d2 * rt + d4 * lf - (top_blend - bot_blend) * 0.5;

    (p, [[dxi.x, deta.x], [dxi.y, deta.y]])
}

/// Conforming structured mesh of the annulus between a scatterer boundary and
/// its artificial circle. Element (er, et) has index er * e_theta + et.
#[derive(Debug, Clone)]
pub struct AnnularMesh {
    pub scatterer: ScattererSpec,
    pub disk: ArtificialDisk,
    pub e_r: usize,
    pub e_theta: usize,
    pub elements: Vec<Element>,
    pub gamma_edges: Vec<ArcEdge>,
}

/// Angular resolution default: resolve the boundary oscillation of a k-petal
/// shape.
pub fn default_e_theta(petals: u32) -> usize {
    (4 * petals as usize).max(8)
}

pub fn build_annular_mesh(
    scatterer: &ScattererSpec,
    disk: &ArtificialDisk,
    e_r: usize,
    e_theta: usize,
) -> Result<AnnularMesh, GeometryError> {
    scatterer.shape.validate()?;
    if e_r < 1 || e_theta < 4 {
        return Err(GeometryError::Resolution {
            er: e_r,
            et: e_theta,
        });
    }
    if scatterer.center.dist(disk.center) > 1e-14 {
        return Err(GeometryError::OffCenterDisk(
            disk.center.x,
            disk.center.y,
            scatterer.center.x,
            scatterer.center.y,
        ));
    }
    let rmax = scatterer.shape.max_radius();
    if rmax >= disk.radius {
        return Err(GeometryError::Containment {
            disk_radius: disk.radius,
            scatterer_max: rmax,
        });
    }

    let mut elements = Vec::with_capacity(e_r * e_theta);
    let dth = 2.0 * std::f64::consts::PI / e_theta as f64;
    for er in 0..e_r {
        for et in 0..e_theta {
            elements.push(Element {
                shape: scatterer.shape,
                center: scatterer.center,
                disk_radius: disk.radius,
                theta0: et as f64 * dth,
                theta1: (et + 1) as f64 * dth,
                s0: er as f64 / e_r as f64,
                s1: (er + 1) as f64 / e_r as f64,
            });
        }
    }
    let gamma_edges = (0..e_theta)
        .map(|et| ArcEdge {
            center: disk.center,
            radius: disk.radius,
            half_aperture: 0.5 * dth,
            mid_angle: (et as f64 + 0.5) * dth,
        })
        .collect();
    Ok(AnnularMesh {
        scatterer: *scatterer,
        disk: *disk,
        e_r,
        e_theta,
        elements,
        gamma_edges,
    })
}

impl AnnularMesh {
    pub fn element(&self, er: usize, et: usize) -> &Element {
        &self.elements[er * self.e_theta + et]
    }

    pub fn edge_tag(&self, er: usize, side: EdgeSide) -> EdgeTag {
        match side {
            EdgeSide::Inner if er == 0 => EdgeTag::Scatterer,
            EdgeSide::Outer if er == self.e_r - 1 => EdgeTag::Gamma,
            _ => EdgeTag::Interior,
        }
    }

    /// Inverse of [`Element::map`]: find (element, (xi, eta)) with
    /// map(xi, eta) = x, seeded by polar bucketing, refined by Newton with a
    /// coarse-grid fallback on stagnation.
    pub fn locate(&self, x: Point2) -> Result<(usize, (f64, f64)), GeometryError> {
        let rel = x - self.scatterer.center;
        let rho = rel.norm();
        let theta = rel.y.atan2(rel.x).rem_euclid(2.0 * std::f64::consts::PI);
        let r_in = self.scatterer.shape.radius(theta);
        let tol_geo = 1e-10 * self.disk.radius.max(1.0);
        if rho > self.disk.radius + tol_geo || rho < r_in - tol_geo {
            return Err(GeometryError::NotInDomain(x.x, x.y));
        }
        let dth = 2.0 * std::f64::consts::PI / self.e_theta as f64;
        let et0 = ((theta / dth) as usize).min(self.e_theta - 1);
        let s = ((rho - r_in) / (self.disk.radius - r_in)).clamp(0.0, 1.0);
        let er0 = ((s * self.e_r as f64) as usize).min(self.e_r - 1);

        // candidate order: seed element first, then its neighbors
        let mut candidates = Vec::with_capacity(9);
        for der in [0i64, -1, 1] {
            for det in [0i64, -1, 1] {
                let er = er0 as i64 + der;
                if er < 0 || er >= self.e_r as i64 {
                    continue;
                }
                let et = (et0 as i64 + det).rem_euclid(self.e_theta as i64);
                candidates.push((er as usize, et as usize));
            }
        }
        for &(er, et) in &candidates {
            let idx = er * self.e_theta + et;
            let el = &self.elements[idx];
            // seed from the polar estimate, local to this element
            let th_mid = theta.clamp(el.theta0, el.theta1);
            let xi0 = (2.0 * (th_mid - el.theta0) / (el.theta1 - el.theta0) - 1.0).clamp(-1.0, 1.0);
            let eta0 = (2.0 * (s * self.e_r as f64 - er as f64) - 1.0).clamp(-1.0, 1.0);
            if let Some(uv) = newton_invert(el, x, xi0, eta0) {
                return Ok((idx, uv));
            }
            // coarse-grid reseed before giving up on this element
            if let Some(uv) = grid_seeded_invert(el, x) {
                return Ok((idx, uv));
            }
        }
        Err(GeometryError::NotInDomain(x.x, x.y))
    }
}

const NEWTON_CAP: usize = 30;

fn newton_invert(el: &Element, x: Point2, xi0: f64, eta0: f64) -> Option<(f64, f64)> {
    let scale = el.disk_radius.max(1.0);
    let mut u = xi0;
    let mut v = eta0;
    for _ in 0..NEWTON_CAP {
        let (p, jac) = el.map(u, v);
        let rx = p.x - x.x;
        let ry = p.y - x.y;
        if rx.hypot(ry) < 1e-13 * scale {
            break;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let du = (rx * jac[1][1] - ry * jac[0][1]) / det;
        let dv = (ry * jac[0][0] - rx * jac[1][0]) / det;
        u = (u - du).clamp(-1.5, 1.5);
        v = (v - dv).clamp(-1.5, 1.5);
    }
    let box_tol = 1e-9;
    if u.abs() > 1.0 + box_tol || v.abs() > 1.0 + box_tol {
        return None;
    }
    let u = u.clamp(-1.0, 1.0);
    let v = v.clamp(-1.0, 1.0);
    let (p, _) = el.map(u, v);
    if p.dist(x) <= 1e-10 * scale {
        Some((u, v))
    } else {
        None
    }
}

fn grid_seeded_invert(el: &Element, x: Point2) -> Option<(f64, f64)> {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..9 {
        for j in 0..9 {
            let u = -1.0 + 0.25 * i as f64;
            let v = -1.0 + 0.25 * j as f64;
            let (p, _) = el.map(u, v);
            let d = p.dist(x);
            if d < best.0 {
                best = (d, u, v);
            }
        }
    }
    newton_invert(el, x, best.1, best.2)
}

/// Discrete trace grid on a scatterer boundary: the inner-ring nodes of the
/// annular mesh (E_theta arcs, reference nodes per arc, shared endpoints
/// stored once), with outward normals and arc-length quadrature weights.
#[derive(Debug, Clone)]
pub struct BoundaryGrid {
    pub points: Vec<Point2>,
    pub normals: Vec<Point2>,
    pub thetas: Vec<f64>,
    /// Arc-length weights for the discrete L2 inner product on the boundary.
    pub weights: Vec<f64>,
}

/// Build the boundary grid of a scatterer from the angular partition and a
/// reference quadrature rule (nodes/weights on [-1, 1], endpoints included).
pub fn scatterer_boundary_grid(
    scatterer: &ScattererSpec,
    e_theta: usize,
    ref_nodes: &[f64],
    ref_weights: &[f64],
) -> BoundaryGrid {
    let p = ref_nodes.len() - 1;
    let n = e_theta * p;
    let dth = 2.0 * std::f64::consts::PI / e_theta as f64;
    let mut points = vec![Point2::new(0.0, 0.0); n];
    let mut normals = vec![Point2::new(0.0, 0.0); n];
    let mut thetas = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for e in 0..e_theta {
        let ha = 0.5 * dth;
        let beta = (e as f64 + 0.5) * dth;
        for k in 0..=p {
            let theta = ha * ref_nodes[k] + beta;
            let idx = (e * p + k) % n;
            let (pt, nm) = scatterer.boundary_point(theta);
            points[idx] = pt;
            normals[idx] = nm;
            thetas[idx] = theta;
            let r = scatterer.shape.radius(theta);
            let rd = scatterer.shape.radius_deriv(theta);
            weights[idx] += ref_weights[k] * ha * r.hypot(rd);
        }
    }
    // wrap the duplicated angle at the seam back to [0, 2pi)
    thetas[0] = thetas[0].rem_euclid(2.0 * std::f64::consts::PI);
    BoundaryGrid {
        points,
        normals,
        thetas,
        weights,
    }
}
