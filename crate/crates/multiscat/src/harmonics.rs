//! Circular-harmonic machinery on the artificial boundaries: trace <->
//! Fourier transforms, DtN and T' application, analytic propagation of purely
//! outgoing waves, and incident-wave data.
//!
//! Everything here is tied to one disk's boundary grid (E_theta exact arcs
//! with the reference nodes of the subdomain discretization). The transform
//! to circular harmonics goes through the per-edge Legendre coefficients and
//! the analytic oscillatory integrals, never through interpolation onto a
//! uniform grid.

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::{ArtificialDisk, Point2};
use crate::sem::{dtn_integral_row, NodalBasis};
use crate::specfun::{bessel_jy_arrays, SpecFunError};

#[derive(Debug, Error)]
pub enum HarmonicsError {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("evaluation point at distance {r} lies inside the source disk (radius {radius})")]
    InsideSourceDisk { r: f64, radius: f64 },
    #[error("trace length {got} does not match the boundary grid ({expected})")]
    TraceLength { expected: usize, got: usize },
}

/// Complex field samples on one disk's boundary grid.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub disk: usize,
    pub values: Vec<Complex64>,
}

impl BoundaryTrace {
    pub fn new(disk: usize, values: Vec<Complex64>) -> Self {
        BoundaryTrace { disk, values }
    }
}

/// Circular-harmonic coefficients v_hat_n, |n| <= N, stored at index n + N.
#[derive(Debug, Clone)]
pub struct FourierTrace {
    pub disk: usize,
    pub n_modes: i32,
    pub coeffs: Vec<Complex64>,
}

impl FourierTrace {
    /// Coefficient of mode n.
    pub fn coeff(&self, n: i32) -> Complex64 {
        self.coeffs[(n + self.n_modes) as usize]
    }
}

/// Transform and DtN data for one artificial circle's boundary grid.
///
/// The grid has e_theta * p nodes (arc e, reference node k maps to slot
/// e*p + k, shared endpoints stored once). `c_matrix` holds the
/// mode-extraction functionals: row n+N applied to nodal values yields the
/// Fourier coefficient v_hat_n of the piecewise-polynomial trace.
#[derive(Debug, Clone)]
pub struct TraceSpace {
    pub disk: ArtificialDisk,
    pub kappa: f64,
    pub n_modes: i32,
    pub e_theta: usize,
    pub degree: usize,
    /// Angle of each boundary node.
    pub thetas: Vec<f64>,
    /// Arc-length quadrature weights (R * ha * w_k, endpoint slots summed).
    pub weights: Vec<f64>,
    /// (2N+1) x n_nodes mode extraction matrix, includes the 1/(2 pi).
    pub c_matrix: Vec<Vec<Complex64>>,
    /// DtN symbols z_n = kappa H_n'(kappa R)/H_n(kappa R), index n + N.
    pub dtn_symbols: Vec<Complex64>,
}

impl TraceSpace {
    pub fn build(
        disk: ArtificialDisk,
        kappa: f64,
        n_modes: i32,
        e_theta: usize,
        basis: &NodalBasis,
    ) -> Result<Self, SpecFunError> {
        let p = basis.degree();
        let n_nodes = e_theta * p;
        let n = n_modes as usize;
        let dth = 2.0 * std::f64::consts::PI / e_theta as f64;
        let ha = 0.5 * dth;

        let mut thetas = vec![0.0; n_nodes];
        let mut weights = vec![0.0; n_nodes];
        let mut c_matrix = vec![vec![Complex64::new(0.0, 0.0); n_nodes]; 2 * n + 1];
        for e in 0..e_theta {
            let beta = (e as f64 + 0.5) * dth;
            for k in 0..=p {
                let idx = (e * p + k) % n_nodes;
                thetas[idx] = ha * basis.rule.nodes[k] + beta;
                weights[idx] += disk.radius * ha * basis.rule.weights[k];
            }
            let edge = crate::geometry::ArcEdge {
                center: disk.center,
                radius: disk.radius,
                half_aperture: ha,
                mid_angle: beta,
            };
            for ni in -(n_modes)..=n_modes {
                let row = dtn_integral_row(&edge, ni, p)?;
                let crow = &mut c_matrix[(ni + n_modes) as usize];
                for k in 0..=p {
                    let idx = (e * p + k) % n_nodes;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (m, inm) in row.iter().enumerate() {
                        acc += basis.to_legendre[[k, m]] * inm;
                    }
                    crow[idx] += acc / (2.0 * std::f64::consts::PI);
                }
            }
        }
        thetas[0] = thetas[0].rem_euclid(2.0 * std::f64::consts::PI);

        // DtN symbols z_n, even in n
        let x = kappa * disk.radius;
        let (j, y) = bessel_jy_arrays(n + 1, x)?;
        let h = |i: usize| Complex64::new(j[i], y[i]);
        let mut dtn_symbols = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        for ni in 0..=n {
            let hp = if ni == 0 {
                -h(1)
            } else {
                h(ni - 1) - (ni as f64 / x) * h(ni)
            };
            let z = kappa * hp / h(ni);
            dtn_symbols[n + ni] = z;
            dtn_symbols[n - ni] = z;
        }

        Ok(TraceSpace {
            disk,
            kappa,
            n_modes,
            e_theta,
            degree: p,
            thetas,
            weights,
            c_matrix,
            dtn_symbols,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.e_theta * self.degree
    }

    fn check_len(&self, v: &[Complex64]) -> Result<(), HarmonicsError> {
        if v.len() != self.n_nodes() {
            return Err(HarmonicsError::TraceLength {
                expected: self.n_nodes(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Circular-harmonic coefficients of a nodal trace (semi-analytic route
    /// through per-edge Legendre coefficients and the closed-form integrals).
    pub fn fourier_coeffs(&self, values: &[Complex64]) -> Result<Vec<Complex64>, HarmonicsError> {
        self.check_len(values)?;
        Ok(self
            .c_matrix
            .iter()
            .map(|row| row.iter().zip(values).map(|(c, v)| c * v).sum())
            .collect())
    }

    /// Typed variant of [`Self::fourier_coeffs`].
    pub fn fourier_trace(&self, trace: &BoundaryTrace) -> Result<FourierTrace, HarmonicsError> {
        Ok(FourierTrace {
            disk: trace.disk,
            n_modes: self.n_modes,
            coeffs: self.fourier_coeffs(&trace.values)?,
        })
    }

    /// Nodal samples of sum_n coeffs[n] e^{i n theta}.
    pub fn nodal_from_modes(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_modes;
        self.thetas
            .iter()
            .map(|&th| {
                let ph = Complex64::new(0.0, th).exp();
                // Horner over modes: sum_{k=-N..N} c_k ph^k
                let mut acc = Complex64::new(0.0, 0.0);
                for k in (-n..=n).rev() {
                    acc = acc * ph + coeffs[(k + n) as usize];
                }
                acc * Complex64::new(0.0, -(n as f64) * th).exp()
            })
            .collect()
    }

    /// Coefficient-wise DtN symbol multiply: (T v)_n = z_n v_hat_n.
    pub fn dtn_apply(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        coeffs
            .iter()
            .zip(&self.dtn_symbols)
            .map(|(c, z)| c * z)
            .collect()
    }

    /// T' f = normal derivative - T(values), evaluated on the nodal grid.
    pub fn tprime_apply(
        &self,
        values: &[Complex64],
        normal_derivs: &[Complex64],
    ) -> Result<Vec<Complex64>, HarmonicsError> {
        self.check_len(values)?;
        self.check_len(normal_derivs)?;
        let ft = self.fourier_coeffs(values)?;
        let tv = self.nodal_from_modes(&self.dtn_apply(&ft));
        Ok(normal_derivs
            .iter()
            .zip(tv)
            .map(|(d, t)| d - t)
            .collect())
    }

    /// Node positions on the circle.
    pub fn points(&self) -> Vec<Point2> {
        self.thetas
            .iter()
            .map(|&th| {
                self.disk.center
                    + Point2::new(self.disk.radius * th.cos(), self.disk.radius * th.sin())
            })
            .collect()
    }

    /// Outward unit normals (radial) at the nodes.
    pub fn normals(&self) -> Vec<Point2> {
        self.thetas
            .iter()
            .map(|&th| Point2::new(th.cos(), th.sin()))
            .collect()
    }
}

/// Purely outgoing Hankel series attached to one disk:
/// w(r, theta) = sum_n a_n H_n(kappa r)/H_n(kappa R) e^{i n theta}
/// in polar coordinates about the disk center. Satisfies the radiation
/// condition by construction, and its trace at r = R has Fourier
/// coefficients a_n.
#[derive(Debug, Clone)]
pub struct OutgoingExpansion {
    pub center: Point2,
    pub source_radius: f64,
    pub kappa: f64,
    pub n_modes: i32,
    /// a_n, index n + N.
    pub coeffs: Vec<Complex64>,
    /// a_n / H_n(kappa R), index n + N.
    scaled: Vec<Complex64>,
}

/// The exterior solve realized analytically: the outgoing wave with Dirichlet
/// trace data given by `coeffs` on the circle (a_n = v_hat_n).
pub fn outgoing_from_trace(
    space: &TraceSpace,
    coeffs: Vec<Complex64>,
) -> Result<OutgoingExpansion, SpecFunError> {
    let n = space.n_modes as usize;
    let x = space.kappa * space.disk.radius;
    let (j, y) = bessel_jy_arrays(n, x)?;
    let scaled = coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let na = (i as i32 - space.n_modes).unsigned_abs() as usize;
            a / Complex64::new(j[na], y[na])
        })
        .collect();
    Ok(OutgoingExpansion {
        center: space.disk.center,
        source_radius: space.disk.radius,
        kappa: space.kappa,
        n_modes: space.n_modes,
        coeffs,
        scaled,
    })
}

impl OutgoingExpansion {
    /// Series value at a point on or outside the source circle.
    pub fn eval(&self, x: Point2) -> Result<Complex64, HarmonicsError> {
        Ok(self.eval_inner(x, false)?.0)
    }

    /// Value and Cartesian gradient.
    pub fn eval_with_gradient(
        &self,
        x: Point2,
    ) -> Result<(Complex64, [Complex64; 2]), HarmonicsError> {
        let (v, g) = self.eval_inner(x, true)?;
        Ok((v, g.unwrap()))
    }

    fn eval_inner(
        &self,
        x: Point2,
        want_grad: bool,
    ) -> Result<(Complex64, Option<[Complex64; 2]>), HarmonicsError> {
        let rel = x - self.center;
        let r = rel.norm();
        // hysteresis band resolved toward the exterior expansion
        if r < self.source_radius * (1.0 - 1e-12) {
            return Err(HarmonicsError::InsideSourceDisk {
                r,
                radius: self.source_radius,
            });
        }
        let n = self.n_modes as usize;
        let kr = self.kappa * r;
        let (j, y) = bessel_jy_arrays(n + 1, kr)?;
        let h = |i: usize| Complex64::new(j[i], y[i]);
        let ph = Complex64::new(rel.x / r, rel.y / r); // e^{i theta}
        let mut pow = Complex64::new(1.0, 0.0);
        let mut val = self.scaled[n] * h(0);
        let mut dr = Complex64::new(0.0, 0.0);
        let mut dth = Complex64::new(0.0, 0.0);
        if want_grad {
            dr = self.scaled[n] * (-h(1)) * self.kappa;
        }
        for m in 1..=n {
            pow *= ph;
            let cp = self.scaled[n + m]; // a_m / H_m(kR)
            let cm = self.scaled[n - m]; // a_{-m} / H_m(kR) (H_{-m} signs cancel)
            let hm = h(m);
            let both = cp * pow + cm * pow.conj();
            val += hm * both;
            if want_grad {
                let hp = h(m - 1) - (m as f64 / kr) * hm;
                dr += self.kappa * hp * both;
                dth += hm * Complex64::new(0.0, m as f64) * (cp * pow - cm * pow.conj());
            }
        }
        if want_grad {
            let er = Point2::new(ph.re, ph.im);
            let et = Point2::new(-ph.im, ph.re);
            let inv_r = 1.0 / r;
            let gx = dr * er.x + dth * inv_r * et.x;
            let gy = dr * er.y + dth * inv_r * et.y;
            Ok((val, Some([gx, gy])))
        } else {
            Ok((val, None))
        }
    }
}

/// Plane wave e^{i kappa y}, the incident field (unit amplitude).
#[derive(Debug, Clone, Copy)]
pub struct IncidentWave {
    pub kappa: f64,
}

impl IncidentWave {
    pub fn value(&self, x: Point2) -> Complex64 {
        Complex64::new(0.0, self.kappa * x.y).exp()
    }

    pub fn gradient(&self, x: Point2) -> [Complex64; 2] {
        let v = self.value(x);
        [Complex64::new(0.0, 0.0), Complex64::new(0.0, self.kappa) * v]
    }

    /// Values and normal derivatives at sample points with unit normals.
    pub fn data(&self, points: &[Point2], normals: &[Point2]) -> (Vec<Complex64>, Vec<Complex64>) {
        let values: Vec<_> = points.iter().map(|&p| self.value(p)).collect();
        let derivs = points
            .iter()
            .zip(normals)
            .map(|(&p, &nm)| Complex64::new(0.0, self.kappa * nm.y) * self.value(p))
            .collect();
        (values, derivs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArtificialDisk;
    use crate::sem::NodalBasis;
    use crate::specfun::{cyl_bessel, cyl_bessel_deriv, CylKind};
    use std::f64::consts::PI;

    fn space(kappa: f64, radius: f64, n_modes: i32, e_theta: usize, p: usize) -> TraceSpace {
        let disk = ArtificialDisk {
            center: Point2::new(0.0, 0.0),
            radius,
        };
        let basis = NodalBasis::new(p);
        TraceSpace::build(disk, kappa, n_modes, e_theta, &basis).unwrap()
    }

    fn mode_samples(sp: &TraceSpace, n: i32) -> Vec<Complex64> {
        sp.thetas
            .iter()
            .map(|&th| Complex64::new(0.0, n as f64 * th).exp())
            .collect()
    }

    #[test]
    fn fourier_constant_trace() {
        let sp = space(5.0, 1.0, 12, 8, 12);
        let ones = vec![Complex64::new(1.0, 0.0); sp.n_nodes()];
        let c = sp.fourier_coeffs(&ones).unwrap();
        for (i, v) in c.iter().enumerate() {
            if i == 12 {
                assert!((v - 1.0).norm() < 1e-14);
            } else {
                assert!(v.norm() < 1e-14, "mode {} = {}", i as i32 - 12, v);
            }
        }
    }

    #[test]
    fn fourier_pure_mode() {
        let sp = space(5.0, 1.0, 12, 8, 12);
        let tr = BoundaryTrace::new(0, mode_samples(&sp, 3));
        let ft = sp.fourier_trace(&tr).unwrap();
        for n in -12i32..=12 {
            if n == 3 {
                assert!((ft.coeff(n) - 1.0).norm() < 1e-10);
            } else {
                assert!(ft.coeff(n).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn fourier_matches_trapezoid_quadrature() {
        // random piecewise degree-p trace vs composite trapezoid of the
        // defining integral on 10^4 points
        let sp = space(5.0, 1.3, 6, 6, 9);
        let basis = NodalBasis::new(9);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rng = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let values: Vec<Complex64> = (0..sp.n_nodes())
            .map(|_| Complex64::new(rng(), rng()))
            .collect();
        let c = sp.fourier_coeffs(&values).unwrap();

        // composite Simpson per smooth edge piece (~2 * 10^4 samples total)
        let p = sp.degree;
        let dth = 2.0 * PI / sp.e_theta as f64;
        let panels = 1667usize;
        for n in [-5i32, -1, 0, 2, 4] {
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..sp.e_theta {
                let beta = (e as f64 + 0.5) * dth;
                let f = |xi: f64| {
                    let th = 0.5 * dth * xi + beta;
                    let lv = basis.lagrange_all(xi);
                    let mut v = Complex64::new(0.0, 0.0);
                    for k in 0..=p {
                        v += values[(e * p + k) % sp.n_nodes()] * lv[k];
                    }
                    v * Complex64::new(0.0, -(n as f64) * th).exp() * (0.5 * dth)
                };
                let h = 2.0 / panels as f64;
                for i in 0..panels {
                    let a = -1.0 + i as f64 * h;
                    acc += (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h)) * (h / 6.0);
                }
            }
            acc /= 2.0 * PI;
            let got = c[(n + 6) as usize];
            assert!((got - acc).norm() < 1e-10, "n={n}: {got} vs {acc}");
        }
    }

    #[test]
    fn dtn_symbol_and_linearity() {
        let kappa = 4.0;
        let radius = 1.2;
        let sp = space(kappa, radius, 8, 8, 10);
        let x = kappa * radius;
        let z2 = kappa * cyl_bessel_deriv(CylKind::H1, 2, x).unwrap()
            / cyl_bessel(CylKind::H1, 2, x).unwrap();
        let mut delta = vec![Complex64::new(0.0, 0.0); 17];
        delta[10] = Complex64::new(1.0, 0.0); // n = +2
        let out = sp.dtn_apply(&delta);
        assert!((out[10] - z2).norm() < 1e-13);
        // z_{-n} = z_n
        assert!((sp.dtn_symbols[6] - sp.dtn_symbols[10]).norm() < 1e-15);
        // linearity is coefficient-wise by construction; spot check
        let a: Vec<Complex64> = (0..17).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let b: Vec<Complex64> = (0..17).map(|i| Complex64::new(0.5, -(i as f64))).collect();
        let lhs = sp.dtn_apply(&a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>());
        let rhs: Vec<Complex64> = sp
            .dtn_apply(&a)
            .iter()
            .zip(sp.dtn_apply(&b))
            .map(|(x, y)| x + y)
            .collect();
        for (l, r) in lhs.iter().zip(rhs) {
            assert!((l - r).norm() < 1e-12);
        }
    }

    #[test]
    fn outgoing_trace_roundtrip_and_radial_derivative() {
        let kappa = 6.0;
        let radius = 1.1;
        let sp = space(kappa, radius, 10, 10, 14);
        // band-limited coefficients, |n| <= 4
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 21];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let n = i as i32 - 10;
            if n.abs() <= 4 {
                *c = Complex64::new(0.3 + n as f64 * 0.1, -0.2 * n as f64);
            }
        }
        let exp = outgoing_from_trace(&sp, coeffs.clone()).unwrap();
        // trace on the circle reproduces the coefficients' synthesis
        for (i, &th) in sp.thetas.iter().enumerate().step_by(7) {
            let x = Point2::new(radius * th.cos(), radius * th.sin());
            let v = exp.eval(x).unwrap();
            let mut expect = Complex64::new(0.0, 0.0);
            for (jj, c) in coeffs.iter().enumerate() {
                let n = jj as i32 - 10;
                expect += c * Complex64::new(0.0, n as f64 * th).exp();
            }
            assert!((v - expect).norm() < 1e-11, "node {i}");
        }
        // radial derivative at R equals DtN application of the trace
        let tv = sp.nodal_from_modes(&sp.dtn_apply(&coeffs));
        for (i, &th) in sp.thetas.iter().enumerate().step_by(11) {
            let x = Point2::new(radius * th.cos(), radius * th.sin());
            let (_, g) = exp.eval_with_gradient(x).unwrap();
            let dn = g[0] * th.cos() + g[1] * th.sin();
            assert!((dn - tv[i]).norm() < 1e-11, "node {i}: {dn} vs {}", tv[i]);
        }
    }

    #[test]
    fn outgoing_decay_and_inside_error() {
        // Sommerfeld decay ~ r^{-1/2} for the n = 0 mode at large kappa R
        let kappa = 20.0;
        let radius = 1.0;
        let sp = space(kappa, radius, 4, 8, 10);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 9];
        coeffs[4] = Complex64::new(1.0, 0.0);
        let exp = outgoing_from_trace(&sp, coeffs).unwrap();
        let v2 = exp.eval(Point2::new(2.0, 0.0)).unwrap().norm();
        let v4 = exp.eval(Point2::new(4.0, 0.0)).unwrap().norm();
        let ratio = v2 / v4;
        assert!(
            (ratio - 2f64.sqrt()).abs() < 0.1 * 2f64.sqrt(),
            "ratio {ratio}"
        );
        // pure n = 0 gradient is radial
        let (_, g) = exp.eval_with_gradient(Point2::new(1.3, 2.2)).unwrap();
        let er = Point2::new(1.3, 2.2) * (1.0 / Point2::new(1.3, 2.2).norm());
        let tang = g[0] * (-er.y) + g[1] * er.x;
        assert!(tang.norm() < 1e-12);
        assert!(matches!(
            exp.eval(Point2::new(0.5, 0.0)),
            Err(HarmonicsError::InsideSourceDisk { .. })
        ));
    }

    #[test]
    fn outgoing_gradient_matches_finite_differences() {
        let kappa = 7.0;
        let sp = space(kappa, 1.0, 8, 8, 12);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 17];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let n = i as i32 - 8;
            if n.abs() <= 3 {
                *c = Complex64::new(0.4 - 0.1 * n as f64, 0.2 + 0.05 * n as f64);
            }
        }
        let exp = outgoing_from_trace(&sp, coeffs).unwrap();
        let h = 1e-6;
        let pts = [
            Point2::new(1.7, 0.4),
            Point2::new(-2.3, 1.1),
            Point2::new(0.3, -1.9),
            Point2::new(3.5, 3.5),
        ];
        for &pt in &pts {
            let (_, g) = exp.eval_with_gradient(pt).unwrap();
            let fx = (exp.eval(Point2::new(pt.x + h, pt.y)).unwrap()
                - exp.eval(Point2::new(pt.x - h, pt.y)).unwrap())
                / (2.0 * h);
            let fy = (exp.eval(Point2::new(pt.x, pt.y + h)).unwrap()
                - exp.eval(Point2::new(pt.x, pt.y - h)).unwrap())
                / (2.0 * h);
            assert!((g[0] - fx).norm() < 1e-7, "{pt:?}: {} vs {fx}", g[0]);
            assert!((g[1] - fy).norm() < 1e-7);
        }
    }

    #[test]
    fn eval_outgoing_satisfies_helmholtz() {
        let kappa = 5.0;
        let sp = space(kappa, 1.0, 6, 8, 10);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 13];
        coeffs[6] = Complex64::new(0.7, 0.1);
        coeffs[8] = Complex64::new(-0.3, 0.4);
        let exp = outgoing_from_trace(&sp, coeffs).unwrap();
        let h = 1e-4;
        for &pt in &[Point2::new(1.8, 0.7), Point2::new(-1.4, -2.0)] {
            let u = |x: f64, y: f64| exp.eval(Point2::new(x, y)).unwrap();
            let lap = (u(pt.x + h, pt.y)
                + u(pt.x - h, pt.y)
                + u(pt.x, pt.y + h)
                + u(pt.x, pt.y - h)
                - 4.0 * u(pt.x, pt.y))
                / (h * h);
            let resid = lap + kappa * kappa * u(pt.x, pt.y);
            assert!(resid.norm() < 1e-3 * kappa * kappa * u(pt.x, pt.y).norm().max(0.1));
        }
    }

    #[test]
    fn tprime_annihilates_own_outgoing_modes() {
        let kappa = 8.0;
        let radius = 1.2;
        let sp = space(kappa, radius, 14, 10, 16);
        for n0 in [0i32, 1, 3, 7] {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); 29];
            coeffs[(n0 + 14) as usize] = Complex64::new(1.0, 0.0);
            let exp = outgoing_from_trace(&sp, coeffs).unwrap();
            let pts = sp.points();
            let nms = sp.normals();
            let mut values = Vec::with_capacity(pts.len());
            let mut derivs = Vec::with_capacity(pts.len());
            for (pt, nm) in pts.iter().zip(&nms) {
                let (v, g) = exp.eval_with_gradient(*pt).unwrap();
                values.push(v);
                derivs.push(g[0] * nm.x + g[1] * nm.y);
            }
            let tp = sp.tprime_apply(&values, &derivs).unwrap();
            let max = tp.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(max < 1e-9, "mode {n0}: residual {max}");
        }
    }

    #[test]
    fn tprime_of_incident_matches_per_mode_formula() {
        // Jacobi-Anger oracle: e^{i kappa y} on a circle about the origin has
        // coefficients J_n(kappa R); T' f then has per-mode coefficients
        // kappa J_n'(kappa R) - z_n J_n(kappa R).
        let kappa = 10.0;
        let radius = 1.0;
        let sp = space(kappa, radius, 16, 12, 18);
        let inc = IncidentWave { kappa };
        let pts = sp.points();
        let nms = sp.normals();
        let (values, derivs) = inc.data(&pts, &nms);
        let tp = sp.tprime_apply(&values, &derivs).unwrap();
        let tp_hat = sp.fourier_coeffs(&tp).unwrap();
        let x = kappa * radius;
        for n in -8i32..=8 {
            let jn = cyl_bessel(CylKind::J, n, x).unwrap();
            let jd = cyl_bessel_deriv(CylKind::J, n, x).unwrap();
            let z = sp.dtn_symbols[(n + 16) as usize];
            let expect = kappa * jd - z * jn;
            let got = tp_hat[(n + 16) as usize];
            assert!((got - expect).norm() < 1e-9, "n={n}: {got} vs {expect}");
        }
    }

    #[test]
    fn incident_values_and_jacobi_anger_coeffs() {
        let kappa = 3.0;
        let inc = IncidentWave { kappa };
        let (v, d) = inc.data(&[Point2::new(0.0, 0.0)], &[Point2::new(0.0, 1.0)]);
        assert!((v[0] - 1.0).norm() < 1e-15);
        assert!((d[0] - Complex64::new(0.0, kappa)).norm() < 1e-15);
        let (v, d) = inc.data(&[Point2::new(0.0, PI / kappa)], &[Point2::new(0.6, 0.8)]);
        assert!((v[0] + 1.0).norm() < 1e-13);
        assert!((d[0] - Complex64::new(0.0, -kappa * 0.8)).norm() < 1e-13);

        // Fourier coefficients on a shifted circle: e^{i kappa c_y} J_n(kappa R)
        let disk = ArtificialDisk {
            center: Point2::new(0.7, -0.4),
            radius: 1.0,
        };
        let basis = NodalBasis::new(16);
        let sp = TraceSpace::build(disk, kappa, 10, 8, &basis).unwrap();
        let vals: Vec<Complex64> = sp.points().iter().map(|&p| inc.value(p)).collect();
        let c = sp.fourier_coeffs(&vals).unwrap();
        let phase = Complex64::new(0.0, kappa * disk.center.y).exp();
        for n in -6i32..=6 {
            let expect = phase * cyl_bessel(CylKind::J, n, kappa).unwrap();
            let got = c[(n + 10) as usize];
            assert!((got - expect).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn transfer_reciprocity_for_monopoles() {
        // evaluating disk A's n=0 expansion at disk B's center matches the
        // mirrored setup (both reduce to H_0(kappa d)/H_0(kappa R))
        let kappa = 9.0;
        let d = 3.1;
        let mk = |cx: f64| {
            let disk = ArtificialDisk {
                center: Point2::new(cx, 0.0),
                radius: 1.0,
            };
            let basis = NodalBasis::new(10);
            let sp = TraceSpace::build(disk, kappa, 6, 8, &basis).unwrap();
            let mut coeffs = vec![Complex64::new(0.0, 0.0); 13];
            coeffs[6] = Complex64::new(1.0, 0.0);
            outgoing_from_trace(&sp, coeffs).unwrap()
        };
        let wa = mk(0.0);
        let wb = mk(d);
        let v_ab = wa.eval(Point2::new(d, 0.0)).unwrap();
        let v_ba = wb.eval(Point2::new(0.0, 0.0)).unwrap();
        assert!((v_ab - v_ba).norm() < 1e-11);
    }

    #[test]
    fn roundtrip_band_limited_traces() {
        // E_theta * p = 128 >= 4N with N = 16; band-limited content |m| <= N/4
        let sp = space(5.0, 1.0, 16, 8, 16);
        let mut values = vec![Complex64::new(0.0, 0.0); sp.n_nodes()];
        for m in -4i32..=4 {
            let amp = Complex64::new(0.1 + 0.05 * m as f64, -0.07 * m as f64);
            for (i, &th) in sp.thetas.iter().enumerate() {
                values[i] += amp * Complex64::new(0.0, m as f64 * th).exp();
            }
        }
        let back = sp.nodal_from_modes(&sp.fourier_coeffs(&values).unwrap());
        let err = values
            .iter()
            .zip(back)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "roundtrip error {err}");
    }
}
