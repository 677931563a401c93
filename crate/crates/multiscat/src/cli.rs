//! Command-line front end: scene solves, validation suites, polynomial-degree
//! sweeps, and the homogeneous/inhomogeneous cross check.
//!
//! Exit codes: 0 success, 2 usage, 3 validation failure, 4 non-convergence,
//! 5 i/o failure.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::geometry::{ArtificialDisk, BoundaryKind, Point2, ScattererSpec, ShapeSpec};
use crate::multiscatter::{prepare_scene, solve_scene, SceneDef, SceneIndex, SceneMode};
use crate::scenes::{parse_scene, write_outputs, SceneConfig, SceneError};
use crate::sem::{dtn_integrals, legendre_all, NodalBasis};
use crate::specfun::{cyl_bessel, CylKind};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_NOCONV: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "multiscat",
    about = "Iterative multiple-scattering solver (2-D Helmholtz, locally inhomogeneous media)",
    version
)]
struct Cli {
    /// Worker threads (default: available cores). Changes wall time only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scene document and write field grids, residual history and
    /// run metadata into the output directory.
    Run {
        scene: PathBuf,
        /// Output directory (default: $MULTISCAT_OUTDIR or ./out).
        outdir: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Built-in machinery checks against analytic oracles.
    Validate {
        /// Which suite: mie | dtn | integrals.
        #[arg(long)]
        which: String,
        #[arg(long, default_value_t = 10.0)]
        kappa: f64,
        #[arg(long, default_value_t = 20)]
        p: usize,
    },
    /// Solve a scene at several polynomial degrees and report
    /// self-convergence errors against the highest degree + 5.
    Sweep {
        scene: PathBuf,
        /// Comma-separated degree list, e.g. 5,10,15,20.
        #[arg(long, value_delimiter = ',')]
        p: Vec<usize>,
        outdir: Option<PathBuf>,
    },
    /// Run both coupled formulations on an n = 1 scene and report the field
    /// difference and both iteration counts.
    Compare {
        scene: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    /// GMRES relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Polynomial degree.
    #[arg(long)]
    p: Option<usize>,
    /// DtN cutoff.
    #[arg(long = "N")]
    n_modes: Option<i32>,
    /// Field grid resolution as WxH, e.g. 200x200.
    #[arg(long)]
    grid: Option<String>,
    /// Field grid window as x0,x1,y0,y1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    window: Option<Vec<f64>>,
}

fn default_outdir(given: Option<PathBuf>) -> PathBuf {
    given
        .or_else(|| std::env::var_os("MULTISCAT_OUTDIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_scene(path: &Path) -> Result<SceneConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_IO
    })?;
    parse_scene(&text).map_err(|e| {
        eprintln!("error: {e}");
        match e {
            SceneError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    })
}

fn apply_overrides(config: &mut SceneConfig, ov: &Overrides) -> Result<(), u8> {
    if let Some(t) = ov.tol {
        config.solver.tol = t;
    }
    if let Some(m) = ov.max_iter {
        config.solver.max_iter = m;
    }
    if let Some(p) = ov.p {
        config.solver.p = p;
    }
    if let Some(n) = ov.n_modes {
        config.solver.n_modes = n;
    }
    if let Some(g) = &ov.grid {
        let parts: Vec<_> = g.split('x').collect();
        let parsed: Option<(usize, usize)> = match parts.as_slice() {
            [w, h] => w.parse().ok().zip(h.parse().ok()),
            _ => None,
        };
        match parsed {
            Some((w, h)) => config.outputs.grid = [w, h],
            None => {
                eprintln!("error: --grid expects WxH, got {g}");
                return Err(EXIT_USAGE);
            }
        }
    }
    if let Some(w) = &ov.window {
        if w.len() != 4 {
            eprintln!("error: --window expects x0,x1,y0,y1");
            return Err(EXIT_USAGE);
        }
        config.outputs.window = [w[0], w[1], w[2], w[3]];
    }
    // keep the retained document consistent with the overrides
    if let Some(s) = config.doc.solver.as_mut() {
        *s = config.solver.clone();
    }
    if let Some(o) = config.doc.outputs.as_mut() {
        *o = config.outputs.clone();
    }
    Ok(())
}

/// Parse arguments and execute; returns the process exit code.
pub fn dispatch(args: Vec<String>) -> u8 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
    match cli.command {
        Command::Run {
            scene,
            outdir,
            overrides,
        } => cmd_run(&scene, default_outdir(outdir), &overrides),
        Command::Validate { which, kappa, p } => cmd_validate(&which, kappa, p),
        Command::Sweep { scene, p, outdir } => cmd_sweep(&scene, &p, default_outdir(outdir)),
        Command::Compare { scene, overrides } => cmd_compare(&scene, &overrides),
    }
}

fn cmd_run(scene_path: &Path, outdir: PathBuf, ov: &Overrides) -> u8 {
    let mut config = match load_scene(scene_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Err(code) = apply_overrides(&mut config, ov) {
        return code;
    }
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    let prepared = match prepare_scene(config.to_scene_def()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let solution = match solve_scene(prepared) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    println!(
        "solved in {} iterations ({:.2} s), final residual {:.3e}",
        solution.report.iterations,
        solution.report.wall_time.as_secs_f64(),
        solution.report.residuals.last().copied().unwrap_or(0.0)
    );
    if let Err(e) = write_outputs(&outdir, &config, &solution) {
        eprintln!("error: {e}");
        return EXIT_IO;
    }
    println!("outputs written to {}", outdir.display());
    if !solution.report.converged {
        eprintln!(
            "error: not converged to tol {:.1e} within {} iterations",
            config.solver.tol, config.solver.max_iter
        );
        return EXIT_NOCONV;
    }
    EXIT_OK
}

fn mie_relative_error(kappa: f64, p: usize) -> Result<f64, String> {
    let sc = ScattererSpec {
        center: Point2::new(0.0, 0.0),
        shape: ShapeSpec::circle(1.0),
        bc: BoundaryKind::Dirichlet,
    };
    let disk = ArtificialDisk {
        center: Point2::new(0.0, 0.0),
        radius: 1.5,
    };
    let mut def = SceneDef::new(
        kappa,
        SceneMode::Homogeneous,
        vec![sc],
        vec![disk],
        SceneIndex::ConstantOne,
        p,
    );
    def.e_r = 2;
    def.e_theta = 12;
    def.n_modes = kappa.ceil() as i32 + 20;
    let solution = solve_scene(prepare_scene(def).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mie = |r: f64, th: f64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let nmax = (kappa * 1.0) as i32 + 40;
        for n in -nmax..=nmax {
            let jn = cyl_bessel(CylKind::J, n, kappa).unwrap();
            let hn = cyl_bessel(CylKind::H1, n, kappa).unwrap();
            let hr = cyl_bessel(CylKind::H1, n, kappa * r).unwrap();
            acc += -(jn / hn) * hr * Complex64::new(0.0, n as f64 * th).exp();
        }
        acc
    };
    let rp = 2.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..400 {
        let th = 2.0 * PI * i as f64 / 400.0;
        let x = Point2::new(rp * th.cos(), rp * th.sin());
        let got = solution.eval(x).map_err(|e| e.to_string())?.scattered;
        let expect = mie(rp, th);
        num += (got - expect).norm_sqr();
        den += expect.norm_sqr();
    }
    Ok((num / den).sqrt())
}

fn dtn_eigenrelation_error(kappa: f64, p: usize) -> Result<f64, String> {
    use crate::harmonics::TraceSpace;
    let disk = ArtificialDisk {
        center: Point2::new(0.0, 0.0),
        radius: 1.0,
    };
    let basis = NodalBasis::new(p);
    let n_modes = (kappa * disk.radius).ceil() as i32 + 20;
    let sp = TraceSpace::build(disk, kappa, n_modes, 12, &basis).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    // modes the grid resolves comfortably (phase <= pi per arc at p >= 12)
    let n_test = 12.min(n_modes - 2);
    for n in 0..=n_test {
        let samples: Vec<Complex64> = sp
            .thetas
            .iter()
            .map(|&th| Complex64::new(0.0, n as f64 * th).exp())
            .collect();
        let z = sp.dtn_symbols[(n + n_modes) as usize];
        let out = sp.nodal_from_modes(&sp.dtn_apply(&sp.fourier_coeffs(&samples).unwrap()));
        for (o, s) in out.iter().zip(&samples) {
            worst = worst.max((o - z * s).norm() / z.norm());
        }
    }
    Ok(worst)
}

fn integrals_error() -> f64 {
    // adaptive Simpson oracle for the oscillatory boundary integrals
    fn simpson(
        f: &dyn Fn(f64) -> Complex64,
        a: f64,
        b: f64,
        fa: Complex64,
        fm: Complex64,
        fb: Complex64,
        whole: Complex64,
        depth: usize,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (fa + 4.0 * flm + fm) * ((m - a) / 6.0);
        let right = (fm + 4.0 * frm + fb) * ((b - m) / 6.0);
        let refined = left + right;
        // keep subdividing for the first levels: regular sample patterns can
        // alias an oscillatory integrand into a spuriously converged estimate
        let forced = depth > MAX_DEPTH - 7;
        if depth == 0 || (!forced && (refined - whole).norm() < 1e-14) {
            refined + (refined - whole) / 15.0
        } else {
            simpson(f, a, m, fa, flm, fm, left, depth - 1)
                + simpson(f, m, b, fm, frm, fb, right, depth - 1)
        }
    }
    const MAX_DEPTH: usize = 24;
    let mut worst = 0.0f64;
    for &(ha, beta) in &[(PI / 6.0, 0.3), (PI / 12.0, 2.1), (0.4, 4.9)] {
        let edge = crate::geometry::ArcEdge {
            center: Point2::new(0.0, 0.0),
            radius: 1.0,
            half_aperture: ha,
            mid_angle: beta,
        };
        for n in (-40i32..=40).step_by(8) {
            for m in 0..=20usize {
                let analytic = dtn_integrals(&edge, n, m).unwrap();
                let f = |t: f64| -> Complex64 {
                    let th = ha * t + beta;
                    legendre_all(m, t)[m] * Complex64::new(0.0, -(n as f64) * th).exp() * ha
                };
                let (fa, fm, fb) = (f(-1.0), f(0.0), f(1.0));
                let whole = (fa + 4.0 * fm + fb) / 3.0;
                let oracle = simpson(&f, -1.0, 1.0, fa, fm, fb, whole, MAX_DEPTH);
                worst = worst.max((analytic - oracle).norm());
            }
        }
    }
    worst
}

fn cmd_validate(which: &str, kappa: f64, p: usize) -> u8 {
    match which {
        "mie" => match mie_relative_error(kappa, p) {
            Ok(err) => {
                println!("mie check: kappa = {kappa}, p = {p}, relative L2 error = {err:.3e}");
                if err < 1e-7 {
                    println!("PASS (threshold 1e-7)");
                    EXIT_OK
                } else {
                    println!("FAIL (threshold 1e-7)");
                    EXIT_VALIDATION
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_VALIDATION
            }
        },
        "dtn" => match dtn_eigenrelation_error(kappa, p) {
            Ok(err) => {
                println!("dtn eigenrelation check: kappa = {kappa}, p = {p}, max relative deviation = {err:.3e}");
                if err < 1e-9 {
                    println!("PASS (threshold 1e-9)");
                    EXIT_OK
                } else {
                    println!("FAIL (threshold 1e-9)");
                    EXIT_VALIDATION
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_VALIDATION
            }
        },
        "integrals" => {
            let err = integrals_error();
            println!("oscillatory integral check: max |analytic - adaptive quadrature| = {err:.3e}");
            if err < 1e-12 {
                println!("PASS (threshold 1e-12)");
                EXIT_OK
            } else {
                println!("FAIL (threshold 1e-12)");
                EXIT_VALIDATION
            }
        }
        other => {
            eprintln!("error: unknown validation suite '{other}' (expected mie, dtn or integrals)");
            EXIT_USAGE
        }
    }
}

/// Probe ring enclosing the whole scene for self-convergence and comparison.
fn probe_ring(config: &SceneConfig, count: usize) -> (Point2, f64, Vec<Point2>) {
    let cx = config.scatterers.iter().map(|s| s.center.x).sum::<f64>()
        / config.scatterers.len() as f64;
    let cy = config.scatterers.iter().map(|s| s.center.y).sum::<f64>()
        / config.scatterers.len() as f64;
    let center = Point2::new(cx, cy);
    let radius = config
        .disks
        .iter()
        .map(|d| d.center.dist(center) + d.radius)
        .fold(0.0f64, f64::max)
        + 1.0;
    let probes = (0..count)
        .map(|i| {
            let th = 2.0 * PI * i as f64 / count as f64;
            center + Point2::new(radius * th.cos(), radius * th.sin())
        })
        .collect();
    (center, radius, probes)
}

fn cmd_sweep(scene_path: &Path, degrees: &[usize], outdir: PathBuf) -> u8 {
    if degrees.is_empty() {
        eprintln!("error: --p needs at least one degree");
        return EXIT_USAGE;
    }
    let config = match load_scene(scene_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let p_ref = degrees.iter().copied().max().unwrap() + 5;
    let (_, _, probes) = probe_ring(&config, 200);
    let run_at = |p: usize| -> Result<(Vec<Complex64>, usize), u8> {
        let mut cfg = config.clone();
        cfg.solver.p = p;
        let prepared = prepare_scene(cfg.to_scene_def()).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        })?;
        let sol = solve_scene(prepared).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        })?;
        if !sol.report.converged {
            eprintln!("error: p = {p} run did not converge");
            return Err(EXIT_NOCONV);
        }
        let mut vals = Vec::with_capacity(probes.len());
        for &pt in &probes {
            vals.push(sol.eval(pt).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_VALIDATION
            })?.total);
        }
        Ok((vals, sol.report.iterations))
    };
    let reference = match run_at(p_ref) {
        Ok((v, _)) => v,
        Err(code) => return code,
    };
    let ref_norm: f64 = reference.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let mut rows = Vec::new();
    println!("# p error iterations   (reference: p = {p_ref})");
    for &p in degrees {
        let (vals, iters) = match run_at(p) {
            Ok(r) => r,
            Err(code) => return code,
        };
        let err = vals
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / ref_norm;
        println!("{p} {err:.6e} {iters}");
        rows.push((p, err, iters));
    }
    if let Err(e) = std::fs::create_dir_all(&outdir) {
        eprintln!("error: cannot create {}: {e}", outdir.display());
        return EXIT_IO;
    }
    let path = outdir.join("sweep.dat");
    let body = std::iter::once(format!("# p error iterations (reference p = {p_ref})"))
        .chain(rows.iter().map(|(p, e, i)| format!("{p} {e:.16e} {i}")))
        .collect::<Vec<_>>()
        .join("\n");
    if let Err(e) = std::fs::write(&path, body + "\n") {
        eprintln!("error: cannot write {}: {e}", path.display());
        return EXIT_IO;
    }
    println!("sweep table written to {}", path.display());
    EXIT_OK
}

fn cmd_compare(scene_path: &Path, ov: &Overrides) -> u8 {
    let mut config = match load_scene(scene_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Err(code) = apply_overrides(&mut config, ov) {
        return code;
    }
    if !matches!(
        config.index,
        crate::scenes::RefractionIndexSpec::ConstantOne
    ) {
        eprintln!("error: compare needs an n = 1 scene (constant-one index)");
        return EXIT_VALIDATION;
    }
    let (_, _, probes) = probe_ring(&config, 200);
    let run_mode = |mode: SceneMode| -> Result<(Vec<Complex64>, usize), u8> {
        let mut def = config.to_scene_def();
        def.mode = mode;
        let prepared = prepare_scene(def).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        })?;
        let sol = solve_scene(prepared).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        })?;
        if !sol.report.converged {
            return Err(EXIT_NOCONV);
        }
        let mut vals = Vec::with_capacity(probes.len());
        for &pt in &probes {
            vals.push(sol.eval(pt).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_VALIDATION
            })?.total);
        }
        Ok((vals, sol.report.iterations))
    };
    let (hom, it_hom) = match run_mode(SceneMode::Homogeneous) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let (inh, it_inh) = match run_mode(SceneMode::Inhomogeneous) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let den: f64 = hom.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let num: f64 = hom
        .iter()
        .zip(&inh)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let rel = num / den;
    println!("homogeneous-mode iterations:   {it_hom}");
    println!("inhomogeneous-mode iterations: {it_inh}");
    println!("relative L2 field difference at 200 exterior probes: {rel:.3e}");
    if rel < 1e-6 {
        println!("PASS (threshold 1e-6)");
        EXIT_OK
    } else {
        println!("FAIL (threshold 1e-6)");
        EXIT_VALIDATION
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(dispatch(vec!["multiscat".into(), "nonsense".into()]), 2);
        assert_eq!(
            dispatch(vec![
                "multiscat".into(),
                "validate".into(),
                "--which".into(),
                "bogus".into()
            ]),
            2
        );
    }

    #[test]
    fn missing_scene_file_is_io_error() {
        assert_eq!(
            dispatch(vec![
                "multiscat".into(),
                "run".into(),
                "/definitely/not/here.json".into(),
                "/tmp/multiscat-test-out".into()
            ]),
            5
        );
    }

    #[test]
    fn integrals_suite_passes() {
        assert_eq!(
            dispatch(vec![
                "multiscat".into(),
                "validate".into(),
                "--which".into(),
                "integrals".into()
            ]),
            0
        );
    }

    #[test]
    fn dtn_suite_passes() {
        assert_eq!(
            dispatch(vec![
                "multiscat".into(),
                "validate".into(),
                "--which".into(),
                "dtn".into(),
                "--kappa".into(),
                "10".into(),
                "--p".into(),
                "16".into()
            ]),
            0
        );
    }
}
