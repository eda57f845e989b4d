//! The `gapcross` command line.
//!
//! Every subcommand writes one artifact (CSV or JSON) atomically and a
//! manifest next to it (`<out>.manifest.json`) holding the resolved
//! arguments, the seed and every derived parameter. `gapcross replay`
//! re-runs a manifest.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 when a numerical
//! contract fails.

mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bands1d::{band_structure, band_structure_bloch, BandStructure};
use crate::dislocation::{
    band_count_check, bulk_gaps_2d, crossing_count, find_t_for_energy, track_branches,
};
use crate::error::{Error, Result};
use crate::muffintin::{
    bessel_disc_eigenvalues, cut_disc_curve, fd_disc_eigenvalues, finite_height_spectrum,
    interpolation_curve, muffin_dislocation_report, rotated_gap_scan_with, rotated_geometry,
};
use crate::potentials::{load_spec, Potential1D, Potential2D, PotentialSpec};
use crate::rotation::{
    certify_residual, find_alignment, orbit_frequency, rotation_residual, Angle,
};
use crate::sdos::{interface_dos_sweep, surface_dos_sweep};
use output::{json_bytes, ladder, opt, Table};

pub use output::{load_manifest, manifest_path, write_atomic, Manifest};

/// Seed override from the environment.
pub const SEED_ENV: &str = "GAPCROSS_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "gapcross",
    version,
    about = "Bands, gaps and interface states of periodic Schrödinger operators"
)]
pub struct Cli {
    /// worker threads (default: logical cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// seed for randomized starting vectors; GAPCROSS_SEED overrides it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band edges of a 1D periodic potential
    Bands(BandsArgs),
    /// Eigenvalue branches across a gap as the dislocation runs over [0, 1]
    Dislocate(DislocateArgs),
    /// Net crossing count of a gap
    Crossings(CrossingsArgs),
    /// Dislocation parameters placing a strip eigenvalue at target energies
    Strip(StripArgs),
    /// Gap eigenvalue counts on growing boxes
    Sdos(SdosArgs),
    /// Rotated lattices
    #[command(subcommand)]
    Rotate(RotateCommand),
    /// Muffin-tin models
    #[command(subcommand)]
    Muffin(MuffinCommand),
    /// Run the acceptance ladder
    Verify(VerifyArgs),
    /// Re-run the command recorded in a manifest
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand)]
pub enum RotateCommand {
    /// Search an alignment witness (k, η)
    Align(AlignArgs),
    /// Box-visit frequency of the torus translation
    Orbit(OrbitArgs),
    /// Residual of a transplanted dislocation eigenfunction
    Residual(ResidualArgs),
}

#[derive(Debug, Subcommand)]
pub enum MuffinCommand {
    /// Dirichlet disc eigenvalues
    Discs(DiscsArgs),
    /// Cut-disc eigenvalue curves λ_k(t)
    Curve(CurveArgs),
    /// Surface branches of the dislocated muffin tin
    Dislocate(MuffinDislocateArgs),
    /// Gap eigenvalues of the rotated muffin tin
    Rotate(MuffinRotateArgs),
    /// Finite-height muffin tin on a box
    Finite(FiniteArgs),
}

/// `1/32`, `0.03125` or `1e-3`.
fn number(s: &str) -> std::result::Result<f64, String> {
    let bad = || format!("not a number: {s}");
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(number).collect()
}

fn pair(s: &str) -> std::result::Result<(f64, f64), String> {
    match numbers(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected a,b: {s}")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct AngleArgs {
    /// tan θ as `p/q` (exact), a decimal, or `golden` (1/φ)
    #[arg(long, conflicts_with = "theta")]
    pub tan: Option<String>,
    /// θ in radians
    #[arg(long)]
    pub theta: Option<f64>,
}

impl AngleArgs {
    fn resolve(&self) -> Result<Angle> {
        match (&self.tan, self.theta) {
            (Some(s), _) if s == "golden" => Ok(Angle::golden()),
            (Some(s), _) => match s.split_once('/') {
                Some((p, q)) => {
                    let p = p
                        .trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad slope {s}")))?;
                    let q = q
                        .trim()
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad slope {s}")))?;
                    Angle::rational(p, q)
                }
                None => {
                    let x: f64 = s
                        .parse()
                        .map_err(|_| Error::Invalid(format!("bad slope {s}")))?;
                    Angle::float(x.atan())
                }
            },
            (None, Some(theta)) => Angle::float(theta),
            (None, None) => Err(Error::Invalid("give --tan or --theta".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    /// potential file (TOML or JSON); default: the built-in step potential
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 200.0)]
    pub emax: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// finite-difference Bloch path at this mesh size instead of the discriminant
    #[arg(long, value_parser = number)]
    pub bloch_h: Option<f64>,
    #[arg(long, default_value = "bands.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DislocateArgs {
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub gap: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub tsteps: usize,
    #[arg(long, default_value = "1/200", value_parser = number)]
    pub h: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// also check the band counts 2n and 2n + 1 at t = 0 and t = 1
    #[arg(long)]
    pub check_counts: bool,
    #[arg(long, default_value = "branches.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CrossingsArgs {
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub gap: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub tsteps: usize,
    #[arg(long, default_value = "1/200", value_parser = number)]
    pub h: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value = "crossings.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StripArgs {
    /// 2D potential file; default: the built-in cosine potential
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub gap: usize,
    /// target energies as fractions of the gap
    #[arg(long, default_value = "0.25,0.5,0.75", value_delimiter = ',', value_parser = number)]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value = "1/32", value_parser = number)]
    pub h: f64,
    /// acceptance distance as a fraction of the gap width
    #[arg(long, default_value_t = 0.01)]
    pub accept: f64,
    #[arg(long, default_value = "strip.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SdosArgs {
    /// 2D periodic potential (dislocated by --t) or an interface potential
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// energy window; default: middle half of the first bulk gap
    #[arg(long, value_parser = pair)]
    pub window: Option<(f64, f64)>,
    #[arg(long, default_value = "10,20,40", value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, default_value = "1/16", value_parser = number)]
    pub h: f64,
    #[arg(long, default_value = "sdos.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.02)]
    pub eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub k_max: u64,
    #[arg(long, default_value = "align.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    #[arg(long, default_value = "orbit.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[arg(long)]
    pub potential: Option<PathBuf>,
    #[command(flatten)]
    pub angle: AngleArgs,
    /// energy; default: midpoint of the first bulk gap
    #[arg(long)]
    pub energy: Option<f64>,
    /// dislocation; default: found by bisection so that the strip has an
    /// eigenvalue at the energy
    #[arg(long)]
    pub t: Option<f64>,
    /// alignment tolerance; default: gap / (100 L) with L the Lipschitz constant
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub k_max: u64,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value = "1/32", value_parser = number)]
    pub h: f64,
    /// confirm the residual with an inertia count on the assembled operator
    #[arg(long)]
    pub certify: bool,
    #[arg(long, default_value = "residual.json")]
    pub out: PathBuf,
}

const DEFAULT_LADDER: &str = "1/32,1/64,1/128";

#[derive(Debug, Args)]
pub struct DiscsArgs {
    #[arg(long, default_value_t = 0.4)]
    pub r: f64,
    #[arg(long, default_value_t = 5)]
    pub k_max: usize,
    /// add extrapolated finite-difference values
    #[arg(long)]
    pub fd: bool,
    #[arg(long, default_value = DEFAULT_LADDER, value_delimiter = ',', value_parser = number)]
    pub ladder: Vec<f64>,
    #[arg(long, default_value = "discs.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 0.4)]
    pub r: f64,
    #[arg(long, default_value_t = 1)]
    pub k_max: usize,
    /// depths t; default: the 40-point interpolation grid
    #[arg(long, value_delimiter = ',', value_parser = number)]
    pub t: Option<Vec<f64>>,
    #[arg(long, default_value = DEFAULT_LADDER, value_delimiter = ',', value_parser = number)]
    pub ladder: Vec<f64>,
    #[arg(long, default_value = "curve.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MuffinDislocateArgs {
    #[arg(long, default_value_t = 0.3)]
    pub r: f64,
    #[arg(long, default_value_t = 1)]
    pub gap: usize,
    #[arg(long, default_value_t = 20)]
    pub tsteps: usize,
    #[arg(long, default_value = "1/32,1/64", value_delimiter = ',', value_parser = number)]
    pub ladder: Vec<f64>,
    #[arg(long, default_value = "muffin_branches.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MuffinRotateArgs {
    #[arg(long, default_value_t = 0.3)]
    pub r: f64,
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long, default_value_t = 1)]
    pub gap: usize,
    /// half-width of the square window of centers
    #[arg(long, default_value_t = 100.0)]
    pub window: f64,
    #[arg(long, default_value = DEFAULT_LADDER, value_delimiter = ',', value_parser = number)]
    pub ladder: Vec<f64>,
    #[arg(long, default_value = "muffin_rotate.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FiniteArgs {
    #[arg(long, default_value_t = 0.3)]
    pub r: f64,
    #[command(flatten)]
    pub angle: AngleArgs,
    #[arg(long, default_value_t = 800.0)]
    pub height: f64,
    #[arg(long, default_value = "-2,2", value_parser = pair)]
    pub x: (f64, f64),
    #[arg(long, default_value = "-2,2", value_parser = pair)]
    pub y: (f64, f64),
    /// energy window; default: the gap (μ̃_1, μ̃_2) of the discs
    #[arg(long, value_parser = pair)]
    pub window: Option<(f64, f64)>,
    #[arg(long, default_value = "1/32", value_parser = number)]
    pub h: f64,
    #[arg(long, default_value = "finite.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// criteria to run, e.g. `1,8,13`; default: all
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<usize>>,
    /// tolerance override `key=value`, repeatable
    #[arg(long = "set")]
    pub set: Vec<String>,
    #[arg(long, default_value = "verify.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// write the artifact into this directory instead of the recorded path
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// What a subcommand produced.
struct Artifact {
    out: PathBuf,
    bytes: Vec<u8>,
    resolved: serde_json::Value,
    /// criteria or checks that failed after the artifact was written
    failure: Option<Error>,
}

impl Artifact {
    fn new(out: &Path, bytes: Vec<u8>, resolved: serde_json::Value) -> Self {
        Artifact {
            out: out.to_path_buf(),
            bytes,
            resolved,
            failure: None,
        }
    }
}

fn potential_1d(path: &Option<PathBuf>) -> Result<Potential1D> {
    match path {
        Some(p) => Potential1D::new(load_spec(p)?),
        None => Ok(Potential1D::default_step()),
    }
}

fn spec_2d(path: &Option<PathBuf>) -> Result<PotentialSpec> {
    match path {
        Some(p) => load_spec(p),
        None => Ok(Potential2D::default_cosine().spec().clone()),
    }
}

fn potential_2d(path: &Option<PathBuf>) -> Result<Potential2D> {
    Potential2D::new(spec_2d(path)?)
}

/// Gap `k` of the discrete 2D bulk operator.
fn bulk_gap(v: &Potential2D, k: usize, h: f64) -> Result<(f64, f64)> {
    let mut e_max = 80.0;
    for _ in 0..6 {
        let open: Vec<_> = bulk_gaps_2d(v, h, e_max, 9, 1e-9)?
            .into_iter()
            .filter(|g| g.open)
            .collect();
        if let Some(g) = open.get(k - 1) {
            return Ok((g.lower, g.upper));
        }
        e_max *= 2.0;
    }
    Err(Error::GapOutOfRange { k, available: 0 })
}

fn bands(a: &BandsArgs) -> Result<Artifact> {
    let v = potential_1d(&a.potential)?;
    let bs: BandStructure = match a.bloch_h {
        Some(h) => band_structure_bloch(&v, a.emax, h, a.tol)?,
        None => band_structure(&v, a.emax, a.tol)?,
    };
    let mut t = Table::new(&["k", "gamma_k", "gamma_k_prime", "gap_open"]);
    for g in &bs.gaps {
        t.row([
            g.k.to_string(),
            g.lower.to_string(),
            g.upper.to_string(),
            g.open.to_string(),
        ]);
    }
    let resolved = json!({
        "method": bs.method,
        "bands": bs.bands,
        "resolution": bs.resolution,
        "open_gaps": bs.gaps.iter().filter(|g| g.open).count(),
    });
    Ok(Artifact::new(&a.out, t.into_bytes(), resolved))
}

fn dislocate(a: &DislocateArgs) -> Result<Artifact> {
    let v = potential_1d(&a.potential)?;
    let counts = if a.check_counts {
        Some((
            band_count_check(&v, a.n, a.gap, 0.0, a.h)?,
            band_count_check(&v, a.n, a.gap, 1.0, a.h)?,
        ))
    } else {
        None
    };
    let fam = track_branches(&v, a.gap, a.n, a.tsteps, a.h, a.tol)?;
    let mut t = Table::new(&["branch_id", "t", "value", "entry_edge", "exit_edge"]);
    for b in &fam.branches {
        for p in &b.points {
            t.row([
                b.id.to_string(),
                p.t.to_string(),
                p.value.to_string(),
                b.entry.label().to_string(),
                b.exit.label().to_string(),
            ]);
        }
    }
    let resolved = json!({
        "gap": fam.gap,
        "window": fam.window,
        "t_grid": fam.t_grid,
        "seams": fam.seams,
        "band_counts": counts,
    });
    Ok(Artifact::new(&a.out, t.into_bytes(), resolved))
}

fn crossings(a: &CrossingsArgs) -> Result<Artifact> {
    let v = potential_1d(&a.potential)?;
    let fam = track_branches(&v, a.gap, a.n, a.tsteps, a.h, a.tol)?;
    let report = crossing_count(&fam);
    let resolved = json!({ "gap": fam.gap, "window": fam.window, "t_steps": a.tsteps });
    let body = json!({
        "report": report,
        "gap": fam.gap,
        "max_slope": fam.max_slope(),
        "edge_law_violations": fam.edge_law_violations(5.0 * a.tol),
    });
    Ok(Artifact::new(&a.out, json_bytes(&body), resolved))
}

fn strip(a: &StripArgs) -> Result<Artifact> {
    let v = potential_2d(&a.potential)?;
    let gap = bulk_gap(&v, a.gap, a.h)?;
    let w = gap.1 - gap.0;
    let hits = a
        .fractions
        .iter()
        .map(|f| find_t_for_energy(&v, a.n, gap.0 + f * w, a.accept * w, a.h, 1e-10))
        .collect::<Result<Vec<_>>>()?;
    let resolved = json!({ "gap": gap, "accept": a.accept * w });
    Ok(Artifact::new(
        &a.out,
        json_bytes(&json!({ "gap": gap, "hits": hits })),
        resolved,
    ))
}

fn sdos(a: &SdosArgs) -> Result<Artifact> {
    let spec = spec_2d(&a.potential)?;
    let v = Potential2D::new(spec.clone())?;
    let interface = matches!(spec, PotentialSpec::Interface { .. });
    let window = match a.window {
        Some(w) => w,
        None => {
            let bulk = match &spec {
                PotentialSpec::Interface { right, .. } => Potential2D::new((**right).clone())?,
                _ => v.clone(),
            };
            let g = bulk_gap(&bulk, 1, a.h)?;
            let q = 0.25 * (g.1 - g.0);
            (g.0 + q, g.1 - q)
        }
    };
    let rep = if interface {
        interface_dos_sweep(&v, window, &a.sizes, a.h)?
    } else {
        surface_dos_sweep(&v, a.t, window, &a.sizes, a.h)?
    };
    let mut t = Table::new(&[
        "n",
        "raw",
        "reference",
        "differenced",
        "scaled_surface",
        "scaled_upper",
    ]);
    for r in &rep.rows {
        t.row([
            r.n.to_string(),
            r.raw.to_string(),
            r.reference.to_string(),
            r.differenced.to_string(),
            r.scaled_surface.to_string(),
            r.scaled_upper.to_string(),
        ]);
    }
    let resolved = json!({
        "window": window,
        "grid_t": rep.grid_t,
        "fit": rep.fit,
        "upper_non_increasing": rep.upper_non_increasing(),
        "convention": rep.convention,
    });
    Ok(Artifact::new(&a.out, t.into_bytes(), resolved))
}

fn align(a: &AlignArgs) -> Result<Artifact> {
    let angle = a.angle.resolve()?;
    let w = find_alignment(&angle, a.t, a.eps, a.k_max)?;
    let body =
        json!({ "angle": angle, "theta": angle.theta(), "found": w.is_some(), "witness": w });
    Ok(Artifact::new(
        &a.out,
        json_bytes(&body),
        json!({ "angle": angle }),
    ))
}

fn orbit(a: &OrbitArgs) -> Result<Artifact> {
    let angle = a.angle.resolve()?;
    let stats = orbit_frequency(&angle, a.t, a.eps, a.steps)?;
    Ok(Artifact::new(
        &a.out,
        json_bytes(&stats),
        json!({ "angle": angle, "box_area": 4.0 * a.eps * a.eps }),
    ))
}

fn residual(a: &ResidualArgs, seed: u64) -> Result<Artifact> {
    let v = potential_2d(&a.potential)?;
    let angle = a.angle.resolve()?;
    let gap = bulk_gap(&v, 1, a.h)?;
    let w = gap.1 - gap.0;
    let e = a.energy.unwrap_or(0.5 * (gap.0 + gap.1));
    let t = match a.t {
        Some(t) => t,
        None => find_t_for_energy(&v, a.n, e, w / 100.0, a.h, 1e-10)?.t,
    };
    let eps = match a.eps {
        Some(eps) => eps,
        None => {
            let l = v
                .lipschitz_constant()
                .ok_or_else(|| Error::Invalid("potential is not Lipschitz: give --eps".into()))?;
            w / (100.0 * l)
        }
    };
    let witness = find_alignment(&angle, t, eps, a.k_max)?.ok_or_else(|| {
        Error::NoWitness(format!(
            "θ = {}, t = {t}, ε = {eps}, k ≤ {}",
            angle.theta(),
            a.k_max
        ))
    })?;
    let resolved = json!({ "gap": gap, "energy": e, "t": t, "eps": eps, "witness": witness });
    let body = if a.certify {
        json!(certify_residual(&v, &witness, e, a.n, a.h, seed)?)
    } else {
        json!(rotation_residual(&v, &witness, e, a.n, a.h, seed)?)
    };
    Ok(Artifact::new(&a.out, json_bytes(&body), resolved))
}

fn discs(a: &DiscsArgs) -> Result<Artifact> {
    let mut t = Table::new(&["k", "value", "source", "h_ladder"]);
    let bessel = bessel_disc_eigenvalues(a.r, a.k_max)?;
    for (k, v) in bessel.values.iter().enumerate() {
        t.row([
            (k + 1).to_string(),
            v.to_string(),
            "bessel".into(),
            String::new(),
        ]);
    }
    if a.fd {
        let fd = fd_disc_eigenvalues(a.r, a.k_max, &a.ladder)?;
        for (k, v) in fd.values.iter().enumerate() {
            t.row([
                (k + 1).to_string(),
                v.to_string(),
                "fd-extrapolated".into(),
                ladder(&a.ladder),
            ]);
        }
    }
    Ok(Artifact::new(
        &a.out,
        t.into_bytes(),
        json!({ "r": a.r, "gap_1": bessel.gap(1).ok() }),
    ))
}

fn curve(a: &CurveArgs) -> Result<Artifact> {
    let c = match &a.t {
        Some(ts) => cut_disc_curve(a.r, a.k_max, ts, &a.ladder)?,
        None => interpolation_curve(a.r, a.k_max, &a.ladder)?,
    };
    let mut t = Table::new(&["k", "t", "value", "source", "h_ladder"]);
    let hl = ladder(&c.h_ladder);
    for k in 1..=c.k_max {
        for (tv, v) in c.t_grid.iter().zip(c.branch(k)) {
            let source = if v.is_some() {
                "fd-extrapolated"
            } else {
                "above-cutoff"
            };
            t.row([
                k.to_string(),
                tv.to_string(),
                opt(v),
                source.into(),
                hl.clone(),
            ]);
        }
    }
    Ok(Artifact::new(
        &a.out,
        t.into_bytes(),
        json!({ "t_grid": c.t_grid, "h_ladder": c.h_ladder }),
    ))
}

fn muffin_dislocate(a: &MuffinDislocateArgs) -> Result<Artifact> {
    if a.tsteps == 0 {
        return Err(Error::Invalid("tsteps must be positive".into()));
    }
    let grid: Vec<f64> = (0..=a.tsteps).map(|i| i as f64 / a.tsteps as f64).collect();
    let rep = muffin_dislocation_report(a.r, a.gap, &grid, &a.ladder)?;
    let mut t = Table::new(&["k", "t", "value", "source", "h_ladder"]);
    let hl = ladder(&rep.curve.h_ladder);
    for row in &rep.rows {
        for &(k, v) in &row.in_gap {
            t.row([
                k.to_string(),
                row.t.to_string(),
                v.to_string(),
                "fd-extrapolated".into(),
                hl.clone(),
            ]);
        }
    }
    let resolved = json!({
        "gap": rep.gap,
        "bulk": rep.bulk,
        "branch": rep.branch,
        "traverses": rep.traverses,
        "h_ladder": rep.curve.h_ladder,
    });
    Ok(Artifact::new(&a.out, t.into_bytes(), resolved))
}

fn muffin_rotate(a: &MuffinRotateArgs) -> Result<Artifact> {
    let angle = a.angle.resolve()?;
    let bulk = bessel_disc_eigenvalues(a.r, 4 * (a.gap + 1))?;
    let gap = bulk.gap(a.gap)?;
    let k_max = bulk.values.iter().filter(|&&m| m < gap.1).count();
    let geo = rotated_geometry(a.r, &angle, a.window)?;
    let curve = interpolation_curve(a.r, k_max, &a.ladder)?;
    let scan = rotated_gap_scan_with(&curve, &angle, gap, a.window)?;
    let mut t = Table::new(&[
        "k", "theta", "value", "source", "h_ladder", "center_x", "center_y", "t_eff",
    ]);
    let hl = ladder(&curve.h_ladder);
    for s in &scan.values {
        t.row([
            s.k.to_string(),
            scan.theta.to_string(),
            s.value.to_string(),
            "fd-interpolated".into(),
            hl.clone(),
            s.center.0.to_string(),
            s.center.1.to_string(),
            s.t_eff.to_string(),
        ]);
    }
    let resolved = json!({
        "gap": gap,
        "theta": scan.theta,
        "cut_discs": scan.cut_discs,
        "outside_grid": scan.outside_grid,
        "empty_tenths": scan.empty_subintervals(10),
        "r_theta": geo.r_theta,
        "period": geo.period,
        "centered_cuts": geo.centered_cuts,
        "excluded_family": geo.excluded_family,
        "h_ladder": curve.h_ladder,
    });
    Ok(Artifact::new(&a.out, t.into_bytes(), resolved))
}

fn finite(a: &FiniteArgs) -> Result<Artifact> {
    let angle = a.angle.resolve()?;
    let window = match a.window {
        Some(w) => w,
        None => bessel_disc_eigenvalues(a.r, 4)?.gap(1)?,
    };
    let s = finite_height_spectrum(a.r, &angle, a.height, a.x, a.y, window, a.h)?;
    let mut t = Table::new(&["k", "theta", "value", "source", "h_ladder"]);
    for (k, v) in s.values.iter().enumerate() {
        t.row([
            (k + 1).to_string(),
            s.theta.to_string(),
            v.to_string(),
            "finite-height".into(),
            a.h.to_string(),
        ]);
    }
    Ok(Artifact::new(
        &a.out,
        t.into_bytes(),
        json!({ "window": window, "dim": s.dim }),
    ))
}

fn run_verify(a: &VerifyArgs, seed: u64) -> Result<Artifact> {
    let mut tol = verify::Tolerances::default();
    for s in &a.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected key=value, got {s}")))?;
        let v = number(v).map_err(Error::Invalid)?;
        tol.set(k.trim(), v)?;
    }
    let report = verify::run_suite(&tol, a.only.as_deref(), seed)?;
    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.id.to_string())
        .collect();
    let mut art = Artifact::new(&a.out, json_bytes(&report), json!({ "tolerances": tol }));
    if !failed.is_empty() {
        art.failure = Some(Error::contract(
            "acceptance",
            format!("criteria {} failed", failed.join(", ")),
        ));
    }
    Ok(art)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("{SEED_ENV}={s} is not a 64-bit seed"))),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}

/// Arguments with any `--seed` removed and the resolved seed appended.
fn resolved_argv(args: &[String], seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--seed" {
            skip = true;
        } else if !a.starts_with("--seed=") {
            out.push(a.clone());
        }
    }
    out.push("--seed".into());
    out.push(seed.to_string());
    out
}

fn replay(a: &ReplayArgs) -> Result<i32> {
    let m = load_manifest(&a.manifest)?;
    let mut argv = m.argv.clone();
    if let Some(dir) = &a.out_dir {
        let name = m
            .output
            .file_name()
            .ok_or_else(|| Error::Invalid("manifest output has no file name".into()))?;
        let target = dir.join(name).display().to_string();
        match argv.iter().position(|x| x == "--out") {
            Some(i) if i + 1 < argv.len() => argv[i + 1] = target,
            _ => {
                argv.retain(|x| !x.starts_with("--out="));
                argv.push("--out".into());
                argv.push(target);
            }
        }
    }
    Ok(run(std::iter::once("gapcross".to_string()).chain(argv)))
}

fn execute(cli: &Cli, argv: &[String]) -> Result<i32> {
    let seed = resolve_seed(cli.seed)?;
    let art = match &cli.command {
        Command::Replay(a) => return replay(a),
        Command::Bands(a) => bands(a),
        Command::Dislocate(a) => dislocate(a),
        Command::Crossings(a) => crossings(a),
        Command::Strip(a) => strip(a),
        Command::Sdos(a) => sdos(a),
        Command::Rotate(RotateCommand::Align(a)) => align(a),
        Command::Rotate(RotateCommand::Orbit(a)) => orbit(a),
        Command::Rotate(RotateCommand::Residual(a)) => residual(a, seed),
        Command::Muffin(MuffinCommand::Discs(a)) => discs(a),
        Command::Muffin(MuffinCommand::Curve(a)) => curve(a),
        Command::Muffin(MuffinCommand::Dislocate(a)) => muffin_dislocate(a),
        Command::Muffin(MuffinCommand::Rotate(a)) => muffin_rotate(a),
        Command::Muffin(MuffinCommand::Finite(a)) => finite(a),
        Command::Verify(a) => run_verify(a, seed),
    }?;
    write_atomic(&art.out, &art.bytes)?;
    let manifest = Manifest {
        tool: "gapcross".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv: resolved_argv(argv, seed),
        seed,
        output: art.out.clone(),
        resolved: art.resolved,
    };
    write_atomic(&manifest_path(&art.out), &json_bytes(&manifest))?;
    match art.failure {
        Some(e) => {
            eprintln!("gapcross: {e}");
            Ok(e.exit_code())
        }
        None => Ok(0),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match cli.jobs {
        Some(0) => {
            eprintln!("gapcross: --jobs must be positive");
            return 2;
        }
        Some(j) => rayon::ThreadPoolBuilder::new().num_threads(j).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("gapcross: {e}");
            return 2;
        }
    };
    match pool.install(|| execute(&cli, &args[1..])) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gapcross: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn lists_split_on_commas() {
        let cli = Cli::try_parse_from(["gapcross", "verify", "--only", "1,8"]).unwrap();
        match cli.command {
            Command::Verify(v) => assert_eq!(v.only, Some(vec![1, 8])),
            _ => unreachable!(),
        }
        let cli = Cli::try_parse_from(["gapcross", "muffin", "discs"]).unwrap();
        match cli.command {
            Command::Muffin(MuffinCommand::Discs(d)) => {
                assert_eq!(d.ladder, vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0])
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn numbers_accept_fractions() {
        assert_eq!(number("1/32").unwrap(), 0.03125);
        assert_eq!(numbers("1e-3, 0.5").unwrap(), vec![1e-3, 0.5]);
        assert!(pair("1,2,3").is_err());
    }

    #[test]
    fn seed_is_made_explicit() {
        let args: Vec<String> = ["bands", "--seed", "4", "--out", "x.csv"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            resolved_argv(&args, 9),
            ["bands", "--out", "x.csv", "--seed", "9"]
        );
    }

    #[test]
    fn angles_parse() {
        let a = AngleArgs {
            tan: Some("3/4".into()),
            theta: None,
        };
        assert_eq!(a.resolve().unwrap(), Angle::rational(3, 4).unwrap());
        let g = AngleArgs {
            tan: Some("golden".into()),
            theta: None,
        };
        assert_eq!(g.resolve().unwrap(), Angle::golden());
        assert!(AngleArgs {
            tan: None,
            theta: None
        }
        .resolve()
        .is_err());
    }
}
