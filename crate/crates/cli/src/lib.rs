//! Command-line front end for `linecong`: reads congruence files and writes
//! CSV, OBJ and JSON.

pub mod file;
pub mod format;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use linecong::bde::{build_developable, find_folded_singularities, integrate_torsal_curve, StepParams};
use linecong::contact::{
    classify_direction_map, contact_line_incidence, contact_line_self, contact_parallel_planes, contact_pencil,
    contact_with_plane_family, contact_with_point_family,
};
use linecong::invariants::{self, PointKind};
use linecong::linespace::{Line, Plane};
use linecong::scalar::rational_from_f64;
use linecong::surfaces::{
    sample_focal_surface, sample_middle_surface, sample_plane_focal_surface, trace_parabolic_curve, Grid,
};
use linecong::verify::run_suite;
use linecong::Congruence;
use rayon::prelude::*;

pub use file::{CongruenceFile, FileError};
use format::{csv_row, num, obj};

#[derive(Parser, Debug)]
#[command(name = "linecong", version, about = "Focal sets, torsal curves and contact of line congruences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug)]
pub struct Io {
    /// Congruence file.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Point classes, focal parameters and middle points on a grid (CSV).
    Classify {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "21x21", value_parser = parse_grid)]
        grid: (usize, usize),
        /// Classify with exact rational arithmetic at the grid nodes.
        #[arg(long)]
        exact: bool,
    },
    /// The two focal sheets as an OBJ mesh.
    Focal {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "41x41", value_parser = parse_grid)]
        grid: (usize, usize),
    },
    /// The middle surface as an OBJ mesh.
    Middle {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "41x41", value_parser = parse_grid)]
        grid: (usize, usize),
    },
    /// The two sheets of focal planes, in an affine chart of plane space.
    PlaneFocal {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "41x41", value_parser = parse_grid)]
        grid: (usize, usize),
    },
    /// The parabolic curve (CSV).
    Parabolic {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value = "101x101", value_parser = parse_grid)]
        grid: (usize, usize),
        /// Append folded singularities.
        #[arg(long)]
        folded: bool,
    },
    /// One torsal curve (CSV), optionally with its developable surface.
    Torsal {
        #[command(flatten)]
        io: Io,
        #[arg(long, num_args = 2, value_names = ["U", "V"], allow_negative_numbers = true)]
        seed: Vec<f64>,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        branch: u8,
        #[arg(long)]
        max_step: Option<f64>,
        /// Line parameter range of the developable.
        #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true, requires = "obj")]
        developable: Option<Vec<f64>>,
        /// OBJ file for the developable.
        #[arg(long)]
        obj: Option<PathBuf>,
        /// Rulings across the developable.
        #[arg(long, default_value_t = 11)]
        nt: usize,
    },
    /// Contact of one line of the congruence with a model family (JSON).
    Contact {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, num_args = 2, value_names = ["U", "V"], allow_negative_numbers = true, required = true)]
        at: Vec<f64>,
        /// Point `x y z` for the point and pencil models.
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
        /// Plane `c1 c2 c3 d` (c . x = d) for the plane and pencil models.
        #[arg(long, num_args = 4, allow_negative_numbers = true)]
        plane: Option<Vec<f64>>,
        /// Covector `c1 c2 c3` for the parallel-planes model.
        #[arg(long, num_args = 3, allow_negative_numbers = true)]
        alpha: Option<Vec<f64>>,
        /// Line `a1 a2 a3 b1 b2 b3` for the line model; the line itself when absent.
        #[arg(long, num_args = 6, allow_negative_numbers = true)]
        line: Option<Vec<f64>>,
    },
    /// Oracle suite; exit status 1 when any check fails.
    Verify {
        #[command(flatten)]
        io: Io,
        /// `all` or a single check name.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Point,
    Plane,
    Direction,
    Parallel,
    Pencil,
    Line,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s.split_once(['x', 'X']).ok_or("expected NxM")?;
    let n: usize = n.parse().map_err(|_| format!("bad grid size `{n}`"))?;
    let m: usize = m.parse().map_err(|_| format!("bad grid size `{m}`"))?;
    if n < 2 || m < 2 {
        return Err("grid needs at least 2 nodes per side".into());
    }
    Ok((n, m))
}

fn load(io: &Io) -> anyhow::Result<CongruenceFile> {
    let text = std::fs::read_to_string(&io.input).with_context(|| format!("reading {}", io.input.display()))?;
    CongruenceFile::parse(&text).with_context(|| format!("parsing {}", io.input.display()))
}

fn emit(io: &Io, text: &str) -> anyhow::Result<()> {
    match &io.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn class_name(k: PointKind) -> &'static str {
    match k {
        PointKind::Elliptic => "elliptic",
        PointKind::Parabolic => "parabolic",
        PointKind::Hyperbolic => "hyperbolic",
    }
}

fn classify_row(z: &Congruence<f64>, exact: Option<&Congruence<num_rational::BigRational>>, u: f64, v: f64) -> String {
    let mut fields = vec![num(u), num(v)];
    let nan = || "nan".to_string();
    let Ok(j) = z.jet(&u, &v, 1) else {
        fields.push("undefined".into());
        fields.extend(std::iter::repeat_with(nan).take(10));
        return csv_row(&fields);
    };
    let mut c = invariants::classify_point(&j);
    if let (Some(zq), Some(uq), Some(vq)) = (exact, rational_from_f64(u), rational_from_f64(v)) {
        if let Ok(jq) = zq.jet(&uq, &vq, 1) {
            c = invariants::classify_point(&jq);
        }
    }
    fields.push(class_name(c.kind).into());
    fields.push(c.stall.to_string());
    fields.push(num(c.delta));
    match invariants::focal_data(&j) {
        Ok(fd) => {
            for r in fd.roots.as_complex() {
                fields.push(num(r.re));
                fields.push(num(r.im));
            }
        }
        Err(_) => fields.extend(std::iter::repeat_with(nan).take(4)),
    }
    match invariants::middle_point(&j) {
        Ok(m) => fields.extend(m.iter().map(|x| num(*x))),
        Err(_) => fields.extend(std::iter::repeat_with(nan).take(3)),
    }
    csv_row(&fields)
}

fn classify(io: &Io, grid: (usize, usize), exact: bool) -> anyhow::Result<()> {
    let f = load(io)?;
    let z = f.to_f64();
    let zq = exact.then(|| f.to_exact());
    let g = Grid::new(grid.0, grid.1, f.domain());
    let rows: Vec<String> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (u, v) = (g.u(k % grid.0), g.v(k / grid.0));
            classify_row(&z, zq.as_ref(), u, v)
        })
        .collect();
    let mut out = String::from("u,v,class,stall,delta,t1_re,t1_im,t2_re,t2_im,mid_x,mid_y,mid_z\n");
    out.extend(rows);
    emit(io, &out)
}

fn finite_domain(f: &CongruenceFile) -> anyhow::Result<Grid> {
    let d = f.domain();
    if !(d.umin.is_finite() && d.umax.is_finite() && d.vmin.is_finite() && d.vmax.is_finite()) {
        bail!("sampling needs a bounded domain");
    }
    Ok(Grid::new(2, 2, d))
}

fn parabolic(io: &Io, grid: (usize, usize), folded: bool) -> anyhow::Result<()> {
    let f = load(io)?;
    let z = f.to_f64();
    finite_domain(&f)?;
    let curves = trace_parabolic_curve(&z, f.domain(), grid.0, grid.1)?;
    let mut out = String::from(if folded { "u,v,delta_residual,branch,folded\n" } else { "u,v,delta_residual,branch\n" });
    for c in &curves {
        for (p, r) in c.points.iter().zip(&c.residuals) {
            let mut row = vec![num(p[0]), num(p[1]), num(*r), c.branch.to_string()];
            if folded {
                row.push("no".into());
            }
            out.push_str(&csv_row(&row));
        }
    }
    if folded {
        for c in &curves {
            for p in find_folded_singularities(&z, c)? {
                let delta = invariants::discriminant(&z.jet(&p.u, &p.v, 1)?).abs();
                let flag = if p.isolated { "isolated" } else { "run" };
                out.push_str(&csv_row(&[num(p.u), num(p.v), num(delta), c.branch.to_string(), flag.into()]));
            }
        }
    }
    emit(io, &out)
}

#[allow(clippy::too_many_arguments)]
fn torsal(
    io: &Io,
    seed: &[f64],
    branch: u8,
    max_step: Option<f64>,
    developable: Option<&[f64]>,
    obj_path: Option<&PathBuf>,
    nt: usize,
) -> anyhow::Result<()> {
    let f = load(io)?;
    let z = f.to_f64();
    let [u, v] = seed else { bail!("--seed needs two numbers") };
    let mut params = StepParams::default();
    if let Some(h) = max_step {
        params.max_step = h;
        params.initial_step = params.initial_step.min(h);
    }
    let curve = integrate_torsal_curve(&z, (*u, *v), branch, &params)?;
    eprintln!("termination: {:?}, {} points", curve.termination, curve.points.len());
    let mut out = String::from("u,v\n");
    for p in &curve.points {
        out.push_str(&csv_row(&[num(p[0]), num(p[1])]));
    }
    emit(io, &out)?;
    if let (Some([t0, t1]), Some(path)) = (developable, obj_path) {
        if nt < 2 {
            bail!("--nt must be at least 2");
        }
        let mesh = build_developable(&z, &curve, (*t0, *t1), nt)?;
        std::fs::write(path, obj(&[("developable", &mesh)], false)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn vec3(v: &Option<Vec<f64>>, flag: &str) -> anyhow::Result<[f64; 3]> {
    match v.as_deref() {
        Some([a, b, c]) => Ok([*a, *b, *c]),
        _ => bail!("this model needs --{flag}"),
    }
}

fn plane(v: &Option<Vec<f64>>) -> anyhow::Result<Plane<f64>> {
    match v.as_deref() {
        Some([a, b, c, d]) => Ok(Plane::new([*a, *b, *c], *d)?),
        _ => bail!("this model needs --plane"),
    }
}

#[allow(clippy::too_many_arguments)]
fn contact(
    io: &Io,
    model: Model,
    at: &[f64],
    point: &Option<Vec<f64>>,
    plane_arg: &Option<Vec<f64>>,
    alpha: &Option<Vec<f64>>,
    line: &Option<Vec<f64>>,
) -> anyhow::Result<()> {
    let f = load(io)?;
    let z = f.to_f64();
    let [u, v] = at else { bail!("--at needs two numbers") };
    let (u, v) = (*u, *v);
    let report = match model {
        Model::Point => contact_with_point_family(&z, u, v, vec3(point, "point")?)?,
        Model::Plane => contact_with_plane_family(&z, u, v, &plane(plane_arg)?)?,
        Model::Direction => classify_direction_map(&z, u, v)?,
        Model::Parallel => contact_parallel_planes(&z, u, v, vec3(alpha, "alpha")?)?,
        Model::Pencil => contact_pencil(&z, u, v, vec3(point, "point")?, &plane(plane_arg)?)?,
        Model::Line => match line.as_deref() {
            Some([a1, a2, a3, b1, b2, b3]) => contact_line_incidence(&z, u, v, &Line::new([*a1, *a2, *a3], [*b1, *b2, *b3])?)?,
            Some(_) => bail!("--line needs six numbers"),
            None => contact_line_self(&z, u, v)?,
        },
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(io, &text)
}

fn verify(io: &Io, suite: &str, samples: usize, seed: u64) -> anyhow::Result<i32> {
    let f = load(io)?;
    let z = f.to_f64();
    let report = run_suite(&z, samples, seed)?;
    let checks: Vec<_> = report.checks.iter().filter(|c| suite == "all" || c.name == suite).collect();
    if checks.is_empty() {
        let names: Vec<_> = report.checks.iter().map(|c| c.name.as_str()).collect();
        bail!("unknown suite `{suite}`; expected all or one of {}", names.join(", "));
    }
    let mut out = String::new();
    for c in &checks {
        out.push_str(&format!(
            "{} {} samples={} max_residual={} tolerance={}\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.samples,
            num(c.max_residual),
            num(c.tolerance)
        ));
    }
    emit(io, &out)?;
    Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
}

/// Runs one command line and returns the process exit status.
pub fn run<I, T>(args: I) -> anyhow::Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match cli.command {
        Command::Classify { io, grid, exact } => classify(&io, grid, exact)?,
        Command::Focal { io, grid } => {
            let f = load(&io)?;
            finite_domain(&f)?;
            let (s1, s2) = sample_focal_surface(&f.to_f64(), &Grid::new(grid.0, grid.1, f.domain()));
            emit(&io, &obj(&[("sheet1", &s1), ("sheet2", &s2)], true))?;
        }
        Command::Middle { io, grid } => {
            let f = load(&io)?;
            finite_domain(&f)?;
            let m = sample_middle_surface(&f.to_f64(), &Grid::new(grid.0, grid.1, f.domain()));
            emit(&io, &obj(&[("middle", &m)], true))?;
        }
        Command::PlaneFocal { io, grid } => {
            let f = load(&io)?;
            finite_domain(&f)?;
            let p = sample_plane_focal_surface(&f.to_f64(), &Grid::new(grid.0, grid.1, f.domain()));
            let mut text = format!("# plane chart c{} = 1\n", p.axis + 1);
            text.push_str(&obj(&[("sheet1", &p.sheets[0]), ("sheet2", &p.sheets[1])], true));
            emit(&io, &text)?;
        }
        Command::Parabolic { io, grid, folded } => parabolic(&io, grid, folded)?,
        Command::Torsal { io, seed, branch, max_step, developable, obj: obj_path, nt } => {
            torsal(&io, &seed, branch, max_step, developable.as_deref(), obj_path.as_ref(), nt)?
        }
        Command::Contact { io, model, at, point, plane, alpha, line } => {
            contact(&io, model, &at, &point, &plane, &alpha, &line)?
        }
        Command::Verify { io, suite, samples, seed } => return verify(&io, &suite, samples, seed),
    }
    Ok(0)
}
