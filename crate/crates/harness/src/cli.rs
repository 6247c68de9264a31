//! `straitlab` command line.
//!
//! File arguments that do not exist on disk but name a built-in fixture
//! (`basilica.json`, `rabbit.json`, `basilica_poly.json`, ...) resolve to
//! the fixture. Machine outputs go to stdout as JSON with hexadecimal floats;
//! experiments write CSV and JSON artifacts when an output directory is set.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C;
use serde::Serialize;
use serde_json::{json, Value};
use straitlab::dynamics::{
    external_ray, landing_relation, parameter_ray, periodic_points, quadratic_like_restriction, render_julia,
    PeriodicOptions, QlikeOptions, Viewport,
};
use straitlab::parabolic::{fatou_attracting, fatou_repelling, holder_exponent, NormalForm};
use straitlab::portrait::portrait_from_lamination;
use straitlab::{Angle, RationalLamination, RayOptions, SchemaAngle, SchemaPolynomial, TuningContext, Vertex};

use crate::config::PRECISION_ENV;
use crate::{capture, fixtures, implosion, mismatch, output, ExperimentConfig, HarnessError, Result, VERSION};

#[derive(Parser, Debug)]
#[command(name = "straitlab", version = VERSION, about = "Rational laminations, straightening and parabolic implosion")]
struct Cli {
    /// Experiment config (JSON); flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    group: Group,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Laminations, tuning and critical portraits.
    #[command(subcommand)]
    Lam(Lam),
    /// Polynomial dynamics over schemata.
    #[command(subcommand)]
    Dyn(Dyn),
    /// Fatou coordinates, Lavaurs maps and Hölder fits.
    #[command(subcommand)]
    Para(Para),
    /// Experiments writing reproducible artifacts.
    #[command(subcommand)]
    Exp(Exp),
}

#[derive(Subcommand, Debug)]
enum Lam {
    /// Check the axioms and classify.
    Validate { file: PathBuf },
    /// Fatou gaps and critical gaps.
    Gaps { file: PathBuf },
    /// The induced schema of the critical gaps.
    Schema { file: PathBuf },
    /// Tune a child lamination into a base.
    Tune {
        #[arg(long)]
        base: PathBuf,
        child: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Straighten a lamination containing the base.
    Straighten {
        #[arg(long)]
        base: PathBuf,
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// Critical portrait of a lamination relative to a base.
    Portrait {
        #[arg(long)]
        base: PathBuf,
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Poly {
    /// Polynomial JSON.
    #[arg(long = "f")]
    f: PathBuf,
    /// Vertex name; the first vertex by default.
    #[arg(long)]
    vertex: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Dyn {
    /// Trace a dynamic ray and report its landing point.
    Ray {
        #[command(flatten)]
        poly: Poly,
        #[arg(long)]
        angle: Angle,
    },
    /// Trace a parameter ray of z² + c.
    Paramray {
        #[arg(long)]
        angle: Angle,
        #[arg(long, default_value_t = 1e-6)]
        potential: f64,
    },
    /// Periodic points of a given period.
    Periodic {
        #[command(flatten)]
        poly: Poly,
        #[arg(long)]
        period: usize,
    },
    /// Partition angles by landing point.
    Land {
        #[command(flatten)]
        poly: Poly,
        /// Comma-separated angles.
        #[arg(long, value_delimiter = ',', required = true)]
        angles: Vec<Angle>,
    },
    /// Render the filled Julia set as PPM.
    Julia {
        #[command(flatten)]
        poly: Poly,
        #[arg(long, default_value = "0,0", value_parser = parse_complex)]
        center: C,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long, default_value_t = 400)]
        size: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Search for a quadratic-like restriction of f^period.
    Qlike {
        #[command(flatten)]
        poly: Poly,
        #[arg(long)]
        period: usize,
        #[arg(long, value_parser = parse_complex)]
        center: C,
    },
}

#[derive(Subcommand, Debug)]
enum Para {
    /// Fatou coordinate of z² + c at a parabolic fixed point.
    Fatou {
        #[arg(long, default_value = "0.25,0", value_parser = parse_complex)]
        c: C,
        #[arg(long, default_value = "0.5,0", value_parser = parse_complex)]
        point: C,
        #[arg(long, default_value = "attracting")]
        side: Side,
        /// Grid size for the Abel residual.
        #[arg(long, default_value_t = 32)]
        grid: usize,
    },
    /// Evaluate the Lavaurs map of z² + 1/4 normalized at α.
    Lavaurs {
        #[arg(long = "z", value_parser = parse_complex, required = true)]
        points: Vec<C>,
        /// Phase override; the fitted phase by default.
        #[arg(long, value_parser = parse_complex)]
        phase: Option<C>,
    },
    /// Geometric-limit table of Q_m^m against the Lavaurs map.
    Geomlimit {
        #[command(flatten)]
        range: MRange,
    },
    /// Fit a Hölder exponent to samples `[w_re, w_im, p_re, p_im]`.
    Holder { file: PathBuf },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Side {
    Attracting,
    Repelling,
}

#[derive(Args, Debug, Default)]
struct MRange {
    #[arg(long)]
    m_min: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    /// External angle of α(Q); computed when absent.
    #[arg(long)]
    theta: Option<String>,
}

#[derive(Args, Debug, Default)]
struct ExpArgs {
    /// Output directory for the artifacts.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Exp {
    /// Misiurewicz parameters c_m and the geometric limit Q_m^m → g_Q.
    Implosion {
        #[command(flatten)]
        range: MRange,
        #[command(flatten)]
        common: ExpArgs,
    },
    /// The capture family Q̃_{n,m} and its limits.
    Capture {
        #[command(flatten)]
        range: MRange,
        /// Comma-separated indices n.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        d1: Option<u32>,
        #[command(flatten)]
        common: ExpArgs,
    },
    /// Multiplier mismatch on a renormalizable fixture.
    Mismatch {
        /// `capture-cubic` or `identity`.
        #[arg(long)]
        fixture: Option<String>,
        #[command(flatten)]
        common: ExpArgs,
    },
}

fn parse_complex(s: &str) -> std::result::Result<C, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok(C::new(p(re)?, p(im)?))
}

/// Parse `args` (program name first), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("straitlab: {e}");
            if let HarnessError::Usage(_) = e {
                eprintln!("usage: straitlab [--config FILE] <lam|dyn|para|exp> <command> [args]; see --help");
            }
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<String> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.resolve_precision(std::env::var(PRECISION_ENV).ok().as_deref())?;
    match cli.group {
        Group::Lam(c) => lam(c),
        Group::Dyn(c) => dynamics(c),
        Group::Para(c) => para(c, cfg),
        Group::Exp(c) => exp(c, cfg),
    }
}

fn read(path: &Path, builtin: &[(&str, &'static str)]) -> Result<String> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(source) => {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            builtin
                .iter()
                .find(|(n, _)| *n == name && !path.exists())
                .map(|(_, text)| text.to_string())
                .ok_or(HarnessError::Io { path: path.display().to_string(), source })
        }
    }
}

const BUILTIN_LAMINATIONS: &[(&str, &str)] =
    &[("basilica.json", fixtures::BASILICA_JSON), ("rabbit.json", fixtures::RABBIT_JSON)];
const BUILTIN_POLYNOMIALS: &[(&str, &str)] = &[("basilica_poly.json", fixtures::BASILICA_POLY_JSON)];

fn load_lamination(path: &Path) -> Result<RationalLamination> {
    fixtures::lamination_from_json(&read(path, BUILTIN_LAMINATIONS)?)
}

fn load_poly(p: &Poly) -> Result<(SchemaPolynomial, Vertex)> {
    let f = fixtures::polynomial_from_json(&read(&p.f, BUILTIN_POLYNOMIALS)?)?;
    let v = match &p.vertex {
        Some(name) => f.schema().vertex(name).map_err(|e| HarnessError::Usage(e.to_string()))?,
        None => 0,
    };
    Ok((f, v))
}

fn context(base: &Path) -> Result<TuningContext> {
    TuningContext::new(Arc::new(load_lamination(base)?)).map_err(HarnessError::domain)
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(HarnessError::domain)?;
    s.push('\n');
    Ok(s)
}

fn hexc(z: C) -> Value {
    json!([output::hex(z.re), output::hex(z.im)])
}

fn classes(lam: &RationalLamination) -> Value {
    let names = lam.schema();
    Value::Array(
        lam.classes()
            .iter()
            .map(|c| json!({"vertex": names.name(c.vertex), "angles": c.angles, "level": c.level}))
            .collect(),
    )
}

fn lam(cmd: Lam) -> Result<String> {
    match cmd {
        Lam::Validate { file } => {
            let l = load_lamination(&file)?;
            let c = l.classify().map_err(HarnessError::domain)?;
            let kind = serde_json::to_value(c.kind).map_err(HarnessError::domain)?;
            let kind = kind.as_str().unwrap_or_default().replace('_', " ");
            let pcf = if c.post_critically_finite { "PCF" } else { "not PCF" };
            let kind = if kind == "post critically finite" { "mixed".to_string() } else { kind };
            Ok(format!("valid, {pcf}, {kind}\n"))
        }
        Lam::Gaps { file } => {
            let l = load_lamination(&file)?;
            let gaps = l.fatou_gaps(l.depth()).map_err(HarnessError::domain)?;
            let critical = l.critical_gaps().map_err(HarnessError::domain)?;
            pretty(&json!({"fatou_gaps": gaps, "critical_gaps": critical}))
        }
        Lam::Schema { file } => {
            let l = load_lamination(&file)?;
            let ind = l.induced_schema().map_err(HarnessError::domain)?;
            pretty(&json!({"schema": ind.schema.to_json(), "gaps": ind.gaps, "ell": ind.ell}))
        }
        Lam::Tune { base, child, depth } => {
            let ctx = context(&base)?;
            let child = load_lamination(&child)?;
            let tuned = ctx.tune(&child, depth).map_err(HarnessError::domain)?;
            pretty(&json!({"lamination": tuned.to_json(), "classes": classes(&tuned)}))
        }
        Lam::Straighten { base, file, depth } => {
            let ctx = context(&base)?;
            let l = load_lamination(&file)?;
            let s = ctx.straighten(&l, depth).map_err(HarnessError::domain)?;
            pretty(&json!({"lamination": s.to_json(), "classes": classes(&s)}))
        }
        Lam::Portrait { base, file } => {
            let ctx = context(&base)?;
            let l = load_lamination(&file)?;
            let sel = portrait_from_lamination(&l, &ctx).map_err(HarnessError::domain)?;
            pretty(&json!({
                "portrait": sel.portrait.to_json(),
                "placement": sel.placement,
                "pushforward": sel.pushforward.to_json(),
            }))
        }
    }
}

fn dynamics(cmd: Dyn) -> Result<String> {
    let opts = RayOptions::default();
    match cmd {
        Dyn::Ray { poly, angle } => {
            let (f, v) = load_poly(&poly)?;
            let t = external_ray(&f, v, &angle, &opts).map_err(HarnessError::domain)?;
            let landing = t.landing_or_err(f.schema().name(v)).map_err(HarnessError::domain)?;
            pretty(&json!({
                "angle": angle,
                "vertex": f.schema().name(v),
                "landing": hexc(landing),
                "landing_decimal": [landing.re, landing.im],
                "final_potential": output::hex(t.final_potential),
            }))
        }
        Dyn::Paramray { angle, potential } => {
            let r = parameter_ray(&angle, &RayOptions { target_potential: potential, ..opts })
                .map_err(HarnessError::domain)?;
            pretty(&json!({"angle": angle, "c": hexc(r.c), "c_decimal": [r.c.re, r.c.im], "points": r.points.len()}))
        }
        Dyn::Periodic { poly, period } => {
            let (f, v) = load_poly(&poly)?;
            let (pts, failures) =
                periodic_points(&f, v, period, &[], &PeriodicOptions::default()).map_err(HarnessError::domain)?;
            let rows: Vec<Value> = pts
                .iter()
                .map(|p| {
                    json!({
                        "location": hexc(p.location),
                        "minimal_period": p.minimal_period,
                        "multiplier": hexc(p.multiplier),
                        "modulus": output::hex(p.multiplier.norm()),
                        "stability": format!("{:?}", p.stability).to_lowercase(),
                    })
                })
                .collect();
            pretty(&json!({"period": period, "points": rows, "failed_seeds": failures}))
        }
        Dyn::Land { poly, angles } => {
            let (f, v) = load_poly(&poly)?;
            let pts: Vec<SchemaAngle> = angles.into_iter().map(|a| SchemaAngle::new(v, a)).collect();
            let groups = landing_relation(&f, &pts, &opts).map_err(HarnessError::domain)?;
            let groups: Vec<Vec<Angle>> =
                groups.into_iter().map(|g| g.into_iter().map(|p| p.angle).collect()).collect();
            pretty(&json!({"classes": groups}))
        }
        Dyn::Julia { poly, center, radius, size, iters, output: out } => {
            let (f, v) = load_poly(&poly)?;
            let img = render_julia(&f, v, &Viewport::square(center, radius), size, size, iters)
                .map_err(HarnessError::domain)?;
            std::fs::write(&out, img.to_ppm())
                .map_err(|source| HarnessError::Io { path: out.display().to_string(), source })?;
            Ok(format!("wrote {}\n", out.display()))
        }
        Dyn::Qlike { poly, period, center } => {
            let (f, v) = load_poly(&poly)?;
            let q = quadratic_like_restriction(&f, v, period, center, &QlikeOptions::default())
                .map_err(HarnessError::domain)?;
            pretty(&json!({
                "radius": output::hex(q.radius),
                "inner_radius": output::hex(q.inner_radius),
                "modulus_bound": output::hex(q.modulus_bound),
                "degree": q.degree,
                "critical_point": hexc(q.critical_point),
            }))
        }
    }
}

fn apply_range(cfg: &mut ExperimentConfig, r: &MRange) {
    if let Some(m) = r.m_min {
        cfg.budgets.m_min = m;
    }
    if let Some(m) = r.m_max {
        cfg.budgets.m_max = m;
    }
    if r.theta.is_some() {
        cfg.fixtures.theta = r.theta.clone();
    }
}

fn para(cmd: Para, mut cfg: ExperimentConfig) -> Result<String> {
    match cmd {
        Para::Fatou { c, point, side, grid } => {
            let nf =
                NormalForm::parabolic(&[c, C::new(0.0, 0.0), C::new(1.0, 0.0)], point).map_err(HarnessError::domain)?;
            let coord = match side {
                Side::Attracting => fatou_attracting(nf, None, None),
                Side::Repelling => fatou_repelling(nf, None, None),
            }
            .map_err(HarnessError::domain)?;
            let (residual, n) = coord.abel_residual(grid).map_err(HarnessError::domain)?;
            let winding = coord.winding_check(256).map_err(HarnessError::domain)?;
            let (center, r) = coord.domain();
            pretty(&json!({
                "eps": output::hex(coord.eps),
                "petal_center": hexc(center),
                "petal_radius": output::hex(r),
                "abel_residual": output::hex(residual),
                "grid_points": n,
                "winding_ok": winding,
            }))
        }
        Para::Lavaurs { points, phase } => {
            let p = implosion::Parabolic::new(&cfg)?;
            let g = match phase {
                Some(ph) => p.lavaurs.with_phase(ph),
                None => p.lavaurs.clone(),
            };
            let values: Vec<Value> = points
                .iter()
                .map(|&z| g.eval(z).map(|w| json!({"z": hexc(z), "g": hexc(w), "g_decimal": [w.re, w.im]})))
                .collect::<std::result::Result<_, _>>()
                .map_err(HarnessError::domain)?;
            pretty(&json!({"theta": p.theta, "phase": hexc(g.phase), "values": values}))
        }
        Para::Geomlimit { range } => {
            apply_range(&mut cfg, &range);
            cfg.experiment = "geomlimit".into();
            cfg.validate()?;
            let r = implosion::run(&cfg)?;
            pretty(&json!({
                "convergence": r.convergence,
                "min_ratio": output::hex(r.min_ratio),
                "verdict": r.verdict,
                "skipped": r.skipped,
            }))
        }
        Para::Holder { file } => {
            #[derive(serde::Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Input {
                anchor: [f64; 4],
                samples: Vec<[f64; 4]>,
                multipliers: Option<[f64; 2]>,
            }
            let text = std::fs::read_to_string(&file)
                .map_err(|source| HarnessError::Io { path: file.display().to_string(), source })?;
            let input: Input = serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("holder: {e}")))?;
            let pair = |s: [f64; 4]| (C::new(s[0], s[1]), C::new(s[2], s[3]));
            let samples: Vec<(C, C)> = input.samples.iter().map(|&s| pair(s)).collect();
            let h = holder_exponent(&samples, pair(input.anchor), input.multipliers.map(|m| (m[0], m[1])))
                .map_err(HarnessError::domain)?;
            pretty(&json!({
                "exponent": output::hex(h.exponent),
                "exponent_decimal": h.exponent,
                "residual": output::hex(h.residual),
                "span_decades": output::hex(h.span_decades),
                "low_confidence": h.low_confidence,
                "predicted": h.predicted.map(output::hex),
                "relative_gap": h.relative_gap.map(output::hex),
            }))
        }
    }
}

fn exp(cmd: Exp, mut cfg: ExperimentConfig) -> Result<String> {
    let common = match &cmd {
        Exp::Implosion { common, .. } | Exp::Capture { common, .. } | Exp::Mismatch { common, .. } => common,
    };
    if let Some(o) = &common.output {
        cfg.output = Some(o.clone());
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let artifacts = match &cmd {
        Exp::Implosion { range, .. } => {
            apply_range(&mut cfg, range);
            cfg.experiment = "implosion".into();
            cfg.validate()?;
            let r = implosion::run(&cfg)?;
            implosion::artifacts(&cfg, &r)?
        }
        Exp::Capture { range, n, d1, .. } => {
            apply_range(&mut cfg, range);
            if let Some(n) = n {
                cfg.budgets.n_values = n.clone();
            }
            if let Some(d) = d1 {
                cfg.fixtures.d1 = *d;
            }
            cfg.experiment = "capture".into();
            cfg.validate()?;
            let r = capture::run(&cfg)?;
            capture::artifacts(&cfg, &r)?
        }
        Exp::Mismatch { fixture, .. } => {
            if let Some(f) = fixture {
                cfg.fixtures.mismatch = f.clone();
            }
            cfg.experiment = "mismatch".into();
            cfg.validate()?;
            let r = mismatch::run(&cfg)?;
            mismatch::artifacts(&cfg, &r)?
        }
    };
    match &cfg.output {
        Some(dir) => {
            let mut out = String::new();
            for (name, bytes) in &artifacts {
                output::write_file(dir, name, bytes)?;
                out.push_str(&format!("wrote {}\n", dir.join(name).display()));
            }
            Ok(out)
        }
        None => {
            let json = artifacts.iter().find(|(n, _)| n.ends_with(".json")).expect("every experiment writes JSON");
            Ok(String::from_utf8(json.1.clone()).expect("JSON is UTF-8"))
        }
    }
}
