use std::sync::Arc;

use rayon::prelude::*;

use super::report::{Check, Report, Table};
use super::scene::{parse_usize, split_list, Driver, Entry, Scene, SceneError};
use crate::dconn::{
    commutator_oracle, compat_residuals, curvature_general, d_curvature, d_torsion,
    levi_civita_and_deformation, ricci_scalar_einstein, theta_components, DConnection, DMetric,
};
use crate::expr::{Chart, ScalarField};
use crate::lagrange::{almost_complex_apply, Lagrangian};
use crate::nconn::{DVector, NConnection};
use crate::numerics::Sampler;
use crate::solutions::{
    ansatz_chart, build_solution, kahler_example, sweep, Conformal, GFamily, H4Reading, HBranch,
    NBranch, Recipe, SampleWindow, WMode, V,
};
use crate::Error;

/// Resolved run settings: command-line flags over `[options]` over defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tol: f64,
    pub panels: usize,
    pub seed: u64,
    pub jet_order: u8,
    /// Random sample points for Lagrangian and metric scenes.
    pub points: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            panels: 4096,
            seed: 0,
            jet_order: 2,
            points: 20,
        }
    }
}

/// Flag values; `None` defers to the scene.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub panels: Option<usize>,
    pub seed: Option<u64>,
    pub jet_order: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Geometrize,
    Curvature,
    Solve,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Geometrize => "geometrize",
            Command::Curvature => "curvature",
            Command::Solve => "solve",
            Command::Verify => "verify",
        }
    }
}

fn scene_err<T>(line: usize, message: impl Into<String>) -> Result<T, SceneError> {
    Err(SceneError {
        line,
        message: message.into(),
    })
}

fn is_kahler(raw: &super::scene::RawScene) -> bool {
    raw.section("recipe")
        .and_then(|r| r.get("example"))
        .is_some_and(|e| e.value == "kahler")
}

fn default_chart(raw: &super::scene::RawScene) -> Option<Arc<Chart>> {
    if !raw.has("recipe") {
        None
    } else if is_kahler(raw) {
        Some(crate::solutions::kahler_chart())
    } else {
        Some(ansatz_chart())
    }
}

pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let scene = Scene::parse(text, default_chart)?;
    if scene.driver == Driver::Recipe {
        let expect = default_chart(&scene.raw).expect("recipe scene");
        if scene.chart.names() != expect.names() || scene.chart.n() != expect.n() {
            return scene_err(
                scene.raw.header_line("chart"),
                format!(
                    "recipe scenes use the chart ({})",
                    expect.names().join(", ")
                ),
            );
        }
    }
    Ok(scene)
}

fn resolve_options(scene: &Scene, o: &Overrides) -> Result<RunOptions, SceneError> {
    let s = scene.section("options");
    let d = RunOptions::default();
    let mut r = RunOptions {
        tol: s.f64_or("tol", d.tol)?,
        panels: s.get("panels").map_or(Ok(d.panels), parse_usize)?,
        seed: match s.get("seed") {
            Some(e) => e
                .value
                .parse()
                .or_else(|_| scene_err(e.line, "seed must be a u64"))?,
            None => d.seed,
        },
        jet_order: s.get("jet_order").map_or(Ok(2), parse_usize)? as u8,
        points: s.get("points").map_or(Ok(d.points), parse_usize)?,
    };
    s.finish()?;
    if let Some(t) = o.tol {
        r.tol = t;
    }
    if let Some(p) = o.panels {
        r.panels = p;
    }
    if let Some(x) = o.seed {
        r.seed = x;
    }
    if let Some(j) = o.jet_order {
        r.jet_order = j;
    }
    if !(r.tol >= 0.0) {
        return scene_err(0, "tol must be nonnegative");
    }
    if !(1..=2).contains(&r.jet_order) {
        return scene_err(0, "jet order must be 1 or 2");
    }
    if r.panels < 2 || r.points == 0 {
        return scene_err(0, "panels must be at least 2 and points at least 1");
    }
    Ok(r)
}

/// Parses and runs one command on scene text.
pub fn run_scene(
    command: Command,
    text: &str,
    overrides: &Overrides,
) -> Result<Report, SceneError> {
    let scene = parse_scene(text)?;
    let opts = resolve_options(&scene, overrides)?;
    let report = match (command, scene.driver) {
        (Command::Geometrize, Driver::Lagrangian) => geometrize(&scene, &opts)?,
        (Command::Geometrize, _) => return scene_err(0, "geometrize needs a [lagrangian] section"),
        (Command::Curvature, Driver::Recipe) => {
            return scene_err(0, "curvature needs [metric] or [lagrangian]")
        }
        (Command::Curvature, _) => curvature(&scene, &opts)?,
        (Command::Solve, Driver::Recipe) => solve(&scene, &opts)?,
        (Command::Solve, _) => return scene_err(0, "solve needs a [recipe] section"),
        (Command::Verify, Driver::Lagrangian) => {
            let mut r = geometrize(&scene, &opts)?;
            r.absorb(curvature(&scene, &opts)?);
            r
        }
        (Command::Verify, Driver::Metric) => curvature(&scene, &opts)?,
        (Command::Verify, Driver::Recipe) => solve(&scene, &opts)?,
    };
    let mut report = report;
    report.command = command.name().to_string();
    Ok(report.seal())
}

/// Uniform random points inside the `[window]` box, or `[-1, 1]` per
/// coordinate when the section is absent.
fn sample_points(scene: &Scene, opts: &RunOptions) -> Result<Vec<Vec<f64>>, SceneError> {
    let d = scene.chart.dim();
    let mut bounds = vec![(-1.0, 1.0); d];
    if scene.raw.has("window") {
        let s = scene.section("window");
        for (k, b) in bounds.iter_mut().enumerate() {
            let e = s.require(scene.chart.name(k))?;
            let parts = split_list(e);
            if parts.len() < 2 || parts.len() > 3 {
                return scene_err(e.line, "expected `lo, hi` or `lo, hi, count`");
            }
            let lo = scene.number_str(parts[0], e.line)?;
            let hi = scene.number_str(parts[1], e.line)?;
            if !(lo <= hi) {
                return scene_err(e.line, "need lo <= hi");
            }
            *b = (lo, hi);
        }
        s.finish()?;
    }
    let mut rng = Sampler::new(opts.seed);
    Ok((0..opts.points)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.uniform(lo, hi)).collect())
        .collect())
}

fn fail<T>(e: &Entry, err: impl std::fmt::Display) -> Result<T, SceneError> {
    scene_err(e.line, err.to_string())
}

fn scene_lagrangian(scene: &Scene, opts: &RunOptions) -> Result<Lagrangian, SceneError> {
    let s = scene.section("lagrangian");
    let e = s.require("L")?;
    s.finish()?;
    let f = scene.field(e)?.with_panels(opts.panels);
    Lagrangian::new(f).or_else(|err| fail(e, err))
}

/// `name[r,c]` with 1-based indices.
fn index_key(key: &str) -> Option<(&str, usize, usize)> {
    let (name, rest) = key.split_once('[')?;
    let (r, c) = rest.strip_suffix(']')?.split_once(',')?;
    let r: usize = r.trim().parse().ok()?;
    let c: usize = c.trim().parse().ok()?;
    if r >= 1 && c >= 1 {
        Some((name.trim(), r - 1, c - 1))
    } else {
        None
    }
}

fn scene_metric(scene: &Scene, opts: &RunOptions) -> Result<DMetric, SceneError> {
    let chart = &scene.chart;
    let (n, m) = (chart.n(), chart.m());
    let zero = ScalarField::constant(chart, 0.0);
    let mut g = vec![vec![zero.clone(); n]; n];
    let mut h = vec![vec![zero.clone(); m]; m];
    let mut nn = vec![vec![zero.clone(); n]; m];
    let mut seen: Vec<(String, usize, usize)> = vec![];
    let entries = scene.raw.section("metric").expect("metric driver");
    for (key, e) in entries {
        let Some((name, r, c)) = index_key(key) else {
            return scene_err(
                e.line,
                format!("unknown key `{key}` in [metric]; use g[i,j], h[a,b] or N[a,i]"),
            );
        };
        let f = scene.field(e)?.with_panels(opts.panels);
        let (rows, cols) = match name {
            "g" => (n, n),
            "h" => (m, m),
            "N" => (m, n),
            _ => return scene_err(e.line, format!("unknown block `{name}`")),
        };
        if r >= rows || c >= cols {
            return scene_err(
                e.line,
                format!("index out of range for {name} ({rows}x{cols})"),
            );
        }
        let sym = name != "N" && r != c;
        if sym && seen.contains(&(name.to_string(), c, r)) {
            return scene_err(
                e.line,
                format!("{name}[{},{}] given twice through symmetry", r + 1, c + 1),
            );
        }
        seen.push((name.to_string(), r, c));
        match name {
            "g" => {
                g[r][c] = f.clone();
                g[c][r] = f;
            }
            "h" => {
                h[r][c] = f.clone();
                h[c][r] = f;
            }
            _ => nn[r][c] = f,
        }
    }
    let ncon = NConnection::symbolic(chart, nn).or_else(|err| scene_err(0, err.to_string()))?;
    DMetric::new(g, h, ncon)
        .or_else(|err| scene_err(scene.raw.header_line("metric"), err.to_string()))
}

fn random_pairs(rng: &mut Sampler, n: usize, m: usize, count: usize) -> Vec<(DVector, DVector)> {
    (0..count)
        .map(|_| {
            let x = DVector::new(rng.vector(n, -1.0, 1.0), rng.vector(m, -1.0, 1.0));
            let y = DVector::new(rng.vector(n, -1.0, 1.0), rng.vector(m, -1.0, 1.0));
            (x, y)
        })
        .collect()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(
        0.0,
        |m: f64, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) },
    )
}

fn point_label(p: &[f64]) -> String {
    let cells: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
    format!("({})", cells.join(", "))
}

fn coord_columns(chart: &Chart) -> Vec<String> {
    chart.names().to_vec()
}

struct GeoPoint {
    n_fd: f64,
    f2: f64,
    antisym: f64,
    theta_g: f64,
    dg: f64,
    dtheta: f64,
    t_h: f64,
    t_v: f64,
    n_values: Vec<f64>,
    semispray: Vec<f64>,
}

const FD_STEP: f64 = 1e-5;

fn geo_point(
    lag: &Lagrangian,
    dc: &DConnection,
    p: &[f64],
    pairs: &[(DVector, DVector)],
) -> Result<GeoPoint, Error> {
    let n = lag.n();
    let semispray = lag.semispray(p)?;
    let nv = dc.metric().ncon().values(p)?;
    let mut n_fd: f64 = 0.0;
    for j in 0..n {
        let mut up = p.to_vec();
        let mut dn = p.to_vec();
        up[n + j] += FD_STEP;
        dn[n + j] -= FD_STEP;
        let (gu, gd) = (lag.semispray(&up)?, lag.semispray(&dn)?);
        for i in 0..n {
            n_fd = n_fd.max((nv[i][j] - (gu[i] - gd[i]) / (2.0 * FD_STEP)).abs());
        }
    }
    let co = dc.at(p)?;
    let mj = co.metric_or_err()?;
    let theta = theta_components(mj)?;
    let tv = theta.values();
    let contract = |x: &DVector, y: &DVector| -> f64 {
        let (xf, yf) = (x.flat(), y.flat());
        let mut s = 0.0;
        for a in 0..2 * n {
            for b in 0..2 * n {
                s += tv[a][b] * xf[a] * yf[b];
            }
        }
        s
    };
    let (mut f2, mut antisym, mut theta_g): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let ffx = almost_complex_apply(&almost_complex_apply(x));
        f2 = f2.max(max_abs(ffx.flat().iter().zip(x.flat()).map(|(a, b)| a + b)));
        let txy = lag.symplectic_form(x, y, p)?;
        antisym = antisym.max((txy + lag.symplectic_form(y, x, p)?).abs());
        theta_g = theta_g.max((contract(x, y) - txy).abs());
    }
    let r = compat_residuals(&co, Some(&theta))?;
    let t = d_torsion(&co)?;
    Ok(GeoPoint {
        n_fd,
        f2,
        antisym,
        theta_g,
        dg: r.dg,
        dtheta: r.dtheta,
        t_h: t[0].max_abs(),
        t_v: t[4].max_abs(),
        n_values: nv.into_iter().flatten().collect(),
        semispray,
    })
}

fn geometrize(scene: &Scene, opts: &RunOptions) -> Result<Report, SceneError> {
    let lag = scene_lagrangian(scene, opts)?;
    let dm = lag
        .sasaki_metric()
        .or_else(|e| scene_err(0, e.to_string()))?;
    let dc = DConnection::canonical(&dm);
    let points = sample_points(scene, opts)?;
    let n = lag.n();
    let mut rng = Sampler::new(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let pairs: Vec<_> = points
        .iter()
        .map(|_| random_pairs(&mut rng, n, n, 3))
        .collect();
    let results: Vec<Result<GeoPoint, Error>> = points
        .par_iter()
        .zip(&pairs)
        .map(|(p, pr)| geo_point(&lag, &dc, p, pr))
        .collect();

    let mut report = Report::new("geometrize", "lagrangian", opts.seed, opts.tol);
    report.field("L", lag.field());
    for i in 0..n {
        for j in i..n {
            report.field(
                format!("g[{},{}]", i + 1, j + 1),
                &lag.metric_fields()[i][j],
            );
        }
    }
    for (j, b) in lag.semispray_numerators().iter().enumerate() {
        report.field(format!("B[{}]", j + 1), b);
    }
    report
        .notes
        .push("G^i = g^ij B_j / 4 and N^i_j = dG^i/dy^j; both Sasaki blocks equal g".into());
    let mut checks = [
        Check::new(
            "N from semispray",
            "N^i_j = dG^i/dy^j against central differences of G",
        ),
        Check::new("F^2 = -I", "almost complex structure F"),
        Check::new("theta antisymmetry", "theta(X,Y) + theta(Y,X) = 0"),
        Check::new(
            "theta = g(F.,.)",
            "adapted components of theta against g(FX,Y)",
        ),
        Check::new("Dg = 0", "canonical d-connection metricity"),
        Check::new("D theta = 0", "almost symplectic compatibility"),
        Check::new("T^i_jk = 0", "canonical d-connection h-torsion"),
        Check::new("T^a_bc = 0", "canonical d-connection v-torsion"),
    ];
    let mut cols = coord_columns(&scene.chart);
    let mut ncols = cols.clone();
    for i in 0..n {
        for j in 0..n {
            ncols.push(format!("N^{}_{}", i + 1, j + 1));
        }
    }
    for i in 0..n {
        cols.push(format!("G^{}", i + 1));
    }
    let mut ntab = Table {
        name: "N".into(),
        columns: ncols,
        rows: vec![],
    };
    let mut gtab = Table {
        name: "G".into(),
        columns: cols,
        rows: vec![],
    };
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(g) => {
                let vals = [
                    g.n_fd, g.f2, g.antisym, g.theta_g, g.dg, g.dtheta, g.t_h, g.t_v,
                ];
                for (c, v) in checks.iter_mut().zip(vals) {
                    c.add(v, p);
                }
                ntab.rows
                    .push(p.iter().copied().chain(g.n_values).collect());
                gtab.rows
                    .push(p.iter().copied().chain(g.semispray).collect());
            }
            Err(e) => report.error(format!("point {}: {e}", point_label(p))),
        }
    }
    for c in checks {
        report.push(c);
    }
    report.tables.push(ntab);
    report.tables.push(gtab);
    Ok(report)
}

struct CurvPoint {
    dg: f64,
    dtheta: Option<f64>,
    t_h: f64,
    t_v: f64,
    levi: f64,
    second: Option<SecondOrder>,
}

struct SecondOrder {
    blocks_vs_general: f64,
    oracle: f64,
    trace: f64,
    table: Vec<f64>,
}

/// Polynomial d-vector field with seeded coefficients for the commutator oracle.
fn oracle_field(chart: &Arc<Chart>, seed: u64) -> Vec<ScalarField> {
    let d = chart.dim();
    let mut rng = Sampler::new(seed ^ 0x2545_f491_4f6c_dd1d);
    let coords: Vec<ScalarField> = (0..d)
        .map(|k| ScalarField::coordinate(chart, chart.name(k)).expect("chart coordinate"))
        .collect();
    (0..d)
        .map(|a| {
            let mut f = ScalarField::constant(chart, 1.0);
            for c in &coords {
                f = f.add(&c.scale(rng.uniform(-1.0, 1.0)));
            }
            f.add(
                &coords[a]
                    .mul(&coords[(a + 1) % d])
                    .scale(rng.uniform(-0.5, 0.5)),
            )
        })
        .collect()
}

fn curv_point(
    dc: &DConnection,
    p: &[f64],
    with_theta: bool,
    jet_order: u8,
    z: &[ScalarField],
) -> Result<CurvPoint, Error> {
    let co = dc.at(p)?;
    let mj = co.metric_or_err()?;
    let theta = if with_theta {
        Some(theta_components(mj)?)
    } else {
        None
    };
    let r = compat_residuals(&co, theta.as_ref())?;
    let t = d_torsion(&co)?;
    let levi = levi_civita_and_deformation(dc, p)?.residual;
    let second = if jet_order >= 2 {
        let (curv, _) = d_curvature(&co)?;
        let general = curvature_general(&co, &mj.frame);
        let data = ricci_scalar_einstein(&co, &curv)?;
        let oracle = commutator_oracle(dc, p, z)?.relative_deviation();
        let torsion_max = t.iter().map(|x| x.max_abs()).fold(0.0, f64::max);
        Some(SecondOrder {
            blocks_vs_general: curv.max_abs_diff(&general),
            oracle,
            trace: data.trace_residual / (1.0 + data.scalar.abs()),
            table: vec![
                data.scalar,
                max_abs(data.ricci.iter().flatten().copied()),
                max_abs(data.einstein.iter().flatten().copied()),
                curv.max_abs(),
                torsion_max,
            ],
        })
    } else {
        None
    };
    Ok(CurvPoint {
        dg: r.dg,
        dtheta: theta.map(|_| r.dtheta),
        t_h: t[0].max_abs(),
        t_v: t[4].max_abs(),
        levi,
        second,
    })
}

fn curvature(scene: &Scene, opts: &RunOptions) -> Result<Report, SceneError> {
    let (dm, with_theta) = match scene.driver {
        Driver::Lagrangian => (
            scene_lagrangian(scene, opts)?
                .sasaki_metric()
                .or_else(|e| scene_err(0, e.to_string()))?,
            true,
        ),
        _ => (scene_metric(scene, opts)?, false),
    };
    let dc = DConnection::canonical(&dm);
    let points = sample_points(scene, opts)?;
    let z = oracle_field(&scene.chart, opts.seed);
    let results: Vec<Result<CurvPoint, Error>> = points
        .par_iter()
        .map(|p| curv_point(&dc, p, with_theta, opts.jet_order, &z))
        .collect();

    let mut report = Report::new("curvature", &scene.driver.to_string(), opts.seed, opts.tol);
    let mut dg = Check::new("Dg = 0", "canonical d-connection metricity");
    let mut dtheta = Check::new("D theta = 0", "almost symplectic compatibility");
    let mut th = Check::new("T^i_jk = 0", "canonical d-connection h-torsion");
    let mut tv = Check::new("T^a_bc = 0", "canonical d-connection v-torsion");
    let mut levi = Check::new(
        "Levi-Civita distortion",
        "canonical d-connection = adapted Levi-Civita + distortion",
    );
    let mut blocks = Check::new(
        "curvature blocks",
        "block formulas against the general frame formula",
    );
    let mut oracle = Check::new(
        "commutator oracle",
        "R(X,Y)Z against nested covariant derivatives (relative)",
    );
    let mut trace = Check::new("Einstein trace", "g^ab G_ab + R(n+m-2)/2 = 0 (relative)");
    let mut cols = coord_columns(&scene.chart);
    cols.extend(
        [
            "ricci_scalar",
            "max_ricci",
            "max_einstein",
            "max_curvature",
            "max_torsion",
        ]
        .map(String::from),
    );
    let mut table = Table {
        name: "curvature".into(),
        columns: cols,
        rows: vec![],
    };
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(c) => {
                dg.add(c.dg, p);
                if let Some(x) = c.dtheta {
                    dtheta.add(x, p);
                }
                th.add(c.t_h, p);
                tv.add(c.t_v, p);
                levi.add(c.levi, p);
                if let Some(s) = c.second {
                    blocks.add(s.blocks_vs_general, p);
                    oracle.add(s.oracle, p);
                    trace.add(s.trace, p);
                    table.rows.push(p.iter().copied().chain(s.table).collect());
                }
            }
            Err(e) => report.error(format!("point {}: {e}", point_label(p))),
        }
    }
    report.push(dg);
    if with_theta {
        report.push(dtheta);
    }
    report.push(th);
    report.push(tv);
    report.push(levi);
    if opts.jet_order >= 2 {
        report.push(blocks);
        report.push(oracle);
        report.push(trace);
        report.tables.push(table);
    } else {
        report
            .notes
            .push("jet order 1: curvature checks skipped".into());
    }
    Ok(report)
}

fn parse_window(scene: &Scene, default: SampleWindow) -> Result<SampleWindow, SceneError> {
    if !scene.raw.has("window") {
        return Ok(default);
    }
    let s = scene.section("window");
    let d = scene.chart.dim();
    let (mut lo, mut hi, mut counts) = (vec![0.0; d], vec![0.0; d], vec![1; d]);
    for k in 0..d {
        let e = s.require(scene.chart.name(k))?;
        let parts = split_list(e);
        match parts.as_slice() {
            [x] => {
                lo[k] = scene.number_str(x, e.line)?;
                hi[k] = lo[k];
            }
            [a, b, c] => {
                lo[k] = scene.number_str(a, e.line)?;
                hi[k] = scene.number_str(b, e.line)?;
                counts[k] = c
                    .parse()
                    .or_else(|_| scene_err(e.line, "count must be an integer"))?;
            }
            _ => return scene_err(e.line, "expected `value` or `lo, hi, count`"),
        }
    }
    let mut w = SampleWindow::new(lo, hi, counts)
        .or_else(|e| scene_err(scene.raw.header_line("window"), e.to_string()))?;
    w.v_margin = s.f64_or("v_margin", w.v_margin)?;
    w.block_margin = s.f64_or("block_margin", w.block_margin)?;
    s.finish()?;
    Ok(w)
}

fn parse_recipe(scene: &Scene, opts: &RunOptions) -> Result<(Recipe, Option<f64>), SceneError> {
    let s = scene.section("recipe");
    let chart = &scene.chart;
    let f = |key: &str| -> Result<ScalarField, SceneError> {
        Ok(scene.field(s.require(key)?)?.with_panels(opts.panels))
    };
    let num = |key: &str, default: f64| -> Result<f64, SceneError> {
        s.get(key).map_or(Ok(default), |e| scene.number(e))
    };
    let mut r = Recipe::family_a(chart);
    r.panels = opts.panels;
    r.tol = opts.tol;
    r.g = match s
        .get("g_family")
        .map(|e| e.value.as_str())
        .unwrap_or("exponential")
    {
        "exponential" => GFamily::Exponential {
            g0: num("g0", 1.0)?,
            a2: num("a2", 1.0)?,
            a3: num("a3", 1.0)?,
        },
        "integrated" => GFamily::Integrated {
            g2: f("g2")?,
            c1: num("c1", 1.0)?,
            c2: num("c2", 1.0)?,
            lower: num("lower", 0.0)?,
        },
        "separated" => GFamily::Separated {
            g2: f("g2")?,
            g3: f("g3")?,
        },
        other => {
            return scene_err(
                s.require("g_family")?.line,
                format!("unknown g_family `{other}`"),
            )
        }
    };
    r.g1sign = num("g1sign", 1.0)?;
    r.h = match s
        .get("h_branch")
        .map(|e| e.value.as_str())
        .unwrap_or("from_h5")
    {
        "from_h5" => HBranch::FromH5 {
            h5: f("h5")?,
            h0: s
                .get("h0")
                .map_or(Ok(ScalarField::constant(chart, 1.0)), |e| scene.field(e))?,
        },
        "from_h4" => HBranch::FromH4 {
            h4: f("h4")?,
            s1: f("s1")?,
            s2: f("s2")?,
        },
        "direct" => HBranch::Direct {
            h4: f("h4")?,
            h5: f("h5")?,
        },
        other => {
            return scene_err(
                s.require("h_branch")?.line,
                format!("unknown h_branch `{other}`"),
            )
        }
    };
    r.w = match s.get("w_mode").map(|e| e.value.as_str()).unwrap_or("free") {
        "free" => {
            let w = match s.get("w") {
                Some(e) => scene.fields(e, 3)?,
                None => vec![ScalarField::constant(chart, 0.0); 3],
            };
            WMode::Free([w[0].clone(), w[1].clone(), w[2].clone()])
        }
        "algebraic" => WMode::Algebraic,
        other => {
            return scene_err(
                s.require("w_mode")?.line,
                format!("unknown w_mode `{other}`"),
            )
        }
    };
    for k in 0..3 {
        let key = format!("n{}", k + 1);
        r.n_seeds[k] = match s.get(&key) {
            Some(e) => {
                let v = scene.fields(e, 2)?;
                (v[0].clone(), v[1].clone())
            }
            None => (
                ScalarField::constant(chart, 0.0),
                ScalarField::constant(chart, 0.0),
            ),
        };
    }
    r.n_branch = match s
        .get("n_branch")
        .map(|e| e.value.as_str())
        .unwrap_or("auto")
    {
        "auto" => NBranch::Auto,
        "h5_varying" => NBranch::H5Varying,
        "h5_constant" => NBranch::H5Constant,
        "h4_constant" => NBranch::H4Constant,
        "ricci" => NBranch::RicciConsistent,
        "prescribed" => NBranch::Prescribed(f("n_integrand")?),
        other => {
            return scene_err(
                s.require("n_branch")?.line,
                format!("unknown n_branch `{other}`"),
            )
        }
    };
    r.conformal = match s.get("varpi") {
        Some(e) => {
            let varpi = scene.field(e)?.with_panels(opts.panels);
            let (q1, q2) = match s.get("q") {
                Some(q) => {
                    let parts = split_list(q);
                    let ints: Vec<i32> = parts.iter().filter_map(|x| x.parse().ok()).collect();
                    if ints.len() != 2 || parts.len() != 2 {
                        return scene_err(q.line, "q needs two integers");
                    }
                    (ints[0], ints[1])
                }
                None => (1, 1),
            };
            let vacuum = match s
                .get("conformal")
                .map(|e| e.value.as_str())
                .unwrap_or("vacuum")
            {
                "vacuum" => true,
                "general" => false,
                other => return scene_err(e.line, format!("unknown conformal branch `{other}`")),
            };
            Some(Conformal {
                varpi,
                q1,
                q2,
                vacuum,
            })
        }
        None => None,
    };
    let perturb = s.get("perturb").map(|e| scene.number(e)).transpose()?;
    s.finish()?;
    Ok((r, perturb))
}

fn solve(scene: &Scene, opts: &RunOptions) -> Result<Report, SceneError> {
    if is_kahler(&scene.raw) {
        return solve_kahler(scene, opts);
    }
    let (recipe, perturb) = parse_recipe(scene, opts)?;
    let window = parse_window(scene, SampleWindow::standard())?;
    let mut report = Report::new("solve", "recipe", opts.seed, opts.tol);
    let built = build_solution(&recipe, &window);
    let a = match built {
        Ok(a) => a,
        Err(Error::Stage { stage, message }) => {
            let mut c = Check::new(&format!("stage {stage}"), "generator stage");
            c.add(f64::INFINITY, &[]);
            report.push(c);
            report.error(format!("stage `{stage}` failed: {message}"));
            return Ok(report);
        }
        Err(e) => {
            report.error(e.to_string());
            return Ok(report);
        }
    };
    let a = match perturb {
        Some(eps) => {
            report
                .notes
                .push(format!("sanity mode: h5 multiplied by (1 + {eps}*v)"));
            a.perturbed(eps)
        }
        None => a,
    };
    let names = ["1", "2", "3"];
    report.field("varpi", &a.varpi);
    report.field("g1", format!("{}", a.g1sign));
    report.field("g2", &a.g2);
    report.field("g3", &a.g3);
    report.field("h4", &a.h4);
    report.field("h5", &a.h5);
    for (k, s) in names.iter().enumerate() {
        report.field(format!("w{s}"), &a.w[k]);
    }
    for (k, s) in names.iter().enumerate() {
        report.field(format!("n{s}"), &a.n[k]);
    }
    for (k, s) in names.iter().enumerate() {
        report.field(format!("zeta{s}"), &a.zeta[k]);
    }
    let sw = match sweep(&a, &window, opts.jet_order >= 2) {
        Ok(s) => s,
        Err(e) => {
            report.error(e.to_string());
            return Ok(report);
        }
    };
    report.notes.push(format!(
        "{} of {} window points excluded by margins",
        sw.excluded,
        window.len()
    ));
    let ricci_gamma = matches!(recipe.n_branch, NBranch::RicciConsistent);
    let mut r1 = Check::new("g-equation", "g2, g3 equation");
    let mut r2 = Check::new("h-equation", "h5** - h5* (ln sqrt|h4 h5|)* = 0");
    let mut r3 = Check::new("w-equation", "w_i beta + alpha_i = 0");
    let mut r4 = if ricci_gamma {
        Check::new(
            "n-equation",
            "n_i** + gamma n_i* = 0, gamma = 3h5*/2h5 - h4*/2h4",
        )
    } else {
        Check::new(
            "n-equation",
            "n_i** + gamma n_i* = 0, gamma = 3h5*/2h5 - h4*/h4",
        )
    };
    let mut cv = Check::new("frame condition on varpi", "delta_i varpi = 0");
    let mut ch = Check::new("frame condition on h4", "delta_i h4 = 0");
    let mut ricci = Check::new("Ricci d-tensor", "all Ricci components vanish");
    for sp in &sw.points {
        let p = &sp.coords;
        let res = &sp.residuals;
        r1.add(res.r1, p);
        r2.add(res.r2, p);
        r3.add(max_abs(res.r3), p);
        if ricci_gamma {
            let x = (|| -> Result<f64, Error> {
                let abc = crate::solutions::abc_coefficients(&a.h4, &a.h5, p)?;
                let mut worst: f64 = 0.0;
                for n in &a.n {
                    let j = crate::numerics::jet_eval(n, p, 2)?;
                    worst = worst.max((j.hess(V, V) + abc.gamma_ricci * j.d(V)).abs());
                }
                Ok(worst)
            })();
            match x {
                Ok(x) => r4.add(x, p),
                Err(e) => report.error(format!("point {}: {e}", point_label(p))),
            }
        } else {
            r4.add(max_abs(res.r4), p);
        }
        cv.add(max_abs(res.c_varpi), p);
        ch.add(max_abs(res.c_h4), p);
        if let Some(x) = sp.ricci {
            ricci.add(x, p);
        }
    }
    for c in [r1, r2, r3, r4, cv] {
        report.push(c);
    }
    if !a.varpi.is_constant() {
        report.push(ch);
    }
    if opts.jet_order >= 2 {
        report.push(ricci);
    } else {
        report.notes.push("jet order 1: Ricci check skipped".into());
    }
    Ok(report)
}

fn solve_kahler(scene: &Scene, opts: &RunOptions) -> Result<Report, SceneError> {
    let s = scene.section("recipe");
    s.require("example")?;
    let a = match s.get("a") {
        Some(e) => scene.number(e)?,
        None => 1.0,
    };
    let g = match s.get("g") {
        Some(e) => scene.field(e)?,
        None => scene.field_str("x3^2", 0)?,
    };
    let reading = match s.get("reading").map(|e| e.value.as_str()).unwrap_or("gv2") {
        "gv2" => H4Reading::GV2,
        "gv" => H4Reading::GV,
        other => {
            return scene_err(
                s.require("reading")?.line,
                format!("unknown reading `{other}`"),
            )
        }
    };
    let q = match s.get("q") {
        Some(e) => {
            let ints: Vec<i32> = split_list(e)
                .iter()
                .filter_map(|x| x.parse().ok())
                .collect();
            if ints.len() != 2 {
                return scene_err(e.line, "q needs two integers");
            }
            (ints[0], ints[1])
        }
        None => (1, 1),
    };
    let pairs = s.get("pairs").map_or(Ok(4), parse_usize)?;
    s.finish()?;
    let default = SampleWindow::new(
        vec![-1.0, 0.5, 0.5, 0.0],
        vec![1.0, 2.0, 2.0, 0.0],
        vec![3, 4, 4, 1],
    )
    .expect("static window");
    let window = parse_window(scene, default)?;
    let mut report = Report::new("solve", "recipe", opts.seed, opts.tol);
    let ex = match kahler_example(a, &g, reading, q, None) {
        Ok(x) => x,
        Err(e) => return scene_err(scene.raw.header_line("recipe"), e.to_string()),
    };
    report.field("g", &ex.g);
    report.field("h4", &ex.h4);
    report.field("varpi", &ex.varpi);
    let points = window.points();
    let mut checks = [
        Check::new("g ODE", "2 g g'' - (g')^2 = 0"),
        Check::new("F^2 = -I", "almost complex structure of the example"),
        Check::new("theta antisymmetry", "theta(X,Y) + theta(Y,X) = 0"),
        Check::new("theta(X,X) = 0", "theta(X,X) = 0"),
        Check::new("theta = -g(F.,.)", "displayed theta against g(FX,Y)"),
    ];
    for (k, p) in points.iter().enumerate() {
        match ex.checks(
            std::slice::from_ref(p),
            pairs,
            opts.seed.wrapping_add(k as u64),
        ) {
            Ok(c) => {
                let vals = [
                    c.ode,
                    c.f_squared,
                    c.theta_antisymmetry,
                    c.theta_diagonal,
                    c.theta_vs_gf_flipped,
                ];
                for (ch, v) in checks.iter_mut().zip(vals) {
                    ch.add(v, p);
                }
            }
            Err(e) => report.error(format!("point {}: {e}", point_label(p))),
        }
    }
    for c in checks {
        report.push(c);
    }
    Ok(report)
}
