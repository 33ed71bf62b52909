use std::path::Path;

use anyhow::{bail, Result};
use delzant_core::boundary::{self, BoundaryPoint};
use delzant_core::dually_flat::{self, GeodesicKind, GeodesicSpec};
use delzant_core::exact;
use delzant_core::face::{face_chart, FaceChart};
use delzant_core::linalg;
use delzant_core::mixture::{self, MixtureFamily};
use delzant_core::polytope::{validate_delzant, Polytope};
use delzant_core::potential::SymplecticPotential;
use delzant_core::report::CheckReport;
use delzant_core::sampling::{self, SampleRng};
use delzant_core::Error;
use rand::Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::input::{self, InputError, Problem};
use crate::output::{Cell, Output};
use crate::tolerances::Tolerances;

/// Facet numbers as shown to users.
fn one_based(face: &[usize]) -> Vec<usize> {
    face.iter().map(|r| r + 1).collect()
}

/// Core reports carry 0-based facet indices; rewrite them for display.
fn renumber(mut r: CheckReport) -> CheckReport {
    if let Some(face) = r.inputs.get_mut("face") {
        if let Some(list) = face.as_array_mut() {
            for v in list.iter_mut() {
                if let Some(i) = v.as_u64() {
                    *v = json!(i + 1);
                }
            }
        }
    }
    r
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(crate::output::format_number(x))
    }
}

fn coord_headers(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn cells(v: &[f64]) -> impl Iterator<Item = Cell> + '_ {
    v.iter().map(|&x| Cell::Num(x))
}

fn report_output(reports: Vec<CheckReport>) -> Output {
    let pass = reports.iter().all(|r| r.pass);
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                Cell::from(r.check.as_str()),
                Cell::Num(r.residual),
                Cell::Num(r.tolerance),
                Cell::from(r.pass),
            ]
        })
        .collect();
    Output {
        pass,
        json: json!({"checks": reports, "pass": pass}),
        headers: ["check", "residual", "tolerance", "pass"].map(String::from).to_vec(),
        rows,
    }
}

pub fn validate(path: &Path) -> Result<Output> {
    let problem = input::load_problem(path)?;
    let p = &problem.polytope;
    let report = validate_delzant(p);
    let zero_sum = mixture::zero_sum_check(p);
    let failures: Vec<Value> = report
        .failures
        .iter()
        .map(|f| {
            json!({
                "vertex": f.coords,
                "facets": one_based(&f.active),
                "determinant": f.determinant,
                "reason": f.reason,
            })
        })
        .collect();
    let delzant = report.is_delzant();
    let json = json!({
        "dim": p.dim(),
        "facets": p.num_facets(),
        "bounded": p.is_bounded(),
        "vertices": p.vertices().iter().map(|v| v.coords().to_vec()).collect::<Vec<_>>(),
        "simple": report.simple,
        "rational": report.rational,
        "smooth": report.smooth,
        "partial": report.partial,
        "delzant": delzant,
        "zero_sum": zero_sum,
        "failures": failures,
    });
    let mut rows = vec![
        vec![Cell::from("dim"), Cell::from(p.dim().to_string())],
        vec![Cell::from("facets"), Cell::from(p.num_facets().to_string())],
        vec![Cell::from("bounded"), Cell::from(p.is_bounded())],
        vec![Cell::from("simple"), Cell::from(report.simple)],
        vec![Cell::from("rational"), Cell::from(report.rational)],
        vec![Cell::from("smooth"), Cell::from(report.smooth)],
        vec![Cell::from("delzant"), Cell::from(delzant)],
        vec![Cell::from("zero_sum"), Cell::from(zero_sum)],
    ];
    for f in &report.failures {
        rows.push(vec![
            Cell::from("failure"),
            Cell::from(format!(
                "vertex {:?} facets {:?} det {}",
                f.coords,
                one_based(&f.active),
                f.determinant.as_deref().unwrap_or("-")
            )),
        ]);
    }
    Ok(Output { pass: delzant, json, headers: vec!["property".into(), "value".into()], rows })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PairsRepr {
    Wrapped { pairs: Vec<[Vec<f64>; 2]> },
    Bare(Vec<[Vec<f64>; 2]>),
}

pub fn divergence(path: &Path, points: &Path) -> Result<Output> {
    let Problem { polytope: p, potential: phi } = input::load_problem(path)?;
    let pairs = match input::parse::<PairsRepr>(input::read_json(points)?, "point pairs")? {
        PairsRepr::Wrapped { pairs } | PairsRepr::Bare(pairs) => pairs,
    };
    let n = p.dim();
    let family = if mixture::zero_sum_check(&p) && phi == SymplecticPotential::guillemin(&p, phi.scale()) {
        mixture::to_mixture(&p).ok()
    } else {
        None
    };
    let mut headers = coord_headers("x", n);
    headers.extend(coord_headers("xp", n));
    headers.extend(["bregman".to_string(), "expanded".to_string()]);
    if family.is_some() {
        headers.push("kl".into());
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for [a, b] in &pairs {
        let d = dually_flat::bregman(&phi, a, b)?;
        let e = dually_flat::bregman_expanded(&phi, &p, a, b).unwrap_or(f64::NAN);
        let mut row: Vec<Cell> = cells(a).chain(cells(b)).collect();
        row.extend([Cell::Num(d), Cell::Num(e)]);
        let mut rec = json!({"x": a, "x_prime": b, "bregman": d, "expanded": num(e)});
        if let Some(m) = &family {
            let k = mixture::kl(m, a, b)?;
            row.push(Cell::Num(k));
            rec["kl"] = num(k);
        }
        rows.push(row);
        records.push(rec);
    }
    let mut json = json!({"scale": phi.scale(), "rows": records});
    if family.is_some() {
        json["kl_factor"] = json!(phi.scale() * exact::to_f64(&mixture::offset_sum(&p)));
    }
    Ok(Output { pass: true, json, headers, rows })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeodesicRequest {
    kind: GeodesicKind,
    start: Vec<f64>,
    direction: Vec<f64>,
    t_grid: Vec<f64>,
}

pub fn geodesic(path: &Path, spec_path: &Path) -> Result<Output> {
    let Problem { polytope: p, potential: phi } = input::load_problem(path)?;
    let req: GeodesicRequest = input::parse(input::read_json(spec_path)?, "geodesic spec")?;
    let spec = GeodesicSpec { kind: req.kind, start: req.start, direction: req.direction };
    let n = p.dim();
    let mut headers = vec!["t".to_string()];
    headers.extend(coord_headers("x", n));
    headers.extend(coord_headers("y", n));
    let mut rows = Vec::new();
    let mut trace = Vec::new();
    let mut exit_time = None;
    for &t in &req.t_grid {
        let x = match dually_flat::geodesic_point(&phi, &p, &spec, t) {
            Ok(x) => x,
            Err(Error::GeodesicExit { exit_time: e }) => {
                exit_time = Some(e);
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let y = phi.grad(&x)?;
        rows.push(std::iter::once(Cell::Num(t)).chain(cells(&x)).chain(cells(&y)).collect());
        trace.push(json!({"t": t, "x": x, "y": y}));
    }
    let mut json = json!({"kind": spec.kind, "trace": trace});
    if let Some(e) = exit_time {
        json["note"] = json!(format!("flat geodesic leaves the polytope at t = {}", crate::output::format_number(e)));
        json["exit_time"] = json!(e);
    }
    if spec.kind == GeodesicKind::Dual && p.is_bounded() {
        let lim = dually_flat::dual_geodesic_limit(&phi, &p, &spec)?;
        let mut row: Vec<Cell> = vec![Cell::Num(f64::INFINITY)];
        row.extend(cells(&lim.point));
        row.extend((0..n).map(|_| Cell::from("")));
        rows.push(row);
        json["limit"] = json!({
            "point": lim.point,
            "face": one_based(&lim.face),
            "error_estimate": lim.error_estimate,
        });
    }
    Ok(Output { pass: true, json, headers, rows })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryRequest {
    #[serde(default)]
    pairs: Vec<[Vec<f64>; 2]>,
    #[serde(default)]
    interior: Vec<Vec<f64>>,
}

pub fn boundary_cmd(path: &Path, face: &str, points: &Path, tol: &Tolerances) -> Result<Output> {
    let Problem { polytope: p, potential: phi } = input::load_problem(path)?;
    let active = input::parse_face(face, p.num_facets())?;
    let chart = face_chart(&p, &active)?;
    let req: BoundaryRequest = input::parse(input::read_json(points)?, "boundary points")?;
    let n = p.dim();
    let mut headers = vec!["kind".to_string()];
    headers.extend(coord_headers("a", n));
    headers.extend(coord_headers("b", n));
    headers.extend(["value", "continuity_gap", "pass"].map(String::from));
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut all_pass = true;
    for [a, b] in &req.pairs {
        let eta = BoundaryPoint::from_ambient(&p, &chart, a)?;
        let etap = BoundaryPoint::from_ambient(&p, &chart, b)?;
        let d = boundary::boundary_divergence(&phi, &chart, &eta, &etap)?;
        let mut rep = boundary::continuity_check(&phi, &p, &chart, &eta, &etap, 8)?;
        rep.tolerance = tol.get("continuity");
        let settled = rep.pass || rep.residual > boundary::CONTINUITY_TOL;
        rep.pass = settled && rep.residual <= rep.tolerance;
        all_pass &= rep.pass;
        let mut row: Vec<Cell> = vec![Cell::from("face_divergence")];
        row.extend(cells(a).chain(cells(b)));
        row.extend([Cell::Num(d), Cell::Num(rep.residual), Cell::from(rep.pass)]);
        rows.push(row);
        records.push(json!({"eta": a, "eta_prime": b, "face_divergence": d, "continuity": renumber(rep)}));
    }
    for xi in &req.interior {
        let foot = boundary::project_to_face(&phi, &p, &chart, xi)?;
        let d = boundary::limit_divergence(&phi, &foot, xi)?;
        let mut row: Vec<Cell> = vec![Cell::from("foot")];
        row.extend(cells(foot.ambient()).chain(cells(xi)));
        row.extend([Cell::Num(d), Cell::from(""), Cell::from("")]);
        rows.push(row);
        records.push(json!({"xi": xi, "foot": foot.ambient(), "foot_chart": foot.chart_coords(), "limit_divergence": d}));
    }
    let json = json!({"face": one_based(&active), "dim_face": chart.dim_face(), "rows": records, "pass": all_pass});
    Ok(Output { pass: all_pass, json, headers, rows })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleRequest {
    face: Vec<usize>,
    eta: Vec<f64>,
    xi: Vec<f64>,
    #[serde(default)]
    eta_prime: Option<Vec<f64>>,
    #[serde(default)]
    xi_prime: Option<Vec<f64>>,
}

pub fn pythagoras(path: &Path, triple: &Path, tol: &Tolerances) -> Result<Output> {
    let Problem { polytope: p, potential: phi } = input::load_problem(path)?;
    let req: TripleRequest = input::parse(input::read_json(triple)?, "triple")?;
    let face: Vec<String> = req.face.iter().map(|r| r.to_string()).collect();
    let active = input::parse_face(&face.join(","), p.num_facets())?;
    let chart = face_chart(&p, &active)?;
    let eta = BoundaryPoint::from_ambient(&p, &chart, &req.eta)?;
    let report = match (&req.eta_prime, &req.xi_prime) {
        (Some(_), Some(_)) => bail!(InputError("give eta_prime or xi_prime, not both".into())),
        (None, Some(xp)) => boundary::pythagoras_55(&phi, &eta, &req.xi, xp, tol.get("pythagoras_interior"))?,
        (Some(ep), None) => {
            let foot = BoundaryPoint::from_ambient(&p, &chart, ep)?;
            boundary::pythagoras_54(&phi, &chart, &eta, &foot, &req.xi, tol.get("pythagoras"))?
        }
        (None, None) => {
            let foot = boundary::project_to_face(&phi, &p, &chart, &req.xi)?;
            boundary::pythagoras_54(&phi, &chart, &eta, &foot, &req.xi, tol.get("pythagoras"))?
                .detail("eta_prime", foot.ambient())
        }
    };
    Ok(report_output(vec![renumber(report)]))
}

pub fn torify(path: &Path) -> Result<Output> {
    let value = input::read_json(path)?;
    if value.get("alphas").is_some() {
        let family: MixtureFamily = input::parse(value, "mixture family")?;
        let t = match mixture::from_mixture(&family) {
            Ok(t) => t,
            Err(e @ (Error::NoCompactTorification(_) | Error::Degenerate(_))) => {
                return Ok(Output {
                    pass: false,
                    json: json!({"compact_torification": false, "reason": e.to_string()}),
                    headers: vec!["property".into(), "value".into()],
                    rows: vec![
                        vec![Cell::from("compact_torification"), Cell::from(false)],
                        vec![Cell::from("reason"), Cell::from(e.to_string())],
                    ],
                })
            }
            Err(e) => return Err(e.into()),
        };
        let failures: Vec<Value> = t
            .delzant
            .failures
            .iter()
            .map(|f| json!({"vertex": f.coords, "facets": one_based(&f.active), "determinant": f.determinant}))
            .collect();
        let json = json!({
            "polytope": t.polytope,
            "delzant": t.delzant.is_delzant(),
            "failures": failures,
            "compact_torification": t.compact_torification,
        });
        let rows = vec![
            vec![Cell::from("facets"), Cell::from(t.polytope.num_facets().to_string())],
            vec![Cell::from("delzant"), Cell::from(t.delzant.is_delzant())],
            vec![Cell::from("compact_torification"), Cell::from(t.compact_torification)],
        ];
        return Ok(Output {
            pass: t.compact_torification,
            json,
            headers: vec!["property".into(), "value".into()],
            rows,
        });
    }
    let problem = input::problem_from_value(value)?;
    let p = &problem.polytope;
    let zero_sum = mixture::zero_sum_check(p);
    let headers = vec!["property".to_string(), "value".to_string()];
    match mixture::to_mixture(p) {
        Ok(m) => {
            let json = json!({
                "zero_sum": zero_sum,
                "offset_sum": exact::format_rational(&mixture::offset_sum(p)),
                "family": m,
            });
            let mut rows = vec![
                vec![Cell::from("zero_sum"), Cell::from(zero_sum)],
                vec![Cell::from("outcomes"), Cell::from(m.size().to_string())],
            ];
            for (r, (a, b)) in m.alphas().iter().zip(m.betas()).enumerate() {
                let a: Vec<String> = a.iter().map(exact::format_rational).collect();
                rows.push(vec![
                    Cell::from(format!("p{}", r + 1)),
                    Cell::from(format!("[{}]·x + {}", a.join(", "), exact::format_rational(b))),
                ]);
            }
            Ok(Output { pass: true, json, headers, rows })
        }
        Err(e @ (Error::NotTorifiable(_) | Error::Degenerate(_))) => Ok(Output {
            pass: false,
            json: json!({"zero_sum": zero_sum, "reason": e.to_string()}),
            headers,
            rows: vec![
                vec![Cell::from("zero_sum"), Cell::from(zero_sum)],
                vec![Cell::from("reason"), Cell::from(e.to_string())],
            ],
        }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    name: String,
    polytope: Polytope,
    #[serde(default)]
    scale: Option<f64>,
    #[serde(default)]
    potential: Option<delzant_core::potential::PotentialSpec>,
    #[serde(default = "default_samples")]
    samples: usize,
    /// Moves each computed foot point this far along the face before the
    /// foot-point check; nonzero values make a negative control.
    #[serde(default)]
    foot_shift: f64,
}

fn default_samples() -> usize {
    20
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioFile {
    Many { scenarios: Vec<Scenario> },
    One(Scenario),
}

fn facet_charts(p: &Polytope) -> Result<Vec<FaceChart>> {
    Ok((0..p.num_facets()).map(|r| face_chart(p, &[r])).collect::<delzant_core::Result<_>>()?)
}

fn worst(check: &str, inputs: Value, values: &[f64], tolerance: f64) -> CheckReport {
    let w = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    CheckReport::new(check, inputs, w, tolerance).detail("count", values.len())
}

fn unit_direction(rng: &mut SampleRng, k: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return d.into_iter().map(|v| v / norm).collect();
        }
    }
}

fn run_scenario(s: &Scenario, seed: u64, tol: &Tolerances) -> Result<Vec<CheckReport>> {
    let p = &s.polytope;
    let mut repr = json!({"polytope": p});
    if let Some(scale) = s.scale {
        repr["scale"] = json!(scale);
    }
    if let Some(spec) = &s.potential {
        repr["potential"] = json!(spec);
    }
    let problem = input::problem_from_value(repr)?;
    let phi = problem.potential;
    let mut rng = sampling::rng(seed);
    let charts = facet_charts(p)?;
    let inputs = json!({"scenario": s.name, "samples": s.samples, "seed": seed});
    let mut reports = Vec::new();

    let mut gaps = Vec::new();
    let mut unsettled = 0;
    for chart in &charts {
        if !chart.is_bounded() && chart.face_vertices().is_empty() {
            continue;
        }
        for _ in 0..s.samples {
            let a = sampling::face_point(p, chart, &mut rng);
            let b = sampling::face_point(p, chart, &mut rng);
            let eta = BoundaryPoint::from_ambient(p, chart, &a)?;
            let etap = BoundaryPoint::from_ambient(p, chart, &b)?;
            let rep = boundary::continuity_check(&phi, p, chart, &eta, &etap, 8)?;
            unsettled += usize::from(!rep.pass && rep.residual <= boundary::CONTINUITY_TOL);
            gaps.push(rep.residual);
        }
    }
    let rep = worst("continuity", inputs.clone(), &gaps, tol.get("continuity"));
    let pass = rep.pass && unsettled == 0;
    reports.push(rep.detail("unsettled", unsettled).with_pass(pass));

    let mut residuals = Vec::new();
    for i in 0..s.samples {
        let chart = &charts[i % charts.len()];
        let xi = sampling::interior_point(p, &mut rng);
        let foot = boundary::project_to_face(&phi, p, chart, &xi)?;
        let eta = if s.foot_shift != 0.0 {
            let d = unit_direction(&mut rng, chart.dim_face());
            let shifted = linalg::add_scaled(foot.chart_coords(), s.foot_shift, &d);
            let far = [0.2, -0.2, 0.1, -0.1].iter().find_map(|&c| {
                let u = linalg::add_scaled(&shifted, c, &d);
                BoundaryPoint::from_chart(p, chart, &u).ok().map(|e| (shifted.clone(), e))
            });
            let Some((shifted, eta)) = far else { continue };
            let Ok(wrong) = BoundaryPoint::from_chart(p, chart, &shifted) else { continue };
            let r = boundary::pythagoras_54(&phi, chart, &eta, &wrong, &xi, tol.get("pythagoras"))?;
            residuals.push(r.residual);
            continue;
        } else {
            let e = sampling::face_point(p, chart, &mut rng);
            BoundaryPoint::from_ambient(p, chart, &e)?
        };
        let r = boundary::pythagoras_54(&phi, chart, &eta, &foot, &xi, tol.get("pythagoras"))?;
        residuals.push(r.residual);
    }
    reports.push(
        worst("pythagoras_foot", inputs.clone(), &residuals, tol.get("pythagoras"))
            .detail("foot_shift", s.foot_shift),
    );

    let mut identity = Vec::new();
    let mut orthogonal = Vec::new();
    for i in 0..s.samples {
        let chart = &charts[i % charts.len()];
        let e = sampling::face_point(p, chart, &mut rng);
        let eta = BoundaryPoint::from_ambient(p, chart, &e)?;
        let xi = sampling::interior_point(p, &mut rng);
        let xip = sampling::interior_point(p, &mut rng);
        let r = boundary::pythagoras_55(&phi, &eta, &xi, &xip, tol.get("pythagoras_interior"))?;
        identity.push(r.details["identity_gap"].as_f64().unwrap_or(f64::INFINITY));
        let d = linalg::sub(eta.ambient(), &xi);
        let w = unit_direction(&mut rng, p.dim());
        let w = linalg::add_scaled(&w, -linalg::dot(&w, &d) / linalg::dot(&d, &d), &d);
        let y = linalg::add_scaled(&phi.grad(&xi)?, 0.5, &w);
        let xip = dually_flat::from_dual(&phi, p, &y)?.x;
        let r = boundary::pythagoras_55(&phi, &eta, &xi, &xip, tol.get("pythagoras_interior"))?;
        orthogonal.push(r.residual);
    }
    reports.push(worst("pythagoras_interior_identity", inputs.clone(), &identity, tol.get("identity")));
    reports.push(worst("pythagoras_interior_orthogonal", inputs.clone(), &orthogonal, tol.get("pythagoras_interior")));

    let guillemin = phi == SymplecticPotential::guillemin(p, phi.scale());
    if guillemin && mixture::zero_sum_check(p) {
        let m = mixture::to_mixture(p)?;
        let factor = phi.scale() * exact::to_f64(&mixture::offset_sum(p));
        let mut gaps = Vec::new();
        for _ in 0..s.samples {
            let a = sampling::interior_point(p, &mut rng);
            let b = sampling::interior_point(p, &mut rng);
            gaps.push(dually_flat::bregman(&phi, &a, &b)? - factor * mixture::kl(&m, &a, &b)?);
        }
        reports.push(worst("kl_relation", inputs.clone(), &gaps, tol.get("kl")).detail("factor", factor));
    }

    if p.is_bounded() {
        for mut r in boundary::product_boundary_check(&phi, p, s.samples, seed ^ 0x5eed)? {
            let name = if r.check == "product_additivity" { "additivity" } else { "product" };
            r.tolerance = tol.get(name);
            r.pass = r.residual.abs() <= r.tolerance;
            r.inputs = inputs.clone();
            reports.push(r);
        }
    }
    Ok(reports)
}

pub fn verify_all(path: &Path, seed: u64, tol: &Tolerances) -> Result<Output> {
    let scenarios = match input::parse::<ScenarioFile>(input::read_json(path)?, "scenario file")? {
        ScenarioFile::Many { scenarios } => scenarios,
        ScenarioFile::One(s) => vec![s],
    };
    let mut summary = Vec::new();
    let mut rows = Vec::new();
    let mut all_pass = true;
    for (i, s) in scenarios.iter().enumerate() {
        let reports = run_scenario(s, seed.wrapping_add(i as u64), tol)?;
        let pass = reports.iter().all(|r| r.pass);
        all_pass &= pass;
        for r in &reports {
            rows.push(vec![
                Cell::from(s.name.as_str()),
                Cell::from(r.check.as_str()),
                Cell::Num(r.residual),
                Cell::Num(r.tolerance),
                Cell::from(r.pass),
            ]);
        }
        summary.push(json!({"name": s.name, "pass": pass, "checks": reports}));
    }
    Ok(Output {
        pass: all_pass,
        json: json!({"seed": seed, "scenarios": summary, "pass": all_pass}),
        headers: ["scenario", "check", "residual", "tolerance", "pass"].map(String::from).to_vec(),
        rows,
    })
}
