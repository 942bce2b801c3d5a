use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use adiabatic_core::connection::{
    connection_spectral, connection_time_average, defining_commutator_residual, shift_operator, TimeAverageConfig,
};
use adiabatic_core::curvature::{
    berry_curvature_at, berry_phase_surface_all, diagonality_residual, yang_mills_curvature, SurfacePatch,
};
use adiabatic_core::model::{
    eval_h, LocalData, ModelSpec, OscillatorModel, ParameterPoint, ParametricHamiltonian, Su2Model,
};
use adiabatic_core::nast::{maurer_cartan_flatness, nast_residual, NastConfig};
use adiabatic_core::operator::hermitize;
use adiabatic_core::transport::{
    evolve, holonomy, planar_circle, su2_latitude_circle, su2_triangle, transport_operator, wilson_loop_phases,
    PathSpec, Profile, Schedule,
};
use adiabatic_core::Error;
use serde_json::{json, Value};

use crate::config::{ModelKind, RunConfig};
use crate::report::{matrix, number};
use crate::CliError;

pub struct Output {
    pub results: Value,
    pub files: Vec<String>,
}

const CIRCLE_VERTICES: usize = 64;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::InvalidConfig(msg.into()))
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn build_model(cfg: &RunConfig) -> Result<Box<dyn ParametricHamiltonian>, CliError> {
    Ok(match cfg.model_kind {
        ModelKind::Su2 => Box::new(Su2Model::from_spin(cfg.l, cfg.mu)?),
        ModelKind::Oscillator => Box::new(OscillatorModel::new(cfg.nmax, cfg.buffer)?),
        ModelKind::Random => Box::new(ModelSpec::pseudo_random(cfg.dim, cfg.n_params, cfg.terms, cfg.seed)?),
        ModelKind::File => {
            let path = Path::new(cfg.model_path().expect("file model has a path"));
            let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
            Box::new(ModelSpec::parse(&text)?)
        }
    })
}

fn point(cfg: &RunConfig, model: &dyn ParametricHamiltonian) -> Result<ParameterPoint, CliError> {
    let coords = if cfg.point.is_empty() { vec![0.0; model.n_params()] } else { cfg.point.clone() };
    if coords.len() != model.n_params() {
        return Err(CliError::Core(Error::DimensionMismatch { expected: model.n_params(), got: coords.len() }));
    }
    Ok(ParameterPoint::new(coords)?)
}

fn refinement(steps: usize, segments: usize) -> usize {
    steps.div_ceil(segments.max(1)).max(1)
}

fn require_su2(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if cfg.model_kind == ModelKind::Su2 {
        Ok(())
    } else {
        Err(invalid(format!("{what} is defined on the su2 field sphere only")))
    }
}

fn read_polyline(path: &Path, closed: bool, steps: usize) -> Result<PathSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let mut vertices = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Validation(format!("{} line {}: {e}", path.display(), k + 1)))?;
        vertices.push(ParameterPoint::new(coords)?);
    }
    if vertices.len() < 2 {
        return Err(CliError::Validation(format!("{}: a path needs at least two vertices", path.display())));
    }
    let r = refinement(steps, vertices.len() - 1);
    Ok(if closed { PathSpec::closed(vertices, r)? } else { PathSpec::open(vertices, r)? })
}

fn rectangle(cfg: &RunConfig, p: &ParameterPoint, grid: usize) -> Result<SurfacePatch, CliError> {
    let [mu, nu] = cfg.axes;
    let mut origin = p.coords().to_vec();
    if mu >= origin.len() || nu >= origin.len() {
        return Err(invalid("rectangle axes out of range"));
    }
    origin[mu] = cfg.u_range[0];
    origin[nu] = cfg.v_range[0];
    Ok(SurfacePatch::rectangle(
        ParameterPoint::new(origin)?,
        mu,
        nu,
        cfg.u_range[1] - cfg.u_range[0],
        cfg.v_range[1] - cfg.v_range[0],
        grid,
        grid,
    )?)
}

fn surface(cfg: &RunConfig, p: &ParameterPoint) -> Result<SurfacePatch, CliError> {
    match cfg.loop_kind.as_str() {
        "cap" => {
            require_su2(cfg, "cap")?;
            Ok(SurfacePatch::spherical_cap(p[0], cfg.omega, cfg.grid, cfg.grid)?)
        }
        "triangle" => {
            require_su2(cfg, "triangle")?;
            Ok(SurfacePatch::spherical_sector(p[0], FRAC_PI_2, cfg.omega, cfg.grid, cfg.grid)?)
        }
        "rectangle" => rectangle(cfg, p, cfg.grid),
        other => Err(invalid(format!("'{other}' does not bound a built-in surface (cap | triangle | rectangle)"))),
    }
}

fn closed_loop(cfg: &RunConfig, p: &ParameterPoint) -> Result<PathSpec, CliError> {
    match cfg.loop_kind.as_str() {
        "triangle" => {
            require_su2(cfg, "triangle")?;
            Ok(su2_triangle(p[0], cfg.omega, refinement(cfg.steps, 4))?)
        }
        "circle" if cfg.model_kind == ModelKind::Su2 => {
            Ok(su2_latitude_circle(p[0], cfg.theta0, CIRCLE_VERTICES, refinement(cfg.steps, CIRCLE_VERTICES))?)
        }
        "circle" => {
            Ok(planar_circle(p, cfg.axes[0], cfg.axes[1], cfg.radius, CIRCLE_VERTICES, refinement(cfg.steps, CIRCLE_VERTICES))?)
        }
        "cap" | "rectangle" => {
            let s = surface(cfg, p)?;
            let (nu, nv) = s.grid();
            Ok(s.boundary(refinement(cfg.steps, 2 * (nu + nv)))?)
        }
        other => match other.strip_prefix("file:") {
            Some(path) => read_polyline(Path::new(path), true, cfg.steps),
            None => Err(invalid(format!("unknown loop '{other}' (triangle | cap | circle | rectangle | file:<path>)"))),
        },
    }
}

fn operators(ops: impl IntoIterator<Item = adiabatic_core::operator::HermitianOperator>, names: &[String]) -> Value {
    Value::Array(
        ops.into_iter()
            .zip(names)
            .map(|(o, name)| json!({ "parameter": name, "matrix": matrix(o.matrix()) }))
            .collect(),
    )
}

fn write_csv(cfg: &RunConfig, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<Option<String>, CliError> {
    let Some(dir) = &cfg.out else { return Ok(None) };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
    w.write_record(header).map_err(|e| io(&path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io(&path, e))?;
    }
    w.flush().map_err(|e| io(&path, e))?;
    Ok(Some(path.display().to_string()))
}

pub fn execute(cfg: &RunConfig) -> Result<Output, CliError> {
    let model = build_model(cfg)?;
    let model = model.as_ref();
    let p = point(cfg, model)?;
    let names = model.param_names();
    let mut files = Vec::new();
    let results = match cfg.command.as_str() {
        "connection" => {
            let local = LocalData::at(model, &p)?;
            let a = connection_spectral(&local.spectrum, &local.grad)?;
            let d = shift_operator(&local.spectrum, &local.grad)?;
            let residual: Vec<Value> =
                defining_commutator_residual(&local.spectrum, &local.grad, &a, &d).into_iter().map(number).collect();
            json!({
                "eigenvalues": local.spectrum.eigenvalues,
                "checked_levels": local.spectrum.checked_levels,
                "components": operators(a.components.iter().cloned(), &names),
                "max_relative_diagonal": number(a.max_relative_diagonal(&local.spectrum)),
                "defining_commutator_residual": residual,
            })
        }
        "shift" => {
            let local = LocalData::at(model, &p)?;
            let d = shift_operator(&local.spectrum, &local.grad)?;
            let h = eval_h(model, &p)?;
            json!({
                "eigenvalues": local.spectrum.eigenvalues,
                "components": operators(d.components.iter().cloned(), &names),
                "level_shifts": d.level_shifts(&local.spectrum),
                "commutator_residual": number(d.commutator_residual(&h)),
            })
        }
        "time-average" => {
            let local = LocalData::at(model, &p)?;
            let tcfg = match cfg.horizon {
                Some(t) => Some(TimeAverageConfig::with_horizon(t, &local.spectrum)?),
                None => None,
            };
            let est = connection_time_average(model, &p, tcfg)?;
            let exact = connection_spectral(&local.spectrum, &local.grad)?;
            let errors: Vec<Value> = est
                .connection
                .components
                .iter()
                .zip(&exact.components)
                .map(|(a, b)| number((a.matrix() - b.matrix()).norm()))
                .collect();
            json!({
                "horizon": est.config.horizon,
                "samples": est.config.samples,
                "components": operators(est.connection.components.iter().cloned(), &names),
                "error_bound": est.error_bound,
                "error_vs_spectral": errors,
            })
        }
        "transport" => {
            let path = match (&cfg.end, cfg.loop_kind.strip_prefix("file:")) {
                (Some(end), _) => PathSpec::open(vec![p.clone(), ParameterPoint::new(end.clone())?], cfg.steps)?,
                (None, Some(file)) => read_polyline(Path::new(file), false, cfg.steps)?,
                (None, None) => return Err(invalid("transport needs --end or --loop file:<path>")),
            };
            let t = transport_operator(model, &path)?;
            let end = path.vertices().last().expect("path has vertices").clone();
            let levels = model.dim();
            json!({
                "steps": path.n_steps(),
                "operator": matrix(t.operator.matrix()),
                "conjugation_residual": number(t.conjugation_residual),
                "eigenvector_residual": number(t.eigenvector_residual(model, &end, levels)?),
            })
        }
        "holonomy" => {
            let lp = closed_loop(cfg, &p)?;
            let h = holonomy(model, &lp)?;
            let mut out = json!({
                "steps": lp.n_steps(),
                "phases": h.phases,
                "offdiag_residual": number(h.offdiag_residual),
                "unreliable": h.unreliable,
                "operator": matrix(h.operator.matrix()),
            });
            if cfg.model_kind == ModelKind::Su2 {
                let m: Vec<f64> = (0..model.dim()).map(|n| n as f64 - cfg.l).collect();
                out["m_of_level"] = json!(m);
            }
            out
        }
        "wilson" => {
            let lp = closed_loop(cfg, &p)?;
            json!({ "steps": lp.n_steps(), "phases": wilson_loop_phases(model, &lp)? })
        }
        "curvature" => {
            let local = LocalData::at(model, &p)?;
            let f = yang_mills_curvature(model, &p, None)?;
            let table = berry_curvature_at(model, &p)?;
            let components: Vec<Value> = f
                .components
                .iter()
                .map(|((mu, nu), op)| json!({ "mu": names[*mu], "nu": names[*nu], "matrix": matrix(op.matrix()) }))
                .collect();
            let berry: Vec<Value> = (0..table.levels())
                .flat_map(|n| {
                    table.values[n]
                        .iter()
                        .map(move |((mu, nu), w)| json!({ "level": n, "mu": mu, "nu": nu, "w": number(*w) }))
                })
                .collect();
            json!({
                "components": components,
                "berry_curvature": berry,
                "diagonality_residual": number(diagonality_residual(&f, &local.spectrum)),
            })
        }
        "curvature-map" => {
            let (header, rows, degenerate) = curvature_map(cfg, model, &p)?;
            files.extend(write_csv(cfg, "curvature_map.csv", &header, &rows)?);
            json!({ "rows": rows.len(), "degenerate_points": degenerate, "columns": header })
        }
        "berry-surface" => {
            let s = surface(cfg, &p)?;
            let all = berry_phase_surface_all(model, &s, cfg.tol)?;
            let phases = match cfg.level {
                Some(n) if n >= all.phases.len() => {
                    return Err(invalid(format!("level {n} is outside the {} certified levels", all.phases.len())))
                }
                Some(n) => vec![all.phases[n]],
                None => all.phases.clone(),
            };
            json!({
                "surface": s.label(),
                "phases": phases,
                "coarse_phases": all.coarse_phases,
                "error_estimate": number(all.error_estimate),
            })
        }
        "nast-check" => {
            let s = surface(cfg, &p)?;
            let ncfg = NastConfig::default();
            let r = nast_residual(model, &s, &ncfg)?;
            json!({
                "surface": s.label(),
                "nast_residual": number(r.residual),
                "cell_count": r.cell_count,
                "edge_substeps": ncfg.edge_substeps,
                "reference_refinement": ncfg.reference_refinement,
            })
        }
        "flatness" => {
            let lp = closed_loop(cfg, &p)?;
            let residual = maurer_cartan_flatness(model, &lp, cfg.time)?;
            let h = holonomy(model, &lp)?;
            json!({
                "steps": lp.n_steps(),
                "time": cfg.time,
                "maurer_cartan_residual": number(residual),
                "averaged_phases": h.phases,
            })
        }
        "drive" => {
            let (start, end) = match &cfg.end {
                Some(end) => (p.clone(), ParameterPoint::new(end.clone())?),
                None => {
                    require_su2(cfg, "the default theta sweep")?;
                    (ParameterPoint::from([p[0], 0.0, p[2]]), ParameterPoint::from([p[0], FRAC_PI_2, p[2]]))
                }
            };
            let profile = if cfg.profile == "smooth" { Profile::SmoothStep } else { Profile::Linear };
            let schedule = Schedule::new(start, end, cfg.tau, profile)?;
            let level = cfg.level.unwrap_or(0);
            let tr = evolve(model, &schedule, level, cfg.dt, cfg.counterdiabatic)?;
            let header: Vec<String> = ["t", "fidelity", "phase", "norm_drift"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = (0..tr.times.len())
                .map(|k| {
                    vec![
                        tr.times[k].to_string(),
                        tr.fidelity[k].to_string(),
                        tr.phase[k].to_string(),
                        tr.norm_error[k].to_string(),
                    ]
                })
                .collect();
            files.extend(write_csv(cfg, "drive.csv", &header, &rows)?);
            json!({
                "steps": tr.times.len() - 1,
                "dt": tr.dt,
                "min_fidelity": number(tr.min_fidelity),
                "final_fidelity": number(*tr.fidelity.last().expect("trajectory has samples")),
                "final_phase": number(tr.final_phase),
                "norm_drift": number(tr.norm_drift),
            })
        }
        "validate-model" => {
            let h = model.eval_unchecked(&p);
            let hermitized = hermitize(h.matrix())?;
            eval_h(model, &p)?;
            let local = LocalData::at(model, &p)?;
            json!({
                "dim": model.dim(),
                "n_params": model.n_params(),
                "param_names": names,
                "relative_asymmetry": number(hermitized.relative_asymmetry),
                "eigenvalues": local.spectrum.eigenvalues,
                "checked_levels": local.spectrum.checked_levels,
                "min_gap": number(local.spectrum.min_gap),
            })
        }
        other => return Err(CliError::Validation(format!("unknown command '{other}'"))),
    };
    Ok(Output { results, files })
}

type MapTable = (Vec<String>, Vec<Vec<String>>, usize);

fn axis_values(range: [f64; 2], grid: usize) -> Vec<f64> {
    if range[0] == range[1] {
        return vec![range[0]];
    }
    (0..=grid).map(|k| range[0] + (range[1] - range[0]) * k as f64 / grid as f64).collect()
}

fn curvature_map(cfg: &RunConfig, model: &dyn ParametricHamiltonian, p: &ParameterPoint) -> Result<MapTable, CliError> {
    let [mu, nu] = cfg.axes;
    let n = model.n_params();
    if mu >= n || nu >= n {
        return Err(invalid("map axes out of range"));
    }
    let mut header = vec!["u".to_string(), "v".to_string()];
    header.extend((1..=n).map(|k| format!("lambda_{k}")));
    header.extend(["level", "W", "status"].map(String::from));
    let mut rows = Vec::new();
    let mut degenerate = 0;
    for &u in &axis_values(cfg.u_range, cfg.grid) {
        for &v in &axis_values(cfg.v_range, cfg.grid) {
            let q = p.shifted(mu, u - p[mu]).shifted(nu, v - p[nu]);
            let lead: Vec<String> =
                [u, v].iter().chain(q.coords()).map(|x| x.to_string()).collect();
            match berry_curvature_at(model, &q) {
                Ok(table) => {
                    for level in 0..table.levels() {
                        let mut r = lead.clone();
                        r.extend([level.to_string(), table.get(level, mu, nu).to_string(), "ok".into()]);
                        rows.push(r);
                    }
                }
                Err(e @ (Error::DegenerateSpectrum { .. } | Error::DomainViolation(_))) => {
                    degenerate += 1;
                    let mut r = lead.clone();
                    let status = if matches!(e, Error::DomainViolation(_)) { "outside-domain" } else { "degenerate" };
                    r.extend([String::new(), String::new(), status.into()]);
                    rows.push(r);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok((header, rows, degenerate))
}
