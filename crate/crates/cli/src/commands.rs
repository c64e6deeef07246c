use serde::{Deserialize, Serialize};

use intgeom::bodies::{intersect_transversal, normal_cycle, parse_bodies, Body, Intersection, NormalCycle, PlanarBody};
use intgeom::currents::{compare_currents, three_term_product, Provenance};
use intgeom::kinematics::{mc_kinematic_integral, sphere_experiment, ExperimentConfig, McConfig};
use intgeom::product::{
    evaluate_products, functional_calculus, reference_suite, series_coefficients, OracleConfig, ProductConfig,
    StructureConstants, TemplateOracle,
};
use intgeom::quadrature::QuadConfig;
use intgeom::rumin::{rumin_suite, RuminSuiteConfig};
use intgeom::valuations::{parse_valuation, standard_basis, InvariantValuation, Space};

use crate::config::{RunConfig, Tolerances};
use crate::report::{emit, json, num, write_file, Table};
use crate::{CliError, Command};

/// Largest admissible condition number of the structure-constant fits.
const MAX_CONDITION: f64 = 1e6;
/// Relative gap allowed between the product formula and the oracle.
const ORACLE_TOL: f64 = 0.01;
/// Test-form gap allowed between the product current and the intersection cycle.
const CURRENT_TOL: f64 = 1e-6;
/// Diagram residual budget and the residual a perturbed table must exceed.
const PERTURBATION_MIN_Z: f64 = 30.0;

pub fn run(cfg: &RunConfig, cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Intrinsic { body } => intrinsic(cfg, body),
        Command::Product { a, b, .. } => product(cfg, a, b),
        Command::Kinematic { bodies, mu, diagram } => kinematic(cfg, bodies.as_deref(), mu, diagram.as_deref()),
        Command::NcycleIntersect { bodies, forms, pieces } => ncycle_intersect(cfg, bodies, *forms, pieces.as_deref()),
        Command::RuminCheck { forms, polygons } => rumin_check(cfg, *forms, *polygons),
        Command::Functional { name, valuation, terms, .. } => functional(cfg, name, valuation, *terms),
    }
}

fn read_bodies(path: &str) -> Result<Vec<Body>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    Ok(parse_bodies(&text)?)
}

fn eval_quad(t: &Tolerances) -> QuadConfig {
    QuadConfig { rel_tol: t.tol_eval, ..QuadConfig::default() }
}

fn space_name(s: Space) -> &'static str {
    match s {
        Space::Plane => "plane",
        Space::Sphere => "sphere",
    }
}

fn intrinsic(cfg: &RunConfig, path: &str) -> Result<(), CliError> {
    let bodies = read_bodies(path)?;
    let quad = eval_quad(&cfg.tolerances);
    let basis = standard_basis();
    let mut t = Table::new(&["index", "space", "phi0", "phi1", "phi2"]);
    t.comment(format!("plane basis: {}", Space::Plane.basis_names().join(", ")));
    t.comment(format!("sphere basis: {}", Space::Sphere.basis_names().join(", ")));
    for (k, body) in bodies.iter().enumerate() {
        let (space, values) = match body {
            Body::Planar(p) => {
                let mut v = [0.0; 3];
                for (x, rep) in v.iter_mut().zip(&basis) {
                    *x = rep.evaluate(p, &quad)?;
                }
                (Space::Plane, v)
            }
            Body::Spherical(_) => {
                let mut v = [0.0; 3];
                for (i, x) in v.iter_mut().enumerate() {
                    *x = InvariantValuation::basis(Space::Sphere, i).evaluate(body)?;
                }
                (Space::Sphere, v)
            }
        };
        t.row(vec![k.to_string(), space_name(space).into(), num(values[0]), num(values[1]), num(values[2])]);
    }
    emit(cfg, &t.render(cfg)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Fitted {
    c: [[[f64; 3]; 3]; 3],
    condition: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    tolerances: Tolerances,
    alesker: Option<Fitted>,
    oracle: Option<Fitted>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Cache {
    entries: Vec<CacheEntry>,
}

/// Structure constants from the product formula and from the oracle, read through the cache.
struct Constants<'a> {
    cfg: &'a RunConfig,
    cache: Cache,
}

impl<'a> Constants<'a> {
    fn open(cfg: &'a RunConfig) -> Result<Self, CliError> {
        let cache = match &cfg.paths.cache {
            Some(p) if std::path::Path::new(p).exists() => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read cache {p}: {e}")))?;
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("cache {p}: {e}")))?
            }
            _ => Cache::default(),
        };
        Ok(Self { cfg, cache })
    }

    fn entry(&mut self) -> &mut CacheEntry {
        let t = self.cfg.tolerances;
        let pos = match self.cache.entries.iter().position(|e| e.tolerances == t) {
            Some(p) => p,
            None => {
                self.cache.entries.push(CacheEntry { tolerances: t, alesker: None, oracle: None });
                self.cache.entries.len() - 1
            }
        };
        &mut self.cache.entries[pos]
    }

    fn save(&self) -> Result<(), CliError> {
        match &self.cfg.paths.cache {
            Some(p) => {
                let text = serde_json::to_vec_pretty(&self.cache).map_err(|e| CliError::Numeric(e.to_string()))?;
                write_file(p, &text)
            }
            None => Ok(()),
        }
    }

    fn alesker(&mut self) -> Result<Fitted, CliError> {
        if let Some(f) = &self.entry().alesker {
            return Ok(f.clone());
        }
        let t = self.cfg.tolerances;
        let pcfg = ProductConfig { h: t.h, fiber: QuadConfig { rel_tol: t.quad_tol, ..ProductConfig::default().fiber } };
        let (m, condition) = evaluate_products(&reference_suite(), &pcfg, &eval_quad(&t))?.fit(MAX_CONDITION)?;
        let f = Fitted { c: m.c, condition };
        self.entry().alesker = Some(f.clone());
        self.save()?;
        Ok(f)
    }

    fn oracle(&mut self) -> Result<Fitted, CliError> {
        if let Some(f) = &self.entry().oracle {
            return Ok(f.clone());
        }
        let o = TemplateOracle::build(&reference_suite(), &OracleConfig { max_condition: MAX_CONDITION, ..Default::default() })?;
        let f = Fitted { c: o.constants, condition: o.condition };
        self.entry().oracle = Some(f.clone());
        self.save()?;
        Ok(f)
    }
}

fn planar_valuation(text: &str) -> Result<InvariantValuation, CliError> {
    let v = parse_valuation(text)?;
    if v.space != Space::Plane {
        return Err(CliError::Usage(format!(
            "`{text}` lives on the sphere; sphere products come from `kinematic --diagram`"
        )));
    }
    Ok(v)
}

fn max_norm(x: &[f64; 3]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn product(cfg: &RunConfig, a: &str, b: &str) -> Result<(), CliError> {
    let (va, vb) = (planar_valuation(a)?, planar_valuation(b)?);
    let mut constants = Constants::open(cfg)?;
    let alesker = constants.alesker()?;
    let oracle = constants.oracle()?;
    let p = StructureConstants::new(Space::Plane, alesker.c).multiply(&va, &vb)?;
    let q = StructureConstants::new(Space::Plane, oracle.c).multiply(&va, &vb)?;
    let scale = max_norm(&p.coords).max(max_norm(&va.coords) * max_norm(&vb.coords));

    let mut t = Table::new(&["basis", "product", "oracle", "delta"]);
    t.comment(format!("{a} * {b}"));
    t.comment(format!("product fit condition {}, oracle fit condition {}", num(alesker.condition), num(oracle.condition)));
    t.comment(format!("delta = |product - oracle| / {}", num(scale)));
    let mut worst = 0.0_f64;
    for (k, name) in Space::Plane.basis_names().iter().enumerate() {
        let delta = (p.coords[k] - q.coords[k]).abs() / scale;
        worst = worst.max(delta);
        t.row(vec![name.to_string(), num(p.coords[k]), num(q.coords[k]), num(delta)]);
    }
    emit(cfg, &t.render(cfg)?)?;
    if worst < ORACLE_TOL {
        Ok(())
    } else {
        Err(CliError::Check(format!("oracle delta {worst:e} exceeds {ORACLE_TOL}")))
    }
}

fn mc_config(cfg: &RunConfig) -> Result<McConfig, CliError> {
    if cfg.mc.samples == 0 || cfg.mc.batch == 0 {
        return Err(CliError::Usage("the sample count and batch size must be positive".into()));
    }
    Ok(McConfig { samples: cfg.mc.samples, batch: cfg.mc.batch, seed: cfg.seed, stream: 0 })
}

/// Reads a planar name on the sphere by meaning: `chi`, `perim = 2 v1` and `area` keep their sense.
fn on_space(mu: InvariantValuation, space: Space) -> InvariantValuation {
    match (mu.space, space) {
        (Space::Plane, Space::Sphere) => InvariantValuation::new(space, [mu.coords[0], 0.5 * mu.coords[1], mu.coords[2]]),
        (Space::Sphere, Space::Plane) => InvariantValuation::new(space, [mu.coords[0], 2.0 * mu.coords[1], mu.coords[2]]),
        _ => mu,
    }
}

fn kinematic(cfg: &RunConfig, bodies: Option<&str>, mus: &[String], diagram: Option<&str>) -> Result<(), CliError> {
    let mc = mc_config(cfg)?;
    let mut failures = Vec::new();
    let mut t;
    if let Some(path) = bodies {
        let bodies = read_bodies(path)?;
        let [b1, b2] = bodies.as_slice() else {
            return Err(CliError::Usage(format!("{path} must hold exactly two bodies, found {}", bodies.len())));
        };
        t = Table::new(&["mu", "space", "estimate", "stderr", "samples", "seed"]);
        let space = match b1 {
            Body::Planar(_) => Space::Plane,
            Body::Spherical(_) => Space::Sphere,
        };
        for text in mus {
            let mu = on_space(parse_valuation(text)?, space);
            let e = mc_kinematic_integral(&mu, b1, b2, &mc)?;
            t.row(vec![
                text.clone(),
                space_name(mu.space).into(),
                num(e.estimate),
                num(e.stderr),
                e.samples.to_string(),
                cfg.seed.to_string(),
            ]);
        }
    } else {
        t = Table::new(&["quantity", "value", "limit", "pass"]);
    }
    if let Some(path) = diagram {
        let ex = sphere_experiment(&ExperimentConfig { mc, ..Default::default() })?;
        write_file(path, &json(cfg, &ex)?)?;
        t.comment(format!("diagram report: {path}"));
        let mut rows = vec![("diagram_max_z".to_string(), ex.report.max_z, ex.report.budget, ex.report.passed())];
        for p in &ex.perturbations {
            let (k, l, a) = p.index;
            let name = format!("perturbed_m_{k}{l}_{a}_max_z");
            rows.push((name, p.max_z, PERTURBATION_MIN_Z, p.max_z > PERTURBATION_MIN_Z));
        }
        for (name, value, limit, pass) in rows {
            if !pass {
                failures.push(name.clone());
            }
            if bodies.is_none() {
                t.row(vec![name, num(value), num(limit), pass.to_string()]);
            } else {
                t.comment(format!("{name} = {} (limit {}, pass {pass})", num(value), num(limit)));
            }
        }
    }
    emit(cfg, &t.render(cfg)?)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures.join(", ")))
    }
}

fn planar_pair(bodies: &[Body], path: &str) -> Result<(PlanarBody, PlanarBody), CliError> {
    match bodies {
        [Body::Planar(a), Body::Planar(b)] => Ok((a.clone(), b.clone())),
        _ => Err(CliError::Usage(format!("{path} must hold exactly two planar bodies"))),
    }
}

#[derive(Serialize)]
struct PiecesReport {
    product: intgeom::currents::PiecewiseCurrent,
    intersection: NormalCycle,
}

fn ncycle_intersect(cfg: &RunConfig, path: &str, forms: usize, pieces: Option<&str>) -> Result<(), CliError> {
    let (p1, p2) = planar_pair(&read_bodies(path)?, path)?;
    let product = three_term_product(&p1, &p2)?;
    let intersection = match intersect_transversal(&p1, &p2)? {
        Intersection::Empty => NormalCycle::new(vec![]),
        Intersection::Components(cs) => NormalCycle::new(cs.iter().flat_map(|c| normal_cycle(&c.body).pieces).collect()),
    };
    let err = compare_currents(&product.as_cycle(), &intersection, forms, cfg.seed, &eval_quad(&cfg.tolerances))?;
    let closed = product.is_closed();
    let pass = closed && err < CURRENT_TOL;
    if let Some(p) = pieces {
        write_file(p, &json(cfg, &PiecesReport { product: product.clone(), intersection })?)?;
    }
    let mut t = Table::new(&["forms", "seed", "gt_arcs", "restricted_n1", "restricted_n2", "closed", "max_error", "tol", "pass"]);
    t.row(vec![
        forms.to_string(),
        cfg.seed.to_string(),
        product.count(Provenance::GtArc).to_string(),
        product.count(Provenance::RestrictedN1).to_string(),
        product.count(Provenance::RestrictedN2).to_string(),
        closed.to_string(),
        num(err),
        num(CURRENT_TOL),
        pass.to_string(),
    ]);
    emit(cfg, &t.render(cfg)?)?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Check(format!("current mismatch {err:e} (closed: {closed})")))
    }
}

fn rumin_check(cfg: &RunConfig, forms: usize, polygons: usize) -> Result<(), CliError> {
    let rc = RuminSuiteConfig { seed: cfg.seed, forms, polygons, ..Default::default() };
    let r = rumin_suite(&rc)?;
    let mut t = Table::new(&["check", "residual", "tol", "pass"]);
    t.comment(format!("difference step {}", num(rc.h)));
    let rows = [
        ("d_of_f_alpha", r.d_of_f_alpha, r.form_tol),
        ("d_of_exact", r.d_of_exact, r.form_tol),
        ("vertical", r.vertical, r.form_tol),
        ("q_idempotence", r.q_idempotence, r.form_tol),
        ("gauge", r.gauge, r.gauge_tol),
    ];
    for (name, res, tol) in rows {
        t.row(vec![name.into(), num(res), num(tol), (res < tol).to_string()]);
    }
    emit(cfg, &t.render(cfg)?)?;
    if r.passed() {
        Ok(())
    } else {
        Err(CliError::Check("rumin residuals above tolerance".into()))
    }
}

fn functional(cfg: &RunConfig, name: &str, valuation: &str, terms: usize) -> Result<(), CliError> {
    let coeffs = series_coefficients(name, terms)?;
    let mu = planar_valuation(valuation)?;
    let fitted = Constants::open(cfg)?.alesker()?;
    let m = StructureConstants::new(Space::Plane, fitted.c).graded();
    let r = functional_calculus(&coeffs, &mu, Some(&m))?;
    let mut t = Table::new(&["function", "valuation", "chi", "v1", "area", "exact_truncation", "truncated_at"]);
    t.comment(if r.exact_truncation {
        format!("exact: the series terminates at the power {} of the nilpotent part", r.truncated_at)
    } else {
        format!("series truncated after {terms} terms")
    });
    t.row(vec![
        name.into(),
        valuation.into(),
        num(r.value.coords[0]),
        num(r.value.coords[1]),
        num(r.value.coords[2]),
        r.exact_truncation.to_string(),
        r.truncated_at.to_string(),
    ]);
    emit(cfg, &t.render(cfg)?)
}
