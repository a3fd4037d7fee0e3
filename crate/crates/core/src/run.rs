//! Command dispatch, reports, and the content-addressed report cache.

use crate::cartan::{cartan_complex, delocalized_dims, CDGAModel, FiniteSetModel, TwistData};
use crate::cyclic::{
    crossed_product, periodic_dims, AlgebraData, EquivariantAlgebra, Mode, SectorComplex,
};
use crate::error::{Error, Result};
use crate::extension::{ExtensionCocycle, TwistedAlgebra};
use crate::groupoid::{FiniteGroupoid, GroupoidAction};
use crate::hkr::{
    curved_fixture, curved_matrix_data, flat_fixture, tau_family, verify_chain_map, CurvedDGA,
};
use crate::problem::{digest_of, Model, ProblemSpec};
use crate::transgression::transgress;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "EQTWIST_CACHE_DIR";

const DEFAULT_KMAX: usize = 6;
const HKR_DEGREE: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Transgress {
        element: Option<String>,
    },
    Cohomology {
        sector: Option<String>,
        truncation: Option<usize>,
    },
    Cyclic {
        kmax: usize,
    },
    CrossedProduct {
        kmax: usize,
    },
    VerifyHkr {
        trials: usize,
        seed: Option<u64>,
    },
    /// Experimental: sector sums compared with periodic cyclic homology.
    Delocalize {
        kmax: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Transgress { .. } => "transgress",
            Command::Cohomology { .. } => "cohomology",
            Command::Cyclic { .. } => "cyclic",
            Command::CrossedProduct { .. } => "crossed-product",
            Command::VerifyHkr { .. } => "verify-hkr",
            Command::Delocalize { .. } => "delocalize",
        }
    }

    /// Every command with default arguments, in report order.
    pub fn all() -> Vec<Command> {
        vec![
            Command::Validate,
            Command::Transgress { element: None },
            Command::Cohomology {
                sector: None,
                truncation: None,
            },
            Command::Cyclic { kmax: DEFAULT_KMAX },
            Command::CrossedProduct { kmax: DEFAULT_KMAX },
            Command::VerifyHkr {
                trials: 100,
                seed: None,
            },
            Command::Delocalize { kmax: DEFAULT_KMAX },
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Outcome of one command. Contains no timing, so it is a pure function of its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    pub inputs_digest: String,
    pub seed: u64,
    pub version: String,
    pub experiment: bool,
    pub checks: Vec<Check>,
    pub results: Value,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn failures(&mut self, name: impl Into<String>, fails: &[String]) {
        self.check(
            name,
            fails.is_empty(),
            fails.first().cloned().unwrap_or_default(),
        );
    }
}

fn element_index(spec: &ProblemSpec, name: &str) -> Result<usize> {
    spec.group()
        .element_by_name(name)
        .ok_or_else(|| Error::BadElement(name.into(), "not a group element".into()))
}

fn twisted_algebra(theta: &ExtensionCocycle) -> Result<EquivariantAlgebra> {
    Ok(EquivariantAlgebra::plain(AlgebraData::from_twisted(
        &TwistedAlgebra::with_counting(theta.clone())?,
    )))
}

fn cdga_models(spec: &ProblemSpec) -> Vec<(String, Option<usize>, CDGAModel)> {
    let mut out: Vec<(String, Option<usize>, CDGAModel)> = spec
        .models
        .iter()
        .enumerate()
        .filter_map(|(i, m)| match m {
            Model::Cdga { name, model } => Some((name.clone(), Some(i), model.clone())),
            Model::CurvedMatrix { .. } => None,
        })
        .collect();
    if out.is_empty() {
        out.push(("point".into(), None, CDGAModel::point(0)));
    }
    out
}

fn validate(spec: &ProblemSpec, b: &mut Builder) -> Result<Value> {
    let grp = spec.group();
    let h = spec.base.groupoid();
    let rep = spec.theta.validate(Some(&spec.base.conjugation_action()));
    b.check(
        "cocycle is normalized, closed and invariant",
        rep.is_valid(),
        "",
    );
    for q in 0..3 {
        let m = h.coboundary_matrix(q + 1).mul(&h.coboundary_matrix(q))?;
        b.check(
            format!("nerve coboundary squares to zero in degree {q}"),
            m.is_zero(),
            "",
        );
    }
    let mut models = Vec::new();
    for m in &spec.models {
        match m {
            Model::Cdga { name, model } => {
                b.failures(
                    format!("model {name} satisfies the Cartan identities"),
                    &model.validate(),
                );
                models.push(json!({"name": name, "kind": "cdga", "dim": model.algebra().dim(), "rank": model.algebra().rank()}));
            }
            Model::CurvedMatrix { name, size } => {
                let (data, _) = curved_matrix_data(*size, false)?;
                b.failures(
                    format!("model {name} is a curved G-algebra with nilpotent curvature"),
                    &CurvedDGA::failures(&data),
                );
                models.push(
                    json!({"name": name, "kind": "curved_matrix", "dim": data.degrees.len()}),
                );
            }
        }
    }
    if let Some((i, e)) = &spec.twist {
        if let Model::Cdga { name, model } = &spec.models[*i] {
            b.check(
                format!("twist on {name} is equivariantly closed"),
                e.d_g(model.algebra(), spec.truncation).is_zero(),
                "",
            );
        }
    }
    Ok(json!({
        "group_order": grp.order(),
        "elements": grp.names(),
        "conjugacy_classes": grp.conjugacy_classes().iter().map(|c| c.iter().map(|&g| grp.name(g).to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "points": spec.base.action().points(),
        "arrows": h.arrows(),
        "root_order": spec.order(),
        "cocycle_trivial": spec.theta.is_trivial(),
        "models": models,
        "truncation": spec.truncation,
    }))
}

fn transgress_cmd(spec: &ProblemSpec, element: &Option<String>, b: &mut Builder) -> Result<Value> {
    let grp = spec.group();
    let elems: Vec<usize> = match element {
        Some(g) => vec![element_index(spec, g)?],
        None => (0..grp.order()).collect(),
    };
    let mut sectors = Vec::new();
    for g in elems {
        let fam = transgress(&spec.base, &spec.theta, g)?;
        b.failures(
            format!(
                "line family at {} is flat with g acting trivially",
                grp.name(g)
            ),
            &fam.flatness_violations(),
        );
        sectors.push(json!({
            "element": grp.name(g),
            "fixed_points": fam.fixed,
            "centralizer": fam.centralizer.iter().map(|&h| grp.name(h)).collect::<Vec<_>>(),
            "order": fam.order,
            "characters": fam.orbit_characters(),
            "invariant_dim": fam.invariant_sections(),
        }));
    }
    Ok(json!({ "sectors": sectors }))
}

fn cohomology_cmd(
    spec: &ProblemSpec,
    sector: &Option<String>,
    truncation: Option<usize>,
    b: &mut Builder,
) -> Result<Value> {
    let grp = spec.group();
    let n = truncation.unwrap_or(spec.truncation);
    let elems = match sector {
        Some(g) => vec![element_index(spec, g)?],
        None => grp.class_representatives(),
    };
    let mut out = Vec::new();
    for (name, idx, model) in cdga_models(spec) {
        let fsm = FiniteSetModel::new(spec.base.action().clone(), model.algebra().clone());
        let twist = spec
            .twist
            .as_ref()
            .filter(|(i, _)| Some(*i) == idx)
            .map(|(_, e)| TwistData {
                eta_hat: fsm.lift_equivariant(e),
                connection: None,
            });
        let mut sectors = Vec::new();
        for &g in &elems {
            let line = transgress(&spec.base, &spec.theta, g)?;
            let sec = fsm.sector(g, Some(&line))?;
            let c = cartan_complex(&fsm.total, n, twist.as_ref(), Some(&sec))?;
            let sq = c.differential.mul(&c.differential)?;
            b.check(
                format!("D^2 = 0 on model {name}, sector {}", grp.name(g)),
                sq.is_zero(),
                "",
            );
            let h = c.cohomology_dims()?;
            sectors
                .push(json!({ "element": grp.name(g), "complex_dim": c.dim(), "cohomology": h }));
        }
        out.push(json!({ "model": name, "twisted": twist.is_some(), "truncation": n, "sectors": sectors }));
    }
    Ok(json!({ "models": out }))
}

fn cyclic_cmd(spec: &ProblemSpec, kmax: usize, b: &mut Builder) -> Result<Value> {
    let ea = twisted_algebra(&spec.theta)?;
    let grp = ea.group().clone();
    for g in grp.class_representatives() {
        let sc = SectorComplex::build(&ea, g, kmax, Mode::Normalized)?;
        b.failures(
            format!(
                "b^2 = B^2 = bB + Bb = 0 up to degree {kmax} at {}",
                grp.name(g)
            ),
            &sc.identity_failures(),
        );
    }
    let hp = periodic_dims(&ea, kmax, Mode::Normalized)?;
    b.check(
        format!("periodic dimensions stable between {} and {kmax}", kmax - 2),
        hp.stable,
        "",
    );
    Ok(json!({ "algebra_dim": ea.algebra.dim(), "hp": hp }))
}

/// `Fun(X)` with the permutation action of `G`, as an algebra of the unit groupoid on `X`.
fn function_algebra(spec: &ProblemSpec) -> Result<EquivariantAlgebra> {
    let m = spec.base.action().points();
    let h = FiniteGroupoid::new(
        m,
        (0..m).collect(),
        (0..m).collect(),
        (0..m).map(|x| format!("1_{x}")).collect(),
        |a, _| a,
    )?;
    let grp = spec.group().clone();
    let perms = (0..grp.order())
        .map(|k| (0..m).map(|x| spec.base.action().act(x, k)).collect())
        .collect();
    let act = GroupoidAction::new(grp, &h, perms)?;
    let t = TwistedAlgebra::with_counting(ExtensionCocycle::trivial(&h))?;
    let ma = t.induced_action(&act)?;
    Ok(EquivariantAlgebra::new(AlgebraData::from_twisted(&t), ma))
}

fn crossed_product_cmd(spec: &ProblemSpec, kmax: usize, b: &mut Builder) -> Result<Value> {
    let ea = function_algebra(spec)?;
    let eq = periodic_dims(&ea, kmax, Mode::Normalized)?;
    let cp = crossed_product(&ea)?;
    let cpd = cp.dim();
    let plain = periodic_dims(&EquivariantAlgebra::plain(cp), kmax, Mode::Normalized)?;
    b.check(
        "equivariant and crossed-product periodic dimensions agree",
        (eq.even, eq.odd) == (plain.even, plain.odd),
        format!(
            "({}, {}) vs ({}, {})",
            eq.even, eq.odd, plain.even, plain.odd
        ),
    );
    b.check("both computations stable", eq.stable && plain.stable, "");
    Ok(json!({ "equivariant": eq, "crossed_product_dim": cpd, "crossed_product": plain }))
}

fn verify_hkr_cmd(
    spec: &ProblemSpec,
    trials: usize,
    seed: Option<u64>,
    b: &mut Builder,
) -> Result<Value> {
    let seed = seed.unwrap_or(spec.seed);
    let grp = spec.group();
    let cover: Vec<usize> = (0..spec.base.action().points()).collect();
    let go = flat_fixture(&spec.base, &spec.theta, &cover)?;
    let mut flat = Vec::new();
    for g in grp.class_representatives() {
        let td = go.trace(g)?;
        b.failures(
            format!("trace laws at {} (exhaustive)", grp.name(g)),
            &td.failures(go.omega()),
        );
        let f = go.fixture(&format!("flat groupoid, sector {}", grp.name(g)), g)?;
        let rep = verify_chain_map(&f, trials, seed.wrapping_add(g as u64), HKR_DEGREE);
        b.check(
            format!("chain map on the flat fixture at {}", grp.name(g)),
            rep.ok(),
            rep.counterexamples.first().cloned().unwrap_or_default(),
        );
        flat.push(rep);
    }
    let fam = tau_family(&spec.base, &spec.theta, &cover, 3, seed)?;
    b.failures(
        "tau_g is covariant under conjugation",
        &fam.covariance_failures,
    );
    let mut curved = Vec::new();
    for m in &spec.models {
        if let Model::CurvedMatrix { name, size } = m {
            let mut f = curved_fixture(*size, spec.truncation)?;
            f.name = name.clone();
            let rep = verify_chain_map(&f, trials, seed, HKR_DEGREE);
            b.check(
                format!("chain map on the curved fixture {name}"),
                rep.ok(),
                rep.counterexamples.first().cloned().unwrap_or_default(),
            );
            curved.push(rep);
        }
    }
    Ok(json!({ "flat": flat, "sectors": fam, "curved": curved }))
}

fn delocalize_cmd(spec: &ProblemSpec, kmax: usize, b: &mut Builder) -> Result<Value> {
    let fsm = FiniteSetModel::new(
        spec.base.action().clone(),
        CDGAModel::point(0).algebra().clone(),
    );
    let lines = spec
        .group()
        .class_representatives()
        .into_iter()
        .map(|g| transgress(&spec.base, &spec.theta, g).map(Some))
        .collect::<Result<Vec<_>>>()?;
    let d = delocalized_dims(&fsm, 1, None, &lines)?;
    let hp = periodic_dims(&twisted_algebra(&spec.theta)?, kmax, Mode::Normalized)?;
    b.check(
        "EXPERIMENT: sector sum matches periodic cyclic homology",
        (d.even, d.odd) == (hp.even, hp.odd),
        format!(
            "sectors ({}, {}) vs HP ({}, {})",
            d.even, d.odd, hp.even, hp.odd
        ),
    );
    Ok(json!({
        "label": "EXPERIMENT",
        "sectors": d.sectors,
        "sector_sum": { "even": d.even, "odd": d.odd },
        "hp": { "even": hp.even, "odd": hp.odd, "stable": hp.stable },
    }))
}

/// Runs one command on a validated problem.
pub fn run(cmd: &Command, spec: &ProblemSpec) -> Result<Report> {
    let mut b = Builder { checks: Vec::new() };
    let results = match cmd {
        Command::Validate => validate(spec, &mut b)?,
        Command::Transgress { element } => transgress_cmd(spec, element, &mut b)?,
        Command::Cohomology { sector, truncation } => {
            cohomology_cmd(spec, sector, *truncation, &mut b)?
        }
        Command::Cyclic { kmax } => cyclic_cmd(spec, *kmax, &mut b)?,
        Command::CrossedProduct { kmax } => crossed_product_cmd(spec, *kmax, &mut b)?,
        Command::VerifyHkr { trials, seed } => verify_hkr_cmd(spec, *trials, *seed, &mut b)?,
        Command::Delocalize { kmax } => delocalize_cmd(spec, *kmax, &mut b)?,
    };
    let seed = match cmd {
        Command::VerifyHkr { seed: Some(s), .. } => *s,
        _ => spec.seed,
    };
    Ok(Report {
        command: cmd.clone(),
        inputs_digest: spec.digest.clone(),
        seed,
        version: VERSION.into(),
        experiment: matches!(cmd, Command::Delocalize { .. }),
        checks: b.checks,
        results,
    })
}

/// How the cache is consulted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheMode {
    Off,
    Use,
    /// Recompute and compare with any cached report.
    Verify,
}

/// Content-addressed directory of reports, keyed by command and input digest.
#[derive(Clone, Debug)]
pub struct Cache {
    pub dir: PathBuf,
    pub mode: CacheMode,
}

/// A cached report that differs from a fresh computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub key: String,
    pub path: PathBuf,
}

impl Cache {
    /// Directory from [`CACHE_ENV`], defaulting to `.eqtwist-cache`.
    pub fn from_env(mode: CacheMode) -> Cache {
        let dir = std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".eqtwist-cache"));
        Cache { dir, mode }
    }

    pub fn key(cmd: &Command, spec: &ProblemSpec) -> String {
        digest_of(&json!({ "version": VERSION, "command": cmd, "inputs": spec.digest }))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn read(&self, key: &str) -> Option<Report> {
        serde_json::from_slice(&fs::read(self.path(key)).ok()?).ok()
    }

    fn write(&self, key: &str, r: &Report) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        fs::write(&tmp, to_json(r))?;
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }

    /// Runs `cmd`, consulting the cache according to the mode.
    pub fn run(&self, cmd: &Command, spec: &ProblemSpec) -> Result<(Report, Option<Divergence>)> {
        let key = Cache::key(cmd, spec);
        match self.mode {
            CacheMode::Off => Ok((run(cmd, spec)?, None)),
            CacheMode::Use => {
                if let Some(r) = self.read(&key) {
                    return Ok((r, None));
                }
                let r = run(cmd, spec)?;
                self.write(&key, &r)?;
                Ok((r, None))
            }
            CacheMode::Verify => {
                let fresh = run(cmd, spec)?;
                let div = match self.read(&key) {
                    Some(old) if to_json(&old) != to_json(&fresh) => Some(Divergence {
                        key: key.clone(),
                        path: self.path(&key),
                    }),
                    Some(_) => None,
                    None => {
                        self.write(&key, &fresh)?;
                        None
                    }
                };
                Ok((fresh, div))
            }
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Combined document of several reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub inputs_digest: String,
    pub version: String,
    pub passed: bool,
    pub reports: Vec<Report>,
}

impl Document {
    pub fn new(reports: Vec<Report>) -> Document {
        let inputs_digest = reports
            .first()
            .map(|r| r.inputs_digest.clone())
            .unwrap_or_default();
        let passed = reports.iter().all(Report::passed);
        Document {
            inputs_digest,
            version: VERSION.into(),
            passed,
            reports,
        }
    }

    pub fn markdown(&self) -> String {
        let mut s = format!(
            "# eqtwist report\n\n- inputs digest: `{}`\n- version: {}\n- all checks pass: {}\n",
            self.inputs_digest, self.version, self.passed
        );
        for r in &self.reports {
            s += &format!(
                "\n## {}{}\n\n",
                r.command.name(),
                if r.experiment { " (EXPERIMENT)" } else { "" }
            );
            s += &format!(
                "- arguments: `{}`\n- seed: {}\n\n",
                serde_json::to_string(&r.command).expect("json"),
                r.seed
            );
            s += "| check | result | detail |\n|---|---|---|\n";
            for c in &r.checks {
                s += &format!(
                    "| {} | {} | {} |\n",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.detail.replace('|', "\\|")
                );
            }
            s += &format!(
                "\n```json\n{}\n```\n",
                serde_json::to_string_pretty(&r.results).expect("json")
            );
        }
        s
    }
}

/// Reads and validates a problem file, rendering schema errors with their paths.
pub fn load(path: &Path) -> Result<ProblemSpec> {
    let text = fs::read_to_string(path)?;
    crate::problem::parse(&text).map_err(|e| Error::Parse(e.to_string()))
}
