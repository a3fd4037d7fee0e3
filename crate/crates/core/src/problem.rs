//! Problem files: a JSON document with keys `group`, `action`, `cocycle`, `models`, `twist`,
//! `truncation`, `seed`. Roots of unity are integer exponents with a declared order `n`.

use crate::cartan::{CDGAModel, EqElement, Generator};
use crate::extension::ExtensionCocycle;
use crate::groupoid::{ActionGroupoid, FiniteGroup, GroupAction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

/// Schema or consistency error at a JSON path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpecError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn err(path: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Cyclic {
        n: usize,
    },
    KleinFour,
    Symmetric {
        m: usize,
    },
    /// Generated by permutations of `0..degree`.
    Permutations {
        degree: usize,
        generators: Vec<Vec<usize>>,
    },
    /// Multiplication table by element names; the first name is the identity.
    Table {
        names: Vec<String>,
        table: Vec<Vec<String>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSpec {
    Trivial {
        points: usize,
    },
    /// Right multiplication of the group on itself.
    Regular,
    /// Natural action of a `permutations` group on its points.
    Natural,
    /// `images[x][g] = x . g`, with `g` in group order.
    Table {
        images: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowSpec {
    pub point: usize,
    pub element: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleEntry {
    pub first: ArrowSpec,
    pub second: ArrowSpec,
    pub exponent: i64,
}

/// `theta(first, second) = zeta_order^exponent`; unlisted composable pairs have exponent 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSpec {
    pub order: u32,
    #[serde(default)]
    pub values: Vec<CocycleEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Cdga {
        name: String,
        generators: Vec<Generator>,
        #[serde(default)]
        relations: Vec<String>,
        #[serde(default)]
        rank: usize,
        #[serde(default)]
        differential: BTreeMap<String, String>,
        /// One map per torus coordinate.
        #[serde(default)]
        contractions: Vec<BTreeMap<String, String>>,
    },
    /// The synthetic curved matrix algebra used by `verify-hkr`.
    CurvedMatrix { name: String, size: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistSpec {
    pub model: String,
    pub eta_hat: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub group: GroupSpec,
    #[serde(default)]
    pub action: Option<ActionSpec>,
    #[serde(default)]
    pub cocycle: Option<CocycleSpec>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub twist: Option<TwistSpec>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_truncation() -> usize {
    3
}

/// A named model of the problem.
#[derive(Clone, Debug)]
pub enum Model {
    Cdga { name: String, model: CDGAModel },
    CurvedMatrix { name: String, size: usize },
}

impl Model {
    pub fn name(&self) -> &str {
        match self {
            Model::Cdga { name, .. } | Model::CurvedMatrix { name, .. } => name,
        }
    }
}

/// Validated problem.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub file: ProblemFile,
    pub base: ActionGroupoid,
    pub theta: ExtensionCocycle,
    pub models: Vec<Model>,
    /// Index into `models` and the parsed twist.
    pub twist: Option<(usize, EqElement)>,
    pub truncation: usize,
    pub seed: u64,
    /// SHA-256 of the canonical JSON form.
    pub digest: String,
}

impl ProblemSpec {
    pub fn group(&self) -> &FiniteGroup {
        self.base.group()
    }

    /// Order of the roots of unity in the coefficient field.
    pub fn order(&self) -> u32 {
        self.theta.order()
    }
}

fn build_group(g: &GroupSpec) -> Result<(FiniteGroup, Option<GroupAction>), SpecError> {
    Ok(match g {
        GroupSpec::Cyclic { n } => {
            if *n == 0 {
                return Err(err("group.n", "must be positive"));
            }
            (FiniteGroup::cyclic(*n), None)
        }
        GroupSpec::KleinFour => (FiniteGroup::klein_four(), None),
        GroupSpec::Symmetric { m } => {
            if *m == 0 || *m > 5 {
                return Err(err("group.m", "supported for 1 <= m <= 5"));
            }
            (FiniteGroup::symmetric(*m), None)
        }
        GroupSpec::Permutations { degree, generators } => {
            let act = GroupAction::permutation_action(*degree, generators)
                .map_err(|e| err("group.generators", e.to_string()))?;
            (act.group().clone(), Some(act))
        }
        GroupSpec::Table { names, table } => {
            let n = names.len();
            let index: BTreeMap<&str, usize> = names
                .iter()
                .enumerate()
                .map(|(i, s)| (s.as_str(), i))
                .collect();
            if index.len() != n {
                return Err(err("group.names", "duplicate element name"));
            }
            if table.len() != n {
                return Err(err("group.table", format!("expected {n} rows")));
            }
            let mut flat = Vec::with_capacity(n * n);
            for (i, row) in table.iter().enumerate() {
                if row.len() != n {
                    return Err(err(
                        format!("group.table[{i}]"),
                        format!("expected {n} entries"),
                    ));
                }
                for (j, s) in row.iter().enumerate() {
                    flat.push(*index.get(s.as_str()).ok_or_else(|| {
                        err(
                            format!("group.table[{i}][{j}]"),
                            format!("unknown element {s}"),
                        )
                    })?);
                }
            }
            (
                FiniteGroup::from_table(flat, names.clone())
                    .map_err(|e| err("group.table", e.to_string()))?,
                None,
            )
        }
    })
}

fn build_action(
    a: Option<&ActionSpec>,
    group: &FiniteGroup,
    natural: Option<GroupAction>,
) -> Result<GroupAction, SpecError> {
    match a {
        None => Ok(GroupAction::trivial(group.clone(), 1)),
        Some(ActionSpec::Trivial { points }) => {
            if *points == 0 {
                return Err(err("action.points", "must be positive"));
            }
            Ok(GroupAction::trivial(group.clone(), *points))
        }
        Some(ActionSpec::Regular) => Ok(GroupAction::regular(group.clone())),
        Some(ActionSpec::Natural) => {
            natural.ok_or_else(|| err("action.kind", "natural action needs a permutations group"))
        }
        Some(ActionSpec::Table { images }) => {
            let n = group.order();
            let mut flat = Vec::new();
            for (x, row) in images.iter().enumerate() {
                if row.len() != n {
                    return Err(err(
                        format!("action.images[{x}]"),
                        format!("expected {n} entries"),
                    ));
                }
                flat.extend(row.iter().copied());
            }
            GroupAction::new(group.clone(), images.len(), flat)
                .map_err(|e| err("action.images", e.to_string()))
        }
    }
}

fn build_cocycle(
    c: Option<&CocycleSpec>,
    base: &ActionGroupoid,
) -> Result<ExtensionCocycle, SpecError> {
    let h = base.groupoid();
    let Some(c) = c else {
        return Ok(ExtensionCocycle::trivial(h));
    };
    if c.order == 0 {
        return Err(err("cocycle.order", "must be positive"));
    }
    let grp = base.group();
    let arrow = |a: &ArrowSpec, path: String| -> Result<usize, SpecError> {
        if a.point >= base.action().points() {
            return Err(err(
                format!("{path}.point"),
                format!("no point {}", a.point),
            ));
        }
        let g = grp.element_by_name(&a.element).ok_or_else(|| {
            err(
                format!("{path}.element"),
                format!("unknown element {}", a.element),
            )
        })?;
        Ok(base.arrow(a.point, g))
    };
    let mut exps: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for (i, e) in c.values.iter().enumerate() {
        let p = format!("cocycle.values[{i}]");
        let a = arrow(&e.first, format!("{p}.first"))?;
        let b = arrow(&e.second, format!("{p}.second"))?;
        if h.compose(a, b).is_none() {
            return Err(err(
                p,
                format!(
                    "arrows {} and {} are not composable",
                    h.label(a),
                    h.label(b)
                ),
            ));
        }
        if exps.insert((a, b), e.exponent).is_some() {
            return Err(err(p, "pair listed twice"));
        }
    }
    let theta =
        ExtensionCocycle::from_fn(h, c.order, |a, b| exps.get(&(a, b)).copied().unwrap_or(0));
    let rep = theta.validate(Some(&base.conjugation_action()));
    if let Some((a, b)) = rep.normalization.first() {
        return Err(err(
            "cocycle.values",
            format!("not normalized at ({a}, {b})"),
        ));
    }
    if let Some((a, b, c)) = rep.cocycle.first() {
        return Err(err(
            "cocycle.values",
            format!("cocycle identity fails on ({a}, {b}, {c})"),
        ));
    }
    if let Some((a, b, k)) = rep.invariance.first() {
        return Err(err(
            "cocycle.values",
            format!("not invariant: ({a}, {b}) under {k}"),
        ));
    }
    Ok(theta)
}

fn build_model(m: &ModelSpec, path: &str) -> Result<Model, SpecError> {
    match m {
        ModelSpec::CurvedMatrix { name, size } => {
            if *size < 2 {
                return Err(err(format!("{path}.size"), "must be at least 2"));
            }
            Ok(Model::CurvedMatrix {
                name: name.clone(),
                size: *size,
            })
        }
        ModelSpec::Cdga {
            name,
            generators,
            relations,
            rank,
            differential,
            contractions,
        } => {
            let rels: Vec<&str> = relations.iter().map(String::as_str).collect();
            let mut model = CDGAModel::new(generators.clone(), &rels, *rank)
                .map_err(|e| err(format!("{path}.generators"), e.to_string()))?;
            for (g, v) in differential {
                model
                    .set_differential(g, v)
                    .map_err(|e| err(format!("{path}.differential.{g}"), e.to_string()))?;
            }
            if contractions.len() > *rank {
                return Err(err(
                    format!("{path}.contractions"),
                    format!("more maps than the rank {rank}"),
                ));
            }
            for (k, map) in contractions.iter().enumerate() {
                for (g, v) in map {
                    model
                        .set_contraction(k, g, v)
                        .map_err(|e| err(format!("{path}.contractions[{k}].{g}"), e.to_string()))?;
                }
            }
            if let Some(v) = model.validate().first() {
                return Err(err(path.to_string(), v.clone()));
            }
            Ok(Model::Cdga {
                name: name.clone(),
                model,
            })
        }
    }
}

/// SHA-256 of the canonical (key-sorted, compact) JSON form.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    hex::encode(Sha256::digest(
        serde_json::to_string(&v).expect("json").as_bytes(),
    ))
}

/// Parses and validates a problem file; every error carries the JSON path it refers to.
pub fn parse(text: &str) -> Result<ProblemSpec, SpecError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let p = e.path().to_string();
        err(
            if p == "." { "$".to_string() } else { p },
            e.inner().to_string(),
        )
    })?;
    from_file(file)
}

pub fn from_file(file: ProblemFile) -> Result<ProblemSpec, SpecError> {
    let (group, natural) = build_group(&file.group)?;
    let action = build_action(file.action.as_ref(), &group, natural)?;
    let base = ActionGroupoid::new(action);
    let theta = build_cocycle(file.cocycle.as_ref(), &base)?;
    let mut models = Vec::new();
    for (i, m) in file.models.iter().enumerate() {
        let path = format!("models[{i}]");
        let built = build_model(m, &path)?;
        if models.iter().any(|o: &Model| o.name() == built.name()) {
            return Err(err(
                format!("{path}.name"),
                format!("duplicate model name {}", built.name()),
            ));
        }
        models.push(built);
    }
    if file.truncation == 0 {
        return Err(err("truncation", "must be at least 1"));
    }
    let twist = match &file.twist {
        None => None,
        Some(t) => {
            let i = models
                .iter()
                .position(|m| m.name() == t.model)
                .ok_or_else(|| err("twist.model", format!("unknown model {}", t.model)))?;
            let Model::Cdga { model, .. } = &models[i] else {
                return Err(err("twist.model", "twists apply to cdga models"));
            };
            let e = model
                .parse_equivariant(&t.eta_hat)
                .map_err(|e| err("twist.eta_hat", e.to_string()))?;
            let alg = model.algebra();
            if e.degrees(alg).iter().any(|&d| d != 3) {
                return Err(err("twist.eta_hat", "must have total degree 3"));
            }
            let de = e.d_g(alg, file.truncation);
            if !de.is_zero() {
                return Err(err(
                    "twist.eta_hat",
                    format!("not closed: d_G eta_hat = {}", de.display(alg)),
                ));
            }
            Some((i, e))
        }
    };
    let digest = digest_of(&file);
    Ok(ProblemSpec {
        truncation: file.truncation,
        seed: file.seed,
        file,
        base,
        theta,
        models,
        twist,
        digest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_and_errors() {
        let p = parse(r#"{"group": {"kind": "cyclic", "n": 2}}"#).unwrap();
        assert_eq!(p.group().order(), 2);
        assert_eq!(p.base.action().points(), 1);
        let e = parse(r#"{"group": {"kind": "cyclic", "n": 2}, "colour": 1}"#).unwrap_err();
        assert!(e.message.contains("unknown field"), "{e}");
        let e = parse(r#"{"group": {"kind": "cyclic", "n": "two"}}"#).unwrap_err();
        assert_eq!(e.path, "group");
        assert!(e.message.contains("invalid type"), "{e}");
        let bad = r#"{"group": {"kind": "cyclic", "n": 2}, "action": {"kind": "trivial", "points": 2},
            "cocycle": {"order": 2, "values": [{"first": {"point": 0, "element": "r1"}, "second": {"point": 1, "element": "r1"}, "exponent": 1}]}}"#;
        let e = parse(bad).unwrap_err();
        assert_eq!(e.path, "cocycle.values[0]");
        assert!(e.message.contains("not composable"));
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = parse(r#"{"group": {"kind": "klein_four"}, "seed": 3}"#).unwrap();
        let b = parse("{\n  \"seed\": 3,\n  \"group\": {\"kind\": \"klein_four\"}\n}").unwrap();
        assert_eq!(a.digest, b.digest);
    }
}
