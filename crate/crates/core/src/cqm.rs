//! Constrained quadratic models (linear part in practice), exact evaluation,
//! and the ground-placement formulation.
//!
//! The ground-placement model has one binary `x[i|l]` per eligible
//! (item, location) pair and
//!
//! * objective `min -Σ_i Σ_l x[i|l]` (place as many items as possible),
//! * `one-loc:<i>`: `Σ_l x[i|l] <= 1`,
//! * `cap:<l>`: `Σ_i area(i) x[i|l] <= capacity(l)`,
//! * `must-place:<i>`: `Σ_l x[i|l] >= 1` for every non-stackable item.
//!
//! Shelf prohibitions are realized by not creating the variable at all.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{require_valid, Instance, PartialSolution};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Binary,
    Integer,
    Real,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: String,
    pub vartype: VarType,
    /// Inclusive bounds; implicit `{0, 1}` for binaries.
    pub bounds: Option<(Rational, Rational)>,
}

impl Variable {
    pub fn binary(id: impl Into<String>) -> Self {
        Variable {
            id: id.into(),
            vartype: VarType::Binary,
            bounds: None,
        }
    }

    fn effective_bounds(&self) -> (Rational, Rational) {
        match (self.vartype, self.bounds) {
            (_, Some(b)) => b,
            _ => (rational::int(0), rational::int(1)),
        }
    }

    fn admits(&self, v: &Rational) -> bool {
        let (lo, hi) = self.effective_bounds();
        let integral = self.vartype == VarType::Real || v.is_integer();
        integral && *v >= lo && *v <= hi
    }
}

/// Sparse linear expression with optional quadratic part. Terms are kept
/// sorted by variable index with no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearExpr {
    pub terms: Vec<(usize, Rational)>,
    pub quadratic: Vec<((usize, usize), Rational)>,
    pub bias: Rational,
}

impl LinearExpr {
    pub fn from_terms(terms: impl IntoIterator<Item = (usize, Rational)>) -> Self {
        let mut expr = LinearExpr {
            terms: terms.into_iter().collect(),
            ..Default::default()
        };
        expr.normalize();
        expr
    }

    pub fn normalize(&mut self) {
        let mut merged: BTreeMap<usize, Rational> = BTreeMap::new();
        for (v, c) in self.terms.drain(..) {
            *merged.entry(v).or_insert_with(Rational::zero) += c;
        }
        self.terms = merged.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let mut quad: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for ((u, v), c) in self.quadratic.drain(..) {
            let key = if u <= v { (u, v) } else { (v, u) };
            *quad.entry(key).or_insert_with(Rational::zero) += c;
        }
        self.quadratic = quad.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    }

    pub fn value(&self, values: &[Rational]) -> Rational {
        let linear: Rational = self.terms.iter().map(|(v, c)| c * values[*v]).sum();
        let quad: Rational = self
            .quadratic
            .iter()
            .map(|((u, v), c)| c * values[*u] * values[*v])
            .sum();
        self.bias + linear + quad
    }

    fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms
            .iter()
            .map(|(v, _)| *v)
            .chain(self.quadratic.iter().flat_map(|((u, v), _)| [*u, *v]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "==",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub label: String,
    pub lhs: LinearExpr,
    pub sense: Sense,
    pub rhs: Rational,
}

impl Constraint {
    pub fn violation(&self, lhs: Rational) -> Rational {
        let zero = Rational::zero();
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(zero),
            Sense::Ge => (self.rhs - lhs).max(zero),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Decoding entry: variable `var` is `x[item|location]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexEntry {
    pub item: String,
    pub location: String,
    #[serde(skip)]
    pub var: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CqmModel {
    pub variables: Vec<Variable>,
    pub objective: LinearExpr,
    pub constraints: Vec<Constraint>,
    pub var_index: Vec<IndexEntry>,
}

/// Values for every model variable, indexed like `CqmModel::variables`.
pub type Assignment = Vec<Rational>;

pub fn binary_assignment(bits: &[u8]) -> Assignment {
    bits.iter().map(|&b| rational::int(i64::from(b))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(with = "rational")]
    pub objective_value: Rational,
    /// Non-zero violation magnitudes by constraint label; absent labels are satisfied.
    #[serde(serialize_with = "ser_violations", deserialize_with = "de_violations")]
    pub violations: BTreeMap<String, Rational>,
    pub feasible: bool,
}

fn ser_violations<S: serde::Serializer>(v: &BTreeMap<String, Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let as_text: BTreeMap<&str, Num> = v.iter().map(|(k, r)| (k.as_str(), Num(*r))).collect();
    as_text.serialize(s)
}

fn de_violations<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<String, Rational>, D::Error> {
    let raw: BTreeMap<String, Num> = BTreeMap::deserialize(d)?;
    Ok(raw.into_iter().map(|(k, n)| (k, n.0)).collect())
}

/// Rational with the project-wide JSON encoding, for use inside collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Num(#[serde(with = "rational")] pub Rational);

impl CqmModel {
    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn constraint(&self, label: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.label == label)
    }

    /// Variables grouped by item in `var_index` order; at most one per group
    /// can be 1 in a ground-placement assignment. Variables absent from the
    /// index form singleton groups.
    pub fn item_groups(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<&str> = Vec::new();
        let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut indexed = vec![false; self.variables.len()];
        for e in &self.var_index {
            if !groups.contains_key(e.item.as_str()) {
                order.push(&e.item);
            }
            groups.entry(&e.item).or_default().push(e.var);
            indexed[e.var] = true;
        }
        let mut out: Vec<Vec<usize>> = order.into_iter().map(|k| groups.remove(k).unwrap()).collect();
        out.extend((0..self.variables.len()).filter(|&v| !indexed[v]).map(|v| vec![v]));
        out
    }

    fn check_structure(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for v in &self.variables {
            if !ids.insert(v.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate variable id `{}`", v.id)));
            }
            if v.vartype != VarType::Binary && v.bounds.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "variable `{}` needs explicit bounds",
                    v.id
                )));
            }
        }
        let n = self.variables.len();
        let exprs = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.lhs));
        for e in exprs {
            if let Some(v) = e.variables().find(|&v| v >= n) {
                return Err(Error::UnknownVariable(format!("#{v}")));
            }
        }
        let mut labels = HashSet::new();
        for c in &self.constraints {
            if !labels.insert(c.label.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate constraint label `{}`",
                    c.label
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDoc::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        doc.into_model()
    }
}

pub fn variable_id(item: &str, location: &str) -> String {
    format!("x[{item}|{location}]")
}

pub fn build_subwop_model(instance: &Instance) -> Result<CqmModel> {
    require_valid(instance)?;
    let mut variables = Vec::new();
    let mut var_index = Vec::new();
    let mut by_item: Vec<Vec<usize>> = vec![Vec::new(); instance.num_items()];
    let mut by_location: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); instance.num_locations()];

    for (i, item) in instance.items().iter().enumerate() {
        for (l, loc) in instance.locations().iter().enumerate() {
            if !instance.eligible(i, l) {
                continue;
            }
            let var = variables.len();
            variables.push(Variable::binary(variable_id(&item.id, &loc.id)));
            var_index.push(IndexEntry {
                item: item.id.clone(),
                location: loc.id.clone(),
                var,
            });
            by_item[i].push(var);
            by_location[l].push((var, rational::int(instance.area(i))));
        }
    }

    let one = rational::int(1);
    let objective = LinearExpr::from_terms((0..variables.len()).map(|v| (v, -one)));
    let mut constraints = Vec::new();
    for (i, item) in instance.items().iter().enumerate() {
        constraints.push(Constraint {
            label: format!("one-loc:{}", item.id),
            lhs: LinearExpr::from_terms(by_item[i].iter().map(|&v| (v, one))),
            sense: Sense::Le,
            rhs: one,
        });
    }
    for (l, loc) in instance.locations().iter().enumerate() {
        constraints.push(Constraint {
            label: format!("cap:{}", loc.id),
            lhs: LinearExpr::from_terms(by_location[l].iter().copied()),
            sense: Sense::Le,
            rhs: rational::int(loc.capacity),
        });
    }
    for (i, item) in instance.items().iter().enumerate() {
        if instance.item_type(i).is_stackable() {
            continue;
        }
        if by_item[i].is_empty() {
            return Err(Error::StructurallyInfeasible { item: item.id.clone() });
        }
        constraints.push(Constraint {
            label: format!("must-place:{}", item.id),
            lhs: LinearExpr::from_terms(by_item[i].iter().map(|&v| (v, one))),
            sense: Sense::Ge,
            rhs: one,
        });
    }

    Ok(CqmModel {
        variables,
        objective,
        constraints,
        var_index,
    })
}

pub fn evaluate(model: &CqmModel, assignment: &[Rational]) -> Result<Evaluation> {
    if assignment.len() < model.variables.len() {
        return Err(Error::MissingValue(model.variables[assignment.len()].id.clone()));
    }
    if assignment.len() > model.variables.len() {
        return Err(Error::UnknownVariable(format!("#{}", model.variables.len())));
    }
    for (var, value) in model.variables.iter().zip(assignment) {
        if !var.admits(value) {
            return Err(Error::OutOfDomain {
                var: var.id.clone(),
                value: rational::format(value),
            });
        }
    }
    let objective_value = model.objective.value(assignment);
    let violations: BTreeMap<String, Rational> = model
        .constraints
        .iter()
        .map(|c| (c.label.clone(), c.violation(c.lhs.value(assignment))))
        .filter(|(_, v)| !v.is_zero())
        .collect();
    Ok(Evaluation {
        objective_value,
        feasible: violations.is_empty(),
        violations,
    })
}

/// Decodes the per-item location rows of `assignment`.
pub fn assignment_to_partial(
    assignment: &[Rational],
    model: &CqmModel,
    instance: &Instance,
) -> Result<PartialSolution> {
    let items: HashMap<&str, usize> = instance
        .items()
        .iter()
        .enumerate()
        .map(|(i, it)| (it.id.as_str(), i))
        .collect();
    let locations: HashMap<&str, usize> = instance
        .locations()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.id.as_str(), i))
        .collect();
    let mut partial = PartialSolution::unplaced(instance.num_items());
    for e in &model.var_index {
        let value = assignment
            .get(e.var)
            .ok_or_else(|| Error::MissingValue(model.variables[e.var].id.clone()))?;
        if value.is_zero() {
            continue;
        }
        if *value != rational::int(1) {
            return Err(Error::OutOfDomain {
                var: model.variables[e.var].id.clone(),
                value: rational::format(value),
            });
        }
        let (Some(&i), Some(&l)) = (items.get(e.item.as_str()), locations.get(e.location.as_str())) else {
            return Err(Error::InvalidInstance(format!(
                "model references `{}`@`{}` which the instance lacks",
                e.item, e.location
            )));
        };
        if partial.assignments[i].replace(l).is_some() {
            return Err(Error::MultiPlacement(e.item.clone()));
        }
    }
    Ok(partial)
}

// ---- JSON exchange format ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    id: String,
    vartype: VarType,
    #[serde(default)]
    bounds: Option<(Num, Num)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadDoc {
    u: String,
    v: String,
    coeff: Num,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExprDoc {
    terms: BTreeMap<String, Num>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    quadratic: Vec<QuadDoc>,
    #[serde(default = "zero_num")]
    bias: Num,
}

fn zero_num() -> Num {
    Num(Rational::zero())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    label: String,
    terms: BTreeMap<String, Num>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    quadratic: Vec<QuadDoc>,
    sense: Sense,
    rhs: Num,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexDoc {
    item: String,
    location: String,
    var: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    variables: Vec<VariableDoc>,
    objective: ExprDoc,
    constraints: Vec<ConstraintDoc>,
    #[serde(default)]
    var_index: Vec<IndexDoc>,
}

impl From<&CqmModel> for ModelDoc {
    fn from(m: &CqmModel) -> Self {
        let name = |v: usize| m.variables[v].id.clone();
        let terms = |e: &LinearExpr| e.terms.iter().map(|(v, c)| (name(*v), Num(*c))).collect();
        let quad = |e: &LinearExpr| {
            e.quadratic
                .iter()
                .map(|((u, v), c)| QuadDoc {
                    u: name(*u),
                    v: name(*v),
                    coeff: Num(*c),
                })
                .collect()
        };
        ModelDoc {
            variables: m
                .variables
                .iter()
                .map(|v| VariableDoc {
                    id: v.id.clone(),
                    vartype: v.vartype,
                    bounds: v.bounds.map(|(lo, hi)| (Num(lo), Num(hi))),
                })
                .collect(),
            objective: ExprDoc {
                terms: terms(&m.objective),
                quadratic: quad(&m.objective),
                bias: Num(m.objective.bias),
            },
            constraints: m
                .constraints
                .iter()
                .map(|c| ConstraintDoc {
                    label: c.label.clone(),
                    terms: terms(&c.lhs),
                    quadratic: quad(&c.lhs),
                    sense: c.sense,
                    rhs: Num(c.rhs),
                })
                .collect(),
            var_index: m
                .var_index
                .iter()
                .map(|e| IndexDoc {
                    item: e.item.clone(),
                    location: e.location.clone(),
                    var: name(e.var),
                })
                .collect(),
        }
    }
}

impl ModelDoc {
    fn into_model(self) -> Result<CqmModel> {
        let variables: Vec<Variable> = self
            .variables
            .into_iter()
            .map(|v| Variable {
                id: v.id,
                vartype: v.vartype,
                bounds: v.bounds.map(|(lo, hi)| (lo.0, hi.0)),
            })
            .collect();
        let lookup: HashMap<String, usize> = variables.iter().enumerate().map(|(i, v)| (v.id.clone(), i)).collect();
        let resolve = |id: &str| {
            lookup
                .get(id)
                .copied()
                .ok_or_else(|| Error::UnknownVariable(id.to_string()))
        };
        let expr = |terms: BTreeMap<String, Num>, quadratic: Vec<QuadDoc>, bias: Rational| -> Result<LinearExpr> {
            let mut e = LinearExpr {
                terms: terms
                    .into_iter()
                    .map(|(k, c)| Ok((resolve(&k)?, c.0)))
                    .collect::<Result<_>>()?,
                quadratic: quadratic
                    .into_iter()
                    .map(|q| Ok(((resolve(&q.u)?, resolve(&q.v)?), q.coeff.0)))
                    .collect::<Result<_>>()?,
                bias,
            };
            e.normalize();
            Ok(e)
        };
        let objective = expr(self.objective.terms, self.objective.quadratic, self.objective.bias.0)?;
        let constraints = self
            .constraints
            .into_iter()
            .map(|c| {
                Ok(Constraint {
                    label: c.label,
                    lhs: expr(c.terms, c.quadratic, Rational::zero())?,
                    sense: c.sense,
                    rhs: c.rhs.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let var_index = self
            .var_index
            .into_iter()
            .map(|e| {
                Ok(IndexEntry {
                    var: resolve(&e.var)?,
                    item: e.item,
                    location: e.location,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = CqmModel {
            variables,
            objective,
            constraints,
            var_index,
        };
        model.check_structure()?;
        Ok(model)
    }
}

/// Largest absolute linear coefficient over all constraints (0 if none).
pub(crate) fn max_constraint_coefficient(model: &CqmModel) -> Rational {
    model
        .constraints
        .iter()
        .flat_map(|c| c.lhs.terms.iter().map(|(_, k)| k.abs()))
        .max()
        .unwrap_or_else(Rational::zero)
}
