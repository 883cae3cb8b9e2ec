//! Discrete structural causal models over (X, U, A, M, Z, W, Y).
//!
//! Every conditional table declares its parent set explicitly (`given`), a
//! subset of the structural predecessors listed in fixed order. Absent
//! parents are simply omitted, so exclusions of the proxy model show up as
//! missing arguments, and a table that names a forbidden parent is caught
//! by validation only if its values actually vary along it.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::space::{Assignment, FiniteSpace, Var};
use crate::error::{Error, Result};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Mediation,
    FrontDoor,
    GeneralizedFrontDoor,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mediation => "mediation",
            ModelKind::FrontDoor => "front_door",
            ModelKind::GeneralizedFrontDoor => "generalized_front_door",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "mediation" => Some(ModelKind::Mediation),
            "front_door" => Some(ModelKind::FrontDoor),
            "generalized_front_door" => Some(ModelKind::GeneralizedFrontDoor),
            _ => None,
        }
    }

    /// Which of (ψ₁, ψ₂, ψ₃) the proxy identification formulas recover
    /// under this model's assumptions.
    pub fn identified(self) -> [bool; 3] {
        match self {
            ModelKind::Mediation => [true, false, true],
            ModelKind::FrontDoor => [false, true, true],
            ModelKind::GeneralizedFrontDoor => [false, false, true],
        }
    }
}

/// A conditional table: for each configuration of `given`, either a
/// distribution over the child's levels or (for a continuous outcome) a mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CondTable {
    pub child: Var,
    pub given: Vec<Var>,
    pub values: Table,
    pub is_mean: bool,
}

impl CondTable {
    pub fn new(child: Var, given: Vec<Var>, values: Table, is_mean: bool) -> Self {
        CondTable {
            child,
            given,
            values,
            is_mean,
        }
    }

    fn lead(&self, assign: &Assignment) -> Vec<usize> {
        self.given.iter().map(|v| assign[v.ordinal()]).collect()
    }

    /// Distribution over the child given a full assignment of predecessors.
    pub fn row(&self, assign: &Assignment) -> &[f64] {
        debug_assert!(!self.is_mean);
        self.values.row(&self.lead(assign))
    }

    pub fn prob(&self, assign: &Assignment, child_level: usize) -> f64 {
        self.row(assign)[child_level]
    }

    pub fn mean(&self, assign: &Assignment) -> f64 {
        debug_assert!(self.is_mean);
        self.values.get(&self.lead(assign))
    }

    /// First leading-index pair (as full given-index vectors) at which the
    /// table varies along `var` by more than `tol`; `None` if it is invariant.
    pub fn variation_along(&self, var: Var, tol: f64) -> Option<Vec<usize>> {
        let axis = self.given.iter().position(|&g| g == var)?;
        let shape = self.values.shape().to_vec();
        let levels = shape[axis];
        for idx in crate::table::MultiIndex::new(&shape) {
            if idx[axis] != 0 {
                continue;
            }
            let base = self.values.get(&idx);
            for l in 1..levels {
                let mut other = idx.clone();
                other[axis] = l;
                if (self.values.get(&other) - base).abs() > tol {
                    return Some(other);
                }
            }
        }
        None
    }

    fn shape_for(space: &FiniteSpace, child: Var, given: &[Var], is_mean: bool) -> Vec<usize> {
        let mut shape: Vec<usize> = given.iter().map(|&v| space.levels(v)).collect();
        if !is_mean {
            shape.push(space.levels(child));
        }
        shape
    }

    fn to_json(&self) -> Value {
        json!({
            "given": self.given.iter().map(|v| v.name()).collect::<Vec<_>>(),
            "values": self.values.to_nested(),
        })
    }

    fn from_json(
        value: &Value,
        space: &FiniteSpace,
        child: Var,
        is_mean: bool,
        path: &str,
    ) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema(path, "expected an object with `given` and `values`"))?;
        let given_path = format!("{path}.given");
        let given_raw = match obj.get("given") {
            Some(g) => g
                .as_array()
                .ok_or_else(|| Error::schema(&given_path, "expected an array of variable names"))?
                .clone(),
            None => Vec::new(),
        };
        let mut given = Vec::with_capacity(given_raw.len());
        for (i, g) in given_raw.iter().enumerate() {
            let p = format!("{given_path}[{i}]");
            let name = g.as_str().ok_or_else(|| Error::schema(&p, "expected a string"))?;
            let var =
                Var::from_name(name).ok_or_else(|| Error::schema(&p, format!("unknown variable `{name}`")))?;
            if !child.predecessors().contains(&var) {
                return Err(Error::schema(
                    &p,
                    format!("`{name}` cannot be a parent of `{}`", child.name()),
                ));
            }
            if var == Var::U && !space.has_u() {
                return Err(Error::schema(&p, "`u` given but space.u_levels = 0"));
            }
            if let Some(&prev) = given.last() {
                if var <= prev {
                    return Err(Error::schema(&p, "parents must follow the order x,u,a,m,z,w"));
                }
            }
            given.push(var);
        }
        let shape = Self::shape_for(space, child, &given, is_mean);
        let values_path = format!("{path}.values");
        let values = obj
            .get("values")
            .ok_or_else(|| Error::schema(&values_path, "missing"))?;
        let values = Table::from_nested(values, &shape, &values_path)?;
        Ok(CondTable::new(child, given, values, is_mean))
    }
}

/// Outcome mechanism: a full conditional law or, for continuous Y, a
/// conditional mean plus Gaussian noise used only when sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeModel {
    Discrete(CondTable),
    Continuous { mean: CondTable, noise_sd: f64 },
}

impl OutcomeModel {
    pub fn table(&self) -> &CondTable {
        match self {
            OutcomeModel::Discrete(t) => t,
            OutcomeModel::Continuous { mean, .. } => mean,
        }
    }
}

/// Discrete structural causal model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmSpec {
    pub name: String,
    pub space: FiniteSpace,
    pub model_kind: ModelKind,
    pub p_x: CondTable,
    pub p_u: Option<CondTable>,
    pub p_a: CondTable,
    pub p_m: CondTable,
    pub p_z: CondTable,
    pub p_w: CondTable,
    pub y: OutcomeModel,
}

pub(crate) const TABLE_KEYS: [(&str, Var); 6] = [
    ("p_x", Var::X),
    ("p_u", Var::U),
    ("p_a", Var::A),
    ("p_m", Var::M),
    ("p_z", Var::Z),
    ("p_w", Var::W),
];

impl ScmSpec {
    /// Conditional tables in structural order, with their JSON keys.
    pub fn tables(&self) -> Vec<(&'static str, &CondTable)> {
        let mut out = vec![("p_x", &self.p_x)];
        if let Some(u) = &self.p_u {
            out.push(("p_u", u));
        }
        out.extend([
            ("p_a", &self.p_a),
            ("p_m", &self.p_m),
            ("p_z", &self.p_z),
            ("p_w", &self.p_w),
        ]);
        match &self.y {
            OutcomeModel::Discrete(t) => out.push(("p_y", t)),
            OutcomeModel::Continuous { mean, .. } => out.push(("mean_y", mean)),
        }
        out
    }

    /// Conditional mean of Y given a full assignment of its predecessors.
    pub fn y_mean(&self, assign: &Assignment) -> f64 {
        match &self.y {
            OutcomeModel::Discrete(t) => t
                .row(assign)
                .iter()
                .enumerate()
                .map(|(l, p)| p * self.space.y_value(l))
                .sum(),
            OutcomeModel::Continuous { mean, .. } => mean.mean(assign),
        }
    }

    pub fn p_u_given_x(&self, assign: &Assignment) -> f64 {
        match &self.p_u {
            Some(t) => t.prob(assign, assign[1]),
            None => 1.0,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut tables = Map::new();
        for (key, t) in self.tables() {
            tables.insert(key.to_string(), t.to_json());
        }
        let mut obj = Map::new();
        obj.insert("name".into(), Value::from(self.name.clone()));
        obj.insert("model_kind".into(), Value::from(self.model_kind.name()));
        obj.insert("space".into(), serde_json::to_value(&self.space).expect("space serializes"));
        obj.insert("tables".into(), Value::Object(tables));
        if let OutcomeModel::Continuous { noise_sd, .. } = &self.y {
            obj.insert("y_noise_sd".into(), Value::from(*noise_sd));
        }
        Value::Object(obj)
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema("$", "expected a JSON object"))?;
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .unwrap_or("unnamed")
            .to_string();
        let kind_raw = obj
            .get("model_kind")
            .ok_or_else(|| Error::schema("model_kind", "missing"))?;
        let model_kind = kind_raw
            .as_str()
            .and_then(ModelKind::from_name)
            .ok_or_else(|| {
                Error::schema(
                    "model_kind",
                    "expected one of mediation, front_door, generalized_front_door",
                )
            })?;
        let space_raw = obj.get("space").ok_or_else(|| Error::schema("space", "missing"))?;
        let space: FiniteSpace = serde_json::from_value(space_raw.clone())
            .map_err(|e| Error::schema("space", e.to_string()))?;
        space.validate()?;

        let tables = obj
            .get("tables")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::schema("tables", "missing or not an object"))?;
        let known: BTreeMap<&str, ()> = TABLE_KEYS
            .iter()
            .map(|(k, _)| (*k, ()))
            .chain([("p_y", ()), ("mean_y", ())])
            .collect();
        if let Some(k) = tables.keys().find(|k| !known.contains_key(k.as_str())) {
            return Err(Error::schema(format!("tables.{k}"), "unknown table"));
        }

        let get = |key: &str, var: Var| -> Result<CondTable> {
            let path = format!("tables.{key}");
            let v = tables.get(key).ok_or_else(|| Error::schema(&path, "missing"))?;
            CondTable::from_json(v, &space, var, false, &path)
        };
        let p_x = get("p_x", Var::X)?;
        let p_u = if space.has_u() {
            Some(get("p_u", Var::U)?)
        } else {
            if tables.contains_key("p_u") {
                return Err(Error::schema("tables.p_u", "present but space.u_levels = 0"));
            }
            None
        };
        let p_a = get("p_a", Var::A)?;
        let p_m = get("p_m", Var::M)?;
        let p_z = get("p_z", Var::Z)?;
        let p_w = get("p_w", Var::W)?;
        let y = if space.y_continuous {
            let v = tables
                .get("mean_y")
                .ok_or_else(|| Error::schema("tables.mean_y", "missing (space.y_continuous = true)"))?;
            let mean = CondTable::from_json(v, &space, Var::Y, true, "tables.mean_y")?;
            let noise_sd = match obj.get("y_noise_sd") {
                None => 1.0,
                Some(v) => v
                    .as_f64()
                    .filter(|s| *s >= 0.0 && s.is_finite())
                    .ok_or_else(|| Error::schema("y_noise_sd", "expected a non-negative number"))?,
            };
            OutcomeModel::Continuous { mean, noise_sd }
        } else {
            OutcomeModel::Discrete(get("p_y", Var::Y)?)
        };
        Ok(ScmSpec {
            name,
            space,
            model_kind,
            p_x,
            p_u,
            p_a,
            p_m,
            p_z,
            p_w,
            y,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::schema("$", e.to_string()))?;
        Self::from_json(&v)
    }

    /// Every joint configuration of (x, u, a, m, z, w) together with its
    /// probability, by the chain rule in structural order.
    pub fn enumerate(&self) -> impl Iterator<Item = (Assignment, f64)> + '_ {
        let s = &self.space;
        let shape = [
            s.levels(Var::X),
            s.levels(Var::U),
            s.levels(Var::A),
            s.levels(Var::M),
            s.levels(Var::Z),
            s.levels(Var::W),
        ];
        crate::table::MultiIndex::new(&shape).map(move |idx| {
            let a: Assignment = [idx[0], idx[1], idx[2], idx[3], idx[4], idx[5]];
            let p = self.p_x.prob(&a, a[0])
                * self.p_u_given_x(&a)
                * self.p_a.prob(&a, a[2])
                * self.p_m.prob(&a, a[3])
                * self.p_z.prob(&a, a[4])
                * self.p_w.prob(&a, a[5]);
            (a, p)
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Deterministic chain M = A, Z = W = M, Y = M with uniform X and A.
    pub(crate) fn deterministic_spec() -> ScmSpec {
        let json = r#"{
            "name": "det",
            "model_kind": "mediation",
            "space": {"x_levels": 1, "a_levels": 2, "m_levels": 2, "z_levels": 2, "w_levels": 2, "y_levels": 2},
            "tables": {
                "p_x": {"given": [], "values": [1.0]},
                "p_a": {"given": ["x"], "values": [[0.5, 0.5]]},
                "p_m": {"given": ["a"], "values": [[1.0, 0.0], [0.0, 1.0]]},
                "p_z": {"given": ["m"], "values": [[1.0, 0.0], [0.0, 1.0]]},
                "p_w": {"given": ["m"], "values": [[1.0, 0.0], [0.0, 1.0]]},
                "p_y": {"given": ["m"], "values": [[1.0, 0.0], [0.0, 1.0]]}
            }
        }"#;
        ScmSpec::from_json_str(json).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let spec = deterministic_spec();
        let back = ScmSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn enumerate_sums_to_one() {
        let spec = deterministic_spec();
        let total: f64 = spec.enumerate().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn forbidden_parent_names_key_path() {
        let json = r#"{
            "model_kind": "mediation",
            "space": {"x_levels": 1, "a_levels": 2, "m_levels": 2, "z_levels": 2, "w_levels": 2, "y_levels": 2},
            "tables": {
                "p_x": {"given": [], "values": [1.0]},
                "p_a": {"given": ["y"], "values": [[0.5, 0.5], [0.5, 0.5]]}
            }
        }"#;
        let err = ScmSpec::from_json_str(json).unwrap_err();
        assert!(err.to_string().contains("tables.p_a.given[0]"), "{err}");
    }

    #[test]
    fn missing_table_is_schema_error() {
        let json = r#"{"model_kind": "mediation",
            "space": {"x_levels": 1, "a_levels": 2, "m_levels": 2, "z_levels": 2, "w_levels": 2, "y_levels": 2},
            "tables": {"p_x": {"given": [], "values": [1.0]}}}"#;
        let err = ScmSpec::from_json_str(json).unwrap_err();
        assert!(matches!(err, Error::Schema { ref path, .. } if path == "tables.p_a"), "{err}");
    }

    #[test]
    fn variation_detects_dependence() {
        let spec = deterministic_spec();
        assert!(spec.p_m.variation_along(Var::A, 1e-12).is_some());
        assert!(spec.p_w.variation_along(Var::A, 1e-12).is_none());
    }
}
