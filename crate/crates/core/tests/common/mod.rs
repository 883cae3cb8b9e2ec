//! Test-only reference computations by exhaustive enumeration. Deliberately
//! independent of the library: tables are read straight from the spec JSON
//! and every configuration of (x, u, a, m, z, w, y) is visited.

#![allow(dead_code)]

use std::collections::BTreeMap;

use serde_json::Value;

const VARS: [&str; 7] = ["x", "u", "a", "m", "z", "w", "y"];

pub struct BruteSpec {
    levels: BTreeMap<&'static str, usize>,
    tables: BTreeMap<String, (Vec<String>, Value)>,
    y_values: Vec<f64>,
}

impl BruteSpec {
    pub fn from_json(text: &str) -> Self {
        let v: Value = serde_json::from_str(text).unwrap();
        let space = &v["space"];
        let lv = |k: &str| space[k].as_u64().unwrap_or(0) as usize;
        let mut levels = BTreeMap::new();
        levels.insert("x", lv("x_levels"));
        levels.insert("u", lv("u_levels").max(1));
        levels.insert("a", lv("a_levels"));
        levels.insert("m", lv("m_levels"));
        levels.insert("z", lv("z_levels"));
        levels.insert("w", lv("w_levels"));
        levels.insert("y", lv("y_levels"));
        let y_values = match space.get("y_values").and_then(Value::as_array) {
            Some(vals) => vals.iter().map(|v| v.as_f64().unwrap()).collect(),
            None => (0..lv("y_levels")).map(|k| k as f64).collect(),
        };
        let mut tables = BTreeMap::new();
        for (k, t) in v["tables"].as_object().unwrap() {
            let given = t["given"]
                .as_array()
                .unwrap()
                .iter()
                .map(|g| g.as_str().unwrap().to_string())
                .collect();
            tables.insert(k.clone(), (given, t["values"].clone()));
        }
        BruteSpec {
            levels,
            tables,
            y_values,
        }
    }

    pub fn levels(&self, var: &str) -> usize {
        self.levels[var]
    }

    /// p(var = val | parents) with parent values read from `asg`.
    fn prob(&self, var: &str, val: usize, asg: &BTreeMap<&str, usize>) -> f64 {
        let Some((given, values)) = self.tables.get(&format!("p_{var}")) else {
            // absent table (no U): point mass at 0
            return if val == 0 { 1.0 } else { 0.0 };
        };
        let mut node = values;
        for g in given {
            node = &node[asg[g.as_str()]];
        }
        node[val].as_f64().unwrap()
    }

    /// Every configuration with its probability, where the A entering each
    /// child's mechanism may be overridden: `a_m` for M, `a_rest` for Z, W
    /// and Y (`None` keeps the natural A).
    fn enumerate(&self, a_m: Option<usize>, a_rest: Option<usize>, mut f: impl FnMut(&BTreeMap<&str, usize>, f64)) {
        let dims: Vec<usize> = VARS.iter().map(|v| self.levels[v]).collect();
        let total: usize = dims.iter().product();
        for mut code in 0..total {
            let mut asg = BTreeMap::new();
            for (i, v) in VARS.iter().enumerate().rev() {
                asg.insert(*v, code % dims[i]);
                code /= dims[i];
            }
            let natural = asg["a"];
            let mut p = 1.0;
            for v in VARS {
                let mut view = asg.clone();
                let over = match v {
                    "m" => a_m,
                    "z" | "w" | "y" => a_rest,
                    _ => None,
                };
                view.insert("a", over.unwrap_or(natural));
                p *= self.prob(v, asg[v], &view);
                if p == 0.0 {
                    break;
                }
            }
            if p > 0.0 {
                f(&asg, p);
            }
        }
    }

    /// E[Y^(a_rest, M^(a_m))].
    pub fn counterfactual_mean(&self, a_m: usize, a_rest: Option<usize>) -> f64 {
        let mut s = 0.0;
        self.enumerate(Some(a_m), a_rest, |asg, p| s += p * self.y_values[asg["y"]]);
        s
    }

    /// (ψ₁, ψ₂, ψ₃) at (a, a′).
    pub fn estimands(&self, a: usize, a_prime: usize) -> [f64; 3] {
        [
            self.counterfactual_mean(a, Some(a_prime)),
            self.counterfactual_mean(a, Some(a)),
            self.counterfactual_mean(a, None),
        ]
    }

    /// Observed law: p(x,a,z,w) and Σ_y y p(x,a,z,w,y), keyed by (x,a,z,w).
    pub fn observed(&self) -> BTreeMap<[usize; 4], (f64, f64)> {
        let mut out: BTreeMap<[usize; 4], (f64, f64)> = BTreeMap::new();
        self.enumerate(None, None, |asg, p| {
            let e = out.entry([asg["x"], asg["a"], asg["z"], asg["w"]]).or_default();
            e.0 += p;
            e.1 += p * self.y_values[asg["y"]];
        });
        out
    }

    /// Full-data law keyed by (x,a,m,z,w).
    pub fn full(&self) -> BTreeMap<[usize; 5], f64> {
        let mut out: BTreeMap<[usize; 5], f64> = BTreeMap::new();
        self.enumerate(None, None, |asg, p| {
            *out.entry([asg["x"], asg["a"], asg["m"], asg["z"], asg["w"]]).or_default() += p;
        });
        out
    }
}

/// Observed probability of (x,a,z,w) and E[Y | x,a,z,w].
pub fn cell(obs: &BTreeMap<[usize; 4], (f64, f64)>, k: [usize; 4]) -> (f64, f64) {
    let (p, sy) = obs.get(&k).copied().unwrap_or((0.0, 0.0));
    (p, if p > 0.0 { sy / p } else { 0.0 })
}
