//! Observed samples and their CSV form (`x,a,z,w,y`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::population::PopulationJoint;
use super::space::FiniteSpace;
use crate::error::{Error, Result};
use crate::io::format_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub x: f64,
    pub a: usize,
    pub z: f64,
    pub w: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    pub source: String,
    /// Name of the generator algorithm behind `seed`.
    pub rng: Option<String>,
}

/// i.i.d. records, optionally carrying frequency weights (used to represent
/// an enumerated population as a weighted sample).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub weights: Option<Vec<f64>>,
    pub meta: DatasetMeta,
}

/// Integer level of a coded value, if it is one.
pub fn level_of(v: f64, levels: usize) -> Option<usize> {
    if v >= 0.0 && v.fract() == 0.0 && (v as usize) < levels {
        Some(v as usize)
    } else {
        None
    }
}

impl Dataset {
    pub fn new(records: Vec<Record>, meta: DatasetMeta) -> Self {
        Dataset {
            records,
            weights: None,
            meta,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights
            .as_ref()
            .map_or(self.records.len() as f64, |w| w.iter().sum())
    }

    /// Every observed cell of the population as one record with its
    /// probability times `total_mass` as frequency weight and E[Y | cell]
    /// as outcome. Every estimator is linear in Y given (X, A, Z, W), so
    /// weighted means over this dataset equal population expectations.
    pub fn from_population(pop: &PopulationJoint, total_mass: f64) -> Self {
        let [nx, na, nz, nw] = pop.dims();
        let mut records = Vec::new();
        let mut weights = Vec::new();
        for x in 0..nx {
            for a in 0..na {
                for z in 0..nz {
                    for w in 0..nw {
                        let p = pop.cell(x, a, z, w);
                        if p > 0.0 {
                            records.push(Record {
                                x: x as f64,
                                a,
                                z: z as f64,
                                w: w as f64,
                                y: pop.ey(x, a, z, w),
                            });
                            weights.push(p * total_mass);
                        }
                    }
                }
            }
        }
        Dataset {
            records,
            weights: Some(weights),
            meta: DatasetMeta {
                seed: None,
                source: format!("population:{}", pop.derived_from),
                rng: None,
            },
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            records: idx.iter().map(|&i| self.records[i]).collect(),
            weights: self
                .weights
                .as_ref()
                .map(|w| idx.iter().map(|&i| w[i]).collect()),
            meta: self.meta.clone(),
        }
    }

    /// Checks that every coded value lies in the space.
    pub fn check_discrete(&self, space: &FiniteSpace) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            let bad = |col: &str, v: f64| {
                Err(Error::InvalidInput(format!(
                    "record {i}: {col} = {v} is not a level of the space"
                )))
            };
            if level_of(r.x, space.x_levels).is_none() {
                return bad("x", r.x);
            }
            if r.a >= space.a_levels {
                return bad("a", r.a as f64);
            }
            if level_of(r.z, space.z_levels).is_none() {
                return bad("z", r.z);
            }
            if level_of(r.w, space.w_levels).is_none() {
                return bad("w", r.w);
            }
            if !r.y.is_finite() {
                return bad("y", r.y);
            }
        }
        Ok(())
    }

    /// A space covering the data, if every x, z and w is a non-negative integer.
    pub fn infer_space(&self) -> Option<FiniteSpace> {
        let levels = |f: &dyn Fn(&Record) -> f64| -> Option<usize> {
            let mut max = 0usize;
            for r in &self.records {
                let v = f(r);
                if !(v >= 0.0 && v.fract() == 0.0 && v < 1e6) {
                    return None;
                }
                max = max.max(v as usize);
            }
            Some(max + 1)
        };
        let x = levels(&|r| r.x)?;
        let z = levels(&|r| r.z)?;
        let w = levels(&|r| r.w)?;
        let a = self.records.iter().map(|r| r.a).max()? + 1;
        let m = z.min(w).max(2);
        Some(FiniteSpace {
            x_levels: x,
            u_levels: 0,
            a_levels: a.max(2),
            m_levels: m,
            z_levels: z.max(m),
            w_levels: w.max(m),
            y_levels: 0,
            y_continuous: true,
            y_values: None,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "a", "z", "w", "y"])?;
        for r in &self.records {
            wtr.write_record([
                format_f64(r.x),
                r.a.to_string(),
                format_f64(r.z),
                format_f64(r.w),
                format_f64(r.y),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr
            .headers()
            .map_err(|e| Error::schema("header", e.to_string()))?
            .clone();
        let expected = ["x", "a", "z", "w", "y"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::schema(
                "header",
                format!("expected `x,a,z,w,y`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| Error::schema(format!("row {}", i + 1), e.to_string()))?;
            let num = |k: usize| -> Result<f64> {
                let raw = &row[k];
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::schema(
                            format!("row {}.{}", i + 1, expected[k]),
                            format!("`{raw}` is not a finite number"),
                        )
                    })
            };
            let a_raw = num(1)?;
            let a = level_of(a_raw, usize::MAX).ok_or_else(|| {
                Error::schema(format!("row {}.a", i + 1), "treatment must be a non-negative integer")
            })?;
            records.push(Record {
                x: num(0)?,
                a,
                z: num(2)?,
                w: num(3)?,
                y: num(4)?,
            });
        }
        if records.is_empty() {
            return Err(Error::schema("rows", "dataset has no records"));
        }
        Ok(Dataset::new(
            records,
            DatasetMeta {
                seed: None,
                source: source.to_string(),
                rng: None,
            },
        ))
    }
}
