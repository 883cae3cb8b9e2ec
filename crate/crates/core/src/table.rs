//! Dense row-major arrays with JSON nested-array conversion.

use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    shape: Vec<usize>,
    strides: Vec<usize>,
    data: Vec<f64>,
}

fn strides_for(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

impl Table {
    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let len = shape.iter().product();
        Table {
            shape: shape.to_vec(),
            strides: strides_for(shape),
            data: vec![value; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::InvalidInput(format!(
                "table of shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Table {
            shape: shape.to_vec(),
            strides: strides_for(shape),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    #[inline]
    pub fn add(&mut self, idx: &[usize], value: f64) {
        let o = self.offset(idx);
        self.data[o] += value;
    }

    /// The contiguous slice along the last axis at the given leading index.
    pub fn row(&self, lead: &[usize]) -> &[f64] {
        debug_assert_eq!(lead.len() + 1, self.shape.len());
        let last = *self.shape.last().unwrap_or(&1);
        let o: usize = lead.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
        &self.data[o..o + last]
    }

    pub fn row_mut(&mut self, lead: &[usize]) -> &mut [f64] {
        let last = *self.shape.last().unwrap_or(&1);
        let o: usize = lead.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
        &mut self.data[o..o + last]
    }

    /// Iterates over all multi-indices of the leading axes (every axis but the last).
    pub fn leading_indices(&self) -> MultiIndex {
        MultiIndex::new(&self.shape[..self.shape.len().saturating_sub(1)])
    }

    pub fn from_nested(value: &Value, shape: &[usize], path: &str) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.iter().product());
        flatten(value, shape, path, &mut data)?;
        Table::from_vec(shape, data)
    }

    pub fn to_nested(&self) -> Value {
        nest(&self.data, &self.shape)
    }
}

fn flatten(value: &Value, shape: &[usize], path: &str, out: &mut Vec<f64>) -> Result<()> {
    match shape.split_first() {
        None => match value.as_f64() {
            Some(v) => {
                out.push(v);
                Ok(())
            }
            None => Err(Error::schema(path, "expected a number")),
        },
        Some((&len, rest)) => {
            let items = value
                .as_array()
                .ok_or_else(|| Error::schema(path, format!("expected an array of length {len}")))?;
            if items.len() != len {
                return Err(Error::schema(
                    path,
                    format!("expected length {len}, found {}", items.len()),
                ));
            }
            for (i, item) in items.iter().enumerate() {
                flatten(item, rest, &format!("{path}[{i}]"), out)?;
            }
            Ok(())
        }
    }
}

fn nest(data: &[f64], shape: &[usize]) -> Value {
    match shape.split_first() {
        None => Value::from(data[0]),
        Some((&len, rest)) => {
            let chunk: usize = rest.iter().product();
            Value::Array((0..len).map(|i| nest(&data[i * chunk..(i + 1) * chunk], rest)).collect())
        }
    }
}

/// Odometer over a rectangular index set.
#[derive(Debug, Clone)]
pub struct MultiIndex {
    shape: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub fn new(shape: &[usize]) -> Self {
        MultiIndex {
            shape: shape.to_vec(),
            current: vec![0; shape.len()],
            done: shape.iter().any(|&s| s == 0),
        }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut k = self.shape.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.current[k] += 1;
            if self.current[k] < self.shape[k] {
                break;
            }
            self.current[k] = 0;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_round_trip() {
        let t = Table::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let v = t.to_nested();
        assert_eq!(v.to_string(), "[[1.0,2.0,3.0],[4.0,5.0,6.0]]");
        let back = Table::from_nested(&v, &[2, 3], "t").unwrap();
        assert_eq!(back, t);
        assert_eq!(back.row(&[1]), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn wrong_length_names_path() {
        let v: Value = serde_json::from_str("[[1,2],[3]]").unwrap();
        let err = Table::from_nested(&v, &[2, 2], "tables.p_x").unwrap_err();
        assert!(err.to_string().contains("tables.p_x[1]"), "{err}");
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(MultiIndex::new(&[2, 3, 2]).count(), 12);
        assert_eq!(MultiIndex::new(&[]).count(), 1);
        assert_eq!(MultiIndex::new(&[2, 0]).count(), 0);
    }
}
