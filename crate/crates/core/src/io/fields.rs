//! Typed access to a TOML table that records every problem instead of stopping
//! at the first one.

use std::collections::BTreeSet;

use toml::{Table, Value};

pub(crate) struct Fields<'a, 'e> {
    table: &'a Table,
    prefix: String,
    seen: BTreeSet<String>,
    pub errors: &'e mut Vec<String>,
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn as_real(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl<'a, 'e> Fields<'a, 'e> {
    pub fn new(table: &'a Table, prefix: &str, errors: &'e mut Vec<String>) -> Self {
        Fields {
            table,
            prefix: prefix.to_string(),
            seen: BTreeSet::new(),
            errors,
        }
    }

    pub fn name(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.seen.insert(key.to_string());
        self.table.get(key)
    }

    fn wrong(&mut self, key: &str, want: &str, got: &Value) {
        let msg = format!("field {}: expected {want}, found {}", self.name(key), type_name(got));
        self.errors.push(msg);
    }

    pub fn require<T>(&mut self, key: &str, v: Option<T>) -> Option<T> {
        if v.is_none() && !self.table.contains_key(key) {
            let msg = format!("field {}: required but missing", self.name(key));
            self.errors.push(msg);
        }
        v
    }

    pub fn string(&mut self, key: &str) -> Option<String> {
        match self.raw(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.wrong(key, "a string", other);
                None
            }
        }
    }

    pub fn real(&mut self, key: &str) -> Option<f64> {
        let v = self.raw(key)?;
        match as_real(v) {
            Some(x) if x.is_finite() => Some(x),
            Some(_) => {
                let msg = format!("field {}: must be finite", self.name(key));
                self.errors.push(msg);
                None
            }
            None => {
                self.wrong(key, "a number", v);
                None
            }
        }
    }

    pub fn integer(&mut self, key: &str) -> Option<i64> {
        match self.raw(key)? {
            Value::Integer(i) => Some(*i),
            other => {
                self.wrong(key, "an integer", other);
                None
            }
        }
    }

    /// Nonnegative integer, at least `min`.
    pub fn count(&mut self, key: &str, min: u64) -> Option<usize> {
        let v = self.integer(key)?;
        if v < min as i64 {
            let msg = format!("field {}: must be >= {min}, got {v}", self.name(key));
            self.errors.push(msg);
            return None;
        }
        Some(v as usize)
    }

    pub fn seed(&mut self, key: &str) -> Option<u64> {
        self.count(key, 0).map(|v| v as u64)
    }

    pub fn reals(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.raw(key)?;
        let Value::Array(items) = v else {
            self.wrong(key, "an array of numbers", v);
            return None;
        };
        let out: Option<Vec<f64>> = items.iter().map(as_real).collect();
        if out.is_none() {
            let msg = format!("field {}: every entry must be a number", self.name(key));
            self.errors.push(msg);
        }
        out
    }

    pub fn counts(&mut self, key: &str, min: u64) -> Option<Vec<usize>> {
        let v = self.raw(key)?;
        let Value::Array(items) = v else {
            self.wrong(key, "an array of integers", v);
            return None;
        };
        let out: Option<Vec<usize>> = items
            .iter()
            .map(|x| match x {
                Value::Integer(i) if *i >= min as i64 => Some(*i as usize),
                _ => None,
            })
            .collect();
        if out.is_none() {
            let msg = format!("field {}: every entry must be an integer >= {min}", self.name(key));
            self.errors.push(msg);
        }
        out
    }

    /// Row-major matrix given as an array of equal-length rows.
    pub fn matrix(&mut self, key: &str) -> Option<Vec<Vec<f64>>> {
        let v = self.raw(key)?;
        let Value::Array(rows) = v else {
            self.wrong(key, "an array of rows", v);
            return None;
        };
        let out: Option<Vec<Vec<f64>>> = rows
            .iter()
            .map(|r| match r {
                Value::Array(xs) => xs.iter().map(as_real).collect(),
                _ => None,
            })
            .collect();
        match out {
            Some(m) if m.windows(2).all(|w| w[0].len() == w[1].len()) => Some(m),
            Some(_) => {
                let msg = format!("field {}: rows have different lengths", self.name(key));
                self.errors.push(msg);
                None
            }
            None => {
                let msg = format!("field {}: expected an array of arrays of numbers", self.name(key));
                self.errors.push(msg);
                None
            }
        }
    }

    /// One string or an array of strings.
    pub fn strings(&mut self, key: &str) -> Option<Vec<String>> {
        let v = self.raw(key)?;
        match v {
            Value::String(s) => Some(vec![s.clone()]),
            Value::Array(items) => {
                let out: Option<Vec<String>> = items.iter().map(|x| x.as_str().map(str::to_string)).collect();
                if out.is_none() {
                    let msg = format!("field {}: every entry must be a string", self.name(key));
                    self.errors.push(msg);
                }
                out
            }
            other => {
                self.wrong(key, "a string or an array of strings", other);
                None
            }
        }
    }

    pub fn table(&mut self, key: &str) -> Option<&'a Table> {
        match self.raw(key)? {
            Value::Table(t) => Some(t),
            other => {
                self.wrong(key, "a table", other);
                None
            }
        }
    }

    pub fn tables(&mut self, key: &str) -> Option<Vec<&'a Table>> {
        let v = self.raw(key)?;
        let Value::Array(items) = v else {
            self.wrong(key, "an array of tables", v);
            return None;
        };
        let out: Option<Vec<&Table>> = items.iter().map(|x| x.as_table()).collect();
        if out.is_none() {
            let msg = format!("field {}: every entry must be a table", self.name(key));
            self.errors.push(msg);
        }
        out
    }

    pub fn push(&mut self, msg: String) {
        self.errors.push(msg);
    }

    /// Report every key of the table that was never asked for, with the closest
    /// known key when one is near.
    pub fn finish(self, known: &[&str]) {
        for key in self.table.keys() {
            if self.seen.contains(key) {
                continue;
            }
            let name = self.name(key);
            let nearest = known
                .iter()
                .map(|k| (strsim::levenshtein(key, k), *k))
                .min()
                .filter(|(d, _)| *d <= 3.max(key.len() / 3));
            let msg = match nearest {
                Some((_, k)) => format!("unknown key `{name}`; did you mean `{}`?", self.name(k)),
                None => format!("unknown key `{name}`; valid keys are {}", known.join(", ")),
            };
            self.errors.push(msg);
        }
    }
}
