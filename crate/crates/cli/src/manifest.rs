//! Run manifests: everything needed to reproduce a run.
//!
//! `args` is the fully resolved flag list (output destinations excluded);
//! `herd <args...>` regenerates byte-identical data.

use serde_json::{json, Map, Value};

use crate::output::{fmt_num, num};

pub struct Manifest {
    command: &'static str,
    args: Vec<String>,
    sections: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            args: vec![command.to_string()],
            sections: Map::new(),
        }
    }

    /// Records `--name value` in the replay arguments and under `section`.
    pub fn real(&mut self, section: &str, name: &str, value: f64) -> &mut Self {
        self.args.push(format!("--{name}"));
        self.args.push(fmt_num(value));
        self.put(section, name, num(value))
    }

    pub fn count(&mut self, section: &str, name: &str, value: usize) -> &mut Self {
        self.args.push(format!("--{name}"));
        self.args.push(value.to_string());
        self.put(section, name, json!(value))
    }

    pub fn switch(&mut self, section: &str, name: &str, on: bool) -> &mut Self {
        if on {
            self.args.push(format!("--{name}"));
        }
        self.put(section, name, json!(on))
    }

    /// Recorded without affecting replay arguments.
    pub fn note(&mut self, section: &str, name: &str, value: Value) -> &mut Self {
        self.put(section, name, value)
    }

    fn put(&mut self, section: &str, name: &str, value: Value) -> &mut Self {
        let key = name.replace('-', "_");
        let entry = self
            .sections
            .entry(section.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(m) = entry {
            m.insert(key, value);
        }
        self
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("tool".into(), json!("herd"));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        m.insert("args".into(), json!(self.args));
        for (k, v) in &self.sections {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }
}
