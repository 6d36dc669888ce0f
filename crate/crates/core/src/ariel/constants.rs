use std::collections::BTreeMap;

use super::error::LangError;

/// Symbolic constants imported from `#define` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstantTable {
    values: BTreeMap<String, i64>,
}

impl ConstantTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.values.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn define(&mut self, name: impl Into<String>, value: i64) -> Result<(), LangError> {
        let name = name.into();
        if self.values.contains_key(&name) {
            return Err(LangError::DuplicateConstant(name));
        }
        self.values.insert(name, value);
        Ok(())
    }

    /// Adds every binding of `other`. Re-binding a name to the value it
    /// already has is accepted, so a header may be both supplied up front and
    /// included by the script.
    pub fn merge(&mut self, other: &ConstantTable) -> Result<(), LangError> {
        for (name, value) in other.iter() {
            match self.get(name) {
                Some(v) if v == value => {}
                Some(_) => return Err(LangError::DuplicateConstant(name.to_string())),
                None => {
                    self.values.insert(name.to_string(), value);
                }
            }
        }
        Ok(())
    }
}

impl<S: Into<String>> FromIterator<(S, i64)> for ConstantTable {
    fn from_iter<I: IntoIterator<Item = (S, i64)>>(iter: I) -> Self {
        ConstantTable {
            values: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

/// Collects `#define NAME INTEGER` lines; every other line is ignored.
pub fn extract_constants(header: &str) -> Result<ConstantTable, LangError> {
    let mut table = ConstantTable::new();
    for (idx, raw) in header.lines().enumerate() {
        let line = idx as u32 + 1;
        let Some(rest) = raw.trim_start().strip_prefix('#') else {
            continue;
        };
        let mut words = rest.split_whitespace();
        if words.next() != Some("define") {
            continue;
        }
        let (Some(name), Some(value), None) = (words.next(), words.next(), words.next()) else {
            return Err(LangError::MalformedDefine { line });
        };
        let valid_name = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        let value: i64 = match (valid_name, value.parse()) {
            (true, Ok(v)) => v,
            _ => return Err(LangError::MalformedDefine { line }),
        };
        table.define(name, value)?;
    }
    Ok(table)
}
