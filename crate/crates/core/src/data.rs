//! Typed tabular data: schemas, cells, variable sets and conditions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a variable (column) in a [`Schema`].
pub type VarId = usize;

/// An observed cell value.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Value {
    Real(f64),
    Category(u32),
}

impl Value {
    pub fn as_real(self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(x),
            Value::Category(_) => None,
        }
    }

    pub fn as_category(self) -> Option<u32> {
        match self {
            Value::Category(c) => Some(c),
            Value::Real(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => write!(f, "{x}"),
            Value::Category(c) => write!(f, "#{c}"),
        }
    }
}

/// Statistical type of a variable.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StatType {
    Numerical,
    /// Categorical with the given labels; category `i` is `labels[i]`.
    Nominal {
        labels: Vec<String>,
    },
}

impl StatType {
    /// Nominal type whose labels are `"0".."k-1"`.
    pub fn nominal(k: usize) -> Self {
        StatType::Nominal {
            labels: (0..k).map(|i| i.to_string()).collect(),
        }
    }

    pub fn category_count(&self) -> Option<usize> {
        match self {
            StatType::Numerical => None,
            StatType::Nominal { labels } => Some(labels.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Variable {
    pub name: String,
    pub stat_type: StatType,
}

impl Variable {
    pub fn numerical(name: impl Into<String>) -> Self {
        Variable {
            name: name.into(),
            stat_type: StatType::Numerical,
        }
    }

    pub fn nominal(name: impl Into<String>, k: usize) -> Self {
        Variable {
            name: name.into(),
            stat_type: StatType::nominal(k),
        }
    }
}

/// Ordered, typed variables of a population.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Schema {
    variables: Vec<Variable>,
}

#[cfg(feature = "serde")]
impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            variables: Vec<Variable>,
        }
        let raw = Raw::deserialize(de)?;
        Schema::new(raw.variables).map_err(serde::de::Error::custom)
    }
}

impl Schema {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &variables {
            if v.name.is_empty() {
                return Err(Error::InvalidSchema("empty variable name".into()));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate variable name {}", v.name)));
            }
            if let StatType::Nominal { labels } = &v.stat_type {
                if labels.len() < 2 {
                    return Err(Error::InvalidSchema(format!(
                        "nominal variable {} needs at least 2 categories",
                        v.name
                    )));
                }
                let distinct: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
                if distinct.len() != labels.len() {
                    return Err(Error::InvalidSchema(format!(
                        "nominal variable {} has duplicate labels",
                        v.name
                    )));
                }
            }
        }
        Ok(Schema { variables })
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarId) -> Option<&Variable> {
        self.variables.get(var)
    }

    pub fn name(&self, var: VarId) -> &str {
        &self.variables[var].name
    }

    pub fn stat_type(&self, var: VarId) -> &StatType {
        &self.variables[var].stat_type
    }

    pub fn index_of(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Resolves a name or fails with [`Error::UnknownVariable`].
    pub fn resolve(&self, name: &str) -> Result<VarId> {
        self.index_of(name).ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    pub fn check_var(&self, var: VarId) -> Result<()> {
        if var < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVariable(format!("#{var}")))
        }
    }

    /// Checks that `value` is admissible for `var`.
    pub fn check_value(&self, var: VarId, value: Value) -> Result<()> {
        self.check_var(var)?;
        check_value_against(&self.variables[var].name, &self.variables[var].stat_type, value)
    }

    /// Stable 64-bit FNV-1a digest of names and types.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        for v in &self.variables {
            h.write(v.name.as_bytes());
            h.write(&[0xff]);
            match &v.stat_type {
                StatType::Numerical => h.write(b"N"),
                StatType::Nominal { labels } => {
                    h.write(b"C");
                    for l in labels {
                        h.write(l.as_bytes());
                        h.write(&[0xfe]);
                    }
                }
            }
        }
        h.finish()
    }
}

pub(crate) fn check_value_against(name: &str, ty: &StatType, value: Value) -> Result<()> {
    let mismatch = |reason: String| Error::TypeMismatch {
        var: name.into(),
        reason,
    };
    match (ty, value) {
        (StatType::Numerical, Value::Real(x)) if x.is_finite() => Ok(()),
        (StatType::Numerical, Value::Real(x)) => Err(mismatch(format!("non-finite value {x}"))),
        (StatType::Numerical, Value::Category(_)) => Err(mismatch("category given for a numerical variable".into())),
        (StatType::Nominal { labels }, Value::Category(c)) if (c as usize) < labels.len() => Ok(()),
        (StatType::Nominal { labels }, Value::Category(c)) => Err(mismatch(format!(
            "category {c} out of range for {} categories",
            labels.len()
        ))),
        (StatType::Nominal { .. }, Value::Real(_)) => Err(mismatch("real value given for a nominal variable".into())),
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// An N x D table of optionally-missing typed cells. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: Schema,
    n_rows: usize,
    /// Row-major; `None` is a missing cell.
    cells: Vec<Option<Value>>,
}

impl Dataset {
    /// Validates types, finiteness, and that every variable is observed at
    /// least once (when there are rows at all).
    pub fn new(schema: Schema, rows: Vec<Vec<Option<Value>>>) -> Result<Self> {
        let d = schema.len();
        let n_rows = rows.len();
        let mut cells = Vec::with_capacity(n_rows * d);
        let mut observed = alloc::vec![0usize; d];
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has {} cells, schema has {d} variables",
                    row.len()
                )));
            }
            for (var, cell) in row.into_iter().enumerate() {
                if let Some(v) = cell {
                    schema.check_value(var, v)?;
                    observed[var] += 1;
                }
                cells.push(cell);
            }
        }
        if n_rows > 0 {
            if let Some(var) = observed.iter().position(|&c| c == 0) {
                return Err(Error::InvalidDataset(format!(
                    "variable {} has no observed cells",
                    schema.name(var)
                )));
            }
        }
        Ok(Dataset { schema, n_rows, cells })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.schema.len()
    }

    #[inline]
    pub fn cell(&self, row: usize, var: VarId) -> Option<Value> {
        self.cells[row * self.schema.len() + var]
    }

    pub fn row(&self, row: usize) -> &[Option<Value>] {
        let d = self.schema.len();
        &self.cells[row * d..(row + 1) * d]
    }

    /// Observed cells of one column as `(row, value)`.
    pub fn column(&self, var: VarId) -> impl Iterator<Item = (usize, Value)> + '_ {
        (0..self.n_rows).filter_map(move |r| self.cell(r, var).map(|v| (r, v)))
    }

    /// Fraction of missing cells in a column.
    pub fn missing_rate(&self, var: VarId) -> f64 {
        if self.n_rows == 0 {
            return 0.0;
        }
        let missing = (0..self.n_rows).filter(|&r| self.cell(r, var).is_none()).count();
        missing as f64 / self.n_rows as f64
    }

    /// Digest of schema and every cell, used to tie fitted models to data.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write(&self.schema.fingerprint().to_le_bytes());
        h.write(&(self.n_rows as u64).to_le_bytes());
        for c in &self.cells {
            match c {
                None => h.write(&[0]),
                Some(Value::Real(x)) => {
                    h.write(&[1]);
                    h.write(&x.to_bits().to_le_bytes());
                }
                Some(Value::Category(k)) => {
                    h.write(&[2]);
                    h.write(&k.to_le_bytes());
                }
            }
        }
        h.finish()
    }
}

/// A set of variable indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct VarSet(BTreeSet<VarId>);

impl VarSet {
    pub fn new() -> Self {
        VarSet(BTreeSet::new())
    }

    pub fn singleton(var: VarId) -> Self {
        VarSet(core::iter::once(var).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains(&var)
    }

    pub fn insert(&mut self, var: VarId) -> bool {
        self.0.insert(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_disjoint(&self, other: &VarSet) -> bool {
        self.0.is_disjoint(&other.0)
    }

    /// First shared variable, if any.
    pub fn overlap(&self, other: &VarSet) -> Option<VarId> {
        self.0.intersection(&other.0).next().copied()
    }

    pub fn union(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.union(&other.0).copied().collect())
    }

    pub fn intersection(&self, other: &VarSet) -> VarSet {
        VarSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn filter(&self, mut keep: impl FnMut(VarId) -> bool) -> VarSet {
        VarSet(self.0.iter().copied().filter(|&v| keep(v)).collect())
    }

    pub fn max(&self) -> Option<VarId> {
        self.0.last().copied()
    }
}

impl FromIterator<VarId> for VarSet {
    fn from_iter<I: IntoIterator<Item = VarId>>(iter: I) -> Self {
        VarSet(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[VarId; N]> for VarSet {
    fn from(vars: [VarId; N]) -> Self {
        vars.into_iter().collect()
    }
}

/// Values for a set of variables: a simulated record, a density target, or
/// the fixed part of a condition.
pub type Assignment = BTreeMap<VarId, Value>;

/// Keys of an assignment as a [`VarSet`].
pub fn keys(assignment: &Assignment) -> VarSet {
    assignment.keys().copied().collect()
}

/// Sub-assignment over the variables in `vars`.
pub fn restrict(assignment: &Assignment, vars: &VarSet) -> Assignment {
    assignment
        .iter()
        .filter(|(k, _)| vars.contains(**k))
        .map(|(&k, &v)| (k, v))
        .collect()
}

/// The conditioning part of a query: fixed values plus variables that are
/// conditioned on but averaged over.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Condition {
    pub fixed: Assignment,
    pub marginalized: VarSet,
}

impl Condition {
    pub fn none() -> Self {
        Condition::default()
    }

    pub fn fixed(fixed: Assignment) -> Self {
        Condition {
            fixed,
            marginalized: VarSet::new(),
        }
    }

    pub fn new(fixed: Assignment, marginalized: VarSet) -> Result<Self> {
        if let Some(v) = marginalized.iter().find(|v| fixed.contains_key(v)) {
            return Err(Error::OverlappingVarSets(v));
        }
        Ok(Condition { fixed, marginalized })
    }

    /// All variables this condition mentions.
    pub fn vars(&self) -> VarSet {
        keys(&self.fixed).union(&self.marginalized)
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if let Some(v) = self.marginalized.iter().find(|v| self.fixed.contains_key(v)) {
            return Err(Error::OverlappingVarSets(v));
        }
        for v in self.marginalized.iter() {
            schema.check_var(v)?;
        }
        for (&v, &x) in &self.fixed {
            schema.check_value(v, x)?;
        }
        Ok(())
    }
}
