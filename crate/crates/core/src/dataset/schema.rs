use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// How a column enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    /// Questionnaire item scored 0/1.
    BinaryScore,
    /// Real-valued column, standardized with training statistics.
    Numeric,
    /// Free-text category, one-hot encoded.
    Categorical,
    /// yes/no style flag.
    BinaryFlag,
    /// The class label.
    Target,
    /// Present in the file but excluded from the feature vector.
    Ignored,
}

impl ColumnKind {
    pub fn is_predictor(self) -> bool {
        !matches!(self, ColumnKind::Target | ColumnKind::Ignored)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// Alternative header spellings accepted when matching a file.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
            aliases: Vec::new(),
        }
    }

    pub fn with_alias(mut self, alias: impl Into<String>) -> Self {
        self.aliases.push(alias.into());
        self
    }

    pub(crate) fn matches(&self, header: &str) -> bool {
        self.name == header || self.aliases.iter().any(|a| a == header)
    }
}

/// Ordered column description of an input table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<Column>,
    missing_token: String,
}

pub const DEFAULT_MISSING_TOKEN: &str = "?";

impl Schema {
    pub fn new(columns: Vec<Column>, missing_token: impl Into<String>) -> Result<Self, DataError> {
        let targets = columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Target)
            .count();
        if targets != 1 {
            return Err(DataError::Schema(format!(
                "expected exactly one target column, found {targets}"
            )));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            for name in std::iter::once(&c.name).chain(&c.aliases) {
                if !seen.insert(name.as_str()) {
                    return Err(DataError::Schema(format!("duplicate column name `{name}`")));
                }
            }
        }
        Ok(Self {
            columns,
            missing_token: missing_token.into(),
        })
    }

    /// The 21-column layout of the UCI adult autism screening file.
    ///
    /// `country_of_res` also matches the `contry_of_res` spelling used by the
    /// published file.
    pub fn asd_adult() -> Self {
        use ColumnKind::*;
        let mut columns: Vec<Column> = (1..=10)
            .map(|i| Column::new(format!("A{i}_Score"), BinaryScore))
            .collect();
        columns.extend([
            Column::new("age", Numeric),
            Column::new("gender", Categorical),
            Column::new("ethnicity", Categorical),
            Column::new("jundice", BinaryFlag),
            Column::new("austim", BinaryFlag),
            Column::new("country_of_res", Categorical).with_alias("contry_of_res"),
            Column::new("used_app_before", BinaryFlag),
            Column::new("result", Numeric),
            Column::new("age_desc", Categorical),
            Column::new("relation", Categorical),
            Column::new("Class/ASD", Target),
        ]);
        Self::new(columns, DEFAULT_MISSING_TOKEN).expect("built-in schema is valid")
    }

    /// Marks `name` as [`ColumnKind::Ignored`]. The column must still be present
    /// in input files.
    pub fn ignoring(mut self, name: &str) -> Result<Self, DataError> {
        let col = self
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| DataError::Schema(format!("no column named `{name}`")))?;
        if col.kind == ColumnKind::Target {
            return Err(DataError::Schema(
                "the target column cannot be ignored".into(),
            ));
        }
        col.kind = ColumnKind::Ignored;
        Ok(self)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn missing_token(&self) -> &str {
        &self.missing_token
    }

    pub fn target_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Target)
            .expect("schema invariant: one target")
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}
