//! 3x3 matching templates: the built-in rule sets, extraction from master
//! patterns with a gliding window, and completion under the symmetries of
//! the square.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Coord, Dihedral, Pattern};

/// Bit of the center cell in a 9-bit window code.
pub const CENTER_BIT: u16 = 1 << 4;
/// The 8 outer bits of a 9-bit window code.
pub const OUTER_MASK: u16 = 0x1FF & !CENTER_BIT;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("line {line}: expected 3 characters of 0/1, found {text:?}")]
    BadRow { line: usize, text: String },
    #[error("line {line}: template block has {rows} rows, expected 3")]
    BadBlock { line: usize, rows: usize },
    #[error("unknown rule {0:?}; expected 8, 36 or 52")]
    UnknownRule(String),
}

/// A 3x3 binary stencil. Cells are packed into a 9-bit code, bit `3*r + s`
/// for row `r` and column `s`; equality ignores the label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Template {
    code: u16,
    label: String,
}

impl PartialEq for Template {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code
    }
}

impl Eq for Template {}

impl std::hash::Hash for Template {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.code.hash(state);
    }
}

impl Template {
    pub fn from_code(code: u16, label: impl Into<String>) -> Self {
        Template {
            code: code & 0x1FF,
            label: label.into(),
        }
    }

    pub fn from_rows(rows: [[u8; 3]; 3], label: impl Into<String>) -> Self {
        let mut code = 0;
        for (r, row) in rows.iter().enumerate() {
            for (s, &v) in row.iter().enumerate() {
                code |= ((v & 1) as u16) << (3 * r + s);
            }
        }
        Template::from_code(code, label)
    }

    /// Parses `"rrr/rrr/rrr"`.
    fn from_slashed(text: &str, label: &str) -> Self {
        let mut rows = [[0u8; 3]; 3];
        for (r, part) in text.split('/').enumerate() {
            for (s, ch) in part.bytes().enumerate() {
                rows[r][s] = ch - b'0';
            }
        }
        Template::from_rows(rows, label)
    }

    pub fn code(&self) -> u16 {
        self.code
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, r: usize, s: usize) -> u8 {
        ((self.code >> (3 * r + s)) & 1) as u8
    }

    pub fn rows(&self) -> [[u8; 3]; 3] {
        let mut rows = [[0u8; 3]; 3];
        for (r, row) in rows.iter_mut().enumerate() {
            for (s, v) in row.iter_mut().enumerate() {
                *v = self.value(r, s);
            }
        }
        rows
    }

    pub fn center(&self) -> u8 {
        self.value(1, 1)
    }

    pub fn outer(&self) -> u16 {
        self.code & OUTER_MASK
    }

    pub fn transform(&self, d: Dihedral) -> Template {
        Template::from_code(transform_code(self.code, d), self.label.clone())
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.rows();
        let strs: Vec<String> = rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
        write!(f, "{} [{}]", self.label, strs.join("/"))
    }
}

/// Applies a symmetry of the square to a 9-bit window code.
pub fn transform_code(code: u16, d: Dihedral) -> u16 {
    let mut out = 0;
    for r in 0..3 {
        for s in 0..3 {
            if (code >> (3 * r + s)) & 1 == 1 {
                let (tr, ts) = d.map(r, s, 3);
                out |= 1 << (3 * tr + ts);
            }
        }
    }
    out
}

/// Ordered, duplicate-free list of templates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    templates: Vec<Template>,
}

impl TemplateSet {
    pub fn new() -> Self {
        TemplateSet::default()
    }

    /// Appends `t` unless an equal template is present; returns whether it
    /// was added.
    pub fn insert(&mut self, t: Template) -> bool {
        if self.contains_code(t.code) {
            return false;
        }
        self.templates.push(t);
        true
    }

    pub fn contains(&self, t: &Template) -> bool {
        self.contains_code(t.code)
    }

    pub fn contains_code(&self, code: u16) -> bool {
        self.templates.iter().any(|t| t.code == code)
    }

    pub fn get(&self, index: usize) -> Option<&Template> {
        self.templates.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Template> {
        self.templates.iter()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn is_subset(&self, other: &TemplateSet) -> bool {
        self.iter().all(|t| other.contains(t))
    }

    /// Same members regardless of order.
    pub fn same_members(&self, other: &TemplateSet) -> bool {
        self.len() == other.len() && self.is_subset(other)
    }

    pub fn is_symmetry_closed(&self) -> bool {
        self.iter()
            .all(|t| Dihedral::ALL.iter().all(|&d| self.contains_code(transform_code(t.code, d))))
    }

    /// Adds every missing symmetric image, keeping the existing order and
    /// appending new members after their source template's images.
    pub fn completed(&self) -> TemplateSet {
        let mut out = self.clone();
        for t in &self.templates {
            for image in symmetry_orbit(t).templates {
                out.insert(image);
            }
        }
        out
    }

    /// Relabels members that coincide with a built-in template.
    pub fn with_builtin_labels(mut self) -> TemplateSet {
        let reference = builtin_set(RuleVariant::Rule52);
        for t in &mut self.templates {
            if let Some(b) = reference.iter().find(|b| b.code == t.code) {
                t.label = b.label.clone();
            }
        }
        self
    }

    /// Text form: one 3-line block per template, each preceded by a
    /// `# label` line, blocks separated by a blank line.
    pub fn serialize(&self) -> String {
        let blocks: Vec<String> = self
            .templates
            .iter()
            .map(|t| {
                let mut block = format!("# {}\n", t.label);
                for row in t.rows() {
                    for v in row {
                        block.push(if v == 1 { '1' } else { '0' });
                    }
                    block.push('\n');
                }
                block
            })
            .collect();
        blocks.join("\n")
    }

    pub fn parse(text: &str) -> Result<TemplateSet, TemplateError> {
        let mut set = TemplateSet::new();
        let mut rows: Vec<[u8; 3]> = Vec::new();
        let mut label: Option<String> = None;
        let mut start = 1;
        let mut flush = |rows: &mut Vec<[u8; 3]>, label: &mut Option<String>, line: usize| {
            if rows.is_empty() {
                *label = None;
                return Ok(());
            }
            if rows.len() != 3 {
                return Err(TemplateError::BadBlock { line, rows: rows.len() });
            }
            let name = label.take().unwrap_or_else(|| format!("X{}", set.len()));
            set.insert(Template::from_rows([rows[0], rows[1], rows[2]], name));
            rows.clear();
            Ok(())
        };
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                flush(&mut rows, &mut label, start)?;
                start = k + 2;
            } else if let Some(name) = line.strip_prefix('#') {
                if !rows.is_empty() {
                    flush(&mut rows, &mut label, start)?;
                }
                start = k + 1;
                label = Some(name.trim().to_string());
            } else {
                let bytes = line.as_bytes();
                if bytes.len() != 3 || !bytes.iter().all(|b| *b == b'0' || *b == b'1') {
                    return Err(TemplateError::BadRow {
                        line: k + 1,
                        text: line.to_string(),
                    });
                }
                if rows.len() == 3 {
                    return Err(TemplateError::BadBlock { line: start, rows: 4 });
                }
                rows.push([bytes[0] - b'0', bytes[1] - b'0', bytes[2] - b'0']);
            }
        }
        flush(&mut rows, &mut label, start)?;
        Ok(set)
    }
}

impl<'a> IntoIterator for &'a TemplateSet {
    type Item = &'a Template;
    type IntoIter = std::slice::Iter<'a, Template>;

    fn into_iter(self) -> Self::IntoIter {
        self.templates.iter()
    }
}

impl FromIterator<Template> for TemplateSet {
    fn from_iter<I: IntoIterator<Item = Template>>(iter: I) -> Self {
        let mut set = TemplateSet::new();
        for t in iter {
            set.insert(t);
        }
        set
    }
}

/// The three template subsets that define the CA rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleVariant {
    /// T0..T7: point-only patterns, even sizes.
    Rule8,
    /// T0..T35: no singularity templates, odd optima are transient.
    Rule36,
    /// T0..T51: full set, odd optima are stable.
    Rule52,
}

impl RuleVariant {
    pub fn template_count(self) -> usize {
        match self {
            RuleVariant::Rule8 => 8,
            RuleVariant::Rule36 => 36,
            RuleVariant::Rule52 => 52,
        }
    }
}

impl FromStr for RuleVariant {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_start_matches(['r', 'R']).trim_start_matches("ule") {
            "8" => Ok(RuleVariant::Rule8),
            "36" => Ok(RuleVariant::Rule36),
            "52" => Ok(RuleVariant::Rule52),
            _ => Err(TemplateError::UnknownRule(s.to_string())),
        }
    }
}

impl fmt::Display for RuleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.template_count())
    }
}

/// T0..T51 with their family names, rows top to bottom.
const TABLE: [(&str, &str); 52] = [
    ("T0/A", "000/010/000"),
    ("T1/B0", "000/101/000"),
    ("T2/B1", "010/000/010"),
    ("T3/C", "101/000/101"),
    ("T4/D0", "101/000/010"),
    ("T5/D1", "010/000/101"),
    ("T6/D2", "001/100/001"),
    ("T7/D3", "100/001/100"),
    ("T8/E0", "000/110/000"),
    ("T9/E1", "000/011/000"),
    ("T10/E2", "010/010/000"),
    ("T11/E3", "000/010/010"),
    ("T12/F0", "110/000/110"),
    ("T13/F1", "011/000/011"),
    ("T14/F2", "101/101/000"),
    ("T15/F3", "000/101/101"),
    ("T16/G0", "110/000/010"),
    ("T17/G1", "010/000/110"),
    ("T18/G2", "011/000/010"),
    ("T19/G3", "010/000/011"),
    ("T20/G4", "001/101/000"),
    ("T21/G5", "000/101/001"),
    ("T22/G6", "100/101/000"),
    ("T23/G7", "000/101/100"),
    ("T24/H0", "110/000/101"),
    ("T25/H1", "101/000/110"),
    ("T26/H2", "011/000/101"),
    ("T27/H3", "101/000/011"),
    ("T28/H4", "101/001/100"),
    ("T29/H5", "100/001/101"),
    ("T30/H6", "101/100/001"),
    ("T31/H7", "001/100/101"),
    ("T32/I0", "110/000/011"),
    ("T33/I1", "011/000/110"),
    ("T34/I2", "001/101/100"),
    ("T35/I3", "100/101/001"),
    ("T36/J0", "110/000/100"),
    ("T37/J1", "100/000/110"),
    ("T38/J2", "011/000/001"),
    ("T39/J3", "001/000/011"),
    ("T40/J4", "101/001/000"),
    ("T41/J5", "000/001/101"),
    ("T42/J6", "101/100/000"),
    ("T43/J7", "000/100/101"),
    ("T44/K0", "010/000/001"),
    ("T45/K1", "001/000/010"),
    ("T46/K2", "010/000/100"),
    ("T47/K3", "100/000/010"),
    ("T48/K4", "000/001/100"),
    ("T49/K5", "100/001/000"),
    ("T50/K6", "000/100/001"),
    ("T51/K7", "001/100/000"),
];

pub fn builtin_set(variant: RuleVariant) -> TemplateSet {
    TABLE[..variant.template_count()]
        .iter()
        .map(|(label, rows)| Template::from_slashed(rows, label))
        .collect()
}

/// All distinct images of `t` under the 8 symmetries, `t` first.
pub fn symmetry_orbit(t: &Template) -> TemplateSet {
    let mut orbit = TemplateSet::new();
    for d in Dihedral::ALL {
        let code = transform_code(t.code, d);
        let label = if d == Dihedral::Identity {
            t.label.clone()
        } else {
            format!("{}~{:?}", t.label, d)
        };
        orbit.insert(Template::from_code(code, label));
    }
    orbit
}

/// Every distinct 3x3 window of the torus, in row-major order of first
/// appearance, optionally completed under symmetry. Members that equal a
/// built-in template carry its label; the rest are named `X<k>`.
pub fn extract_templates(p: &Pattern, complete: bool) -> TemplateSet {
    let mut found = TemplateSet::new();
    for c in p.coords() {
        let code = p.window_code(c);
        if !found.contains_code(code) {
            let label = format!("X{}", found.len());
            found.insert(Template::from_code(code, label));
        }
    }
    let set = if complete { found.completed() } else { found };
    let relabeled: TemplateSet = set
        .iter()
        .enumerate()
        .map(|(k, t)| Template::from_code(t.code, format!("X{k}")))
        .collect();
    relabeled.with_builtin_labels()
}

/// Outer ring of the window at `c` equals the outer ring of `t`.
#[inline]
pub fn match_except_center(p: &Pattern, c: Coord, t: &Template) -> bool {
    p.window_code(c) & OUTER_MASK == t.outer()
}

/// Whole window at `c` equals `t`.
#[inline]
pub fn match_full(p: &Pattern, c: Coord, t: &Template) -> bool {
    p.window_code(c) == t.code
}
