use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Upos;
use crate::error::{Error, Result};

/// Syntactic category of a base. Declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    NOUN,
    VERB,
    ADJ,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::NOUN, Category::VERB, Category::ADJ];

    pub fn from_upos(u: Upos) -> Option<Self> {
        match u {
            Upos::NOUN => Some(Category::NOUN),
            Upos::VERB => Some(Category::VERB),
            Upos::ADJ => Some(Category::ADJ),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::NOUN => "NOUN",
            Category::VERB => "VERB",
            Category::ADJ => "ADJ",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NOUN" => Ok(Category::NOUN),
            "VERB" => Ok(Category::VERB),
            "ADJ" => Ok(Category::ADJ),
            _ => Err(Error::invalid(format!("unknown base category {s:?}"))),
        }
    }
}

/// Which base category a derivational suffix selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuffixClass {
    Denominal,
    Deverbal,
    Deadjectival,
}

impl FromStr for SuffixClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "denominal" => Ok(SuffixClass::Denominal),
            "deverbal" => Ok(SuffixClass::Deverbal),
            "deadjectival" => Ok(SuffixClass::Deadjectival),
            _ => Err(Error::invalid(format!("unknown suffix class {s:?}"))),
        }
    }
}

impl SuffixClass {
    pub fn expected(self) -> Category {
        match self {
            SuffixClass::Denominal => Category::NOUN,
            SuffixClass::Deverbal => Category::VERB,
            SuffixClass::Deadjectival => Category::ADJ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixSpec {
    pub surface: String,
    pub class: SuffixClass,
}

impl SuffixSpec {
    pub fn new(surface: &str, class: SuffixClass) -> Result<Self> {
        if surface.is_empty() || surface.chars().any(|c| !c.is_lowercase()) {
            return Err(Error::invalid(format!("suffix {surface:?} must be non-empty lowercase")));
        }
        Ok(SuffixSpec { surface: surface.to_string(), class })
    }
}

/// Reads `suffix<TAB>class` lines; `#` starts a comment line.
pub fn read_inventory(path: &Path) -> Result<Vec<SuffixSpec>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .ok_or_else(|| Error::invalid("expected suffix<TAB>class"))
            .and_then(|(s, c)| SuffixSpec::new(s.trim(), c.trim().parse()?));
        out.push(parsed.map_err(|e| Error::parse(path, i + 1, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(Error::parse(path, 0, "inventory lists no suffixes"));
    }
    Ok(out)
}

const DENOMINAL: [&str; 8] = ["ous", "an", "ic", "ate", "ary", "hood", "less", "ish"];
const DEVERBAL: [&str; 8] = ["ance", "ment", "ant", "ory", "ive", "ion", "able", "ably"];
const DEADJECTIVAL: [&str; 3] = ["ness", "ity", "en"];

/// The 19 syntactically unambiguous derivational suffixes.
pub fn default_inventory() -> Vec<SuffixSpec> {
    let group = |list: &'static [&'static str], class| {
        list.iter().map(move |s| SuffixSpec::new(s, class).expect("valid suffix"))
    };
    group(&DENOMINAL, SuffixClass::Denominal)
        .chain(group(&DEVERBAL, SuffixClass::Deverbal))
        .chain(group(&DEADJECTIVAL, SuffixClass::Deadjectival))
        .collect()
}
