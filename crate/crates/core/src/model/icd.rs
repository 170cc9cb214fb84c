use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcdLevel {
    Chapter,
    Block,
    Category,
    FullCode,
}

impl IcdLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            IcdLevel::Chapter => "chapter",
            IcdLevel::Block => "block",
            IcdLevel::Category => "category",
            IcdLevel::FullCode => "full-code",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "chapter" => Some(IcdLevel::Chapter),
            "block" => Some(IcdLevel::Block),
            "category" => Some(IcdLevel::Category),
            "full-code" | "code" => Some(IcdLevel::FullCode),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcdNode {
    pub code: String,
    pub parent: Option<String>,
    pub level: IcdLevel,
    pub description: String,
}

/// Validated ICD forest.
#[derive(Debug, Clone, PartialEq)]
pub struct IcdHierarchy {
    nodes: BTreeMap<String, IcdNode>,
}

impl IcdHierarchy {
    /// Checks that every non-chapter node has an existing parent, chapters
    /// are roots, parent links are acyclic and descriptions are non-empty.
    pub fn new(nodes: Vec<IcdNode>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for n in nodes {
            if map.contains_key(&n.code) {
                return Err(Error::Input(format!("duplicate ICD code {}", n.code)));
            }
            map.insert(n.code.clone(), n);
        }
        for n in map.values() {
            if n.description.trim().is_empty() {
                return Err(Error::Input(format!("ICD code {} has an empty description", n.code)));
            }
            match (&n.parent, n.level) {
                (None, IcdLevel::Chapter) => {}
                (Some(_), IcdLevel::Chapter) => {
                    return Err(Error::Input(format!("chapter {} has a parent", n.code)))
                }
                (None, _) => {
                    return Err(Error::Input(format!("ICD code {} has no parent", n.code)))
                }
                (Some(p), _) => {
                    if !map.contains_key(p) {
                        return Err(Error::Input(format!(
                            "ICD code {} has unknown parent {p}",
                            n.code
                        )));
                    }
                }
            }
        }
        let h = Self { nodes: map };
        for code in h.nodes.keys() {
            h.ancestry(code)?;
        }
        Ok(h)
    }

    pub fn get(&self, code: &str) -> Option<&IcdNode> {
        self.nodes.get(code)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &IcdNode> {
        self.nodes.values()
    }

    /// Root-to-leaf chain ending at `code`.
    pub fn ancestry(&self, code: &str) -> Result<Vec<&IcdNode>> {
        let mut chain = Vec::new();
        let mut cur = self
            .nodes
            .get(code)
            .ok_or_else(|| Error::Input(format!("unknown ICD code {code}")))?;
        loop {
            if chain.len() > self.nodes.len() {
                return Err(Error::Input(format!("cycle in ICD hierarchy at {code}")));
            }
            chain.push(cur);
            match &cur.parent {
                Some(p) => cur = &self.nodes[p],
                None => break,
            }
        }
        chain.reverse();
        Ok(chain)
    }

    pub fn chapter_of(&self, code: &str) -> Result<&str> {
        Ok(self.ancestry(code)?[0].code.as_str())
    }

    /// Descriptions of all ancestors and the code itself, root first.
    pub fn full_description(&self, code: &str) -> Result<String> {
        Ok(self
            .ancestry(code)?
            .iter()
            .map(|n| n.description.trim())
            .collect::<Vec<_>>()
            .join(" - "))
    }

    /// Codes with no children, sorted.
    pub fn leaves(&self) -> Vec<&str> {
        let parents: std::collections::HashSet<&str> = self
            .nodes
            .values()
            .filter_map(|n| n.parent.as_deref())
            .collect();
        self.nodes
            .keys()
            .map(String::as_str)
            .filter(|c| !parents.contains(c))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(code: &str, parent: Option<&str>, level: IcdLevel, d: &str) -> IcdNode {
        IcdNode {
            code: code.into(),
            parent: parent.map(Into::into),
            level,
            description: d.into(),
        }
    }

    fn asthma() -> IcdHierarchy {
        IcdHierarchy::new(vec![
            node("J00-J99", None, IcdLevel::Chapter, "Diseases of the respiratory system"),
            node("J40-J47", Some("J00-J99"), IcdLevel::Block, "Chronic lower respiratory diseases"),
            node("J45", Some("J40-J47"), IcdLevel::Category, "Asthma"),
            node("J45.20", Some("J45"), IcdLevel::FullCode, "Mild intermittent asthma uncomplicated"),
        ])
        .unwrap()
    }

    #[test]
    fn description_concatenates_ancestry() {
        let h = asthma();
        assert_eq!(
            h.full_description("J45.20").unwrap(),
            "Diseases of the respiratory system - Chronic lower respiratory diseases - Asthma - Mild intermittent asthma uncomplicated"
        );
        assert_eq!(h.chapter_of("J45.20").unwrap(), "J00-J99");
        assert_eq!(h.leaves(), ["J45.20"]);
    }

    #[test]
    fn rejects_orphans_and_empty_descriptions() {
        assert!(IcdHierarchy::new(vec![node("A", Some("Z"), IcdLevel::Block, "x")]).is_err());
        assert!(IcdHierarchy::new(vec![node("A", None, IcdLevel::Block, "x")]).is_err());
        assert!(IcdHierarchy::new(vec![node("A", None, IcdLevel::Chapter, " ")]).is_err());
    }
}
