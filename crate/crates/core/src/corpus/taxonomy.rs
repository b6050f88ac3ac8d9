use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hierarchy level of a land-cover class. L1 is the most generic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    L1,
    L2,
    L3,
}

impl Level {
    pub fn depth(self) -> usize {
        match self {
            Level::L1 => 1,
            Level::L2 => 2,
            Level::L3 => 3,
        }
    }
}

/// One land-cover class: a dense id, a unique name, a hierarchy level and an
/// optional parent one level up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: usize,
    pub name: String,
    pub level: Level,
    pub parent: Option<usize>,
}

/// The hierarchical land-cover nomenclature.
///
/// Ids are dense `0..n_classes()`, laid out L1 block first, then L2, then L3,
/// so ascending id is also the canonical answer order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTaxonomy {
    entries: Vec<ClassEntry>,
    by_name: BTreeMap<String, usize>,
}

impl ClassTaxonomy {
    pub fn new(entries: Vec<ClassEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid_input("taxonomy must not be empty"));
        }
        let mut by_name = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.id != i {
                return Err(Error::invalid_input(format!(
                    "class ids must be dense 0..{}: found id {} at position {}",
                    entries.len(),
                    e.id,
                    i
                )));
            }
            if by_name.insert(e.name.clone(), e.id).is_some() {
                return Err(Error::invalid_input(format!(
                    "duplicate class name {:?}",
                    e.name
                )));
            }
        }
        for e in &entries {
            match (e.level, e.parent) {
                (Level::L1, None) => {}
                (Level::L1, Some(p)) => {
                    return Err(Error::invalid_input(format!(
                        "L1 class {:?} must not have a parent (got {})",
                        e.name, p
                    )));
                }
                (_, None) => {
                    return Err(Error::invalid_input(format!(
                        "class {:?} at {:?} must have a parent",
                        e.name, e.level
                    )));
                }
                (level, Some(p)) => {
                    let parent = entries.get(p).ok_or_else(|| {
                        Error::invalid_input(format!(
                            "class {:?} has unknown parent id {}",
                            e.name, p
                        ))
                    })?;
                    if parent.level.depth() + 1 != level.depth() {
                        return Err(Error::invalid_input(format!(
                            "class {:?} at {:?} must have a parent one level up, got {:?} at {:?}",
                            e.name, level, parent.name, parent.level
                        )));
                    }
                }
            }
        }
        Ok(Self { entries, by_name })
    }

    pub fn n_classes(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn entry(&self, id: usize) -> Result<&ClassEntry> {
        self.entries
            .get(id)
            .ok_or_else(|| Error::invalid_input(format!("unknown class id {id}")))
    }

    pub fn name(&self, id: usize) -> Result<&str> {
        Ok(self.entry(id)?.name.as_str())
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn ids_at_level(&self, level: Level) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.level == level)
            .map(|e| e.id)
            .collect()
    }

    /// Walks parents up to the L1 root (excludes `id` itself).
    pub fn ancestors(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.entries[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.entries[p].parent;
        }
        out
    }

    /// Sets every ancestor bit implied by a set descendant bit.
    pub fn close_labels(&self, labels: &mut [u8]) {
        for id in 0..labels.len().min(self.entries.len()) {
            if labels[id] != 0 {
                for a in self.ancestors(id) {
                    labels[a] = 1;
                }
            }
        }
    }

    /// True when every set bit has all its ancestor bits set.
    pub fn labels_consistent(&self, labels: &[u8]) -> bool {
        if labels.len() != self.entries.len() {
            return false;
        }
        labels.iter().enumerate().all(|(id, &v)| {
            v == 0 || self.ancestors(id).iter().all(|&a| labels[a] != 0)
        })
    }

    /// Parses a canonical land-cover answer back into class ids.
    ///
    /// Class names may themselves contain ", " (e.g. "Beaches, dunes, sands"),
    /// so the parse matches the longest class name at each position instead of
    /// splitting on the separator.
    pub fn parse_answer(&self, answer: &str) -> Result<Vec<usize>> {
        if answer == "None" {
            return Ok(Vec::new());
        }
        let mut ids = Vec::new();
        let mut rest = answer;
        loop {
            let matched = self
                .entries
                .iter()
                .filter(|e| rest.starts_with(e.name.as_str()))
                .max_by_key(|e| e.name.len());
            let e = matched.ok_or_else(|| {
                Error::invalid_input(format!("unparseable answer fragment {rest:?}"))
            })?;
            ids.push(e.id);
            rest = &rest[e.name.len()..];
            if rest.is_empty() {
                return Ok(ids);
            }
            rest = rest.strip_prefix(", ").ok_or_else(|| {
                Error::invalid_input(format!("missing separator in answer at {rest:?}"))
            })?;
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.entries)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries: Vec<ClassEntry> = serde_json::from_str(&text)?;
        Self::new(entries)
    }

    /// A flat synthetic taxonomy of `n` L1 classes named "Class 00", "Class 01", ...
    pub fn synthetic(n: usize) -> Result<Self> {
        let entries = (0..n)
            .map(|id| ClassEntry {
                id,
                name: format!("Class {id:02}"),
                level: Level::L1,
                parent: None,
            })
            .collect();
        Self::new(entries)
    }

    /// The 61-class CORINE-derived nomenclature: 5 L1 + 15 L2 + 41 L3 classes.
    ///
    /// Of the 64 CLC classes, "Glaciers and perpetual snow" is dropped and the
    /// L3 duplicates of "Pastures" and "Water bodies" are merged into their
    /// same-named shallower entries.
    pub fn clc61() -> Self {
        let l1 = [
            "Artificial surfaces",
            "Agricultural areas",
            "Forest and semi-natural areas",
            "Wetlands",
            "Water bodies",
        ];
        // (name, L1 parent index)
        let l2: [(&str, usize); 15] = [
            ("Urban fabric", 0),
            ("Industrial, commercial and transport units", 0),
            ("Mine, dump and construction sites", 0),
            ("Artificial, non-agricultural vegetated areas", 0),
            ("Arable land", 1),
            ("Permanent crops", 1),
            ("Pastures", 1),
            ("Heterogeneous agricultural areas", 1),
            ("Forests", 2),
            ("Scrub and/or herbaceous vegetation associations", 2),
            ("Open spaces with little or no vegetation", 2),
            ("Inland wetlands", 3),
            ("Maritime wetlands", 3),
            ("Inland waters", 4),
            ("Marine waters", 4),
        ];
        // (name, L2 parent index within the l2 block)
        let l3: [(&str, usize); 41] = [
            ("Continuous urban fabric", 0),
            ("Discontinuous urban fabric", 0),
            ("Industrial or commercial units", 1),
            ("Road and rail networks and associated land", 1),
            ("Port areas", 1),
            ("Airports", 1),
            ("Mineral extraction sites", 2),
            ("Dump sites", 2),
            ("Construction sites", 2),
            ("Green urban areas", 3),
            ("Sport and leisure facilities", 3),
            ("Non-irrigated arable land", 4),
            ("Permanently irrigated land", 4),
            ("Rice fields", 4),
            ("Vineyards", 5),
            ("Fruit trees and berry plantations", 5),
            ("Olive groves", 5),
            ("Annual crops associated with permanent crops", 7),
            ("Complex cultivation patterns", 7),
            (
                "Land principally occupied by agriculture, with significant areas of natural vegetation",
                7,
            ),
            ("Agro-forestry areas", 7),
            ("Broad-leaved forest", 8),
            ("Coniferous forest", 8),
            ("Mixed forest", 8),
            ("Natural grasslands", 9),
            ("Moors and heathland", 9),
            ("Sclerophyllous vegetation", 9),
            ("Transitional woodland-shrub", 9),
            ("Beaches, dunes, sands", 10),
            ("Bare rocks", 10),
            ("Sparsely vegetated areas", 10),
            ("Burnt areas", 10),
            ("Inland marshes", 11),
            ("Peat bogs", 11),
            ("Salt marshes", 12),
            ("Salines", 12),
            ("Intertidal flats", 12),
            ("Water courses", 13),
            ("Coastal lagoons", 14),
            ("Estuaries", 14),
            ("Sea and ocean", 14),
        ];

        let mut entries = Vec::with_capacity(61);
        for (i, name) in l1.iter().enumerate() {
            entries.push(ClassEntry {
                id: i,
                name: (*name).to_string(),
                level: Level::L1,
                parent: None,
            });
        }
        let l2_base = entries.len();
        for (i, (name, p)) in l2.iter().enumerate() {
            entries.push(ClassEntry {
                id: l2_base + i,
                name: (*name).to_string(),
                level: Level::L2,
                parent: Some(*p),
            });
        }
        let l3_base = entries.len();
        for (i, (name, p)) in l3.iter().enumerate() {
            entries.push(ClassEntry {
                id: l3_base + i,
                name: (*name).to_string(),
                level: Level::L3,
                parent: Some(l2_base + p),
            });
        }
        Self::new(entries).expect("built-in taxonomy is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clc61_has_61_dense_classes() {
        let tax = ClassTaxonomy::clc61();
        assert_eq!(tax.n_classes(), 61);
        assert_eq!(tax.ids_at_level(Level::L1).len(), 5);
        assert_eq!(tax.ids_at_level(Level::L2).len(), 15);
        assert_eq!(tax.ids_at_level(Level::L3).len(), 41);
        // merged duplicates appear once, at the shallower level
        assert_eq!(tax.entry(tax.id_of("Pastures").unwrap()).unwrap().level, Level::L2);
        assert_eq!(
            tax.entry(tax.id_of("Water bodies").unwrap()).unwrap().level,
            Level::L1
        );
        assert!(tax.id_of("Glaciers and perpetual snow").is_none());
    }

    #[test]
    fn closure_sets_ancestors() {
        let tax = ClassTaxonomy::clc61();
        let rice = tax.id_of("Rice fields").unwrap();
        let mut labels = vec![0u8; tax.n_classes()];
        labels[rice] = 1;
        assert!(!tax.labels_consistent(&labels));
        tax.close_labels(&mut labels);
        assert!(tax.labels_consistent(&labels));
        assert_eq!(labels[tax.id_of("Arable land").unwrap()], 1);
        assert_eq!(labels[tax.id_of("Agricultural areas").unwrap()], 1);
        assert_eq!(labels.iter().map(|&b| b as usize).sum::<usize>(), 3);
    }

    #[test]
    fn rejects_bad_hierarchies() {
        let entries = vec![
            ClassEntry { id: 0, name: "A".into(), level: Level::L1, parent: None },
            ClassEntry { id: 1, name: "B".into(), level: Level::L3, parent: Some(0) },
        ];
        assert!(ClassTaxonomy::new(entries).is_err());

        let entries = vec![
            ClassEntry { id: 0, name: "A".into(), level: Level::L1, parent: None },
            ClassEntry { id: 1, name: "A".into(), level: Level::L1, parent: None },
        ];
        assert!(ClassTaxonomy::new(entries).is_err());

        let entries = vec![ClassEntry { id: 3, name: "A".into(), level: Level::L1, parent: None }];
        assert!(ClassTaxonomy::new(entries).is_err());
    }

    #[test]
    fn answers_with_commas_in_names_parse_back() {
        let tax = ClassTaxonomy::clc61();
        let beaches = tax.id_of("Beaches, dunes, sands").unwrap();
        let forests = tax.id_of("Forests").unwrap();
        let answer = format!("{}, {}", tax.name(forests).unwrap(), tax.name(beaches).unwrap());
        let ids = tax.parse_answer(&answer).unwrap();
        assert_eq!(ids, vec![forests, beaches]);
        assert_eq!(tax.parse_answer("None").unwrap(), Vec::<usize>::new());
        assert!(tax.parse_answer("Not a class").is_err());
    }
}
