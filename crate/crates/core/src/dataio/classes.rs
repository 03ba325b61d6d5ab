use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::maskgeom::ClassId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassEntry {
    pub id: ClassId,
    pub name: String,
    pub aliases: Vec<String>,
}

/// Ordered class list with dense ids from 0 (background). Aliases resolve to
/// the canonical entry, so renamed categories from other label spaces map
/// onto this table.
///
/// Text form, one class per line in id order, aliases after a colon:
///
/// ```text
/// background
/// motorcycle: motor bikes, motorbike
/// tv: television, tvmonitor
/// ```
#[derive(Clone, Debug)]
pub struct ClassTable {
    entries: Vec<ClassEntry>,
    lookup: HashMap<String, ClassId>,
}

impl PartialEq for ClassTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

fn normalize(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl ClassTable {
    /// `classes[i]` becomes id `i`; index 0 is the background class.
    pub fn new<N, A>(classes: impl IntoIterator<Item = (N, A)>) -> Result<Self>
    where
        N: Into<String>,
        A: IntoIterator,
        A::Item: Into<String>,
    {
        let mut entries = Vec::new();
        let mut lookup = HashMap::new();
        for (i, (name, aliases)) in classes.into_iter().enumerate() {
            if i >= ClassId::IGNORE.0 as usize {
                return Err(Error::Dataset(
                    "class table exceeds 255 entries; 255 is the ignore value".into(),
                ));
            }
            let id = ClassId(i as u8);
            let entry = ClassEntry {
                id,
                name: name.into(),
                aliases: aliases.into_iter().map(Into::into).collect(),
            };
            for n in std::iter::once(&entry.name).chain(&entry.aliases) {
                let key = normalize(n);
                if key.is_empty() {
                    return Err(Error::Dataset(format!("empty class name for id {id}")));
                }
                if let Some(prev) = lookup.insert(key, id) {
                    if prev != id {
                        return Err(Error::Dataset(format!("class name {n:?} used by ids {prev} and {id}")));
                    }
                }
            }
            entries.push(entry);
        }
        if entries.len() < 2 {
            return Err(Error::Dataset(
                "class table needs background plus at least one class".into(),
            ));
        }
        Ok(ClassTable { entries, lookup })
    }

    /// Table without aliases; `names[0]` is background.
    pub fn from_names<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(names.into_iter().map(|n| (n, Vec::<String>::new())))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut classes = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, aliases) = match line.split_once(':') {
                Some((n, a)) => (
                    n.trim().to_string(),
                    a.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect(),
                ),
                None => (line.to_string(), Vec::new()),
            };
            classes.push((name, aliases));
        }
        Self::new(classes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.name);
            if !e.aliases.is_empty() {
                out.push_str(": ");
                out.push_str(&e.aliases.join(", "));
            }
            out.push('\n');
        }
        out
    }

    /// PASCAL VOC 2012 classes, with the renamed spellings used by other
    /// label spaces as aliases.
    pub fn pascal_voc() -> Self {
        let table: [(&str, &[&str]); 21] = [
            ("background", &[]),
            ("aeroplane", &["airplane"]),
            ("bicycle", &[]),
            ("bird", &[]),
            ("boat", &[]),
            ("bottle", &[]),
            ("bus", &[]),
            ("car", &[]),
            ("cat", &[]),
            ("chair", &[]),
            ("cow", &[]),
            ("diningtable", &["dining table"]),
            ("dog", &[]),
            ("horse", &[]),
            ("motorcycle", &["motorbike", "motor bikes"]),
            ("person", &[]),
            ("pottedplant", &["potted plant"]),
            ("sheep", &[]),
            ("sofa", &[]),
            ("train", &[]),
            ("tv", &["tvmonitor", "television"]),
        ];
        Self::new(table.iter().map(|(n, a)| (*n, a.iter().copied()))).expect("static table is valid")
    }

    pub fn resolve(&self, name: &str) -> Option<ClassId> {
        self.lookup.get(&normalize(name)).copied()
    }

    /// Resolves every name, or fails listing all names that did not resolve.
    pub fn resolve_all<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> Result<Vec<ClassId>> {
        let mut ids = Vec::new();
        let mut unknown = Vec::new();
        for n in names {
            match self.resolve(n) {
                Some(id) => ids.push(id),
                None => unknown.push(n.to_string()),
            }
        }
        if unknown.is_empty() {
            Ok(ids)
        } else {
            unknown.sort();
            unknown.dedup();
            Err(Error::UnknownClass(unknown))
        }
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.entries.get(id.0 as usize).map(|e| e.name.as_str())
    }

    pub fn contains(&self, id: ClassId) -> bool {
        (id.0 as usize) < self.entries.len()
    }

    /// Number of classes including background.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn foreground(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.entries.iter().skip(1).map(|e| e.id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alias_resolves_to_canonical() {
        let t = ClassTable::pascal_voc();
        let id = t.resolve("motor bikes").unwrap();
        assert_eq!(t.name(id), Some("motorcycle"));
        assert_eq!(t.resolve("  Motor   Bikes "), Some(id));
        assert_eq!(t.name(t.resolve("television").unwrap()), Some("tv"));
        assert_eq!(t.len(), 21);
    }

    #[test]
    fn parse_roundtrip() {
        let text = "background\ncat: kitty, house cat\n# comment\n\ndog\n";
        let t = ClassTable::parse(text).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.resolve("house cat"), Some(ClassId(1)));
        assert_eq!(ClassTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(ClassTable::parse("background\ncat\ndog: cat\n").is_err());
        assert!(ClassTable::parse("background\n").is_err());
    }

    #[test]
    fn resolve_all_lists_offenders() {
        let t = ClassTable::from_names(["background", "cat"]).unwrap();
        match t.resolve_all(["cat", "zebra", "yak", "zebra"]) {
            Err(Error::UnknownClass(names)) => assert_eq!(names, vec!["yak", "zebra"]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
