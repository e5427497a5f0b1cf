//! Heterogeneous source adapters.
//!
//! Three kinds of source load eagerly into memory on registration:
//!
//! * `table`: a UTF-8 CSV file with a header row; the key column is
//!   `key_field` or else the first header column.
//! * `media`: a JSON manifest `[{"id", "category", "subcategory", "uri"}]`.
//! * `content`: a directory of UTF-8 text documents keyed by file stem.
//!
//! After loading, the only way state changes is through
//! [`SourceRegistry::emit_update`], which appends to an ordered event log and
//! forwards each event to subscribers in sequence order.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, Sender};

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::ids::SourceId;
use crate::predicate::Predicate;
use crate::value::{Attributes, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Table,
    Media,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDescriptor {
    pub id: SourceId,
    pub kind: SourceKind,
    pub location: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_field: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub source: SourceId,
    pub key: Value,
    pub fields: BTreeMap<String, Value>,
}

impl Attributes for Record {
    fn attr(&self, name: &str) -> Option<Cow<'_, Value>> {
        self.fields.get(name).map(Cow::Borrowed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaCategory {
    Audio,
    Video,
    Image,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageSubcategory {
    Photo,
    Logo,
    Catalogue,
}

impl FromStr for MediaCategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "audio" => Ok(Self::Audio),
            "video" => Ok(Self::Video),
            "image" => Ok(Self::Image),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

impl FromStr for ImageSubcategory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "photo" => Ok(Self::Photo),
            "logo" => Ok(Self::Logo),
            "catalogue" => Ok(Self::Catalogue),
            other => Err(format!("unknown subcategory `{other}`")),
        }
    }
}

/// A manifest entry as written; categories are checked by
/// [`categorize_media`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaAsset {
    pub id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
    pub uri: String,
}

impl MediaAsset {
    fn to_fields(&self) -> BTreeMap<String, Value> {
        let mut fields = BTreeMap::from([
            ("id".to_owned(), Value::text(&self.id)),
            ("category".to_owned(), Value::text(&self.category)),
            ("uri".to_owned(), Value::text(&self.uri)),
        ]);
        if let Some(sub) = &self.subcategory {
            fields.insert("subcategory".to_owned(), Value::text(sub));
        }
        fields
    }

    /// Reads an asset back out of a media record.
    pub fn from_record(record: &Record) -> Result<Self> {
        let text = |name: &str| record.fields.get(name).map(|v| v.to_string());
        let id = record.key.to_string();
        Ok(MediaAsset {
            category: text("category").ok_or_else(|| Error::InvalidCategory {
                asset: id.clone(),
                reason: "no category".into(),
            })?,
            subcategory: text("subcategory"),
            uri: text("uri").unwrap_or_default(),
            id,
        })
    }
}

/// Image assets carry exactly one subcategory; audio and video carry none.
pub fn categorize_media(asset: &MediaAsset) -> Result<(MediaCategory, Option<ImageSubcategory>)> {
    let invalid = |reason: String| Error::InvalidCategory {
        asset: asset.id.clone(),
        reason,
    };
    let category: MediaCategory = asset.category.parse().map_err(invalid)?;
    match (category, &asset.subcategory) {
        (MediaCategory::Image, None) => Err(Error::MissingSubcategory(asset.id.clone())),
        (MediaCategory::Image, Some(sub)) => Ok((category, Some(sub.parse().map_err(invalid)?))),
        (_, None) => Ok((category, None)),
        (_, Some(sub)) => Err(invalid(format!(
            "only images have subcategories, got `{sub}`"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Change {
    /// Inserts the record or overwrites the given fields of an existing one.
    Upsert(BTreeMap<String, Value>),
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub seq: u64,
    pub source: SourceId,
    pub key: Value,
    pub change: Change,
}

#[derive(Debug, Clone)]
struct LoadedSource {
    desc: SourceDescriptor,
    columns: IndexSet<String>,
    key_field: String,
    records: BTreeMap<Value, Record>,
}

impl LoadedSource {
    fn apply(&mut self, key: &Value, change: &Change) {
        match change {
            Change::Delete => {
                self.records.remove(key);
            }
            Change::Upsert(fields) => {
                self.columns.extend(fields.keys().cloned());
                let record = self.records.entry(key.clone()).or_insert_with(|| Record {
                    source: self.desc.id.clone(),
                    key: key.clone(),
                    fields: BTreeMap::new(),
                });
                record
                    .fields
                    .extend(fields.iter().map(|(k, v)| (k.clone(), v.clone())));
                record.fields.insert(self.key_field.clone(), key.clone());
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SourceRegistry {
    sources: IndexMap<SourceId, LoadedSource>,
    seq: u64,
    log: Vec<UpdateEvent>,
    subscribers: Vec<Sender<UpdateEvent>>,
}

impl SourceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads the source, resolving a relative location against `base_dir`.
    pub fn register_source(&mut self, desc: SourceDescriptor, base_dir: &Path) -> Result<SourceId> {
        if self.sources.contains_key(&desc.id) {
            return Err(Error::duplicate("source", &desc.id));
        }
        let path = base_dir.join(&desc.location);
        let loaded = match desc.kind {
            SourceKind::Table => load_table(&desc, &path)?,
            SourceKind::Media => load_media(&desc, &path)?,
            SourceKind::Content => load_content(&desc, &path)?,
        };
        let id = desc.id.clone();
        self.sources.insert(id.clone(), loaded);
        Ok(id)
    }

    /// Registers a source from in-memory rows instead of a file.
    pub fn register_rows(
        &mut self,
        desc: SourceDescriptor,
        columns: Vec<String>,
        rows: Vec<BTreeMap<String, Value>>,
    ) -> Result<SourceId> {
        if self.sources.contains_key(&desc.id) {
            return Err(Error::duplicate("source", &desc.id));
        }
        let key_field = desc
            .key_field
            .clone()
            .or_else(|| columns.first().cloned())
            .ok_or_else(|| Error::Invalid {
                section: "sources",
                id: desc.id.to_string(),
                reason: "no columns".into(),
            })?;
        let mut source = LoadedSource {
            columns: columns.into_iter().collect(),
            key_field,
            records: BTreeMap::new(),
            desc,
        };
        for row in rows {
            insert_row(&mut source, row)?;
        }
        let id = source.desc.id.clone();
        self.sources.insert(id.clone(), source);
        Ok(id)
    }

    fn source(&self, id: &str) -> Result<&LoadedSource> {
        self.sources
            .get(id)
            .ok_or_else(|| Error::unknown("source", id))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.sources.contains_key(id)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &SourceDescriptor> {
        self.sources.values().map(|s| &s.desc)
    }

    pub fn descriptor(&self, id: &str) -> Result<&SourceDescriptor> {
        Ok(&self.source(id)?.desc)
    }

    pub fn columns(&self, id: &str) -> Result<Vec<String>> {
        Ok(self.source(id)?.columns.iter().cloned().collect())
    }

    pub fn key_field(&self, id: &str) -> Result<&str> {
        Ok(&self.source(id)?.key_field)
    }

    pub fn record(&self, id: &str, key: &Value) -> Result<Option<&Record>> {
        Ok(self.source(id)?.records.get(key))
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn last_seq(&self) -> u64 {
        self.seq
    }

    pub fn log(&self) -> &[UpdateEvent] {
        &self.log
    }

    pub fn fetch_records(&self, source: &str, pred: &Predicate) -> Result<Vec<Record>> {
        self.fetch_records_with(Executor::default(), source, pred)
    }

    /// Matching records in key order.
    pub fn fetch_records_with(
        &self,
        exec: Executor,
        source: &str,
        pred: &Predicate,
    ) -> Result<Vec<Record>> {
        let records: Vec<&Record> = self.source(source)?.records.values().collect();
        Ok(exec.filter_map(&records, |r| pred.eval(*r).then(|| (*r).clone())))
    }

    pub fn join_records(&self, left: &str, right: &str, key: &str) -> Result<Vec<Record>> {
        self.join_records_with(Executor::default(), left, right, key)
    }

    /// Equi-join on `key`. Output rows keep the left record's key; right
    /// fields that clash with left ones are renamed `<right>.<field>`, and
    /// the join column appears once. Rows come out in left-key order, then
    /// right-key order.
    pub fn join_records_with(
        &self,
        exec: Executor,
        left: &str,
        right: &str,
        key: &str,
    ) -> Result<Vec<Record>> {
        let l = self.source(left)?;
        let r = self.source(right)?;
        for s in [l, r] {
            if !s.columns.contains(key) {
                return Err(Error::MissingKeyField {
                    source_id: s.desc.id.to_string(),
                    key: key.to_owned(),
                });
            }
        }
        let mut index: HashMap<&Value, Vec<&Record>> = HashMap::new();
        for rec in r.records.values() {
            if let Some(k) = rec.fields.get(key) {
                index.entry(k).or_default().push(rec);
            }
        }
        let lefts: Vec<&Record> = l.records.values().collect();
        Ok(exec.flat_map(&lefts, |lrec| {
            let Some(k) = lrec.fields.get(key) else {
                return Vec::new();
            };
            index
                .get(k)
                .map(|matches| {
                    matches
                        .iter()
                        .map(|rrec| merge(lrec, rrec, key, r.desc.id.as_str()))
                        .collect()
                })
                .unwrap_or_default()
        }))
    }

    pub fn subscribe(&mut self) -> Receiver<UpdateEvent> {
        let (tx, rx) = mpsc::channel();
        self.subscribers.push(tx);
        rx
    }

    /// Applies a change, logs it with the next sequence number and notifies
    /// subscribers. Deleting an absent key is logged but changes nothing.
    pub fn emit_update(&mut self, source: &str, key: Value, change: Change) -> Result<UpdateEvent> {
        let loaded = self
            .sources
            .get_mut(source)
            .ok_or_else(|| Error::unknown("source", source))?;
        if loaded.desc.kind == SourceKind::Media {
            if let Change::Upsert(fields) = &change {
                let mut probe = loaded.records.get(&key).cloned().unwrap_or_else(|| Record {
                    source: loaded.desc.id.clone(),
                    key: key.clone(),
                    fields: BTreeMap::new(),
                });
                probe.fields.extend(fields.clone());
                categorize_media(&MediaAsset::from_record(&probe)?)?;
            }
        }
        loaded.apply(&key, &change);
        self.seq += 1;
        let event = UpdateEvent {
            seq: self.seq,
            source: loaded.desc.id.clone(),
            key,
            change,
        };
        self.log.push(event.clone());
        self.subscribers.retain(|tx| tx.send(event.clone()).is_ok());
        Ok(event)
    }
}

fn merge(left: &Record, right: &Record, key: &str, right_id: &str) -> Record {
    let mut fields = left.fields.clone();
    for (name, value) in &right.fields {
        if name == key {
            continue;
        }
        if fields.contains_key(name) {
            fields.insert(format!("{right_id}.{name}"), value.clone());
        } else {
            fields.insert(name.clone(), value.clone());
        }
    }
    Record {
        source: left.source.clone(),
        key: left.key.clone(),
        fields,
    }
}

fn unreadable(path: &Path, err: impl ToString) -> Error {
    Error::UnreadableLocation {
        path: path.display().to_string(),
        reason: err.to_string(),
    }
}

fn insert_row(source: &mut LoadedSource, row: BTreeMap<String, Value>) -> Result<()> {
    let key = row
        .get(&source.key_field)
        .cloned()
        .ok_or_else(|| Error::Invalid {
            section: "sources",
            id: source.desc.id.to_string(),
            reason: format!("row without key field `{}`", source.key_field),
        })?;
    if source.records.contains_key(&key) {
        return Err(Error::Invalid {
            section: "sources",
            id: source.desc.id.to_string(),
            reason: format!("duplicate key `{key}`"),
        });
    }
    source.records.insert(
        key.clone(),
        Record {
            source: source.desc.id.clone(),
            key,
            fields: row,
        },
    );
    Ok(())
}

fn load_table(desc: &SourceDescriptor, path: &Path) -> Result<LoadedSource> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| unreadable(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| unreadable(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    let key_field = match &desc.key_field {
        Some(k) if headers.contains(k) => k.clone(),
        Some(k) => {
            return Err(Error::MissingKeyField {
                source_id: desc.id.to_string(),
                key: k.clone(),
            })
        }
        None => headers
            .first()
            .cloned()
            .ok_or_else(|| unreadable(path, "empty header"))?,
    };
    let mut source = LoadedSource {
        desc: desc.clone(),
        columns: headers.iter().cloned().collect(),
        key_field,
        records: BTreeMap::new(),
    };
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let fields = headers
            .iter()
            .zip(row.iter())
            .map(|(h, cell)| (h.clone(), Value::infer(cell)))
            .collect();
        insert_row(&mut source, fields)?;
    }
    Ok(source)
}

fn load_media(desc: &SourceDescriptor, path: &Path) -> Result<LoadedSource> {
    let text = fs::read_to_string(path).map_err(|e| unreadable(path, e))?;
    let assets: Vec<MediaAsset> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut source = LoadedSource {
        desc: desc.clone(),
        columns: ["id", "category", "subcategory", "uri"]
            .map(String::from)
            .into_iter()
            .collect(),
        key_field: "id".to_owned(),
        records: BTreeMap::new(),
    };
    for asset in &assets {
        categorize_media(asset)?;
        insert_row(&mut source, asset.to_fields())?;
    }
    Ok(source)
}

fn load_content(desc: &SourceDescriptor, path: &Path) -> Result<LoadedSource> {
    let entries = fs::read_dir(path).map_err(|e| unreadable(path, e))?;
    let mut files: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()).map_err(|err| unreadable(path, err)))
        .collect::<Result<_>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    let mut source = LoadedSource {
        desc: desc.clone(),
        columns: ["key", "text"].map(String::from).into_iter().collect(),
        key_field: "key".to_owned(),
        records: BTreeMap::new(),
    };
    for file in files {
        let Some(stem) = file.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let text = fs::read_to_string(&file).map_err(|e| unreadable(&file, e))?;
        let fields = BTreeMap::from([
            ("key".to_owned(), Value::text(stem)),
            ("text".to_owned(), Value::Text(text)),
        ]);
        insert_row(&mut source, fields)?;
    }
    Ok(source)
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;

    fn fixture() -> (tempfile::TempDir, SourceRegistry) {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("hr.csv"),
            "emp_id,name\n1,A. Ivanov\n2,B. Petrov\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("fin.csv"),
            "emp_id,shares,name\n1,4000,Ivanov A.\n2,1000,Petrov B.\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("media.json"),
            r#"[{"id":"portrait","category":"image","subcategory":"photo","uri":"media/portrait.jpg"},
                {"id":"anthem","category":"audio","uri":"media/anthem.mp3"}]"#,
        )
        .unwrap();
        fs::create_dir(dir.path().join("press")).unwrap();
        fs::write(dir.path().join("press/release-1.txt"), "Results are in.").unwrap();
        let mut reg = SourceRegistry::new();
        for (id, kind, loc) in [
            ("hr", SourceKind::Table, "hr.csv"),
            ("fin", SourceKind::Table, "fin.csv"),
            ("media", SourceKind::Media, "media.json"),
            ("press", SourceKind::Content, "press"),
        ] {
            reg.register_source(
                SourceDescriptor {
                    id: id.into(),
                    kind,
                    location: loc.into(),
                    key_field: None,
                },
                dir.path(),
            )
            .unwrap();
        }
        (dir, reg)
    }

    #[test]
    fn register_and_fetch() {
        let (dir, mut reg) = fixture();
        assert_eq!(reg.len(), 4);
        assert_eq!(reg.fetch_records("hr", &Predicate::TRUE).unwrap().len(), 2);
        let two = reg
            .fetch_records("hr", &"emp_id = 2".parse().unwrap())
            .unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].fields["name"], Value::text("B. Petrov"));
        let press = reg.fetch_records("press", &Predicate::TRUE).unwrap();
        assert_eq!(press[0].key, Value::text("release-1"));

        let dup = reg.descriptor("hr").unwrap().clone();
        assert!(matches!(
            reg.register_source(dup, dir.path()),
            Err(Error::DuplicateId { .. })
        ));
        let missing = SourceDescriptor {
            id: "x".into(),
            kind: SourceKind::Table,
            location: "nope.csv".into(),
            key_field: None,
        };
        assert!(matches!(
            reg.register_source(missing, dir.path()),
            Err(Error::UnreadableLocation { .. })
        ));
        assert!(reg.fetch_records("nope", &Predicate::TRUE).is_err());
    }

    #[test]
    fn join_prefixes_right_collisions() {
        let (_dir, reg) = fixture();
        let rows = reg.join_records("hr", "fin", "emp_id").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].fields["name"], Value::text("A. Ivanov"));
        assert_eq!(rows[0].fields["fin.name"], Value::text("Ivanov A."));
        assert_eq!(rows[0].fields["shares"], Value::Int(4000));
        assert!(!rows[0].fields.contains_key("fin.emp_id"));
        assert!(matches!(
            reg.join_records("hr", "media", "emp_id"),
            Err(Error::MissingKeyField { .. })
        ));
        let self_join = reg.join_records("hr", "hr", "emp_id").unwrap();
        assert_eq!(self_join.len(), 2);
    }

    #[test]
    fn join_with_empty_right_is_empty() {
        let (_dir, mut reg) = fixture();
        for k in [1, 2] {
            reg.emit_update("fin", Value::Int(k), Change::Delete)
                .unwrap();
        }
        assert!(reg.join_records("hr", "fin", "emp_id").unwrap().is_empty());
    }

    #[test]
    fn media_categories() {
        let asset = |cat: &str, sub: Option<&str>| MediaAsset {
            id: "a".into(),
            category: cat.into(),
            subcategory: sub.map(String::from),
            uri: String::new(),
        };
        assert_eq!(
            categorize_media(&asset("image", Some("photo"))).unwrap(),
            (MediaCategory::Image, Some(ImageSubcategory::Photo))
        );
        assert_eq!(
            categorize_media(&asset("audio", None)).unwrap(),
            (MediaCategory::Audio, None)
        );
        assert!(matches!(
            categorize_media(&asset("image", None)),
            Err(Error::MissingSubcategory(_))
        ));
        assert!(matches!(
            categorize_media(&asset("text", None)),
            Err(Error::InvalidCategory { .. })
        ));
        assert!(matches!(
            categorize_media(&asset("video", Some("logo"))),
            Err(Error::InvalidCategory { .. })
        ));
    }

    #[test]
    fn events_are_sequenced_and_delivered() {
        let (_dir, mut reg) = fixture();
        let rx = reg.subscribe();
        let a = reg
            .emit_update(
                "fin",
                Value::Int(1),
                Change::Upsert([("shares".into(), Value::Int(5000))].into()),
            )
            .unwrap();
        let b = reg
            .emit_update("hr", Value::Int(9), Change::Delete)
            .unwrap();
        assert_eq!((a.seq, b.seq), (1, 2));
        assert_eq!(rx.try_iter().map(|e| e.seq).collect::<Vec<_>>(), vec![1, 2]);
        let fin = reg
            .fetch_records("fin", &"emp_id = 1".parse().unwrap())
            .unwrap();
        assert_eq!(fin[0].fields["shares"], Value::Int(5000));
        assert_eq!(fin[0].fields["name"], Value::text("Ivanov A."));
        assert!(reg
            .emit_update("nope", Value::Int(1), Change::Delete)
            .is_err());
        // media upserts must stay well-formed
        let bad = Change::Upsert([("category".into(), Value::text("image"))].into());
        assert!(reg.emit_update("media", Value::text("new"), bad).is_err());
        assert_eq!(reg.last_seq(), 2);
    }
}
