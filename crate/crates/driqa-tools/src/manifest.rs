//! Dataset manifests.
//!
//! A manifest is a newline-delimited, tab-separated table with one
//! self-describing header line naming the format version and the field
//! order. Each record describes one image file: the pristine originals
//! (`PR`), first-stage degraded images (`DR`), and second-stage final
//! images (`FD`). Paths are relative to the manifest's own directory and
//! always use forward slashes, so a database directory can be moved or
//! copied wholesale.
//!
//! Field semantics per role:
//!
//! | field    | PR             | DR                    | FD                     |
//! |----------|----------------|-----------------------|------------------------|
//! | pristine | its own id     | the source PR id      | the source PR id       |
//! | kind     | `-`            | single distortion     | distortion combination |
//! | level1   | 0              | first-stage level     | first-stage level      |
//! | level2   | 0              | 0                     | second-stage level     |
//! | seed     | database seed  | per-pristine seed     | per-pristine seed      |
//! | label    | `-`            | benchmark label 0–100 | benchmark label 0–100  |
//!
//! An FD record does not name its DR parent explicitly: the parent is the
//! DR of the same pristine whose kind equals the first member of the FD's
//! combination at the same `level1`. [`Manifest::validate`] checks that
//! this resolution succeeds for every FD record.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use driqa_core::distort::{ComboType, DistortionType, LEVELS_STAGE1, LEVELS_STAGE2};

use crate::error::{Result, ToolError};

/// Format tag carried in the header line.
pub const MANIFEST_VERSION: &str = "driqa-manifest/1";
/// Conventional manifest file name inside a database directory.
pub const MANIFEST_FILE: &str = "manifest.tsv";
/// Field order, also spelled out in the header line.
const FIELDS: [&str; 9] = [
    "id", "role", "path", "pristine", "kind", "level1", "level2", "seed", "label",
];

/// Which stage of the pipeline an image belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// Pristine original.
    Pristine,
    /// Output of the first distortion stage.
    Degraded,
    /// Output of the second distortion stage.
    Final,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Pristine => "PR",
            Role::Degraded => "DR",
            Role::Final => "FD",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "PR" => Ok(Role::Pristine),
            "DR" => Ok(Role::Degraded),
            "FD" => Ok(Role::Final),
            other => Err(ToolError::Format(format!("unknown role '{other}'"))),
        }
    }
}

/// One image file in a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    /// Unique id, also the basis of the file name.
    pub id: String,
    pub role: Role,
    /// File path relative to the manifest's directory, forward slashes.
    pub path: String,
    /// Id of the pristine record this image descends from (self for PR).
    pub pristine: String,
    /// Distortion kind: a single-distortion name for DR, a combination
    /// name for FD, absent for PR.
    pub kind: Option<String>,
    /// First-stage distortion level (0 for PR).
    pub level1: u8,
    /// Second-stage distortion level (0 for PR and DR).
    pub level2: u8,
    /// Seed the record's generation drew from.
    pub seed: u64,
    /// Benchmark quality label in [0, 100]; absent until annotation and
    /// always absent for PR.
    pub label: Option<f64>,
}

impl ManifestRecord {
    /// The single-distortion kind of a DR record.
    pub fn distortion(&self) -> Result<DistortionType> {
        match (&self.kind, self.role) {
            (Some(k), Role::Degraded) => Ok(DistortionType::parse(k)?),
            _ => Err(ToolError::Validation(format!(
                "record '{}' has no single-distortion kind",
                self.id
            ))),
        }
    }

    /// The combination kind of an FD record.
    pub fn combo(&self) -> Result<ComboType> {
        match (&self.kind, self.role) {
            (Some(k), Role::Final) => Ok(ComboType::parse(k)?),
            _ => Err(ToolError::Validation(format!(
                "record '{}' has no combination kind",
                self.id
            ))),
        }
    }

    fn to_line(&self) -> String {
        let kind = self.kind.as_deref().unwrap_or("-");
        let label = match self.label {
            Some(v) => format!("{v:.16e}"),
            None => "-".to_string(),
        };
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.role.name(),
            self.path,
            self.pristine,
            kind,
            self.level1,
            self.level2,
            self.seed,
            label
        )
    }

    fn parse_line(line: &str, lineno: usize) -> Result<Self> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != FIELDS.len() {
            return Err(ToolError::Format(format!(
                "manifest line {lineno}: expected {} fields, found {}",
                FIELDS.len(),
                cols.len()
            )));
        }
        let bad = |field: &str, v: &str| {
            ToolError::Format(format!("manifest line {lineno}: bad {field} '{v}'"))
        };
        let kind = match cols[4] {
            "-" => None,
            k => Some(k.to_string()),
        };
        let label = match cols[8] {
            "-" => None,
            v => Some(v.parse::<f64>().map_err(|_| bad("label", v))?),
        };
        Ok(ManifestRecord {
            id: cols[0].to_string(),
            role: Role::parse(cols[1])?,
            path: cols[2].to_string(),
            pristine: cols[3].to_string(),
            kind,
            level1: cols[5].parse().map_err(|_| bad("level1", cols[5]))?,
            level2: cols[6].parse().map_err(|_| bad("level2", cols[6]))?,
            seed: cols[7].parse().map_err(|_| bad("seed", cols[7]))?,
            label,
        })
    }
}

/// A full dataset description.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

fn role_rank(role: Role) -> u8 {
    match role {
        Role::Pristine => 0,
        Role::Degraded => 1,
        Role::Final => 2,
    }
}

impl Manifest {
    /// Sorts records into the canonical order: pristines first, then
    /// degraded, then final images; within a role by pristine id, kind,
    /// and levels. Saving always sorts, so equal record sets serialize to
    /// equal bytes.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            (
                role_rank(a.role),
                &a.pristine,
                &a.kind,
                a.level1,
                a.level2,
                &a.id,
            )
                .cmp(&(
                    role_rank(b.role),
                    &b.pristine,
                    &b.kind,
                    b.level1,
                    b.level2,
                    &b.id,
                ))
        });
    }

    /// Serializes to the tab-separated text form.
    pub fn to_text(&self) -> String {
        let mut sorted = self.clone();
        sorted.sort();
        let mut out = String::new();
        out.push('#');
        out.push_str(MANIFEST_VERSION);
        for f in FIELDS {
            out.push('\t');
            out.push_str(f);
        }
        out.push('\n');
        for rec in &sorted.records {
            out.push_str(&rec.to_line());
            out.push('\n');
        }
        out
    }

    /// Parses the text form, requiring the exact header this version writes.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| ToolError::Format("empty manifest".into()))?;
        let mut expected = format!("#{MANIFEST_VERSION}");
        for f in FIELDS {
            expected.push('\t');
            expected.push_str(f);
        }
        if header != expected {
            return Err(ToolError::Format(format!(
                "unrecognized manifest header '{header}'"
            )));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            records.push(ManifestRecord::parse_line(line, i + 2)?);
        }
        Ok(Manifest { records })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| ToolError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        let manifest = Self::parse(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// All pristine records, sorted by id.
    pub fn pristines(&self) -> Vec<&ManifestRecord> {
        let mut prs: Vec<&ManifestRecord> = self
            .records
            .iter()
            .filter(|r| r.role == Role::Pristine)
            .collect();
        prs.sort_by(|a, b| a.id.cmp(&b.id));
        prs
    }

    /// Looks a record up by id.
    pub fn find(&self, id: &str) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Resolves the DR parent of an FD record: same pristine, kind equal to
    /// the first member of the FD's combination, same first-stage level.
    pub fn dr_of(&self, fd: &ManifestRecord) -> Result<&ManifestRecord> {
        let combo = fd.combo()?;
        let (first, _) = combo.stages().ok_or_else(|| {
            ToolError::Validation(format!(
                "record '{}' names aggregate combination '{}'",
                fd.id,
                combo.name()
            ))
        })?;
        self.records
            .iter()
            .find(|r| {
                r.role == Role::Degraded
                    && r.pristine == fd.pristine
                    && r.level1 == fd.level1
                    && r.kind.as_deref() == Some(first.name())
            })
            .ok_or_else(|| {
                ToolError::Validation(format!(
                    "record '{}' has no matching DR ({} level {})",
                    fd.id,
                    first.name(),
                    fd.level1
                ))
            })
    }

    /// Structural consistency check: unique ids, role-consistent fields,
    /// resolvable parent references, labels in range.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for rec in &self.records {
            if !ids.insert(rec.id.as_str()) {
                return Err(ToolError::Validation(format!(
                    "duplicate record id '{}'",
                    rec.id
                )));
            }
            if rec.id.is_empty() || rec.path.is_empty() {
                return Err(ToolError::Validation(
                    "record ids and paths must be non-empty".into(),
                ));
            }
        }
        let pristine_ids: BTreeSet<&str> = self
            .records
            .iter()
            .filter(|r| r.role == Role::Pristine)
            .map(|r| r.id.as_str())
            .collect();
        for rec in &self.records {
            let err = |msg: String| Err(ToolError::Validation(format!("'{}': {msg}", rec.id)));
            if let Some(label) = rec.label {
                if !(0.0..=100.0).contains(&label) {
                    return err(format!("label {label} outside [0, 100]"));
                }
            }
            match rec.role {
                Role::Pristine => {
                    if rec.pristine != rec.id {
                        return err("pristine record must reference itself".into());
                    }
                    if rec.kind.is_some() || rec.level1 != 0 || rec.level2 != 0 {
                        return err("pristine record must carry no distortion fields".into());
                    }
                    if rec.label.is_some() {
                        return err("pristine record must carry no label".into());
                    }
                }
                Role::Degraded => {
                    if !pristine_ids.contains(rec.pristine.as_str()) {
                        return err(format!("unknown pristine '{}'", rec.pristine));
                    }
                    rec.distortion()?;
                    if rec.level1 == 0 || rec.level1 > LEVELS_STAGE1 {
                        return err(format!("first-stage level {} out of range", rec.level1));
                    }
                    if rec.level2 != 0 {
                        return err("degraded record must have level2 = 0".into());
                    }
                }
                Role::Final => {
                    if !pristine_ids.contains(rec.pristine.as_str()) {
                        return err(format!("unknown pristine '{}'", rec.pristine));
                    }
                    let combo = rec.combo()?;
                    if combo.stages().is_none() {
                        return err(format!(
                            "'{}' is an aggregate label, not a generating combination",
                            combo.name()
                        ));
                    }
                    if rec.level1 == 0 || rec.level1 > LEVELS_STAGE1 {
                        return err(format!("first-stage level {} out of range", rec.level1));
                    }
                    if rec.level2 == 0 || rec.level2 > LEVELS_STAGE2 {
                        return err(format!("second-stage level {} out of range", rec.level2));
                    }
                    self.dr_of(rec)?;
                }
            }
        }
        Ok(())
    }

    /// Maps each pristine id to its index in sorted-id order. This index is
    /// the numeric grouping key used by curve extraction and fitting.
    pub fn pristine_indices(&self) -> BTreeMap<String, u64> {
        self.pristines()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i as u64))
            .collect()
    }

    /// Counts records per role: (pristine, degraded, final).
    pub fn role_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for rec in &self.records {
            match rec.role {
                Role::Pristine => counts.0 += 1,
                Role::Degraded => counts.1 += 1,
                Role::Final => counts.2 += 1,
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_manifest() -> Manifest {
        let pr = ManifestRecord {
            id: "pr-a".into(),
            role: Role::Pristine,
            path: "images/pr-a.png".into(),
            pristine: "pr-a".into(),
            kind: None,
            level1: 0,
            level2: 0,
            seed: 7,
            label: None,
        };
        let dr = ManifestRecord {
            id: "dr-a-blur-l03".into(),
            role: Role::Degraded,
            path: "images/dr-a-blur-l03.png".into(),
            pristine: "pr-a".into(),
            kind: Some("blur".into()),
            level1: 3,
            level2: 0,
            seed: 99,
            label: Some(87.25),
        };
        let fd = ManifestRecord {
            id: "fd-a-blur-jpeg-l03-m05".into(),
            role: Role::Final,
            path: "images/fd-a-blur-jpeg-l03-m05.png".into(),
            pristine: "pr-a".into(),
            kind: Some("blur-jpeg".into()),
            level1: 3,
            level2: 5,
            seed: 99,
            label: Some(64.125),
        };
        Manifest {
            records: vec![fd, dr, pr],
        }
    }

    #[test]
    fn round_trip_preserves_records_and_labels_exactly() {
        let manifest = tiny_manifest();
        let text = manifest.to_text();
        let back = Manifest::parse(&text).unwrap();
        back.validate().unwrap();
        let mut sorted = manifest.clone();
        sorted.sort();
        assert_eq!(back, sorted);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn serialization_is_order_independent() {
        let manifest = tiny_manifest();
        let mut reversed = manifest.clone();
        reversed.records.reverse();
        assert_eq!(manifest.to_text(), reversed.to_text());
    }

    #[test]
    fn validate_rejects_orphan_fd() {
        let mut manifest = tiny_manifest();
        manifest.records.retain(|r| r.role != Role::Degraded);
        let err = manifest.validate().unwrap_err();
        assert!(matches!(err, ToolError::Validation(_)));
    }

    #[test]
    fn validate_rejects_duplicate_ids() {
        let mut manifest = tiny_manifest();
        let dup = manifest.records[0].clone();
        manifest.records.push(dup);
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn validate_rejects_out_of_range_label() {
        let mut manifest = tiny_manifest();
        for rec in &mut manifest.records {
            if rec.role == Role::Final {
                rec.label = Some(100.5);
            }
        }
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn validate_rejects_aggregate_combo_rows() {
        let mut manifest = tiny_manifest();
        for rec in &mut manifest.records {
            if rec.role == Role::Final {
                rec.kind = Some("all-data".into());
            }
        }
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn dr_resolution_matches_first_stage_member() {
        let manifest = tiny_manifest();
        let fd = manifest.find("fd-a-blur-jpeg-l03-m05").unwrap();
        let dr = manifest.dr_of(fd).unwrap();
        assert_eq!(dr.id, "dr-a-blur-l03");
    }

    #[test]
    fn header_mismatch_is_a_format_error() {
        let err = Manifest::parse("#other/1\tid\n").unwrap_err();
        assert!(matches!(err, ToolError::Format(_)));
    }
}
