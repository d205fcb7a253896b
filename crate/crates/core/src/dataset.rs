//! Raw rating ingestion, median aggregation, deterministic splits, and label
//! distributions.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Number of Likert classes.
pub const NUM_CLASSES: usize = 6;

/// A Likert rating in 1..=6, used both as gold label and model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Label(u8);

impl Label {
    pub fn new(value: u8) -> Result<Self> {
        if (1..=NUM_CLASSES as u8).contains(&value) {
            Ok(Label(value))
        } else {
            Err(Error::Validation(format!(
                "label {value} outside 1..={NUM_CLASSES}"
            )))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based class index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Label::new(index as u8 + 1)
    }

    pub fn all() -> impl Iterator<Item = Label> {
        (1..=NUM_CLASSES as u8).map(Label)
    }
}

impl TryFrom<u8> for Label {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        Label::new(value)
    }
}

impl From<Label> for u8 {
    fn from(label: Label) -> u8 {
        label.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The three rating criteria collected per sentence pair.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Naturalness,
    Quality,
    Informativeness,
}

impl Criterion {
    pub fn all() -> [Criterion; 3] {
        [
            Criterion::Naturalness,
            Criterion::Quality,
            Criterion::Informativeness,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Naturalness => "naturalness",
            Criterion::Quality => "quality",
            Criterion::Informativeness => "informativeness",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naturalness" => Ok(Criterion::Naturalness),
            "quality" => Ok(Criterion::Quality),
            "informativeness" => Ok(Criterion::Informativeness),
            other => Err(Error::Config(format!(
                "unknown criterion `{other}` (expected naturalness, quality, or informativeness)"
            ))),
        }
    }
}

/// One judge's ratings of one (system output, human reference) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sys_ref: String,
    pub orig_ref: String,
    pub judge_id: String,
    pub naturalness: Label,
    pub quality: Label,
    pub informativeness: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

impl AnnotationRecord {
    pub fn rating(&self, criterion: Criterion) -> Label {
        match criterion {
            Criterion::Naturalness => self.naturalness,
            Criterion::Quality => self.quality,
            Criterion::Informativeness => self.informativeness,
        }
    }
}

/// A sentence pair with one median label per criterion; the training unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatedPair {
    pub sys_ref: String,
    pub orig_ref: String,
    pub labels: BTreeMap<Criterion, Label>,
    pub n_judges: usize,
}

impl RatedPair {
    pub fn label(&self, criterion: Criterion) -> Label {
        self.labels[&criterion]
    }
}

/// Maps the six required logical fields (plus two optional provenance tags)
/// to column names in the input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaMap {
    pub sys_ref: String,
    pub orig_ref: String,
    pub judge_id: String,
    pub naturalness: String,
    pub quality: String,
    pub informativeness: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_tag: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

impl Default for SchemaMap {
    fn default() -> Self {
        SchemaMap {
            sys_ref: "sys_ref".into(),
            orig_ref: "orig_ref".into(),
            judge_id: "judge".into(),
            naturalness: "naturalness".into(),
            quality: "quality".into(),
            informativeness: "informativeness".into(),
            system_tag: None,
            domain_tag: None,
        }
    }
}

/// Trim and collapse internal whitespace runs to single spaces.
pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn sniff_delimiter(path: &Path) -> Result<u8> {
    let file = File::open(path)?;
    let mut header = String::new();
    BufReader::new(file).read_line(&mut header)?;
    Ok(if header.contains('\t') { b'\t' } else { b',' })
}

/// Load one [`AnnotationRecord`] per input row, in file order.
///
/// The file is delimiter-separated (comma or tab, sniffed from the header
/// line) with a header row naming the columns mapped by `schema`.
pub fn load_records(path: &Path, schema: &SchemaMap) -> Result<Vec<AnnotationRecord>> {
    let delimiter = sniff_delimiter(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let sys_col = column(&schema.sys_ref)?;
    let orig_col = column(&schema.orig_ref)?;
    let judge_col = column(&schema.judge_id)?;
    let nat_col = column(&schema.naturalness)?;
    let qual_col = column(&schema.quality)?;
    let info_col = column(&schema.informativeness)?;
    let system_col = schema.system_tag.as_deref().map(column).transpose()?;
    let domain_col = schema.domain_tag.as_deref().map(column).transpose()?;

    let parse_rating = |row: usize, field: &str, name: &str| -> Result<Label> {
        let value: i64 = field.trim().parse().map_err(|_| Error::InvalidRow {
            row,
            message: format!("{name} rating `{field}` is not an integer"),
        })?;
        if !(1..=NUM_CLASSES as i64).contains(&value) {
            return Err(Error::InvalidRow {
                row,
                message: format!("{name} rating {value} outside 1..={NUM_CLASSES}"),
            });
        }
        Label::new(value as u8)
    };

    let mut records = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row = i + 1;
        let record = result?;
        let field = |col: usize| record.get(col).unwrap_or("").to_string();

        let sys_ref = field(sys_col);
        let orig_ref = field(orig_col);
        if normalize_ws(&sys_ref).is_empty() {
            return Err(Error::InvalidRow {
                row,
                message: "empty sys_ref text".into(),
            });
        }
        if normalize_ws(&orig_ref).is_empty() {
            return Err(Error::InvalidRow {
                row,
                message: "empty orig_ref text".into(),
            });
        }

        records.push(AnnotationRecord {
            sys_ref,
            orig_ref,
            judge_id: field(judge_col),
            naturalness: parse_rating(row, record.get(nat_col).unwrap_or(""), "naturalness")?,
            quality: parse_rating(row, record.get(qual_col).unwrap_or(""), "quality")?,
            informativeness: parse_rating(
                row,
                record.get(info_col).unwrap_or(""),
                "informativeness",
            )?,
            system_tag: system_col.map(field),
            domain_tag: domain_col.map(field),
        });
    }
    Ok(records)
}

/// Lower median: the element at index `floor((n-1)/2)` of the sorted ratings.
/// For odd n (the corpus has 3 judges per item) this is the true median, and
/// it keeps labels integral for even judge counts.
pub fn lower_median(ratings: &[Label]) -> Result<Label> {
    if ratings.is_empty() {
        return Err(Error::Validation("median of zero ratings".into()));
    }
    let mut sorted: Vec<u8> = ratings.iter().map(|l| l.value()).collect();
    sorted.sort_unstable();
    Label::new(sorted[(sorted.len() - 1) / 2])
}

/// Group records by the whitespace-normalized (sys_ref, orig_ref) pair and
/// reduce each criterion to the lower median over the group's judges.
///
/// Output order is the first-appearance order of each group. The stored text
/// is the raw text of the group's first record; only the grouping key is
/// normalized.
pub fn aggregate(records: &[AnnotationRecord]) -> Result<Vec<RatedPair>> {
    if records.is_empty() {
        return Err(Error::Validation("aggregate called with no records".into()));
    }
    let mut groups: IndexMap<(String, String), Vec<&AnnotationRecord>> = IndexMap::new();
    for record in records {
        let key = (normalize_ws(&record.sys_ref), normalize_ws(&record.orig_ref));
        groups.entry(key).or_default().push(record);
    }

    let mut pairs = Vec::with_capacity(groups.len());
    for group in groups.values() {
        let mut labels = BTreeMap::new();
        for criterion in Criterion::all() {
            let ratings: Vec<Label> = group.iter().map(|r| r.rating(criterion)).collect();
            labels.insert(criterion, lower_median(&ratings)?);
        }
        pairs.push(RatedPair {
            sys_ref: group[0].sys_ref.clone(),
            orig_ref: group[0].orig_ref.clone(),
            labels,
            n_judges: group.len(),
        });
    }
    Ok(pairs)
}

/// Train/dev/test fractions; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            dev: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("train", self.train), ("dev", self.dev), ("test", self.test)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Config(format!("{name} ratio {value} outside [0, 1]")));
            }
        }
        let sum = self.train + self.dev + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Disjoint train/dev/test partitions with the seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<RatedPair>,
    pub dev: Vec<RatedPair>,
    pub test: Vec<RatedPair>,
    pub seed: u64,
    pub ratios: SplitRatios,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffle pairs with a seeded permutation and partition by the floor rule:
/// `|dev| = floor(dev_ratio * n)`, `|test| = floor(test_ratio * n)`, train
/// takes the remainder. Identical inputs and seed give an identical split.
pub fn split(pairs: Vec<RatedPair>, ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    ratios.validate()?;
    if pairs.is_empty() {
        return Err(Error::Validation("split called with no pairs".into()));
    }
    let n = pairs.len();
    let n_dev = (ratios.dev * n as f64).floor() as usize;
    let n_test = (ratios.test * n as f64).floor() as usize;
    let n_train = n - n_dev - n_test;

    let mut shuffled = pairs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let test = shuffled.split_off(n_train + n_dev);
    let dev = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        train: shuffled,
        dev,
        test,
        seed,
        ratios,
    })
}

/// Exact per-label counts of one criterion over a pair set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub criterion: Criterion,
    /// counts[i] is the count of label i+1.
    pub counts: [u64; NUM_CLASSES],
    pub total: u64,
    pub majority_label: Label,
    pub majority_fraction: f64,
}

/// Tally labels of `criterion` over `pairs`. Majority ties break toward the
/// larger label value, matching the majority-baseline rule.
pub fn distribution(pairs: &[RatedPair], criterion: Criterion) -> Result<LabelDistribution> {
    if pairs.is_empty() {
        return Err(Error::Validation(
            "distribution called with no pairs".into(),
        ));
    }
    let mut counts = [0u64; NUM_CLASSES];
    for pair in pairs {
        counts[pair.label(criterion).index()] += 1;
    }
    let total: u64 = counts.iter().sum();
    // max_by_key keeps the last maximum, so ties resolve to the larger label
    let majority_index = counts
        .iter()
        .enumerate()
        .max_by_key(|(_, c)| **c)
        .map(|(i, _)| i)
        .unwrap();
    Ok(LabelDistribution {
        criterion,
        counts,
        total,
        majority_label: Label::from_index(majority_index)?,
        majority_fraction: counts[majority_index] as f64 / total as f64,
    })
}

/// On-disk description of a persisted split: seed, ratios, counts, and the
/// checksum of the raw input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub counts: SplitCounts,
    pub input_checksum: String,
    pub files: SplitFiles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub train: String,
    pub dev: String,
    pub test: String,
}

impl Default for SplitFiles {
    fn default() -> Self {
        SplitFiles {
            train: "train.jsonl".into(),
            dev: "dev.jsonl".into(),
            test: "test.jsonl".into(),
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Hex-encoded SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_jsonl(path: &Path, pairs: &[RatedPair]) -> Result<()> {
    let mut file = File::create(path)?;
    for pair in pairs {
        serde_json::to_writer(&mut file, pair)?;
        file.write_all(b"\n")?;
    }
    Ok(())
}

fn read_jsonl(path: &Path) -> Result<Vec<RatedPair>> {
    let file = File::open(path)?;
    let mut pairs = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(serde_json::from_str(&line)?);
    }
    Ok(pairs)
}

/// Persist a split as three JSON-lines files plus a manifest. Output is
/// byte-identical across reruns with the same inputs.
pub fn save_split(split: &DatasetSplit, input_checksum: &str, dir: &Path) -> Result<SplitManifest> {
    std::fs::create_dir_all(dir)?;
    let files = SplitFiles::default();
    write_jsonl(&dir.join(&files.train), &split.train)?;
    write_jsonl(&dir.join(&files.dev), &split.dev)?;
    write_jsonl(&dir.join(&files.test), &split.test)?;
    let manifest = SplitManifest {
        seed: split.seed,
        ratios: split.ratios,
        counts: SplitCounts {
            train: split.train.len(),
            dev: split.dev.len(),
            test: split.test.len(),
        },
        input_checksum: input_checksum.to_string(),
        files,
    };
    let mut file = File::create(dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    file.write_all(b"\n")?;
    Ok(manifest)
}

/// Load a split persisted by [`save_split`].
pub fn load_split(dir: &Path) -> Result<(DatasetSplit, SplitManifest)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: SplitManifest = serde_json::from_reader(File::open(&manifest_path)?)?;
    let split = DatasetSplit {
        train: read_jsonl(&dir.join(&manifest.files.train))?,
        dev: read_jsonl(&dir.join(&manifest.files.dev))?,
        test: read_jsonl(&dir.join(&manifest.files.test))?,
        seed: manifest.seed,
        ratios: manifest.ratios,
    };
    let counts = SplitCounts {
        train: split.train.len(),
        dev: split.dev.len(),
        test: split.test.len(),
    };
    if counts != manifest.counts {
        return Err(Error::ArtifactMismatch(format!(
            "split files hold {counts:?} pairs but the manifest records {:?}",
            manifest.counts
        )));
    }
    Ok((split, manifest))
}

/// SHA-256 over the manifest file, for checkpoint provenance.
pub fn manifest_checksum(dir: &Path) -> Result<String> {
    sha256_file(&dir.join(MANIFEST_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sys: &str, orig: &str, judge: &str, nat: u8, qual: u8, info: u8) -> AnnotationRecord {
        AnnotationRecord {
            sys_ref: sys.into(),
            orig_ref: orig.into(),
            judge_id: judge.into(),
            naturalness: Label::new(nat).unwrap(),
            quality: Label::new(qual).unwrap(),
            informativeness: Label::new(info).unwrap(),
            system_tag: None,
            domain_tag: None,
        }
    }

    fn pair_with(nat: u8) -> RatedPair {
        let mut labels = BTreeMap::new();
        labels.insert(Criterion::Naturalness, Label::new(nat).unwrap());
        labels.insert(Criterion::Quality, Label::new(nat).unwrap());
        labels.insert(Criterion::Informativeness, Label::new(nat).unwrap());
        RatedPair {
            sys_ref: format!("sys {nat}"),
            orig_ref: format!("ref {nat}"),
            labels,
            n_judges: 1,
        }
    }

    #[test]
    fn label_rejects_out_of_range() {
        assert!(Label::new(0).is_err());
        assert!(Label::new(7).is_err());
        assert_eq!(Label::new(6).unwrap().value(), 6);
    }

    #[test]
    fn load_records_parses_a_csv_row() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "sys_ref,orig_ref,judge,naturalness,quality,informativeness").unwrap();
        writeln!(
            file,
            "\"zuni cafe, is expensive.\",\"how about zuni cafe, an expensive one?\",1,6,5,6"
        )
        .unwrap();
        let records = load_records(file.path(), &SchemaMap::default()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].sys_ref, "zuni cafe, is expensive.");
        assert_eq!(records[0].orig_ref, "how about zuni cafe, an expensive one?");
        assert_eq!(records[0].judge_id, "1");
        assert_eq!(records[0].naturalness.value(), 6);
        assert_eq!(records[0].quality.value(), 5);
        assert_eq!(records[0].informativeness.value(), 6);
    }

    #[test]
    fn load_records_supports_tabs_and_preserves_order() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "sys_ref\torig_ref\tjudge\tnaturalness\tquality\tinformativeness").unwrap();
        for i in 1..=3 {
            writeln!(file, "sys {i}\tref {i}\t{i}\t{i}\t{i}\t{i}").unwrap();
        }
        let records = load_records(file.path(), &SchemaMap::default()).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[2].sys_ref, "sys 3");
    }

    #[test]
    fn load_records_rejects_out_of_range_rating() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "sys_ref,orig_ref,judge,naturalness,quality,informativeness").unwrap();
        writeln!(file, "a,b,1,7,5,5").unwrap();
        let err = load_records(file.path(), &SchemaMap::default()).unwrap_err();
        match err {
            Error::InvalidRow { row, .. } => assert_eq!(row, 1),
            other => panic!("expected InvalidRow, got {other:?}"),
        }
    }

    #[test]
    fn load_records_names_missing_column() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "sys_ref,orig_ref,judge,naturalness,quality").unwrap();
        writeln!(file, "a,b,1,5,5").unwrap();
        let err = load_records(file.path(), &SchemaMap::default()).unwrap_err();
        match err {
            Error::MissingColumn(name) => assert_eq!(name, "informativeness"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn load_records_rejects_empty_text() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "sys_ref,orig_ref,judge,naturalness,quality,informativeness").unwrap();
        writeln!(file, "\"   \",b,1,5,5,5").unwrap();
        assert!(matches!(
            load_records(file.path(), &SchemaMap::default()),
            Err(Error::InvalidRow { row: 1, .. })
        ));
    }

    #[test]
    fn aggregate_takes_medians_per_criterion() {
        let records = vec![
            record("zuni cafe, is expensive.", "how about zuni cafe, an expensive one?", "1", 6, 5, 6),
            record("zuni cafe, is expensive.", "how about zuni cafe, an expensive one?", "2", 5, 4, 6),
            record("zuni cafe, is expensive.", "how about zuni cafe, an expensive one?", "3", 6, 4, 5),
        ];
        let pairs = aggregate(&records).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].n_judges, 3);
        assert_eq!(pairs[0].label(Criterion::Naturalness).value(), 6);
        assert_eq!(pairs[0].label(Criterion::Quality).value(), 4);
        assert_eq!(pairs[0].label(Criterion::Informativeness).value(), 6);
    }

    #[test]
    fn aggregate_groups_by_normalized_text_and_keeps_first_raw() {
        let records = vec![
            record("a  cafe ", "the ref", "1", 3, 3, 3),
            record("a cafe", "the  ref ", "2", 5, 5, 5),
        ];
        let pairs = aggregate(&records).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].sys_ref, "a  cafe ");
        // lower median of (3, 5) is 3
        assert_eq!(pairs[0].label(Criterion::Naturalness).value(), 3);
    }

    #[test]
    fn lower_median_matches_stated_rule() {
        let labels = |vals: &[u8]| -> Vec<Label> {
            vals.iter().map(|v| Label::new(*v).unwrap()).collect()
        };
        assert_eq!(lower_median(&labels(&[4, 4, 4])).unwrap().value(), 4);
        assert_eq!(lower_median(&labels(&[3, 5])).unwrap().value(), 3);
        assert_eq!(lower_median(&labels(&[6, 5, 6])).unwrap().value(), 6);
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let pairs: Vec<RatedPair> = (0..10)
            .map(|i| {
                let mut p = pair_with((i % 6 + 1) as u8);
                p.sys_ref = format!("sys {i}");
                p
            })
            .collect();
        let s = split(pairs.clone(), SplitRatios::default(), 0).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (8, 1, 1));

        let again = split(pairs.clone(), SplitRatios::default(), 0).unwrap();
        assert_eq!(s, again);

        let all_train = split(
            pairs,
            SplitRatios { train: 1.0, dev: 0.0, test: 0.0 },
            0,
        )
        .unwrap();
        assert_eq!(all_train.train.len(), 10);
        assert!(all_train.dev.is_empty() && all_train.test.is_empty());
    }

    #[test]
    fn split_rejects_bad_ratios() {
        let pairs = vec![pair_with(1)];
        let err = split(
            pairs,
            SplitRatios { train: 0.8, dev: 0.1, test: 0.2 },
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn distribution_counts_single_pair() {
        let pairs = vec![pair_with(3)];
        let dist = distribution(&pairs, Criterion::Naturalness).unwrap();
        assert_eq!(dist.counts, [0, 0, 1, 0, 0, 0]);
        assert_eq!(dist.total, 1);
        assert_eq!(dist.majority_label.value(), 3);
        assert_eq!(dist.majority_fraction, 1.0);
    }

    #[test]
    fn distribution_majority_tie_breaks_upward() {
        let pairs = vec![pair_with(1), pair_with(6)];
        let dist = distribution(&pairs, Criterion::Naturalness).unwrap();
        assert_eq!(dist.majority_label.value(), 6);
    }

    #[test]
    fn split_roundtrips_through_disk() {
        let pairs: Vec<RatedPair> = (0..20)
            .map(|i| {
                let mut p = pair_with((i % 6 + 1) as u8);
                p.sys_ref = format!("sys {i}");
                p
            })
            .collect();
        let s = split(pairs, SplitRatios::default(), 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_split(&s, "deadbeef", dir.path()).unwrap();
        assert_eq!(manifest.counts.train, 16);
        let (loaded, loaded_manifest) = load_split(dir.path()).unwrap();
        assert_eq!(loaded, s);
        assert_eq!(loaded_manifest, manifest);
    }

    #[test]
    fn criterion_parses_and_rejects() {
        assert_eq!("quality".parse::<Criterion>().unwrap(), Criterion::Quality);
        assert!(matches!(
            "fluency".parse::<Criterion>(),
            Err(Error::Config(_))
        ));
    }
}
