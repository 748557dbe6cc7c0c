//! Observed parameter sets and the "winner ≻ losers" relations among them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{ParamVector, SearchSpace};

pub const DEFAULT_DEDUP_TOLERANCE: f64 = 1e-10;

/// `points[winner]` was preferred over every `points[loser]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PreferenceRecord {
    winner: usize,
    losers: Vec<usize>,
}

impl PreferenceRecord {
    /// Duplicate losers are collapsed (first occurrence kept). The winner may
    /// not appear among the losers, and at least one loser is required.
    pub fn new(winner: usize, losers: Vec<usize>) -> Result<Self> {
        let mut unique = Vec::with_capacity(losers.len());
        for l in losers {
            if l == winner {
                return Err(Error::invalid(format!("index {winner} is both winner and loser")));
            }
            if !unique.contains(&l) {
                unique.push(l);
            }
        }
        if unique.is_empty() {
            return Err(Error::invalid("a preference record needs at least one loser"));
        }
        Ok(Self { winner, losers: unique })
    }

    pub fn winner(&self) -> usize {
        self.winner
    }

    pub fn losers(&self) -> &[usize] {
        &self.losers
    }

    /// Winner first, then losers.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.winner).chain(self.losers.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    space: SearchSpace,
    points: Vec<ParamVector>,
    records: Vec<PreferenceRecord>,
    dedup_tolerance: f64,
}

impl Dataset {
    pub fn new(space: SearchSpace) -> Self {
        Self { space, points: Vec::new(), records: Vec::new(), dedup_tolerance: DEFAULT_DEDUP_TOLERANCE }
    }

    pub fn with_tolerance(space: SearchSpace, dedup_tolerance: f64) -> Result<Self> {
        if !(dedup_tolerance > 0.0) {
            return Err(Error::invalid("deduplication tolerance must be positive"));
        }
        Ok(Self { dedup_tolerance, ..Self::new(space) })
    }

    pub fn space(&self) -> SearchSpace {
        self.space
    }

    pub fn points(&self) -> &[ParamVector] {
        &self.points
    }

    pub fn records(&self) -> &[PreferenceRecord] {
        &self.records
    }

    pub fn dedup_tolerance(&self) -> f64 {
        self.dedup_tolerance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of a stored point within the deduplication tolerance of `x`.
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| crate::space::max_dist(p, x) < self.dedup_tolerance)
    }

    /// Adds `x` unless an equivalent point is already stored; returns its index.
    pub fn add_point(&mut self, x: &ParamVector) -> Result<usize> {
        self.space.check(x)?;
        if let Some(i) = self.find(x) {
            return Ok(i);
        }
        self.points.push(x.clone());
        Ok(self.points.len() - 1)
    }

    pub fn push_record(&mut self, record: PreferenceRecord) -> Result<()> {
        if let Some(bad) = record.members().find(|&i| i >= self.points.len()) {
            return Err(Error::invalid(format!(
                "record index {bad} out of range for {} points",
                self.points.len()
            )));
        }
        self.records.push(record);
        Ok(())
    }

    /// Inserts the winner and losers and records the preference. Losers that
    /// coincide with the winner are dropped; if none remain, no record is
    /// added and `None` is returned.
    pub fn add_preference(
        &mut self,
        winner: &ParamVector,
        losers: &[ParamVector],
    ) -> Result<Option<PreferenceRecord>> {
        let w = self.add_point(winner)?;
        let mut loser_idx = Vec::with_capacity(losers.len());
        for l in losers {
            let i = self.add_point(l)?;
            if i != w && !loser_idx.contains(&i) {
                loser_idx.push(i);
            }
        }
        if loser_idx.is_empty() {
            return Ok(None);
        }
        let record = PreferenceRecord::new(w, loser_idx)?;
        self.records.push(record.clone());
        Ok(Some(record))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DatasetDoc::from(self)).expect("dataset serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DatasetDoc =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("dataset JSON: {e}")))?;
        Self::try_from(doc)
    }
}

/// Wire form: `{"n": int, "points": [[...]], "records": [{"winner", "losers"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetDoc {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub records: Vec<PreferenceRecord>,
}

impl From<&Dataset> for DatasetDoc {
    fn from(d: &Dataset) -> Self {
        Self {
            n: d.space.dim(),
            points: d.points.iter().map(|p| p.to_vec()).collect(),
            records: d.records.clone(),
        }
    }
}

impl TryFrom<DatasetDoc> for Dataset {
    type Error = Error;

    fn try_from(doc: DatasetDoc) -> Result<Self> {
        let mut data = Dataset::new(SearchSpace::new(doc.n)?);
        for p in doc.points {
            let p = ParamVector::new(p)?;
            data.space.check(&p)?;
            if data.find(&p).is_some() {
                return Err(Error::invalid("dataset contains duplicate points"));
            }
            data.points.push(p);
        }
        for r in doc.records {
            // re-validate through the constructor
            let r = PreferenceRecord::new(r.winner, r.losers)?;
            data.push_record(r)?;
        }
        Ok(data)
    }
}

impl Serialize for Dataset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DatasetDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = DatasetDoc::deserialize(d)?;
        Dataset::try_from(doc).map_err(serde::de::Error::custom)
    }
}
