//! Bookkeeping for the pairwise preference study and the caption-score
//! survey: comparison sheets with hidden side keys, vote tallies, and score
//! statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCORE_MIN: f64 = 0.0;
pub const SCORE_MAX: f64 = 10.0;
/// Event label used for the row summing over all events.
pub const AGGREGATE: &str = "all";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("event {event:?} has {count} methods; exactly 2 are required")]
    MethodCountInvalid { event: String, count: usize },
    #[error("rater {rater:?} voted twice on event {event:?}")]
    DuplicateVote { rater: String, event: String },
    #[error("vote references unknown event {0:?}")]
    UnknownEvent(String),
    #[error("rater {rater:?} gave score {value} outside [0, 10]")]
    OutOfRangeScore { rater: String, value: f64 },
    #[error("rater {0:?} appears twice in the score file")]
    DuplicateRater(String),
    #[error("no scores")]
    EmptyScores,
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Collage image per method for one event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCollages {
    pub event: String,
    /// method name -> collage path
    pub collages: BTreeMap<String, String>,
}

/// What a rater sees: two unlabeled collages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaterSheet {
    pub event: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEntry {
    pub event: String,
    pub left_method: String,
    pub right_method: String,
}

impl KeyEntry {
    pub fn method(&self, side: Side) -> &str {
        match side {
            Side::Left => &self.left_method,
            Side::Right => &self.right_method,
        }
    }

    pub fn flipped(&self) -> Self {
        Self {
            event: self.event.clone(),
            left_method: self.right_method.clone(),
            right_method: self.left_method.clone(),
        }
    }
}

/// Side assignments, kept apart from the sheets shown to raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheetKey {
    pub seed: u64,
    pub entries: Vec<KeyEntry>,
}

impl SheetKey {
    pub fn entry(&self, event: &str) -> Option<&KeyEntry> {
        self.entries.iter().find(|e| e.event == event)
    }

    pub fn flipped(&self) -> Self {
        Self {
            seed: self.seed,
            entries: self.entries.iter().map(KeyEntry::flipped).collect(),
        }
    }
}

/// One sheet per event, in input order. Methods are taken in name order and
/// swapped on a fair coin from a ChaCha8 stream seeded with `seed`.
pub fn make_sheets(events: &[EventCollages], seed: u64) -> Result<(Vec<RaterSheet>, SheetKey), EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sheets = Vec::with_capacity(events.len());
    let mut entries = Vec::with_capacity(events.len());
    for ev in events {
        if ev.collages.len() != 2 {
            return Err(EvalError::MethodCountInvalid {
                event: ev.event.clone(),
                count: ev.collages.len(),
            });
        }
        let mut pair: Vec<(&String, &String)> = ev.collages.iter().collect();
        if rng.random_bool(0.5) {
            pair.swap(0, 1);
        }
        sheets.push(RaterSheet {
            event: ev.event.clone(),
            left: pair[0].1.clone(),
            right: pair[1].1.clone(),
        });
        entries.push(KeyEntry {
            event: ev.event.clone(),
            left_method: pair[0].0.clone(),
            right_method: pair[1].0.clone(),
        });
    }
    Ok((sheets, SheetKey { seed, entries }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub rater_id: String,
    pub event: String,
    pub choice: Side,
}

/// Reads `rater_id,event,choice` rows with a header line.
pub fn read_votes<R: Read>(reader: R) -> Result<Vec<VoteRecord>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut votes = Vec::new();
    for row in rdr.deserialize() {
        votes.push(row?);
    }
    Ok(votes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Loss,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventTally {
    pub event: String,
    /// method -> wins; both methods of the pair are present.
    pub wins: BTreeMap<String, u32>,
}

impl EventTally {
    pub fn total(&self) -> u32 {
        self.wins.values().sum()
    }

    pub fn outcome(&self, method: &str) -> Outcome {
        let mine = self.wins.get(method).copied().unwrap_or(0);
        let best_other = self
            .wins
            .iter()
            .filter(|(m, _)| m.as_str() != method)
            .map(|(_, w)| *w)
            .max()
            .unwrap_or(0);
        match mine.cmp(&best_other) {
            std::cmp::Ordering::Greater => Outcome::Win,
            std::cmp::Ordering::Less => Outcome::Loss,
            std::cmp::Ordering::Equal => Outcome::Tie,
        }
    }

    /// The method with strictly most wins, if any.
    pub fn winner(&self) -> Option<&str> {
        self.wins
            .keys()
            .find(|m| self.outcome(m) == Outcome::Win)
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    /// Events in key order.
    pub events: Vec<EventTally>,
    pub aggregate: EventTally,
}

/// Counts wins per method per event. Each (rater, event) pair counts once.
pub fn tally(votes: &[VoteRecord], key: &SheetKey) -> Result<Tally, EvalError> {
    let mut events: Vec<EventTally> = key
        .entries
        .iter()
        .map(|e| EventTally {
            event: e.event.clone(),
            wins: [(e.left_method.clone(), 0), (e.right_method.clone(), 0)].into(),
        })
        .collect();
    let mut seen = BTreeSet::new();
    for v in votes {
        let idx = key
            .entries
            .iter()
            .position(|e| e.event == v.event)
            .ok_or_else(|| EvalError::UnknownEvent(v.event.clone()))?;
        if !seen.insert((v.rater_id.as_str(), v.event.as_str())) {
            return Err(EvalError::DuplicateVote {
                rater: v.rater_id.clone(),
                event: v.event.clone(),
            });
        }
        let method = key.entries[idx].method(v.choice);
        *events[idx].wins.get_mut(method).expect("pair methods seeded") += 1;
    }
    let mut aggregate = EventTally {
        event: AGGREGATE.into(),
        wins: BTreeMap::new(),
    };
    for e in &events {
        for (m, w) in &e.wins {
            *aggregate.wins.entry(m.clone()).or_insert(0) += w;
        }
    }
    Ok(Tally { events, aggregate })
}

/// Long-format CSV `event,method,wins,outcome`, events in key order then
/// the aggregate, methods in name order.
pub fn tally_csv(t: &Tally) -> String {
    let mut out = String::from("event,method,wins,outcome\n");
    for e in t.events.iter().chain(std::iter::once(&t.aggregate)) {
        for (m, w) in &e.wins {
            let outcome = match e.outcome(m) {
                Outcome::Win => "win",
                Outcome::Loss => "loss",
                Outcome::Tie => "tie",
            };
            let _ = writeln!(out, "{},{},{},{}", csv_field(&e.event), csv_field(m), w, outcome);
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub rater_id: String,
    pub own_score: f64,
    pub lm_score: f64,
}

/// Reads `rater_id,own_score,lm_score` rows with a header line.
pub fn read_scores<R: Read>(reader: R) -> Result<Vec<ScoreRecord>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut scores = Vec::new();
    for row in rdr.deserialize() {
        scores.push(row?);
    }
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub source: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; undefined for a single rater.
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub own: SourceStats,
    pub lm: SourceStats,
}

fn source_stats(source: &str, xs: &[f64]) -> SourceStats {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std = (n >= 2).then(|| {
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    SourceStats {
        source: source.into(),
        n,
        mean,
        std,
    }
}

pub fn score_stats(scores: &[ScoreRecord]) -> Result<ScoreStats, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let mut seen = BTreeSet::new();
    for s in scores {
        if !seen.insert(s.rater_id.as_str()) {
            return Err(EvalError::DuplicateRater(s.rater_id.clone()));
        }
        for value in [s.own_score, s.lm_score] {
            if !(SCORE_MIN..=SCORE_MAX).contains(&value) {
                return Err(EvalError::OutOfRangeScore {
                    rater: s.rater_id.clone(),
                    value,
                });
            }
        }
    }
    let own: Vec<f64> = scores.iter().map(|s| s.own_score).collect();
    let lm: Vec<f64> = scores.iter().map(|s| s.lm_score).collect();
    Ok(ScoreStats {
        own: source_stats("own", &own),
        lm: source_stats("lm", &lm),
    })
}

/// CSV `source,n,mean,std`; an undefined std is an empty field.
pub fn score_stats_csv(s: &ScoreStats) -> String {
    let mut out = String::from("source,n,mean,std\n");
    for row in [&s.own, &s.lm] {
        let std = row.std.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", row.source, row.n, row.mean, std);
    }
    out
}
