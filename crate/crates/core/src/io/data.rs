//! Ranking data as `epoch,rank,item` CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{ItemId, PartialRanking};

/// An epoch label: an integer index or a calendar day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EpochKey {
    Index(i64),
    Date(NaiveDate),
}

impl EpochKey {
    /// An integer, or a date as `YYYY-MM-DD`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return Some(EpochKey::Index(i));
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(EpochKey::Date)
    }
}

impl fmt::Display for EpochKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpochKey::Index(i) => write!(f, "{i}"),
            EpochKey::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}

/// Unit in which gaps between dated epochs are measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Days,
    #[default]
    Weeks,
}

impl TimeUnit {
    fn days(self) -> f64 {
        match self {
            TimeUnit::Days => 1.0,
            TimeUnit::Weeks => 7.0,
        }
    }
}

/// One ranked list per epoch, epochs in increasing order. Item labels are
/// mapped to `ItemId(i)` with `i` the position in `labels`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingData {
    pub epochs: Vec<EpochKey>,
    pub lists: Vec<PartialRanking>,
    pub labels: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct Row {
    epoch: String,
    rank: String,
    item: String,
}

fn data_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

impl RankingData {
    /// Builds a data set from lists whose items are labelled by their
    /// `Display` form (`item{n}`).
    pub fn from_lists(epochs: Vec<EpochKey>, lists: Vec<PartialRanking>) -> Result<Self> {
        if epochs.len() != lists.len() {
            return Err(Error::Config(format!("{} epochs for {} lists", epochs.len(), lists.len())));
        }
        let mut labels = Vec::new();
        let mut index: BTreeMap<ItemId, usize> = BTreeMap::new();
        let mut relabelled = Vec::with_capacity(lists.len());
        for list in &lists {
            let items = list
                .items()
                .iter()
                .map(|id| {
                    let k = *index.entry(*id).or_insert_with(|| {
                        labels.push(id.to_string());
                        labels.len() - 1
                    });
                    ItemId(k as u64)
                })
                .collect();
            relabelled.push(PartialRanking::new(items)?);
        }
        Ok(Self {
            epochs,
            lists: relabelled,
            labels,
        })
    }

    pub fn label(&self, id: ItemId) -> &str {
        &self.labels[id.0 as usize]
    }

    /// Lists as epochs with a single list each.
    pub fn epoch_lists(&self) -> Vec<Vec<PartialRanking>> {
        self.lists.iter().map(|l| vec![l.clone()]).collect()
    }

    /// Gaps between consecutive epochs; dated epochs use `unit`.
    pub fn gaps(&self, unit: TimeUnit) -> Vec<f64> {
        self.epochs
            .windows(2)
            .map(|w| match (w[0], w[1]) {
                (EpochKey::Index(a), EpochKey::Index(b)) => (b - a) as f64,
                (EpochKey::Date(a), EpochKey::Date(b)) => (b - a).num_days() as f64 / unit.days(),
                _ => unreachable!("mixed epoch kinds are rejected on ingestion"),
            })
            .collect()
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| data_err(path, 0, format!("cannot open: {e}")))?;
        Self::from_reader(file, path)
    }

    /// Parses CSV from `reader`; `path` only labels error messages.
    pub fn from_reader(reader: impl Read, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| data_err(path, 1, e.to_string()))?.clone();
        let want = ["epoch", "rank", "item"];
        if headers.len() != 3 || headers.iter().zip(want).any(|(h, w)| h != w) {
            return Err(data_err(path, 1, "header must be `epoch,rank,item`"));
        }
        // epoch -> rank -> (item, line)
        let mut table: BTreeMap<EpochKey, BTreeMap<u64, (String, u64)>> = BTreeMap::new();
        let mut seen: BTreeMap<EpochKey, BTreeMap<String, u64>> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut known: BTreeSet<String> = BTreeSet::new();
        let mut dated = None;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                data_err(path, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let row: Row = rec
                .deserialize(Some(&headers))
                .map_err(|e| data_err(path, line, e.to_string()))?;
            let epoch = EpochKey::parse(&row.epoch)
                .ok_or_else(|| data_err(path, line, format!("unparsable epoch '{}'", row.epoch)))?;
            let is_date = matches!(epoch, EpochKey::Date(_));
            if *dated.get_or_insert(is_date) != is_date {
                return Err(data_err(path, line, "epochs mix integers and dates"));
            }
            let rank: u64 = row
                .rank
                .parse()
                .ok()
                .filter(|&r| r >= 1)
                .ok_or_else(|| data_err(path, line, format!("rank must be a positive integer, got '{}'", row.rank)))?;
            if row.item.is_empty() {
                return Err(data_err(path, line, "empty item label"));
            }
            let ranks = table.entry(epoch).or_default();
            if let Some((_, first)) = ranks.get(&rank) {
                return Err(data_err(
                    path,
                    line,
                    format!("duplicate rank {rank} in epoch {epoch} (first on line {first})"),
                ));
            }
            let items = seen.entry(epoch).or_default();
            if let Some(first) = items.get(&row.item) {
                return Err(data_err(
                    path,
                    line,
                    format!("duplicate item '{}' in epoch {epoch} (first on line {first})", row.item),
                ));
            }
            items.insert(row.item.clone(), line);
            ranks.insert(rank, (row.item.clone(), line));
        }
        if table.is_empty() {
            return Err(data_err(path, 1, "no rankings"));
        }
        let mut epochs = Vec::with_capacity(table.len());
        let mut raw = Vec::with_capacity(table.len());
        for (epoch, ranks) in table {
            for (expected, (&rank, _)) in (1u64..).zip(&ranks) {
                if rank != expected {
                    return Err(Error::Epoch {
                        epoch: epoch.to_string(),
                        message: format!("ranks are not contiguous: missing rank {expected}"),
                    });
                }
            }
            epochs.push(epoch);
            raw.push(ranks.into_values().map(|(item, _)| item).collect::<Vec<_>>());
        }
        // Labels numbered in order of first appearance in epoch order.
        let mut index: BTreeMap<String, u64> = BTreeMap::new();
        let mut lists = Vec::with_capacity(raw.len());
        for items in raw {
            let ids = items
                .into_iter()
                .map(|label| {
                    if known.insert(label.clone()) {
                        order.push(label.clone());
                        index.insert(label.clone(), order.len() as u64 - 1);
                    }
                    ItemId(index[&label])
                })
                .collect();
            lists.push(PartialRanking::new(ids)?);
        }
        Ok(Self {
            epochs,
            lists,
            labels: order,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_writer(std::io::BufWriter::new(file))
    }

    pub fn to_writer(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "rank", "item"])?;
        for (epoch, list) in self.epochs.iter().zip(&self.lists) {
            for (i, id) in list.items().iter().enumerate() {
                w.write_record([epoch.to_string(), (i + 1).to_string(), self.label(*id).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RankingData> {
        RankingData::from_reader(s.as_bytes(), Path::new("t.csv"))
    }

    #[test]
    fn two_epochs_of_three() {
        let d = parse("epoch,rank,item\n1,1,a\n1,2,b\n1,3,c\n2,2,a\n2,1,d\n2,3,b\n").unwrap();
        assert_eq!(d.lists.len(), 2);
        assert!(d.lists.iter().all(|l| l.len() == 3));
        assert_eq!(d.labels, vec!["a", "b", "c", "d"]);
        assert_eq!(d.lists[1].items(), &[ItemId(3), ItemId(0), ItemId(1)]);
        assert_eq!(d.gaps(TimeUnit::Weeks), vec![1.0]);
    }

    #[test]
    fn rank_gap_names_epoch() {
        let e = parse("epoch,rank,item\n7,1,a\n7,3,b\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("epoch 7"), "{msg}");
    }

    #[test]
    fn duplicates_report_line() {
        let e = parse("epoch,rank,item\n1,1,a\n1,1,b\n").unwrap_err().to_string();
        assert!(e.contains("t.csv:3"), "{e}");
        let e = parse("epoch,rank,item\n1,1,a\n1,2,a\n").unwrap_err().to_string();
        assert!(e.contains("t.csv:3") && e.contains("duplicate item"), "{e}");
        let e = parse("epoch,rank,item\n1,x,a\n").unwrap_err().to_string();
        assert!(e.contains("t.csv:2"), "{e}");
        assert!(parse("epoch,rank,item\n1,1,a\n2020-01-01,1,b\n").is_err());
        assert!(parse("e,r,i\n1,1,a\n").is_err());
    }

    #[test]
    fn dated_epochs_keep_gaps() {
        let d = parse("epoch,rank,item\n2020-01-15,1,a\n2020-01-01,1,b\n2020-01-08,1,a\n").unwrap();
        assert_eq!(d.epochs[0], EpochKey::Date(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap()));
        assert_eq!(d.gaps(TimeUnit::Weeks), vec![1.0, 1.0]);
        assert_eq!(d.gaps(TimeUnit::Days), vec![7.0, 7.0]);
    }

    #[test]
    fn csv_round_trip() {
        let d = parse("epoch,rank,item\n1,1,x\n1,2,y\n3,1,y\n").unwrap();
        let mut buf = Vec::new();
        d.to_writer(&mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), d);
    }
}
