//! Rating-history CSV ingest (`firm_id,sector,year,rating`) and export.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{count_transitions, RatingPanel};
use crate::presets::{SIC_SECTORS, SP_CLUBBING};
use crate::ratings::RatingClass;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {detail}")]
    Line { line: u64, detail: String },
    #[error("{0}")]
    Data(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Rating label → class in 1..=M+1. The largest class is the default state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClubbingMap {
    labels: BTreeMap<String, RatingClass>,
    /// Label written for each class on export, class order.
    canonical: Vec<String>,
}

impl ClubbingMap {
    /// `pairs` in preference order; the first label seen for a class becomes
    /// its export label. Classes must cover 1..=max without gaps.
    pub fn new<S: AsRef<str>>(pairs: &[(S, RatingClass)]) -> Result<Self, IngestError> {
        let mut labels = BTreeMap::new();
        let mut canonical: Vec<Option<String>> = Vec::new();
        for (label, class) in pairs {
            let label = label.as_ref().trim().to_string();
            if *class == 0 {
                return Err(IngestError::Data(format!("label {label} maps to class 0")));
            }
            if labels.insert(label.clone(), *class).is_some() {
                return Err(IngestError::Data(format!("label {label} listed twice")));
            }
            let k = *class as usize;
            if canonical.len() < k {
                canonical.resize(k, None);
            }
            canonical[k - 1].get_or_insert(label);
        }
        if canonical.len() < 2 {
            return Err(IngestError::Data("clubbing needs at least one class plus default".into()));
        }
        let canonical = canonical
            .into_iter()
            .enumerate()
            .map(|(k, l)| l.ok_or_else(|| IngestError::Data(format!("no label maps to class {}", k + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { labels, canonical })
    }

    /// S&P letter grades clubbed into five classes plus default.
    pub fn sp_six_class() -> Self {
        Self::new(&SP_CLUBBING).expect("preset is consistent")
    }

    /// Identity map on the numerals "1".."M+1".
    pub fn numeric(m: usize) -> Self {
        let pairs: Vec<(String, RatingClass)> = (1..=m + 1).map(|k| (k.to_string(), k as RatingClass)).collect();
        Self::new(&pairs).expect("numeric map is consistent")
    }

    pub fn class_of(&self, label: &str) -> Option<RatingClass> {
        self.labels.get(label.trim()).copied()
    }

    /// Number of non-default classes M.
    pub fn m(&self) -> usize {
        self.canonical.len() - 1
    }

    pub fn label_of(&self, class: RatingClass) -> &str {
        &self.canonical[class as usize - 1]
    }
}

/// Sector field interpretation: either integers 1..=count or named labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorScheme {
    pub count: usize,
    /// Optional names; sector k may be written as its name or as `k`.
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

impl SectorScheme {
    pub fn numeric(count: usize) -> Self {
        Self { count, labels: None }
    }

    /// The six SIC industry groups.
    pub fn sic_six() -> Self {
        Self {
            count: 6,
            labels: Some(SIC_SECTORS.iter().map(|s| s.to_string()).collect()),
        }
    }

    pub fn sector_of(&self, field: &str) -> Option<usize> {
        let field = field.trim();
        if let Ok(k) = field.parse::<usize>() {
            return (1..=self.count).contains(&k).then_some(k);
        }
        self.labels
            .as_ref()?
            .iter()
            .position(|l| l.eq_ignore_ascii_case(field))
            .map(|k| k + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub records: usize,
    pub firms: usize,
    pub first_year: i64,
    pub last_year: i64,
    pub transitions: u64,
    pub masked_cells: usize,
}

#[derive(Deserialize)]
struct Record {
    firm_id: String,
    sector: String,
    year: i64,
    rating: String,
}

/// Reads a rating history into a panel with one column per year from the
/// earliest to the latest year present. Firms are ordered by id; unrated
/// firm-years are masked.
pub fn ingest<R: Read>(
    input: R,
    clubbing: &ClubbingMap,
    sectors: &SectorScheme,
) -> Result<(RatingPanel, IngestReport), IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Line {
            line: 1,
            detail: e.to_string(),
        })?
        .clone();
    let expected = ["firm_id", "sector", "year", "rating"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(IngestError::Line {
            line: 1,
            detail: format!("header must be {}", expected.join(",")),
        });
    }
    let mut firms: BTreeMap<String, (usize, HashMap<i64, RatingClass>)> = BTreeMap::new();
    let mut records = 0;
    let mut raw = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut raw).map_err(|e| IngestError::Line {
            line: e.position().map_or(0, |p| p.line()),
            detail: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = raw.position().map_or(0, |p| p.line());
        let rec: Record = raw.deserialize(Some(&headers)).map_err(|e| IngestError::Line {
            line,
            detail: e.to_string(),
        })?;
        let class = clubbing.class_of(&rec.rating).ok_or_else(|| IngestError::Line {
            line,
            detail: format!("unknown rating label {:?}", rec.rating),
        })?;
        let sector = sectors.sector_of(&rec.sector).ok_or_else(|| IngestError::Line {
            line,
            detail: format!("unknown sector {:?}", rec.sector),
        })?;
        let entry = firms.entry(rec.firm_id.clone()).or_insert_with(|| (sector, HashMap::new()));
        if entry.0 != sector {
            return Err(IngestError::Line {
                line,
                detail: format!("firm {} changes sector from {} to {sector}", rec.firm_id, entry.0),
            });
        }
        if entry.1.insert(rec.year, class).is_some() {
            return Err(IngestError::Line {
                line,
                detail: format!("second record for firm {} in {}", rec.firm_id, rec.year),
            });
        }
        records += 1;
    }
    let years = firms.values().flat_map(|(_, h)| h.keys().copied());
    let (first, last) = years.fold((i64::MAX, i64::MIN), |(a, b), y| (a.min(y), b.max(y)));
    if records == 0 {
        return Err(IngestError::Data("no records".into()));
    }
    let span = (last - first + 1) as usize;
    let mut ids = Vec::with_capacity(firms.len());
    let mut rows = Vec::with_capacity(firms.len());
    let mut secs = Vec::with_capacity(firms.len());
    for (id, (sector, by_year)) in firms {
        rows.push((0..span).map(|k| by_year.get(&(first + k as i64)).copied()).collect());
        ids.push(id);
        secs.push(sector);
    }
    let panel = RatingPanel::with_ids(clubbing.m(), sectors.count, rows, secs, ids)
        .map_err(|e| IngestError::Data(e.to_string()))?;
    let report = IngestReport {
        records,
        firms: panel.n_firms(),
        first_year: first,
        last_year: last,
        transitions: count_transitions(&panel).total(),
        masked_cells: panel.masked_cells(),
    };
    Ok((panel, report))
}

/// Writes the panel back out, one record per rated firm-year, using each
/// class's first label in `clubbing`. Column k is year `first_year + k`.
pub fn export_panel<W: Write>(
    panel: &RatingPanel,
    first_year: i64,
    clubbing: &ClubbingMap,
    out: W,
) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| IngestError::Io(std::io::Error::other(e));
    w.write_record(["firm_id", "sector", "year", "rating"]).map_err(wrap)?;
    for (n, row) in panel.ratings().iter().enumerate() {
        for (k, cell) in row.iter().enumerate() {
            if let Some(c) = cell {
                w.write_record([
                    panel.firm_ids()[n].as_str(),
                    &panel.sectors()[n].to_string(),
                    &(first_year + k as i64).to_string(),
                    clubbing.label_of(*c),
                ])
                .map_err(wrap)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_firm_fixture() {
        let csv = "firm_id,sector,year,rating\nb,2,2001,1\na,1,2000,2\na,1,2001,2\na,1,2002,3\nb,2,2000,1\nb,2,2002,2\n";
        let (panel, report) = ingest(csv.as_bytes(), &ClubbingMap::numeric(2), &SectorScheme::numeric(2)).unwrap();
        assert_eq!(panel.firm_ids(), &["a".to_string(), "b".to_string()]);
        assert_eq!(panel.horizon(), 3);
        assert_eq!(report.transitions, 4);
        assert_eq!(report.masked_cells, 0);
    }

    #[test]
    fn gap_year_is_masked() {
        let csv = "firm_id,sector,year,rating\na,1,2000,1\na,1,2002,1\na,1,2003,2\n";
        let (panel, report) = ingest(csv.as_bytes(), &ClubbingMap::numeric(2), &SectorScheme::numeric(1)).unwrap();
        assert_eq!(panel.get(0, 2), None);
        assert_eq!(report.transitions, 1);
        assert_eq!(report.masked_cells, 1);
    }

    #[test]
    fn sp_labels_give_five_classes() {
        let map = ClubbingMap::sp_six_class();
        assert_eq!(map.m(), 5);
        assert_eq!(map.class_of("AA"), Some(1));
        assert_eq!(map.class_of("B"), Some(4));
        assert_eq!(map.class_of("D"), Some(6));
        let csv = "firm_id,sector,year,rating\nx,Finance,1990,AAA\nx,Finance,1991,BBB\ny,2,1990,CC\ny,2,1991,D\n";
        let (panel, _) = ingest(csv.as_bytes(), &map, &SectorScheme::sic_six()).unwrap();
        assert_eq!(panel.sectors(), &[5, 2]);
        assert_eq!(panel.get(1, 2), Some(6));
    }

    #[test]
    fn unknown_label_names_the_line() {
        let csv = "firm_id,sector,year,rating\na,1,2000,1\na,1,2001,Z\n";
        match ingest(csv.as_bytes(), &ClubbingMap::numeric(2), &SectorScheme::numeric(1)) {
            Err(IngestError::Line { line, detail }) => {
                assert_eq!(line, 3);
                assert!(detail.contains("\"Z\""));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicates_and_bad_header() {
        let csv = "firm_id,sector,year,rating\na,1,2000,1\na,1,2000,2\n";
        assert!(ingest(csv.as_bytes(), &ClubbingMap::numeric(2), &SectorScheme::numeric(1)).is_err());
        let csv = "firm,sector,year,rating\na,1,2000,1\n";
        assert!(matches!(
            ingest(csv.as_bytes(), &ClubbingMap::numeric(2), &SectorScheme::numeric(1)),
            Err(IngestError::Line { line: 1, .. })
        ));
    }

    #[test]
    fn export_then_ingest_is_identity() {
        let map = ClubbingMap::sp_six_class();
        let panel = RatingPanel::with_ids(
            5,
            3,
            vec![
                vec![Some(1), Some(2), None, Some(6)],
                vec![None, Some(4), Some(5), Some(5)],
                vec![Some(3), Some(3), Some(3), Some(3)],
            ],
            vec![1, 3, 2],
            vec!["f1".into(), "f2".into(), "f3".into()],
        )
        .unwrap();
        let mut buf = Vec::new();
        export_panel(&panel, 1985, &map, &mut buf).unwrap();
        let (back, report) = ingest(buf.as_slice(), &map, &SectorScheme::numeric(3)).unwrap();
        assert_eq!(back, panel);
        assert_eq!(report.first_year, 1985);
    }
}
