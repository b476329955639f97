use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ETH_USD: f64 = 1570.0;

/// Bundled offline profit dataset, one USD value per row.
pub const FIXTURE_PROFITS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/profits.csv");

/// Upper edges (USD) of the profit histogram bins; the last bin is open.
pub const BIN_EDGES_USD: [f64; 5] = [1.0, 10.0, 100.0, 1_000.0, 10_000.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichDataset {
    pub records_usd: Vec<f64>,
    pub eth_usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudySummary {
    pub records: usize,
    pub eth_usd: f64,
    pub p99_97_usd: f64,
    pub p99_97_eth: f64,
    pub max_usd: f64,
    pub max_eth: f64,
    /// `(upper edge in USD or None for the open bin, count)`.
    pub bins: Vec<(Option<f64>, usize)>,
}

impl SandwichDataset {
    pub fn new(mut records_usd: Vec<f64>, eth_usd: f64) -> Result<Self> {
        if records_usd.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(eth_usd > 0.0) {
            return Err(Error::InvalidParam("eth_usd must be positive".into()));
        }
        if let Some(v) = records_usd.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParam(format!("profit {v} is not a finite non-negative value")));
        }
        records_usd.sort_by(f64::total_cmp);
        Ok(SandwichDataset { records_usd, eth_usd })
    }

    /// Nearest-rank percentile in USD, `p` in `(0, 100]`.
    pub fn percentile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 100.0) {
            return Err(Error::InvalidParam(format!("percentile {p} outside (0, 100]")));
        }
        let n = self.records_usd.len();
        let rank = ((p / 100.0) * n as f64 - 1e-9).ceil().max(1.0) as usize;
        Ok(self.records_usd[rank.min(n) - 1])
    }

    pub fn percentile_eth(&self, p: f64) -> Result<f64> {
        Ok(self.percentile(p)? / self.eth_usd)
    }

    pub fn max(&self) -> f64 {
        *self.records_usd.last().expect("non-empty")
    }

    pub fn bins(&self) -> Vec<(Option<f64>, usize)> {
        let mut counts = vec![0usize; BIN_EDGES_USD.len() + 1];
        for &v in &self.records_usd {
            let b = BIN_EDGES_USD.iter().position(|&e| v <= e).unwrap_or(BIN_EDGES_USD.len());
            counts[b] += 1;
        }
        BIN_EDGES_USD
            .iter()
            .map(|&e| Some(e))
            .chain(std::iter::once(None))
            .zip(counts)
            .collect()
    }

    pub fn summary(&self) -> Result<CaseStudySummary> {
        let p = self.percentile(99.97)?;
        Ok(CaseStudySummary {
            records: self.records_usd.len(),
            eth_usd: self.eth_usd,
            p99_97_usd: p,
            p99_97_eth: p / self.eth_usd,
            max_usd: self.max(),
            max_eth: self.max() / self.eth_usd,
            bins: self.bins(),
        })
    }
}

/// One USD profit per row; a non-numeric first row is treated as a header.
pub fn ingest_profit_csv(path: impl AsRef<Path>, eth_usd: f64) -> Result<SandwichDataset> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{shown}: {e}")))?;
    let mut values = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 1;
        let rec = rec.map_err(|e| Error::Parse {
            path: shown.clone(),
            line,
            msg: e.to_string(),
        })?;
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => values.push(v),
            _ if idx == 0 => continue,
            _ => {
                return Err(Error::Parse {
                    path: shown,
                    line,
                    msg: format!("not a non-negative profit: {field:?}"),
                })
            }
        }
    }
    SandwichDataset::new(values, eth_usd)
}
