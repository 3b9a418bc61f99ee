//! Significance matrices and payoff curves from a results directory.
//!
//! Every prior is compared with Uniform, pairing observations by
//! (game, seed). A matrix cell is the percentage of time slices in which
//! the paired t-test is significant in the given direction.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use typeprior_core::metrics::Criterion;
use typeprior_core::prior::PriorMethod;

use crate::stats::{percent_in_direction, Direction, SliceSamples};
use crate::suite::{read_manifest, read_metrics, MetricRow, METRICS_FILE};

pub const BASELINE: PriorMethod = PriorMethod::Uniform;

/// Pairing key: game id and play seed.
type Key = (u16, u64);

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub priors: Vec<PriorMethod>,
    pub criteria: Vec<Criterion>,
    /// `values[row][col]`, in percent.
    pub values: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn get(&self, prior: PriorMethod, criterion: Criterion) -> Option<f64> {
        let i = self.priors.iter().position(|&p| p == prior)?;
        let j = self.criteria.iter().position(|&c| c == criterion)?;
        Some(self.values[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("prior");
        for c in &self.criteria {
            out.push(',');
            out.push_str(c.name());
        }
        out.push('\n');
        for (p, row) in self.priors.iter().zip(&self.values) {
            out.push_str(p.name());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn samples(rows: &[&MetricRow], prior: PriorMethod, criterion: Criterion) -> SliceSamples<Key> {
    let mut out: SliceSamples<Key> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.prior == prior.name() && r.criterion == criterion.name()) {
        out.entry(r.slice).or_default().insert((r.game_id, r.seed), r.value);
    }
    out
}

/// Rows of one scenario; `class = None` keeps every game.
pub fn select<'a>(rows: &'a [MetricRow], class: Option<&str>, h: usize) -> Vec<&'a MetricRow> {
    rows.iter().filter(|r| r.h == h && class.is_none_or(|c| r.class == c)).collect()
}

/// Matrix of every non-baseline prior present in `rows` against Uniform.
pub fn significance_matrix(rows: &[&MetricRow], dir: Direction) -> Matrix {
    let present: BTreeSet<PriorMethod> = rows.iter().filter_map(|r| PriorMethod::parse(&r.prior)).collect();
    let priors: Vec<PriorMethod> = present.into_iter().filter(|&p| p != BASELINE).collect();
    let criteria = Criterion::ALL.to_vec();
    let values = priors
        .iter()
        .map(|&p| {
            criteria
                .iter()
                .map(|&c| percent_in_direction(&samples(rows, p, c), &samples(rows, BASELINE, c), dir))
                .collect()
        })
        .collect();
    Matrix { priors, criteria, values }
}

/// Mean of each payoff criterion per (prior, slice), as CSV.
pub fn payoff_curves(rows: &[&MetricRow]) -> String {
    let cols = [Criterion::PayoffRow, Criterion::PayoffCol, Criterion::Welfare, Criterion::Fairness];
    let mut acc: BTreeMap<(PriorMethod, usize), [(f64, usize); 4]> = BTreeMap::new();
    for r in rows {
        let (Some(p), Some(c)) = (PriorMethod::parse(&r.prior), Criterion::parse(&r.criterion)) else { continue };
        let Some(k) = cols.iter().position(|&x| x == c) else { continue };
        let e = &mut acc.entry((p, r.slice)).or_insert([(0.0, 0); 4])[k];
        e.0 += r.value;
        e.1 += 1;
    }
    let mut out = String::from("prior,slice");
    for c in cols {
        out.push(',');
        out.push_str(c.name());
    }
    out.push('\n');
    for ((p, s), sums) in acc {
        out.push_str(&format!("{},{s}", p.name()));
        for (sum, n) in sums {
            if n == 0 {
                out.push(',');
            } else {
                out.push_str(&format!(",{}", sum / n as f64));
            }
        }
        out.push('\n');
    }
    out
}

/// Writes matrices and curves under `<dir>/report/` and returns the paths.
pub fn report(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let manifest = read_manifest(dir)?;
    let rows = read_metrics(&dir.join(METRICS_FILE))?;
    let out_dir = dir.join("report");
    fs::create_dir_all(&out_dir)?;
    let stem = format!("{}_{}", manifest.type_kind.to_lowercase(), manifest.opponent.to_lowercase());
    let classes: BTreeSet<&str> = rows.iter().map(|r| r.class.as_str()).collect();
    let horizons: BTreeSet<usize> = rows.iter().map(|r| r.h).collect();
    let mut written = Vec::new();
    for &class in &classes {
        for &h in &horizons {
            let scenario = select(&rows, Some(class), h);
            for dir in Direction::ALL {
                let path = out_dir.join(format!("matrix_{stem}_{class}_h{h}_{}.csv", dir.name()));
                fs::write(&path, significance_matrix(&scenario, dir).to_csv())?;
                written.push(path);
            }
            let path = out_dir.join(format!("curves_{stem}_{class}_h{h}.csv"));
            fs::write(&path, payoff_curves(&scenario))?;
            written.push(path);
        }
    }
    Ok(written)
}
