//! Result tables: CSV time series and their metadata.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::operator::Operator;
use crate::unravel::Estimate;

use super::config::ObservableSpec;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub observable: String,
    pub mean: f64,
    pub stderr: f64,
    pub method: String,
    /// `recombined`, `alpha=<label>` or `reprep=<label>`.
    pub branch: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
}

impl Metadata {
    pub fn new(seed: u64, config_hash: String) -> Self {
        Metadata { seed, config_hash, version: env!("CARGO_PKG_VERSION").to_string() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
}

impl ResultTable {
    pub fn new(metadata: Metadata) -> Self {
        ResultTable { metadata, rows: Vec::new() }
    }

    /// Values are written with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# seed={} config_hash={} version={}", self.metadata.seed, self.metadata.config_hash, self.metadata.version)?;
        writeln!(w, "t,observable,mean,stderr,method,branch")?;
        for r in &self.rows {
            writeln!(w, "{:.16e},{},{:.16e},{:.16e},{},{}", r.t, r.observable, r.mean, r.stderr, r.method, r.branch)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Rows of one observable and branch, in time order.
    pub fn series(&self, observable: &str, branch: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.observable == observable && r.branch == branch).collect()
    }
}

#[derive(Clone, Debug)]
enum Probe {
    Re(usize, usize),
    Im(usize, usize),
    Expectation(usize),
}

/// Observables resolved against a system dimension.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    ids: Vec<String>,
    probes: Vec<Probe>,
    operators: Vec<Operator>,
}

impl ObservableSet {
    /// Falls back to every upper-triangle element when `specs` is empty.
    pub fn new(specs: &[ObservableSpec], d: usize) -> Result<Self> {
        let defaults: Vec<ObservableSpec>;
        let specs = if specs.is_empty() {
            defaults = (0..d).flat_map(|i| (i..d).map(move |j| ObservableSpec::Element { row: i, col: j })).collect();
            &defaults
        } else {
            specs
        };
        let mut set = ObservableSet { ids: Vec::new(), probes: Vec::new(), operators: Vec::new() };
        for s in specs {
            match s {
                ObservableSpec::Element { row, col } => {
                    if *row >= d || *col >= d {
                        return Err(crate::Error::Config(format!("element ({row}, {col}) outside dimension {d}")));
                    }
                    set.ids.push(format!("re_rho_{row}_{col}"));
                    set.probes.push(Probe::Re(*row, *col));
                    if row != col {
                        set.ids.push(format!("im_rho_{row}_{col}"));
                        set.probes.push(Probe::Im(*row, *col));
                    }
                }
                ObservableSpec::Expectation { name, operator } => {
                    let op = operator.to_operator(d)?;
                    if !op.is_hermitian(1e-10) {
                        return Err(crate::Error::Config(format!("observable '{name}' is not Hermitian")));
                    }
                    set.ids.push(name.clone());
                    set.probes.push(Probe::Expectation(set.operators.len()));
                    set.operators.push(op);
                }
            }
        }
        Ok(set)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Operators the engines must average per trajectory.
    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn rows_from_estimate(&self, est: &Estimate, method: &str, branch: &str) -> Vec<Row> {
        let mut out = Vec::new();
        for (k, &t) in est.times.iter().enumerate() {
            for (id, p) in self.ids.iter().zip(&self.probes) {
                let (mean, stderr) = match *p {
                    Probe::Re(i, j) => {
                        let (m, se, _) = est.element(k, i, j);
                        (m.re, se)
                    }
                    Probe::Im(i, j) => {
                        let (m, _, se) = est.element(k, i, j);
                        (m.im, se)
                    }
                    Probe::Expectation(o) => (est.expectations[k][o], est.se_expectations[k][o]),
                };
                out.push(Row { t, observable: id.clone(), mean, stderr, method: method.into(), branch: branch.into() });
            }
        }
        out
    }

    pub fn rows_from_states(&self, times: &[f64], states: &[Operator], method: &str, branch: &str) -> Vec<Row> {
        let mut out = Vec::new();
        for (&t, rho) in times.iter().zip(states) {
            for (id, p) in self.ids.iter().zip(&self.probes) {
                let mean = match *p {
                    Probe::Re(i, j) => rho.entry(i, j).re,
                    Probe::Im(i, j) => rho.entry(i, j).im,
                    Probe::Expectation(o) => self.operators[o].trace_product(rho).re,
                };
                out.push(Row { t, observable: id.clone(), mean, stderr: 0.0, method: method.into(), branch: branch.into() });
            }
        }
        out
    }
}
