//! The full pipeline per basis size and its human, JSON and CSV renderings.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::enumerate_basis_with;
use crate::config::{CorrectionState, OutputFormat, PhysicalConstants, RunConfig};
use crate::corrections::{corrections, CorrectionBreakdown};
use crate::error::{Error, Result};
use crate::integrals::{CacheStats, IntegralTable, ENGINE_VERSION};
use crate::operators::{expectation_set, CorrectionOperators, ExpectationSet, OperatorMatrices};
use crate::real::Real;
use crate::solver::{ground_state_pair_with, optimize_k, VariationalResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed CSV header of the tables report.
pub const CSV_COLUMNS: [&str; 10] =
    ["N", "E_inf", "dE_inf", "E0", "dE0", "deltaE2", "deltaE3", "E_total", "dE_total", "k_opt"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub e_inf: f64,
    pub de_inf: f64,
    pub e0: f64,
    pub de0: f64,
    pub delta_e2: f64,
    pub delta_e3: f64,
    pub e_total: f64,
    pub de_total: f64,
    /// Optimal k of the finite-mass run.
    pub k_opt: f64,
    pub k_opt_inf: f64,
    pub uncertainty: f64,
    /// Larger of the two eigen-solve residuals.
    pub residual: f64,
    pub wall_time: f64,
    /// E∞ and E0 to 30 significant digits.
    pub e_inf_digits: String,
    pub e0_digits: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSummary {
    pub path: Option<PathBuf>,
    pub stats: CacheStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub engine_version: String,
    pub config: RunConfig,
    pub constants: PhysicalConstants,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<FailureRow>,
    pub cache: CacheSummary,
}

impl ReportDocument {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    /// Recomputes every difference against the experimental energy.
    pub fn recompute_deltas(&mut self) {
        let e_exp = self.constants.e_exp;
        for r in &mut self.rows {
            r.de_inf = r.e_inf - e_exp;
            r.de0 = r.e0 - e_exp;
            r.de_total = r.e_total - e_exp;
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut doc: ReportDocument = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(
                "report",
                format!("schema version {} is not {SCHEMA_VERSION}", doc.schema_version),
            ));
        }
        doc.recompute_deltas();
        Ok(doc)
    }
}

/// Everything computed for one basis size.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub infinite: VariationalResult,
    pub finite: VariationalResult,
    pub expectations: ExpectationSet,
    pub corrections: CorrectionBreakdown,
}

/// Both Hamiltonians, expectation values on the configured eigenvector,
/// and the corrections added to E0.
pub fn run_pipeline(n: usize, config: &RunConfig, constants: &PhysicalConstants, table: &IntegralTable) -> Result<PipelineResult> {
    let basis = enumerate_basis_with(n, config.ordering)?;
    let ops = OperatorMatrices::assemble(&basis, constants.z, table)?;
    let corr = CorrectionOperators::assemble(&basis, table)?;
    let (infinite, finite) = ground_state_pair_with(&ops, config, constants)?;
    let state = match config.correction_state {
        CorrectionState::FiniteMass => &finite,
        CorrectionState::InfiniteMass => &infinite,
    };
    let gamma = constants.euler_gamma_real(config.bits());
    let expectations = expectation_set(&ops, &corr, &state.coeffs, &state.k_opt, &gamma)?;
    let corrections = corrections(&finite.energy, &expectations, constants);
    Ok(PipelineResult { infinite, finite, expectations, corrections })
}

fn row_from(n: usize, p: &PipelineResult, e_exp: f64, wall_time: f64) -> ReportRow {
    let e_inf = p.infinite.energy.to_f64();
    let e0 = p.finite.energy.to_f64();
    let e_total = p.corrections.e_total.to_f64();
    ReportRow {
        n,
        e_inf,
        de_inf: e_inf - e_exp,
        e0,
        de0: e0 - e_exp,
        delta_e2: p.corrections.delta_e2().to_f64(),
        delta_e3: p.corrections.delta_e3().to_f64(),
        e_total,
        de_total: e_total - e_exp,
        k_opt: p.finite.k_opt.to_f64(),
        k_opt_inf: p.infinite.k_opt.to_f64(),
        uncertainty: p.corrections.uncertainty.to_f64(),
        residual: p.infinite.residual.max(p.finite.residual),
        wall_time,
        e_inf_digits: p.infinite.energy.to_sci_string(30),
        e0_digits: p.finite.energy.to_sci_string(30),
    }
}

fn max_grade(config: &RunConfig, n_max: usize) -> Result<u32> {
    Ok(enumerate_basis_with(n_max, config.ordering)?.iter().map(|t| t.grade()).max().unwrap_or(0))
}

fn open_table(config: &RunConfig, grade: u32) -> Result<(IntegralTable, Option<PathBuf>)> {
    match &config.cache_dir {
        None => Ok((IntegralTable::new(), None)),
        Some(dir) => {
            let path = IntegralTable::cache_path(dir, grade);
            let table = IntegralTable::load(&path, grade)?.unwrap_or_default();
            Ok((table, Some(path)))
        }
    }
}

/// Runs the pipeline for every size in `config.n_list`, in parallel.
/// Failing sizes become failure rows; the document is still returned.
pub fn run_tables(config: &RunConfig, constants: &PhysicalConstants) -> Result<ReportDocument> {
    if config.n_list.is_empty() {
        return Err(Error::Usage("the list of basis sizes is empty".into()));
    }
    config.validate()?;
    constants.validate()?;
    let grade = max_grade(config, *config.n_list.iter().max().expect("nonempty"))?;
    let (table, path) = open_table(config, grade)?;
    let outcomes: Vec<(usize, Result<ReportRow>)> = config
        .n_list
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let row = run_pipeline(n, config, constants, &table)
                .map(|p| row_from(n, &p, constants.e_exp, start.elapsed().as_secs_f64()));
            (n, row)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, r) in outcomes {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(FailureRow { n, error: e.to_string() }),
        }
    }
    if let Some(p) = &path {
        table.save(p, grade)?;
    }
    Ok(ReportDocument {
        schema_version: SCHEMA_VERSION,
        engine_version: ENGINE_VERSION.to_string(),
        config: config.clone(),
        constants: constants.clone(),
        rows,
        failures,
        cache: CacheSummary { path, stats: table.stats() },
    })
}

/// One optimized eigen-solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub n: usize,
    pub nuclear_motion: bool,
    pub energy: f64,
    pub energy_digits: String,
    pub de: f64,
    pub k_opt: f64,
    pub iterations: usize,
    pub residual: f64,
    pub spectral_gap: Option<f64>,
    pub constants: PhysicalConstants,
}

pub fn run_solve(n: usize, nuclear_motion: bool, config: &RunConfig, constants: &PhysicalConstants) -> Result<SolveSummary> {
    config.validate()?;
    constants.validate()?;
    let basis = enumerate_basis_with(n, config.ordering)?;
    let (table, path) = open_table(config, max_grade(config, n)?)?;
    let ops = OperatorMatrices::assemble(&basis, constants.z, &table)?;
    let r = optimize_k(&ops, config, constants, nuclear_motion)?;
    if let Some(p) = &path {
        table.save(p, max_grade(config, n)?)?;
    }
    let energy = r.energy.to_f64();
    Ok(SolveSummary {
        n,
        nuclear_motion,
        energy,
        energy_digits: r.energy.to_sci_string(config.precision_digits as usize - 5),
        de: energy - constants.e_exp,
        k_opt: r.k_opt.to_f64(),
        iterations: r.iterations,
        residual: r.residual,
        spectral_gap: r.spectral_gap,
        constants: constants.clone(),
    })
}

/// Term-by-term corrections for one basis size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSummary {
    pub n: usize,
    pub correction_state: CorrectionState,
    pub e0: f64,
    pub delta_r1: f64,
    pub delta_r12: f64,
    pub p4: f64,
    pub log_momentum: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub delta_e2: f64,
    pub r3_nuclear: f64,
    pub r3_contact: f64,
    pub r3_logmom: f64,
    pub delta_e3: f64,
    pub e_total: f64,
    pub uncertainty: f64,
    pub delta_vs_experiment: f64,
    pub constants: PhysicalConstants,
}

pub fn run_corrections(n: usize, config: &RunConfig, constants: &PhysicalConstants) -> Result<CorrectionSummary> {
    config.validate()?;
    constants.validate()?;
    let grade = max_grade(config, n)?;
    let (table, path) = open_table(config, grade)?;
    let p = run_pipeline(n, config, constants, &table)?;
    if let Some(path) = &path {
        table.save(path, grade)?;
    }
    let f = |x: &Real| x.to_f64();
    let (b, r, x) = (&p.corrections.breit, &p.corrections.radiative, &p.expectations);
    Ok(CorrectionSummary {
        n,
        correction_state: config.correction_state,
        e0: f(&p.corrections.e0),
        delta_r1: f(&x.delta_r1),
        delta_r12: f(&x.delta_r12),
        p4: f(&x.p4),
        log_momentum: f(&x.log_momentum),
        e1: f(&b.e1),
        e2: f(&b.e2),
        e3: f(&b.e3),
        e4: f(&b.e4),
        e5: f(&b.e5),
        delta_e2: f(&b.delta_e2),
        r3_nuclear: f(&r.r3_nuclear),
        r3_contact: f(&r.r3_contact),
        r3_logmom: f(&r.r3_logmom),
        delta_e3: f(&r.delta_e3),
        e_total: f(&p.corrections.e_total),
        uncertainty: f(&p.corrections.uncertainty),
        delta_vs_experiment: f(&p.corrections.delta_vs_experiment),
        constants: constants.clone(),
    })
}

fn csv_bytes<F>(header: &[&str], rows: usize, mut record: F) -> Result<Vec<u8>>
where
    F: FnMut(usize) -> Vec<String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for i in 0..rows {
        w.write_record(record(i))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn human_tables(doc: &ReportDocument) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "E_exp = {:.8}", doc.constants.e_exp);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>4}  {:>13}  {:>11}  {:>13}  {:>11}  {:>10}", "N", "E_inf", "dE_inf", "E0", "dE0", "k_opt");
    for r in &doc.rows {
        let _ = writeln!(
            s,
            "{:>4}  {:>13.8}  {:>11.8}  {:>13.8}  {:>11.8}  {:>10.6}",
            r.n, r.e_inf, r.de_inf, r.e0, r.de0, r.k_opt
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:>4}  {:>11}  {:>11}  {:>13}  {:>11}  {:>11}", "N", "deltaE2", "deltaE3", "E", "dE", "+/-");
    for r in &doc.rows {
        let _ = writeln!(
            s,
            "{:>4}  {:>11.8}  {:>11.8}  {:>13.8}  {:>11.8}  {:>11.8}",
            r.n, r.delta_e2, r.delta_e3, r.e_total, r.de_total, r.uncertainty
        );
    }
    for f in &doc.failures {
        let _ = writeln!(s, "\nN = {} failed: {}", f.n, f.error);
    }
    s
}

/// Renders the tables report. The output depends only on the document.
pub fn emit(doc: &ReportDocument, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Human => Ok(human_tables(doc).into_bytes()),
        OutputFormat::Json => json_bytes(doc),
        OutputFormat::Csv => csv_bytes(&CSV_COLUMNS, doc.rows.len(), |i| {
            let r = &doc.rows[i];
            let v = [r.e_inf, r.de_inf, r.e0, r.de0, r.delta_e2, r.delta_e3, r.e_total, r.de_total, r.k_opt];
            std::iter::once(r.n.to_string()).chain(v.iter().map(|x| x.to_string())).collect()
        }),
    }
}

pub fn emit_solve(s: &SolveSummary, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Json => json_bytes(s),
        OutputFormat::Csv => csv_bytes(&["N", "nuclear_motion", "E", "dE", "k_opt", "iterations", "residual"], 1, |_| {
            vec![
                s.n.to_string(),
                s.nuclear_motion.to_string(),
                s.energy.to_string(),
                s.de.to_string(),
                s.k_opt.to_string(),
                s.iterations.to_string(),
                s.residual.to_string(),
            ]
        }),
        OutputFormat::Human => {
            let label = if s.nuclear_motion { "E0" } else { "E_inf" };
            let mut out = String::new();
            let _ = writeln!(out, "N = {}", s.n);
            let _ = writeln!(out, "{label:<10} {:.8}", s.energy);
            let _ = writeln!(out, "{:<10} {}", "digits", s.energy_digits);
            let _ = writeln!(out, "{:<10} {:.8}", "dE", s.de);
            let _ = writeln!(out, "{:<10} {:.10}", "k_opt", s.k_opt);
            let _ = writeln!(out, "{:<10} {}", "solves", s.iterations);
            let _ = writeln!(out, "{:<10} {:.2e}", "residual", s.residual);
            Ok(out.into_bytes())
        }
    }
}

pub fn emit_corrections(c: &CorrectionSummary, format: OutputFormat) -> Result<Vec<u8>> {
    let pairs: [(&str, f64); 19] = [
        ("E0", c.e0),
        ("<delta(r1)>", c.delta_r1),
        ("<delta(r12)>", c.delta_r12),
        ("<p1^4>", c.p4),
        ("<log_momentum>", c.log_momentum),
        ("E1", c.e1),
        ("E2", c.e2),
        ("E3", c.e3),
        ("E4", c.e4),
        ("E5", c.e5),
        ("deltaE2", c.delta_e2),
        ("R3_nuclear", c.r3_nuclear),
        ("R3_contact", c.r3_contact),
        ("R3_logmom", c.r3_logmom),
        ("deltaE3", c.delta_e3),
        ("E_total", c.e_total),
        ("uncertainty", c.uncertainty),
        ("dE_total", c.delta_vs_experiment),
        ("alpha", c.constants.alpha),
    ];
    match format {
        OutputFormat::Json => json_bytes(c),
        OutputFormat::Csv => csv_bytes(&["quantity", "value"], pairs.len(), |i| vec![pairs[i].0.into(), pairs[i].1.to_string()]),
        OutputFormat::Human => {
            let mut out = format!("N = {}\n", c.n);
            for (k, v) in pairs {
                let _ = writeln!(out, "{k:<16} {v:>16.10e}");
            }
            Ok(out.into_bytes())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_constants;

    fn small_config(list: Vec<usize>) -> RunConfig {
        RunConfig { n_list: list, precision_digits: 40, ..RunConfig::default() }
    }

    #[test]
    fn empty_list_is_usage_error() {
        let r = run_tables(&small_config(vec![]), &default_constants());
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn single_term_row() {
        let doc = run_tables(&small_config(vec![1]), &default_constants()).unwrap();
        assert!(doc.succeeded());
        assert!((doc.rows[0].e_inf + 2.84765625).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_and_csv_shape() {
        let doc = run_tables(&small_config(vec![1, 3]), &default_constants()).unwrap();
        let json = String::from_utf8(emit(&doc, OutputFormat::Json).unwrap()).unwrap();
        assert_eq!(ReportDocument::from_json(&json).unwrap(), doc);
        let csv = String::from_utf8(emit(&doc, OutputFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(emit(&doc, OutputFormat::Human).unwrap(), emit(&doc, OutputFormat::Human).unwrap());
    }

    #[test]
    fn deltas_are_recomputed_on_load() {
        let mut doc = run_tables(&small_config(vec![2]), &default_constants()).unwrap();
        doc.rows[0].de0 = 123.0;
        let back = ReportDocument::from_json(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(back.rows[0].de0, back.rows[0].e0 - back.constants.e_exp);
    }

    #[test]
    fn cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(vec![4]);
        cfg.cache_dir = Some(dir.path().to_path_buf());
        let first = run_tables(&cfg, &default_constants()).unwrap();
        assert!(!first.cache.stats.loaded_from_disk);
        let second = run_tables(&cfg, &default_constants()).unwrap();
        assert!(second.cache.stats.loaded_from_disk);
        assert_eq!(second.cache.stats.misses, 0);
        assert_eq!(first.rows[0].e0, second.rows[0].e0);
    }
}
