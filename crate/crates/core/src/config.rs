//! Physical constants and run configuration.
//!
//! Configuration documents are flat `key = value` lines with `#` comments.
//! Run settings and constant overrides share one namespace:
//!
//! ```text
//! # Table 1 at higher precision
//! n_basis = 40
//! precision_digits = 60
//! alpha = 7.2973525693e-3
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::BasisOrdering;
use crate::error::{Error, Result};
use crate::real::{bits_for_digits, Real};

/// Prefix for environment-variable overrides (`HYHE_N_BASIS=30`).
pub const ENV_PREFIX: &str = "HYHE_";

/// Nuclear charge, coupling constants and the experimental reference energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub z: u32,
    pub alpha: f64,
    /// Nucleus-to-electron mass ratio M = m_alpha / m_e.
    pub mass_ratio: f64,
    /// `None` selects Euler's constant evaluated at the working precision.
    pub euler_gamma: Option<f64>,
    /// Helium ground-state Bethe logarithm.
    pub bethe_beta: f64,
    /// Experimental ground energy (hartree). Used for report deltas only.
    pub e_exp: f64,
}

/// CODATA 2018 fine-structure constant.
pub const DEFAULT_ALPHA: f64 = 7.2973525693e-3;

pub fn default_constants() -> PhysicalConstants {
    PhysicalConstants {
        z: 2,
        alpha: DEFAULT_ALPHA,
        mass_ratio: 7294.299508,
        euler_gamma: None,
        bethe_beta: 4.3700392,
        e_exp: -2.90338629,
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        default_constants()
    }
}

/// Exact decimal value of the shortest representation of `v`, so that a
/// constant typed as `7294.299508` enters the computation as exactly that.
pub(crate) fn decimal_real(v: f64, bits: usize) -> Real {
    Real::parse(&format!("{v:e}"), bits).expect("finite constant")
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        if self.z < 1 {
            return Err(Error::validation("constants", "Z must be >= 1"));
        }
        let finite = [self.alpha, self.mass_ratio, self.bethe_beta, self.e_exp]
            .iter()
            .chain(self.euler_gamma.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::validation("constants", "all constants must be finite"));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.01) {
            return Err(Error::validation("constants", format!("alpha = {} outside (0, 0.01)", self.alpha)));
        }
        if self.mass_ratio <= 1000.0 {
            return Err(Error::validation("constants", format!("mass_ratio = {} must exceed 1000", self.mass_ratio)));
        }
        Ok(())
    }

    pub fn alpha_real(&self, bits: usize) -> Real {
        decimal_real(self.alpha, bits)
    }

    pub fn mass_ratio_real(&self, bits: usize) -> Real {
        decimal_real(self.mass_ratio, bits)
    }

    pub fn bethe_beta_real(&self, bits: usize) -> Real {
        decimal_real(self.bethe_beta, bits)
    }

    pub fn euler_gamma_real(&self, bits: usize) -> Real {
        match self.euler_gamma {
            Some(g) => decimal_real(g, bits),
            None => Real::euler_gamma(bits),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Human,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" | "table" => Ok(OutputFormat::Human),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Usage(format!("unknown output format `{other}` (human|json|csv)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Human => "human",
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        })
    }
}

/// How the outer loop moves the scaling parameter between eigen-solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum KUpdate {
    /// Secant iteration on g(k) = -P/(2K) - k. Same fixed point as the
    /// plain map, reached in a handful of solves.
    #[default]
    Secant,
    /// k <- k + damping * (-P/(2K) - k).
    FixedPoint { damping: f64 },
}

/// Which ground state feeds the relativistic and radiative corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionState {
    #[default]
    FiniteMass,
    InfiniteMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_basis: usize,
    /// Basis sizes for `tables` / `sweep`.
    pub n_list: Vec<usize>,
    pub precision_digits: u32,
    pub k_init: f64,
    pub k_tol: f64,
    pub max_outer_iters: usize,
    pub quadrature_target: f64,
    pub output: OutputFormat,
    pub ordering: BasisOrdering,
    pub k_update: KUpdate,
    pub correction_state: CorrectionState,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_basis: 50,
            n_list: vec![20, 30, 40, 50],
            precision_digits: 50,
            k_init: 2.0,
            k_tol: 1e-12,
            max_outer_iters: 200,
            quadrature_target: 1e-14,
            output: OutputFormat::Human,
            ordering: BasisOrdering::default(),
            k_update: KUpdate::default(),
            correction_state: CorrectionState::default(),
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_basis == 0 {
            return Err(Error::validation("config", "n_basis must be >= 1"));
        }
        if self.n_list.contains(&0) {
            return Err(Error::validation("config", "n_list entries must be >= 1"));
        }
        if self.precision_digits < 30 {
            return Err(Error::validation(
                "config",
                format!("precision_digits = {} is below the floor of 30", self.precision_digits),
            ));
        }
        if self.precision_digits > 2000 {
            return Err(Error::validation("config", "precision_digits above 2000 is not supported"));
        }
        if !(self.k_init.is_finite() && self.k_init > 0.0) {
            return Err(Error::validation("config", "k_init must be positive"));
        }
        if !(self.k_tol.is_finite() && self.k_tol > 0.0) {
            return Err(Error::validation("config", "k_tol must be positive"));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::validation("config", "max_outer_iters must be >= 1"));
        }
        if !(self.quadrature_target.is_finite() && self.quadrature_target > 0.0) {
            return Err(Error::validation("config", "quadrature_target must be positive"));
        }
        if let KUpdate::FixedPoint { damping } = self.k_update {
            if !(damping > 0.0 && damping <= 1.0) {
                return Err(Error::validation("config", "damping must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    /// Mantissa width used for every arbitrary-precision computation.
    pub fn bits(&self) -> usize {
        bits_for_digits(self.precision_digits)
    }
}

/// A parsed configuration document: run settings plus constant overrides.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Settings {
    pub run: RunConfig,
    pub constants: PhysicalConstants,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::Config {
        key: key.to_string(),
        message: format!("cannot parse `{}`", value.trim()),
    })
}

impl Settings {
    /// Parses a `key = value` document; absent keys keep their defaults.
    pub fn from_kv(source: &str) -> Result<Self> {
        let mut settings = Settings::default();
        let mut pairs = Vec::new();
        for raw in source.lines() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                key: line.to_string(),
                message: "expected `key = value`".into(),
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        settings.apply_pairs(pairs)?;
        Ok(settings)
    }

    /// Applies `HYHE_*` variables from an environment snapshot.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let pairs: Vec<_> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|rest| (rest.to_ascii_lowercase(), v)))
            .collect();
        self.apply_pairs(pairs)
    }

    pub fn apply_pairs<I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (key, value) in pairs {
            self.set(&key, &value)?;
        }
        self.run.validate()?;
        self.constants.validate()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let run = &mut self.run;
        let c = &mut self.constants;
        match key {
            "n_basis" => run.n_basis = parse_value(key, value)?,
            "n_list" => {
                run.n_list = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_value(key, s))
                    .collect::<Result<_>>()?;
                if run.n_list.is_empty() {
                    return Err(Error::Config { key: key.into(), message: "empty list".into() });
                }
            }
            "precision_digits" => run.precision_digits = parse_value(key, value)?,
            "k_init" => run.k_init = parse_value(key, value)?,
            "k_tol" => run.k_tol = parse_value(key, value)?,
            "max_outer_iters" => run.max_outer_iters = parse_value(key, value)?,
            "quadrature_target" => run.quadrature_target = parse_value(key, value)?,
            "output" => {
                run.output = value.parse().map_err(|_| Error::Config {
                    key: key.into(),
                    message: format!("unknown format `{value}`"),
                })?
            }
            "ordering" => run.ordering = parse_value(key, value)?,
            "k_update" => {
                run.k_update = match value.trim() {
                    "secant" => KUpdate::Secant,
                    "fixed-point" => KUpdate::FixedPoint { damping: 1.0 },
                    other => {
                        return Err(Error::Config {
                            key: key.into(),
                            message: format!("unknown k update `{other}` (secant|fixed-point)"),
                        })
                    }
                }
            }
            "damping" => {
                let d: f64 = parse_value(key, value)?;
                run.k_update = KUpdate::FixedPoint { damping: d };
            }
            "correction_state" => {
                run.correction_state = match value.trim() {
                    "finite-mass" => CorrectionState::FiniteMass,
                    "infinite-mass" => CorrectionState::InfiniteMass,
                    other => {
                        return Err(Error::Config {
                            key: key.into(),
                            message: format!("unknown state `{other}` (finite-mass|infinite-mass)"),
                        })
                    }
                }
            }
            "cache_dir" => {
                let v = value.trim();
                run.cache_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) };
            }
            "z" => c.z = parse_value(key, value)?,
            "alpha" => c.alpha = parse_value(key, value)?,
            "mass_ratio" => c.mass_ratio = parse_value(key, value)?,
            "euler_gamma" => {
                c.euler_gamma = match value.trim() {
                    "exact" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "bethe_beta" => c.bethe_beta = parse_value(key, value)?,
            "e_exp" => c.e_exp = parse_value(key, value)?,
            other => {
                return Err(Error::Config { key: other.to_string(), message: "unknown key".into() });
            }
        }
        Ok(())
    }

    /// Renders a document that [`Settings::from_kv`] reads back unchanged.
    pub fn to_kv_string(&self) -> String {
        let r = &self.run;
        let c = &self.constants;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("n_basis", r.n_basis.to_string());
        line("n_list", r.n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
        line("precision_digits", r.precision_digits.to_string());
        line("k_init", format!("{:e}", r.k_init));
        line("k_tol", format!("{:e}", r.k_tol));
        line("max_outer_iters", r.max_outer_iters.to_string());
        line("quadrature_target", format!("{:e}", r.quadrature_target));
        line("output", r.output.to_string());
        line("ordering", r.ordering.to_string());
        match r.k_update {
            KUpdate::Secant => line("k_update", "secant".into()),
            KUpdate::FixedPoint { damping } => line("damping", format!("{damping:e}")),
        }
        line(
            "correction_state",
            match r.correction_state {
                CorrectionState::FiniteMass => "finite-mass".into(),
                CorrectionState::InfiniteMass => "infinite-mass".into(),
            },
        );
        if let Some(dir) = &r.cache_dir {
            line("cache_dir", dir.display().to_string());
        }
        line("z", c.z.to_string());
        line("alpha", format!("{:e}", c.alpha));
        line("mass_ratio", format!("{:e}", c.mass_ratio));
        line("euler_gamma", c.euler_gamma.map_or("exact".into(), |g| format!("{g:e}")));
        line("bethe_beta", format!("{:e}", c.bethe_beta));
        line("e_exp", format!("{:e}", c.e_exp));
        out
    }
}

/// Parses a configuration document and returns its run settings.
pub fn load_config(source: &str) -> Result<RunConfig> {
    Settings::from_kv(source).map(|s| s.run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_the_published_values() {
        let c = default_constants();
        assert_eq!(c.mass_ratio, 7294.299508);
        assert_eq!(c.bethe_beta, 4.3700392);
        assert_eq!(c.z, 2);
        assert_eq!(c.e_exp, -2.90338629);
        assert_eq!(c.alpha, 7.2973525693e-3);
        assert_eq!(default_constants(), default_constants());
    }

    #[test]
    fn partial_document_fills_defaults() {
        let run = load_config("n_basis = 50\n").unwrap();
        assert_eq!(run.n_basis, 50);
        assert_eq!(run.k_init, 2.0);
        assert_eq!(run.k_tol, 1e-12);
        assert_eq!(run.precision_digits, 50);
    }

    #[test]
    fn comments_and_blank_lines() {
        let run = load_config("# header\n\n  n_basis = 7   # trailing\nk_init=1.5\n").unwrap();
        assert_eq!(run.n_basis, 7);
        assert_eq!(run.k_init, 1.5);
    }

    #[test]
    fn range_violations() {
        assert!(matches!(load_config("n_basis = 0"), Err(Error::Validation { .. })));
        assert!(matches!(load_config("precision_digits = 10"), Err(Error::Validation { .. })));
        assert!(matches!(load_config("k_init = -1"), Err(Error::Validation { .. })));
        assert!(matches!(Settings::from_kv("alpha = 0.5"), Err(Error::Validation { .. })));
    }

    #[test]
    fn parse_errors_name_the_key() {
        match load_config("k_tol = abc") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "k_tol"),
            other => panic!("unexpected {other:?}"),
        }
        match load_config("bogus = 1") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "bogus"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_config("n_basis 50"), Err(Error::Config { .. })));
    }

    #[test]
    fn env_overrides() {
        let mut s = Settings::default();
        s.apply_env(vec![
            ("HYHE_N_BASIS".to_string(), "30".to_string()),
            ("HYHE_ALPHA".to_string(), "0.0072973525".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ])
        .unwrap();
        assert_eq!(s.run.n_basis, 30);
        assert_eq!(s.constants.alpha, 0.0072973525);
    }

    #[test]
    fn decimal_constants_are_exact() {
        let bits = bits_for_digits(50);
        let m = default_constants().mass_ratio_real(bits);
        let expect = Real::parse("7294.299508", bits).unwrap();
        assert_eq!(m, expect);
    }

    fn arb_settings() -> impl Strategy<Value = Settings> {
        (
            1usize..200,
            prop::collection::vec(1usize..100, 1..5),
            30u32..120,
            0.1f64..5.0,
            1e-16f64..1e-3,
            1usize..500,
            prop::sample::select(vec![OutputFormat::Human, OutputFormat::Json, OutputFormat::Csv]),
            prop::option::of(0.01f64..1.0),
            0.005f64..0.0099,
            prop::option::of(0.5f64..0.6),
        )
            .prop_map(|(n, list, digits, k, tol, iters, output, damping, alpha, gamma)| {
                let mut s = Settings::default();
                s.run.n_basis = n;
                s.run.n_list = list;
                s.run.precision_digits = digits;
                s.run.k_init = k;
                s.run.k_tol = tol;
                s.run.max_outer_iters = iters;
                s.run.output = output;
                if let Some(d) = damping {
                    s.run.k_update = KUpdate::FixedPoint { damping: d };
                }
                s.constants.alpha = alpha;
                s.constants.euler_gamma = gamma;
                s
            })
    }

    proptest! {
        #[test]
        fn kv_round_trip(s in arb_settings()) {
            let text = s.to_kv_string();
            let back = Settings::from_kv(&text).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
