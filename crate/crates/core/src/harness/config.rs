//! Experiment configuration, one TOML document per run. Unknown keys are
//! rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::ORACLE_CAP;
use crate::frames::Positivity;
use crate::generators::dephasing::DephasingModel;
use crate::generators::jc::JcLabeling;
use crate::generators::two_qubit::TwoQubitModel;
use crate::operator::{c, pauli, Operator};
use crate::unravel::UnravelConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub frame: FrameSpec,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub unravel: UnravelConfig,
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub repreparations: Vec<ReprepSpec>,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// Constant `gamma D[sigma_-]`; ignores the environment.
    Decay(DecayParams),
    DephasingD4(DephasingModel),
    JcSingleMode(JcSingleModeParams),
    JcContinuum(JcContinuumParams),
    TwoQubit(TwoQubitModel),
    /// Dephasing Hamiltonian treated with one correlated master equation instead of the OPD.
    FixedCorrelations(DephasingModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayParams {
    pub gamma: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams { gamma: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JcSingleModeParams {
    pub omega0: f64,
    pub omega: f64,
    pub g: f64,
    /// Highest Fock level of the environment mode.
    pub cutoff: usize,
    pub labeling: JcLabeling,
}

impl Default for JcSingleModeParams {
    fn default() -> Self {
        JcSingleModeParams { omega0: 1.0, omega: 0.1, g: 0.5, cutoff: 4, labeling: JcLabeling::AsPrinted }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JcContinuumParams {
    pub g: f64,
    pub omega_c: f64,
    pub n: f64,
    pub omega0: f64,
    pub labeling: JcLabeling,
}

impl Default for JcContinuumParams {
    fn default() -> Self {
        JcContinuumParams { g: 0.05, omega_c: 2.0, n: 0.0, omega0: 1.0, labeling: JcLabeling::AsPrinted }
    }
}

/// Initial global state.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// The state each model is usually run from.
    #[default]
    ModelDefault,
    /// `sum_k |k, k> / 2` on `C^4 (x) C^4`.
    MaximallyEntangledD4,
    /// `(|0>|psi0> + |1>|psi1>) / N` with environment kets as `[re, im]` pairs.
    QubitEntangled { psi0: Vec<[f64; 2]>, psi1: Vec<[f64; 2]> },
    /// `(|0>|n0> + |1>|n1>) / sqrt 2` with Fock states up to the model cutoff.
    SingleModeEntangled { n0: usize, n1: usize },
    Product { system: MatrixSpec, environment: MatrixSpec },
    /// System state with a trivial one-dimensional environment.
    System { rho: MatrixSpec },
    /// JSON file `{"ds": .., "de": .., "re": [[..]], "im": [[..]]}`.
    Custom { path: PathBuf },
}

/// Dense matrix as row lists; `im` defaults to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_operator(&self) -> Result<Operator> {
        let d = self.re.len();
        if d == 0 || self.re.iter().any(|r| r.len() != d) {
            return Err(Error::Config("matrix must be square and non-empty".into()));
        }
        if let Some(im) = &self.im {
            if im.len() != d || im.iter().any(|r| r.len() != d) {
                return Err(Error::Config("imaginary part has a different shape".into()));
            }
        }
        Ok(Operator::from_fn(d, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |m| m[i][j]);
            c(self.re[i][j], im)
        }))
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSpec {
    pub kind: FrameKind,
    pub positivity: Positivity,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    /// `Q_0 = 1/d - sum sigma / 2`, `Q_a = sigma_a / 2` over generalised Pauli matrices.
    #[default]
    Pauli,
}

/// Sampling of tabulated generators.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Grid spacing; each model has its own default.
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableSpec {
    /// `<row|rho|col>`, reported as real and imaginary parts.
    Element { row: usize, col: usize },
    Expectation { name: String, operator: OperatorSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    /// `sigma-x`, `sigma-y`, `sigma-z`, `sigma-plus`, `sigma-minus` or `identity`.
    Named(String),
    Matrix(MatrixSpec),
}

impl OperatorSpec {
    pub fn to_operator(&self, d: usize) -> Result<Operator> {
        let op = match self {
            OperatorSpec::Named(n) if n == "identity" => return Ok(Operator::identity(d)),
            OperatorSpec::Named(n) => {
                let op = match n.as_str() {
                    "sigma-x" => pauli::x(),
                    "sigma-y" => pauli::y(),
                    "sigma-z" => pauli::z(),
                    "sigma-plus" => pauli::plus(),
                    "sigma-minus" => pauli::minus(),
                    _ => return Err(Error::Config(format!("unknown operator '{n}'"))),
                };
                if d != 2 {
                    return Err(Error::Config(format!("operator '{n}' needs a qubit, system has dimension {d}")));
                }
                op
            }
            OperatorSpec::Matrix(m) => m.to_operator()?,
        };
        if op.dim() != d {
            return Err(Error::Config(format!("observable has dimension {}, system {d}", op.dim())));
        }
        Ok(op)
    }
}

/// System-side operation applied to the initial global state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReprepSpec {
    /// `V_nm = sum_k e^{2 pi i k n / d} |k + m><k|`.
    Bell { n: usize, m: usize },
    /// `sum_k p_k |k><k| . |k><k|`.
    ZeroDiscord { p: Vec<f64> },
    /// Replaces the system state by `1/d`.
    Factorize,
}

impl ReprepSpec {
    pub fn label(&self) -> String {
        match self {
            ReprepSpec::Bell { n, m } => format!("bell({n},{m})"),
            ReprepSpec::ZeroDiscord { p } => {
                let ps: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                format!("zero-discord({})", ps.join(","))
            }
            ReprepSpec::Factorize => "factorize".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    /// Largest total dimension `d_S d_E` the global propagator accepts.
    pub cap: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec { cap: ORACLE_CAP, rel_tol: 1e-9, abs_tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Exact unitary evolution of the global state.
    Global,
    /// Integration of the branch master equations.
    MasterEquation,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    /// Defaults to the model's natural reference.
    pub oracle: Option<OracleKind>,
    /// Distances above `threshold * sigma + abs_tol` are flagged.
    pub threshold: f64,
    pub abs_tol: f64,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec { oracle: None, threshold: 4.0, abs_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `rho_E = 1/n`, `chi = lambda (|Psi><Psi| - 1/n^2)`.
    LambdaFamily {
        #[serde(default = "two")]
        n: usize,
        lambdas: Vec<f64>,
        #[serde(default = "ten_thousand")]
        samples: usize,
    },
    /// Explicit `(rho_E, chi)` on `C^ds (x) C^dE`.
    General {
        ds: usize,
        env_state: MatrixSpec,
        chi: MatrixSpec,
        #[serde(default = "ten_thousand")]
        samples: usize,
    },
    /// `(rho_E, chi)` taken from the configured initial state.
    FromState {
        #[serde(default = "ten_thousand")]
        samples: usize,
    },
}

fn two() -> usize {
    2
}

fn ten_thousand() -> usize {
    10_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out") }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.unravel.validate()?;
        if let Some(dt) = self.generator.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("generator dt must be positive, got {dt}")));
            }
        }
        if !(self.compare.threshold > 0.0) || !(self.compare.abs_tol >= 0.0) {
            return Err(Error::Config("compare threshold must be positive and abs_tol non-negative".into()));
        }
        if !(self.oracle.rel_tol > 0.0 && self.oracle.abs_tol > 0.0) {
            return Err(Error::Config("oracle tolerances must be positive".into()));
        }
        for r in &self.repreparations {
            if let ReprepSpec::ZeroDiscord { p } = r {
                if p.iter().any(|&x| !(x >= 0.0)) || p.is_empty() {
                    return Err(Error::Config("zero-discord weights must be non-negative".into()));
                }
            }
        }
        if let Some(DomainSpec::LambdaFamily { lambdas, n, .. }) = &self.domain {
            if *n < 2 || lambdas.iter().any(|&l| !(0.0..=1.0).contains(&l)) {
                return Err(Error::Config("lambda family needs n >= 2 and lambda in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// SHA-256 of the canonical JSON form, with the thread count cleared.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.unravel.threads = None;
        canon.output = OutputSpec::default();
        let bytes = serde_json::to_vec(&canon).expect("config serialises");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_toml("[model]\nname = \"decay\"\n").unwrap();
        assert!(matches!(cfg.model, ModelSpec::Decay(DecayParams { gamma }) if gamma == 1.0));
        assert!(matches!(cfg.state, StateSpec::ModelDefault));
        assert_eq!(cfg.unravel, UnravelConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "[model]\nname = \"decay\"\nrate = 2.0\n",
            "[model]\nname = \"decay\"\n[unravel]\nsteps = 3\n",
            "[model]\nname = \"decay\"\n[bogus]\nx = 1\n",
            "[model]\nname = \"two-qubit\"\nnu = 1.0\n",
            "[model]\nname = \"decay\"\n[state]\npreset = \"system\"\nrho = { re = [[1.0]] }\nextra = 1\n",
            "[model]\nname = \"decay\"\n[[observables]]\nkind = \"element\"\nrow = 0\ncol = 0\nside = 1\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
            [model]
            name = "jc-single-mode"
            g = 0.5
            [state]
            preset = "single-mode-entangled"
            n0 = 1
            n1 = 0
            [unravel]
            method = "nmqj"
            n_traj = 100
            [[observables]]
            kind = "expectation"
            name = "sz"
            operator = "sigma-z"
            [[observables]]
            kind = "expectation"
            name = "proj"
            operator = { re = [[1.0, 0.0], [0.0, 0.0]] }
            [[repreparations]]
            kind = "zero-discord"
            p = [0.5, 0.5]
            [[repreparations]]
            kind = "factorize"
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.observables.len(), 2);
        assert_eq!(cfg.repreparations[0].label(), "zero-discord(0.5,0.5)");
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn hash_ignores_threads_but_not_seed() {
        let a = ExperimentConfig::from_toml("[model]\nname = \"decay\"\n").unwrap();
        let mut b = a.clone();
        b.unravel.threads = Some(3);
        assert_eq!(a.hash(), b.hash());
        b.unravel.seed = 7;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn named_operators_need_a_qubit() {
        assert!(OperatorSpec::Named("sigma-z".into()).to_operator(4).is_err());
        assert!(OperatorSpec::Named("nope".into()).to_operator(2).is_err());
        assert_eq!(OperatorSpec::Named("identity".into()).to_operator(3).unwrap(), Operator::identity(3));
    }
}
