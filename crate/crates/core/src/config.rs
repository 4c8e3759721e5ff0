//! JSON run configuration: models, named functions, the check list and
//! output settings, validated with JSON-pointer error locations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calculus::Transform;
use crate::chain::ChainModel;
use crate::levy::{LevyModel, RadialDensity, TestFunction};

/// One schema or validation problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    /// JSON pointer into the document (`""` for the root).
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{at}: {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration ({} problem(s)):\n{}", .0.len(), .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_paths")]
    pub paths: usize,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_paths() -> usize {
    10_000
}

impl Default for Defaults {
    fn default() -> Self {
        Self { horizon: default_horizon(), paths: default_paths() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knots {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Rates as `[x, y, q(x,y)]` triplets; `k` defaults to zero.
    Chain {
        m: Vec<f64>,
        q: Vec<(usize, usize, f64)>,
        #[serde(default)]
        k: Option<Vec<f64>>,
        #[serde(default)]
        labels: Option<Vec<String>>,
    },
    /// A fresh random symmetric chain per check instance.
    RandomChain {
        states: usize,
        #[serde(default)]
        killing: bool,
    },
    Stable {
        dim: usize,
        alpha: f64,
    },
    Radial {
        dim: usize,
        knots: Knots,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    /// Values on chain states.
    Values { values: Vec<f64> },
    /// Uniform random values on chain states, redrawn per check instance.
    Random { random: Range },
    /// A named test function on `R^N`.
    Test(TestFunction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Fukushima,
    ItoFormula,
    LeibnizIbp,
    NakaoRoutes,
    GammaKZero,
    NakaoDual,
    LevySystem,
    CharExponent,
    EnergyIdentity,
    OddAf,
    Associativity,
    JumpRepresentation,
    Riemann,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Fukushima => "fukushima",
            CheckKind::ItoFormula => "ito_formula",
            CheckKind::LeibnizIbp => "leibniz_ibp",
            CheckKind::NakaoRoutes => "nakao_routes",
            CheckKind::GammaKZero => "gamma_k_zero",
            CheckKind::NakaoDual => "nakao_dual",
            CheckKind::LevySystem => "levy_system",
            CheckKind::CharExponent => "char_exponent",
            CheckKind::EnergyIdentity => "energy_identity",
            CheckKind::OddAf => "odd_af",
            CheckKind::Associativity => "associativity",
            CheckKind::JumpRepresentation => "jump_representation",
            CheckKind::Riemann => "riemann",
        }
    }

    fn allowed(self) -> &'static [Backend] {
        use Backend::*;
        match self {
            CheckKind::Fukushima | CheckKind::ItoFormula | CheckKind::LevySystem => &[Chain, Levy],
            CheckKind::CharExponent => &[Levy],
            _ => &[Chain],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Chain,
    Levy,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Chain => "chain",
            Backend::Levy => "levy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItoMode {
    Ito,
    Stratonovich,
    Continuous,
}

/// Where the MAF `Z` (or `M`) of a check comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpChoice {
    /// `φ_u` of the first `u`.
    Fukushima,
    /// A random jump function per instance.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    /// `1_{|h| > threshold}`.
    Tail,
    /// `sign(h_1) 1_{|h| > threshold}`.
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub name: String,
    pub check: CheckKind,
    pub model: String,
    #[serde(default)]
    pub u: Vec<String>,
    #[serde(default)]
    pub v: Option<String>,
    #[serde(default)]
    pub f: Option<String>,
    #[serde(default)]
    pub g: Option<String>,
    #[serde(default, rename = "Phi")]
    pub transform: Option<Transform>,
    #[serde(default)]
    pub jump: Option<JumpChoice>,
    #[serde(default)]
    pub mode: Option<ItoMode>,
    #[serde(default)]
    pub paths: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub instances: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub bm_steps: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub meshes: Option<Vec<usize>>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub indicator: Option<Indicator>,
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    /// Replaces the check name as the seed namespace.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl CheckSpec {
    pub fn new(name: &str, check: CheckKind, model: &str) -> Self {
        Self {
            name: name.into(),
            check,
            model: model.into(),
            u: Vec::new(),
            v: None,
            f: None,
            g: None,
            transform: None,
            jump: None,
            mode: None,
            paths: None,
            horizon: None,
            instances: None,
            epsilon: None,
            bm_steps: None,
            tolerance: None,
            meshes: None,
            threshold: None,
            indicator: None,
            xi: None,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Document {
    seed: Option<u64>,
    #[serde(default)]
    defaults: Defaults,
    #[serde(default)]
    models: BTreeMap<String, ModelSpec>,
    #[serde(default)]
    functions: BTreeMap<String, FunctionSpec>,
    #[serde(default)]
    suite: Vec<CheckSpec>,
    #[serde(default)]
    output: OutputSpec,
}

/// A model ready for the suite.
#[derive(Debug, Clone)]
pub enum Model {
    Chain(ChainModel<f64>),
    RandomChain { states: usize, killing: bool },
    Levy(LevyModel),
}

impl Model {
    pub fn backend(&self) -> Backend {
        match self {
            Model::Levy(_) => Backend::Levy,
            _ => Backend::Chain,
        }
    }

    /// Number of states of a chain model.
    pub fn states(&self) -> Option<usize> {
        match self {
            Model::Chain(c) => Some(c.len()),
            Model::RandomChain { states, .. } => Some(*states),
            Model::Levy(_) => None,
        }
    }

    pub fn has_killing(&self) -> bool {
        match self {
            Model::Chain(c) => c.has_killing(),
            Model::RandomChain { killing, .. } => *killing,
            Model::Levy(_) => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub defaults: Defaults,
    pub models: BTreeMap<String, Model>,
    pub functions: BTreeMap<String, FunctionSpec>,
    pub suite: Vec<CheckSpec>,
    pub output: OutputSpec,
    /// Detailed balance enforced (parse-time and in the checks).
    pub strict: bool,
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

/// Keys present in `original` but absent from `known`.
fn unknown_keys(original: &Value, known: &Value, pointer: &str, out: &mut Vec<ConfigIssue>) {
    match (original, known) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let p = format!("{pointer}/{}", escape(k));
                match b.get(k) {
                    Some(w) => unknown_keys(v, w, &p, out),
                    None => out.push(ConfigIssue { pointer: p, message: format!("unknown key `{k}`") }),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (i, (v, w)) in a.iter().zip(b).enumerate() {
                unknown_keys(v, w, &format!("{pointer}/{i}"), out);
            }
        }
        _ => {}
    }
}

fn issue(pointer: impl Into<String>, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue { pointer: pointer.into(), message: message.into() }
}

/// Parses and validates a configuration document. In strict mode unknown
/// keys are errors and chains must satisfy detailed balance; non-strict
/// mode exists to build negative controls.
pub fn parse_config(text: &str, strict: bool) -> Result<RunConfig, ConfigErrors> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigErrors(vec![issue("", format!("malformed JSON: {e}"))]))?;
    let doc: Document = serde_path_to_error::deserialize(&value).map_err(|e| {
        use serde_path_to_error::Segment;
        let pointer: String = e
            .path()
            .iter()
            .filter_map(|s| match s {
                Segment::Seq { index } => Some(format!("/{index}")),
                Segment::Map { key } => Some(format!("/{}", escape(key))),
                Segment::Enum { .. } | Segment::Unknown => None,
            })
            .collect();
        ConfigErrors(vec![issue(pointer, e.inner().to_string())])
    })?;
    let mut issues = Vec::new();
    if strict {
        let known = serde_json::to_value(&doc).expect("document serialises");
        unknown_keys(&value, &known, "", &mut issues);
    }
    let seed = match doc.seed {
        Some(s) => s,
        None => {
            issues.push(issue("/seed", "a root seed is required"));
            0
        }
    };
    if !(doc.defaults.horizon > 0.0 && doc.defaults.horizon.is_finite()) {
        issues.push(issue("/defaults/horizon", "horizon must be positive"));
    }
    if doc.defaults.paths == 0 {
        issues.push(issue("/defaults/paths", "path count must be positive"));
    }
    let mut models = BTreeMap::new();
    for (name, spec) in &doc.models {
        let at = format!("/models/{}", escape(name));
        match build_model(spec, strict) {
            Ok(m) => {
                models.insert(name.clone(), m);
            }
            Err(e) => issues.push(issue(at, e)),
        }
    }
    for (name, spec) in &doc.functions {
        let at = format!("/functions/{}", escape(name));
        if let Err(e) = check_function(spec) {
            issues.push(issue(at, e));
        }
    }
    let mut seen = BTreeSet::new();
    for (i, spec) in doc.suite.iter().enumerate() {
        let at = format!("/suite/{i}");
        if !seen.insert(spec.name.clone()) {
            issues.push(issue(format!("{at}/name"), format!("duplicate check name `{}`", spec.name)));
        }
        validate_check(spec, &at, &doc, &models, &mut issues);
    }
    if !issues.is_empty() {
        return Err(ConfigErrors(issues));
    }
    Ok(RunConfig { seed, defaults: doc.defaults, models, functions: doc.functions, suite: doc.suite, output: doc.output, strict })
}

fn build_model(spec: &ModelSpec, strict: bool) -> Result<Model, String> {
    match spec {
        ModelSpec::Chain { m, q, k, labels } => {
            let n = m.len();
            if n == 0 {
                return Err("chain needs at least one state".into());
            }
            let k = k.clone().unwrap_or_else(|| vec![0.0; n]);
            let rates = ChainModel::rate_matrix(n, q).map_err(|e| e.to_string())?;
            let model = if strict { ChainModel::new(m.clone(), rates, k) } else { ChainModel::new_unchecked(m.clone(), rates, k) };
            let model = model.map_err(|e| e.to_string())?;
            match labels {
                Some(l) => model.with_labels(l.clone()).map(Model::Chain).map_err(|e| e.to_string()),
                None => Ok(Model::Chain(model)),
            }
        }
        ModelSpec::RandomChain { states, killing } => {
            if !(1..=64).contains(states) {
                return Err(format!("random chains need 1..=64 states, got {states}"));
            }
            Ok(Model::RandomChain { states: *states, killing: *killing })
        }
        ModelSpec::Stable { dim, alpha } => LevyModel::stable(*dim, *alpha).map(Model::Levy).map_err(|e| e.to_string()),
        ModelSpec::Radial { dim, knots } => {
            let density = RadialDensity::tabulated(knots.r.clone(), knots.f.clone()).map_err(|e| e.to_string())?;
            LevyModel::radial(*dim, density).map(Model::Levy).map_err(|e| e.to_string())
        }
    }
}

fn check_function(spec: &FunctionSpec) -> Result<(), String> {
    match spec {
        FunctionSpec::Values { values } => {
            if values.iter().any(|v| !v.is_finite()) {
                return Err("function values must be finite".into());
            }
        }
        FunctionSpec::Random { random } => {
            if !(random.lo < random.hi && random.lo.is_finite() && random.hi.is_finite()) {
                return Err("random range needs finite lo < hi".into());
            }
        }
        FunctionSpec::Test(t) => {
            if let TestFunction::HolderRadial { profile, beta } = *t {
                TestFunction::holder_radial(profile, beta).map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(())
}

/// Function references each check kind needs: `(field, required)`.
fn needs(spec: &CheckSpec, backend: Backend) -> Vec<(&'static str, bool)> {
    let needs_u = spec.jump != Some(JumpChoice::Random);
    match spec.check {
        CheckKind::Fukushima => vec![("u", true)],
        CheckKind::ItoFormula | CheckKind::OddAf => vec![("u", true)],
        CheckKind::LeibnizIbp => vec![("u", true), ("v", true)],
        CheckKind::NakaoRoutes => vec![("u", needs_u), ("f", true)],
        CheckKind::GammaKZero | CheckKind::JumpRepresentation => vec![("u", needs_u), ("f", false)],
        CheckKind::NakaoDual => vec![("u", false), ("g", false)],
        CheckKind::LevySystem => vec![("u", backend == Backend::Chain)],
        CheckKind::CharExponent => vec![],
        CheckKind::EnergyIdentity => vec![("u", true)],
        CheckKind::Associativity => vec![("u", needs_u), ("f", true), ("g", true)],
        CheckKind::Riemann => vec![("u", true), ("f", true)],
    }
}

fn validate_check(spec: &CheckSpec, at: &str, doc: &Document, models: &BTreeMap<String, Model>, issues: &mut Vec<ConfigIssue>) {
    let model = match models.get(&spec.model) {
        Some(m) => m,
        None => {
            if !doc.models.contains_key(&spec.model) {
                issues.push(issue(format!("{at}/model"), format!("unknown model `{}`", spec.model)));
            }
            return;
        }
    };
    let backend = model.backend();
    if !spec.check.allowed().contains(&backend) {
        issues.push(issue(format!("{at}/model"), format!("check `{}` does not run on the {} backend", spec.check.name(), backend.name())));
        return;
    }
    let refs: Vec<(String, &String)> = spec
        .u
        .iter()
        .enumerate()
        .map(|(i, n)| (format!("{at}/u/{i}"), n))
        .chain(spec.v.iter().map(|n| (format!("{at}/v"), n)))
        .chain(spec.f.iter().map(|n| (format!("{at}/f"), n)))
        .chain(spec.g.iter().map(|n| (format!("{at}/g"), n)))
        .collect();
    for (pointer, name) in &refs {
        match doc.functions.get(*name) {
            None => issues.push(issue(pointer.clone(), format!("unknown function `{name}`"))),
            Some(f) => match (f, model) {
                (FunctionSpec::Values { values }, _) if backend == Backend::Chain => {
                    let n = model.states().unwrap_or(0);
                    if values.len() != n && !(values.len() == n + 1 && values[n] == 0.0) {
                        issues.push(issue(pointer.clone(), format!("`{name}` has {} values but the model has {n} states", values.len())));
                    }
                }
                (FunctionSpec::Random { .. }, _) if backend == Backend::Chain => {}
                (FunctionSpec::Test(_), Model::Levy(_)) => {}
                _ => issues.push(issue(pointer.clone(), format!("`{name}` cannot be used on the {} backend", backend.name()))),
            },
        }
    }
    for (field, required) in needs(spec, backend) {
        let present = match field {
            "u" => !spec.u.is_empty(),
            "v" => spec.v.is_some(),
            "f" => spec.f.is_some(),
            _ => spec.g.is_some(),
        };
        if required && !present {
            issues.push(issue(format!("{at}/{field}"), format!("check `{}` needs `{field}`", spec.check.name())));
        }
    }
    let transform = spec.transform.unwrap_or(Transform::Square);
    if matches!(spec.check, CheckKind::ItoFormula | CheckKind::OddAf) && transform.arity() != spec.u.len() && !spec.u.is_empty() {
        issues.push(issue(format!("{at}/u"), format!("Φ = {transform:?} takes {} argument(s), got {}", transform.arity(), spec.u.len())));
    }
    if spec.check == CheckKind::ItoFormula && backend == Backend::Levy {
        if transform.arity() != 1 {
            issues.push(issue(format!("{at}/Phi"), "Lévy Itô checks take a one-argument Φ"));
        }
        for name in &spec.u {
            if let Some(FunctionSpec::Test(t)) = doc.functions.get(name) {
                if !t.is_c2() {
                    issues.push(issue(format!("{at}/u"), format!("`{name}` is not C², as the Itô formula requires")));
                }
            }
        }
    }
    if spec.mode == Some(ItoMode::Continuous) && backend != Backend::Levy {
        issues.push(issue(format!("{at}/mode"), "continuous mode needs a backend with a continuous component (Lévy, compensated)"));
    }
    if spec.check == CheckKind::OddAf && model.has_killing() {
        issues.push(issue(format!("{at}/model"), "odd-AF reversal oracle needs a model without killing"));
    }
    if spec.check == CheckKind::CharExponent {
        if let Model::Levy(l) = model {
            if l.alpha().is_none() {
                issues.push(issue(format!("{at}/model"), "characteristic exponent check needs a stable model (closed form)"));
            }
        }
    }
    let positive = |v: Option<f64>, field: &str, issues: &mut Vec<ConfigIssue>| {
        if let Some(x) = v {
            if !(x > 0.0 && x.is_finite()) {
                issues.push(issue(format!("{at}/{field}"), format!("`{field}` must be positive")));
            }
        }
    };
    positive(spec.tolerance, "tolerance", issues);
    positive(spec.horizon, "horizon", issues);
    positive(spec.epsilon, "epsilon", issues);
    positive(spec.threshold, "threshold", issues);
    if spec.paths == Some(0) {
        issues.push(issue(format!("{at}/paths"), "path count must be positive"));
    }
    if spec.instances == Some(0) {
        issues.push(issue(format!("{at}/instances"), "instance count must be positive"));
    }
    if let Some(meshes) = &spec.meshes {
        if meshes.len() < 2 || meshes.contains(&0) || !meshes.windows(2).all(|w| w[0] < w[1]) {
            issues.push(issue(format!("{at}/meshes"), "meshes must be at least two increasing positive cell counts"));
        }
    }
    if let (Some(eps), Some(th)) = (spec.epsilon, spec.threshold) {
        if eps > th {
            issues.push(issue(format!("{at}/epsilon"), "truncation must not exceed the counting threshold"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "seed": 7,
        "models": { "r3": { "kind": "chain", "m": [1, 1, 2], "q": [[0, 1, 1], [1, 0, 1], [1, 2, 1], [2, 1, 0.5]], "k": [0, 0.5, 0] } },
        "functions": { "u3": { "values": [0, 1, 2] } },
        "suite": [ { "name": "fk", "check": "fukushima", "model": "r3", "u": ["u3"] } ]
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL, true).unwrap();
        assert_eq!(cfg.defaults.horizon, 1.0);
        assert_eq!(cfg.defaults.paths, 10_000);
        assert_eq!(cfg.suite.len(), 1);
        assert!(matches!(cfg.models["r3"], Model::Chain(_)));
    }

    #[test]
    fn broken_balance_names_the_pair() {
        let text = MINIMAL.replace("[2, 1, 0.5]", "[2, 1, 0.501]");
        let err = parse_config(&text, true).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].pointer, "/models/r3");
        assert!(err.0[0].message.contains("(1, 2)") || err.0[0].message.contains("1") && err.0[0].message.contains("2"), "{}", err.0[0]);
        assert!(parse_config(&text, false).is_ok());
    }

    #[test]
    fn dangling_reference_has_pointer() {
        let text = MINIMAL.replace(r#""u": ["u3"]"#, r#""u": ["nope"]"#);
        let err = parse_config(&text, true).unwrap_err();
        assert_eq!(err.0[0].pointer, "/suite/0/u/0");
    }

    #[test]
    fn unknown_keys_rejected_only_when_strict() {
        let text =
            MINIMAL.replace(r#""seed": 7,"#, r#""seed": 7, "colour": "blue","#).replace(r#""u": ["u3"]"#, r#""u": ["u3"], "tolerence": 1"#);
        let err = parse_config(&text, true).unwrap_err();
        let pointers: Vec<_> = err.0.iter().map(|i| i.pointer.as_str()).collect();
        assert_eq!(pointers, vec!["/colour", "/suite/0/tolerence"]);
        assert!(parse_config(&text, false).is_ok());
    }

    #[test]
    fn type_errors_carry_their_location() {
        let text = MINIMAL.replace(r#""u": ["u3"]"#, r#""u": ["u3"], "paths": "many""#);
        let err = parse_config(&text, true).unwrap_err();
        assert_eq!(err.0[0].pointer, "/suite/0/paths");
    }

    #[test]
    fn missing_seed_is_an_error() {
        let text = MINIMAL.replace(r#""seed": 7,"#, "");
        let err = parse_config(&text, true).unwrap_err();
        assert_eq!(err.0[0].pointer, "/seed");
    }

    #[test]
    fn backend_mismatch_is_reported() {
        let text = MINIMAL.replace(r#""check": "fukushima""#, r#""check": "char_exponent""#);
        let err = parse_config(&text, true).unwrap_err();
        assert_eq!(err.0[0].pointer, "/suite/0/model");
    }

    #[test]
    fn empty_suite_is_valid() {
        let cfg = parse_config(r#"{"seed": 1}"#, true).unwrap();
        assert!(cfg.suite.is_empty());
    }
}
