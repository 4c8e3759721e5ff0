//! Acceptance run: executes the shipped suite through the binary and prints
//! one pass/fail line per acceptance criterion. Exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use serde_json::Value;

struct Run {
    code: i32,
    checks: BTreeMap<String, Value>,
    csv: Vec<u8>,
    json: Vec<u8>,
    seconds: f64,
}

fn verify(out: &Path, jobs: usize, only: &[&str]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jumpcalc"));
    cmd.args(["--jobs", &jobs.to_string(), "verify", "--out", out.to_str().unwrap()]);
    for name in only {
        cmd.args(["--only", name]);
    }
    let start = Instant::now();
    let status = cmd.output().expect("jumpcalc runs");
    let seconds = start.elapsed().as_secs_f64();
    let csv = fs::read(out.join("report.csv")).expect("report.csv");
    let json = fs::read(out.join("report.json")).expect("report.json");
    let doc: Value = serde_json::from_slice(&json).expect("valid report.json");
    let checks =
        doc["checks"].as_array().expect("checks array").iter().map(|c| (c["name"].as_str().unwrap().to_string(), c.clone())).collect();
    Run { code: status.status.code().unwrap_or(-1), checks, csv, json, seconds }
}

struct Verdict {
    ok: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { ok: true, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, note: String) {
        self.ok &= ok;
        self.notes.push(if ok { note } else { format!("{note} [violated]") });
    }
}

fn get<'a>(run: &'a Run, name: &str) -> Option<&'a Value> {
    run.checks.get(name)
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

fn detail(v: &Value, key: &str) -> f64 {
    v["details"][key].as_f64().unwrap_or(f64::NAN)
}

/// Each named check must be present and passing, with its max residual below `bound`.
fn pathwise(v: &mut Verdict, run: &Run, names: &[&str], bound: f64) {
    for name in names {
        match get(run, name) {
            Some(c) => {
                let max = num(c, "max_resid");
                let pass = c["pass"].as_bool() == Some(true);
                v.require(pass && max < bound, format!("{name} max={max:.2e}"));
            }
            None => v.require(false, format!("{name} missing")),
        }
    }
}

fn statistical(v: &mut Verdict, run: &Run, name: &str) {
    match get(run, name) {
        Some(c) => {
            let z = num(c, "z");
            let pass = c["pass"].as_bool() == Some(true);
            v.require(pass && z.abs() <= 3.0, format!("{name} z={z:.2}"));
        }
        None => v.require(false, format!("{name} missing")),
    }
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let full = verify(&tmp.path().join("jobs1"), 1, &[]);
    let again = verify(&tmp.path().join("jobs4"), 4, &[]);
    let fuk = verify(&tmp.path().join("fukushima"), 1, &["fukushima_r3", "fukushima_random"]);

    let mut lines: Vec<(usize, &str, Verdict)> = Vec::new();

    let mut v = Verdict::new();
    pathwise(&mut v, &fuk, &["fukushima_r3", "fukushima_random"], 1e-9);
    for name in ["fukushima_r3", "fukushima_random"] {
        if let Some(c) = get(&fuk, name) {
            let per_instance = c["n_paths"].as_u64().unwrap_or(0) / if name == "fukushima_random" { 5 } else { 1 };
            v.require(per_instance >= 10_000, format!("{name} {per_instance} paths/chain"));
        }
    }
    v.require(fuk.seconds < 30.0, format!("{:.1} s single-threaded", fuk.seconds));
    lines.push((1, "Fukushima decomposition, exact backend", v));

    let mut v = Verdict::new();
    pathwise(&mut v, &full, &["nakao_routes_r3", "nakao_routes_random"], 1e-10);
    lines.push((2, "Nakao integral: three routes agree", v));

    let mut v = Verdict::new();
    pathwise(&mut v, &full, &["gamma_k_zero_r3", "gamma_k_zero_random"], 1e-12);
    if let Some(c) = get(&full, "gamma_k_zero_random") {
        v.require(detail(c, "gamma_sup") < 1e-12, format!("sup|gamma(psi_K)|={:.2e}", detail(c, "gamma_sup")));
    }
    lines.push((3, "Gamma(K) = 0", v));

    let mut v = Verdict::new();
    pathwise(&mut v, &full, &["nakao_dual_r3"], 1e-6);
    lines.push((4, "dual characterisation of gamma", v));

    let mut v = Verdict::new();
    pathwise(&mut v, &full, &["energy_r3", "energy_random"], 1e-12);
    if let Some(c) = get(&full, "energy_r3") {
        let (l, r) = (detail(c, "energy_lhs"), detail(c, "energy_rhs"));
        v.require((l - 2.25).abs() < 1e-12 && (r - 2.25).abs() < 1e-12, format!("R3 sides {l} / {r}"));
    }
    lines.push((5, "energy identity", v));

    let mut v = Verdict::new();
    pathwise(&mut v, &full, &["jump_representation_r3", "jump_representation_random"], 1e-10);
    let killed: f64 = ["jump_representation_r3", "jump_representation_random"]
        .iter()
        .filter_map(|n| get(&full, n))
        .map(|c| detail(c, "killed_paths"))
        .sum();
    v.require(killed > 0.0, format!("{killed} killed paths"));
    lines.push((6, "jump representation of the antisymmetrised Dirichlet process", v));

    let mut v = Verdict::new();
    let chain_ito: Vec<&str> =
        full.checks.keys().map(String::as_str).filter(|n| n.starts_with("ito_r3_") || n.starts_with("ito_random_")).collect();
    v.require(chain_ito.len() >= 6, format!("{} chain Ito-formula checks", chain_ito.len()));
    pathwise(&mut v, &full, &chain_ito, 1e-9);
    for name in ["ito_cauchy_ito", "ito_cauchy_stratonovich"] {
        statistical(&mut v, &full, name);
        if let Some(c) = get(&full, name) {
            let (b, h) = (detail(c, "budget"), detail(c, "budget_half"));
            v.require(h < b, format!("bound {b:.2e} -> {h:.2e} at eps/2"));
            v.require(detail(c, "epsilon") == 1e-3, "eps=1e-3".into());
        }
    }
    lines.push((7, "generalised Ito formula, both modes", v));

    let mut v = Verdict::new();
    statistical(&mut v, &full, "levy_system_cauchy");
    if let Some(c) = get(&full, "levy_system_cauchy") {
        v.require(c["n_paths"].as_u64() >= Some(100_000), format!("{} paths", c["n_paths"]));
        v.require((detail(c, "expected") - 2.0 / std::f64::consts::PI).abs() < 1e-12, format!("mean {} vs 2/pi", detail(c, "mc_mean")));
    }
    pathwise(&mut v, &full, &["char_exponent_cauchy", "char_exponent_stable2"], 1e-6);
    lines.push((8, "Levy system and characteristic exponent (Cauchy)", v));

    let mut v = Verdict::new();
    pathwise(&mut v, &full, &["odd_af_r3", "odd_af_random"], 1e-12);
    for name in ["odd_af_r3", "odd_af_random"] {
        if let Some(c) = get(&full, name) {
            let contrast = detail(c, "contrast");
            v.require(contrast > 0.0, format!("{name} Ito contrast={contrast:.3}"));
        }
    }
    lines.push((9, "Stratonovich correction is odd; Ito form is not", v));

    let mut v = Verdict::new();
    match get(&full, "riemann_r3") {
        Some(c) => {
            let means: Vec<f64> = [16, 64, 256].iter().map(|n| detail(c, &format!("mean_err_{n}"))).collect();
            let maxes: Vec<f64> = [16, 64, 256].iter().map(|n| detail(c, &format!("max_err_{n}"))).collect();
            v.require(c["pass"].as_bool() == Some(true), "riemann_r3 pass".into());
            v.require(
                means[0] > means[1] && means[1] > means[2],
                format!("mean sup error {:.2e} > {:.2e} > {:.2e}", means[0], means[1], means[2]),
            );
            v.require(maxes[2] < maxes[0], format!("max sup error {:.2e} -> {:.2e}", maxes[0], maxes[2]));
            v.notes.push(format!("{} non-monotone paths", detail(c, "non_monotone_paths")));
        }
        None => v.require(false, "riemann_r3 missing".into()),
    }
    lines.push((10, "Riemann sums converge to the Ito integral", v));

    let mut v = Verdict::new();
    v.require(full.csv == again.csv, "report.csv identical at --jobs 1 and 4".into());
    v.require(full.json == again.json, "report.json identical at --jobs 1 and 4".into());
    lines.push((11, "determinism", v));

    println!();
    println!("acceptance: shipped suite exit code {} ({} checks, {:.1} s)", full.code, full.checks.len(), full.seconds);
    let mut all = full.code == 0;
    for (k, title, v) in &lines {
        all &= v.ok;
        println!("{} criterion {k:>2}: {title} -- {}", if v.ok { "PASS" } else { "FAIL" }, v.notes.join("; "));
    }
    println!("acceptance: {}", if all { "all criteria pass" } else { "FAILED" });
    println!();
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
