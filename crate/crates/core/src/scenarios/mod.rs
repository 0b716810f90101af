//! Declarative, seeded experiments with CSV and JSON outputs.

mod config;
mod run;
mod table;

pub use config::{
    load_config, parse_config, resolve, ConfigError, ConfigFormat, Overrides, ResolvedConfig,
    ScenarioConfig, CONFIG_KEYS,
};
pub use run::{
    execute, run_scenario, write_failure, Evaluation, RuleVerdict, RunError, RunOutcome, Summary,
    EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_RULE_FAILED,
};
pub use table::{format_float, Cell, Column, ResultTable};

/// Version of the CSV column schemas and summary layout.
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// Config keys the scenario reads, besides the common ones.
    pub keys: &'static [&'static str],
    pub columns: &'static [Column],
    /// Closed-form prediction, when the scenario checks one.
    pub formula: Option<&'static str>,
}

const fn col(name: &'static str, kind: &'static str, description: &'static str) -> Column {
    Column { name, kind, description }
}

const EPS: Column = col("eps", "float", "energy ε = |v|_g");
const ORBIT: Column = col("orbit", "int", "orbit index within the ε group");

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo {
        name: "period-law",
        summary: "measured periods on a space form against the closed-form law",
        keys: &["manifold", "params", "eps"],
        columns: &[
            EPS,
            ORBIT,
            col("measured_period", "float", "refined closure time"),
            col("predicted_period", "float", "2π/√(1 + κε²)"),
            col("rel_err", "float", "|measured − predicted| / predicted"),
            col("closure_defect", "float", "whitened phase-space distance at the period"),
        ],
        formula: Some("T(eps) = 2*pi / sqrt(1 + kappa * eps^2)"),
    },
    ScenarioInfo {
        name: "zoll-defect",
        summary: "spread of the period function over seeded orbits at each energy",
        keys: &["manifold", "params", "eps", "orbits"],
        columns: &[
            EPS,
            ORBIT,
            col("period", "float", "best closure time near the guess"),
            col("closure_defect", "float", "whitened phase-space distance at the period"),
            col("closed", "bool", "closure defect below the rejection threshold"),
            col("iterations", "int", "refinement iterations"),
            col("chart", "int", "chart of the initial point"),
            col("q", "text", "initial point, ';'-separated"),
            col("v", "text", "initial velocity, ';'-separated"),
        ],
        formula: None,
    },
    ScenarioInfo {
        name: "conformal-drift",
        summary: "ε² guiding-centre drift of the model bundle H = a(q)|v|²/2, a = 1 + A sin q1",
        keys: &["eps", "periods", "amplitude", "q0"],
        columns: &[
            EPS,
            ORBIT,
            col("period", "float", "fibre rotation period"),
            col("displacement", "float", "guiding-centre displacement per period"),
            col("cosine_x_minus_a", "float", "signed cosine against X_{-a}"),
            col("audit_cosine", "float", "signed cosine against the averaged system"),
            col("magnitude_ratio", "float", "displacement over the averaged-system prediction"),
            col("centre", "text", "mean guiding centre, ';'-separated"),
        ],
        formula: Some("<q'> = average over the fibre angle of the model field"),
    },
    ScenarioInfo {
        name: "curvature-drift",
        summary: "ε⁴ guiding-centre drift of the magnetic flow on a Kähler surface",
        keys: &["manifold", "params", "eps", "periods", "q0"],
        columns: &[
            EPS,
            ORBIT,
            col("period", "float", "measured quasi-period"),
            col("displacement", "float", "guiding-centre displacement per quasi-period (g-norm)"),
            col("cosine_x_khat", "float", "signed cosine against X_{K̂/8} (ι_X β = −dK̂/8)"),
            col("audit_cosine", "float", "signed cosine against the prediction under ι_X(−β) = −dH"),
            col("gradient_component", "float", "|cos| against ∇K̂"),
            col("magnitude_ratio", "float", "displacement / (2π ε⁴ |Y|_g)"),
            col("centre", "text", "mean guiding centre, ';'-separated"),
        ],
        formula: Some("D(eps) = 2*pi * eps^4 * |dK| / 8"),
    },
    ScenarioInfo {
        name: "vertical-drift",
        summary: "ε² drift of the complex line of the velocity on a 4-dimensional almost Kähler manifold",
        keys: &["manifold", "params", "eps", "periods", "q0", "direction"],
        columns: &[
            EPS,
            ORBIT,
            col("period", "float", "measured quasi-period"),
            col("displacement", "float", "drift of the averaged complex line on S² per quasi-period"),
            col("direction", "text", "unit drift direction in R³, ';'-separated"),
            col("dv_khat_norm", "float", "|d^v K̂| at the initial state"),
        ],
        formula: None,
    },
    ScenarioInfo {
        name: "spectral-suite",
        summary: "spectral numbers and Zoll/Besse classification of linear flows e^{tÃ}",
        keys: &["matrix_file", "instances", "dims", "denom_bound"],
        columns: &[
            col("instance", "int", "instance index"),
            col("source", "text", "fixture, random or file"),
            col("dim", "int", "2k"),
            col("spectral", "text", "ã_1 ≥ … ≥ ã_k, ';'-separated"),
            col("class", "text", "zoll, besse, not-besse or undecided-at-bound"),
            col("t_min", "float", "2π/ã_1"),
            col("common_period", "float", "least common period (Besse/Zoll only)"),
            col("residual", "float", "max |ρ(w,Av) − γ(w,v)| / max(1, |γ|) over sampled pairs"),
            col("det_error", "float", "|det Ã − 1|"),
            col("symplectic_error", "float", "max |Φᵀ ρ Φ − ρ| over a time grid"),
            col("mode_closure", "float", "max |e^{(2π/ã_j)Ã} v_j − v_j| over modes"),
            col("besse_closure", "float", "|e^{TÃ} − I| at the common period"),
            col("membership", "bool", "all mode and common periods lie in 2π(Q₊^k)^{1/k}"),
            col("sigma_min_dim", "int", "2 k_{ã_1} − 1"),
        ],
        formula: Some("T_min = 2*pi / a_1, A = rho^-1 gamma, A~ = A / det(A)^(1/2k)"),
    },
    ScenarioInfo {
        name: "chern-audit",
        summary: "Chern connection residuals, torsion against the Nijenhuis tensor and K̂ fibre invariance",
        keys: &["manifold", "params", "points"],
        columns: &[
            col("point", "int", "sample index"),
            col("q", "text", "sample point, ';'-separated"),
            col("metric", "float", "max |∇g|"),
            col("acs", "float", "max |∇J|"),
            col("torsion_type", "float", "max (1,1)-torsion"),
            col("torsion_nijenhuis", "float", "max |T + N/4|"),
            col("nijenhuis", "float", "max |N|"),
            col("khat", "float", "K̂ at a sampled unit vector"),
            col("khat_fiber_spread", "float", "max − min of K̂ over 32 angles of span{v, Jv}"),
        ],
        formula: Some("Khat = K - |N*_v v|^2 / 24"),
    },
    ScenarioInfo {
        name: "z0-identity",
        summary: "the exterior-derivative identity for the vertical field Z0 against K̂",
        keys: &["manifold", "params", "points"],
        columns: &[
            col("point", "int", "sample index"),
            col("q", "text", "sample point, ';'-separated"),
            col("v", "text", "unit vector, ';'-separated"),
            col("lhs", "float", "(d ι_{Z0} dτ)(Z0, (Jv)^v) by nested central differences"),
            col("khat", "float", "K − (2/3)|T*_v v|²"),
            col("residual", "float", "|lhs − khat|"),
            col("reversed", "float", "−K − (2/3)|T*_v v|²"),
            col("reversed_residual", "float", "|lhs − reversed|"),
        ],
        formula: Some("lhs = Khat"),
    },
];

/// Closest candidate within edit distance 3.
pub fn suggest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .filter(|(d, _)| *d <= 3)
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c)
}

pub(crate) fn unknown(kind: &str, name: &str, candidates: &[&str]) -> ConfigError {
    let hint = match suggest(name, candidates.iter().copied()) {
        Some(s) => format!("; did you mean `{s}`?"),
        None => format!("; expected one of: {}", candidates.join(", ")),
    };
    ConfigError(format!("unknown {kind} `{name}`{hint}"))
}

pub fn scenario_names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.name).collect()
}

pub fn scenario_info(name: &str) -> std::result::Result<&'static ScenarioInfo, ConfigError> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| unknown("scenario", name, &scenario_names()))
}

/// Human-readable column schema.
pub fn describe(name: &str) -> std::result::Result<String, ConfigError> {
    let info = scenario_info(name)?;
    let mut out = format!("{}: {}\n", info.name, info.summary);
    if let Some(f) = info.formula {
        out += &format!("prediction: {f}\n");
    }
    out += &format!("config keys: scenario, seed, tol, out, workers, {}\n", info.keys.join(", "));
    out += "columns:\n";
    for c in info.columns {
        out += &format!("  {:<20} {:<6} {}\n", c.name, c.kind, c.description);
    }
    Ok(out)
}
