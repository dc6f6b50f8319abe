use std::fmt;

use htcrystal::crystal::{DEFAULT_BUDGET, DEFAULT_THRESHOLD};
use htcrystal::{
    binomial_series, cocycle_check, convergence_oracle, nearly_ht_check, recover_sen,
    sen_from_crystal, stratify, tau_cocycle, theta_u_lambda_prime, CocycleResult, Error,
    HtCrystal, KMatrix, LocalField, NhtEvidence, NhtVerdict, OracleOutcome, Verdict, Q,
};

use crate::config::{ConfigError, CrystalConfig};
use crate::report::Report;
use crate::selftest::run_suites;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(ConfigError),
    Core(Error),
}

impl CliError {
    /// 2 for unreadable or invalid input, 3 for precision trouble, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Parse(_) => 2,
            CliError::Core(Error::PrecisionExhausted { .. } | Error::PrecisionInsufficient(_)) => 3,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Parse(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Parse(e)
    }
}

/// Command-line overrides of the config.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub precision: Option<i64>,
    pub degree: Option<usize>,
}

struct Session {
    field: LocalField,
    crystal: HtCrystal,
    degree: usize,
}

fn session(cfg: &CrystalConfig, o: Overrides) -> Result<Session, CliError> {
    let field = cfg.field(o.precision, o.degree)?;
    let crystal = cfg.crystal(&field);
    Ok(Session {
        field,
        crystal,
        degree: o.degree.unwrap_or(cfg.degree),
    })
}

pub fn matrix_lines(m: &KMatrix) -> Vec<String> {
    m.rows()
        .iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            format!("  [{}]", cells.join(", "))
        })
        .collect()
}

fn field_summary(r: &mut Report, k: &LocalField) {
    r.line(format!("field: Q_{}[u]/(E), E = {} (low to high), e = {}", k.p(), k.eisenstein_string(), k.e()));
    r.line(format!("  v(E'(pi)) = {}, e - 1 = {}", k.e_prime_valuation(), k.e() - 1));
    r.line(format!("  E(0) = {}", k.eisenstein()[0]));
    r.line(format!(
        "  precision: target O(p^{}), working O(p^{}), margin {}",
        k.target_precision(),
        k.working_precision(),
        k.margin()
    ));
    r.kv("p", k.p());
    r.kv("e", k.e());
    r.kv("E", k.eisenstein_string());
    r.kv("v_E_prime", k.e_prime_valuation());
    r.kv("E0", &k.eisenstein()[0]);
    r.kv("target_precision", k.target_precision());
    r.kv("working_precision", k.working_precision());
}

fn evidence_text(v: &NhtVerdict) -> String {
    match &v.evidence {
        NhtEvidence::Coefficients(vals) => {
            let parts: Vec<String> = vals.iter().enumerate().map(|(i, v)| format!("v(c_{i})={v}")).collect();
            parts.join(" ")
        }
        NhtEvidence::Residues {
            classes,
            unmatched,
            non_integral,
        } => {
            let mut parts: Vec<String> = classes.iter().map(|(i, m)| format!("i={i}^{m}")).collect();
            if let Some(f) = unmatched {
                parts.push(format!("unmatched({f})"));
            }
            if *non_integral > 0 {
                parts.push(format!("non_integral={non_integral}"));
            }
            parts.join(" ")
        }
    }
}

fn oracle_text(o: &OracleOutcome) -> String {
    match o {
        OracleOutcome::ConvergedAt(n) => format!("converged-at {n}"),
        OracleOutcome::BoundedBelowEvidence {
            step,
            det_valuation,
        } => format!("bounded-below at step {step}, v(det) = {det_valuation}"),
        OracleOutcome::Undetermined => "undetermined".into(),
    }
}

/// Verdict and oracle disagree in a way the theory rules out.
fn contradicts(v: Verdict, o: &OracleOutcome) -> bool {
    matches!(
        (v, o),
        (Verdict::NearlyHT, OracleOutcome::BoundedBelowEvidence { .. })
            | (Verdict::NotNearlyHT, OracleOutcome::ConvergedAt(_))
    )
}

fn verdict_section(r: &mut Report, c: &HtCrystal) -> Result<NhtVerdict, CliError> {
    let v = nearly_ht_check(c)?;
    r.line(format!("charpoly(A1) = {}", v.charpoly));
    match &v.polygon {
        Some(np) => {
            r.line(format!("newton polygon: {np}"));
            r.kv("newton_polygon", np);
        }
        None => r.line("newton polygon: not certifiable at tracked precision"),
    }
    r.line(format!("verdict: {}", v.verdict));
    r.line(format!("evidence: {}", evidence_text(&v)));
    r.line(format!(
        "weight condition (Z + p^-(e-1)/e m): {} [thresholds v(E'(pi)) = {}, e - 1 = {}]",
        v.weight_condition, v.e_prime_valuation, v.tame_threshold
    ));
    r.kv("verdict", v.verdict);
    r.kv("evidence", evidence_text(&v));
    r.kv("weight_condition", v.weight_condition);
    r.kv("threshold_v_E_prime", v.e_prime_valuation);
    r.kv("threshold_tame", v.tame_threshold);
    Ok(v)
}

pub fn run_check(cfg: &CrystalConfig, o: Overrides) -> Result<Report, CliError> {
    let s = session(cfg, o)?;
    let mut r = Report::new("check");
    field_summary(&mut r, &s.field);
    r.line(format!("A1 ({0}x{0}):", s.crystal.rank()));
    for l in matrix_lines(s.crystal.a1()) {
        r.line(l);
    }
    let v = verdict_section(&mut r, &s.crystal)?;
    let threshold = Q::from_integer(DEFAULT_THRESHOLD);
    let oracle = convergence_oracle(&s.crystal, threshold, DEFAULT_BUDGET);
    r.line(format!(
        "convergence oracle (T = {DEFAULT_THRESHOLD}, B = {DEFAULT_BUDGET}): {}",
        oracle_text(&oracle)
    ));
    r.kv("oracle", oracle_text(&oracle));
    if contradicts(v.verdict, &oracle) {
        r.line("CONSISTENCY FAILURE: verdict and oracle disagree");
        r.fail();
    }
    if let Some(seed) = cfg.seed {
        r.line(format!("case seed {seed}: running the selftest suites"));
        for o in run_suites(cfg, None)? {
            let status = match &o.result {
                Ok(()) => "pass".to_string(),
                Err(msg) => {
                    r.fail();
                    format!("FAIL: {msg}")
                }
            };
            r.line(format!("  {:<20} {status}", o.suite.to_string()));
            r.kv(format!("suite.{}", o.suite), if o.result.is_ok() { "pass" } else { "fail" });
        }
    }
    Ok(r)
}

pub fn run_stratify(cfg: &CrystalConfig, o: Overrides) -> Result<Report, CliError> {
    let s = session(cfg, o)?;
    let mut r = Report::new(format!("stratify --degree {}", s.degree));
    field_summary(&mut r, &s.field);
    let series = stratify(&s.crystal, s.degree);
    let closed = binomial_series(&s.crystal, s.degree)?;
    for (n, a) in series.coefficients().iter().enumerate() {
        r.line(format!("A_{n} (coefficient of X^[{n}]):"));
        for l in matrix_lines(a) {
            r.line(l);
        }
        r.kv(format!("A_{n}_min_valuation"), a.min_entry_valuation());
        r.kv(format!("A_{n}_precision"), a.precision_p().map_or("exact".into(), |n| n.to_string()));
    }
    let agree = series.eq_at_precision(&closed);
    r.line(format!("closed form (1 - E'(pi) X)^(-A1/E'(pi)) agrees: {agree}"));
    r.kv("degree", s.degree);
    r.kv("closed_form_agrees", agree);
    if !agree {
        r.fail();
    }
    Ok(r)
}

pub fn run_cocycle(cfg: &CrystalConfig, o: Overrides) -> Result<Report, CliError> {
    let s = session(cfg, o)?;
    let mut r = Report::new(format!("cocycle --degree {}", s.degree));
    field_summary(&mut r, &s.field);
    let series = stratify(&s.crystal, s.degree);
    match cocycle_check(&series)? {
        CocycleResult::Holds(d) => {
            r.line(format!("cocycle condition holds to total degree {d}"));
            r.kv("cocycle", format!("holds({d})"));
        }
        CocycleResult::FailsAtDegree {
            degree,
            index,
            difference,
        } => {
            r.line(format!(
                "cocycle condition fails at degree {degree}, coefficient X1^[{}] X2^[{}] differs by:",
                index[0], index[1]
            ));
            for l in matrix_lines(&difference) {
                r.line(l);
            }
            r.kv("cocycle", format!("fails({degree})"));
            r.kv("witness", format!("{},{}", index[0], index[1]));
            r.fail();
        }
    }
    Ok(r)
}

pub fn run_sen(cfg: &CrystalConfig, o: Overrides) -> Result<Report, CliError> {
    let s = session(cfg, o)?;
    let mut r = Report::new("sen");
    field_summary(&mut r, &s.field);
    let sen = sen_from_crystal(&s.crystal)?;
    r.line("Phi = -A1/E'(pi):");
    for l in matrix_lines(&sen.phi) {
        r.line(l);
    }
    r.line(format!("charpoly(Phi) = {}", sen.charpoly));
    match &sen.polygon {
        Some(np) => {
            let vals: Vec<String> = np
                .root_valuations()
                .iter()
                .map(|(v, m)| format!("{v}^{m}"))
                .collect();
            r.line(format!("weight valuations: {}", vals.join(" ")));
            r.kv("weight_valuations", vals.join(" "));
        }
        None => r.line("weight valuations: not certifiable at tracked precision"),
    }
    if let Some(classes) = &sen.classes {
        let parts: Vec<String> = classes
            .iter()
            .map(|c| match c.distance {
                Some(d) => format!("{}^{} (v(w - {}) >= {d})", c.residue, c.multiplicity, c.residue),
                None => format!("{}^{} (w = {} at tracked precision)", c.residue, c.multiplicity, c.residue),
            })
            .collect();
        r.line(format!("weight residues: {}", parts.join(", ")));
        let keys: Vec<String> = classes.iter().map(|c| format!("{}^{}", c.residue, c.multiplicity)).collect();
        r.kv("weight_residues", keys.join(" "));
    }
    verdict_section(&mut r, &s.crystal)?;
    let theta = theta_u_lambda_prime(&s.field, s.field.target_precision())?;
    r.line(format!("theta(u lambda') = {theta}"));
    r.line(format!("  v(theta) = {}", theta.valuation()));
    r.kv("theta", &theta);
    r.kv("theta_valuation", theta.valuation());
    let recovered = recover_sen(&tau_cocycle(&s.crystal, s.degree.max(1))?)?;
    let ok = recovered.eq_at_precision(&sen.phi);
    r.line(format!("log of (1 - z)^Phi recovers Phi: {ok}"));
    r.kv("sen_recovered", ok);
    if !ok {
        r.fail();
    }
    Ok(r)
}
