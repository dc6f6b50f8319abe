//! Seeded generation of curated crystals and the battery of consistency suites.

use std::fmt;
use std::str::FromStr;

use htcrystal::crystal::{DEFAULT_BUDGET, DEFAULT_THRESHOLD};
use htcrystal::{
    binomial_series, cocycle_check, convergence_oracle, multiplicativity_defect, nearly_ht_check,
    recover_sen, sen_from_crystal, stratify, tau_cocycle, CocycleResult, HtCrystal, KMatrix,
    NhtEvidence, OracleOutcome, Verdict, Q,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{CrystalConfig, Scalar};
use crate::report::Report;

pub const CASE_PRECISION: i64 = 12;
pub const CASE_DEGREE: usize = 8;
pub const COCYCLE_DEGREE: usize = 6;
pub const SEN_DEGREE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stratum {
    /// Nearly-HT by construction.
    A,
    /// An eigenvalue of negative valuation.
    B,
    /// Integral eigenvalues outside every residue class, `e = 1`.
    C,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::A, Stratum::B, Stratum::C];

    pub fn expected(self) -> Verdict {
        match self {
            Stratum::A => Verdict::NearlyHT,
            Stratum::B | Stratum::C => Verdict::NotNearlyHT,
        }
    }

    fn tag(self) -> u64 {
        match self {
            Stratum::A => 1,
            Stratum::B => 2,
            Stratum::C => 3,
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stratum::A => "a",
            Stratum::B => "b",
            Stratum::C => "c",
        };
        f.pad(s)
    }
}

impl FromStr for Stratum {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "a" => Ok(Stratum::A),
            "b" => Ok(Stratum::B),
            "c" => Ok(Stratum::C),
            other => Err(format!("unknown stratum '{other}', expected a, b or c")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    RecursionBinomial,
    Cocycle,
    NearlyHtOracle,
    SenRecovery,
    Twist,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::RecursionBinomial,
        Suite::Cocycle,
        Suite::NearlyHtOracle,
        Suite::SenRecovery,
        Suite::Twist,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::RecursionBinomial => "recursion-binomial",
            Suite::Cocycle => "cocycle",
            Suite::NearlyHtOracle => "nearly-ht-oracle",
            Suite::SenRecovery => "sen-recovery",
            Suite::Twist => "twist",
        };
        f.pad(s)
    }
}

#[derive(Clone, Debug)]
pub struct Case {
    pub stratum: Stratum,
    pub index: usize,
    /// Carries the case seed, which fixes the perturbation choices.
    pub config: CrystalConfig,
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub result: Result<(), String>,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn case_seed(seed: u64, stratum: Stratum, index: usize) -> u64 {
    mix(mix(mix(seed) ^ stratum.tag()) ^ index as u64)
}

fn int(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// π-basis vector of rationals, padded to length `e`.
type Entry = Vec<BigRational>;

fn entry_add(a: &Entry, b: &Entry, t: i64) -> Entry {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(|| int(0));
            let y = b.get(i).cloned().unwrap_or_else(|| int(0));
            x + y * int(t)
        })
        .collect()
}

fn unit_from(rng: &mut ChaCha8Rng, p: u32, bound: i64) -> i64 {
    loop {
        let u = rng.random_range(1..=bound) * if rng.random_bool(0.5) { 1 } else { -1 };
        if u.rem_euclid(p as i64) != 0 {
            return u;
        }
    }
}

/// A random monic Eisenstein polynomial of degree `e`, low to high.
pub fn random_eisenstein(rng: &mut ChaCha8Rng, p: u32, e: usize) -> Vec<i64> {
    let p = p as i64;
    let mut c = vec![p * unit_from(rng, p as u32, 4)];
    for _ in 1..e {
        c.push(p * rng.random_range(-1..=1));
    }
    c.push(1);
    c
}

/// π-basis coefficients of `E'(π)`.
fn e_prime(eis: &[i64]) -> Entry {
    (1..eis.len()).map(|j| int(j as i64 * eis[j])).collect()
}

fn pad(mut x: Entry, e: usize) -> Entry {
    x.resize(e, int(0));
    x
}

fn small_integral(rng: &mut ChaCha8Rng, e: usize) -> Entry {
    pad(vec![int(rng.random_range(-2..=2))], e)
}

/// `S A S^{-1}` for `S = I + t E_ab`: row a += t row b, then column b -= t column a.
fn shear(m: &mut [Vec<Entry>], a: usize, b: usize, t: i64) {
    let source = m[b].clone();
    for (x, y) in m[a].iter_mut().zip(&source) {
        *x = entry_add(x, y, t);
    }
    for row in m.iter_mut() {
        row[b] = entry_add(&row[b], &row[a], -t);
    }
}

pub fn generate_case(seed: u64, stratum: Stratum, index: usize) -> Case {
    let cs = case_seed(seed, stratum, index);
    let mut rng = ChaCha8Rng::seed_from_u64(cs);
    let p = [2u32, 3, 5][rng.random_range(0..3)];
    let e = if stratum == Stratum::C { 1 } else { rng.random_range(1..=3usize) };
    let d = if stratum == Stratum::C { rng.random_range(2..=3usize) } else { rng.random_range(1..=3usize) };
    let eis = random_eisenstein(&mut rng, p, e);
    let ep = e_prime(&eis);
    let pp = p as i64;
    let zero = || pad(vec![], e);
    let mut m: Vec<Vec<Entry>> = vec![vec![zero(); d]; d];
    for (i, row) in m.iter_mut().enumerate() {
        for x in &mut row[i + 1..] {
            *x = small_integral(&mut rng, e);
        }
    }
    match stratum {
        Stratum::A => {
            for (k, row) in m.iter_mut().enumerate() {
                let i = rng.random_range(-3..=3i64);
                let mut small = vec![int(pp * rng.random_range(-1..=1))];
                for _ in 1..e {
                    small.push(int(rng.random_range(-1..=1)));
                }
                row[k] = entry_add(&pad(small, e), &ep, -i);
            }
        }
        Stratum::B => {
            for (k, row) in m.iter_mut().enumerate() {
                let u = unit_from(&mut rng, p, 4);
                let depth = rng.random_range(1..=2u32);
                let pole = BigRational::new(u.into(), BigInt::from(pp).pow(depth));
                row[k] = entry_add(&pad(vec![pole], e), &small_integral(&mut rng, e), 1);
            }
        }
        Stratum::C => {
            // x^2 + a1 x + a0 irreducible mod p
            let (a1, a0) = match p {
                2 => (1, 1),
                3 => (0, 1),
                _ => (0, 2),
            };
            let mut jitter = || int(pp * rng.random_range(-1..=1));
            m[0][0] = vec![jitter()];
            m[0][1] = vec![int(-a0) + jitter()];
            m[1][0] = vec![int(1) + jitter()];
            m[1][1] = vec![int(-a1) + jitter()];
            if d == 3 {
                let u = unit_from(&mut rng, p, 4);
                m[2][2] = vec![BigRational::new(u.into(), BigInt::from(pp))];
            }
        }
    }
    for _ in 0..rng.random_range(0..=3) {
        if d < 2 {
            break;
        }
        let a = rng.random_range(0..d);
        let b = (a + rng.random_range(1..d)) % d;
        let t = rng.random_range(1..=2) * if rng.random_bool(0.5) { 1 } else { -1 };
        shear(&mut m, a, b, t);
    }
    let a1 = m
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| x.into_iter().map(Scalar::Exact).collect())
                .collect()
        })
        .collect();
    Case {
        stratum,
        index,
        config: CrystalConfig {
            p,
            eisenstein: eis.into_iter().map(int).collect(),
            precision: CASE_PRECISION,
            degree: CASE_DEGREE,
            a1,
            seed: Some(cs),
            count: None,
        },
    }
}

/// Largest step at which a nearly-HT crystal must have converged.
pub fn convergence_bound(p: u32, rank: usize) -> usize {
    p as usize * (rank * DEFAULT_THRESHOLD as usize + rank)
}

fn unit_matrix(c: &HtCrystal, i: usize, j: usize) -> KMatrix {
    let field = c.field();
    let mut m = KMatrix::zero(field, c.rank());
    m.set(i, j, field.one());
    m
}

fn recursion_binomial(c: &HtCrystal, degree: usize) -> Result<(), String> {
    let direct = stratify(c, degree);
    let closed = binomial_series(c, degree).map_err(|e| e.to_string())?;
    if direct.eq_at_precision(&closed) {
        Ok(())
    } else {
        Err(format!("recursion and closed form differ below degree {degree}"))
    }
}

/// Holds at `COCYCLE_DEGREE`; perturbing `A_n` by `E_ij` with `n >= 2` fails at
/// degree `n` with witness `X1^[1] X2^[n-1]` and difference `E_ij`.
fn cocycle_suite(c: &HtCrystal, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let s = stratify(c, COCYCLE_DEGREE);
    match cocycle_check(&s).map_err(|e| e.to_string())? {
        CocycleResult::Holds(_) => {}
        CocycleResult::FailsAtDegree { degree, index, .. } => {
            return Err(format!("unperturbed stratification fails at degree {degree}, index {index:?}"));
        }
    }
    let n = rng.random_range(2..=COCYCLE_DEGREE - 1);
    let (i, j) = (rng.random_range(0..c.rank()), rng.random_range(0..c.rank()));
    let bumped = s.perturbed(n, i, j, &c.field().one());
    match cocycle_check(&bumped).map_err(|e| e.to_string())? {
        CocycleResult::FailsAtDegree {
            degree,
            index,
            difference,
        } if degree == n && index == [1, n - 1] && difference.eq_at_precision(&unit_matrix(c, i, j)) => Ok(()),
        other => Err(format!("perturbing A_{n} at ({i}, {j}) gave {other:?}")),
    }
}

fn oracle_suite(c: &HtCrystal, expected: Option<Verdict>) -> Result<(), String> {
    let v = nearly_ht_check(c).map_err(|e| e.to_string())?;
    if let Some(x) = expected {
        if v.verdict != x {
            return Err(format!("verdict {} but the stratum is {x}", v.verdict));
        }
    }
    let oracle = convergence_oracle(c, Q::from_integer(DEFAULT_THRESHOLD), DEFAULT_BUDGET);
    let bound = convergence_bound(c.field().p(), c.rank());
    match (v.verdict, &oracle) {
        (Verdict::NearlyHT, OracleOutcome::ConvergedAt(n)) if *n <= bound => Ok(()),
        (Verdict::NotNearlyHT, OracleOutcome::BoundedBelowEvidence { .. }) => Ok(()),
        _ => Err(format!("verdict {} but oracle {oracle:?} (bound {bound})", v.verdict)),
    }
}

fn sen_suite(c: &HtCrystal) -> Result<(), String> {
    let phi = sen_from_crystal(c).map_err(|e| e.to_string())?.phi;
    let u = tau_cocycle(c, SEN_DEGREE).map_err(|e| e.to_string())?;
    let recovered = recover_sen(&u).map_err(|e| e.to_string())?;
    if !recovered.eq_at_precision(&phi) {
        return Err("log of (1 - z)^Phi does not recover Phi".into());
    }
    match multiplicativity_defect(&phi, SEN_DEGREE).map_err(|e| e.to_string())? {
        None => Ok(()),
        Some((k, _)) => Err(format!("(1 - z1)^Phi (1 - z2)^Phi differs at z1^{} z2^{}", k[0], k[1])),
    }
}

fn shifted_classes(ev: &NhtEvidence, k: i64, p: u32) -> Option<Vec<(u32, usize)>> {
    match ev {
        NhtEvidence::Residues { classes, .. } => {
            let mut out: Vec<(u32, usize)> = classes
                .iter()
                .map(|&(i, m)| ((i as i64 + k).rem_euclid(p as i64) as u32, m))
                .collect();
            out.sort();
            Some(out)
        }
        NhtEvidence::Coefficients(_) => None,
    }
}

fn twist_suite(c: &HtCrystal) -> Result<(), String> {
    let err = |e: htcrystal::Error| e.to_string();
    let base = nearly_ht_check(c).map_err(err)?;
    let phi = sen_from_crystal(c).map_err(err)?.phi;
    let p = c.field().p();
    for k in -2..=2i64 {
        let t = c.twist(k);
        let v = nearly_ht_check(&t).map_err(err)?;
        if v.verdict != base.verdict {
            return Err(format!("twist by {k} changed the verdict to {}", v.verdict));
        }
        if shifted_classes(&base.evidence, k, p) != shifted_classes(&v.evidence, 0, p) {
            return Err(format!("twist by {k} did not shift the residue classes by {k}"));
        }
        let phi_t = sen_from_crystal(&t).map_err(err)?.phi;
        if !phi_t.eq_at_precision(&phi.shift(&c.field().from_int(k))) {
            return Err(format!("twist by {k} did not shift Phi by {k}"));
        }
    }
    Ok(())
}

/// Runs every suite on the crystal of `config`; the stratum verdict is checked
/// when `expected` is given.
pub fn run_suites(config: &CrystalConfig, expected: Option<Verdict>) -> Result<Vec<SuiteOutcome>, htcrystal::Error> {
    let field = config.field(None, None)?;
    let c = config.crystal(&field);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0));
    let results = [
        (Suite::RecursionBinomial, recursion_binomial(&c, config.degree)),
        (Suite::Cocycle, cocycle_suite(&c, &mut rng)),
        (Suite::NearlyHtOracle, oracle_suite(&c, expected)),
        (Suite::SenRecovery, sen_suite(&c)),
        (Suite::Twist, twist_suite(&c)),
    ];
    Ok(results
        .into_iter()
        .map(|(suite, result)| SuiteOutcome { suite, result })
        .collect())
}

struct CaseRun {
    case: Case,
    outcomes: Vec<SuiteOutcome>,
}

pub fn run_selftest(seed: u64, count: usize, strata: &[Stratum]) -> Report {
    let jobs: Vec<(Stratum, usize)> = strata
        .iter()
        .flat_map(|&s| (0..count).map(move |i| (s, i)))
        .collect();
    let cases: Vec<Case> = jobs.par_iter().map(|&(s, i)| generate_case(seed, s, i)).collect();
    let names: Vec<String> = strata.iter().map(Stratum::to_string).collect();
    let mut r = Report::new(format!("selftest --seed {seed} --count {count} --strata {}", names.join(",")));
    r.kv("seed", seed);
    r.kv("count", count);
    r.kv("strata", names.join(","));
    r.line(format!("{} cases ({} per stratum, strata {})", cases.len(), count, names.join(",")));
    run_cases(r, cases)
}

/// Runs the suites on each case, in parallel, and appends counts and the
/// first counterexample to `r`.
pub fn run_cases(mut r: Report, cases: Vec<Case>) -> Report {
    let runs: Vec<CaseRun> = cases
        .into_par_iter()
        .map(|case| {
            let outcomes = match run_suites(&case.config, Some(case.stratum.expected())) {
                Ok(o) => o,
                Err(e) => Suite::ALL
                    .iter()
                    .map(|&suite| SuiteOutcome {
                        suite,
                        result: Err(e.to_string()),
                    })
                    .collect(),
            };
            CaseRun { case, outcomes }
        })
        .collect();
    r.kv("cases", runs.len());
    let mut failures = 0;
    for suite in Suite::ALL {
        let results = runs.iter().flat_map(|run| run.outcomes.iter().filter(move |o| o.suite == suite));
        let (pass, fail) = results.fold((0, 0), |(p, f), o| if o.result.is_ok() { (p + 1, f) } else { (p, f + 1) });
        failures += fail;
        r.line(format!("{suite:<20} pass {pass:>4}  fail {fail:>4}"));
        r.kv(format!("{suite}.pass"), pass);
        r.kv(format!("{suite}.fail"), fail);
    }
    r.kv("failures", failures);
    let first = runs.iter().find_map(|run| {
        run.outcomes
            .iter()
            .find_map(|o| o.result.as_ref().err().map(|msg| (run, o.suite, msg)))
    });
    if let Some((run, suite, msg)) = first {
        r.fail();
        r.line(String::new());
        r.line(format!(
            "first counterexample: stratum {}, case {}, suite {suite}: {msg}",
            run.case.stratum, run.case.index
        ));
        r.line("# reproduce with: htcrystal check <file>");
        for l in run.case.config.to_text().lines() {
            r.line(l);
        }
        r.kv("counterexample.stratum", run.case.stratum);
        r.kv("counterexample.case", run.case.index);
        r.kv("counterexample.suite", suite);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn generation_is_deterministic_and_round_trips() {
        for s in Stratum::ALL {
            let a = generate_case(7, s, 3);
            let b = generate_case(7, s, 3);
            assert_eq!(a.config, b.config);
            assert_eq!(parse_config(&a.config.to_text()).unwrap(), a.config);
        }
        assert_ne!(generate_case(7, Stratum::A, 0).config, generate_case(8, Stratum::A, 0).config);
    }

    #[test]
    fn stratum_c_is_unramified() {
        for i in 0..10 {
            let c = generate_case(1, Stratum::C, i).config;
            assert_eq!(c.eisenstein.len(), 2);
            assert!(c.rank() >= 2);
        }
    }

    #[test]
    fn one_case_of_stratum_a_passes() {
        let r = run_selftest(1, 1, &[Stratum::A]);
        assert!(r.passed, "{}", r.render_text());
    }

    #[test]
    fn stratum_b_case_is_bounded_below() {
        let case = generate_case(2, Stratum::B, 0);
        let out = run_suites(&case.config, Some(Verdict::NotNearlyHT)).unwrap();
        let oracle = out.iter().find(|o| o.suite == Suite::NearlyHtOracle).unwrap();
        assert!(oracle.result.is_ok(), "{:?}", oracle.result);
    }

    #[test]
    fn shear_conjugates() {
        let one = || vec![int(1)];
        let mut m = vec![vec![one(), vec![int(0)]], vec![vec![int(0)], vec![int(2)]]];
        shear(&mut m, 0, 1, 1);
        // [[1,0],[0,2]] -> S A S^-1 with S = [[1,1],[0,1]]: [[1,1],[0,2]]
        assert_eq!(m[0][0], one());
        assert_eq!(m[0][1], vec![int(1)]);
        assert_eq!(m[1][0], vec![int(0)]);
        assert_eq!(m[1][1], vec![int(2)]);
    }
}
