//! Acceptance criteria 1 to 8, one PASS/FAIL line each.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use htcrystal::crystal::{DEFAULT_BUDGET, DEFAULT_THRESHOLD};
use htcrystal::padic::vp_factorial;
use htcrystal::{
    binomial_series, cocycle_check, convergence_oracle, multiplicativity_defect, nearly_ht_check, pd_mul,
    recover_sen, sen_from_crystal, stratify, tau_cocycle, theta_u_lambda_prime, CocycleResult, HtCrystal,
    KElement, KMatrix, LocalField, NhtEvidence, OracleOutcome, PdSeries, PrecisionPolicy, Valuation, Verdict,
    Q,
};
use htcrystal_cli::selftest::{convergence_bound, generate_case, random_eisenstein, run_selftest, Stratum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: i64 = 12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn q(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

fn policy(max_degree: usize) -> PrecisionPolicy {
    PrecisionPolicy {
        target: N,
        max_degree,
    }
}

fn field(p: u32, eis: &[i64], max_degree: usize) -> LocalField {
    let c: Vec<BigRational> = eis.iter().map(|&x| q(x)).collect();
    LocalField::new(p, &c, policy(max_degree)).unwrap()
}

fn random_field(rng: &mut ChaCha8Rng, max_degree: usize) -> LocalField {
    let p = [2u32, 3, 5][rng.random_range(0..3)];
    let e = rng.random_range(1..=3usize);
    field(p, &random_eisenstein(rng, p, e), max_degree)
}

fn random_element(rng: &mut ChaCha8Rng, k: &LocalField, with_poles: bool) -> KElement {
    let p = k.p() as i64;
    let c: Vec<BigRational> = (0..k.e())
        .map(|_| {
            let num = rng.random_range(-9..=9i64);
            let den = if with_poles && rng.random_bool(0.3) { p } else { 1 };
            BigRational::new(num.into(), den.into())
        })
        .collect();
    k.element(&c)
}

fn random_matrix(rng: &mut ChaCha8Rng, k: &LocalField, d: usize, with_poles: bool) -> KMatrix {
    KMatrix::from_fn(k, d, |_, _| random_element(rng, k, with_poles))
}

fn random_integral_crystal(rng: &mut ChaCha8Rng, max_degree: usize) -> HtCrystal {
    let k = random_field(rng, max_degree);
    let d = rng.random_range(1..=3);
    HtCrystal::new(random_matrix(rng, &k, d, false))
}

fn modulus(p: u32, n: i64) -> BigInt {
    BigInt::from(p).pow(n as u32)
}

/// `x ≡ y (mod p^n)` for rationals that are p-integral.
fn congruent(x: &BigRational, y: &BigInt, p: u32, n: i64) -> bool {
    let m = modulus(p, n);
    let diff = x - q(y.clone());
    let (num, den) = (diff.numer().clone(), diff.denom().clone());
    if &den % BigInt::from(p) == BigInt::zero() {
        return false;
    }
    &num % &m == BigInt::zero()
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, budget: Duration) -> Result<(), String> {
    check(t.elapsed() < budget, || format!("took {:.2?}, budget {budget:?}", t.elapsed()))
}

/// Recursion and closed form agree to degree 8; scalar cases against integer products.
fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = i64::MAX;
    for case in 0..50 {
        let c = random_integral_crystal(&mut rng, 8);
        let k = c.field().clone();
        let direct = stratify(&c, 8);
        let closed = binomial_series(&c, 8).map_err(|e| format!("case {case}: {e}"))?;
        let floor = N - (k.e() as i64 * vp_factorial(8, k.p()) + 2);
        for n in 0..=8 {
            let diff = direct.coefficient(n) - closed.coefficient(n);
            check(diff.is_zero_at_precision(), || format!("case {case}: A_{n} differs"))?;
            let prec = diff.precision_p().unwrap_or(i64::MAX);
            check(prec >= floor, || format!("case {case}: A_{n} known to O(p^{prec}), need {floor}"))?;
            worst = worst.min(prec);
        }
    }
    for (p, a) in [(2u32, 3i64), (3, -4), (5, 7), (5, -2), (3, 1)] {
        let k = field(p, &[-(p as i64), 1], 8);
        let c = HtCrystal::new(KMatrix::scalar(&k, 1, &k.from_int(a)));
        let s = stratify(&c, 8);
        let mut product = BigInt::one();
        for n in 0..=8 {
            let got = &s.coefficient(n).get(0, 0).to_rationals()[0];
            check(congruent(got, &product, p, N), || format!("p={p} a={a}: A_{n} != {product}"))?;
            product *= BigInt::from(n as i64 + a);
        }
    }
    within(t, Duration::from_secs(5))?;
    Ok(format!("50 crystals + 5 scalar oracles, worst precision O(p^{worst}), {:.2?}", t.elapsed()))
}

fn unit(k: &LocalField, d: usize, i: usize, j: usize) -> KMatrix {
    let mut m = KMatrix::zero(k, d);
    m.set(i, j, k.one());
    m
}

/// Stratifications satisfy the cocycle condition; unit perturbations fail where predicted.
fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let crystals: Vec<HtCrystal> = (0..50).map(|_| random_integral_crystal(&mut rng, 6)).collect();
    for (case, c) in crystals.iter().enumerate() {
        match cocycle_check(&stratify(c, 6)).map_err(|e| e.to_string())? {
            CocycleResult::Holds(6) => {}
            other => return Err(format!("case {case}: {other:?}")),
        }
    }
    let mut late = 0;
    for (m, c) in crystals.iter().enumerate().take(20) {
        let k = c.field();
        let d = c.rank();
        let n = 1 + m % 5;
        let (i, j) = (rng.random_range(0..d), rng.random_range(0..d));
        let delta = k.one();
        let s = stratify(c, 6).perturbed(n, i, j, &delta);
        let e_ij = unit(k, d, i, j);
        let got = cocycle_check(&s).map_err(|e| e.to_string())?;
        let CocycleResult::FailsAtDegree {
            degree,
            index,
            difference,
        } = got
        else {
            return Err(format!("perturbation {m} (A_{n}[{i},{j}]) was not detected"));
        };
        check(!difference.is_zero_at_precision(), || format!("perturbation {m}: zero witness"))?;
        if n >= 2 {
            check(degree == n && index == [1, n - 1] && difference.eq_at_precision(&e_ij), || {
                format!("perturbation {m}: A_{n} gave degree {degree} index {index:?}")
            })?;
        } else {
            // -(E'(π) E + A1 E + E A1 + E^2) at X1^[1] X2^[1]
            let a1 = c.a1();
            let predicted = -&(&(&(&e_ij.scale(&k.e_prime()) + &(a1 * &e_ij)) + &(&e_ij * a1)) + &(&e_ij * &e_ij));
            if predicted.is_zero_at_precision() {
                late += 1;
                check(degree > 2, || format!("perturbation {m}: predicted survival of degree 2"))?;
            } else {
                check(degree == 2 && index == [1, 1] && difference.eq_at_precision(&predicted), || {
                    format!("perturbation {m}: A_1 gave degree {degree} index {index:?}")
                })?;
            }
        }
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!(
        "50 stratifications hold at D=6, 20 perturbations caught as predicted ({late} past degree 2), {:.2?}",
        t.elapsed()
    ))
}

fn curated(per_stratum: usize) -> Vec<(Stratum, HtCrystal)> {
    let mut out = vec![];
    for s in Stratum::ALL {
        for i in 0..per_stratum {
            let cfg = generate_case(2026, s, i).config;
            let k = cfg.field(None, None).unwrap();
            out.push((s, cfg.crystal(&k)));
        }
    }
    out
}

/// Verdict and convergence oracle agree on the curated triangular family.
fn criterion_3() -> Outcome {
    let t = Instant::now();
    let cases = curated(20);
    let mut steps = 0;
    for (i, (s, c)) in cases.iter().enumerate() {
        let v = nearly_ht_check(c).map_err(|e| format!("case {i}: {e}"))?;
        let o = convergence_oracle(c, Q::from_integer(DEFAULT_THRESHOLD), DEFAULT_BUDGET);
        let bound = convergence_bound(c.field().p(), c.rank());
        let ok = match s {
            Stratum::A => v.verdict == Verdict::NearlyHT && matches!(o, OracleOutcome::ConvergedAt(n) if n <= bound),
            _ => v.verdict == Verdict::NotNearlyHT && matches!(o, OracleOutcome::BoundedBelowEvidence { .. }),
        };
        check(ok, || format!("case {i} stratum {s}: {} and {o:?}", v.verdict))?;
        if let OracleOutcome::ConvergedAt(n) = o {
            steps = steps.max(n);
        }
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("{} curated cases agree, slowest convergence {steps} steps, {:.2?}", cases.len(), t.elapsed()))
}

/// Logarithm of (1 - z)^Φ recovers Φ = -A1/E'(π); bivariate multiplicativity holds.
fn criterion_4() -> Outcome {
    let t = Instant::now();
    let cases: Vec<HtCrystal> = curated(20).into_iter().filter(|(s, _)| *s == Stratum::A).map(|x| x.1).collect();
    for (i, c) in cases.iter().enumerate() {
        let k = c.field();
        let phi = c.a1().scale(&-k.e_prime().inv().map_err(|e| e.to_string())?);
        let u = tau_cocycle(c, 6).map_err(|e| format!("case {i}: {e}"))?;
        let got = recover_sen(&u).map_err(|e| format!("case {i}: {e}"))?;
        check(got.eq_at_precision(&phi), || format!("case {i}: recovered operator differs"))?;
        let defect = multiplicativity_defect(&phi, 6).map_err(|e| e.to_string())?;
        check(defect.is_none(), || format!("case {i}: multiplicativity fails at {:?}", defect.unwrap().0))?;
    }
    // (1 - z)^m for integer m: coefficients (-1)^n C(m, n).
    let k = field(5, &[-5, 1], 6);
    for m in -3..=3i64 {
        let c = HtCrystal::new(KMatrix::scalar(&k, 1, &k.from_int(-m)));
        let u = tau_cocycle(&c, 6).map_err(|e| e.to_string())?;
        let mut binom = BigRational::one();
        for n in 0..=6usize {
            let got = &u.coefficient(n).get(0, 0).to_rationals()[0];
            let want = if n % 2 == 0 { binom.clone() } else { -binom.clone() };
            check(congruent(got, &want.to_integer(), 5, N), || format!("(1-z)^{m}: z^{n} coefficient {got}"))?;
            binom = binom * q(m - n as i64) / q(n as i64 + 1);
        }
    }
    within(t, Duration::from_secs(5))?;
    Ok(format!("{} stratum-(a) crystals + 7 integer exponents, {:.2?}", cases.len(), t.elapsed()))
}

fn sorted_classes(ev: &NhtEvidence, k: i64, p: u32) -> Vec<(u32, usize)> {
    let mut out = match ev {
        NhtEvidence::Residues { classes, .. } => classes
            .iter()
            .map(|&(i, m)| ((i as i64 + k).rem_euclid(p as i64) as u32, m))
            .collect(),
        NhtEvidence::Coefficients(_) => vec![],
    };
    out.sort();
    out
}

/// Twisting by k keeps the verdict and shifts weights and residue classes by k.
fn criterion_5() -> Outcome {
    let t = Instant::now();
    let cases: Vec<HtCrystal> = curated(7).into_iter().map(|x| x.1).take(20).collect();
    for (i, c) in cases.iter().enumerate() {
        let k = c.field();
        let base = nearly_ht_check(c).map_err(|e| e.to_string())?;
        let phi = sen_from_crystal(c).map_err(|e| e.to_string())?;
        for s in -2..=2i64 {
            let tw = c.twist(s);
            let v = nearly_ht_check(&tw).map_err(|e| e.to_string())?;
            check(v.verdict == base.verdict, || format!("case {i}: twist {s} flips the verdict"))?;
            check(sorted_classes(&v.evidence, 0, k.p()) == sorted_classes(&base.evidence, s, k.p()), || {
                format!("case {i}: twist {s} residues {:?}", v.evidence)
            })?;
            let phi_t = sen_from_crystal(&tw).map_err(|e| e.to_string())?;
            check(phi_t.phi.eq_at_precision(&phi.phi.shift(&k.from_int(s))), || format!("case {i}: Phi shift {s}"))?;
            // χ_{Φ+s}(x + s) = χ_Φ(x)
            let back = phi_t.charpoly.taylor_shift(&k.from_int(s));
            let same = (0..=c.rank()).all(|j| back.coeff(j).eq_at_precision(&phi.charpoly.coeff(j)));
            check(same, || format!("case {i}: weights not shifted by {s}"))?;
        }
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("{} crystals x 5 twists, {:.2?}", cases.len(), t.elapsed()))
}

fn vp(n: i64, p: u32) -> i64 {
    let (mut n, p, mut v) = (n.abs(), p as i64, 0);
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// θ(uλ') for E = u - p, and its valuation for random Eisenstein E.
fn criterion_6() -> Outcome {
    let t = Instant::now();
    for p in [2u32, 3, 5] {
        let k = field(p, &[-(p as i64), 1], 8);
        let theta = theta_u_lambda_prime(&k, N).map_err(|e| e.to_string())?;
        let m = modulus(p, N);
        let mut want = -BigInt::one();
        let mut pn = p as i64;
        while pn - 1 < N {
            want = want * (BigInt::one() - BigInt::from(p).pow(pn as u32 - 1)) % &m;
            pn *= p as i64;
        }
        let got = &theta.to_rationals()[0];
        check(congruent(got, &want, p, N), || format!("p={p}: theta {got} vs {want}"))?;
        check(theta.precision_p() >= Some(N), || format!("p={p}: precision {:?}", theta.precision_p()))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for i in 0..20 {
        let p = [2u32, 3, 5][rng.random_range(0..3)];
        let e = rng.random_range(1..=3usize);
        let eis = random_eisenstein(&mut rng, p, e);
        let k = field(p, &eis, 8);
        // v_π(E'(π)) = min_j (e v_p(j c_j) + j - 1); the terms differ mod e.
        let v_ep = (1..=e)
            .filter(|&j| eis[j] != 0)
            .map(|j| e as i64 * vp(j as i64 * eis[j], p) + j as i64 - 1)
            .min()
            .unwrap();
        let want = Valuation::finite(1 + v_ep - e as i64);
        let theta = theta_u_lambda_prime(&k, N).map_err(|e| e.to_string())?;
        check(theta.valuation() == want, || format!("E {i} {eis:?} over Q_{p}: v = {}", theta.valuation()))?;
    }
    within(t, Duration::from_secs(2))?;
    Ok(format!("3 closed forms + 20 valuations, {:.2?}", t.elapsed()))
}

/// det(xI - A) coefficients from principal minors, for d <= 3.
fn cofactor_charpoly(a: &KMatrix) -> Vec<KElement> {
    let d = a.dim();
    let x = |i: usize, j: usize| a.get(i, j).clone();
    let k = a.field();
    let minor2 = |i: usize, j: usize| &(&x(i, i) * &x(j, j)) - &(&x(i, j) * &x(j, i));
    let trace = (0..d).fold(k.zero(), |s, i| &s + &x(i, i));
    match d {
        1 => vec![-&x(0, 0), k.one()],
        2 => vec![minor2(0, 1), -&trace, k.one()],
        _ => {
            let det = &(&(&x(0, 0) * &minor2(1, 2)) - &(&x(0, 1) * &(&(&x(1, 0) * &x(2, 2)) - &(&x(1, 2) * &x(2, 0)))))
                + &(&x(0, 2) * &(&(&x(1, 0) * &x(2, 1)) - &(&x(1, 1) * &x(2, 0))));
            let m2 = &(&minor2(0, 1) + &minor2(0, 2)) + &minor2(1, 2);
            vec![-&det, m2, -&trace, k.one()]
        }
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |f, i| f * BigInt::from(i))
}

/// Berkowitz vs cofactors, valuation multiplicativity, divided-power products.
fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for i in 0..100 {
        let k = random_field(&mut rng, 8);
        let d = rng.random_range(1..=3);
        let a = random_matrix(&mut rng, &k, d, true);
        let chi = a.charpoly();
        let oracle = cofactor_charpoly(&a);
        let same = oracle.iter().enumerate().all(|(j, c)| chi.coeff(j).eq_at_precision(c));
        check(same && chi.degree() == Some(d), || format!("matrix {i}: {chi} vs cofactors"))?;
    }
    for i in 0..100 {
        let k = random_field(&mut rng, 8);
        let (x, y) = (random_element(&mut rng, &k, true), random_element(&mut rng, &k, true));
        if x.is_exact_zero() || y.is_exact_zero() {
            continue;
        }
        let (vx, vy, vxy) = (x.valuation(), y.valuation(), (&x * &y).valuation());
        check(vxy == vx + vy, || format!("pair {i}: v(xy) = {vxy}, v(x) + v(y) = {}", vx + vy))?;
    }
    let k = field(3, &[-3, 1], 8);
    let id = KMatrix::identity(&k, 1);
    for a in 0..=8usize {
        for b in 0..=8 - a {
            let x = PdSeries::monomial(1, 8, [a, 0], id.clone());
            let y = PdSeries::monomial(1, 8, [b, 0], id.clone());
            let c = factorial(a + b) / (factorial(a) * factorial(b));
            let want = PdSeries::monomial(1, 8, [a + b, 0], id.mul_int(&c));
            let got = pd_mul(&x, &y).map_err(|e| e.to_string())?;
            check(got.eq_at_precision(&want), || format!("X^[{a}] X^[{b}] != {c} X^[{}]", a + b))?;
        }
    }
    Ok(format!("100 charpolys, 100 valuation pairs, 45 pd products, {:.2?}", t.elapsed()))
}

/// Full selftest within a minute, reproducible from the seed.
fn criterion_8() -> Outcome {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_htcrystal"))
        .args(["selftest", "--seed", "1", "--count", "50"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    check(out.status.success(), || format!("selftest failed:\n{text}"))?;
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:.2?}"))?;
    let again = run_selftest(1, 50, &Stratum::ALL).render_text();
    check(again == text, || "second run differs".into())?;
    Ok(format!("150 cases, all suites pass, {elapsed:.2?}, rerun identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("recursion = closed form", criterion_1),
        ("cocycle and perturbations", criterion_2),
        ("nearly-HT verdict = oracle", criterion_3),
        ("Sen operator recovery", criterion_4),
        ("twist invariance", criterion_5),
        ("theta(u lambda')", criterion_6),
        ("oracles for small cases", criterion_7),
        ("selftest --count 50", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
