//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scone::ag::{ag_nonneg_decide, AgDecision, AgFunction, DEFAULT_TOL};
use scone::circuits::{classify_extreme, Circuit, CircuitFunction, RayCandidate};
use scone::decompose::{decompose_to_circuits, simplex_fast_path, sonc_lower_bound, verify_certificate, FastPath};
use scone::dual::{dual_lp_characterization, dual_membership, DualMode, LpVariant};
use scone::member::{restrict_support, scone_membership, Certificate, Membership, MembershipConfig};
use scone::num::{rat, rat_to_f64};
use scone::oracle::{grid_min, GridSpec};
use scone::univariate::{approx_poly, approx_step, putinar_polynomial, putinar_verify, UniPoly};
use scone::{pair, DualVector, Exponent, Num, Parity, Rat, SFunction, Support};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e1(x: i64) -> Exponent {
    Exponent::from_ints(&[x])
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn certified(f: &SFunction) -> Result<scone::member::AgDecomposition, String> {
    match scone_membership(f, &MembershipConfig::default()).map_err(err)? {
        Membership::Certified(d) => Ok(d),
        m => Err(format!("expected a certificate, got {m:?}")),
    }
}

// ---------------------------------------------------------------- criterion 1

fn putinar_reproduction() -> Outcome {
    let start = Instant::now();
    let rep = putinar_verify(4).map_err(err)?;
    let elapsed = start.elapsed();
    // independent pairing with v = (25/18, 5/9, 1/4, 1/8, ...)
    let mut v = vec![rat(25, 18), rat(5, 9)];
    for k in 2..=6u32 {
        v.push(Rat::new(1.into(), num_bigint::BigInt::from(2u32.pow(k))));
    }
    let f = [rat(127, 2000), rat(-1, 2), rat(3, 2), rat(-2, 1), rat(1, 1)];
    let p: Rat = f.iter().zip(&v).map(|(a, b)| a * b).sum();
    let p0 = &p - &v[0] * rat(1, 1000);
    ensure(p == rat(-1, 480), || format!("oracle pairing {p}"))?;
    ensure(p0 == rat(-1, 288), || format!("oracle unshifted pairing {p0}"))?;
    ensure(rep.v == v, || "functional differs from the closed form".into())?;
    ensure(rep.pairing == p, || format!("pairing {}", rep.pairing))?;
    ensure(rep.pairing_unshifted == p0, || format!("unshifted pairing {}", rep.pairing_unshifted))?;
    ensure(rep.checks.len() == 4 && rep.checks.iter().all(|c| c.1), || format!("{:?}", rep.checks))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("pairing -1/480, unshifted -1/288, 4/4 memberships, {elapsed:?}"))
}

// ---------------------------------------------------------------- criterion 2

fn dual_strictness() -> Outcome {
    // odd reading: A = {0, 2}, B = {1}
    let f = SFunction::univariate(&[(0, Num::int(1)), (2, Num::int(1))], &[(1, Num::int(-2))]).map_err(err)?;
    let dec = certified(&f)?;
    let verdict = verify_certificate(&f, &Certificate::Ag(dec.clone())).map_err(err)?;
    ensure(verdict.valid, || verdict.reason.clone())?;
    ensure(dec.parts.iter().all(|p| p.ag.is_exact()), || "certificate is not exact".into())?;
    let u = DualVector::new(f.support.clone(), vec![Num::int(1), Num::int(1)], vec![Num::int(-2)]).map_err(err)?;
    // (1 + x)² is in the cone but pairs negatively with u
    let g = SFunction::univariate(&[(0, Num::int(1)), (2, Num::int(1))], &[(1, Num::int(2))]).map_err(err)?;
    certified(&g)?;
    ensure(pair(&u, &g).map_err(err)? == Num::int(-2), || "oracle pairing".into())?;
    // u is itself the coefficient vector of f, which is a member
    ensure(pair(&u, &f).map_err(err)? == Num::int(6), || "pairing with f".into())?;
    for mode in [DualMode::AllLambda, DualMode::Circuits, DualMode::Reduced] {
        let r = dual_membership(&u, &f.support, mode).map_err(err)?;
        ensure(!r.member && r.exact, || format!("{mode:?}: {r:?}"))?;
    }
    // even reading: A = {0, 1, 2}
    let fe = SFunction::univariate(&[(0, Num::int(1)), (1, Num::int(-2)), (2, Num::int(1))], &[]).map_err(err)?;
    certified(&fe)?;
    let ue = DualVector::new(fe.support.clone(), vec![Num::int(1), Num::int(-2), Num::int(1)], vec![]).map_err(err)?;
    let r = dual_membership(&ue, &fe.support, DualMode::AllLambda).map_err(err)?;
    ensure(!r.member && r.exact, || format!("even reading: {r:?}"))?;
    Ok("(x-1)² and (|x|-1)² certified exactly; (1,-2,1) rejected exactly in every mode".into())
}

// ---------------------------------------------------------------- criterion 3

fn circuit_regression() -> Outcome {
    let theta = 4.0 * 3f64.powf(-0.75);
    let f = SFunction::univariate(&[(0, Num::int(1)), (2, Num::int(0)), (4, Num::int(1))], &[(1, Num::Float(-theta))])
        .map_err(err)?;
    let dec = certified(&f)?;
    let cd = decompose_to_circuits(&dec, true).map_err(err)?;
    ensure(cd.parts.len() == 2, || format!("{} parts", cd.parts.len()))?;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let s3 = 3f64.sqrt();
    let odd = cd.parts.iter().find(|p| p.circuit.parity == Parity::Odd).ok_or("no odd summand")?;
    let even = cd.parts.iter().find(|p| p.circuit.parity == Parity::Even).ok_or("no even summand")?;
    ensure(odd.circuit.outer == vec![e1(0), e1(2)] && odd.circuit.inner == e1(1), || "odd circuit".into())?;
    ensure(
        close(odd.c[0].to_f64(), 2.0 / 3.0) && close(odd.d.to_f64().abs(), theta) && close(odd.c[1].to_f64(), 2.0 / 3.0 * s3),
        || format!("odd summand {:?} {:?}", odd.c, odd.d),
    )?;
    ensure(even.circuit.outer == vec![e1(0), e1(4)] && even.circuit.inner == e1(2), || "even circuit".into())?;
    ensure(
        close(even.c[0].to_f64(), 1.0 / 3.0) && close(-even.d.to_f64(), 2.0 / 3.0 * s3) && close(even.c[1].to_f64(), 1.0),
        || format!("even summand {:?} {:?}", even.c, even.d),
    )?;
    // each summand sits on its circuit-number boundary
    ensure(close(2.0 * (odd.c[0].to_f64() * odd.c[1].to_f64()).sqrt(), theta), || "odd Θ".into())?;
    ensure(close(2.0 * (even.c[0].to_f64() * even.c[1].to_f64()).sqrt(), 2.0 / 3.0 * s3), || "even Θ".into())?;
    let v = verify_certificate(&f, &Certificate::Circuits(cd)).map_err(err)?;
    ensure(v.valid, || v.reason.clone())?;
    Ok("two reduced summands match to 1e-9; certificate verifies".into())
}

// ---------------------------------------------------------------- criterion 4

fn random_ag(rng: &mut ChaCha8Rng) -> AgFunction {
    loop {
        let n = rng.gen_range(1..=2);
        let k = rng.gen_range(2..=n + 2);
        let mut outer: Vec<Exponent> = vec![];
        while outer.len() < k {
            let e = Exponent::from_ints(&(0..n).map(|_| 2 * rng.gen_range(0..=4)).collect::<Vec<_>>());
            if !outer.contains(&e) {
                outer.push(e);
            }
        }
        let parity = if rng.gen_bool(0.5) { Parity::Even } else { Parity::Odd };
        let mut b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=8)).collect();
        if parity == Parity::Odd && b.iter().all(|x| x % 2 == 0) {
            b[0] = 2 * rng.gen_range(0..4) + 1;
        }
        let beta = Exponent::from_ints(&b);
        if outer.contains(&beta) {
            continue;
        }
        let c = (0..k).map(|_| Num::Float(rng.gen_range(0.05..3.0))).collect();
        let d = Num::Float(rng.gen_range(-3.0..3.0));
        return AgFunction::new(outer, c, beta, d, parity).unwrap();
    }
}

fn ag_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut compared, mut skipped) = (0, 0);
    let mut i = 0;
    while compared < 200 && i < 400 {
        i += 1;
        let ag = random_ag(&mut rng);
        let f = ag.to_sfunction().map_err(err)?;
        let spec = if ag.n == 1 { GridSpec::log(1, 1e-5, 1e5, 201, 3) } else { GridSpec::log(2, 1e-4, 1e4, 61, 3) };
        let (gmin, _) = grid_min(&f, &spec).map_err(err)?;
        if gmin.abs() <= 1e-4 * ag.scale() {
            skipped += 1;
            continue;
        }
        compared += 1;
        let dec = ag_nonneg_decide(&ag, DEFAULT_TOL).map_err(err)?;
        let agree = match dec {
            AgDecision::Certified(_) => gmin > 0.0,
            AgDecision::Refuted(_) => gmin < 0.0,
            AgDecision::Indeterminate { .. } => false,
        };
        ensure(agree, || format!("instance {i}: {ag:?} decided {dec:?}, grid minimum {gmin}"))?;
    }
    let elapsed = start.elapsed();
    ensure(compared >= 200, || format!("only {compared} decisive instances"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{compared} agree, {skipped} near zero skipped, {elapsed:?}"))
}

// ---------------------------------------------------------------- criterion 5

struct RandomCircuit {
    outer: Vec<Exponent>,
    beta: Exponent,
    lambda: Vec<f64>,
    parity: Parity,
    c: Vec<Num>,
    /// `Θ` as computed here, exact when `c` was chosen as `λ·t`.
    theta: f64,
    theta_exact: Option<Rat>,
}

/// A circuit on the standard simplex `{0, 2a e₁, 2b e₂}` with weights known in closed form.
fn random_circuit(rng: &mut ChaCha8Rng) -> RandomCircuit {
    let parity = if rng.gen_bool(0.5) { Parity::Even } else { Parity::Odd };
    let (outer, beta, lam): (Vec<Exponent>, Exponent, Vec<Rat>) = if rng.gen_bool(0.5) {
        let k = rng.gen_range(1..=4);
        let b = match parity {
            Parity::Odd => rat(2 * rng.gen_range(0..k) + 1, 1),
            Parity::Even => rat(rng.gen_range(1..6 * k), 3),
        };
        let l = &b / rat(2 * k, 1);
        (vec![e1(0), e1(2 * k)], Exponent(vec![b]), vec![rat(1, 1) - &l, l])
    } else {
        loop {
            let (a, b) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
            let (p, q) = (rng.gen_range(1..2 * a), rng.gen_range(1..2 * b));
            if parity == Parity::Odd && p % 2 == 0 && q % 2 == 0 {
                continue;
            }
            let (l1, l2) = (rat(p, 2 * a), rat(q, 2 * b));
            let l0 = rat(1, 1) - &l1 - &l2;
            if l0 <= Rat::zero() {
                continue;
            }
            let outer = vec![Exponent::from_ints(&[0, 0]), Exponent::from_ints(&[2 * a, 0]), Exponent::from_ints(&[0, 2 * b])];
            break (outer, Exponent::from_ints(&[p, q]), vec![l0, l1, l2]);
        }
    };
    // keep the library's sorted outer order
    let mut order: Vec<usize> = (0..outer.len()).collect();
    order.sort_by(|&i, &j| outer[i].cmp(&outer[j]));
    let outer: Vec<Exponent> = order.iter().map(|&i| outer[i].clone()).collect();
    let lam: Vec<Rat> = order.iter().map(|&i| lam[i].clone()).collect();
    let lambda: Vec<f64> = lam.iter().map(rat_to_f64).collect();
    if rng.gen_bool(0.5) {
        let t = rat(rng.gen_range(1..60), rng.gen_range(1..20));
        let c = lam.iter().map(|l| Num::Exact(l * &t)).collect();
        RandomCircuit { outer, beta, lambda, parity, c, theta: rat_to_f64(&t), theta_exact: Some(t) }
    } else {
        let cf: Vec<f64> = lambda.iter().map(|_| rng.gen_range(0.1..3.0)).collect();
        let theta = cf.iter().zip(&lambda).map(|(c, l)| (c / l).powf(*l)).product();
        RandomCircuit { outer, beta, lambda, parity, c: cf.into_iter().map(Num::Float).collect(), theta, theta_exact: None }
    }
}

fn boundary_d(rc: &RandomCircuit, sign: f64) -> Num {
    match &rc.theta_exact {
        Some(t) => Num::Exact(if sign < 0.0 { -t.clone() } else { t.clone() }),
        None => Num::Float(sign * rc.theta),
    }
}

fn circuit_number_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 3];
    for i in 0..100 {
        let rc = random_circuit(&mut rng);
        let sign = if rc.parity == Parity::Even || rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let kind = i % 3;
        let d = match kind {
            0 => boundary_d(&rc, sign),
            1 => Num::Float(sign * rc.theta * rng.gen_range(0.0..0.999)),
            _ => Num::Float(sign * rc.theta * rng.gen_range(1.001..2.0)),
        };
        let ag = AgFunction::new(rc.outer.clone(), rc.c.clone(), rc.beta.clone(), d.clone(), rc.parity).map_err(err)?;
        let dec = ag_nonneg_decide(&ag, DEFAULT_TOL).map_err(err)?;
        let rel = (d.to_f64().abs() - rc.theta) / rc.theta;
        let ok = match dec {
            AgDecision::Certified(_) => rel <= 1e-9,
            AgDecision::Refuted(_) => rel > 1e-9,
            AgDecision::Indeterminate { .. } => rel.abs() <= 1e-9,
        };
        ensure(ok, || format!("circuit {i}: {ag:?} rel {rel:e} decided {dec:?}"))?;
        if kind == 0 {
            ensure(!matches!(dec, AgDecision::Refuted(_)), || format!("boundary circuit {i} refuted"))?;
        }
        counts[kind] += 1;
        // the library circuit number matches the closed form too
        let circ = Circuit::new(rc.outer.clone(), rc.beta.clone(), rc.parity, &rc.outer).map_err(err)?;
        let cf = CircuitFunction::new(circ, rc.c.clone(), d).map_err(err)?;
        ensure((cf.theta() - rc.theta).abs() <= 1e-9 * rc.theta, || format!("Θ {} vs {}", cf.theta(), rc.theta))?;
        ensure(rc.lambda.iter().sum::<f64>() > 0.999, || "weights".into())?;
    }
    Ok(format!("{} boundary, {} inside, {} outside; all agree", counts[0], counts[1], counts[2]))
}

// ---------------------------------------------------------------- criterion 6

fn random_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rat {
    rat(rng.gen_range(lo..=hi), rng.gen_range(1..=8))
}

fn random_dual(rng: &mut ChaCha8Rng) -> DualVector {
    let n = rng.gen_range(1..=3);
    let k = rng.gen_range(2..=8).min(5usize.pow(n as u32));
    let mut even: Vec<Exponent> = vec![];
    while even.len() < k {
        let e = Exponent::from_ints(&(0..n).map(|_| rng.gen_range(0..=4)).collect::<Vec<_>>());
        if !even.contains(&e) {
            even.push(e);
        }
    }
    let mut odd: Vec<Exponent> = vec![];
    for _ in 0..rng.gen_range(0..=3) {
        let mut b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=4)).collect();
        if b.iter().all(|x| x % 2 == 0) {
            b[rng.gen_range(0..n)] = 2 * rng.gen_range(0..2) + 1;
        }
        let e = Exponent::from_ints(&b);
        if !odd.contains(&e) {
            odd.push(e);
        }
    }
    let support = Support::new(n, even, odd).unwrap();
    let kind = rng.gen_range(0..3);
    let (mut v, mut w): (Vec<Rat>, Vec<Rat>) = if kind < 2 {
        // exact point evaluation at a rational point without zero coordinates
        let x: Vec<Rat> = (0..n)
            .map(|_| {
                let r = rat(rng.gen_range(1..=4), rng.gen_range(1..=4));
                if rng.gen_bool(0.5) {
                    -r
                } else {
                    r
                }
            })
            .collect();
        let mono = |e: &Exponent, abs: bool| -> Rat {
            let mut p = rat(1, 1);
            for (xj, ej) in x.iter().zip(&e.0) {
                let base = if abs { num_traits::Signed::abs(xj) } else { xj.clone() };
                p *= num_traits::pow(base, ej.to_integer().try_into().unwrap());
            }
            p
        };
        (support.even.iter().map(|e| mono(e, true)).collect(), support.odd.iter().map(|e| mono(e, false)).collect())
    } else {
        (
            support.even.iter().map(|_| random_rational(rng, 1, 24)).collect(),
            support.odd.iter().map(|_| random_rational(rng, -24, 24)).collect(),
        )
    };
    if kind == 1 {
        // knock one coordinate off the point
        let total = v.len() + w.len();
        let i = rng.gen_range(0..total);
        if i < v.len() {
            v[i] *= if rng.gen_bool(0.5) { rat(1, 2) } else { rat(2, 1) };
        } else {
            w[i - v.len()] *= [rat(1, 2), rat(2, 1), rat(-1, 1)][rng.gen_range(0..3)].clone();
        }
    }
    DualVector::new(support, v.into_iter().map(Num::Exact).collect(), w.into_iter().map(Num::Exact).collect()).unwrap()
}

/// Dual membership through the per-pair linear characterization only.
fn lp_member(u: &DualVector, variant: LpVariant) -> bool {
    let s = &u.support;
    if u.v.iter().any(|x| x.signum() < 0) {
        return false;
    }
    for (i, beta) in s.even.iter().enumerate() {
        let (a, v): (Vec<Exponent>, Vec<Num>) =
            s.even.iter().zip(&u.v).enumerate().filter(|(j, _)| *j != i).map(|(_, (e, x))| (e.clone(), x.clone())).unzip();
        if !dual_lp_characterization(&v, &u.v[i], &a, beta, variant) {
            return false;
        }
    }
    for (i, beta) in s.odd.iter().enumerate() {
        if !dual_lp_characterization(&u.v, &u.w[i], &s.even, beta, variant) {
            return false;
        }
    }
    true
}

fn dual_mode_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut members = 0;
    for i in 0..100 {
        let u = random_dual(&mut rng);
        let s = u.support.clone();
        let all = dual_membership(&u, &s, DualMode::AllLambda).map_err(err)?;
        ensure(all.exact, || "exact arithmetic expected".into())?;
        for mode in [DualMode::Circuits, DualMode::Reduced] {
            let r = dual_membership(&u, &s, mode).map_err(err)?;
            ensure(r.member == all.member && r.exact, || format!("vector {i}: {mode:?} disagrees with allLambda"))?;
        }
        let lp = dual_membership(&u, &s, DualMode::Lp).map_err(err)?;
        ensure(lp.member == all.member, || format!("vector {i}: lp mode disagrees"))?;
        for variant in [LpVariant::EntropyShift, LpVariant::ScaledTau] {
            ensure(lp_member(&u, variant) == all.member, || format!("vector {i}: {variant:?} disagrees"))?;
        }
        members += all.member as usize;
    }
    Ok(format!("100 vectors ({members} members) agree across allLambda/circuits/reduced and both LP variants"))
}

// ---------------------------------------------------------------- criterion 7

fn lower_bound_exactness() -> Outcome {
    let f = SFunction::univariate(&[(0, Num::int(1)), (2, Num::int(-3)), (4, Num::int(1))], &[]).map_err(err)?;
    let start = Instant::now();
    let (gamma, dec) = sonc_lower_bound(&f, 1e-7, &MembershipConfig::default()).map_err(err)?;
    let elapsed = start.elapsed();
    // min of t² − 3t + 1 over t = x² ≥ 0 is at t = 3/2
    let truth = 1.5f64 * 1.5 - 3.0 * 1.5 + 1.0;
    ensure((gamma - truth).abs() <= 1e-6, || format!("γ* = {gamma}, true minimum {truth}"))?;
    let shifted = f.add_constant(Num::Float(-gamma)).map_err(err)?;
    let v = verify_certificate(&shifted, &Certificate::Ag(dec)).map_err(err)?;
    ensure(v.valid, || v.reason.clone())?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("γ* = {gamma:.9}, {elapsed:?}"))
}

// ---------------------------------------------------------------- criterion 8

fn approximation_convergence() -> Outcome {
    let f = putinar_polynomial();
    // first positive root of f̂ = 127/2000 − x/2 − 3x²/2 − 2x³ + x⁴
    let fhat = |x: f64| 0.0635 - 0.5 * x - 1.5 * x * x - 2.0 * x.powi(3) + x.powi(4);
    let (mut lo, mut hi) = (0.05, 0.15);
    ensure(fhat(lo) > 0.0 && fhat(hi) < 0.0, || "bracket".into())?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fhat(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x0 = hi;
    let cfg = MembershipConfig::default();
    let mut steps = vec![];
    for n in [10usize, 20, 40] {
        let step = approx_step(&f, n, 1e-3, &cfg).map_err(err)?;
        ensure((step.x0 - x0).abs() < 1e-9, || format!("x₀ {} vs {x0}", step.x0))?;
        let g = step.p.to_sfunction().map_err(err)?;
        let v = verify_certificate(&g, &Certificate::Ag(step.cert.clone())).map_err(err)?;
        ensure(v.valid, || format!("N = {n}: {}", v.reason))?;
        for i in 0..n {
            ensure(step.p.coeff(i) == f.coeff(i), || format!("N = {n}: coefficient {i} changed"))?;
        }
        let diff = step.p.add(&UniPoly::new(f.coeffs.iter().map(|c| -c.clone()).collect()));
        ensure(diff.degree() == n && (0..n).all(|i| diff.coeff(i).is_zero()), || "p_N − f is not a single term".into())?;
        let gap = sup_on(&diff, 0.9 * x0);
        let want = step.c_star * 0.9f64.powi(n as i32);
        ensure((gap - want).abs() <= 1e-12 && (gap - want).abs() <= 1e-9 * want, || {
            format!("N = {n}: gap {gap:e} vs c*·0.9^N {want:e}")
        })?;
        steps.push(step);
    }
    let c40 = steps[2].c_star;
    let gaps: Vec<f64> = [10usize, 20, 40]
        .iter()
        .map(|&n| {
            let p = approx_poly(&f, n, x0, c40).0;
            sup_on(&p.add(&UniPoly::new(f.coeffs.iter().map(|c| -c.clone()).collect())), 0.9 * x0)
        })
        .collect();
    ensure(gaps[0] > gaps[1] && gaps[1] > gaps[2], || format!("gaps {gaps:?}"))?;
    Ok(format!(
        "c* = {:.3e}, {:.3e}, {:.3e}; gaps at fixed c* {:?}",
        steps[0].c_star, steps[1].c_star, steps[2].c_star, gaps
    ))
}

fn sup_on(p: &UniPoly, r: f64) -> f64 {
    (0..=2000).map(|k| p.eval(-r + 2.0 * r * k as f64 / 2000.0).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- criterion 9

fn label(cand: &RayCandidate, s: &Support) -> Result<&'static str, String> {
    Ok(classify_extreme(cand, s, 1e-9).map_err(err)?.label())
}

fn extreme_rays() -> Outcome {
    let s = Support::new(1, vec![e1(0), e1(1), e1(2)], vec![e1(1)]).map_err(err)?;
    for (a, b) in [(1i64, 1i64), (2, 3), (5, 1)] {
        let cs = vec![Num::int(a * a), Num::int(b * b)];
        let even = Circuit::new(vec![e1(0), e1(2)], e1(1), Parity::Even, &s.even).map_err(err)?;
        let cf = CircuitFunction::new(even, cs.clone(), Num::int(-2 * a * b)).map_err(err)?;
        ensure(label(&RayCandidate::Circuit(cf), &s)? == "extreme-even", || "even circuit".into())?;
        for sg in [1, -1] {
            let odd = Circuit::new(vec![e1(0), e1(2)], e1(1), Parity::Odd, &s.even).map_err(err)?;
            let cf = CircuitFunction::new(odd, cs.clone(), Num::int(sg * 2 * a * b)).map_err(err)?;
            ensure(label(&RayCandidate::Circuit(cf), &s)? == "not-extreme", || "odd circuit".into())?;
            // a² ± 2abx + b²x² = (a² − 2ab|x| + b²x²) + 2ab(|x| ± x)
            let lhs = SFunction::new(s.clone(), vec![Num::int(a * a), Num::zero(), Num::int(b * b)], vec![Num::int(sg * 2 * a * b)])
                .map_err(err)?;
            let p1 = SFunction::new(s.clone(), vec![Num::int(a * a), Num::int(-2 * a * b), Num::int(b * b)], vec![Num::zero()])
                .map_err(err)?;
            let p2 = SFunction::new(s.clone(), vec![Num::zero(), Num::int(2 * a * b), Num::zero()], vec![Num::int(sg * 2 * a * b)])
                .map_err(err)?;
            for k in -20..=20 {
                let x = [k as f64 / 7.0];
                let l = scone::evaluate(&lhs, &x).map_err(err)?.finite().unwrap();
                let r = scone::evaluate(&p1, &x).map_err(err)?.finite().unwrap()
                    + scone::evaluate(&p2, &x).map_err(err)?.finite().unwrap();
                ensure((l - r).abs() < 1e-9, || "split identity".into())?;
            }
            certified(&p1)?;
            certified(&p2)?;
        }
    }
    let mono = |t: i64, s_: i64| RayCandidate::Monomial { beta: e1(1), abs_coeff: Num::int(t), odd_coeff: Num::int(s_) };
    ensure(label(&mono(1, 0), &s)? == "not-extreme", || "|x| should split".into())?;
    ensure(label(&mono(1, 1), &s)? == "extreme-single", || "|x| + x".into())?;
    ensure(label(&mono(1, -1), &s)? == "extreme-single", || "|x| − x".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut members, mut perturbed) = (0, 0);
    for i in 0..100 {
        let perturb = i % 2 == 1;
        if i % 10 < 8 {
            let rc = random_circuit(&mut rng);
            let mut even = rc.outer.clone();
            let mut odd = vec![];
            match rc.parity {
                Parity::Even => even.push(rc.beta.clone()),
                Parity::Odd => odd.push(rc.beta.clone()),
            }
            // a far-away extra exponent leaves the circuit reduced
            if rng.gen_bool(0.5) {
                let far: Vec<i64> = rc.outer.iter().fold(vec![0; rc.beta.dim()], |m, e| {
                    m.iter().zip(&e.0).map(|(a, b)| (*a).max(b.to_integer().try_into().unwrap())).collect()
                });
                even.push(Exponent::from_ints(&far.iter().map(|x| x + 2).collect::<Vec<_>>()));
            }
            let support = Support::new(rc.beta.dim(), even, odd).map_err(err)?;
            let sign = if rc.parity == Parity::Even || rng.gen_bool(0.5) { -1.0 } else { 1.0 };
            let d = if perturb {
                let f = if rng.gen_bool(0.5) { 1.0 + 1e-3 } else { 1.0 - 1e-3 };
                Num::Float(sign * rc.theta * f)
            } else {
                boundary_d(&rc, sign)
            };
            let circ = Circuit::new(rc.outer.clone(), rc.beta.clone(), rc.parity, &support.even).map_err(err)?;
            let cf = CircuitFunction::new(circ, rc.c.clone(), d).map_err(err)?;
            let want = match (perturb, rc.parity) {
                (true, _) => "not-extreme",
                (false, Parity::Even) => "extreme-even",
                (false, Parity::Odd) => "extreme-odd",
            };
            let got = label(&RayCandidate::Circuit(cf.clone()), &support)?;
            ensure(got == want, || format!("instance {i}: {cf:?} labelled {got}, expected {want}"))?;
        } else {
            let beta = e1(rng.gen_range(0..6));
            let in_b = rng.gen_bool(0.5) && beta.is_odd_integer();
            let support =
                Support::new(1, vec![beta.clone()], if in_b { vec![beta.clone()] } else { vec![] }).map_err(err)?;
            let t = rng.gen_range(1..10);
            let s_ = if in_b { if rng.gen_bool(0.5) { t } else { -t } } else { 0 };
            let (abs_coeff, odd_coeff, want) = match (perturb, in_b) {
                (false, _) => (Num::int(t), Num::int(s_), "extreme-single"),
                (true, true) => (Num::int(t), Num::Float(s_ as f64 * (1.0 - 1e-3)), "not-extreme"),
                // a lone |x|^β cannot be pushed off its ray; perturb into the odd direction instead
                (true, false) => (Num::int(t), Num::zero(), "extreme-single"),
            };
            let cand = RayCandidate::Monomial { beta: beta.clone(), abs_coeff, odd_coeff };
            let got = label(&cand, &support)?;
            ensure(got == want, || format!("instance {i}: {cand:?} labelled {got}, expected {want}"))?;
        }
        if perturb {
            perturbed += 1;
        } else {
            members += 1;
        }
    }
    Ok(format!("worked example reproduced; {members} constructed members and {perturbed} perturbed instances labelled correctly"))
}

// ---------------------------------------------------------------- criterion 10

fn simplex_fast_path_cases() -> Outcome {
    let t = |a, b| Exponent::from_ints(&[a, b]);
    let motzkin = SFunction::from_terms(
        2,
        vec![(t(0, 0), Num::int(1)), (t(4, 2), Num::int(1)), (t(2, 4), Num::int(1)), (t(2, 2), Num::int(-3))],
        vec![],
    )
    .map_err(err)?;
    let cfg = MembershipConfig::default();
    // (2,2) = ⅓(0,0) + ⅓(4,2) + ⅓(2,4), so Θ = Π (1/⅓)^⅓ = 3
    let theta = (0..3).map(|_| 3f64.powf(1.0 / 3.0)).product::<f64>();
    let motzkin_note = match simplex_fast_path(&motzkin, &cfg).map_err(err)? {
        FastPath::Certified(cd) => {
            ensure(cd.parts.len() == 1, || "one circuit expected".into())?;
            let p = &cd.parts[0];
            ensure((p.theta() - theta).abs() < 1e-12, || format!("Θ = {}", p.theta()))?;
            ensure(p.is_exact() && p.d == Num::int(-3), || format!("inner coefficient {:?}", p.d))?;
            ensure(p.compare_to_theta(0.0) == std::cmp::Ordering::Equal, || format!("not on the boundary: {p:?}"))?;
            let v = verify_certificate(&motzkin, &Certificate::Circuits(cd)).map_err(err)?;
            ensure(v.valid, || v.reason.clone())?;
            "Motzkin certified with Θ = 3"
        }
        FastPath::Indeterminate(_) => "Motzkin indeterminate",
        other => return Err(format!("Motzkin: {other:?}")),
    };
    let bad = SFunction::from_terms(2, vec![(t(0, 0), Num::int(1)), (t(4, 0), Num::int(1)), (t(0, 4), Num::int(1))], vec![(t(1, 1), Num::int(-3))])
        .map_err(err)?;
    match simplex_fast_path(&bad, &cfg).map_err(err)? {
        FastPath::Refuted { x, .. } => {
            let (a, b) = (x[0], x[1]);
            let val = 1.0 + a.powi(4) + b.powi(4) - 3.0 * a * b;
            ensure(val < 0.0, || format!("witness {x:?} evaluates to {val}"))?;
            Ok(format!("{motzkin_note}; 1 + x⁴ + y⁴ − 3xy refuted at {x:?} (value {val:.4})"))
        }
        other => Err(format!("non-example: {other:?}")),
    }
}

// ---------------------------------------------------------------- criterion 11

fn no_cancellation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = MembershipConfig::default();
    let mut done = 0;
    let mut attempts = 0;
    while done < 20 {
        attempts += 1;
        ensure(attempts <= 40, || format!("only {done} certified instances in 40 attempts"))?;
        // a sum of two non-negative circuit functions
        let n = rng.gen_range(1..=2);
        let mut even: BTreeMap<Exponent, f64> = BTreeMap::new();
        let mut odd: BTreeMap<Exponent, f64> = BTreeMap::new();
        for _ in 0..2 {
            let rc = loop {
                let rc = random_circuit(&mut rng);
                if rc.beta.dim() == n {
                    break rc;
                }
            };
            let shrink = rng.gen_range(0.3..0.95);
            for (e, c) in rc.outer.iter().zip(&rc.c) {
                *even.entry(e.clone()).or_default() += c.to_f64();
            }
            let d = -rc.theta * shrink;
            match rc.parity {
                Parity::Even => *even.entry(rc.beta.clone()).or_default() += d,
                Parity::Odd => *odd.entry(rc.beta.clone()).or_default() += d,
            }
        }
        let terms = |m: &BTreeMap<Exponent, f64>| m.iter().map(|(e, c)| (e.clone(), Num::Float(*c))).collect::<Vec<_>>();
        let f = SFunction::from_terms(n, terms(&even), terms(&odd)).map_err(err)?;
        // enlarge by exponents with zero coefficients
        let mut big_even = terms(&even);
        let mut big_odd = terms(&odd);
        for _ in 0..rng.gen_range(1..=3) {
            let mut b: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=9)).collect();
            if rng.gen_bool(0.5) {
                let e = Exponent::from_ints(&b);
                if !even.contains_key(&e) && big_even.iter().all(|t| t.0 != e) {
                    big_even.push((e, Num::zero()));
                }
            } else {
                if b.iter().all(|x| x % 2 == 0) {
                    b[0] += 1;
                }
                let e = Exponent::from_ints(&b);
                if !odd.contains_key(&e) && big_odd.iter().all(|t| t.0 != e) {
                    big_odd.push((e, Num::zero()));
                }
            }
        }
        let big = SFunction::from_terms(n, big_even, big_odd).map_err(err)?;
        let Membership::Certified(cert) = scone_membership(&big, &cfg).map_err(err)? else {
            continue;
        };
        let small = restrict_support(&big, &cert, &cfg).map_err(|e| format!("instance {attempts}: {e}"))?;
        let supp = big.nonzero_support().map_err(err)?;
        ensure(small.support == supp, || format!("instance {attempts}: support not restricted"))?;
        let g = f.restrict_to(&supp).map_err(err)?;
        let v = verify_certificate(&g, &Certificate::Ag(small)).map_err(err)?;
        ensure(v.valid, || format!("instance {attempts}: {}", v.reason))?;
        done += 1;
    }
    Ok(format!("20 instances re-certified over their own support ({attempts} drawn)"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 putinar reproduction", putinar_reproduction),
        ("2 dual strictness", dual_strictness),
        ("3 circuit decomposition regression", circuit_regression),
        ("4 AG decision vs grid oracle", ag_vs_oracle),
        ("5 circuit-number consistency", circuit_number_consistency),
        ("6 dual mode equivalence", dual_mode_equivalence),
        ("7 lower bound exactness", lower_bound_exactness),
        ("8 approximation convergence", approximation_convergence),
        ("9 extreme-ray classification", extreme_rays),
        ("10 simplex fast path", simplex_fast_path_cases),
        ("11 no cancellation", no_cancellation),
    ];
    // ACCEPTANCE_ONLY=4 runs a single criterion
    let only = std::env::var("ACCEPTANCE_ONLY").ok();
    let mut failed = vec![];
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        if only.as_ref().is_some_and(|o| *o != (i + 1).to_string()) {
            continue;
        }
        let start = Instant::now();
        match run() {
            Ok(note) => report(format!("PASS  {name}: {note} [{:.1?}]", start.elapsed())),
            Err(why) => {
                report(format!("FAIL  {name}: {why}"));
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// written straight to the handle so the lines show up even when output is captured
fn report(line: String) {
    use std::io::Write;
    let _ = writeln!(std::io::stderr(), "{line}");
}
