//! End-to-end acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.
//!
//! Expected values come from oracles written here, independently of the
//! library: classical S₃ characters, monomial counts, brute-force enumeration.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use operad_forge::formality::{
    designed_obstruction, perturbed_structure, rescale, stages_consistent, theta_construct, verify_theta, LambdaFamily,
};
use operad_forge::graded::GradedVectorSpace;
use operad_forge::hochschild::{
    binfty_relations_check, cohomology_table, cup, gerst_bracket, hochschild_differential,
    verify_gerstenhaber_on_cohomology, Cochain, TruncatedPolyAlgebra,
};
use operad_forge::koszul::{
    check_bicomplex, check_oinfinity, e1_term_at, koszulity_check, oinfinity_from_algebra, universe_bound,
    CoderivationComplex, OInfinityStructure, Truncation,
};
use operad_forge::linalg::{q, Q};
use operad_forge::operad::{ass, com, gerst, lie, presented_operad_component, quadratic_dual, QuadraticPresentation};
use operad_forge::polyvector::polyvector_algebra;
use operad_forge::Error;

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |r, i| r * (n - i) / (i + 1))
}

// ---------------------------------------------------------------------------
// 1. Koszulity

fn koszulity() -> Outcome {
    let mut runs = 0;
    for (p, dims, top) in [(com(), vec![1, 2], 4), (ass(), vec![1, 2], 4), (lie(), vec![1, 2], 4), (gerst(), vec![1], 3)] {
        for dv in dims {
            let v = GradedVectorSpace::concentrated(dv, 0);
            let r = koszulity_check(&p, &v, top).map_err(|e| e.to_string())?;
            for n in 2..=top {
                let a = r.get(&n).ok_or(format!("{} missing arity {n}", p.name))?;
                ensure!(a.acyclic, "{} dim V = {dv}: arity {n} not acyclic ({:?})", p.name, a.cohomology);
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} arity blocks acyclic"))
}

// ---------------------------------------------------------------------------
// 2. Quadratic duality

/// Characters on S₃ in lexicographic permutation order
/// (id, (12)-type, (12)-type, 3-cycle, 3-cycle, (12)-type).
fn s3(c: [i64; 3]) -> Vec<Q> {
    let [id, tr, cy] = c;
    [id, tr, tr, cy, cy, tr].into_iter().map(q).collect()
}

fn s2(c: [i64; 2]) -> Vec<Q> {
    c.into_iter().map(q).collect()
}

fn quadratic_duality() -> Outcome {
    // P⊥ ≅ (P^!{−1})*: cogenerators sit in degree −1, corelations in degree −2.
    // Lie(2) = sgn, Lie(3) = standard; the odd suspension twists by sgn.
    let triv2 = s2([1, 1]);
    let sgn2 = s2([1, -1]);
    let reg2 = s2([2, 0]);
    let std3 = s3([2, 0, -1]);
    let sgn3 = s3([1, -1, 1]);
    let reg3 = s3([6, 0, 0]);
    let cases: [(QuadraticPresentation, Vec<Q>, Vec<Q>, &str); 3] = [
        (com(), triv2, std3, "(Lie{−1})*"),
        (ass(), reg2, reg3, "(Ass{−1})*"),
        (lie(), sgn2, sgn3, "(Com{−1})*"),
    ];
    for (p, c2, c3, label) in cases {
        let d = quadratic_dual(&p);
        let got2 = d.component(2).unwrap().graded_characters();
        let got3 = d.component(3).unwrap().graded_characters();
        ensure!(got2 == BTreeMap::from([(-1, c2.clone())]), "{} arity 2 vs {label}: {got2:?}", p.name);
        ensure!(got3 == BTreeMap::from([(-2, c3.clone())]), "{} arity 3 vs {label}: {got3:?}", p.name);
    }
    // gerst: G⊥(n) in degree −d − 2(n−1) for every degree-d piece of G(n), same characters
    let gd = quadratic_dual(&gerst());
    for n in 2..=3usize {
        let g = presented_operad_component(&gerst(), n).map_err(|e| e.to_string())?.component;
        let expected: BTreeMap<i64, Vec<Q>> =
            g.graded_characters().into_iter().map(|(d, ch)| (-d - 2 * (n as i64 - 1), ch)).collect();
        let got = gd.component(n).unwrap().graded_characters();
        ensure!(got == expected, "gerst arity {n}: {got:?} vs {expected:?}");
    }
    Ok("com, ass, lie, gerst duals match in arities 2–3".into())
}

// ---------------------------------------------------------------------------
// 3. Hochschild / HKR

/// `dim S_A(T_A[−1])` in arity n, weight w: n-fold wedges of ∂'s (C(N, n) choices)
/// times coefficient monomials of degree w + n.
fn hkr_count(vars: usize, n: usize, w: i64) -> usize {
    let d = w + n as i64;
    if d < 0 {
        return 0;
    }
    binom(vars, n) * binom(d as usize + vars - 1, vars - 1)
}

fn hochschild_hkr() -> Outcome {
    let mut entries = 0;
    for (vars, degree, max_arity, weights) in [(1usize, 6i64, 3usize, -2..=3i64), (2, 4, 2, -2..=1)] {
        let ws: Vec<i64> = weights.collect();
        let a = TruncatedPolyAlgebra::new(vars, degree);
        let t = cohomology_table(&a, max_arity, &ws).map_err(|e| e.to_string())?;
        ensure!(t.entries.len() == (max_arity + 1) * ws.len(), "k[{vars}]: table has {} entries", t.entries.len());
        for e in &t.entries {
            ensure!(e.stabilized, "k[{vars}] (n={}, w={}): {} at D, {} at D+1", e.arity, e.weight, e.dim, e.dim_next);
            let oracle = hkr_count(vars, e.arity, e.weight);
            ensure!(e.dim == oracle, "k[{vars}] (n={}, w={}): dim {} vs oracle {oracle}", e.arity, e.weight, e.dim);
            entries += 1;
        }
    }
    Ok(format!("{entries} entries match the monomial count, stabilized at D+1"))
}

// ---------------------------------------------------------------------------
// 4. Chain identities

fn bracket(f: &Cochain, g: &Cochain) -> Option<Cochain> {
    match gerst_bracket(f, g) {
        Ok(c) => Some(c),
        // [const, const] lives in arity −1: zero
        Err(Error::Usage(_)) => None,
        Err(e) => panic!("{e}"),
    }
}

fn sum(terms: Vec<(Option<Cochain>, Q)>) -> Option<Cochain> {
    let mut acc: Option<Cochain> = None;
    for (t, s) in terms {
        if let Some(t) = t {
            acc = Some(match acc {
                None => t.scaled(&s),
                Some(a) => a.add_scaled(&t, &s),
            });
        }
    }
    acc
}

fn sgn(e: i64) -> Q {
    if e.rem_euclid(2) == 0 {
        Q::one()
    } else {
        -Q::one()
    }
}

/// Nonzero random cochain over k[x] of arity ≤ 2 and weight in −1..1.
fn sample(rng: &mut ChaCha8Rng, bound: i64) -> Cochain {
    loop {
        let n = rng.random_range(0..=2usize);
        let w = rng.random_range(-1..=1i64);
        let c = Cochain::random(rng, 1, n, w, bound, 0.5);
        if !c.is_zero() {
            return c;
        }
    }
}

fn chain_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cochains: Vec<Cochain> = (0..102).map(|_| sample(&mut rng, 4)).collect();
    let mut checks = 0;
    for f in &cochains {
        let dd = hochschild_differential(&hochschild_differential(f).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure!(dd.is_zero(), "d² ≠ 0 on an arity-{} cochain", f.arity);
        checks += 1;
    }
    for t in cochains.chunks(3) {
        let (f, g, h) = (&t[0], &t[1], &t[2]);
        let l = cup(&cup(f, g), h);
        let r = cup(f, &cup(g, h));
        ensure!(l.add_scaled(&r, &-Q::one()).is_zero(), "cup is not associative");
        // [f,[g,h]] = [[f,g],h] + (−1)^{|f||g|} [g,[f,h]]
        let lhs = bracket(g, h).and_then(|gh| bracket(f, &gh));
        let a = bracket(f, g).and_then(|fg| bracket(&fg, h));
        let b = bracket(f, h).and_then(|fh| bracket(g, &fh));
        let total = sum(vec![(lhs, Q::one()), (a, -Q::one()), (b, -sgn(f.degree() * g.degree()))]);
        ensure!(total.is_none_or(|c| c.is_zero()), "Jacobi fails on arities ({}, {}, {})", f.arity, g.arity, h.arity);
        let r = binfty_relations_check(t).map_err(|e| e.to_string())?;
        ensure!(r.ok, "B∞: {}", r.failure.unwrap_or_default());
        checks += 2 + r.checked;
    }
    // a few samples at the larger degree bound
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2 {
        let t: Vec<Cochain> = (0..3).map(|_| sample(&mut rng, 5)).collect();
        let r = binfty_relations_check(&t).map_err(|e| e.to_string())?;
        ensure!(r.ok, "B∞ at D = 5: {}", r.failure.unwrap_or_default());
        checks += r.checked;
    }
    Ok(format!("{} cochains, {checks} identities, zero failures", cochains.len() + 6))
}

// ---------------------------------------------------------------------------
// 5. Gerstenhaber structure on cohomology

fn gerstenhaber_on_cohomology() -> Outcome {
    let mut checks = 0;
    for (vars, degree, max_arity, weights) in [(1usize, 6i64, 3usize, -2..=3i64), (2, 4, 2, -2..=1)] {
        let ws: Vec<i64> = weights.collect();
        let a = TruncatedPolyAlgebra::new(vars, degree);
        let r = verify_gerstenhaber_on_cohomology(&a, max_arity, &ws).map_err(|e| e.to_string())?;
        ensure!(r.ok, "k[{vars}]: {}", r.failure.unwrap_or_default());
        checks += r.checks;
    }
    Ok(format!("{checks} checks modulo coboundaries"))
}

// ---------------------------------------------------------------------------
// 6. Coderivations and E₁

/// Brute force: pairs (u, h) with `u` a monomial of size 1 + p in even
/// generators `g_x` (weight 1) and odd `g_ξ` (weight −1) and `h = x^a ξ^e` a
/// polyvector monomial of k[x], with `wt(h) − wt(u) = δ`.
fn e1_oracle(p: usize, delta: i64) -> usize {
    let size = 1 + p;
    let mut count = 0;
    // the odd generator appears at most once
    for odd in 0..=1usize.min(size) {
        let wt_u = (size - odd) as i64 - odd as i64;
        for e in 0..=1i64 {
            for a in 0..=64i64 {
                if a - e - wt_u == delta {
                    count += 1;
                }
            }
        }
    }
    count
}

fn coderivation_e1() -> Outcome {
    let deltas: Vec<i64> = (-2..=2).collect();
    let alg = polyvector_algebra(1, universe_bound(2, &deltas));
    let c = CoderivationComplex::build(&alg, 2, 3, &deltas, false).map_err(|e| e.to_string())?;
    check_bicomplex(&c).map_err(|e| format!("Q_m, Q_ℓ relations: {e}"))?;
    let mut terms = 0;
    for &d in &deltas {
        // p + q + 2 ≤ 3
        let zero = e1_term_at(&c, d, 0, 1).map_err(|e| e.to_string())?;
        ensure!(zero == 0, "E₁^(0,1) at δ = {d} is {zero}");
        for p in 0..=1 {
            let got = e1_term_at(&c, d, p, 0).map_err(|e| e.to_string())?;
            let want = e1_oracle(p, d);
            ensure!(got == want, "E₁^({p},0) at δ = {d}: {got} vs {want}");
        }
        terms += 3;
    }
    Ok(format!("Q² relations exact; {terms} E₁ terms match"))
}

// ---------------------------------------------------------------------------
// 7. Formality

fn strict(vars: usize, weight: i64, arity: usize) -> OInfinityStructure {
    let alg = polyvector_algebra(vars, weight);
    oinfinity_from_algebra(&alg, Truncation { filt_bound: weight, arity_bound: arity })
}

fn formality() -> Outcome {
    let bases = [strict(1, 2, 3), strict(1, 2, 4), strict(2, 1, 3)];
    let mut instances = 0;
    let mut nontrivial = 0;
    for seed in 0..12u64 {
        let base = &bases[seed as usize % bases.len()];
        let p = perturbed_structure(base, seed);
        let mut chk = p.clone();
        ensure!(check_oinfinity(&mut chk), "seed {seed}: perturbation is not an O∞-structure");
        for l in [0i64, 1, 2, -1] {
            let mut r = rescale(&p, &q(l)).map_err(|e| e.to_string())?;
            ensure!(check_oinfinity(&mut r), "seed {seed}: rescaling by {l} breaks Q² = 0");
        }
        let f = LambdaFamily::new(p, None).map_err(|e| e.to_string())?;
        let t = theta_construct(&f).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(verify_theta(&t, &f), "seed {seed}: θ does not intertwine mod λ^{}", f.order);
        ensure!(stages_consistent(&t), "seed {seed}: later stages changed earlier components");
        // homogeneity: the family at λ is trivialized by φ_n λ^{n−1}
        let lam = q(3);
        let fl = LambdaFamily::new(f.at(&lam).map_err(|e| e.to_string())?, Some(f.order)).map_err(|e| e.to_string())?;
        let tl = theta_construct(&fl).map_err(|e| e.to_string())?;
        for (n, phi) in &t.components {
            let mut pow = Q::one();
            for _ in 1..*n {
                pow *= &lam;
            }
            let scaled: BTreeMap<u32, _> = phi
                .iter()
                .map(|(h, c)| (*h, c.iter().map(|(e, v)| (e.clone(), v * &pow)).filter(|(_, v)| !v.is_zero()).collect()))
                .collect();
            ensure!(tl.phi(*n) == scaled, "seed {seed}: θ_{n} at λ = 3 is not 3^{}·φ_{n}", n - 1);
        }
        instances += 1;
        nontrivial += usize::from(!t.is_identity());
    }
    ensure!(nontrivial >= 10, "only {nontrivial} instances needed a correction");
    for stage in [1usize, 2] {
        let s = designed_obstruction(stage).map_err(|e| e.to_string())?;
        let f = LambdaFamily::new(s, None).map_err(|e| e.to_string())?;
        match theta_construct(&f) {
            Err(Error::ObstructionNotExact { stage: got, .. }) => {
                ensure!(got == stage, "obstruction raised at stage {got}, expected {stage}")
            }
            other => return Err(format!("designed obstruction at stage {stage}: {other:?}")),
        }
    }
    Ok(format!("{instances} θ-isomorphisms verified ({nontrivial} non-trivial); obstructions caught at stages 1, 2"))
}

// ---------------------------------------------------------------------------
// 8. Determinism

fn strip_timing(s: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(s).expect("report is JSON");
    let mut v = v;
    v.as_object_mut().expect("object").remove("elapsed_ms");
    serde_json::to_string(&v).unwrap()
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_operad-forge");
    let commands: [(&[&str], i32); 9] = [
        (&["koszul", "--preset", "gerst", "--dim-v", "1", "--max-arity", "3"], 0),
        (&["quaddual", "--preset", "com"], 0),
        (&["hochschild", "--vars", "2", "--degree", "4", "--max-arity", "2", "--weights", "-2..0"], 0),
        (&["binfty", "--degree", "4", "--samples", "1", "--seed", "9"], 0),
        (&["binfty", "--mu-only"], 0),
        (&["formality", "--vars", "1", "--weight", "2", "--arity", "3", "--order", "2", "--seed", "4"], 0),
        (&["formality", "--obstruction-stage", "2"], 2),
        (&["koszul", "--preset", "none"], 1),
        (&["hochschild", "--degree", "12"], 1),
    ];
    for (args, code) in commands {
        let run = || Command::new(bin).args(args).output().expect("binary runs");
        let (a, b) = (run(), run());
        let line = args.join(" ");
        ensure!(a.status.code() == Some(code), "`{line}` exited {:?}, expected {code}", a.status.code());
        ensure!(a.status.code() == b.status.code(), "`{line}`: exit codes differ");
        let (sa, sb) = (String::from_utf8_lossy(&a.stdout), String::from_utf8_lossy(&b.stdout));
        if code == 0 {
            ensure!(strip_timing(&sa) == strip_timing(&sb), "`{line}`: payloads differ");
        }
        ensure!(sa == sb || code == 0, "`{line}`: outputs differ");
    }
    Ok(format!("{} invocations reproduced byte-for-byte", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("koszulity", koszulity),
        ("quadratic duality", quadratic_duality),
        ("hochschild/HKR", hochschild_hkr),
        ("chain identities", chain_identities),
        ("gerstenhaber on cohomology", gerstenhaber_on_cohomology),
        ("coderivations/E1", coderivation_e1),
        ("formality", formality),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
