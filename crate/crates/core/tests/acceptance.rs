//! One line per acceptance criterion, with the measured runtime where a
//! budget applies. Every criterion must pass.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use zfalg::boundary::{
    check_beta, check_boundary_relations, check_coideal, check_hierarchy,
    check_reflection_equation, check_rho_identity, involution_residual, solve_diagonal_reflection,
    symmetric_grid, symmetry_breaking_witness, Boundary, ReflectionMatrix,
};
use zfalg::fock::{check_zf_relations, RapidityGrid, Zf};
use zfalg::report::{Mode, Report};
use zfalg::rmatrix::{check_rmatrix_axioms, RMatrix};
use zfalg::scalar::{int, rat, real, Rational};
use zfalg::suite::{exit_code, run_suite, SuiteConfig};
use zfalg::symbolic::check_confluence_words;
use zfalg::vertex::{
    check_adjoint_is_inverse, check_coproduct_factorization, check_hamiltonian_commutes, check_rtt,
    check_vertex_series, check_wellbred, solve_vertex_coefficient, solve_vertex_series,
};
use zfalg::Mat;

type Outcome = Result<String, String>;

fn pass(rep: &Report) -> std::result::Result<(), String> {
    if rep.pass {
        Ok(())
    } else {
        Err(format!(
            "{} failed: {:?} (max residual {:?})",
            rep.check, rep.witness, rep.max_residual
        ))
    }
}

fn ok<T, E: std::fmt::Debug>(r: Result<T, E>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{e:?}"))
}

fn yang(n: usize, g: i64) -> RMatrix {
    RMatrix::rational(n, int(g)).unwrap()
}

fn six_vertex() -> RMatrix {
    RMatrix::trigonometric(int(2)).unwrap()
}

fn diag(a: i64, b: i64) -> Mat {
    Mat::from_vec(
        2,
        2,
        vec![real(int(a)), real(int(0)), real(int(0)), real(int(b))],
    )
}

fn pairs(pts: &[Rational]) -> Vec<(Rational, Rational)> {
    let mut out = Vec::new();
    for a in pts {
        for b in pts {
            if a != b {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

fn random_triples(r: &RMatrix, rng: &mut StdRng, count: usize) -> Vec<[Rational; 3]> {
    let mut out = Vec::new();
    while out.len() < count {
        let mut k = || rat(rng.gen_range(-24..=24), rng.gen_range(1..=6));
        let t = [k(), k(), k()];
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            continue;
        }
        // admissible: no pole at any pair
        let fine = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .all(|&(i, j)| r.eval(&t[i], &t[j]).is_ok() && r.eval(&t[j], &t[i]).is_ok());
        if fine {
            out.push(t);
        }
    }
    out
}

fn c1_axioms() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let families = [yang(2, 1), yang(2, 2), yang(3, 1), yang(3, 2), six_vertex()];
    for r in &families {
        let triples = random_triples(r, &mut rng, 20);
        let rep = ok(check_rmatrix_axioms(r, &triples, Mode::Exact))?;
        pass(&rep.yang_baxter)?;
        pass(&rep.unitarity)?;
    }
    let printed = ok(RMatrix::printed_yangian(2, int(1)))?;
    let triples = random_triples(&printed, &mut rng, 20);
    let rep = ok(check_rmatrix_axioms(&printed, &triples, Mode::Exact))?;
    let w = rep
        .unitarity
        .witness
        .ok_or("printed normalization passed unitarity")?;
    Ok(format!(
        "5 families x 20 triples exact; printed normalization fails unitarity at {}",
        w.sample
    ))
}

fn c2_zf() -> Outcome {
    let grid = ok(RapidityGrid::from_ints(&[1, 2, 3]))?;
    let zf = Zf::new(yang(2, 1), grid.clone());
    let rep = ok(check_zf_relations(
        &zf,
        &pairs(grid.points()),
        3,
        Mode::Exact,
    ))?;
    pass(&rep)?;
    Ok(format!("{} operator samples on p <= 3", rep.samples))
}

fn c3_confluence() -> Outcome {
    let grid = ok(symmetric_grid(&[1, 2]))?;
    let mut words = 0;
    let mut slowest = Duration::ZERO;
    for r in [yang(2, 1), six_vertex()] {
        let t = Instant::now();
        let rep = ok(check_confluence_words(&r, &grid, 5, Mode::Exact))?;
        slowest = slowest.max(t.elapsed());
        pass(&rep)?;
        words = rep.samples;
    }
    let bad = yang(2, 1).perturbed(1, 2, real(rat(1, 10)));
    let rep = ok(check_confluence_words(&bad, &grid, 3, Mode::Exact))?;
    let w = rep.witness.ok_or("perturbed matrix passed confluence")?;
    if slowest >= Duration::from_secs(10) {
        return Err(format!("slowest family took {slowest:.2?}"));
    }
    Ok(format!(
        "{words} words per family, slowest {slowest:.2?}; perturbed R fails at {}",
        w.sample
    ))
}

fn c4_vertex() -> Outcome {
    let grid = ok(RapidityGrid::from_ints(&[1, 2, 3]))?;
    let k0s = [rat(1, 2), int(-2)];
    let mut samples = 0;
    for r in [yang(2, 1), six_vertex()] {
        let zf = Zf::new(r, grid.clone());
        let reps = [
            ok(check_wellbred(&zf, &k0s, 3, Mode::Exact))?,
            ok(check_rtt(&zf, &pairs(&k0s), 3, Mode::Exact))?,
            ok(check_adjoint_is_inverse(&zf, &k0s, 3, Mode::Exact))?,
            ok(check_hamiltonian_commutes(&zf, &k0s, 4, 3, Mode::Exact))?,
            ok(check_coproduct_factorization(&zf, &k0s, 1, 1, Mode::Exact))?,
            ok(check_coproduct_factorization(&zf, &k0s, 2, 1, Mode::Exact))?,
            ok(check_coproduct_factorization(&zf, &k0s, 1, 2, Mode::Exact))?,
        ];
        for rep in &reps {
            pass(rep)?;
            samples += rep.samples;
        }
    }
    Ok(format!("{samples} samples over both families"))
}

fn c5_coefficients() -> Outcome {
    let grid = ok(RapidityGrid::from_ints(&[-1, 1, 2]))?;
    let zf = Zf::new(yang(2, 1), grid.clone());
    let k0s = [rat(1, 2), int(3)];
    let first = ok(solve_vertex_coefficient(&zf, 1, &k0s))?;
    for k0 in &k0s {
        for k in grid.points() {
            let expect = Mat::identity(4).sub(&ok(zf.r().eval(k0, k))?);
            if first.get(k0, &[k.clone()]) != Some(&expect) {
                return Err(format!("order 1 differs from I - R at k0={k0:?}, k={k:?}"));
            }
        }
    }
    // solve_vertex_series fails on a rank-deficient system
    let orders = ok(solve_vertex_series(&zf, 2, &k0s))?;
    let rep = ok(check_vertex_series(&zf, &orders, &k0s, Mode::Exact))?;
    pass(&rep)?;
    Ok(format!(
        "order 1 = I - R01; order 2 unique with {} coefficients, {} action/symmetry samples",
        orders[1].values.len(),
        rep.samples
    ))
}

fn c6_reflection() -> Outcome {
    let r = yang(2, 1);
    let pts: Vec<Rational> = [-3, -2, -1, 1, 2, 3, 5].iter().map(|&k| int(k)).collect();
    let mut count = 0;
    for (a, b) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let refl = ok(ReflectionMatrix::constant(&diag(a, b)))?;
        pass(&ok(check_reflection_equation(
            &r,
            &refl,
            &pairs(&pts),
            Mode::Exact,
        ))?)?;
        for k in &pts {
            if ok(involution_residual(&refl, k))? != int(0) {
                return Err(format!("diag({a},{b}) is not an involution"));
            }
        }
        count += 1;
    }
    let solved = ok(solve_diagonal_reflection(&r, 1))?;
    // disjoint from the solver's own solve and verify pairs
    let fresh: Vec<Rational> = [rat(1, 7), rat(-8, 3), rat(13, 2), rat(-5, 11)].to_vec();
    for refl in &solved {
        pass(&ok(check_reflection_equation(
            &r,
            refl,
            &pairs(&fresh),
            Mode::Exact,
        ))?)?;
        for k in &fresh {
            if ok(involution_residual(refl, k))? != int(0) {
                return Err("solver output is not an involution".into());
            }
        }
    }
    Ok(format!(
        "{count} sign matrices exact; {} solver outputs verified on a fresh sample set",
        solved.len()
    ))
}

fn boundaries(grid: &RapidityGrid) -> std::result::Result<Vec<Boundary>, String> {
    [diag(1, 1), diag(1, -1)]
        .iter()
        .map(|b| {
            let zf = Zf::new(yang(2, 1), grid.clone());
            ok(Boundary::new(zf, ok(ReflectionMatrix::constant(b))?))
        })
        .collect()
}

fn c7_theorem() -> Outcome {
    let grid = ok(symmetric_grid(&[1, 2]))?;
    let mut samples = 0;
    for bd in boundaries(&grid)? {
        let rel = ok(check_boundary_relations(&bd, 2, Mode::Exact))?;
        pass(&rel)?;
        let rho = ok(check_rho_identity(&bd, 2, Mode::Exact))?;
        pass(&rho)?;
        samples += rel.samples + rho.samples;
    }
    Ok(format!("{samples} samples for B = I and diag(1,-1)"))
}

fn c8_hierarchy() -> Outcome {
    let grid = ok(symmetric_grid(&[1, 2]))?;
    let mut witness = String::new();
    for bd in boundaries(&grid)? {
        let rep = ok(check_hierarchy(&bd, 1, 2, Mode::Exact))?;
        pass(&rep)?;
        witness = ok(symmetry_breaking_witness(&bd))?.ok_or("no symmetry breaking witness")?;
    }
    Ok(format!("odd charges vanish, split exact; {witness}"))
}

fn c9_coideal() -> Outcome {
    let grid = ok(symmetric_grid(&[1, 2]))?;
    let ks = grid.points().to_vec();
    let mut samples = 0;
    for bd in boundaries(&grid)? {
        for (p, q) in [(1, 1), (2, 1)] {
            let rep = ok(check_coideal(&bd, &ks, p, q, Mode::Exact))?;
            pass(&rep)?;
            samples += rep.samples;
        }
    }
    Ok(format!("{samples} samples"))
}

fn c10_beta() -> Outcome {
    let grid = ok(symmetric_grid(&[1, 2, 3]))?;
    let mut samples = 0;
    for bd in boundaries(&grid)? {
        let rep = ok(check_beta(&bd, 2, &[rat(1, 2), int(2)], Mode::Exact))?;
        pass(&rep)?;
        samples += rep.samples;
    }
    Ok(format!(
        "orders 1 and 2 match extraction, {samples} samples"
    ))
}

fn c11_determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let config = ok(SuiteConfig::load(&root.join("default.json")))?;
    let a = ok(run_suite(&config))?.to_json();
    let b = ok(run_suite(&config))?.to_json();
    if a != b {
        return Err("default suite reports differ between runs".into());
    }
    let parse = |text: &str| SuiteConfig::parse(text, &root).unwrap();
    let fixtures = [
        (
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 }, "grid": [-2, -1, 1, 2],
              "suites": ["axioms", "zf", "wellbred", "rtt"] }"#,
            0,
        ),
        (
            r#"{ "rmatrix": { "builtin": "printed-yangian", "n": 2, "g": 1 }, "grid": [1, 2, 3],
              "suites": ["axioms"] }"#,
            1,
        ),
        (
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 }, "grid": [-1, 1],
              "suites": ["boundary"] }"#,
            2,
        ),
        (
            r#"{ "rmatrix": { "builtin": "rational", "n": 2, "g": 1 }, "grid": [1], "suites": [] }"#,
            0,
        ),
    ];
    for (text, want) in fixtures {
        let got = exit_code(&run_suite(&parse(text)));
        if got != want {
            return Err(format!("exit code {got}, expected {want}"));
        }
    }
    Ok(format!(
        "{} byte-identical report bytes; exit codes 0/1/2/0",
        a.len()
    ))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, Option<u64>); 11] = [
        ("1 R-matrix axioms", c1_axioms, Some(1)),
        ("2 ZF realization", c2_zf, Some(5)),
        ("3 confluence", c3_confluence, None),
        ("4 vertex operator", c4_vertex, Some(10)),
        ("5 coefficient solve", c5_coefficients, None),
        ("6 reflection solutions", c6_reflection, None),
        ("7 boundary algebra", c7_theorem, Some(30)),
        ("8 hierarchy", c8_hierarchy, None),
        ("9 coideal", c9_coideal, None),
        ("10 beta cross-check", c10_beta, None),
        ("11 determinism and exit codes", c11_determinism, None),
    ];
    let mut failed = Vec::new();
    for (name, run, budget) in criteria {
        let t = Instant::now();
        let mut outcome = run();
        let took = t.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, budget) {
            if took >= Duration::from_secs(limit) {
                outcome = Err(format!("took {took:.2?}, budget {limit} s"));
            }
        }
        match &outcome {
            Ok(detail) => println!("criterion {name}: PASS ({took:.2?}) {detail}"),
            Err(e) => {
                println!("criterion {name}: FAIL ({took:.2?}) {e}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
