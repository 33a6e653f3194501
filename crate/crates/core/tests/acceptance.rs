//! Acceptance battery. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any hard gate fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use suffreduce::estimators::{self, ising_logpartition, EstimatorSpec, SolverOptions};
use suffreduce::linkage::{is_binary_ultrametric, slc_partition, threshold_components, Partition};
use suffreduce::orbit::{arcsin_map, cut_membership, CUT_FEASIBILITY_TOL};
use suffreduce::reduce::{self, Input};
use suffreduce::verify::{
    self, check_minimality_slc, check_support_containment, ising_instance, lambda_grid, lasso_chain_holds,
    nnls_chain_holds, planted_benchmark, random_instance, to_correlation, CrossBlock,
};
use suffreduce::SymMatrix;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn battery(seed: u64) -> Vec<(SymMatrix, SymMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..50)
        .map(|t| {
            let p = [10, 20, 30][t % 3];
            let blocks = rng.gen_range(1..=4);
            let mut twin = rng.clone();
            let (noise, _) = random_instance(&mut rng, p, blocks, CrossBlock::Noise);
            let (negative, _) = random_instance(&mut twin, p, blocks, CrossBlock::Negative);
            (noise, negative)
        })
        .collect()
}

fn support_components(theta: &SymMatrix) -> Partition {
    threshold_components(theta, estimators::SUPPORT_TOL * theta.max_abs()).expect("valid threshold")
}

fn exact_thresholding() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for (t, (x, _)) in battery(SEED).iter().enumerate() {
        for lambda in lambda_grid(x, 10) {
            let r = estimators::solve(&EstimatorSpec::glasso(lambda), &Input::Matrix(x.clone()));
            let same = match &r {
                Ok(r) => support_components(r.theta_matrix().unwrap()) == threshold_components(x, lambda).unwrap(),
                Err(_) => false,
            };
            checked += 1;
            if !same {
                bad.push(format!("instance {t} λ={lambda:.4}"));
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{checked} (instance, λ) pairs, mismatches {:?}", bad),
    }
}

fn sufficiency_equivalence() -> Outcome {
    let tol = 1e-5;
    let mut worst = [0.0f64; 4];
    let mut counts = [0usize; 4];
    let mut bad = Vec::new();
    let mut run = |slot: usize, spec: EstimatorSpec, x: &SymMatrix, label: String| {
        counts[slot] += 1;
        match verify::check_sufficiency(&spec, &Input::Matrix(x.clone()), tol) {
            Ok(rep) => {
                worst[slot] = worst[slot].max(rep.deviation);
                if !rep.pass {
                    bad.push(format!("{label}: {rep:?}"));
                }
            }
            Err(e) => bad.push(format!("{label}: {e}")),
        }
    };
    for (t, (noise, negative)) in battery(SEED).iter().enumerate() {
        for lambda in lambda_grid(noise, 10) {
            run(0, EstimatorSpec::glasso(lambda), noise, format!("glasso {t} λ={lambda:.4}"));
            run(1, EstimatorSpec::sparse_cov(lambda, 0.01), noise, format!("sparsecov {t} λ={lambda:.4}"));
        }
        run(2, EstimatorSpec::positive_invcov(), noise, format!("posinvcov {t}"));
        run(2, EstimatorSpec::positive_invcov(), negative, format!("posinvcov- {t}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    for t in 0..50 {
        let p = [4, 6, 8][t % 3];
        let blocks = rng.gen_range(1..=3);
        let x = ising_instance(&mut rng, p, blocks);
        for lambda in lambda_grid(&x, 3) {
            run(3, EstimatorSpec::ising(lambda), &x, format!("ising {t} λ={lambda:.4}"));
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "checks glasso/sparsecov/posinvcov/ising = {counts:?}, worst deviation {:.2e}/{:.2e}/{:.2e}/{:.2e}{}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            if bad.is_empty() { String::new() } else { format!(", failures {bad:?}") }
        ),
    }
}

fn fantope_containment() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut bad = Vec::new();
    for (t, (x, _)) in battery(SEED).iter().enumerate().step_by(2) {
        for k in [1, 2] {
            for lambda in lambda_grid(x, 5) {
                checked += 1;
                let part = slc_partition(&x.abs(), lambda);
                match estimators::solve(&EstimatorSpec::fantope(lambda, k), &Input::Matrix(x.clone())) {
                    Ok(r) => {
                        let theta = r.theta_matrix().unwrap();
                        let scale = theta.max_abs();
                        let off = check_support_containment(theta, &part, 0.0)
                            .iter()
                            .map(|&(i, j)| theta.get(i, j).abs() / scale)
                            .fold(0.0, f64::max);
                        worst = worst.max(off);
                        if off > 1e-6 {
                            bad.push(format!("instance {t} k={k} λ={lambda:.4}: {off:.2e}"));
                        }
                    }
                    Err(e) => bad.push(format!("instance {t} k={k} λ={lambda:.4}: {e}")),
                }
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("{checked} solves, worst relative off-block entry {worst:.2e} {bad:?}"),
    }
}

fn slc_minimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut bad = 0;
    for p in [3, 4, 5] {
        for _ in 0..20 {
            let x = SymMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { rng.gen_range(-1.0..1.0) });
            let lambda = rng.gen_range(0.0..1.0);
            if !check_minimality_slc(&x, lambda).unwrap_or(false) {
                bad += 1;
            }
        }
    }
    Outcome {
        pass: bad == 0,
        detail: format!("60 (X, λ) pairs, {bad} failures"),
    }
}

fn ultrametric_psd() -> Outcome {
    let psd = |b: &SymMatrix| b.min_eigenvalue().unwrap() >= -1e-10;
    let mut mismatches = 0;
    let mut ultra = 0;
    for bits in 0u32..64 {
        let mut e = 0;
        let b = SymMatrix::from_fn(4, |i, j| {
            if i == j {
                1.0
            } else {
                e += 1;
                f64::from(bits >> (e - 1) & 1)
            }
        });
        let u = is_binary_ultrametric(&b).unwrap();
        ultra += usize::from(u);
        mismatches += usize::from(u != psd(&b));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    for t in 0..200 {
        let b = if t % 2 == 0 {
            let labels: Vec<usize> = (0..6).map(|_| rng.gen_range(0..3)).collect();
            Partition::from_labels(&labels).cluster_matrix()
        } else {
            SymMatrix::from_fn(6, |i, j| if i == j || rng.gen_bool(0.5) { 1.0 } else { 0.0 })
        };
        mismatches += usize::from(is_binary_ultrametric(&b).unwrap() != psd(&b));
    }
    Outcome {
        pass: mismatches == 0,
        // the 4×4 ultrametrics are the 15 partitions of four items
        detail: format!("64 exhaustive (ultrametric {ultra}) + 200 random, {mismatches} mismatches"),
    }
}

fn arcsin_in_cut() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut bad = 0;
    for t in 0..100 {
        let p = 2 + t % 5;
        // full rank: rank-deficient draws put entries within an ulp of ±1 where
        // arcsin's slope blows rounding up past the feasibility tolerance
        let n = rng.gen_range(p..=3 * p);
        let v: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let sigma = suffreduce::symmat::uncentered_covariance(&v).unwrap();
        let ok = arcsin_map(&to_correlation(&sigma)).and_then(|a| cut_membership(&a, p));
        if !matches!(ok, Ok(true)) {
            bad += 1;
        }
    }
    Outcome {
        pass: bad == 0,
        detail: format!("100 correlation matrices, p in 2..=6, feasibility tol {CUT_FEASIBILITY_TOL:e}, {bad} failures"),
    }
}

fn closed_form_chains() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut bad = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=20);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let lam: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let nnls_ok = nnls_chain_holds(&x) && estimators::nnls(&x) == reduce::positive_part(&x);
        if !lasso_chain_holds(&x, &lam) || !nnls_ok {
            bad += 1;
        }
    }
    Outcome {
        pass: bad == 0,
        detail: format!("10000 vectors, {bad} chain failures"),
    }
}

fn ising_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for p in 2..=6 {
        for _ in 0..5 {
            let theta = SymMatrix::from_fn(p, |i, j| if i == j { 0.0 } else { rng.gen_range(-0.5..0.5) });
            let (_, m) = ising_logpartition(&theta).unwrap();
            for i in 0..p {
                for j in (i + 1)..p {
                    let mut up = theta.clone();
                    up.set(i, j, theta.get(i, j) + h);
                    let mut dn = theta.clone();
                    dn.set(i, j, theta.get(i, j) - h);
                    let fd = (ising_logpartition(&up).unwrap().0 - ising_logpartition(&dn).unwrap().0) / (2.0 * h);
                    // one packed coordinate moves both (i, j) and (j, i)
                    worst = worst.max((fd / 2.0 - m.get(i, j)).abs());
                }
            }
        }
    }
    let x = SymMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 0.5 });
    let t = estimators::ising_pmle(&x, 0.0, &SolverOptions::default())
        .map(|r| r.theta_matrix().unwrap().get(0, 1))
        .unwrap_or(f64::NAN);
    let err = (t - 0.5f64.atanh() / 2.0).abs();
    Outcome {
        pass: worst <= 1e-6 && err <= 1e-8,
        detail: format!("gradient error {worst:.2e}, two-spin error {err:.2e}"),
    }
}

fn decomposition_benchmark() -> Outcome {
    let (x, planted, lambda) = planted_benchmark(SEED, 200, 10);
    let spec = EstimatorSpec::glasso(lambda);
    let t = Instant::now();
    let direct = estimators::solve(&spec, &Input::Matrix(x.clone()));
    let direct_time = t.elapsed();
    let t = Instant::now();
    let decomposed = estimators::solve_decomposed(&spec, &x);
    let decomposed_time = t.elapsed();
    let (direct, decomposed) = match (direct, decomposed) {
        (Ok(a), Ok(b)) => (a, b),
        (a, b) => {
            return Outcome {
                pass: false,
                detail: format!("solver failure: direct {:?}, decomposed {:?}", a.err(), b.err()),
            }
        }
    };
    let dev = direct
        .theta_matrix()
        .unwrap()
        .max_abs_diff(decomposed.theta_matrix().unwrap())
        .unwrap();
    let speedup = direct_time.as_secs_f64() / decomposed_time.as_secs_f64().max(1e-9);
    let blocks = slc_partition(&x.abs(), lambda).num_blocks();
    Outcome {
        pass: dev <= 1e-5,
        detail: format!(
            "p=200, planted {} blocks, found {blocks}, λ={lambda:.4}, deviation {dev:.2e}, direct {:.2}s, decomposed {:.3}s, speedup {speedup:.1}x (soft gate >= 3x: {})",
            planted.num_blocks(),
            direct_time.as_secs_f64(),
            decomposed_time.as_secs_f64(),
            if speedup >= 3.0 { "met" } else { "not met" }
        ),
    }
}

fn two_communities() -> Outcome {
    let p = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let labels: Vec<usize> = {
        let mut l: Vec<usize> = (0..p).map(|i| i % 2).collect();
        rand::seq::SliceRandom::shuffle(l.as_mut_slice(), &mut rng);
        l
    };
    let x = SymMatrix::from_fn(p, |i, j| {
        if i == j {
            1.0
        } else if labels[i] == labels[j] {
            0.6
        } else {
            0.05
        }
    });
    let truth = Partition::from_labels(&labels);
    let lambda = 0.3;
    let a = slc_partition(&x.abs(), lambda);
    let g = estimators::solve(&EstimatorSpec::glasso(lambda), &Input::Matrix(x.clone()))
        .map(|r| support_components(r.theta_matrix().unwrap()));
    let f = estimators::solve(&EstimatorSpec::fantope(lambda, 2), &Input::Matrix(x.clone()))
        .map(|r| support_components(r.theta_matrix().unwrap()));
    let ok = a == truth && g.as_ref() == Ok(&truth) && f.as_ref() == Ok(&truth);
    Outcome {
        pass: ok,
        detail: format!(
            "blocks: slc {}, glasso {:?}, fantope {:?}",
            a.num_blocks(),
            g.map(|p| p.num_blocks()),
            f.map(|p| p.num_blocks())
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 exact thresholding", exact_thresholding, Duration::from_secs(120)),
        ("2 sufficiency equivalence", sufficiency_equivalence, Duration::from_secs(300)),
        ("3 fantope support containment", fantope_containment, Duration::from_secs(120)),
        ("4 slc minimality", slc_minimality, Duration::from_secs(60)),
        ("5 ultrametric iff psd", ultrametric_psd, Duration::from_secs(10)),
        ("6 arcsin in cut polytope", arcsin_in_cut, Duration::from_secs(60)),
        ("7 closed-form chains", closed_form_chains, Duration::from_secs(5)),
        ("8 ising oracle", ising_oracle, Duration::from_secs(30)),
        ("9 decomposition benchmark", decomposition_benchmark, Duration::from_secs(600)),
        ("10 two-community structure", two_communities, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let t = Instant::now();
        let out = run();
        let elapsed = t.elapsed();
        let within = elapsed <= budget;
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {name}: {status} ({:.2}s, budget {}s{}) {}",
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if within { "" } else { ", over budget" },
            out.detail
        );
        failed += usize::from(!out.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
