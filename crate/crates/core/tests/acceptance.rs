//! End-to-end acceptance checks. Each check writes one PASS/FAIL line to
//! stderr (bypassing output capture) before asserting.

use std::io::Write;
use std::sync::OnceLock;

use vsgof::distributions::{closed_form_entropy, fit_mle};
use vsgof::edf::TestId;
use vsgof::power::{parse_scenarios, run_power_study, PowerScenario, PowerTable, PowerTest};
use vsgof::special::std_normal_cdf;
use vsgof::vs::{candidate_range, elr_log_statistic, elr_options, select_window};
use vsgof::{
    vasicek_estimate, vs_test, Distribution, Error, Family, PValueMethod, ParamVector, Sample,
    SeedTree, TestOptions,
};

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id:>2} [{verdict}] {title}: {detail}");
}

const TABLE3: &str = "\
alpha = 0.05
replicates = 1000
B = 500
n = 20, 30, 50, 100

[par-1-1]
alternative = lognormal
alternative_params = 0, 1
alternative_shift = 1
null = pareto
null_params = 1, 1
seed = 11

[par-0.8]
alternative = lognormal
alternative_params = 0, 1.25
alternative_shift = 1
null = pareto
null_params = 0.8, 1
seed = 12

[weibull-1.2]
alternative = weibull
alternative_params = 1.2, 2
null = exponential
null_params = 0.5
seed = 13

[weibull-1.3]
alternative = weibull
alternative_params = 1.3, 2
null = exponential
null_params = 0.5
seed = 14
";

fn scenarios() -> &'static Vec<PowerScenario> {
    static S: OnceLock<Vec<PowerScenario>> = OnceLock::new();
    S.get_or_init(|| parse_scenarios(TABLE3).expect("bundled scenarios parse"))
}

// Each block is simulated once and shared by the checks that need it.
fn table(name: &str) -> &'static PowerTable {
    static TABLES: OnceLock<Vec<(String, OnceLock<PowerTable>)>> = OnceLock::new();
    let cells = TABLES.get_or_init(|| {
        scenarios()
            .iter()
            .map(|s| (s.name.clone(), OnceLock::new()))
            .collect()
    });
    let (_, cell) = cells
        .iter()
        .find(|(n, _)| n == name)
        .expect("known scenario");
    cell.get_or_init(|| {
        let sc = scenarios().iter().find(|s| s.name == name).unwrap();
        run_power_study(sc).expect("power study runs")
    })
}

const ALL_TESTS: [PowerTest; 4] = [
    PowerTest::Vs,
    PowerTest::Edf(TestId::Ks),
    PowerTest::Edf(TestId::Cvm),
    PowerTest::Edf(TestId::Ad),
];

#[test]
fn criterion_01_pareto_lognormal_power() {
    let t = table("par-1-1");
    let targets = [(20, 59.79), (30, 77.66), (50, 94.02), (100, 99.99)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, paper) in targets {
        let got = t.power("par-1-1", n, PowerTest::Vs).unwrap();
        ok &= (got - paper).abs() <= 4.5;
        detail.push(format!("n={n} {got:.2} vs {paper}"));
    }
    report(
        1,
        "VS power, Pareto(1,1) vs 1+LN(0,1)",
        ok,
        &detail.join(", "),
    );
    assert!(ok, "{detail:?}");
}

#[test]
fn criterion_02_weibull_power() {
    let t = table("weibull-1.3");
    let targets = [
        (PowerTest::Vs, 67.14),
        (PowerTest::Edf(TestId::Ks), 21.91),
        (PowerTest::Edf(TestId::Ad), 34.67),
        (PowerTest::Edf(TestId::Cvm), 24.60),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (test, paper) in targets {
        let got = t.power("weibull-1.3", 100, test).unwrap();
        ok &= (got - paper).abs() <= 5.0;
        detail.push(format!("{} {got:.2} vs {paper}", test.name()));
    }
    report(2, "Exp(1/2) vs W(1.3,2) at n=100", ok, &detail.join(", "));
    assert!(ok, "{detail:?}");
}

#[test]
fn criterion_03_vs_dominates_edf() {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut where_worst = String::new();
    for sc in scenarios() {
        let t = table(&sc.name);
        for &n in &sc.n_values {
            let vs = t.power(&sc.name, n, PowerTest::Vs).unwrap();
            for test in &ALL_TESTS[1..] {
                let edf = t.power(&sc.name, n, *test).unwrap();
                let margin = vs - (edf - 3.0);
                if margin < worst {
                    worst = margin;
                    where_worst = format!(
                        "{} n={n} vs {}: {vs:.2} against {edf:.2}",
                        sc.name,
                        test.name()
                    );
                }
                ok &= vs >= edf - 3.0;
            }
        }
    }
    report(
        3,
        "VS power at least EDF power minus 3 points",
        ok,
        &format!("tightest cell {where_worst}"),
    );
    assert!(ok, "{where_worst}");
}

#[test]
fn criterion_04_null_calibration() {
    let root = SeedTree::new(404);
    let normal = Distribution::new(Family::Normal, &ParamVector::new([1.0, 2.0])).unwrap();
    let reps = 2000;
    let mut rejected = 0;
    for r in 0..reps {
        let x = Sample::new(normal.sample(200, &mut root.child(r).stream())).unwrap();
        let rep = vs_test(&x, Family::Normal, &TestOptions::default()).unwrap();
        assert_eq!(rep.p_value_method, PValueMethod::Asymptotic);
        rejected += usize::from(rep.p_value <= 0.05);
    }
    let asym = rejected as f64 / reps as f64;

    let root = SeedTree::new(405);
    let exp = Distribution::new(Family::Exponential, &ParamVector::new([1.0])).unwrap();
    let reps = 1000;
    let mut rejected = 0;
    for r in 0..reps {
        let x = Sample::new(exp.sample(40, &mut root.child(r).stream())).unwrap();
        let opts = TestOptions {
            fixed_params: Some(ParamVector::new([1.0])),
            replicates: 500,
            seed: root.child(r).child(1).seed(),
            ..TestOptions::default()
        };
        let rep = vs_test(&x, Family::Exponential, &opts).unwrap();
        assert_eq!(rep.p_value_method, PValueMethod::MonteCarlo);
        rejected += usize::from(rep.p_value <= 0.05);
    }
    let mc = rejected as f64 / reps as f64;
    let ok = (0.03..=0.08).contains(&asym) && (0.03..=0.08).contains(&mc);
    report(
        4,
        "rejection rate under the null",
        ok,
        &format!("composite normal asymptotic {asym:.4}, simple exponential Monte-Carlo {mc:.4}"),
    );
    assert!(ok);
}

#[test]
fn criterion_05_asymptotic_normality() {
    let root = SeedTree::new(505);
    let unif = Distribution::new(Family::Uniform, &ParamVector::new([0.0, 1.0])).unwrap();
    let opts = TestOptions {
        fixed_params: Some(ParamVector::new([0.0, 1.0])),
        simulate_p_value: Some(false),
        ..TestOptions::default()
    };
    let mut z: Vec<f64> = (0..2000)
        .map(|r| {
            let x = Sample::new(unif.sample(500, &mut root.child(r).stream())).unwrap();
            let rep = vs_test(&x, Family::Uniform, &opts).unwrap();
            let m = rep.optimal_window as f64;
            (6.0 * m * 500.0).sqrt() * (rep.statistic - rep.bias.unwrap())
        })
        .collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let d = z
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = std_normal_cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let ok = d < 0.05;
    report(
        5,
        "standardized statistic close to N(0,1)",
        ok,
        &format!("KS distance {d:.4}"),
    );
    assert!(ok);
}

#[test]
fn criterion_06_estimator_exactness() {
    let x = Sample::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let v = vasicek_estimate(&x, 1).unwrap();
    let e1 = (v - 1.5 * 2f64.ln()).abs();
    let p = fit_mle(Family::Pareto, &[1.0, 2.0, 4.0]).unwrap().params;
    let e2 = (p.0[0] - 1.0 / 2f64.ln()).abs().max((p.0[1] - 1.0).abs());
    let r = fit_mle(Family::Exponential, &[1.0, 2.0, 3.0])
        .unwrap()
        .params;
    let e3 = (r.0[0] - 0.5).abs();
    let ok = e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-12;
    report(
        6,
        "hand-computed estimates",
        ok,
        &format!("errors {e1:.1e}, {e2:.1e}, {e3:.1e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_known_entropies() {
    let hn = closed_form_entropy(Family::Normal, &ParamVector::new([0.0, 1.0])).unwrap();
    let hp = closed_form_entropy(Family::Pareto, &ParamVector::new([2.0, 1.0])).unwrap();
    let round6 = |v: f64| (v * 1e6).round() / 1e6;
    let closed_ok = round6(hn) == 1.418939 && round6(hp - 0.8068528) == 0.0;

    let n = 10_000;
    let m = 10;
    let draw = |f: Family, p: [f64; 2], seed: u64| {
        let d = Distribution::new(f, &ParamVector::new(p)).unwrap();
        Sample::new(d.sample(n, &mut SeedTree::new(seed).stream())).unwrap()
    };
    let vn = vasicek_estimate(&draw(Family::Normal, [0.0, 1.0], 71), m).unwrap();
    let vp = vasicek_estimate(&draw(Family::Pareto, [2.0, 1.0], 72), m).unwrap();
    let est_ok = (vn - hn).abs() <= 0.05 && (vp - hp).abs() <= 0.05;
    let ok = closed_ok && est_ok;
    report(
        7,
        "closed-form and estimated entropies",
        ok,
        &format!("normal {hn:.6} (V={vn:.4}), Pareto {hp:.7} (V={vp:.4}), n={n}, m={m}"),
    );
    assert!(ok);
}

// Exhaustive search written against the public estimator only.
fn enumerate_window(x: &Sample, null: &Distribution, hi: usize) -> Option<usize> {
    let bound = -null.mean_log_density(x.values());
    let mut best: Option<(usize, f64)> = None;
    for m in 1..=hi {
        let Ok(v) = vasicek_estimate(x, m) else {
            continue;
        };
        if v <= bound && best.is_none_or(|(_, b)| v > b) {
            best = Some((m, v));
        }
    }
    best.map(|(m, _)| m)
}

#[test]
fn criterion_08_window_rule_oracle() {
    let root = SeedTree::new(808);
    let cases = [
        (Family::Normal, vec![0.0, 1.0], -0.4),
        (Family::Exponential, vec![2.0], 0.0),
        (Family::Laplace, vec![1.0, 0.5], -0.5),
        (Family::LogNormal, vec![0.0, 0.7], 1.0 / 12.0),
        (Family::Weibull, vec![1.5, 1.0], -0.6),
    ];
    let mut matched = 0;
    let total = 500;
    for k in 0..total {
        let (f, p, delta) = &cases[k % cases.len()];
        let node = root.child(k as u64);
        let n = 5 + (node.seed() % 26) as usize;
        let xs = Distribution::new(*f, &ParamVector::new(p.clone()))
            .unwrap()
            .sample(n, &mut node.stream());
        let fit = fit_mle(*f, &xs).unwrap();
        let null = Distribution::new(*f, &fit.params).unwrap();
        let x = Sample::new(xs).unwrap();
        let opts = TestOptions {
            delta: Some(*delta),
            ..TestOptions::default()
        };
        let (_, hi) = candidate_range(n, *delta, false).unwrap();
        let expected = enumerate_window(&x, &null, hi);
        let got = match select_window(&x, &null, &opts) {
            Ok((m, _)) => Some(m),
            Err(Error::ConstraintViolated) | Err(Error::TooManyTies { .. }) => None,
            Err(e) => panic!("instance {k}: {e}"),
        };
        matched += usize::from(got == expected);
    }
    let ok = matched == total;
    report(
        8,
        "window selection matches enumeration",
        ok,
        &format!("{matched}/{total} instances"),
    );
    assert!(ok);
}

#[test]
fn criterion_09_elr_identity() {
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let n = 10 + (seed as usize % 90);
        let d = Distribution::new(Family::Laplace, &ParamVector::new([0.0, 1.0])).unwrap();
        let x = Sample::new(d.sample(n, &mut SeedTree::new(seed).stream())).unwrap();
        let opts = TestOptions {
            simulate_p_value: Some(false),
            ..elr_options(&x)
        };
        let rep = vs_test(&x, Family::Normal, &opts).unwrap();
        let (log_v, _) = elr_log_statistic(&x, &rep.window_scan).unwrap();
        let gap = (n as f64 * rep.statistic + 0.5 - log_v).abs() / log_v.abs().max(1.0);
        worst = worst.max(gap);
    }
    let ok = worst <= 1e-10;
    report(
        9,
        "n I + 1/2 equals log V_n",
        ok,
        &format!("largest relative gap {worst:.2e} over 200 samples"),
    );
    assert!(ok);
}

#[test]
fn criterion_10_determinism() {
    let in_pool = |threads: usize, f: &(dyn Fn() -> String + Sync)| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(f)
    };
    let x = {
        let d = Distribution::new(Family::Gamma, &ParamVector::new([2.0, 1.5])).unwrap();
        Sample::new(d.sample(60, &mut SeedTree::new(10).stream())).unwrap()
    };
    let test_run = || {
        let opts = TestOptions {
            replicates: 400,
            seed: 1010,
            ..TestOptions::default()
        };
        format!("{:?}", vs_test(&x, Family::Gamma, &opts).unwrap())
    };
    let power_run = || {
        let mut sc = scenarios()[0].clone();
        sc.replicates = 60;
        sc.inner_replicates = 100;
        sc.n_values = vec![20, 50];
        format!("{:?}", run_power_study(&sc).unwrap())
    };
    let mut ok = true;
    for f in [&test_run as &(dyn Fn() -> String + Sync), &power_run] {
        let base = in_pool(1, f);
        ok &= in_pool(2, f) == base && in_pool(8, f) == base;
    }
    report(
        10,
        "identical reports for 1, 2 and 8 workers",
        ok,
        "test and power runs compared",
    );
    assert!(ok);
}
