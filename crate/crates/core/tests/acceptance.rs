//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::Parser;
use julia_pressure::bowen::{bowen_root, BowenOptions};
use julia_pressure::cli::{self, Cli};
use julia_pressure::periodic::passes_filter;
use julia_pressure::pressure::{
    lyapunov_exponent, measure_integral, orbit_measure, p_p, p_p_c_limit, separated_series, DEFAULT_WINDOW,
};
use julia_pressure::separated::{SeparatedOptions, SeparatedSets};
use julia_pressure::{
    brute_force_membership, filter_per_alpha_c, find_periodic, inverse_iteration_sample, Complex64, FilterParams,
    PeriodicEnumerator, PeriodicPoint, Potential, RationalMap, SearchOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::LN_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn quadratic(c: f64) -> RationalMap {
    RationalMap::quadratic(Complex64::new(c, 0.0))
}

fn enumerator(map: RationalMap, count: usize) -> Result<PeriodicEnumerator, String> {
    let sample = ok(inverse_iteration_sample(&map, count, 64, 7))?;
    Ok(PeriodicEnumerator::new(map, sample, SearchOptions::default()))
}

fn all_points(e: &mut PeriodicEnumerator, n_max: usize) -> Result<Vec<PeriodicPoint>, String> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        out.extend_from_slice(&ok(e.find(n))?.points);
    }
    Ok(out)
}

fn params(alpha: f64, c: f64) -> Result<FilterParams, String> {
    ok(FilterParams::new(alpha, c))
}

fn entropy_of_z2() -> Outcome {
    let mut e = enumerator(RationalMap::power(2).unwrap(), 2000)?;
    let est = ok(p_p(&mut e, &Potential::zero(), &params(0.5, 1.0)?, 1..=12, 1))?;
    let v = est.value_at(12).ok_or("no n = 12 entry")?;
    let exact = 4095f64.ln() / 12.0;
    ensure!((v - exact).abs() < 1e-12, "value {v} differs from ln(4095)/12 = {exact}");
    ensure!((v - LN_2).abs() <= 1e-3, "|{v} - ln 2| > 0.001");
    Ok(format!("value_12 = {v:.9}, ln 2 = {LN_2:.9}"))
}

fn linear_family(d: usize) -> Outcome {
    let mut e = enumerator(RationalMap::power(d).unwrap(), 2000)?;
    let log_d = (d as f64).ln();
    let p = params(0.2, 0.5)?;
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.5, 1.0] {
        let est = ok(p_p(&mut e, &Potential::NegTLogAbsDeriv(t), &p, 1..=12, 1))?;
        let v = est.value_at(12).ok_or("no n = 12 entry")?;
        let target = (1.0 - t) * log_d;
        ensure!((v - target).abs() <= 2e-3, "z^{d}, t = {t}: {v} vs {target}");
        worst = worst.max((v - target).abs());
    }
    let r = ok(bowen_root(&mut e, &p, 1..=12, &BowenOptions::new((0.5, 1.5))))?;
    ensure!((r.t_star - 1.0).abs() <= 0.02, "z^{d}: t* = {}", r.t_star);
    Ok(format!("max |p_p - (1-t) ln {d}| = {worst:.2e}, t* = {:.5} (n = {})", r.t_star, r.n_used))
}

fn two_estimators_agree() -> Outcome {
    let map = quadratic(-1.0);
    let sample = ok(inverse_iteration_sample(&map, 20_000, 64, 7))?;
    let phi = Potential::NegTLogAbsDeriv(0.5);
    let mut e = PeriodicEnumerator::new(map.clone(), sample.clone(), SearchOptions::default());
    let pp = ok(p_p_c_limit(&mut e, &phi, 0.2, &[1.0, 0.5, 0.25], 1..=12, DEFAULT_WINDOW, 1e-3))?;
    let cs = &pp.diagnostics.c_series;
    for w in cs.windows(2) {
        ensure!(w[1].value >= w[0].value - 1e-9, "c-series decreases: {:?}", cs);
    }
    let sets = ok(SeparatedSets::build(&map, &phi, &sample, 12, &SeparatedOptions::new(0.02)))?;
    let sep = ok(separated_series(&sets, 1.0, DEFAULT_WINDOW))?;
    let diff = (pp.value - sep.value).abs();
    ensure!(diff <= 0.05, "P_P = {} vs separated {} (diff {diff})", pp.value, sep.value);
    let series: Vec<String> = cs.iter().map(|c| format!("{}:{:.5}", c.c, c.value)).collect();
    Ok(format!(
        "P_P = {:.5}, separated = {:.5}, diff = {diff:.5}, c-series [{}]",
        pp.value,
        sep.value,
        series.join(", ")
    ))
}

fn filter_matches_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut maps = Vec::new();
    for c in [0.0, -1.0] {
        let map = quadratic(c);
        let points = all_points(&mut enumerator(map.clone(), 2000)?, 8)?;
        maps.push((map, points));
    }
    let (mut checked, mut boundary) = (0usize, 0usize);
    for _ in 0..200 {
        let alpha = rng.gen_range(0.01..0.7);
        let c = rng.gen_range(0.3..1.0);
        let p = params(alpha, c)?;
        for (map, points) in &maps {
            let kept = ok(filter_per_alpha_c(points, map, &p))?;
            for q in points {
                let margin = (q.log_abs_multiplier - q.period as f64 * alpha).exp();
                if margin > 0.98 && margin < 1.02 {
                    boundary += 1;
                    eprintln!("  boundary: z = {:.6}, n = {}, alpha = {alpha:.4}, c = {c:.4}, |l|e^(-n alpha) = {margin:.4}", q.z, q.period);
                    continue;
                }
                let reduced = kept.iter().any(|k| k.z == q.z);
                let brute = ok(brute_force_membership(q, map, &p, 500))?;
                ensure!(
                    reduced == brute,
                    "z = {}, n = {}, alpha = {alpha}, c = {c}: reduction {reduced}, brute force {brute}",
                    q.z,
                    q.period
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} cases agree, {boundary} boundary cases logged"))
}

fn filter_is_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let maps: Vec<(RationalMap, Vec<PeriodicPoint>)> = [0.0, -1.0, 0.2, -0.12]
        .into_iter()
        .map(|c| {
            let map = quadratic(c);
            let points = all_points(&mut enumerator(map.clone(), 2000)?, 8)?;
            Ok((map, points))
        })
        .collect::<Result<_, String>>()?;
    for i in 0..500 {
        let (a1, a2) = (rng.gen_range(0.0..0.8), rng.gen_range(0.0..0.8));
        let (c1, c2) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
        let strict = params(f64::max(a1, a2), f64::max(c1, c2))?;
        let loose = params(f64::min(a1, a2), f64::min(c1, c2))?;
        let (map, points) = &maps[i % maps.len()];
        for q in points {
            if ok(passes_filter(q, map, &strict))? && !ok(passes_filter(q, map, &loose))? {
                return Err(format!("z = {} passes ({strict:?}) but not ({loose:?})", q.z));
            }
        }
    }
    Ok("500 pairs nested".into())
}

fn lower_bound_inequality() -> Outcome {
    let mut lines = Vec::new();
    let p = params(0.2, 0.25)?;
    for c in [0.0, -1.0] {
        let map = quadratic(c);
        let sample = ok(inverse_iteration_sample(&map, 20_000, 64, 7))?;
        let mut e = PeriodicEnumerator::new(map.clone(), sample.clone(), SearchOptions::default());
        for phi in [Potential::zero(), Potential::NegTLogAbsDeriv(0.5)] {
            let pp = ok(p_p(&mut e, &phi, &p, 1..=10, 1))?.value_at(10).ok_or("no n = 10")?;
            let sets = ok(SeparatedSets::build(&map, &phi, &sample, 10, &SeparatedOptions::new(0.02)))?;
            let sep = sets.rate(10, 1.0);
            ensure!(pp <= sep + 0.1, "c = {c}, phi = {phi}: {pp} > {sep} + 0.1");
            lines.push(format!("{pp:.4} <= {sep:.4}+0.1"));
        }
    }
    Ok(lines.join(", "))
}

fn measures() -> Outcome {
    let alpha = 0.2;
    let p = params(alpha, 0.25)?;
    let (mut count, mut min_chi) = (0usize, f64::INFINITY);
    for c in [0.0, -1.0] {
        let map = quadratic(c);
        let mut e = enumerator(map.clone(), 2000)?;
        for n in 1..=10 {
            let set = ok(e.find(n))?;
            let kept = ok(filter_per_alpha_c(&set.points, &map, &p))?;
            if kept.is_empty() {
                continue;
            }
            for phi in [Potential::zero(), Potential::NegTLogAbsDeriv(0.5)] {
                let mu = ok(orbit_measure(&kept, &map, &phi))?;
                let total: f64 = mu.weights.iter().sum();
                ensure!((total - 1.0).abs() <= 1e-12, "c = {c}, n = {n}: weights sum to {total}");
                let chi = ok(lyapunov_exponent(&mu))?;
                ensure!(chi >= alpha, "c = {c}, n = {n}: chi = {chi} < alpha");
                min_chi = min_chi.min(chi);
                count += 1;
            }
        }
    }
    let map = RationalMap::power(2).unwrap();
    let mut e = enumerator(map.clone(), 2000)?;
    let kept = ok(filter_per_alpha_c(&ok(e.find(3))?.points, &map, &p))?;
    let mu = ok(orbit_measure(&kept, &map, &Potential::zero()))?;
    let chi = ok(lyapunov_exponent(&mu))?;
    ensure!((chi - LN_2).abs() <= 1e-9, "chi(sigma_3) on z^2 = {chi}");
    let re = ok(measure_integral(&mu, &map, &Potential::CoordRe))?;
    ensure!(re.abs() <= 1e-9, "integral of Re z = {re}");
    Ok(format!("{count} measures, min chi = {min_chi:.4}, z^2: chi - ln 2 = {:.1e}, int Re z = {re:.1e}", chi - LN_2))
}

fn constant_shift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let map = quadratic(-1.0);
    let sample = ok(inverse_iteration_sample(&map, 5000, 64, 7))?;
    let mut e = PeriodicEnumerator::new(map.clone(), sample.clone(), SearchOptions::default());
    let phi = Potential::NegTLogAbsDeriv(0.5);
    let p = params(0.2, 0.25)?;
    let opts = SeparatedOptions::new(0.05);
    let base_pp = ok(p_p(&mut e, &phi, &p, 1..=10, 1))?;
    let base_sep = ok(separated_series(&ok(SeparatedSets::build(&map, &phi, &sample, 10, &opts))?, 1.0, 1))?;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let k = rng.gen_range(-2.0..2.0);
        let shifted = Potential::sum(phi.clone(), Potential::Const(k));
        let pp = ok(p_p(&mut e, &shifted, &p, 1..=10, 1))?;
        let sep = ok(separated_series(&ok(SeparatedSets::build(&map, &shifted, &sample, 10, &opts))?, 1.0, 1))?;
        for (a, b) in base_pp.series.iter().zip(&pp.series).chain(base_sep.series.iter().zip(&sep.series)) {
            let err = (b.value_n - a.value_n - k).abs();
            ensure!(err <= 1e-9, "K = {k}, n = {}: shift error {err}", a.n);
            worst = worst.max(err);
        }
    }
    Ok(format!("5 shifts, max error {worst:.1e}"))
}

fn enumeration_complete() -> Outcome {
    let map = RationalMap::power(2).unwrap();
    let sample = ok(inverse_iteration_sample(&map, 2000, 64, 7))?;
    for n in 1..=12 {
        let set = ok(find_periodic(&map, n, &sample, &SearchOptions::default()))?;
        ensure!(set.report.found == 1 << n, "z^2, n = {n}: found {}", set.report.found);
    }
    let map = quadratic(-1.0);
    let sample = ok(inverse_iteration_sample(&map, 2000, 64, 7))?;
    let mut worst = 1.0f64;
    for n in 1..=10 {
        let r = ok(find_periodic(&map, n, &sample, &SearchOptions::default()))?.report;
        let expected = 1usize << n;
        ensure!(r.found * 100 >= expected * 95, "z^2 - 1, n = {n}: found {} of {expected}", r.found);
        ensure!(r.complete == (r.found == expected), "z^2 - 1, n = {n}: completeness flag wrong");
        worst = worst.min(r.found as f64 / expected as f64);
    }
    Ok(format!("z^2 exact to n = 12, z^2 - 1 worst ratio {worst}"))
}

fn files(dir: &Path, prefix: &Path, out: &mut Vec<(String, Vec<u8>)>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            files(&path, prefix, out)?;
        } else {
            let name = path.strip_prefix(prefix).unwrap().display().to_string();
            out.push((name, std::fs::read(&path)?));
        }
    }
    out.sort();
    Ok(())
}

fn deterministic_compare() -> Outcome {
    let tmp = ok(tempfile::tempdir())?;
    let config = tmp.path().join("run.toml");
    ok(std::fs::write(
        &config,
        "[map]\nnumerator = [-1, 0, 1]\n\n[run]\nn_max = 9\nalpha = 0.2\n\n[sample]\ncount = 4000\nseed = 3\n\n[separated]\nepsilon_schedule = [0.05]\n",
    ))?;
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let argv = ["julia-pressure", "compare", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
        let code = cli::run(ok(Cli::try_parse_from(argv))?);
        ensure!(code == 0, "compare run {name} exited with {code}");
        let mut contents = Vec::new();
        ok(files(&out, &out, &mut contents))?;
        runs.push(contents);
    }
    ensure!(!runs[0].is_empty(), "no artifacts written");
    let names_a: Vec<&String> = runs[0].iter().map(|f| &f.0).collect();
    let names_b: Vec<&String> = runs[1].iter().map(|f| &f.0).collect();
    ensure!(names_a == names_b, "artifact sets differ: {names_a:?} vs {names_b:?}");
    for (a, b) in runs[0].iter().zip(&runs[1]) {
        ensure!(a.1 == b.1, "{} differs between runs", a.0);
    }
    Ok(format!("{} artifacts byte-identical", runs[0].len()))
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "entropy of z^2", budget: secs(10), run: entropy_of_z2 },
        Criterion { id: 2, name: "linear family z^2", budget: secs(30), run: || linear_family(2) },
        Criterion { id: 2, name: "linear family z^3", budget: secs(30), run: || linear_family(3) },
        Criterion { id: 3, name: "two-estimator agreement", budget: secs(300), run: two_estimators_agree },
        Criterion { id: 4, name: "filter reduction oracle", budget: secs(60), run: filter_matches_oracle },
        Criterion { id: 5, name: "filter monotonicity", budget: None, run: filter_is_monotone },
        Criterion { id: 6, name: "periodic sum below separated sum", budget: None, run: lower_bound_inequality },
        Criterion { id: 7, name: "periodic orbit measures", budget: None, run: measures },
        Criterion { id: 8, name: "constant-shift covariance", budget: None, run: constant_shift },
        Criterion { id: 9, name: "enumeration completeness", budget: None, run: enumeration_complete },
        Criterion { id: 10, name: "deterministic compare", budget: None, run: deterministic_compare },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.1?}, budget {b:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{tag} criterion {:>2} {}: {detail} [{elapsed:.2?}]", c.id, c.name);
        failed += result.is_err() as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
