//! Acceptance suite: runs every shipped config once and checks the eleven
//! acceptance criteria against the outcomes. Prints one PASS/FAIL line per
//! criterion and exits nonzero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use cbf_cli::output::{artifacts, manifest};
use cbf_cli::run::identity_stats;
use cbf_cli::{parse_config, render_config, run_command, Outcome, RunConfig};
use cbf_core::domains::{cutoff_chi_at, cutoff_profile, quartic};
use cbf_core::lyapunov::dimension_bounds;
use cbf_core::par::{self, Execution};
use cbf_core::{make_grid, simulate, taylor_green, ForcingSpec, Model, PhysParams, Resolution, StepperConfig};

type Verdict = (bool, String);

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    let path = configs_dir().join(format!("{name}.ini"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Runs {
    outcomes: BTreeMap<String, Outcome>,
}

impl Runs {
    fn get(&mut self, name: &str) -> &Outcome {
        if !self.outcomes.contains_key(name) {
            let cfg = load(name);
            let t0 = Instant::now();
            let out = run_command(&cfg, cfg.experiment.kind()).unwrap_or_else(|e| panic!("{name}: {e}"));
            eprintln!("  ran {name} in {:.1}s", t0.elapsed().as_secs_f64());
            self.outcomes.insert(name.to_string(), out);
        }
        &self.outcomes[name]
    }

    fn value(&mut self, name: &str, key: &str) -> f64 {
        self.get(name).value(key).unwrap_or_else(|| panic!("{name}: no summary value {key}"))
    }
}

fn failed_reports(out: &Outcome) -> Vec<String> {
    out.reports.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect()
}

fn all_reports_pass(runs: &mut Runs, names: &[&str]) -> (bool, Vec<String>) {
    let mut bad = Vec::new();
    for n in names {
        for r in failed_reports(runs.get(n)) {
            bad.push(format!("{n}: {r}"));
        }
    }
    (bad.is_empty(), bad)
}

fn taylor_green_error(dt: f64, fold: bool) -> f64 {
    let grid = make_grid(16, 2.0 * PI, 2).unwrap();
    let (mu, alpha, beta) = (0.01, 0.1, 0.5);
    let params = PhysParams::new(mu, alpha, beta, 1, ForcingSpec::Zero).unwrap();
    let model = Model::with_folding(&grid, params, fold).unwrap();
    let u0 = taylor_green(&grid, 1.0);
    let rec = simulate(&model, &u0, &StepperConfig::new(dt, 1.0)).unwrap();
    let exact = u0.scale((-(2.0 * mu + alpha + beta)).exp());
    rec.final_state.sub(&exact).norm_h() / exact.norm_h()
}

fn c1_exact_solution(_: &mut Runs) -> Verdict {
    let err = taylor_green_error(1e-3, true);
    let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|dt| taylor_green_error(*dt, false)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = err < 1e-6 && orders.iter().all(|p| (p - 3.0).abs() <= 0.3);
    (ok, format!("rel err {err:.2e} at dt 1e-3; unfolded ladder orders {orders:.3?}"))
}

fn audit_orders(out: &Outcome) -> Vec<f64> {
    out.table("energy_audit")
        .map(|t| t.rows.iter().filter_map(|r| r[2].parse().ok()).collect())
        .unwrap_or_default()
}

fn c2_energy_audit(runs: &mut Runs) -> Verdict {
    let mut ok = true;
    let mut msg = Vec::new();
    for name in ["laminar_energy_audit", "chaotic_energy_audit"] {
        let out = runs.get(name);
        let rep = out.report("energy residual order deviation").expect("audit report");
        let g = out.value("grashof").unwrap();
        ok &= rep.pass;
        msg.push(format!("{name} G={g:.1} orders {:.3?}", audit_orders(out)));
    }
    (ok, msg.join("; "))
}

fn c3_absorbing(runs: &mut Runs) -> Verdict {
    let (pass, bad) = all_reports_pass(runs, &["absorbing"]);
    let out = runs.get("absorbing");
    let t = out.table("absorbing").expect("absorbing table");
    let entries: Vec<f64> = t.rows.iter().filter_map(|r| r[2].parse().ok()).collect();
    let full: Vec<f64> = t.rows.iter().filter_map(|r| r[3].parse().ok()).collect();
    let h0_max = t.rows.iter().filter_map(|r| r[1].parse::<f64>().ok()).fold(0.0, f64::max);
    let m1 = out.value("m1").unwrap();
    let ok = pass
        && t.rows.len() == 10
        && entries.len() == 10
        && entries.iter().all(|e| e.is_finite())
        && full.iter().all(|f| *f == 1.0)
        && (h0_max / m1 - 10.0).abs() < 1e-9;
    let t_b = entries.iter().cloned().fold(0.0, f64::max);
    (ok, format!("10 runs up to {:.1} M1, all times inside envelope, max entry time {t_b:.3}; failed {bad:?}", h0_max / m1))
}

fn c4_dissipation(runs: &mut Runs) -> Verdict {
    let mut names: Vec<String> = std::fs::read_dir(configs_dir())
        .unwrap()
        .filter_map(|e| e.ok()?.path().file_stem()?.to_str().map(String::from))
        .collect();
    names.sort();
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut skipped = Vec::new();
    for n in &names {
        let out = runs.get(n);
        let d: Vec<_> = out.reports.iter().filter(|r| r.name.starts_with("time-averaged dissipation")).collect();
        if d.is_empty() {
            // a zero-length spin-up has no time average to take
            let t_end = load(n).stepper.t_end;
            ok &= t_end == 0.0;
            skipped.push(n.clone());
            continue;
        }
        for r in d {
            ok &= r.pass && r.margin > 0.0;
            worst = worst.min(r.margin);
        }
    }
    (ok, format!("{} configs, smallest margin {worst:.3e}, no trajectory: {skipped:?}", names.len()))
}

fn c5_identities(_: &mut Runs) -> Verdict {
    let grid = make_grid(16, 2.0 * PI, 2).unwrap();
    let st = identity_stats(&grid, 2024, 1000).unwrap();
    let ok = st.stokes <= 1e-13
        && st.skew <= 1e-10
        && st.damping[0] <= 1e-12
        && st.damping[1] <= 1e-8
        && st.damping[2] <= 1e-12
        && st.monotone.iter().all(|m| *m >= -1e-12);
    (ok, format!(
        "1000 pairs: stokes {:.1e} skew {:.1e} damping {} monotone min {}",
        st.stokes,
        st.skew,
        sci(&st.damping),
        sci(&st.monotone)
    ))
}

fn c6_frechet(runs: &mut Runs) -> Verdict {
    let mut ok = true;
    let mut msg = Vec::new();
    for r in 1..=3 {
        let name = format!("frechet_r{r}");
        let slope = runs.get(&name).value("remainder_slope");
        let g = runs.value(&name, "grashof");
        ok &= slope.is_some_and(|s| (s - 2.0).abs() <= 0.1) && (g - 20.0).abs() < 2.0;
        msg.push(format!("r={r} G={g:.1} slope {slope:.4?}"));
    }
    (ok, msg.join("; "))
}

fn c7_lyapunov(runs: &mut Runs) -> Verdict {
    let (pass, bad) = all_reports_pass(runs, &["lyapunov_frozen_zero", "lyapunov_stable"]);
    let closed = runs.get("lyapunov_frozen_zero").report("frozen-zero exponents against closed form").map(|r| r.left);
    let mut sum_trace = Vec::new();
    for n in ["lyapunov_frozen_zero", "lyapunov_stable", "lyapunov_reference", "lyapunov_check_a", "lyapunov_check_b"] {
        sum_trace.push((runs.value(n, "exponent_sum") - runs.value(n, "mean_trace")).abs());
    }
    let stable = runs.get("lyapunov_stable");
    let m = (1..).take_while(|i| stable.value(&format!("lambda_{i}")).is_some()).count();
    let top = stable.value("lambda_1").unwrap();
    let d_ky = stable.value("d_ky").unwrap();
    let ok = pass
        && closed.is_some_and(|e| e <= 1e-8)
        && sum_trace.iter().all(|d| *d <= 1e-6)
        && m > 0
        && top < 0.0
        && d_ky == 0.0;
    (ok, format!("closed form err {}; |sum - trace| {}; stable lambda_1 {top:.4} d_KY {d_ky} over {m}; failed {bad:?}", sci(&closed.into_iter().collect::<Vec<_>>()), sci(&sum_trace)))
}

fn c8_dimension(runs: &mut Runs) -> Verdict {
    let kappa = runs.value("lyapunov_reference", "kappa_calibrated");
    let mut ok = kappa > 0.0;
    let mut msg = vec![format!("kappa {kappa:.3e}")];
    let mut params = Vec::new();
    for n in ["lyapunov_check_a", "lyapunov_check_b"] {
        let mu = runs.value(n, "mu");
        let f = runs.value(n, "forcing_dual_norm");
        let d_ky = runs.value(n, "d_ky");
        let trace_dim = runs.get(n).value("trace_dimension");
        let saturated = runs.get(n).summary.iter().any(|(k, v)| k == "d_ky_saturated" && v == "true");
        let b = dimension_bounds(mu, 1.0, f, kappa);
        ok &= !saturated && d_ky <= b.dim_f && trace_dim.is_some_and(|d| d <= b.dim_h.ceil());
        params.push((mu, f));
        msg.push(format!("{n}: d_KY {d_ky:.3} <= {:.2}, trace dim {trace_dim:?} <= {}", b.dim_f, b.dim_h.ceil()));
    }
    ok &= params[0].0 != params[1].0 && params[0].1 != params[1].1;

    let unit = dimension_bounds(1.0, 1.0, 1.0, 1.0);
    let zero = dimension_bounds(1.0, 1.0, 0.0, 1.0);
    let (a, h) = (dimension_bounds(0.04, 1.0, 0.3, 2.5), dimension_bounds(0.02, 1.0, 0.3, 2.5));
    let formula = unit.dim_h == 2.0
        && unit.dim_f == 6.0
        && unit.grashof == 1.0
        && zero.dim_h == 1.0
        && zero.dim_f == 2.0
        && zero.grashof == 0.0
        && (h.grashof / a.grashof - 4.0).abs() < 1e-12
        && ((h.dim_h - 1.0) / (a.dim_h - 1.0) - 16.0).abs() < 1e-12
        && ((h.dim_f_grashof - 2.0) / (a.dim_f_grashof - 2.0) - 16.0).abs() < 1e-12
        && (a.dim_h - a.dim_h_grashof).abs() < 1e-12 * a.dim_h
        && (a.dim_f - a.dim_f_grashof).abs() < 1e-12 * a.dim_f;
    ok &= formula;
    msg.push(format!("grashof scaling {}", if formula { "exact" } else { "wrong" }));
    (ok, msg.join("; "))
}

fn c9_cutoff(_: &mut Runs) -> Verdict {
    let mut ok = true;
    let mut msg = Vec::new();
    for n in [128, 256] {
        let grid = make_grid(n, 2.0 * PI, 2).unwrap();
        let h = grid.period() / n as f64;
        for radius in [grid.period() / 8.0, grid.period() / 4.0] {
            let c = cutoff_chi_at(&grid, radius, Resolution::Native).unwrap();
            let g = c.max_gradient() * radius;
            // sampling can only see the gradient at grid points; slack covers one cell
            ok &= g <= 12.0 + h / radius;
            msg.push(format!("N={n} R={radius:.3}: {g:.4}"));
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..=100 {
        let s = 1.0 + 0.5 * i as f64 / 100.0;
        let want = (s - 1.0).powi(2) * (2.0 - s).powi(2);
        worst = worst.max((cutoff_profile(s).0 - want).abs()).max((quartic(s) - want).abs());
    }
    ok &= worst <= 1e-12 && cutoff_profile(0.5).0 == 0.0 && cutoff_profile(4.0).0 == 1.0;
    msg.push(format!("quartic spot checks {worst:.1e}"));
    (ok, msg.join("; "))
}

fn c10_semicontinuity(runs: &mut Runs) -> Verdict {
    let (pass, bad) = all_reports_pass(runs, &["semicontinuity"]);
    let out = runs.get("semicontinuity");
    let rungs = out.table("ladder").map(|t| t.rows.len()).unwrap_or(0);
    let names = [
        "masked forcing gap strictly decreasing",
        "tail energy decreasing in radius",
        "semidistance trend",
        "final semidistance",
    ];
    let present = names.iter().all(|n| out.report(n).is_some());
    let last = out.report("final semidistance").map(|r| (r.left, r.right));
    (pass && present && rungs == 4, format!("{rungs} rungs; final semidistance vs eps {}; failed {bad:?}", sci(&last.map(|(a, b)| vec![a, b]).unwrap_or_default())))
}

fn manifest_for(name: &str, mode: Execution) -> String {
    par::set_execution(mode);
    let cfg = load(name);
    let out = run_command(&cfg, cfg.experiment.kind()).unwrap();
    par::set_execution(Execution::Parallel);
    manifest(&artifacts(&out, &render_config(&cfg)).unwrap())
}

fn c11_determinism(_: &mut Runs) -> Verdict {
    let mut ok = true;
    let mut msg = Vec::new();
    for name in ["simulate", "lyapunov_stable", "absorbing"] {
        let a = manifest_for(name, Execution::Parallel);
        let b = manifest_for(name, Execution::Parallel);
        let c = manifest_for(name, Execution::Sequential);
        ok &= a == b && a == c;
        msg.push(format!("{name}: {} files, repeat {}, sequential {}", a.lines().count(), a == b, a == c));
    }
    (ok, msg.join("; "))
}

fn main() -> ExitCode {
    // libtest-style flags (--nocapture, filters) are accepted and ignored
    let mut runs = Runs { outcomes: BTreeMap::new() };
    let criteria: [(&str, fn(&mut Runs) -> Verdict); 11] = [
        ("exact-solution convergence", c1_exact_solution),
        ("energy-law audit", c2_energy_audit),
        ("gronwall envelope and absorbing radius", c3_absorbing),
        ("time-average dissipation", c4_dissipation),
        ("operator identities", c5_identities),
        ("frechet differentiability", c6_frechet),
        ("lyapunov closed form and consistency", c7_lyapunov),
        ("dimension bounds", c8_dimension),
        ("cutoff function", c9_cutoff),
        ("semicontinuity experiment", c10_semicontinuity),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check(&mut runs);
        failed += usize::from(!ok);
        println!("criterion {:>2} {} {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
