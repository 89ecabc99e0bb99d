//! Invariant suites run by `qtrig check` against one configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::graph::Graph;
use crate::params::ProtocolParams;
use crate::quantizer::QuantizerSpec;
use crate::seminorm::{heat_semigroup, norm_inf, DeviationVector, SeminormEvaluator};
use crate::sim::{run, RunOptions};
use crate::trigger::phi;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub pass: bool,
    pub cases: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub design_feasible: bool,
    pub suites: Vec<SuiteResult>,
    pub all_pass: bool,
}

fn suite(name: &'static str, cases: usize, failure: Option<String>) -> SuiteResult {
    SuiteResult {
        name,
        pass: failure.is_none(),
        cases,
        detail: failure.unwrap_or_else(|| "ok".to_string()),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Semi-norm bounds, homogeneity, triangle inequality and semi-contraction on random vectors.
pub fn seminorm_axioms(params: &ProtocolParams, rng: &mut ChaCha8Rng, cases: usize) -> SuiteResult {
    let spec = &params.spectrum;
    let n = spec.dim();
    let ev = match SeminormEvaluator::new(spec, params.gamma) {
        Ok(ev) => ev,
        Err(e) => return suite("seminorm_axioms", 0, Some(e.to_string())),
    };
    let gi = params.gamma_inf.value;
    let projector_free = |v: &[f64]| DeviationVector::new(v).deviation;
    if ev.eval(&vec![1.5; n]) > 1e-12 {
        return suite("seminorm_axioms", 0, Some("constant vector has nonzero semi-norm".into()));
    }
    for case in 0..cases {
        let v = random_vec(rng, n);
        let w = random_vec(rng, n);
        let sv = ev.eval(&v);
        let dev = projector_free(&v);
        let lo = norm_inf(&dev);
        if sv < lo - 1e-9 || sv > gi * norm_inf(&v) + 1e-9 || sv > gi * lo + 1e-9 {
            return suite("seminorm_axioms", case, Some(format!("bounds fail: {lo} <= {sv} <= {gi}|v|")));
        }
        let rho = rng.gen_range(-3.0..3.0);
        let scaled: Vec<f64> = v.iter().map(|x| rho * x).collect();
        if (ev.eval(&scaled) - rho.abs() * sv).abs() > 1e-12 * (1.0 + sv) {
            return suite("seminorm_axioms", case, Some("homogeneity fails".into()));
        }
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        if ev.eval(&sum) > sv + ev.eval(&w) + 1e-9 {
            return suite("seminorm_axioms", case, Some("triangle inequality fails".into()));
        }
        for &t in &[0.1, 0.5, 1.0, 2.0] {
            let moved = heat_semigroup(spec, t).mul_vec(&v);
            if ev.eval(&moved) > (-params.gamma * t).exp() * sv + 1e-9 {
                return suite("seminorm_axioms", case, Some(format!("semi-contraction fails at t = {t}")));
            }
        }
        let spread = dev.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
            - dev.iter().fold(f64::INFINITY, |m, &x| m.min(x));
        if spread > 2.0 * sv + 1e-9 {
            return suite("seminorm_axioms", case, Some("pairwise gap exceeds 2|||v|||".into()));
        }
    }
    suite("seminorm_axioms", cases, None)
}

/// `|z − Q(z)| ≤ E/R` and odd symmetry at the initial range.
pub fn quantizer_bound(params: &ProtocolParams, rng: &mut ChaCha8Rng, cases: usize) -> SuiteResult {
    let e = params.quant_range(0.0);
    let q = match QuantizerSpec::new(e, params.levels) {
        Ok(q) => q,
        Err(err) => return suite("quantizer_bound", 0, Some(err.to_string())),
    };
    let half_step = e / params.levels as f64;
    for case in 0..cases {
        let z = rng.gen_range(-e..=e);
        let (qz, qm) = match (q.quantize(z), q.quantize(-z)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return suite("quantizer_bound", case, Some(format!("unexpected saturation at {z}"))),
        };
        if (z - qz).abs() > half_step {
            return suite("quantizer_bound", case, Some(format!("|z - Q(z)| > E/R at z = {z}")));
        }
        if qm != -qz {
            return suite("quantizer_bound", case, Some(format!("Q(-z) != -Q(z) at z = {z}")));
        }
    }
    suite("quantizer_bound", cases, None)
}

/// First `τ ∈ [0, cap]` with `|aτ + c| ≥ b e^{−ωτ}` by grid scan and bisection.
pub fn scan_crossing(a: f64, b: f64, c: f64, omega: f64, cap: f64, steps: usize) -> f64 {
    let g = |t: f64| (a * t + c).abs() - b * (-omega * t).exp();
    if g(0.0) >= 0.0 {
        return 0.0;
    }
    let dt = cap / steps as f64;
    let mut lo = 0.0;
    for s in 1..=steps {
        let t = s as f64 * dt;
        if g(t) >= 0.0 {
            let mut hi = t;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if g(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        lo = t;
    }
    f64::INFINITY
}

/// `φ` against the scan on random triples with `b > |c|`.
pub fn phi_oracle(omega: f64, rng: &mut ChaCha8Rng, cases: usize) -> SuiteResult {
    let cap = 40.0 / omega;
    for case in 0..cases {
        let b = rng.gen_range(0.01..2.0);
        let c = rng.gen_range(-0.999..0.999) * b;
        let a = rng.gen_range(-3.0..3.0);
        let got = match phi(a, b, c, omega) {
            Ok(t) => t,
            Err(e) => return suite("phi_oracle", case, Some(e.to_string())),
        };
        let want = scan_crossing(a, b, c, omega, cap, 20_000);
        let agree = if want.is_infinite() {
            got > cap
        } else {
            (got - want).abs() <= 1e-7 * (1.0 + want)
        };
        if !agree {
            return suite("phi_oracle", case, Some(format!("a={a} b={b} c={c}: {got} vs scan {want}")));
        }
    }
    suite("phi_oracle", cases, None)
}

/// Short run: ledger replay, consensus envelope and inter-event bounds.
pub fn short_run(graph: &Graph, params: &ProtocolParams, x0: &[f64], horizon: f64) -> Vec<SuiteResult> {
    let opts = RunOptions {
        horizon,
        grid_dt: 1e-3,
        check: false,
    };
    let out = match run(graph, params, x0, opts) {
        Ok(out) => out,
        Err(e) => {
            return vec![
                suite("ledger_replay", 0, Some(format!("run aborted: {e}"))),
                suite("envelope", 0, Some(format!("run aborted: {e}"))),
            ]
        }
    };
    let tau_max: Vec<f64> = params.agents.iter().map(|a| a.tau_max).collect();
    let ledger = out.ledger.replay(&tau_max, params.min_tau_min_tilde());
    let envelope = out.check_envelope(1e-3);
    vec![
        suite("ledger_replay", out.ledger.len(), ledger.err().map(|e| e.to_string())),
        suite("envelope", out.export_times(1e-3).len(), envelope.err().map(|e| e.to_string())),
    ]
}

/// Runs every suite. `horizon` bounds the short run.
pub fn run_checks(
    graph: &Graph,
    params: &ProtocolParams,
    x0: &[f64],
    horizon: f64,
    seed: u64,
    design_feasible: bool,
) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suites = vec![
        seminorm_axioms(params, &mut rng, 100),
        quantizer_bound(params, &mut rng, 100_000),
        phi_oracle(params.omega, &mut rng, 1000),
    ];
    suites.extend(short_run(graph, params, x0, horizon));
    let all_pass = suites.iter().all(|s| s.pass);
    CheckReport {
        seed,
        design_feasible,
        suites,
        all_pass,
    }
}
