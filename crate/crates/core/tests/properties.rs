//! Randomized invariants checked against independent oracles.

use proptest::prelude::*;

use qtrig::graph::Graph;
use qtrig::lambert::{w0, w_minus1, BRANCH_POINT};
use qtrig::params::{kappa, min_feasible_levels, omega_tilde, AgentDesign, DesignInputs, ProtocolParams};
use qtrig::quantizer::QuantizerSpec;
use qtrig::seminorm::{gamma_infinity, SeminormEvaluator};
use qtrig::sim::{run, zeno_bound, RunOptions};
use qtrig::spectral::eigendecompose;
use qtrig::trigger::phi;

/// Quantizer oracle: linear search for the bin `(m−1, m+1]·E/R` holding `|z|`.
fn bin_oracle(z: f64, range: f64, levels: u32) -> f64 {
    let half = (levels / 2) as i64;
    let edge = |m: i64| m as f64 * range / levels as f64;
    let mut p = 0;
    if z.abs() > edge(1) {
        p = (1..=half)
            .find(|&p| edge(2 * p - 1) < z.abs() && z.abs() <= edge(2 * p + 1))
            .unwrap_or(half);
    }
    z.signum() * 2.0 * p as f64 * range / levels as f64
}

/// First `τ ∈ [0, cap]` with `|aτ + c| ≥ b e^{−ωτ}`, by scan and bisection.
fn crossing_scan(a: f64, b: f64, c: f64, omega: f64, cap: f64) -> f64 {
    let g = |t: f64| (a * t + c).abs() - b * (-omega * t).exp();
    if g(0.0) >= 0.0 {
        return 0.0;
    }
    let steps = 40_000;
    let dt = cap / steps as f64;
    let mut lo = 0.0;
    for s in 1..=steps {
        let t = s as f64 * dt;
        if g(t) >= 0.0 {
            let mut hi = t;
            for _ in 0..200 {
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

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        proptest::collection::vec(any::<bool>(), m)
            .prop_map(move |mask| {
                let edges: Vec<(usize, usize)> =
                    pairs.iter().zip(&mask).filter(|(_, &k)| k).map(|(&e, _)| e).collect();
                Graph::new(n, &edges).unwrap()
            })
    })
}

fn connected_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    graph_strategy(max_n).prop_filter("connected", Graph::is_connected)
}

fn agents_strategy() -> impl Strategy<Value = Vec<AgentDesign>> {
    proptest::collection::vec((1usize..5, 0.0..0.15f64, 0.0..3.0f64), 1..6).prop_map(|v| {
        v.into_iter()
            .map(|(degree, delta, tau_max)| AgentDesign { degree, delta, tau_max })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantizer_matches_bin_oracle(
        range in 1e-3..100.0f64,
        half in 0u32..40,
        fracs in proptest::collection::vec(-1.0..=1.0f64, 400),
    ) {
        let levels = 2 * half + 1;
        let q = QuantizerSpec::new(range, levels).unwrap();
        for f in fracs {
            let z = f * range;
            let qz = q.quantize(z).unwrap();
            prop_assert!((z - qz).abs() <= range / levels as f64 * (1.0 + 1e-12));
            prop_assert_eq!(q.quantize(-z).unwrap(), -qz);
            let want = bin_oracle(z, range, levels);
            prop_assert!((qz - want).abs() <= 1e-12 * range, "z={} got {} want {}", z, qz, want);
        }
    }

    #[test]
    fn quantizer_saturates_outside_range(range in 1e-3..100.0f64, over in 1e-9..10.0f64) {
        let q = QuantizerSpec::new(range, 5).unwrap();
        prop_assert!(q.quantize(range * (1.0 + over)).is_err());
        prop_assert!(q.quantize(-range * (1.0 + over)).is_err());
        prop_assert!(q.quantize(range).is_ok());
    }

    #[test]
    fn phi_matches_scan(
        a in -3.0..3.0f64,
        b in 0.01..2.0f64,
        frac in -0.999..0.999f64,
        omega in 0.05..2.0f64,
    ) {
        let c = frac * b;
        let got = phi(a, b, c, omega).unwrap();
        let cap = 40.0 / omega;
        let want = crossing_scan(a, b, c, omega, cap);
        if want.is_infinite() {
            prop_assert!(got > cap, "a={} b={} c={} w={}: {} vs none", a, b, c, omega, got);
        } else {
            prop_assert!((got - want).abs() <= 1e-7 * (1.0 + want), "a={} b={} c={} w={}: {} vs {}", a, b, c, omega, got, want);
        }
    }

    #[test]
    fn phi_immediate_when_threshold_already_met(a in -3.0..3.0f64, b in 0.01..2.0f64, extra in 0.0..2.0f64) {
        prop_assert_eq!(phi(a, b, b + extra, 0.3).unwrap(), 0.0);
        prop_assert_eq!(phi(a, b, -(b + extra), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn lambert_round_trip(y in BRANCH_POINT..1e6f64) {
        let w = w0(y).unwrap();
        prop_assert!(w >= -1.0);
        prop_assert!((w * w.exp() - y).abs() <= 1e-13 * y.abs().max(1.0));
    }

    #[test]
    fn lambert_lower_round_trip(y in BRANCH_POINT..-1e-300f64) {
        let w = w_minus1(y).unwrap();
        prop_assert!(w <= -1.0);
        prop_assert!((w * w.exp() - y).abs() <= 1e-13 * y.abs().max(1.0));
    }

    #[test]
    fn lambert_monotone(y1 in BRANCH_POINT..-1e-12f64, y2 in BRANCH_POINT..-1e-12f64) {
        let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
        prop_assert!(w0(lo).unwrap() <= w0(hi).unwrap());
        prop_assert!(w_minus1(lo).unwrap() >= w_minus1(hi).unwrap());
    }

    #[test]
    fn laplacian_structure(g in graph_strategy(10)) {
        let l = g.laplacian();
        let n = g.n_vertices();
        prop_assert!(l.is_symmetric(0.0));
        for i in 0..n {
            prop_assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
            prop_assert_eq!(l[(i, i)], g.neighbors(i).len() as f64);
        }
        let spec = eigendecompose(&l).unwrap();
        prop_assert!(spec.reconstruct().max_abs_diff(&l) <= 1e-10 * (1.0 + l.norm_inf()));
        prop_assert!(spec.eigenvalues()[0].abs() <= 1e-10);
        prop_assert!(spec.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(spec.lambda2() > 1e-9, g.is_connected());
    }

    #[test]
    fn gamma_infinity_within_bounds(g in connected_strategy(9), scale in 0.05..1.0f64) {
        let spec = eigendecompose(&g.laplacian()).unwrap();
        let n = g.n_vertices() as f64;
        let gi = gamma_infinity(&spec, scale * spec.lambda2()).unwrap().value;
        prop_assert!(gi >= 2.0 - 2.0 / n - 1e-9 && gi <= n - 1.0 + 1e-9, "Gamma_inf = {}", gi);
    }

    #[test]
    fn pairwise_gap_below_twice_seminorm(
        g in connected_strategy(8),
        v in proptest::collection::vec(-10.0..10.0f64, 8),
    ) {
        let spec = eigendecompose(&g.laplacian()).unwrap();
        let ev = SeminormEvaluator::new(&spec, spec.lambda2()).unwrap();
        let v = &v[..g.n_vertices()];
        let s = ev.eval(v);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(max - min <= 2.0 * s + 1e-9);
    }

    #[test]
    fn omega_tilde_separates_decay_condition(
        agents in agents_strategy(),
        gamma in 0.5..2.0f64,
        gamma_inf in 1.0..3.0f64,
        half in 10u32..60,
        probes in proptest::collection::vec(0.0..1.0f64, 20),
    ) {
        let levels = 2 * half + 1;
        let Ok(w) = omega_tilde(gamma, gamma_inf, levels, &agents) else {
            return Ok(());
        };
        let w = w.value;
        prop_assert!(w > 0.0);
        let margin = |omega: f64| gamma - omega - 2.0 * gamma_inf * kappa(omega, levels, &agents);
        prop_assert!(margin(w).abs() <= 1e-9 * (1.0 + gamma));
        for p in probes {
            let omega = p * 2.0 * w;
            if (omega - w).abs() <= 1e-6 * w {
                continue;
            }
            prop_assert_eq!(margin(omega) > 0.0, omega < w, "omega={} w={}", omega, w);
        }
    }

    #[test]
    fn min_levels_is_tight(
        agents in agents_strategy(),
        gamma in 0.5..2.0f64,
        gamma_inf in 1.0..3.0f64,
    ) {
        let ok = |r: u32| agents.iter().all(|a| a.delta + a.degree as f64 / (r as f64) < gamma / (2.0 * gamma_inf));
        match min_feasible_levels(gamma, gamma_inf, &agents) {
            Ok(r) => {
                prop_assert_eq!(r % 2, 1);
                prop_assert!(ok(r));
                prop_assert!(r == 1 || !ok(r - 2));
            }
            Err(_) => prop_assert!(agents.iter().any(|a| a.delta >= gamma / (2.0 * gamma_inf))),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_runs_respect_event_bound(
        g in connected_strategy(6),
        x in proptest::collection::vec(-0.5..0.5f64, 6),
        delta in 0.01..0.08f64,
        tau_max in 0.2..1.5f64,
    ) {
        let n = g.n_vertices();
        let inputs = DesignInputs {
            e0: 1.0,
            gamma: None,
            omega: None,
            levels: 201,
            dtilde: None,
            delta: vec![delta; n],
            tau_max: vec![tau_max; n],
            use_gamma_inf_bound: false,
        };
        let Ok(params) = ProtocolParams::new(&g, &inputs) else {
            return Ok(());
        };
        let x0 = &x[..n];
        if !params.validate(&g, Some(x0)).feasible {
            return Ok(());
        }
        let horizon = 4.0;
        let out = run(&g, &params, x0, RunOptions { horizon, grid_dt: 1e-2, check: true }).unwrap();
        prop_assert!(out.ledger.len() <= zeno_bound(&params, horizon));
        for (i, a) in params.agents.iter().enumerate() {
            for dt in out.inter_event_times(i) {
                prop_assert!(dt >= a.tau_min_tilde - 1e-12 && dt <= a.tau_max + 1e-12);
            }
        }
    }
}
