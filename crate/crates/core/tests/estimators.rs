//! Monte Carlo estimators against exact answers.

use depmi_core::crosscat::crosscat_cmi_estimate;
use depmi_core::gpm::gpm_cmi_estimate;
use depmi_core::oracle::enumerate::{cardinalities, enumerated_cmi, random_nominal_state};
use depmi_core::oracle::generators::{common_cause_net, vstruct_net};
use depmi_core::rng::{child_seed, stream};
use depmi_core::{Assignment, Gpm, Value, VarSet};

fn within_three_se(mean: f64, se: f64, exact: f64) -> bool {
    (mean - exact).abs() <= 3.0 * se.max(1e-12)
}

#[test]
fn network_estimates_converge_to_exact_values() {
    let t = 10_000;
    let cases = [
        (vstruct_net(0.1), [0usize], [1usize], Some((2usize, 0u32))),
        (vstruct_net(0.1), [0], [1], None),
        (common_cause_net(0.2), [1], [2], None),
        (common_cause_net(0.2), [1], [2], Some((0, 1))),
    ];
    for (k, (net, a, b, cond)) in cases.iter().enumerate() {
        let (a, b) = (VarSet::from(*a), VarSet::from(*b));
        let given: Assignment = cond.iter().map(|&(v, c)| (v, Value::Category(c))).collect();
        let exact = net.exact_cmi(&a, &b, &given).unwrap();
        let hits = (0..20)
            .filter(|&s| {
                let mut rng = stream(child_seed(k as u64, s));
                let e = gpm_cmi_estimate(net, &a, &b, &given, t, &mut rng).unwrap();
                within_three_se(e.mean, e.std_error, exact)
            })
            .count();
        assert!(hits >= 18, "case {k}: {hits}/20 within 3 SE of {exact}");
    }
}

#[test]
fn crosscat_estimates_converge_to_enumeration() {
    let mut hits = 0;
    let mut total = 0;
    for seed in 0..100u64 {
        let mut rng = stream(seed);
        let (data, state) = random_nominal_state(&mut rng, 5, 3, 3, 12);
        if state.n_vars() < 3 {
            continue;
        }
        let cards = cardinalities(&data);
        let (a, b) = (VarSet::from([0]), VarSet::from([1]));
        let given: Assignment = [(2, Value::Category(0))].into_iter().collect();
        let exact = enumerated_cmi(&state, &cards, &a, &b, &given).unwrap();
        let e = crosscat_cmi_estimate(&state, &a, &b, &given, 5_000, &mut rng).unwrap();
        if exact == 0.0 {
            continue;
        }
        total += 1;
        if within_three_se(e.mean, e.std_error, exact) {
            hits += 1;
        }
    }
    assert!(total >= 20);
    assert!(hits as f64 >= 0.9 * total as f64, "{hits}/{total}");
}

#[test]
fn simulation_frequencies_match_logpdf() {
    let mut rng = stream(5);
    let (data, state) = random_nominal_state(&mut rng, 3, 3, 3, 15);
    let cards = cardinalities(&data);
    let target = VarSet::from([0]);
    let given: Assignment = if state.n_vars() > 1 {
        [(1, Value::Category(0))].into_iter().collect()
    } else {
        Assignment::new()
    };
    let n = 40_000;
    let mut counts = vec![0usize; cards[0]];
    for _ in 0..n {
        let draw = state.simulate(&target, &given, &mut rng).unwrap();
        match draw[&0] {
            Value::Category(c) => counts[c as usize] += 1,
            other => panic!("unexpected {other:?}"),
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        let t: Assignment = [(0, Value::Category(c as u32))].into_iter().collect();
        let p = state.logpdf(&t, &given).unwrap().exp();
        let freq = count as f64 / n as f64;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * sd + 1e-9, "category {c}: {freq} vs {p}");
    }
}
