use leo::benchmarks::BenchmarkId;
use leo::engine::{run_leo, LeoConfig};
use leo::generator::{Generator, MockBackend, MockPolicy};
use leo::pool::{candidates_from_csv, candidates_to_csv, port_and_filter, PortRule};
use leo::{Candidate, Pool, PoolRole, Source};
use proptest::prelude::*;
use std::sync::Arc;

fn cand(f: f64, born: usize, tag: f64) -> Candidate {
    Candidate::new(vec![tag, -tag], vec![f], born, Source::Explore)
}

fn pool(fs: &[(f64, usize)], capacity: usize, role: PoolRole) -> Pool {
    let members = fs.iter().enumerate().map(|(i, &(f, b))| cand(f, b, i as f64)).collect();
    Pool::new(members, capacity, role).unwrap()
}

fn fvals(p: &Pool) -> Vec<f64> {
    p.values()
}

// Values drawn from a small grid so ties are common.
fn members() -> impl Strategy<Value = Vec<(f64, usize)>> {
    prop::collection::vec(((0i32..8).prop_map(|v| v as f64 * 0.5), 0usize..4), 1..16)
}

/// Literal reading of PortFilter: sort exploit ascending, keep its first
/// `len - k`, then append the k best explore members.
fn port_oracle(explore: &[Candidate], exploit: &[Candidate], k: usize, conditional: bool) -> Vec<Candidate> {
    let order = |v: &[Candidate]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        // Insertion sort by (f, born): stable and independent of the library's sort.
        for i in 1..idx.len() {
            let mut j = i;
            while j > 0 {
                let (a, b) = (&v[idx[j - 1]], &v[idx[j]]);
                if (a.f[0], a.iteration_born) > (b.f[0], b.iteration_born) {
                    idx.swap(j - 1, j);
                    j -= 1;
                } else {
                    break;
                }
            }
        }
        idx.into_iter().map(|i| v[i].clone()).collect::<Vec<_>>()
    };
    let ex = order(exploit);
    let top = order(explore);
    let n = ex.len();
    let mut out: Vec<Candidate> = ex[..n - k].to_vec();
    for (j, incoming) in top.into_iter().take(k).enumerate() {
        let resident = &ex[n - k + j];
        out.push(if !conditional || incoming.f[0] < resident.f[0] { incoming } else { resident.clone() });
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn update_population_concatenates(a in members(), b in members()) {
        let p = pool(&a, 1, PoolRole::Exploit);
        let new: Vec<Candidate> = b.iter().map(|&(f, born)| cand(f, born, 99.0)).collect();
        let merged = p.update_population(&new).unwrap();
        prop_assert_eq!(merged.len(), a.len() + b.len());
        prop_assert_eq!(&merged.members[..a.len()], &p.members[..]);
        prop_assert_eq!(&merged.members[a.len()..], &new[..]);
        prop_assert_eq!(p.update_population(&[]).unwrap(), p);
    }

    #[test]
    fn sort_and_truncate_idempotent_and_order_free(m in members(), cap_frac in 0.0f64..1.0, rot in 0usize..16) {
        let cap = 1 + ((m.len() - 1) as f64 * cap_frac) as usize;
        let p = pool(&m, cap, PoolRole::Exploit);
        let once = p.sort_and_truncate().unwrap();
        prop_assert_eq!(once.len(), cap);
        prop_assert_eq!(once.sort_and_truncate().unwrap(), once.clone());
        let v = fvals(&once);
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));

        // Rotating the input changes insertion order only; (f, born) keys and
        // the value multiset must not move.
        let mut shuffled = p.clone();
        let r = rot % shuffled.members.len();
        shuffled.members.rotate_left(r);
        let again = shuffled.sort_and_truncate().unwrap();
        let key = |q: &Pool| q.members.iter().map(|c| (c.f[0].to_bits(), c.iteration_born)).collect::<Vec<_>>();
        prop_assert_eq!(key(&again), key(&once));

        // The retained values are exactly the cap smallest.
        let mut all: Vec<f64> = m.iter().map(|x| x.0).collect();
        all.sort_by(f64::total_cmp);
        prop_assert_eq!(v, all[..cap].to_vec());
    }

    #[test]
    fn port_matches_brute_force(e in members(), x in members(), kf in 0.0f64..1.0, conditional in any::<bool>()) {
        let limit = e.len().min(x.len());
        let k = ((limit as f64) * kf) as usize;
        let explore = pool(&e, e.len(), PoolRole::Explore);
        let exploit = pool(&x, x.len(), PoolRole::Exploit);
        let rule = if conditional { PortRule::Conditional } else { PortRule::Unconditional };
        let got = port_and_filter(&explore, &exploit, k, rule).unwrap();
        let want = port_oracle(&explore.members, &exploit.members, k, conditional);
        prop_assert_eq!(&got.members, &want);
        prop_assert_eq!(got.len(), exploit.len());
        if k < exploit.len() || conditional {
            prop_assert!(got.best_value() <= exploit.best_value());
        }
        prop_assert!(port_and_filter(&explore, &exploit, limit + 1, rule).is_err());
    }

    #[test]
    fn csv_round_trip_at_six_decimals(v in prop::collection::vec(-1e3f64..1e3, 3)) {
        let c = Candidate::new(v[..2].to_vec(), vec![v[2]], 0, Source::Init);
        let back = candidates_from_csv(&candidates_to_csv(std::slice::from_ref(&c), false), 2, 1).unwrap();
        for (a, b) in back[0].x.iter().chain(&back[0].f).zip(c.x.iter().chain(&c.f)) {
            prop_assert!((a - b).abs() <= 5e-7);
        }
    }

    #[test]
    fn elitism_over_mock_runs(seed in any::<u32>(), pop in 2usize..12, iters in 1usize..12, f in 0usize..6) {
        let spec = BenchmarkId::TABLE_FUNCTIONS[f].objective_spec().unwrap();
        let policy = MockPolicy { seed: seed as u64, ..Default::default() };
        let generator = Generator::new(Arc::new(MockBackend::new(policy)), 1);
        let cfg = LeoConfig { pop_size: pop, max_iterations: iters, seed: seed as u64, max_evaluations: None, ..Default::default() };
        let rec = run_leo(&spec, &cfg, &generator).unwrap();
        let series = rec.best_series();
        prop_assert!(series.windows(2).all(|w| w[1] <= w[0]), "{:?}", series);
        for it in &rec.iterations {
            prop_assert_eq!(it.exploit_pool.as_ref().unwrap().len(), pop);
            prop_assert_eq!(it.explore_pool.as_ref().unwrap().len(), pop);
        }
        prop_assert_eq!(rec.evaluations_used, pop + 2 * pop * rec.iterations_completed);
        prop_assert_eq!(rec.min_fun_val, *series.last().unwrap());
    }
}

#[test]
fn spec_traces() {
    let p = pool(&[(5.0, 0), (1.0, 0), (3.0, 0), (2.0, 0)], 2, PoolRole::Exploit);
    assert_eq!(fvals(&p.sort_and_truncate().unwrap()), [1.0, 2.0]);

    let mut tie = pool(&[(1.0, 3), (1.0, 1), (2.0, 0)], 2, PoolRole::Exploit);
    tie.members[0].x = vec![7.0, 7.0];
    let kept = tie.sort_and_truncate().unwrap();
    assert_eq!(kept.members[0].iteration_born, 1);

    let explore = pool(&[(5.0, 0), (1.0, 0), (3.0, 0)], 3, PoolRole::Explore);
    let exploit = pool(&[(2.0, 0), (4.0, 0), (6.0, 0)], 3, PoolRole::Exploit);
    let ported = port_and_filter(&explore, &exploit, 1, PortRule::Unconditional).unwrap();
    assert_eq!(fvals(&ported.sorted()), [1.0, 2.0, 4.0]);

    // Unconditional replacement even when the incoming member is worse.
    let bad = pool(&[(9.0, 0)], 1, PoolRole::Explore);
    let out = port_and_filter(&bad, &exploit, 1, PortRule::Unconditional).unwrap();
    assert_eq!(fvals(&out), [2.0, 4.0, 9.0]);
    let out = port_and_filter(&bad, &exploit, 1, PortRule::Conditional).unwrap();
    assert_eq!(fvals(&out), [2.0, 4.0, 6.0]);

    let full = port_and_filter(&explore, &exploit, 3, PortRule::Unconditional).unwrap();
    assert_eq!(fvals(&full), [1.0, 3.0, 5.0]);
}

#[test]
fn structural_errors() {
    let p = pool(&[(1.0, 0)], 1, PoolRole::Exploit);
    let wrong_dim = Candidate::new(vec![1.0], vec![0.0], 0, Source::Explore);
    assert!(p.update_population(&[wrong_dim]).is_err());
    let unevaluated = Candidate::unevaluated(vec![1.0, 2.0], 0, Source::Explore);
    assert!(p.update_population(&[unevaluated]).is_err());
    let short = pool(&[(1.0, 0)], 3, PoolRole::Exploit);
    assert!(short.sort_and_truncate().is_err());
    assert!(Pool::new(vec![], 0, PoolRole::Explore).is_err());
}
