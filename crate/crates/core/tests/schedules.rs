use std::collections::{BTreeMap, BTreeSet};

use paratransfer_core::routing::{
    complete_schedule, distribution_rate, mp_schedule, qc_schedule, round_robin, schedule_for, BandwidthBudget,
    Decoherence, FidelityModel, RoundProgram, Scheme,
};

fn all_pairs(n: usize) -> BTreeSet<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

#[test]
fn structural_invariants_hold_exhaustively() {
    for d in 1..=5 {
        qc_schedule(d).unwrap().validate().unwrap();
        mp_schedule(d).unwrap().validate().unwrap();
    }
    for n in (2..=16).step_by(2) {
        complete_schedule(n).unwrap().validate().unwrap();
    }
}

#[test]
fn qc_uses_every_pair_once() {
    for d in 1..=6u32 {
        let s = qc_schedule(d).unwrap();
        let n = 1usize << d;
        let cov = s.pair_coverage();
        assert_eq!(cov.keys().copied().collect::<BTreeSet<_>>(), all_pairs(n));
        assert!(cov.values().all(|&c| c == 1));
        assert_eq!(s.task_count(), n * (n - 1) / 2);
        // channel bits of a pair's round are exactly the bits on which it agrees
        for round in s.rounds() {
            let RoundProgram::Subcube { channel_bits } = &round.program else {
                panic!("pairing program in a QC schedule")
            };
            let agree: usize = channel_bits.iter().map(|b| 1 << b).sum();
            for t in &round.tasks {
                assert_eq!(!(t.sender ^ t.receiver) & (n - 1), agree);
            }
            assert_eq!(round.tasks.len(), 1 << channel_bits.len());
        }
    }
}

#[test]
fn qc_d3_counts() {
    let s = qc_schedule(3).unwrap();
    assert_eq!(s.round_count(), 13);
    assert_eq!(s.task_count(), 28);
    // 2^(d−m−1) rounds for each of the C(d, m) splits
    let mut per_m = BTreeMap::new();
    for r in s.rounds() {
        *per_m.entry(r.program.channel_bits().unwrap()).or_insert(0) += 1;
    }
    assert_eq!(per_m, BTreeMap::from([(0, 4), (1, 6), (2, 3)]));
}

#[test]
fn mp_uses_every_ordered_pair_once() {
    for d in 1..=4u32 {
        let s = mp_schedule(d).unwrap();
        let n = 1usize << d;
        let mut directed: Vec<(usize, usize)> = s
            .rounds()
            .iter()
            .flat_map(|r| r.tasks.iter().map(|t| (t.sender, t.receiver)))
            .collect();
        directed.sort_unstable();
        let expect: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        assert_eq!(directed, expect);
    }
    let s = mp_schedule(3).unwrap();
    assert_eq!((s.round_count(), s.task_count()), (7, 56));
}

#[test]
fn round_robin_is_a_one_factorization() {
    for n in (2..=64).step_by(2) {
        let rounds = round_robin(n).unwrap();
        assert_eq!(rounds.len(), n - 1);
        let mut seen = BTreeSet::new();
        for m in &rounds {
            let mut nodes: Vec<usize> = m.iter().flat_map(|&(a, b)| [a, b]).collect();
            nodes.sort_unstable();
            assert_eq!(nodes, (0..n).collect::<Vec<_>>());
            for &(a, b) in m {
                assert!(seen.insert((a.min(b), a.max(b))), "pair ({a}, {b}) repeated");
            }
        }
        assert_eq!(seen, all_pairs(n));
    }
    let s = complete_schedule(8).unwrap();
    assert_eq!(s.round_count(), 7);
    assert!(s.rounds().iter().all(|r| r.tasks.len() == 8));
}

#[test]
fn closed_form_round_counts() {
    for d in 1..=10u32 {
        assert_eq!(qc_schedule(d).unwrap().round_count(), (3usize.pow(d) - 1) / 2);
        assert_eq!(mp_schedule(d).unwrap().round_count(), (1usize << d) - 1);
    }
}

#[test]
fn ideal_rates_by_counting() {
    let inf = BandwidthBudget::unlimited();
    let ideal = Decoherence::ideal();
    for d in 1..=6u32 {
        let n = 1usize << d;
        let qc = distribution_rate(&qc_schedule(d).unwrap(), 1.0, &inf, &ideal, FidelityModel::WorstCase).unwrap();
        // C(N, 2) pairs over (3^d − 1)/2 rounds
        let expect = (n * (n - 1) / 2) as f64 / ((3usize.pow(d) - 1) / 2) as f64;
        assert!((qc.rate - expect).abs() < 1e-12);
    }
}

#[test]
fn schedule_for_rejects_wrong_sizes() {
    assert!(schedule_for(Scheme::Mp, 12).is_err());
    assert!(schedule_for(Scheme::Qc, 1).is_err());
    assert!(schedule_for(Scheme::Complete, 7).is_err());
    let serial = schedule_for(Scheme::Serial, 6).unwrap();
    assert_eq!(serial.round_count(), 30);
    serial.validate().unwrap();
}
