use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mirror_game::game::{GameConfig, GameState, Outcome, Player};
use mirror_game::missing_numbers::{recover_bruteforce, recover_newton, PowerSumSketch, SketchParams};
use mirror_game::oracle::MatchingList;
use mirror_game::strategies::{partition_of, AliceMove, AliceState, BobStrategy, MirrorBob, TrackerMode, UniformBob};
use mirror_game::two_bin::exact_tail_prob;

fn sketch_instance(n: u64, s: usize, k: usize, missing: usize, seed: u64) -> (Vec<u64>, Vec<u64>, SketchParams) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut universe: Vec<u64> = (1..=2 * n).collect();
    universe.shuffle(&mut rng);
    let set: Vec<u64> = universe[..s].to_vec();
    let mut online = set.clone();
    online.shuffle(&mut rng);
    online.truncate(s - missing);
    (set, online, SketchParams::with_default_prime(n, s, k).unwrap())
}

proptest! {
    #[test]
    fn newton_recovers_set_difference(
        n in 2u64..=128,
        k in 1usize..=12,
        seed in any::<u64>(),
        missing_frac in 0.0f64..=1.0,
        s_frac in 0.0f64..=1.0,
    ) {
        let max_s = (2 * n) as usize;
        let s = (k + ((max_s - k.min(max_s)) as f64 * s_frac) as usize).clamp(k.min(max_s), max_s);
        let k = k.min(s);
        let missing = (k as f64 * missing_frac) as usize;
        let (set, online, params) = sketch_instance(n, s, k, missing, seed);
        let off = PowerSumSketch::offline(params, set.iter().copied()).unwrap();
        let mut on = PowerSumSketch::empty(params);
        for &y in &online {
            on.update(y).unwrap();
        }
        let online_set: BTreeSet<u64> = online.iter().copied().collect();
        let want: BTreeSet<u64> = set.iter().copied().filter(|x| !online_set.contains(x)).collect();
        prop_assert_eq!(recover_newton(&off, &on, set.iter().copied()).unwrap(), want);
    }

    #[test]
    fn sketch_ignores_stream_order(values in proptest::collection::btree_set(1u64..=64, 1..20), seed in any::<u64>()) {
        let values: Vec<u64> = values.into_iter().collect();
        let params = SketchParams::with_default_prime(32, 64, 6).unwrap();
        let mut shuffled = values.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut a = PowerSumSketch::empty(params);
        let mut b = PowerSumSketch::empty(params);
        for (&x, &y) in values.iter().zip(&shuffled) {
            a.update(x).unwrap();
            b.update(y).unwrap();
        }
        prop_assert_eq!(a, b);
    }

    #[test]
    fn decoders_agree(seed in any::<u64>(), s in 5usize..=16, missing in 0usize..=4) {
        let (set, online, params) = sketch_instance(8, s, 4, missing.min(4), seed);
        let off = PowerSumSketch::offline(params, set.iter().copied()).unwrap();
        let mut on = PowerSumSketch::empty(params);
        for &y in &online {
            on.update(y).unwrap();
        }
        prop_assert_eq!(
            recover_newton(&off, &on, set.iter().copied()).unwrap(),
            recover_bruteforce(&off, &on, set.iter().copied()).unwrap()
        );
    }

    #[test]
    fn generated_lists_are_partitions(n in 1u64..200, seed in any::<u64>()) {
        let list = MatchingList::generate(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut seen = vec![false; 2 * n as usize + 1];
        for q in 1..=n {
            let (a, b) = list.query_pair(q).unwrap();
            prop_assert!(a < b);
            prop_assert!(!seen[a as usize] && !seen[b as usize]);
            seen[a as usize] = true;
            seen[b as usize] = true;
            prop_assert_eq!(list.query_partner(a).unwrap(), b);
            prop_assert_eq!(list.query_partner(b).unwrap(), a);
            prop_assert_eq!(list.locate(a).unwrap(), q);
        }
        prop_assert!(seen[1..].iter().all(|&s| s));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..20 {
            let (x, y) = (rng.gen_range(1..=2 * n), rng.gen_range(1..=2 * n));
            let same_pair = list.locate(x).unwrap() == list.locate(y).unwrap();
            prop_assert_eq!(same_pair, x == y || list.query_partner(x).unwrap() == y);
        }
    }

    #[test]
    fn referee_invariants(n in 1u64..16, moves in proptest::collection::vec(1u64..=32, 0..40)) {
        let mut game = GameState::new(GameConfig::new(n, 2.0, 0).unwrap()).unwrap();
        let mut distinct = BTreeSet::new();
        for x in moves.into_iter().filter(|&x| x <= 2 * n) {
            if game.outcome().is_over() {
                prop_assert!(game.apply_declaration(game.mover(), x).is_err());
                break;
            }
            let mover = game.mover();
            let repeat = !distinct.insert(x);
            let outcome = game.apply_declaration(mover, x).unwrap();
            if repeat {
                let winner = if mover == Player::Alice { Outcome::BobWins } else { Outcome::AliceWins };
                prop_assert_eq!(outcome, winner);
            } else if distinct.len() as u64 == 2 * n {
                prop_assert_eq!(outcome, Outcome::Tie);
            } else {
                prop_assert_eq!(outcome, Outcome::Ongoing);
            }
        }
        let t = game.transcript();
        prop_assert!(t.moves.len() as u64 <= 2 * n + 1);
        for (i, (player, _)) in t.moves.iter().enumerate() {
            prop_assert_eq!(*player, if i % 2 == 0 { Player::Alice } else { Player::Bob });
        }
        prop_assert_eq!(game.declared_count() as usize, distinct.len());
    }

    #[test]
    fn tail_below_power_of_two_bound(pairs in 1u64..=64, r_frac in 0.0f64..=1.0) {
        let r = 1 + ((pairs - 1) as f64 * r_frac) as u64;
        let tail = exact_tail_prob(pairs, r).unwrap();
        let bound = num_rational::BigRational::new(1.into(), num_bigint::BigInt::from(1u8) << r as usize);
        prop_assert!(tail <= bound);
    }
}

/// Drives Alice against uniform Bob, checking Alice's state against the
/// referee after every move.
fn audited_game(n: u64, c: f64, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let oracle = Arc::new(MatchingList::generate(n, &mut rng).unwrap());
    let (mut alice, first) = AliceState::init(Arc::clone(&oracle), c).unwrap();
    let mut bob = UniformBob::new(n, seed ^ 0xB0B);
    let mut game = GameState::new(GameConfig::new(n, c, seed).unwrap()).unwrap();
    assert!(!game.is_declared(first));
    game.apply_declaration(Player::Alice, first).unwrap();
    let mut last = first;
    loop {
        check_alice(&alice, &game);
        let b = bob.respond(last).unwrap();
        assert!(!game.is_declared(b));
        if game.apply_declaration(Player::Bob, b).unwrap().is_over() {
            return game.outcome();
        }
        match alice.respond(b).unwrap() {
            AliceMove::Declare(a) => {
                assert!(!game.is_declared(a), "Alice repeated {a}");
                game.apply_declaration(Player::Alice, a).unwrap();
                last = a;
            }
            AliceMove::Abort { partition, undeclared } => {
                let tracker = alice.trackers().iter().find(|t| !t.is_exhausted()).unwrap();
                assert_eq!(tracker.index(), partition);
                assert!(undeclared > alice.k() as u64);
                assert!(alice.trackers()[..partition as usize - 1].iter().all(|t| t.is_exhausted()));
                game.abort("test").unwrap();
                return game.outcome();
            }
        }
    }
}

fn check_alice(alice: &AliceState, game: &GameState) {
    let oracle = alice.oracle();
    // Exactly one open generated number, whose partner is undeclared.
    let g = alice.open_generated().expect("open generated number");
    assert!(game.is_declared(g));
    assert!(!game.is_declared(oracle.query_partner(g).unwrap()));
    let half_open = game.declared().filter(|&x| !game.is_declared(oracle.query_partner(x).unwrap())).count();
    assert_eq!(half_open, 1);

    for t in alice.trackers() {
        let members: Vec<u64> = t.members(oracle).collect();
        assert!(members.iter().all(|&x| partition_of(oracle.locate(x).unwrap()) == t.index()));
        let undeclared: BTreeSet<u64> = members.iter().copied().filter(|&x| !game.is_declared(x)).collect();
        assert_eq!(t.undeclared_count(), undeclared.len() as u64);
        match t.mode() {
            TrackerMode::Explicit(set) => assert_eq!(set, &undeclared),
            TrackerMode::Sketched { offline, online } => {
                assert!(undeclared.len() > alice.k());
                assert_eq!(online.count() as u64, t.declared_count());
                let _ = offline;
            }
        }
    }
    assert!(alice.metered_bits() <= alice.peak_bits());
}

#[test]
fn alice_state_tracks_referee() {
    for (n, c) in [(4u64, 2.0), (8, 1.0), (16, 1.0), (32, 2.0), (64, 0.5), (128, 1.0)] {
        for seed in 0..25 {
            let outcome = audited_game(n, c, seed);
            assert!(outcome == Outcome::Tie || outcome == Outcome::BobWins, "N={n} seed={seed}: {outcome}");
        }
    }
}

#[test]
fn small_budget_games_abort_sometimes() {
    // k = 1 at N = 64 makes aborts common; each one goes through the
    // soundness checks in audited_game.
    let aborts = (0..40).filter(|&s| audited_game(64, 1.0 / 6.0, s) == Outcome::BobWins).count();
    assert!(aborts > 0);
}

#[test]
fn mirror_bob_never_repeats_against_random_opponents() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..300 {
        let n = rng.gen_range(1..=40);
        let mut bob = MirrorBob::fixed(n).unwrap();
        let mut game = GameState::new(GameConfig::new(n, 2.0, trial).unwrap()).unwrap();
        while !game.outcome().is_over() {
            let undeclared: Vec<u64> = (1..=2 * n).filter(|&x| !game.is_declared(x)).collect();
            let a = *undeclared.choose(&mut rng).unwrap();
            game.apply_declaration(Player::Alice, a).unwrap();
            let b = bob.respond(a).unwrap();
            assert!(!game.is_declared(b));
            game.apply_declaration(Player::Bob, b).unwrap();
            assert!(bob.metered_bits() <= 2 * mirror_game::strategies::number_bits(n));
        }
        assert_eq!(game.outcome(), Outcome::Tie);
    }
}

#[test]
fn generated_lists_are_uniform_at_n2() {
    // Six ordered lists of two pairs; chi-square with 5 degrees of freedom
    // against its 0.001 critical value.
    const CHI2_DF5_999: f64 = 20.515;
    let samples = 6000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..samples {
        let list = MatchingList::generate(2, &mut rng).unwrap();
        *counts.entry(list.pairs().to_vec()).or_insert(0u32) += 1;
    }
    assert_eq!(counts.len(), 6);
    let expected = samples as f64 / 6.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_DF5_999, "chi2 = {chi2}");
}

#[test]
fn mirror_bob_against_alice_stays_within_bound() {
    use mirror_game::harness::play_match;
    use mirror_game::strategies::StrategyName;
    use mirror_game::two_bin::union_bound;

    let trials = 300;
    for n in [16u64, 64] {
        let mut aborts = 0;
        for seed in 0..trials {
            let rec = play_match(StrategyName::AlicePartition, StrategyName::BobMirror, n, 2.0, seed).unwrap();
            assert_ne!(rec.outcome(), Outcome::AliceWins);
            if rec.transcript.aborted {
                aborts += 1;
            } else {
                assert_eq!(rec.outcome(), Outcome::Tie);
            }
        }
        let p = union_bound(n, mirror_game::game::budget(n, 2.0) as u64).exact_sum;
        let rate = aborts as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(rate <= p + 3.0 * sigma, "N={n}: abort rate {rate} vs bound {p}");
    }
}
