use std::collections::HashSet;

use rand::{Rng, SeedableRng};

use locality_codes::brute::TinyCode;
use locality_codes::code_api::{
    as_ldc, run_correction_trials, ChannelKind, CoordinatePolicy, CorruptionChannel, LocalCode, QueryCountingOracle,
    SystematicCode, TrialRng,
};
use locality_codes::concat::{inner_decoding_failures, InnerBinaryCode};
use locality_codes::multiplicity::MultiplicityCode;
use locality_codes::{Field, FieldElement, RsCode};

fn rng(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

#[test]
fn multiplicity_weight_floor_over_random_polynomials() {
    // (q, m, s, d) = (16, 2, 2, 20): every nonzero codeword has at least
    // (1 - d/(sq)) q^m = 96 nonzero symbols.
    let f = Field::new(4).unwrap();
    let code = MultiplicityCode::new(&f, 2, 2, 20).unwrap();
    let mut r = rng(1);
    for _ in 0..10_000 {
        let msg = code.random_message(&mut r);
        if msg.iter().all(|x| x.is_zero()) {
            continue;
        }
        let cw = code.encode(&msg).unwrap();
        let w = cw.iter().filter(|s| s.iter().any(|x| !x.is_zero())).count();
        assert!(w >= 96, "weight {w}");
    }
}

#[test]
fn corrector_survives_one_fully_corrupted_line() {
    let f = Field::new(5).unwrap();
    let code = MultiplicityCode::new(&f, 2, 1, 8).unwrap();
    let mut r = rng(2);
    let mut ok = 0;
    for _ in 0..60 {
        let cw = code.encode(&code.random_message(&mut r)).unwrap();
        let target = r.random_range(0..code.block_length());
        let a = code.point(target);
        let b = [f.random_nonzero(&mut r), f.random(&mut r)];
        let mut word = cw.clone();
        for t in f.enumeration(32).into_iter().filter(|t| !t.is_zero()) {
            let p: Vec<FieldElement> = (0..2).map(|j| a[j] + f.mul(t, b[j])).collect();
            let i = code.point_index(&p);
            word[i] = code.alphabet().random_other(&word[i], &mut r);
        }
        let o = QueryCountingOracle::new(&word);
        if code.local_correct(&o, target, &mut r).is_ok_and(|c| c.symbol == cw[target]) {
            ok += 1;
        }
    }
    assert!(ok >= 55, "{ok}/60");
}

#[test]
fn order_one_univariate_multiplicity_is_reed_solomon() {
    let f = Field::new(3).unwrap();
    let mult = MultiplicityCode::new(&f, 1, 1, 2).unwrap();
    let rs = RsCode::new(&f, 8, 3).unwrap();
    // Reorder multiplicity codewords into RS point order before comparing.
    let order: Vec<usize> = rs.points().iter().map(|&p| mult.point_index(&[p])).collect();
    let a: HashSet<Vec<FieldElement>> =
        TinyCode::from_code(&mult).unwrap().words().iter().map(|w| order.iter().map(|&i| w[i][0]).collect()).collect();
    let b: HashSet<Vec<FieldElement>> = TinyCode::from_code(&rs).unwrap().words().iter().cloned().collect();
    assert_eq!(a.len(), 512);
    assert_eq!(a, b);
}

#[test]
fn univariate_systematic_reads_are_reed_solomon_positions() {
    let f = Field::new(4).unwrap();
    let code = MultiplicityCode::new(&f, 1, 1, 5).unwrap().with_systematic().unwrap();
    let rs = RsCode::new(&f, 16, 6).unwrap();
    let order: Vec<usize> = rs.points().iter().map(|&p| code.point_index(&[p])).collect();
    let mut r = rng(3);
    let msg: Vec<_> = (0..code.message_len()).map(|_| f.random(&mut r)).collect();
    let cw = code.systematic_encode(&msg).unwrap();
    let as_rs: Vec<FieldElement> = order.iter().map(|&i| cw[i][0]).collect();
    assert!(rs.is_codeword(&as_rs));
    for (i, &x) in msg.iter().enumerate() {
        let (pos, slot) = code.info_slot(i);
        assert_eq!(cw[pos][slot], x);
    }
    // A single line cannot be corrected from other lines.
    assert!(as_ldc(&code).is_err());
}

#[test]
fn trial_reports_are_reproducible() {
    let f = Field::new(5).unwrap();
    let code = MultiplicityCode::new(&f, 2, 1, 8).unwrap();
    let ch = CorruptionChannel::new(ChannelKind::RandomSymbols, 0.05).unwrap();
    let a = run_correction_trials(&code, &ch, CoordinatePolicy::Random, 40, 9).unwrap();
    let b = run_correction_trials(&code, &ch, CoordinatePolicy::Random, 40, 9).unwrap();
    assert_eq!(a, b);
    let c = run_correction_trials(&code, &ch, CoordinatePolicy::Random, 40, 10).unwrap();
    assert_ne!(a.per_coordinate, c.per_coordinate);
}

#[test]
fn greedy_inner_codes_decode_exhaustively() {
    for (n, k, d) in [(7, 4, 3), (15, 8, 4), (10, 3, 5)] {
        let code = InnerBinaryCode::greedy(n, k, d).unwrap();
        let min_w = (1..1u32 << k).map(|m| code.encode(m).count_ones() as usize).min().unwrap();
        assert!(min_w >= d, "({n},{k}) weight {min_w}");
        assert_eq!(inner_decoding_failures(&code), 0);
    }
}
