mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use tbicm::constellation::ConstellationTable;
use tbicm::demapper::{demap_frame, DemapCase};
use tbicm::exit::{gen_apriori, j_function, j_inverse, measure_mi};
use tbicm::turbo::{siso_decode, Boundary, Polynomials, SisoInput, TrellisDef, TurboCode};

fn trellis() -> TrellisDef {
    TrellisDef::new(Polynomials::default()).unwrap()
}

// ---------------------------------------------------------------------------
// encoder

#[test]
fn trellis_matches_register() {
    let t = trellis();
    for s in 0..8u8 {
        for d in 0..4u8 {
            let mut r = Register::from_index(s as usize);
            let (y, w) = r.clock(d >> 1, d & 1);
            assert_eq!(t.next_state(s, d) as usize, r.index(), "state {s} input {d}");
            assert_eq!(t.parity(s, d), (y << 1) | w, "state {s} input {d}");
        }
    }
}

#[test]
fn impulse_response_matches_register() {
    let code = TurboCode::with_defaults(48).unwrap();
    for pos in [0, 1, 17, 47] {
        for d in 1..4u8 {
            let mut couples = vec![0u8; 48];
            couples[pos] = d;
            let info: Vec<u8> = couples.iter().flat_map(|&c| [c >> 1, c & 1]).collect();
            let cw = code.encode(&info).unwrap();
            assert_eq!(cw.par1, register_encode(&couples), "pos {pos} d {d}");
            let inter = code.interleaver().interleave_couples(&couples);
            assert_eq!(cw.par2, register_encode(&inter), "pos {pos} d {d}");
        }
    }
}

#[test]
fn random_frames_match_register() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in [8, 20, 100, 384] {
        let code = TurboCode::with_defaults(k).unwrap();
        for _ in 0..5 {
            let info: Vec<u8> = (0..2 * k).map(|_| rng.random_range(0..2u8)).collect();
            let couples: Vec<u8> = info.chunks(2).map(|c| 2 * c[0] + c[1]).collect();
            let cw = code.encode(&info).unwrap();
            assert_eq!(cw.sys, info);
            assert_eq!(cw.par1, register_encode(&couples));
            assert_eq!(cw.par2, register_encode(&code.interleaver().interleave_couples(&couples)));
        }
    }
}

// ---------------------------------------------------------------------------
// SISO against path enumeration

#[test]
fn siso_equals_max_over_paths() {
    let t = trellis();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let f = random_toy_frame(&mut rng, 4);
        let sf = if i % 2 == 0 { 1.0 } else { 0.75 };
        let dev = siso_deviation(&t, &f, sf);
        assert!(dev <= 1e-9, "frame {i}: deviation {dev}");
    }
}

#[test]
fn siso_bit_extrinsics_exclude_own_systematic() {
    // The systematic bit extrinsic must not move with that bit's own channel LLR.
    let t = trellis();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_toy_frame(&mut rng, 6);
    let run = |sys: &[[f64; 2]]| {
        siso_decode(
            &t,
            &SisoInput {
                sys,
                par: &f.par,
                apriori: &f.apriori,
            },
            1.0,
            true,
            Boundary::Fixed {
                alpha0: f.alpha0,
                beta_end: f.beta_end,
            },
        )
        .unwrap()
        .bit_ext
        .unwrap()
    };
    let base = run(&f.sys);
    let mut moved = f.sys.clone();
    moved[2][0] += 0.37;
    let after = run(&moved);
    assert!((base[2][0] - after[2][0]).abs() < 1e-12);
}

// ---------------------------------------------------------------------------
// demapper against direct evaluation

#[test]
fn demapper_equals_direct_evaluation() {
    for (m, rot) in [(2, 29.0), (4, 16.8), (6, 8.6), (8, 3.6), (4, 0.0)] {
        let dev = demapper_deviation(m, rot, 400, m as u64);
        assert!(dev <= 1e-12, "M={m}: deviation {dev}");
    }
}

#[test]
fn max_log_stays_within_log_sum_exp_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for m in [2, 4, 6] {
        let table = ConstellationTable::new(m, 10.0).unwrap();
        let (syms, apr) = random_symbols(&mut rng, &table, 300);
        let (out, _) = demap_frame(&syms, &table, &apr, DemapCase::Recompute, 1, None).unwrap();
        // each side of the max-log difference is off by at most ln(2^(M-1))
        let bound = ((1usize << (m - 1)) as f64).ln() + 1e-9;
        for (q, s) in syms.iter().enumerate() {
            let exact = exact_demap(s.y, (s.w_i, s.w_q), table.points(), &apr[q * m..(q + 1) * m]);
            for (a, b) in out[q * m..(q + 1) * m].iter().zip(&exact) {
                assert!((a - b).abs() <= bound, "M={m}: {a} vs exact {b}");
                if b.abs() > 2.0 * bound {
                    assert_eq!(a.signum(), b.signum());
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// mutual information

#[test]
fn j_function_matches_quadrature() {
    for s in [0.5, 1.0, 2.0, 4.0] {
        let (fit, quad) = (j_function(s), j_quadrature(s));
        assert!((fit - quad).abs() < 1e-3, "sigma {s}: fit {fit} vs {quad}");
    }
}

#[test]
fn j_inverse_round_trips() {
    for i in 1..200 {
        let mi = i as f64 / 200.0;
        let s = j_inverse(mi).unwrap();
        assert!((j_function(s) - mi).abs() < 1e-4, "mi {mi}");
    }
}

#[test]
fn generated_apriori_carries_requested_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let bits: Vec<u8> = (0..200_000).map(|_| rng.random_range(0..2u8)).collect();
    for ia in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let l = gen_apriori(&bits, ia, &mut rng).unwrap();
        let mi = measure_mi(&l, &bits).unwrap();
        assert!((mi - ia).abs() < 0.01, "ia {ia}: measured {mi}");
    }
    let l = gen_apriori(&bits, 0.99, &mut rng).unwrap();
    let right = l.iter().zip(&bits).filter(|(l, &b)| (**l > 0.0) == (b == 1)).count();
    assert!(right as f64 / bits.len() as f64 > 0.99);
}
