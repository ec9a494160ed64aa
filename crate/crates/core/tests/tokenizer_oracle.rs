use std::f64::consts::PI;

use proptest::prelude::*;
use tokcast::tokenizer::{
    detokenize, detokenize_unclamped, tokenize, tokenize_with_stats, zero_state, TokenizerConfig, ZERO_FLAG,
};
use tokcast::Frame;

// first 16 zigzag positions of an 8x8 block, (row, col), written out by hand
const ZIGZAG16: [(usize, usize); 16] = [
    (0, 0),
    (0, 1),
    (1, 0),
    (2, 0),
    (1, 1),
    (0, 2),
    (0, 3),
    (1, 2),
    (2, 1),
    (3, 0),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
    (0, 5),
];

fn c(k: usize) -> f64 {
    if k == 0 {
        1.0 / 2f64.sqrt()
    } else {
        1.0
    }
}

/// Textbook 8x8 DCT basis value for frequency (u, v) at pixel (y, x).
fn phi(u: usize, v: usize, y: usize, x: usize) -> f64 {
    0.25 * c(u)
        * c(v)
        * ((2 * y + 1) as f64 * u as f64 * PI / 16.0).cos()
        * ((2 * x + 1) as f64 * v as f64 * PI / 16.0).cos()
}

struct Oracle {
    codes: Vec<u32>,
    /// Some coefficient sits on a rounding tie, where either neighbour is valid.
    tie: Vec<bool>,
    coeffs: Vec<f64>,
    recon_quant: Vec<f64>,
    recon_exact: Vec<f64>,
}

/// Direct transform-quantize-inverse of one 8x8 block, keeping 16 subbands.
fn oracle_block(px: &[u8], steps: &[f64]) -> Oracle {
    let mut codes = Vec::new();
    let mut tie = Vec::new();
    let mut coeffs = Vec::new();
    let mut deq = Vec::new();
    for (k, &(u, v)) in ZIGZAG16.iter().enumerate() {
        let mut f = 0.0;
        for y in 0..8 {
            for x in 0..8 {
                f += phi(u, v, y, x) * px[y * 8 + x] as f64;
            }
        }
        let ratio = f / steps[k];
        tie.push(((ratio - ratio.floor()) - 0.5).abs() < 1e-9);
        let q = ratio.round().clamp(-2047.0, 2047.0);
        codes.push((q as i64 + 2048) as u32);
        coeffs.push(f);
        deq.push(q * steps[k]);
    }
    let mut recon_quant = vec![0.0; 64];
    let mut recon_exact = vec![0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            for (k, &(u, v)) in ZIGZAG16.iter().enumerate() {
                recon_quant[y * 8 + x] += deq[k] * phi(u, v, y, x);
                recon_exact[y * 8 + x] += coeffs[k] * phi(u, v, y, x);
            }
        }
    }
    Oracle { codes, tie, coeffs, recon_quant, recon_exact }
}

fn block_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(any::<u8>(), 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_direct_oracle(px in block_strategy()) {
        let cfg = TokenizerConfig::default();
        let frame = Frame::new(8, 8, 1, px.clone()).unwrap();
        let tokens = tokenize(&frame, &cfg).unwrap();
        let o = oracle_block(&px, &cfg.quant_steps);
        for k in 0..16 {
            let d = (tokens.0[k] as i64 - o.codes[k] as i64).abs();
            prop_assert!(d == 0 || (o.tie[k] && d == 1), "subband {k}: {} vs {}", tokens.0[k], o.codes[k]);
        }
        prop_assume!(tokens.0 == o.codes);

        let real = detokenize_unclamped(&tokens, 8, 8, 1, &cfg).unwrap();
        let out = detokenize(&tokens, 8, 8, 1, &cfg).unwrap();
        for ((r, &q), &s) in real.iter().zip(&o.recon_quant).zip(&out.samples) {
            prop_assert!((r - q).abs() < 1e-9);
            prop_assert!((s as f64 - q.round().clamp(0.0, 255.0)).abs() <= 1.0);
        }
    }

    #[test]
    fn per_pixel_error_within_quantizer_bound(px in block_strategy()) {
        let cfg = TokenizerConfig::default();
        let frame = Frame::new(8, 8, 1, px.clone()).unwrap();
        let out = detokenize(&tokenize(&frame, &cfg).unwrap(), 8, 8, 1, &cfg).unwrap();
        let o = oracle_block(&px, &cfg.quant_steps);
        for y in 0..8 {
            for x in 0..8 {
                let bound: f64 = ZIGZAG16
                    .iter()
                    .enumerate()
                    .map(|(k, &(u, v))| cfg.quant_steps[k] / 2.0 * phi(u, v, y, x).abs())
                    .sum::<f64>() + 0.5;
                let reference = o.recon_exact[y * 8 + x].clamp(0.0, 255.0);
                let err = (out.samples[y * 8 + x] as f64 - reference).abs();
                prop_assert!(err <= bound + 1e-9, "pixel ({y},{x}) err {err} bound {bound}");
            }
        }
    }

    #[test]
    fn coefficient_error_at_most_half_step(px in block_strategy()) {
        let cfg = TokenizerConfig::default();
        let frame = Frame::new(8, 8, 1, px.clone()).unwrap();
        let tokens = tokenize(&frame, &cfg).unwrap();
        let o = oracle_block(&px, &cfg.quant_steps);
        for k in 0..16 {
            let deq = (tokens.0[k] as f64 - 2048.0) * cfg.quant_steps[k];
            prop_assert!((deq - o.coeffs[k]).abs() <= cfg.quant_steps[k] / 2.0 + 1e-9);
        }
    }

    #[test]
    fn vocabulary_closure(
        bits in 2u32..=12,
        seed in any::<u64>(),
        channels in prop::sample::select(vec![1usize, 3]),
    ) {
        let cfg = TokenizerConfig::with_geometry(8, 16, bits);
        let mut s = seed;
        let samples = (0..16 * 16 * channels)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            })
            .collect();
        let frame = Frame::new(16, 16, channels, samples).unwrap();
        let t = tokenize_with_stats(&frame, &cfg).unwrap();
        prop_assert!(t.tokens.0.iter().all(|&c| c != ZERO_FLAG && c < (1 << bits)));
        prop_assert_eq!(&t.tokens, &tokenize(&frame, &cfg).unwrap());
    }

    #[test]
    fn prefix_mse_non_increasing_small(px in prop::collection::vec(any::<u8>(), 16 * 16 * 3)) {
        let cfg = TokenizerConfig::default();
        let frame = Frame::new(16, 16, 3, px).unwrap();
        let tokens = tokenize(&frame, &cfg).unwrap();
        let mse = |l: usize| -> f64 {
            let r = detokenize_unclamped(&tokens.prefix(l), 16, 16, 3, &cfg).unwrap();
            r.iter().zip(&frame.samples).map(|(a, &b)| (a - b as f64).powi(2)).sum::<f64>()
        };
        let mut prev = mse(0);
        for l in 1..=tokens.len() {
            let cur = mse(l);
            prop_assert!(cur <= prev + 1e-6 * prev.max(1.0), "l={l}: {cur} > {prev}");
            prev = cur;
        }
    }
}

#[test]
fn constant_frame_example() {
    let cfg = TokenizerConfig::default();
    let t = tokenize(&Frame::filled(8, 8, 1, 128), &cfg).unwrap();
    // DC = 8 * 128 = 1024 = 64 steps of 16
    assert_eq!(t.0[0], 2048 + 64);
    assert!(t.0[1..].iter().all(|&c| c == 2048));
    assert_eq!(detokenize(&t, 8, 8, 1, &cfg).unwrap(), Frame::filled(8, 8, 1, 128));
}

#[test]
fn zero_state_composes_with_detokenize() {
    let cfg = TokenizerConfig::default();
    for (w, h, ch) in [(8, 8, 1), (32, 16, 3)] {
        let l = cfg.token_len(w, h, ch);
        assert_eq!(detokenize(&zero_state(l), w, h, ch, &cfg).unwrap(), Frame::filled(w, h, ch, 0));
    }
}
