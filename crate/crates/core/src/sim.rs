//! End-to-end simulation: sampler, tokenizer, differential coder, planner,
//! link, receiver and interpolator wired into one causal frame loop.

use std::collections::HashMap;
use std::fs;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{InputSource, SimConfig};
use crate::diff_coder::{change_mask, pack, ChangeMask, OVERHEAD_BITS};
use crate::error::{Error, Result};
use crate::frame::{load_frames, Frame};
use crate::metrics::{self, FrameRecord, RunReport};
use crate::phy::{self, select_mcs, ChannelEstimate};
use crate::rate_planner::{allocate_symbols, deliverable_bits, max_feasible_k, GopPlan};
use crate::receiver::{expected_state, ReceiverState};
use crate::sampler::{neighbors, Interpolator, LinearBlend, Recovery, SamplingPlan};
use crate::synth::synth_video;
use crate::tokenizer::{tokenize_with_stats, zero_state, TokenSequence};

/// Frames generated for synthetic input when no count is configured.
pub const DEFAULT_SYNTHETIC_FRAMES: usize = 300;

/// Loads (or generates) the configured input, truncated to `frames`.
pub fn load_input(cfg: &SimConfig) -> Result<Vec<Frame>> {
    let mut frames = match &cfg.input {
        InputSource::File { path, descriptor } => load_frames(path, descriptor.as_deref())?,
        InputSource::Synthetic { kind, width, height, channels } => {
            synth_video(*kind, *width, *height, *channels, cfg.frames.unwrap_or(DEFAULT_SYNTHETIC_FRAMES))?
        }
    };
    if let Some(t) = cfg.frames {
        if t > frames.len() {
            return Err(Error::Config(format!("asked for {t} frames, input has {}", frames.len())));
        }
        frames.truncate(t);
    }
    if frames.is_empty() {
        return Err(Error::Empty("input sequence"));
    }
    if frames.iter().any(|f| !f.same_geometry(&frames[0])) {
        return Err(Error::Geometry("frame geometry changes within the stream".into()));
    }
    Ok(frames)
}

/// Runs the configured simulation, loading the input first.
pub fn run(cfg: &SimConfig) -> Result<RunReport> {
    let frames = load_input(cfg)?;
    run_frames(cfg, &frames)
}

/// Runs one simulation over in-memory frames.
pub fn run_frames(cfg: &SimConfig, frames: &[Frame]) -> Result<RunReport> {
    cfg.validate()?;
    let report = simulate(cfg, frames, &LinearBlend)?;
    if let Some(path) = &cfg.csv_out {
        fs::write(path, report.to_csv())?;
    }
    Ok(report)
}

/// Runs with a caller-supplied interpolator for non-key frames.
pub fn simulate(cfg: &SimConfig, frames: &[Frame], interp: &dyn Interpolator) -> Result<RunReport> {
    let first = frames.first().ok_or(Error::Empty("input sequence"))?;
    let (width, height, channels) = (first.width, first.height, first.channels);
    let tok = &cfg.tokenizer;
    let bits = tok.bits_per_token;
    let total = frames.len();
    let plan = SamplingPlan::new(total, cfg.stride, cfg.gop_size)?;

    let acm = cfg.load_acm()?;
    let mcs = select_mcs(ChannelEstimate { snr_db: cfg.snr_db }, &acm);
    let symbols = allocate_symbols(cfg.cbr, first.pixel_count(), total, plan.key_indices.len())?.symbols_per_key_frame;
    let budget = deliverable_bits(&mcs, symbols);
    // byte padding of the payload must stay inside the budget
    let planner_budget = budget / 8 * 8;

    // key frames are tokenized up front; each is independent of the loop state
    let tokenized: Vec<_> =
        plan.key_indices.par_iter().map(|&t| tokenize_with_stats(&frames[t - 1], tok)).collect::<Result<_>>()?;
    let saturated_coefficients = tokenized.iter().map(|t| t.saturated as u64).sum();
    let key_tokens: HashMap<usize, TokenSequence> =
        plan.key_indices.iter().copied().zip(tokenized.into_iter().map(|t| t.tokens)).collect();
    let len = key_tokens[&1].len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut receiver = ReceiverState::new(len);
    let mut records: Vec<FrameRecord> = Vec::with_capacity(total);
    let mut decoded_keys: HashMap<usize, Frame> = HashMap::new();
    let (mut fallbacks, mut untransmitted, mut desyncs) = (0u64, 0u64, 0u64);
    let mut symbol_counts = vec![0u64; total];
    let mut pending: Vec<usize> = Vec::new();

    let emit = |t: usize, frame: Frame, record: Option<FrameRecord>, records: &mut Vec<FrameRecord>| -> Result<()> {
        let psnr = metrics::psnr(&frames[t - 1], &frame)?;
        let rec = match record {
            Some(mut r) => {
                r.psnr = psnr;
                r
            }
            None => FrameRecord { t, is_key: false, k: None, bits_net: 0, bits_gross: 0, crc_ok: None, psnr },
        };
        records.push(rec);
        if let Some(dir) = &cfg.dump_dir {
            let ext = if frame.channels == 1 { "pgm" } else { "ppm" };
            frame.write_pnm(dir.join(format!("frame_{t:05}.{ext}")))?;
        }
        Ok(())
    };
    if let Some(dir) = &cfg.dump_dir {
        fs::create_dir_all(dir)?;
    }

    for g in 0..plan.gop_count() {
        let keys = plan.keys_in_gop(g);
        if keys.is_empty() {
            continue;
        }
        // masks against the previous key frame of the group; the first one
        // compares to the zero state, i.e. every position is new
        let mut masks: Vec<ChangeMask> = Vec::with_capacity(keys.len());
        let zero = zero_state(len);
        for (i, t) in keys.iter().enumerate() {
            let reference = if i == 0 { &zero } else { &key_tokens[&keys[i - 1]] };
            masks.push(change_mask(&key_tokens[t], reference)?);
        }
        let per_frame_k = masks
            .iter()
            .map(|m| max_feasible_k(m, bits, planner_budget, OVERHEAD_BITS as u64).map(|k| k.min(u16::MAX as usize)))
            .collect();
        let gop_plan = GopPlan::new(g, keys.clone(), per_frame_k);

        receiver.reset();
        let mut shadow = zero_state(len);

        for (i, &t) in keys.iter().enumerate() {
            let tokens = &key_tokens[&t];
            let mut record =
                FrameRecord { t, is_key: true, k: None, bits_net: 0, bits_gross: 0, crc_ok: None, psnr: 0.0 };
            match gop_plan.k_for(i, cfg.planning) {
                None => {
                    // budget cannot carry the framing overhead; nothing is sent
                    untransmitted += 1;
                    fallbacks += 1;
                    record.crc_ok = Some(false);
                }
                Some(k) => {
                    let packet = pack(tokens, &masks[i], k, bits)?;
                    debug_assert!(packet.gross_bits() as u64 <= budget);
                    let delivery = phy::transmit(
                        &packet.payload,
                        packet.gross_bits(),
                        &mcs,
                        symbols,
                        cfg.snr_db,
                        cfg.fec,
                        &mut rng,
                    )?;
                    let status = receiver.receive_frame(&delivery.payload, bits);
                    let ok = status == crate::receiver::ReceiveStatus::Updated;
                    if !ok {
                        fallbacks += 1;
                    }
                    if delivery.payload == packet.payload {
                        shadow = expected_state(&shadow, tokens, masks[i].bits(), k);
                    }
                    if receiver.tokens() != &shadow {
                        desyncs += 1;
                        shadow = receiver.tokens().clone();
                    }
                    symbol_counts[t - 1] = symbols;
                    record.k = Some(k);
                    record.bits_net = packet.source_bits() as u64;
                    record.bits_gross = packet.gross_bits() as u64;
                    record.crc_ok = Some(ok);
                }
            }

            let decoded = receiver.reconstruct(width, height, channels, tok)?;
            // non-key frames waiting on this anchor
            for nt in pending.drain(..) {
                let frame = match neighbors(nt, &plan, cfg.boundary)? {
                    Recovery::Interpolate { prev, next, alpha } => {
                        debug_assert_eq!(next, t);
                        interp.interpolate(&decoded_keys[&prev], &decoded, alpha)?
                    }
                    other => unreachable!("frame {nt} buffered with rule {other:?}"),
                };
                emit(nt, frame, None, &mut records)?;
            }
            decoded_keys.retain(|&k, _| k == t);
            decoded_keys.insert(t, decoded.clone());
            emit(t, decoded, Some(record), &mut records)?;

            // frames up to the next key either wait for it or copy at the tail
            let next_key = plan.key_indices.iter().copied().find(|&k| k > t);
            let tail_end = next_key.map_or(total, |k| k - 1);
            for nt in t + 1..=tail_end {
                match neighbors(nt, &plan, cfg.boundary)? {
                    Recovery::Interpolate { .. } => pending.push(nt),
                    // key frame 1 always exists, so only the trailing side can be
                    // missing; the last emitted frame is then the anchor itself
                    // and both boundary modes copy it
                    Recovery::Copy { from, .. } => {
                        emit(nt, decoded_keys[&from].clone(), None, &mut records)?;
                    }
                    Recovery::Key(_) => unreachable!(),
                }
            }
        }
    }
    debug_assert!(pending.is_empty());
    debug_assert_eq!(records.len(), total);

    Ok(RunReport {
        frames: records,
        cbr: metrics::cbr(&symbol_counts, first.pixel_count(), total),
        target_cbr: cfg.cbr,
        snr_db: cfg.snr_db,
        mcs,
        symbols_per_key_frame: symbols,
        budget_bits: budget,
        frame_fallbacks: fallbacks,
        untransmitted,
        desyncs,
        saturated_coefficients,
    })
}

/// Which configuration field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    Cbr,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Snr => "snr",
            Self::Cbr => "cbr",
        }
    }
}

/// One independent run per value, in parallel. Run `i` uses seed
/// `cfg.seed + i`, so a single-value sweep reproduces [`run`].
pub fn sweep(cfg: &SimConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<RunReport>> {
    if values.is_empty() {
        return Err(Error::Empty("sweep value list"));
    }
    let frames = load_input(cfg)?;
    values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = cfg.clone();
            c.csv_out = None;
            c.dump_dir = None;
            c.seed = cfg.seed.wrapping_add(i as u64);
            match axis {
                SweepAxis::Snr => c.snr_db = v,
                SweepAxis::Cbr => c.cbr = v,
            }
            run_frames(&c, &frames)
        })
        .collect()
}

/// Summary CSV, one row per sweep point.
pub fn sweep_csv(axis: SweepAxis, values: &[f64], reports: &[RunReport]) -> String {
    let mut s = String::from(metrics::SWEEP_HEADER);
    s.push('\n');
    for (v, r) in values.iter().zip(reports) {
        s.push_str(&metrics::sweep_row(axis.name(), *v, r));
        s.push('\n');
    }
    s
}
