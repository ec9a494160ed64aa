//! Rate and quality metrics, and the CSV report format.
//!
//! Per-frame CSV columns, in order:
//!
//! ```text
//! t,is_key,K,bits_net,bits_gross,crc_ok,psnr
//! ```
//!
//! Non-key rows leave `K`, the bit counts and `crc_ok` empty. The file ends
//! with one `summary` row holding, in the same columns: key-frame count, sum
//! of K, total net bits, total gross bits, key frames that passed CRC, and
//! mean PSNR. PSNR of identical frames is written as `inf`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::phy::McsEntry;

/// Channel bandwidth ratio: average channel uses per source sample.
pub fn cbr(symbol_counts: &[u64], pixels_per_frame: usize, frames: usize) -> f64 {
    if frames == 0 || pixels_per_frame == 0 {
        return 0.0;
    }
    let total: u64 = symbol_counts.iter().sum();
    total as f64 / pixels_per_frame as f64 / frames as f64
}

pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    if !a.same_geometry(b) {
        return Err(Error::Geometry("MSE of frames with different geometry".into()));
    }
    let sum: u64 = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.samples.len().max(1) as f64)
}

/// `10 log10(255^2 / MSE)`; `+inf` for identical frames.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    let e = mse(a, b)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / e).log10())
}

/// One output frame of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    /// 1-based frame index.
    pub t: usize,
    pub is_key: bool,
    /// Prefix depth sent; `None` for non-key or untransmitted frames.
    pub k: Option<usize>,
    /// `K + b_val * C(K)`.
    pub bits_net: u64,
    /// Net bits plus framing prefix and CRC.
    pub bits_gross: u64,
    /// Key frames only; `Some(false)` means the receiver fell back.
    pub crc_ok: Option<bool>,
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames: Vec<FrameRecord>,
    pub cbr: f64,
    pub target_cbr: f64,
    pub snr_db: f64,
    pub mcs: McsEntry,
    pub symbols_per_key_frame: u64,
    /// Deliverable bits per key frame.
    pub budget_bits: u64,
    pub frame_fallbacks: u64,
    /// Key frames whose budget could not even carry the framing overhead.
    pub untransmitted: u64,
    /// Key frames where the receiver state disagreed with the transmitter's
    /// reference update.
    pub desyncs: u64,
    /// Coefficients clipped by the tokenizer over the run.
    pub saturated_coefficients: u64,
}

impl RunReport {
    pub fn psnr_per_frame(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.psnr).collect()
    }

    pub fn mean_psnr(&self) -> f64 {
        if self.frames.is_empty() {
            return f64::NAN;
        }
        self.frames.iter().map(|f| f.psnr).sum::<f64>() / self.frames.len() as f64
    }

    pub fn bits_sent_net(&self) -> u64 {
        self.frames.iter().map(|f| f.bits_net).sum()
    }

    pub fn bits_sent_gross(&self) -> u64 {
        self.frames.iter().map(|f| f.bits_gross).sum()
    }

    pub fn k_chosen_per_frame(&self) -> Vec<Option<usize>> {
        self.frames.iter().filter(|f| f.is_key).map(|f| f.k).collect()
    }

    pub fn key_frames(&self) -> usize {
        self.frames.iter().filter(|f| f.is_key).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,is_key,K,bits_net,bits_gross,crc_ok,psnr\n");
        for f in &self.frames {
            if f.is_key {
                let k = f.k.map(|k| k.to_string()).unwrap_or_default();
                let crc = f.crc_ok.map(|c| (c as u8).to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},1,{},{},{},{},{}", f.t, k, f.bits_net, f.bits_gross, crc, fmt_db(f.psnr));
            } else {
                let _ = writeln!(s, "{},0,,,,,{}", f.t, fmt_db(f.psnr));
            }
        }
        let k_sum: usize = self.frames.iter().filter_map(|f| f.k).sum();
        let ok = self.frames.iter().filter(|f| f.crc_ok == Some(true)).count();
        let _ = writeln!(
            s,
            "summary,{},{},{},{},{},{}",
            self.key_frames(),
            k_sum,
            self.bits_sent_net(),
            self.bits_sent_gross(),
            ok,
            fmt_db(self.mean_psnr())
        );
        s
    }
}

pub fn fmt_db(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

/// Header of the one-row-per-run sweep summary.
pub const SWEEP_HEADER: &str = "axis,value,snr_db,target_cbr,measured_cbr,code_rate,modulation,\
symbols_per_key,budget_bits,key_frames,mean_psnr,fallbacks,untransmitted,desyncs,bits_net,bits_gross";

pub fn sweep_row(axis: &str, value: f64, r: &RunReport) -> String {
    format!(
        "{axis},{value},{},{},{:.6e},{},{},{},{},{},{},{},{},{},{},{}",
        r.snr_db,
        r.target_cbr,
        r.cbr,
        r.mcs.code_rate,
        r.mcs.modulation,
        r.symbols_per_key_frame,
        r.budget_bits,
        r.key_frames(),
        fmt_db(r.mean_psnr()),
        r.frame_fallbacks,
        r.untransmitted,
        r.desyncs,
        r.bits_sent_net(),
        r.bits_sent_gross()
    )
}
