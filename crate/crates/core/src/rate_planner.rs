//! Channel-uses to bits, and the budget-feasible top-K search.

use std::fmt;
use std::str::FromStr;

use crate::diff_coder::{frame_cost, ChangeMask};
use crate::error::{Error, Result};
use crate::phy::McsEntry;

/// Channel uses granted to each transmitted key frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolBudget {
    pub symbols_per_key_frame: u64,
}

/// Spreads the symbol budget implied by a target CBR uniformly over the key
/// frames: `floor(cbr * pixels * frames / key_count)`.
pub fn allocate_symbols(cbr: f64, pixels: usize, frames: usize, key_count: usize) -> Result<SymbolBudget> {
    if key_count == 0 {
        return Err(Error::Config("no key frames to allocate symbols to".into()));
    }
    if !(cbr.is_finite() && cbr >= 0.0) {
        return Err(Error::Config(format!("CBR must be finite and non-negative, got {cbr}")));
    }
    let total = cbr * pixels as f64 * frames as f64;
    Ok(SymbolBudget { symbols_per_key_frame: (total / key_count as f64).floor() as u64 })
}

/// `floor(rate * symbols * log2(M))`.
pub fn deliverable_bits(mcs: &McsEntry, symbols: u64) -> u64 {
    let raw = mcs.code_rate * symbols as f64 * mcs.bits_per_symbol() as f64;
    // guard against products such as 0.54 * 1000 * 4 landing a hair below an integer
    (raw + 1e-9).floor() as u64
}

/// Largest `K` in `0..=L` with `K + b_val * C(K) + overhead <= budget`.
///
/// Returns `None` when even `K = 0` does not fit, i.e. `overhead > budget`.
/// The cost is monotone in `K`, so a binary search over `0..=L` suffices.
pub fn max_feasible_k(mask: &ChangeMask, bits_per_token: u32, budget: u64, overhead: u64) -> Option<usize> {
    let available = budget.checked_sub(overhead)?;
    let cost = |k: usize| k as u64 + bits_per_token as u64 * mask.changed_in_prefix(k) as u64;
    // invariant: cost(lo) <= available; cost(hi) > available or hi == L + 1
    let (mut lo, mut hi) = (0usize, mask.len() + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if cost(mid) <= available {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Stabilized prefix depth for a group: the smallest per-frame `K*`.
pub fn plan_gop(per_frame_k: &[usize]) -> Result<usize> {
    per_frame_k.iter().copied().min().ok_or(Error::Empty("GOP"))
}

/// Whether K is chosen per frame or held at the group minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlanningMode {
    #[default]
    PerFrame,
    Gop,
}

impl FromStr for PlanningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-frame" | "per_frame" | "frame" => Ok(Self::PerFrame),
            "gop" => Ok(Self::Gop),
            _ => Err(Error::Config(format!("unknown planning mode {s:?}"))),
        }
    }
}

impl fmt::Display for PlanningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerFrame => "per-frame",
            Self::Gop => "gop",
        })
    }
}

/// K decisions for one group of pictures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GopPlan {
    pub gop_index: usize,
    /// 1-based frame indices of the group's key frames.
    pub key_indices: Vec<usize>,
    /// `K*` per key frame; `None` where the overhead alone exceeds the budget.
    pub per_frame_k: Vec<Option<usize>>,
    /// Group minimum over the feasible frames.
    pub stabilized_k: Option<usize>,
}

impl GopPlan {
    pub fn new(gop_index: usize, key_indices: Vec<usize>, per_frame_k: Vec<Option<usize>>) -> Self {
        let feasible: Vec<usize> = per_frame_k.iter().flatten().copied().collect();
        let stabilized_k = plan_gop(&feasible).ok();
        Self { gop_index, key_indices, per_frame_k, stabilized_k }
    }

    /// K actually used for the `i`-th key frame under `mode`.
    pub fn k_for(&self, i: usize, mode: PlanningMode) -> Option<usize> {
        let own = self.per_frame_k[i]?;
        Some(match mode {
            PlanningMode::PerFrame => own,
            PlanningMode::Gop => self.stabilized_k.unwrap_or(own).min(own),
        })
    }
}

/// Checks `K + b_val * C(K) + overhead <= budget`.
pub fn is_feasible(k: usize, mask: &ChangeMask, bits_per_token: u32, budget: u64, overhead: u64) -> Result<bool> {
    Ok(frame_cost(k, mask, bits_per_token)? + overhead <= budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Modulation;

    fn mcs(rate: f64, m: Modulation) -> McsEntry {
        McsEntry { snr_threshold_db: 0.0, code_rate: rate, modulation: m }
    }

    #[test]
    fn symbol_allocation() {
        assert_eq!(allocate_symbols(1.0, 100, 10, 10).unwrap().symbols_per_key_frame, 100);
        assert_eq!(allocate_symbols(4e-4, 256 * 256 * 3, 300, 75).unwrap().symbols_per_key_frame, 314);
        assert!(allocate_symbols(1.0, 100, 10, 0).is_err());
        assert!(allocate_symbols(-1.0, 100, 10, 1).is_err());
    }

    #[test]
    fn deliverable_bits_examples() {
        assert_eq!(deliverable_bits(&mcs(0.540, Modulation::Qam16), 1000), 2160);
        assert_eq!(deliverable_bits(&mcs(0.245, Modulation::Qpsk), 0), 0);
        assert_eq!(deliverable_bits(&mcs(0.301, Modulation::Qpsk), 314), 189);
    }

    #[test]
    fn k_star_examples() {
        let mask = ChangeMask::from_bits(vec![true, true, false, true]);
        // costs 13, 26, 27, 40
        assert_eq!(max_feasible_k(&mask, 12, 27, 0), Some(3));
        assert_eq!(max_feasible_k(&mask, 12, 26, 0), Some(2));
        assert_eq!(max_feasible_k(&mask, 12, 12, 0), Some(0));
        assert_eq!(max_feasible_k(&mask, 12, 1000, 0), Some(4));
        assert_eq!(max_feasible_k(&mask, 12, 31, 32), None);
        assert_eq!(max_feasible_k(&mask, 12, 32, 32), Some(0));
        assert_eq!(max_feasible_k(&ChangeMask::from_bits(vec![]), 12, 5, 0), Some(0));
    }

    #[test]
    fn gop_min() {
        assert_eq!(plan_gop(&[7, 7, 7]).unwrap(), 7);
        assert_eq!(plan_gop(&[12, 3, 9]).unwrap(), 3);
        assert!(plan_gop(&[]).is_err());
    }

    #[test]
    fn gop_plan_skips_infeasible() {
        let plan = GopPlan::new(0, vec![1, 5, 9], vec![Some(12), None, Some(9)]);
        assert_eq!(plan.stabilized_k, Some(9));
        assert_eq!(plan.k_for(0, PlanningMode::Gop), Some(9));
        assert_eq!(plan.k_for(0, PlanningMode::PerFrame), Some(12));
        assert_eq!(plan.k_for(1, PlanningMode::Gop), None);
    }

    #[test]
    fn mode_parse() {
        assert_eq!("gop".parse::<PlanningMode>().unwrap(), PlanningMode::Gop);
        assert_eq!("per-frame".parse::<PlanningMode>().unwrap(), PlanningMode::PerFrame);
        assert!("x".parse::<PlanningMode>().is_err());
    }
}
