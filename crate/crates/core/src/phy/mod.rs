//! Physical layer: ACM table, Gray-mapped modulation, AWGN, FEC models.

mod acm;
mod channel;
mod fec;
mod modulation;

pub use acm::{select_mcs, AcmTable, ChannelEstimate, McsEntry, DEFAULT_BLER_TARGET};
pub use channel::{awgn, awgn_seeded, noise_variance};
pub use fec::{transmit, Delivery, FecScheme};
pub use modulation::{bits_to_bytes, bytes_to_bits, demodulate, modulate, Modulation, SymbolBlock};
