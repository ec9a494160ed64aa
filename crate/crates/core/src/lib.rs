//! Token-domain progressive video transmission.
//!
//! Key frames picked by a stride sampler are turned into importance-ordered
//! token strings, differenced against the previous key frame with a binary
//! change mask, cut to the largest top-K prefix the channel budget allows,
//! packed as `header || body`, and sent over a simulated AWGN link with
//! adaptive coding and modulation. The receiver keeps a running token state,
//! applies masked updates (falling back to no update on CRC failure), decodes
//! every prefix-valid state, and interpolates the frames in between.

pub mod config;
pub mod diff_coder;
pub mod error;
pub mod frame;
pub mod metrics;
pub mod phy;
pub mod rate_planner;
pub mod receiver;
pub mod sampler;
pub mod sim;
pub mod synth;
pub mod tokenizer;

pub use config::{InputSource, SimConfig};
pub use diff_coder::{change_mask, frame_cost, pack, unpack, ChangeMask, FramePacket, Unpacked};
pub use error::{Error, Result};
pub use frame::Frame;
pub use metrics::RunReport;
pub use receiver::{ReceiveStatus, ReceiverState};
pub use sim::{run, run_frames, sweep, SweepAxis};
pub use tokenizer::{detokenize, tokenize, zero_state, TokenSequence, TokenizerConfig, ZERO_FLAG};
