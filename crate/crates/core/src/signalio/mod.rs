//! Core containers and their on-disk formats.

mod csv;
mod signal;
mod video;
mod vtf;

pub use self::csv::{read_signal_csv, signal_from_csv_str, signal_to_csv_string, write_signal_csv};
pub use signal::{resample, Signal};
pub use video::{MaskSequence, VideoTensor};
pub use vtf::{
    read_mask_sequence, read_video_tensor, video_from_bytes, video_to_bytes, write_mask_sequence,
    write_video_tensor,
};
