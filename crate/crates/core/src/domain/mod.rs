//! Value types shared by every stage of the pipeline.

mod bbox;
mod config;
mod grid;
mod image;
mod rng;
mod schedule;

pub use bbox::{format_boxes, parse_boxes, read_boxes, union_mask, BoundingBox};
pub use config::{CaptureConfig, ChannelMode, MaskKind, PatternMode};
pub use grid::BlockGrid;
pub use image::Image;
pub use rng::{Purpose, RngStream};
pub use schedule::FeedbackSchedule;
