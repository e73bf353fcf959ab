//! Event-camera emulation from photon-cubes and the usual event representations.

mod emulator;
mod format;
mod representation;

pub use emulator::{
    brightness_encode, emulate_events, event_stack, AdaptiveThreshold, BrightnessEncoding,
    EventEmulator, EventParams, ReferenceUpdate,
};
pub(crate) use emulator::step_pixel;
pub use format::{read_events, write_events, PEVT_MAGIC, PEVT_VERSION};
pub use representation::{accumulate_frame, voxel_grid, Event, EventCube, EventStream, VoxelGrid};
