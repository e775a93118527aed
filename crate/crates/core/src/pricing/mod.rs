//! Congestion pricing: toll schedules, the four schemes that produce them,
//! and the feedback loop that settles the advanced ones.

mod offline;
mod outer;
mod schedule;
mod schemes;
mod text;

pub use offline::*;
pub use outer::*;
pub use schedule::*;
pub use schemes::*;
