//! Exact Möbius–Lie geometry of cycles in the plane.

pub mod cycle;
pub mod figure;
pub mod render;
pub mod symkern;
