pub mod error;
pub mod fields;
pub mod flowmap;
pub mod geometry;
pub mod io_util;
pub mod reconstruct;
pub mod seeding;
pub mod surrogate;
