//! Opinion-insight mining over generated text.

pub mod classify;
pub mod corpus;
pub mod genbackend;
pub mod insight;
pub mod seeding;
pub mod sentiment;
pub mod stats;
pub mod text;
