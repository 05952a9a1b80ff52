pub mod analysis;
pub mod cli;
pub mod compose;
pub mod expr;
pub mod graph;
pub mod io;
pub mod library;
pub mod sim;
