//! Declarative multi-language grammars and a first-order logic toolkit for
//! generating labeled natural language inference problems.

pub mod fol;
pub mod generator;
pub mod grammar;
pub mod logic;
pub mod pipeline;
