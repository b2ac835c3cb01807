//! µXPath: alternation-free fixpoint queries over sibling trees, evaluated
//! and reasoned about with two-way weak alternating tree automata.

pub mod acceptance;
pub mod bench;
pub mod direct;
pub mod emptiness;
pub mod nsta;
pub mod query;
pub mod random;
pub mod reasoning;
pub mod rxpath;
pub mod tree;
pub mod twata;
