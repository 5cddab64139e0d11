//! Phase-space grids, sampled symbols and exact polynomial symbols.

mod grid;
pub mod io;
mod poly;

pub use grid::{symbol_norms, GridSymbol, PhaseGrid, PhysContext, SymbolNorms, Window};
pub use poly::{sample_poly, PolySymbol};
