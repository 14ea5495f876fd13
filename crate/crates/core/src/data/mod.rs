//! Categorical schemas, records, datasets and neighbouring pairs.
//!
//! Records hold category indices; the [`Schema`] is the only place where
//! indices are mapped back to strings. Datasets keep insertion order and may
//! contain duplicate rows.

mod dataset;
pub mod io;
mod neighbors;
mod schema;

pub use dataset::{Dataset, RawTable};
pub use neighbors::{make_neighbors, NeighborPair, NeighborVariant};
pub use schema::{encode_one_hot, infer_metadata, Attribute, Record, Schema};
