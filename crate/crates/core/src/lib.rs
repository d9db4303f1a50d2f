//! Compile quantum channels into CNOT + single-qubit circuits with
//! mid-circuit measurement, classical control and qubit reuse.

pub mod bounds;
pub mod channel;
pub mod circuit;
pub mod compiler;
pub mod error;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod par;
pub mod rewrite;
pub mod sim;
pub mod synth;
pub mod templates;

pub use error::{Error, Result};
