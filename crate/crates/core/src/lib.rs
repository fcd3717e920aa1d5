pub mod amount;
pub mod bankvm;
pub mod chain;
pub mod clock;
pub mod codec;
pub mod primitives;
pub mod wallet;
pub mod kycflow;
pub mod node;
pub mod client;
pub mod bench;
pub mod cli;
