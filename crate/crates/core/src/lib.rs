pub mod audits;
pub mod authority;
pub mod codec;
pub mod crypto;
pub mod flowopt;
pub mod harness;
pub mod netmodel;
pub mod proofsys;
pub mod provider;
