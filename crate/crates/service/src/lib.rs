//! Stateful case sessions over the abductor engine, exposed as a JSON HTTP
//! API.

pub mod error;
pub mod http;
pub mod session;

pub use error::ServiceError;
pub use http::{router, serve};
pub use session::{Engine, SessionService};
