pub mod bdr;
pub mod csw;
pub mod detect;
pub mod impact;
pub mod ingest;
pub mod model;
pub mod store;
