pub mod cli;
pub mod doc;
pub mod latex;
pub mod localize;
pub mod matcher;
pub mod metrics;
pub mod pipeline;
pub mod render;
pub mod validator;
